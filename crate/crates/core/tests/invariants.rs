// SPDX-License-Identifier: Apache-2.0

use dressed_lasing::analysis::{emission_spectrum_from, reduced_steady_state, EmissionConfig};
use dressed_lasing::cumulant::{DrivenMoments, DrivenSystem};
use dressed_lasing::dynamics::{integrate, IntegrationConfig, SteadyConfig};
use dressed_lasing::exact::{build_generator, DensityState};
use dressed_lasing::model::{op_index, Layout, Level, MomentState};
use dressed_lasing::units::{khz, mhz};
use dressed_lasing::{DriveConfig, PhysicalParams};
use proptest::prelude::*;

fn populations(m: &DrivenMoments) -> f64 {
    [Level::G, Level::B, Level::D]
        .iter()
        .map(|&l| m.s[op_index(l, l)].re)
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn driven_trajectories_conserve_population(
        n_atoms in 1u64..100_000,
        drive in 0.1f64..50.0,
        delta_mhz in 0.0f64..3.0,
        eta_khz in 0.0f64..30.0,
    ) {
        let p = PhysicalParams::new(n_atoms, khz(7.5), khz(150.0), khz(7.5))
            .with_zeeman(mhz(delta_mhz))
            .with_pump(khz(eta_khz))
            .with_drive(DriveConfig::constant(drive));
        let sys = DrivenSystem::new(&p).unwrap();
        let t_end = 2.0 / p.kappa();
        let cfg = IntegrationConfig::default().with_t_end(t_end).with_stride(t_end / 10.0);
        let traj = integrate(|t, y, dy| sys.rhs(t, y, dy), 0.0, &MomentState::ground(Layout::Driven102).values, &cfg).unwrap();
        for y in &traj.states {
            let m = DrivenMoments::unpack(y);
            prop_assert!((populations(&m) - 1.0).abs() < 1e-9);
            prop_assert!(m.n >= -1e-9);
        }
    }

    #[test]
    fn exact_evolution_stays_a_density_matrix(
        n_atoms in 1usize..=2,
        drive in 0.1f64..20.0,
        delta_mhz in 0.0f64..1.0,
        eta_khz in 0.0f64..15.0,
    ) {
        let p = PhysicalParams::new(n_atoms as u64, khz(7.5), khz(150.0), khz(7.5))
            .with_zeeman(mhz(delta_mhz))
            .with_pump(khz(eta_khz))
            .with_drive(DriveConfig::constant(drive));
        let sys = build_generator(&p, n_atoms, 4).unwrap();
        let t_end = 1.0 / p.kappa();
        let cfg = IntegrationConfig::default().with_t_end(t_end).with_stride(t_end / 4.0);
        for (_, d) in sys.evolve(&DensityState::ground(sys.space()), &cfg).unwrap() {
            prop_assert!((d.trace().re - 1.0).abs() < 1e-9);
            let back = d.clone().symmetrised();
            prop_assert!((&back.rho - &d.rho).iter().all(|z| z.norm() < 1e-10));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn emission_spectra_are_nonnegative(
        eta_over_gamma in 0.1f64..10.0,
        delta_mhz in 0.0f64..0.3,
        n_atoms in 1_000u64..50_000,
    ) {
        let gamma = khz(7.5);
        let p = PhysicalParams::new(n_atoms, khz(7.5), khz(150.0), gamma)
            .with_zeeman(mhz(delta_mhz))
            .with_pump(eta_over_gamma * gamma);
        let (m, _) = reduced_steady_state(&p, None, &SteadyConfig::default()).unwrap();
        prop_assert!((m.gg + m.bb + m.dd - 1.0).abs() < 1e-9);
        prop_assert!(m.n >= 0.0);
        let grid: Vec<f64> = (0..101).map(|k| khz(-500.0 + 10.0 * k as f64)).collect();
        let sr = emission_spectrum_from(&p, &m, &grid, &EmissionConfig::default()).unwrap();
        prop_assert!(sr.points.iter().all(|q| q.intensity >= -1e-9));
    }
}
