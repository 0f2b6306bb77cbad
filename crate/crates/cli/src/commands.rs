// SPDX-License-Identifier: Apache-2.0

//! Subcommand implementations.

use std::path::PathBuf;
use std::time::Instant;

use dressed_lasing::analysis::{
    emission_spectrum_from, fwhm_with, linewidth::implicit_from, linewidth::semianalytic_from, pump_sweep,
    reduced_steady_state, transmission_spectrum, EmissionConfig, FwhmMode, SpectrumResult, SweepConfig,
    TransmissionConfig,
};
use dressed_lasing::dressed::{dressed_levels, transmission_peaks};
use dressed_lasing::dynamics::SteadyConfig;
use dressed_lasing::oracle::{oracle_suite, OracleConfig};
use dressed_lasing::units::to_hz;
use dressed_lasing::{DriveShape, Error};

use crate::config::{snapshot, FreqGrid, RunConfig};
use crate::output::{num, opt, Run, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Dressed,
    Transmit,
    Lase,
    Spectrum,
    SweepPump,
    Dicke,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Dressed => "dressed",
            Command::Transmit => "transmit",
            Command::Lase => "lase",
            Command::Spectrum => "spectrum",
            Command::SweepPump => "sweep-pump",
            Command::Dicke => "dicke",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Flags {
    pub out: PathBuf,
    pub peaks: bool,
    pub normalize: bool,
    pub log: bool,
    pub fgrid: Option<FreqGrid>,
    pub jobs: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Solver(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Solver(_) | CliError::Io(_) => 1,
        }
    }
}

/// Maps a library error at a parameter point to an exit category.
fn solver(at: &str, e: Error) -> CliError {
    match e {
        Error::InvalidParams(m) => CliError::Usage(format!("{at}: {m}")),
        other => CliError::Solver(format!("{at}: {other}")),
    }
}

pub fn run_command(cmd: Command, cfg: &RunConfig, flags: &Flags) -> Result<PathBuf, CliError> {
    let mut run = Run::new(flags.out.clone(), cmd.name(), snapshot(cfg), cfg.given.clone())?;
    run.flag("peaks", flags.peaks);
    run.flag("normalize", flags.normalize);
    run.flag("log", flags.log);
    if let Some(g) = flags.fgrid {
        run.flag("fgrid", g);
    }
    if let Some(j) = flags.jobs {
        run.flag("jobs", j);
    }
    let res = match cmd {
        Command::Dressed => dressed(cfg, flags, &mut run),
        Command::Transmit => transmit(cfg, flags, &mut run),
        Command::Lase => lase(cfg, &mut run),
        Command::Spectrum => spectrum(cfg, flags, &mut run),
        Command::SweepPump => sweep(cfg, flags, &mut run, false),
        Command::Dicke => sweep(cfg, flags, &mut run, true),
        Command::Verify => verify(&mut run),
    };
    if let Err(e) = &res {
        run.diag("error", e.to_string());
    }
    // The manifest is written for failed runs too.
    let manifest = run.finish()?;
    res.map(|_| manifest)
}

fn dressed(cfg: &RunConfig, flags: &Flags, run: &mut Run) -> Result<(), CliError> {
    let p = &cfg.params;
    if flags.peaks {
        let mut t = Table::new(&["offset_hz", "weight", "group"]);
        for pk in transmission_peaks(p, cfg.max_n) {
            t.push(vec![num(to_hz(pk.frequency_offset)), opt(pk.weight), pk.group.to_string()]);
        }
        run.write_table("dressed_peaks.csv", &t)?;
        return Ok(());
    }
    let mut t = Table::new(&[
        "branch", "n", "shift_hz", "amp_D_re", "amp_D_im", "amp_B_re", "amp_B_im", "amp_G_re", "amp_G_im",
    ]);
    for n in 0..=cfg.max_n {
        for l in dressed_levels(p, n) {
            t.push(vec![
                l.branch.label().into(),
                n.to_string(),
                num(to_hz(l.shift)),
                num(l.amp_d.re),
                num(l.amp_d.im),
                num(l.amp_b.re),
                num(l.amp_b.im),
                num(l.amp_g.re),
                num(l.amp_g.im),
            ]);
        }
    }
    run.write_table("dressed_levels.csv", &t)?;
    Ok(())
}

fn spectrum_table(sr: &SpectrumResult, log: bool, phase: bool) -> Table {
    let mut cols = vec!["offset_hz", "intensity"];
    if phase {
        cols.push("phase_rad");
    }
    if log {
        cols.push("log10_intensity");
    }
    let mut t = Table::new(&cols);
    for q in &sr.points {
        let mut row = vec![num(to_hz(q.offset)), num(q.intensity)];
        if phase {
            row.push(opt(q.phase));
        }
        if log {
            row.push(num(q.intensity.log10()));
        }
        t.push(row);
    }
    t
}

fn peak_table(sr: &SpectrumResult) -> Table {
    let mut t = Table::new(&["offset_hz", "height"]);
    for pk in &sr.peaks {
        t.push(vec![num(to_hz(pk.offset)), num(pk.height)]);
    }
    t
}

fn transmit(cfg: &RunConfig, flags: &Flags, run: &mut Run) -> Result<(), CliError> {
    let p = &cfg.params;
    let drive = match p.drive {
        Some(d) if d.shape == DriveShape::Gaussian => d,
        _ => return Err(CliError::Usage("transmit needs a Gaussian drive (drive_amp_sqrt_khz, drive_sigma_ns)".into())),
    };
    let t0 = Instant::now();
    let sr = transmission_spectrum(p, drive, &TransmissionConfig::default()).map_err(|e| solver("transmission", e))?;
    run.time("transmission", t0);
    let sr = if flags.normalize { sr.normalized() } else { sr };
    run.diag("points", sr.points.len());
    run.diag("peaks", sr.peaks.len());
    run.write_table("transmission.csv", &spectrum_table(&sr, flags.log, true))?;
    run.write_table("transmission_peaks.csv", &peak_table(&sr))?;
    Ok(())
}

fn lase(cfg: &RunConfig, run: &mut Run) -> Result<(), CliError> {
    let p = &cfg.params;
    let t0 = Instant::now();
    let (m, ss) = reduced_steady_state(p, None, &SteadyConfig::default()).map_err(|e| solver("steady state", e))?;
    run.time("steady_state", t0);
    run.diag("residual", ss.residual);
    run.diag("newton_iterations", ss.newton_iterations);
    run.diag("accepted_steps", ss.stats.accepted);
    let semi = semianalytic_from(p, &m);
    let imp = implicit_from(p, &m);
    if let Err(e) = &semi {
        run.diag("linewidth_semianalytic_error", e.to_string());
    }
    if let Err(e) = &imp {
        run.diag("linewidth_implicit_error", e.to_string());
    }
    let mut t = Table::new(&[
        "eta_hz",
        "photon_number",
        "bb",
        "dd",
        "gg",
        "im_db",
        "linewidth_semianalytic_hz",
        "linewidth_implicit_hz",
        "residual",
    ]);
    t.push(vec![
        num(to_hz(p.lambda_plus())),
        num(m.n),
        num(m.bb),
        num(m.dd),
        num(m.gg),
        num(m.db().im),
        opt(semi.ok().map(to_hz)),
        opt(imp.ok().map(|g| to_hz(g.gamma))),
        num(ss.residual),
    ]);
    run.write_table("lase.csv", &t)?;
    Ok(())
}

fn spectrum(cfg: &RunConfig, flags: &Flags, run: &mut Run) -> Result<(), CliError> {
    let p = &cfg.params;
    let grid = flags.fgrid.unwrap_or(cfg.fgrid);
    let t0 = Instant::now();
    let (m, ss) = reduced_steady_state(p, None, &SteadyConfig::default()).map_err(|e| solver("steady state", e))?;
    run.time("steady_state", t0);
    run.diag("residual", ss.residual);
    let ecfg = EmissionConfig {
        normalize: flags.normalize,
        ..EmissionConfig::default()
    };
    let t1 = Instant::now();
    let sr = emission_spectrum_from(p, &m, &grid.offsets(), &ecfg).map_err(|e| solver("emission spectrum", e))?;
    run.time("spectrum", t1);
    run.diag("points", sr.points.len());
    match fwhm_with(&sr, FwhmMode::Auto) {
        Ok(w) => run.diag("fwhm_hz", to_hz(w)),
        Err(e) => run.diag("fwhm_error", e.to_string()),
    }
    run.write_table("spectrum.csv", &spectrum_table(&sr, flags.log, false))?;
    run.write_table("spectrum_peaks.csv", &peak_table(&sr))?;
    Ok(())
}

fn sweep(cfg: &RunConfig, flags: &Flags, run: &mut Run, dicke_only: bool) -> Result<(), CliError> {
    let p = &cfg.params;
    let gamma = p.big_gamma_plus();
    let etas: Vec<f64> = cfg.eta_over_gamma_grid.iter().map(|r| r * gamma).collect();
    let scfg = SweepConfig {
        spectrum_grid: if dicke_only { None } else { flags.fgrid.map(|g| g.offsets()) },
        ..SweepConfig::default()
    };
    let t0 = Instant::now();
    let rows = pump_sweep(p, &etas, &scfg).map_err(|e| solver("pump sweep", e))?;
    run.time("sweep", t0);
    let failed = rows.iter().filter(|r| !r.errors.is_empty()).count();
    run.diag("rows_with_errors", failed);
    if dicke_only {
        let mut t = Table::new(&["eta_over_gamma", "j_b", "m_b", "j_d", "m_d"]);
        for (r, ratio) in rows.iter().zip(&cfg.eta_over_gamma_grid) {
            let d = r.dicke;
            t.push(vec![
                num(*ratio),
                opt(d.map(|d| d.j_b)),
                opt(d.map(|d| d.m_b)),
                opt(d.map(|d| d.j_d)),
                opt(d.map(|d| d.m_d)),
            ]);
        }
        run.write_table("dicke.csv", &t)?;
        return Ok(());
    }
    let mut t = Table::new(&[
        "eta_over_gamma",
        "eta_hz",
        "photon_number",
        "bb",
        "dd",
        "gg",
        "im_db",
        "linewidth_semianalytic_hz",
        "linewidth_implicit_hz",
        "fwhm_hz",
        "j_b",
        "m_b",
        "j_d",
        "m_d",
        "residual",
        "errors",
    ]);
    for (r, ratio) in rows.iter().zip(&cfg.eta_over_gamma_grid) {
        let d = r.dicke;
        t.push(vec![
            num(*ratio),
            num(to_hz(r.eta)),
            opt(r.photon_number),
            opt(r.bb),
            opt(r.dd),
            opt(r.gg),
            opt(r.im_db),
            opt(r.linewidth_semianalytic.map(to_hz)),
            opt(r.linewidth_implicit.map(to_hz)),
            opt(r.fwhm.map(to_hz)),
            opt(d.map(|d| d.j_b)),
            opt(d.map(|d| d.m_b)),
            opt(d.map(|d| d.j_d)),
            opt(d.map(|d| d.m_d)),
            opt(r.residual),
            format!("\"{}\"", r.errors.join("; ").replace('"', "'")),
        ]);
    }
    run.write_table("sweep_pump.csv", &t)?;
    Ok(())
}

fn verify(run: &mut Run) -> Result<(), CliError> {
    let t0 = Instant::now();
    let checks = oracle_suite(&OracleConfig::default()).map_err(|e| solver("oracle suite", e))?;
    run.time("oracle_suite", t0);
    let mut t = Table::new(&["check", "max_rel_dev", "worst", "tolerance", "result"]);
    println!("{:<52} {:>12} {:>8} {:>10}  result", "check", "max_rel_dev", "worst", "tolerance");
    for c in &checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        println!("{:<52} {:>12.3e} {:>8} {:>10.1e}  {verdict}", c.name, c.max_rel_dev, c.worst, c.tolerance);
        t.push(vec![
            format!("\"{}\"", c.name),
            num(c.max_rel_dev),
            c.worst.clone(),
            num(c.tolerance),
            verdict.into(),
        ]);
    }
    run.write_table("verify.csv", &t)?;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    if !failed.is_empty() {
        run.diag("failed", &failed);
        return Err(CliError::Solver(format!("oracle checks failed: {}", failed.join(", "))));
    }
    Ok(())
}
