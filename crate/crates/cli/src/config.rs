// SPDX-License-Identifier: Apache-2.0

//! Flat TOML run configuration.
//!
//! Every quantity carries its unit in the key suffix (`kappa_khz`,
//! `drive_sigma_ns`, ...). Frequencies are ordinary frequencies and are
//! converted to angular frequencies on load.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use dressed_lasing::model::{validate_params, DriveConfig, DriveShape, PhysicalParams};
use dressed_lasing::units::{khz, mhz, ns, zeeman_splitting};
use log::info;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown key `{key}`{hint}")]
    UnknownKey { key: String, hint: String },
    #[error("key `{key}` has the wrong unit suffix; expected `{expected}`")]
    UnitSuffix { key: String, expected: String },
    #[error("key `{key}`: {message}")]
    Value { key: String, message: String },
    #[error("invalid parameters: {0}")]
    Params(String),
}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Int,
    Float,
    Text,
    FloatList,
}

/// Accepted keys, their value kind and default (as written in a config file).
const KEYS: &[(&str, Kind, &str)] = &[
    ("n_atoms", Kind::Int, "250000"),
    ("g_khz", Kind::Float, "7.5"),
    ("kappa_khz", Kind::Float, "150"),
    ("kappa1_khz", Kind::Float, "kappa_khz / 2"),
    ("kappa2_khz", Kind::Float, "kappa_khz / 2"),
    ("gamma_khz", Kind::Float, "7.5"),
    ("gamma_plus_khz", Kind::Float, "gamma_khz"),
    ("gamma_minus_khz", Kind::Float, "gamma_khz"),
    ("eta_khz", Kind::Float, "0"),
    ("eta_over_gamma", Kind::Float, "0"),
    ("eta_plus_khz", Kind::Float, "eta"),
    ("eta_minus_khz", Kind::Float, "eta"),
    ("delta_mhz", Kind::Float, "0"),
    ("b_field_gauss", Kind::Float, "0"),
    ("omega_a_offset_khz", Kind::Float, "0"),
    ("omega_c_offset_khz", Kind::Float, "0"),
    ("drive_shape", Kind::Text, "gaussian"),
    ("drive_amp_sqrt_khz", Kind::Float, "none (undriven)"),
    ("drive_center_ns", Kind::Float, "10 drive_sigma_ns"),
    ("drive_sigma_ns", Kind::Float, "26.4"),
    ("drive_offset_khz", Kind::Float, "0"),
    ("max_n", Kind::Int, "1"),
    ("eta_over_gamma_grid", Kind::FloatList, "[0.1, 0.2, 0.5, 1, 2, 5, 10]"),
    ("fgrid_khz", Kind::Text, "-300:300:601"),
];

const UNIT_SUFFIXES: &[&str] = &["_hz", "_khz", "_mhz", "_ghz", "_ns", "_us", "_ms", "_s", "_gauss", "_tesla", "_sqrt_khz", "_sqrt_hz"];

/// Offsets `min:max:n` in kHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FreqGrid {
    pub min_khz: f64,
    pub max_khz: f64,
    pub n: usize,
}

impl FreqGrid {
    pub fn parse(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected min:max:n, got `{s}`"));
        }
        let min_khz: f64 = parts[0].trim().parse().map_err(|_| format!("bad minimum `{}`", parts[0]))?;
        let max_khz: f64 = parts[1].trim().parse().map_err(|_| format!("bad maximum `{}`", parts[1]))?;
        let n: usize = parts[2].trim().parse().map_err(|_| format!("bad point count `{}`", parts[2]))?;
        if !(max_khz > min_khz) || n < 3 {
            return Err(format!("need max > min and n >= 3, got `{s}`"));
        }
        Ok(Self { min_khz, max_khz, n })
    }

    /// Angular-frequency offsets.
    pub fn offsets(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| khz(self.min_khz + (self.max_khz - self.min_khz) * i as f64 / (self.n - 1) as f64))
            .collect()
    }
}

impl std::fmt::Display for FreqGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}:{}", self.min_khz, self.max_khz, self.n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: PhysicalParams,
    pub max_n: u32,
    pub eta_over_gamma_grid: Vec<f64>,
    pub fgrid: FreqGrid,
    /// Keys as given, for the manifest.
    pub given: BTreeMap<String, String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        from_table(&toml::Table::new()).expect("defaults are valid")
    }
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let src = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_str(&src)
}

pub fn parse_str(src: &str) -> Result<RunConfig> {
    let table: toml::Table = src.parse().map_err(|e: toml::de::Error| ConfigError::Parse {
        line: e.span().map_or(1, |s| line_of(src, s.start)),
        message: e.message().to_string(),
    })?;
    from_table(&table)
}

fn suggestion(key: &str) -> String {
    let best = KEYS
        .iter()
        .map(|(k, _, _)| (*k, strsim::jaro_winkler(key, k)))
        .max_by(|a, b| a.1.total_cmp(&b.1));
    match best {
        Some((k, s)) if s > 0.8 => format!("; did you mean `{k}`?"),
        _ => String::new(),
    }
}

fn strip_unit(key: &str) -> &str {
    UNIT_SUFFIXES
        .iter()
        .filter(|s| key.ends_with(*s))
        .max_by_key(|s| s.len())
        .map_or(key, |s| &key[..key.len() - s.len()])
}

fn check_key(key: &str, value: &toml::Value) -> Result<Kind> {
    if let Some((_, kind, _)) = KEYS.iter().find(|(k, _, _)| *k == key) {
        let ok = match kind {
            Kind::Int => value.is_integer(),
            Kind::Float => value.is_float() || value.is_integer(),
            Kind::Text => value.is_str(),
            Kind::FloatList => value
                .as_array()
                .is_some_and(|a| a.iter().all(|v| v.is_float() || v.is_integer())),
        };
        if !ok {
            return Err(ConfigError::Value {
                key: key.into(),
                message: format!("expected {kind:?}, got {}", value.type_str()),
            });
        }
        return Ok(*kind);
    }
    let base = strip_unit(key);
    if base != key {
        if let Some((k, _, _)) = KEYS.iter().find(|(k, _, _)| strip_unit(k) == base && *k != base) {
            return Err(ConfigError::UnitSuffix {
                key: key.into(),
                expected: (*k).into(),
            });
        }
    }
    Err(ConfigError::UnknownKey {
        key: key.into(),
        hint: suggestion(key),
    })
}

fn float(t: &toml::Table, key: &str) -> Option<f64> {
    t.get(key).and_then(|v| v.as_float().or_else(|| v.as_integer().map(|i| i as f64)))
}

fn exclusive(t: &toml::Table, a: &str, b: &str) -> Result<()> {
    if t.contains_key(a) && t.contains_key(b) {
        return Err(ConfigError::Value {
            key: b.into(),
            message: format!("conflicts with `{a}`"),
        });
    }
    Ok(())
}

fn from_table(t: &toml::Table) -> Result<RunConfig> {
    let mut given = BTreeMap::new();
    for (k, v) in t {
        check_key(k, v)?;
        given.insert(k.clone(), v.to_string());
    }
    exclusive(t, "eta_khz", "eta_over_gamma")?;
    exclusive(t, "delta_mhz", "b_field_gauss")?;

    let n_atoms = match t.get("n_atoms").and_then(|v| v.as_integer()) {
        Some(n) if n >= 1 => n as u64,
        Some(n) => {
            return Err(ConfigError::Value {
                key: "n_atoms".into(),
                message: format!("must be >= 1, got {n}"),
            })
        }
        None => 250_000,
    };
    let kappa = float(t, "kappa_khz").unwrap_or(150.0);
    let gamma = float(t, "gamma_khz").unwrap_or(7.5);
    let mut p = PhysicalParams::new(n_atoms, khz(float(t, "g_khz").unwrap_or(7.5)), khz(kappa), khz(gamma));
    p.kappa1 = khz(float(t, "kappa1_khz").unwrap_or(0.5 * kappa));
    p.kappa2 = khz(float(t, "kappa2_khz").unwrap_or(0.5 * kappa));
    p.gamma_plus = khz(float(t, "gamma_plus_khz").unwrap_or(gamma));
    p.gamma_minus = khz(float(t, "gamma_minus_khz").unwrap_or(gamma));
    let eta = match float(t, "eta_over_gamma") {
        Some(r) => r * khz(gamma),
        None => khz(float(t, "eta_khz").unwrap_or(0.0)),
    };
    p.eta_plus = float(t, "eta_plus_khz").map_or(eta, khz);
    p.eta_minus = float(t, "eta_minus_khz").map_or(eta, khz);
    p.delta_zeeman = match float(t, "b_field_gauss") {
        Some(b) => zeeman_splitting(b),
        None => mhz(float(t, "delta_mhz").unwrap_or(0.0)),
    };
    p.omega_a_offset = khz(float(t, "omega_a_offset_khz").unwrap_or(0.0));
    p.omega_c_offset = khz(float(t, "omega_c_offset_khz").unwrap_or(0.0));

    let drive_keys = ["drive_shape", "drive_center_ns", "drive_sigma_ns", "drive_offset_khz"];
    match float(t, "drive_amp_sqrt_khz") {
        Some(amp) => {
            let shape = match t.get("drive_shape").and_then(|v| v.as_str()).unwrap_or("gaussian") {
                "gaussian" => DriveShape::Gaussian,
                "constant" => DriveShape::Constant,
                other => {
                    return Err(ConfigError::Value {
                        key: "drive_shape".into(),
                        message: format!("expected `gaussian` or `constant`, got `{other}`"),
                    })
                }
            };
            let sigma = float(t, "drive_sigma_ns").unwrap_or(26.4);
            let center = float(t, "drive_center_ns").unwrap_or(10.0 * sigma);
            let mut d = match shape {
                DriveShape::Gaussian => DriveConfig::gaussian(amp, ns(center), ns(sigma)),
                DriveShape::Constant => DriveConfig::constant(amp),
            };
            d.omega_d_offset = khz(float(t, "drive_offset_khz").unwrap_or(0.0));
            p.drive = Some(d);
        }
        None => {
            if let Some(k) = drive_keys.iter().find(|k| t.contains_key(**k)) {
                return Err(ConfigError::Value {
                    key: (*k).into(),
                    message: "drive settings need `drive_amp_sqrt_khz`".into(),
                });
            }
            info!("no drive configured; undriven scenario");
        }
    }
    validate_params(&p, true).map_err(|e| ConfigError::Params(e.to_string()))?;

    let max_n = match t.get("max_n").and_then(|v| v.as_integer()) {
        Some(n) if (0..=1000).contains(&n) => n as u32,
        Some(n) => {
            return Err(ConfigError::Value {
                key: "max_n".into(),
                message: format!("must lie in 0..=1000, got {n}"),
            })
        }
        None => 1,
    };
    let eta_over_gamma_grid = match t.get("eta_over_gamma_grid").and_then(|v| v.as_array()) {
        Some(a) => a
            .iter()
            .map(|v| v.as_float().or_else(|| v.as_integer().map(|i| i as f64)).unwrap_or(f64::NAN))
            .collect(),
        None => vec![0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0],
    };
    let fgrid = match t.get("fgrid_khz").and_then(|v| v.as_str()) {
        Some(s) => FreqGrid::parse(s).map_err(|message| ConfigError::Value {
            key: "fgrid_khz".into(),
            message,
        })?,
        None => FreqGrid {
            min_khz: -300.0,
            max_khz: 300.0,
            n: 601,
        },
    };
    for (k, _, default) in KEYS {
        if !t.contains_key(*k) {
            info!("{k} = {default} (default)");
        }
    }
    Ok(RunConfig {
        params: p,
        max_n,
        eta_over_gamma_grid,
        fgrid,
        given,
    })
}

/// The resolved configuration in the accepted file format, so that a run
/// can be repeated from its manifest.
pub fn snapshot(c: &RunConfig) -> String {
    let p = &c.params;
    let to_khz = |w: f64| w / khz(1.0);
    let mut s = String::new();
    let _ = writeln!(s, "n_atoms = {}", p.n_atoms);
    for (k, v) in [
        ("g_khz", to_khz(p.g)),
        ("kappa1_khz", to_khz(p.kappa1)),
        ("kappa2_khz", to_khz(p.kappa2)),
        ("gamma_plus_khz", to_khz(p.gamma_plus)),
        ("gamma_minus_khz", to_khz(p.gamma_minus)),
        ("eta_plus_khz", to_khz(p.eta_plus)),
        ("eta_minus_khz", to_khz(p.eta_minus)),
        ("delta_mhz", p.delta_zeeman / mhz(1.0)),
        ("omega_a_offset_khz", to_khz(p.omega_a_offset)),
        ("omega_c_offset_khz", to_khz(p.omega_c_offset)),
    ] {
        let _ = writeln!(s, "{k} = {v:?}");
    }
    // gamma_khz and kappa_khz only seed defaults; the split values above win.
    let _ = writeln!(s, "gamma_khz = {:?}", to_khz(0.5 * (p.gamma_plus + p.gamma_minus)));
    let _ = writeln!(s, "kappa_khz = {:?}", to_khz(p.kappa()));
    if let Some(d) = p.drive {
        let shape = match d.shape {
            DriveShape::Gaussian => "gaussian",
            DriveShape::Constant => "constant",
        };
        let _ = writeln!(s, "drive_shape = \"{shape}\"");
        let _ = writeln!(s, "drive_amp_sqrt_khz = {:?}", d.amp0);
        let _ = writeln!(s, "drive_center_ns = {:?}", d.pulse_center / ns(1.0));
        let _ = writeln!(s, "drive_sigma_ns = {:?}", d.pulse_sigma / ns(1.0));
        let _ = writeln!(s, "drive_offset_khz = {:?}", to_khz(d.omega_d_offset));
    }
    let _ = writeln!(s, "max_n = {}", c.max_n);
    let grid: Vec<String> = c.eta_over_gamma_grid.iter().map(|x| format!("{x:?}")).collect();
    let _ = writeln!(s, "eta_over_gamma_grid = [{}]", grid.join(", "));
    let _ = writeln!(s, "fgrid_khz = \"{}\"", c.fgrid);
    // Guard against drift between the snapshot and the parser.
    debug_assert!(parse_str(&s).is_ok());
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn field_sets_zeeman_splitting() {
        let c = parse_str("b_field_gauss = 1.0").unwrap();
        assert!((c.params.delta_zeeman - 2.0 * PI * 2.1e3).abs() < 1e-9);
    }

    #[test]
    fn pump_relative_to_gamma() {
        let c = parse_str("eta_over_gamma = 5\ngamma_khz = 7.5").unwrap();
        assert!((c.params.eta_plus - 2.0 * PI * 37.5).abs() < 1e-12);
        assert_eq!(c.params.eta_plus, c.params.eta_minus);
    }

    #[test]
    fn missing_drive_is_undriven() {
        assert!(parse_str("n_atoms = 10").unwrap().params.drive.is_none());
    }

    #[test]
    fn unknown_key_gets_suggestion() {
        match parse_str("kapa_khz = 1") {
            Err(ConfigError::UnknownKey { hint, .. }) => assert!(hint.contains("kappa_khz"), "{hint}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wrong_unit_suffix() {
        assert!(matches!(parse_str("kappa_hz = 150000"), Err(ConfigError::UnitSuffix { .. })));
        assert!(matches!(parse_str("drive_sigma_us = 0.03"), Err(ConfigError::UnitSuffix { .. })));
    }

    #[test]
    fn parse_error_reports_line() {
        match parse_str("n_atoms = 3\n\ng_khz = = 2\n") {
            Err(ConfigError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn snapshot_round_trips() {
        let c = parse_str(
            "n_atoms = 62500\ndelta_mhz = 2.0\ndrive_amp_sqrt_khz = 10\ndrive_sigma_ns = 26.4\ndrive_center_ns = 264.1\nfgrid_khz = \"-5:5:11\"",
        )
        .unwrap();
        let again = parse_str(&snapshot(&c)).unwrap();
        assert_eq!(again.params, c.params);
        assert_eq!(again.fgrid, c.fgrid);
        assert_eq!(again.eta_over_gamma_grid, c.eta_over_gamma_grid);
    }

    #[test]
    fn grid_syntax() {
        let g = FreqGrid::parse("-1:1:5").unwrap();
        assert_eq!(g.offsets().len(), 5);
        assert!(FreqGrid::parse("1:1:5").is_err());
        assert!(FreqGrid::parse("0:1").is_err());
    }
}
