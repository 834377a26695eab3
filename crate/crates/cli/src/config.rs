//! Flat `key=value` run configuration.
//!
//! Lines are `key = value`; `#` starts a comment. Rationals are written
//! `a/b` (integers and finite decimals are accepted and kept exact).
//! Unknown or repeated keys are errors.

use std::collections::BTreeMap;
use std::path::Path;

use num_traits::{Signed, Zero};
use serde::Serialize;

use qhm::laplace::ZeroModePolicy;
use qhm::lattice::{DiffScheme, Grid, GridSpec, Params, Rational};
use qhm::projection::BumpSpec;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown key {0:?}")]
    UnknownKey(String),
    #[error("key {key:?}: {msg}")]
    Value { key: String, msg: String },
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

type Result<T> = std::result::Result<T, ConfigError>;

/// Tolerances, one per check family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Grid-exact identities: projection, conditions, algebra and bimodule.
    pub exact: f64,
    /// Trace anchor and traciality.
    pub trace: f64,
    /// Leibniz rule and metric compatibility, relative.
    pub connection: f64,
    /// `[δ_X, δ_Y] = c·δ_Z` and `τ(δ_W A) = 0`, relative.
    pub derivation: f64,
    pub curvature_xz: f64,
    /// y-variation and real part of the curvature, relative.
    pub structure: f64,
    /// Operator definition of the curvature against the closed form.
    pub closed_form: f64,
    /// Commutators of `∇⁰` with multiplications.
    pub commutator: f64,
    pub poisson: f64,
    /// Critical-point residuals r1, r2 and the oscillatory part of r3.
    pub residual: f64,
    /// `|dYM| ≤ stationarity·YM`.
    pub stationarity: f64,
    /// Factor by which `∇⁰` must miss the r3 tolerance.
    pub base_margin: f64,
    pub ym_imag: f64,
    pub morita: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            exact: 1e-12,
            trace: 1e-10,
            connection: 1e-6,
            derivation: 1e-9,
            curvature_xz: 1e-8,
            structure: 1e-9,
            closed_form: 5e-6,
            commutator: 1e-8,
            poisson: 1e-9,
            residual: 1e-5,
            stationarity: 1e-5,
            base_margin: 1e3,
            ym_imag: 1e-10,
            morita: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct DebugFlags {
    /// Use the opposite star convention in the idempotence check.
    pub tamper_star: bool,
    /// Replace `Θ⁰` by zero in the solve pipeline.
    pub zero_curvature: bool,
    /// Perturb the twist of the Morita sample vectors.
    pub broken_u: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MoritaConfig {
    pub c: i64,
    #[serde(serialize_with = "ser_ratio")]
    pub su: Rational,
    #[serde(serialize_with = "ser_ratio")]
    pub sv: Rational,
    pub x_cells: i64,
    pub y_cells: i64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub c: i64,
    #[serde(serialize_with = "ser_ratio")]
    pub hbar: Rational,
    #[serde(serialize_with = "ser_ratio")]
    pub su: Rational,
    #[serde(serialize_with = "ser_ratio")]
    pub sv: Rational,
    pub refinement: u32,
    pub x_cells: u32,
    pub y_cells: u32,
    #[serde(serialize_with = "ser_scheme")]
    pub x_derivative: DiffScheme,
    pub zero_mode: ZeroModePolicy,
    pub ramp: BumpSpec,
    pub seed: u64,
    /// Vectors in the connection-axiom battery.
    pub battery: usize,
    /// Vectors (besides R) in the critical-residual battery.
    pub residual_battery: usize,
    /// Random directions in the stationarity check.
    pub directions: usize,
    /// Refinements of `solve --sweep`.
    pub sweep: Vec<u32>,
    pub tol: Tolerances,
    pub debug: DebugFlags,
    pub morita: MoritaConfig,
}

fn ser_ratio<S: serde::Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

fn ser_scheme<S: serde::Serializer>(d: &DiffScheme, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&scheme_name(*d))
}

pub fn scheme_name(d: DiffScheme) -> String {
    match d {
        DiffScheme::Spectral => "spectral".into(),
        DiffScheme::FiniteDifference(n) => format!("fd{n}"),
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        let quarter = Rational::new(1, 4);
        Self {
            c: 1,
            hbar: Rational::new(1, 2),
            su: quarter,
            sv: quarter,
            refinement: 2,
            x_cells: 512,
            y_cells: 16,
            x_derivative: DiffScheme::Spectral,
            zero_mode: ZeroModePolicy::Assign,
            ramp: BumpSpec::default(),
            seed: 0,
            battery: 16,
            residual_battery: 3,
            directions: 5,
            sweep: vec![1, 2, 4],
            tol: Tolerances::default(),
            debug: DebugFlags::default(),
            morita: MoritaConfig {
                c: 1,
                su: quarter,
                sv: quarter,
                x_cells: 8,
                y_cells: 8,
                samples: 20,
            },
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut kv: BTreeMap<String, String> = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line: n + 1,
                    msg: format!("expected key=value, got {line:?}"),
                });
            };
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(ConfigError::Syntax {
                    line: n + 1,
                    msg: "empty key".into(),
                });
            }
            if kv.insert(k.to_string(), v.to_string()).is_some() {
                return Err(ConfigError::Syntax {
                    line: n + 1,
                    msg: format!("duplicate key {k:?}"),
                });
            }
        }
        let mut cfg = Self::default();
        let mut planck = (None, None);
        let mut morita_params = (None, None, None);
        for (k, v) in &kv {
            let key = k.as_str();
            match key {
                "c" => cfg.c = parse_int(key, v)?,
                "hbar" => cfg.hbar = parse_rational(key, v)?,
                "su" => cfg.su = parse_rational(key, v)?,
                "sv" => cfg.sv = parse_rational(key, v)?,
                "mu" => planck.0 = Some(parse_rational(key, v)?),
                "nu" => planck.1 = Some(parse_rational(key, v)?),
                "refinement" => cfg.refinement = parse_int(key, v)?,
                "x_cells" => cfg.x_cells = parse_int(key, v)?,
                "y_cells" => cfg.y_cells = parse_int(key, v)?,
                "x_derivative" => cfg.x_derivative = parse_scheme(key, v)?,
                "zero_mode" => cfg.zero_mode = v.parse().map_err(|e: qhm::Error| value_err(key, e.to_string()))?,
                "ramp_start" => cfg.ramp.ramp_start = parse_rational(key, v)?,
                "ramp_end" => cfg.ramp.ramp_end = parse_rational(key, v)?,
                "seed" => cfg.seed = parse_int(key, v)?,
                "battery" => cfg.battery = parse_int(key, v)?,
                "residual_battery" => cfg.residual_battery = parse_int(key, v)?,
                "directions" => cfg.directions = parse_int(key, v)?,
                "sweep" => cfg.sweep = v.split(',').map(|s| parse_int(key, s.trim())).collect::<Result<_>>()?,
                "debug.tamper_star" => cfg.debug.tamper_star = parse_bool(key, v)?,
                "debug.zero_curvature" => cfg.debug.zero_curvature = parse_bool(key, v)?,
                "debug.broken_u" => cfg.debug.broken_u = parse_bool(key, v)?,
                "morita.c" => morita_params.0 = Some(parse_int(key, v)?),
                "morita.su" => morita_params.1 = Some(parse_rational(key, v)?),
                "morita.sv" => morita_params.2 = Some(parse_rational(key, v)?),
                "morita.x_cells" => cfg.morita.x_cells = parse_int(key, v)?,
                "morita.y_cells" => cfg.morita.y_cells = parse_int(key, v)?,
                "morita.samples" => cfg.morita.samples = parse_int(key, v)?,
                _ => match key.strip_prefix("tol.").and_then(|t| tolerance_slot(&mut cfg.tol, t)) {
                    Some(slot) => *slot = parse_float(key, v)?,
                    None => return Err(ConfigError::UnknownKey(key.to_string())),
                },
            }
        }
        match planck {
            (None, None) => {}
            (Some(mu), Some(nu)) => {
                if kv.contains_key("su") || kv.contains_key("sv") {
                    return Err(ConfigError::Invalid("give either mu/nu or su/sv, not both".into()));
                }
                let two = Rational::from_integer(2);
                cfg.su = two * cfg.hbar * mu;
                cfg.sv = two * cfg.hbar * nu;
            }
            _ => return Err(ConfigError::Invalid("mu and nu must be given together".into())),
        }
        // The Morita section follows the main parameters unless overridden.
        cfg.morita.c = morita_params.0.unwrap_or(cfg.c);
        cfg.morita.su = morita_params.1.unwrap_or(cfg.su);
        cfg.morita.sv = morita_params.2.unwrap_or(cfg.sv);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.params()?;
        self.ramp.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.refinement == 0 || self.x_cells == 0 || self.y_cells == 0 {
            return Err(ConfigError::Invalid(
                "refinement, x_cells and y_cells must be positive".into(),
            ));
        }
        if self.sweep.is_empty() || self.sweep.contains(&0) {
            return Err(ConfigError::Invalid("sweep needs positive refinements".into()));
        }
        if let DiffScheme::FiniteDifference(n) = self.x_derivative {
            if n < 2 || n % 2 != 0 {
                return Err(ConfigError::Invalid(format!(
                    "x_derivative: finite-difference order {n} must be even and ≥ 2"
                )));
            }
        }
        if self.battery < 2 {
            return Err(ConfigError::Invalid("battery needs at least two vectors".into()));
        }
        let t = &self.tol;
        let all = [
            ("exact", t.exact),
            ("trace", t.trace),
            ("connection", t.connection),
            ("derivation", t.derivation),
            ("curvature_xz", t.curvature_xz),
            ("structure", t.structure),
            ("closed_form", t.closed_form),
            ("commutator", t.commutator),
            ("poisson", t.poisson),
            ("residual", t.residual),
            ("stationarity", t.stationarity),
            ("base_margin", t.base_margin),
            ("ym_imag", t.ym_imag),
            ("morita", t.morita),
        ];
        if let Some((name, v)) = all.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            return Err(ConfigError::Invalid(format!(
                "tol.{name} = {v} must be positive and finite"
            )));
        }
        let m = &self.morita;
        if m.x_cells < 1 || m.y_cells < 1 {
            return Err(ConfigError::Invalid("morita cells must be positive".into()));
        }
        Params::new(m.c, 0.5, m.su, m.sv).map_err(|e| ConfigError::Invalid(format!("morita: {e}")))?;
        if m.sv.is_zero() {
            return Err(ConfigError::Invalid("morita: sv must be nonzero".into()));
        }
        Ok(())
    }

    pub fn params(&self) -> Result<Params> {
        if !self.hbar.is_positive() {
            return Err(ConfigError::Invalid(format!(
                "hbar must be positive, got {}",
                self.hbar
            )));
        }
        let hbar = *self.hbar.numer() as f64 / *self.hbar.denom() as f64;
        Params::new(self.c, hbar, self.su, self.sv).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn grid_at(&self, refinement: u32) -> Result<Grid> {
        let spec = GridSpec {
            refinement,
            x_cells: self.x_cells,
            y_cells: self.y_cells,
            ..GridSpec::default()
        };
        Grid::new(self.params()?, spec).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn grid(&self) -> Result<Grid> {
        self.grid_at(self.refinement)
    }
}

fn tolerance_slot<'a>(t: &'a mut Tolerances, name: &str) -> Option<&'a mut f64> {
    Some(match name {
        "exact" => &mut t.exact,
        "trace" => &mut t.trace,
        "connection" => &mut t.connection,
        "derivation" => &mut t.derivation,
        "curvature_xz" => &mut t.curvature_xz,
        "structure" => &mut t.structure,
        "closed_form" => &mut t.closed_form,
        "commutator" => &mut t.commutator,
        "poisson" => &mut t.poisson,
        "residual" => &mut t.residual,
        "stationarity" => &mut t.stationarity,
        "base_margin" => &mut t.base_margin,
        "ym_imag" => &mut t.ym_imag,
        "morita" => &mut t.morita,
        _ => return None,
    })
}

fn value_err(key: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Value {
        key: key.to_string(),
        msg: msg.into(),
    }
}

fn parse_int<I: std::str::FromStr>(key: &str, v: &str) -> Result<I> {
    v.parse()
        .map_err(|_| value_err(key, format!("expected an integer, got {v:?}")))
}

fn parse_float(key: &str, v: &str) -> Result<f64> {
    v.parse()
        .map_err(|_| value_err(key, format!("expected a number, got {v:?}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(value_err(key, format!("expected true or false, got {v:?}"))),
    }
}

fn parse_scheme(key: &str, v: &str) -> Result<DiffScheme> {
    if v == "spectral" {
        return Ok(DiffScheme::Spectral);
    }
    v.strip_prefix("fd")
        .and_then(|n| n.parse().ok())
        .map(DiffScheme::FiniteDifference)
        .ok_or_else(|| value_err(key, format!("expected spectral or fdN, got {v:?}")))
}

/// `a/b`, `a`, or a finite decimal such as `0.25`, all exact.
pub fn parse_rational(key: &str, v: &str) -> Result<Rational> {
    let bad = || value_err(key, format!("expected a rational a/b, got {v:?}"));
    if let Some((a, b)) = v.split_once('/') {
        let a: i64 = a.trim().parse().map_err(|_| bad())?;
        let b: i64 = b.trim().parse().map_err(|_| bad())?;
        if b == 0 {
            return Err(value_err(key, "zero denominator"));
        }
        return Ok(Rational::new(a, b));
    }
    if let Some((int, frac)) = v.split_once('.') {
        if frac.is_empty() || frac.len() > 15 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = int.starts_with('-');
        let whole: i64 = if int.is_empty() || int == "-" {
            0
        } else {
            int.parse().map_err(|_| bad())?
        };
        let den = 10i64.pow(frac.len() as u32);
        let f: i64 = frac.parse().map_err(|_| bad())?;
        let num = whole
            .abs()
            .checked_mul(den)
            .and_then(|w| w.checked_add(f))
            .ok_or_else(bad)?;
        return Ok(Rational::new(if neg { -num } else { num }, den));
    }
    v.parse::<i64>().map(Rational::from_integer).map_err(|_| bad())
}
