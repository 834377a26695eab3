//! `morita`: the preservation identities of `S` and `H`.

use serde::Serialize;

use qhm::morita::{verify_bimodule_preservation, MoritaGrid};

use crate::config::{MoritaConfig, RunConfig};
use crate::report::{Check, Checks};
use crate::StageError;

#[derive(Debug, Clone, Serialize)]
pub struct MoritaReport {
    pub command: &'static str,
    pub morita: MoritaConfig,
    pub seed: u64,
    pub broken_u: bool,
    pub checks: Checks,
    pub pass: bool,
}

fn anchor(name: &str) -> &'static str {
    match name {
        "source membership" => "f ∈ X^{β,u*}_α: twisted periodicity of f",
        "target membership of S(f)" => "S(f) lies in the first spectral subspace of E",
        "closure of source actions" => "φ·f, f·φ ∈ X^{β,u*}_α",
        "closure of target actions" => "H(φ)·S(f), S(f)·H(φ) stay in the first spectral subspace",
        "sup-norm preservation" => "‖S(f)‖_∞ = ‖f‖_∞",
        _ => "S and H intertwine the bimodule structures",
    }
}

pub fn run(cfg: &RunConfig) -> Result<MoritaReport, StageError> {
    let m = &cfg.morita;
    let grid = MoritaGrid::new(m.c, m.su, m.sv, m.x_cells, m.y_cells).map_err(StageError::config)?;
    let mut checks = Checks::default();
    if m.samples > 0 {
        let rep = verify_bimodule_preservation::<f64>(&grid, m.samples, cfg.seed, cfg.debug.broken_u)
            .map_err(|e| StageError::new("morita", e))?;
        for e in rep.entries {
            checks.push(Check::upper(
                "morita",
                e.name,
                anchor(e.name),
                e.max_violation,
                cfg.tol.morita,
            ));
        }
    }
    let pass = checks.all_pass();
    Ok(MoritaReport {
        command: "morita",
        morita: m.clone(),
        seed: cfg.seed,
        broken_u: cfg.debug.broken_u,
        checks,
        pass,
    })
}
