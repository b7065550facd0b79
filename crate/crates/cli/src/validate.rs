//! Physics sanity checks on a resolved configuration.

use std::fmt;

use nhbath::model::BathParams;
use nhbath::spectral::transition_distance;

use crate::config::{Experiment, ExperimentConfig};

/// Non-Bloch transitions closer than this in `|J1|` trigger a warning.
pub const TRANSITION_WARN: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Warning,
    Info,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub level: Level,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.level {
            Level::Warning => "warning",
            Level::Info => "note",
        };
        write!(f, "{tag}: {}", self.message)
    }
}

fn warn(message: impl Into<String>) -> Diagnostic {
    Diagnostic {
        level: Level::Warning,
        message: message.into(),
    }
}

pub fn validate(cfg: &ExperimentConfig) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let half = cfg.kappa / 2.0;
    let scale = 1.0 + cfg.j1.abs() + cfg.j2.abs() + cfg.kappa;
    if cfg.experiment.uses_hermitian_frame() && cfg.j1 <= half {
        out.push(warn("analytic path unavailable: J1 ≤ κ/2"));
    }
    // fig2 fixes J1 per panel, so the configured J1 says nothing there
    let panels_fixed = matches!(cfg.experiment, Experiment::Fig2);
    if cfg.experiment.uses_pbc() && !panels_fixed {
        let on_line = [cfg.j1 - half, cfg.j1 + half, -cfg.j1 - half, -cfg.j1 + half]
            .iter()
            .any(|&t| (cfg.j2 - t).abs() <= 1e-12 * scale);
        if on_line {
            out.push(Diagnostic {
                level: Level::Info,
                message: "on transition line (exceptional point in PBC bath)".into(),
            });
        }
    }
    if !panels_fixed {
        let p = BathParams {
            j1: cfg.j1,
            j2: cfg.j2,
            kappa: cfg.kappa,
            cells: cfg.cells.max(2),
            boundary: cfg.boundary,
        };
        let d = transition_distance(&p);
        if d < TRANSITION_WARN {
            out.push(warn(format!("|J1| within {d:.2e} of a non-Bloch transition; windings may be unreliable")));
        }
    }
    if matches!(cfg.experiment, Experiment::Dressed | Experiment::Fig3 | Experiment::Dynamics | Experiment::Fig5)
        && (cfg.gamma - cfg.kappa).abs() > 1e-12 * scale
    {
        out.push(warn("gamma ≠ kappa: pole equation and resolvent paths disabled, dense solver used"));
    }
    if matches!(cfg.experiment, Experiment::Dynamics | Experiment::Fig5)
        && cfg.j0 == cfg.j0_2
        && cfg.attach == cfg.attach2
    {
        out.push(warn("both emitters on the same site"));
    }
    out
}
