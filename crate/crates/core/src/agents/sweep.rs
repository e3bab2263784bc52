use serde::{Deserialize, Serialize};

use crate::agents::hyper::{expand_grid, AgentHyperparams, GridAxis};
use crate::{Error, Result};

/// Tie tolerance on rates.
pub const SCORE_TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub hyperparams: AgentHyperparams,
    pub vc_rate: f64,
    pub ol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub entries: Vec<SweepEntry>,
    pub best: usize,
}

impl SweepResult {
    pub fn best_entry(&self) -> &SweepEntry {
        &self.entries[self.best]
    }
}

/// Highest VC rate, then highest OL, then earliest in grid order.
pub fn select_best(entries: &[SweepEntry]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, e) in entries.iter().enumerate() {
        let better = match best {
            None => true,
            Some(b) => {
                let cur = &entries[b];
                if e.vc_rate > cur.vc_rate + SCORE_TIE_EPS {
                    true
                } else if (e.vc_rate - cur.vc_rate).abs() <= SCORE_TIE_EPS {
                    e.ol > cur.ol + SCORE_TIE_EPS
                } else {
                    false
                }
            }
        };
        if better {
            best = Some(i);
        }
    }
    best
}

/// Scores every grid point with `evaluate`, which returns `(vc_rate, ol)`,
/// and selects the best.
pub fn grid_sweep(
    base: &AgentHyperparams,
    axes: &[GridAxis],
    mut evaluate: impl FnMut(usize, &AgentHyperparams) -> Result<(f64, f64)>,
) -> Result<SweepResult> {
    let grid = expand_grid(base, axes)?;
    let mut entries = Vec::with_capacity(grid.len());
    for (i, hp) in grid.into_iter().enumerate() {
        hp.validate()?;
        let (vc_rate, ol) = evaluate(i, &hp)?;
        entries.push(SweepEntry { hyperparams: hp, vc_rate, ol });
    }
    let best = select_best(&entries).ok_or_else(|| Error::InvalidConfig("empty sweep grid".into()))?;
    Ok(SweepResult { entries, best })
}
