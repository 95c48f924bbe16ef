use serde::{Deserialize, Serialize};

use super::{AdviceOptions, Analysis};
use crate::error::Result;
use crate::model::{EmaDataset, VarModel};
use crate::vma::irf::total_from_grid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceEntry {
    pub variable: String,
    pub index: usize,
    /// Net effect on all other variables, in standard deviations.
    pub net_effect: f64,
}

/// Variables sorted by descending absolute net effect; ties keep model order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceRanking {
    pub horizon: usize,
    pub bootstrap: bool,
    pub entries: Vec<InfluenceEntry>,
}

impl InfluenceRanking {
    pub fn top(&self) -> Option<&InfluenceEntry> {
        self.entries.first()
    }

    pub fn get(&self, variable: &str) -> Option<&InfluenceEntry> {
        self.entries.iter().find(|e| e.variable == variable)
    }
}

pub fn rank_influence(analysis: &Analysis) -> InfluenceRanking {
    let grid = analysis.transformed();
    let mut entries: Vec<InfluenceEntry> = analysis
        .variables()
        .iter()
        .enumerate()
        .map(|(x, v)| InfluenceEntry {
            variable: v.name.clone(),
            index: x,
            net_effect: total_from_grid(grid, x),
        })
        .collect();
    entries.sort_by(|a, b| b.net_effect.abs().total_cmp(&a.net_effect.abs()));
    InfluenceRanking {
        horizon: analysis.horizon(),
        bootstrap: analysis.bootstrapped(),
        entries,
    }
}

/// Ranks every variable by its net effect on the rest of the network.
pub fn determine_most_influential(
    model: &VarModel,
    data: Option<&EmaDataset>,
    k: usize,
    opts: &AdviceOptions,
) -> Result<InfluenceRanking> {
    Ok(rank_influence(&Analysis::new(model, data, k, opts)?))
}
