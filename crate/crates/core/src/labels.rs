//! Node labels: the mean cost vector and the Borda consensus ranking.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::{rank_vector, Ranking};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeLabels {
    pub regression: Vec<f64>,
    pub ranking: Ranking,
}

impl NodeLabels {
    pub fn compute<L: AsRef<[f64]>>(members: &[L]) -> Result<Self> {
        Ok(NodeLabels {
            regression: mean_label(members)?,
            ranking: borda_consensus(members)?,
        })
    }
}

fn check_members<L: AsRef<[f64]>>(members: &[L]) -> Result<usize> {
    let first = members
        .first()
        .ok_or_else(|| Error::domain("labels of an empty set"))?;
    let k = first.as_ref().len();
    if members.iter().any(|m| m.as_ref().len() != k) {
        return Err(Error::domain("label vectors of differing length"));
    }
    Ok(k)
}

/// Componentwise arithmetic mean of the member label vectors.
pub fn mean_label<L: AsRef<[f64]>>(members: &[L]) -> Result<Vec<f64>> {
    let k = check_members(members)?;
    let mut sum = vec![0.0; k];
    for y in members {
        for (s, v) in sum.iter_mut().zip(y.as_ref()) {
            *s += v;
        }
    }
    let n = members.len() as f64;
    Ok(sum.into_iter().map(|s| s / n).collect())
}

/// Borda consensus as a rank sum: every member ranks the algorithms by cost,
/// ranks are summed per algorithm, and the sums are ranked again (smallest
/// sum first, equal sums share an average rank).
pub fn borda_consensus<L: AsRef<[f64]>>(members: &[L]) -> Result<Ranking> {
    let k = check_members(members)?;
    let mut scores = vec![0.0; k];
    for y in members {
        for (s, r) in scores.iter_mut().zip(rank_vector(y.as_ref()).ranks()) {
            *s += r;
        }
    }
    Ok(rank_vector(&scores))
}
