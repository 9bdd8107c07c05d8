//! Ranking and regression losses used to score tree nodes, plus Kendall's
//! tau-b for evaluation.
//!
//! All rankings use average ranks: the lowest cost gets rank 1 and tied costs
//! share the mean of the positions they span. Spearman's rho is computed as
//! the Pearson correlation of two such rank vectors, which stays valid under
//! ties.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Average-rank vector over algorithms; rank 1 is the best (lowest cost).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Ranking(Vec<f64>);

impl Ranking {
    /// Wraps an explicit rank vector. The ranks must be positive and sum to
    /// `k(k+1)/2`.
    pub fn new(ranks: Vec<f64>) -> Result<Self> {
        let k = ranks.len() as f64;
        let expected = k * (k + 1.0) / 2.0;
        let sum: f64 = ranks.iter().sum();
        if ranks.iter().any(|r| !(r.is_finite() && *r >= 1.0 && *r <= k)) {
            return Err(Error::domain(format!("ranks out of range 1..={k}: {ranks:?}")));
        }
        if (sum - expected).abs() > 1e-9 * expected.max(1.0) {
            return Err(Error::domain(format!(
                "ranks sum to {sum}, expected {expected}"
            )));
        }
        Ok(Ranking(ranks))
    }

    pub fn ranks(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True when every algorithm shares the same rank.
    pub fn is_constant(&self) -> bool {
        self.0.windows(2).all(|w| w[0] == w[1])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for Ranking {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Average-rank transform of a cost vector.
pub fn rank_vector(costs: &[f64]) -> Ranking {
    let mut order: Vec<usize> = (0..costs.len()).collect();
    order.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]));

    let mut ranks = vec![0.0; costs.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && costs[order[end]] == costs[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = (start + end + 1) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        start = end;
    }
    Ranking(ranks)
}

fn check_pair(a: &[f64], b: &[f64], min_len: usize) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::domain(format!(
            "length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < min_len {
        return Err(Error::domain(format!(
            "need at least {min_len} entries, got {}",
            a.len()
        )));
    }
    Ok(())
}

/// Pearson correlation, or `None` if either input has zero variance.
pub(crate) fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let (mut cov, mut var_a, mut var_b) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - mean_a, y - mean_b);
        cov += dx * dy;
        var_a += dx * dx;
        var_b += dy * dy;
    }
    if var_a == 0.0 || var_b == 0.0 {
        return None;
    }
    Some(cov / (var_a.sqrt() * var_b.sqrt()))
}

/// `(1 - rho) / 2` where rho is Spearman's correlation of the two rankings.
///
/// The result lies in `[0, 1]`. A constant ranking on either side carries no
/// order information and scores 0.5.
pub fn spearman_loss(r1: &Ranking, r2: &Ranking) -> Result<f64> {
    check_pair(&r1.0, &r2.0, 2)?;
    Ok(match pearson(&r1.0, &r2.0) {
        Some(rho) => ((1.0 - rho) / 2.0).clamp(0.0, 1.0),
        None => 0.5,
    })
}

/// Mean squared error over the entries of two label vectors.
pub fn mse_loss(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    check_pair(y, y_hat, 1)?;
    let sum: f64 = y.iter().zip(y_hat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sum / y.len() as f64)
}

/// Weight of the ranking term in the hybrid node loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridLoss {
    lambda: f64,
}

impl HybridLoss {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::domain(format!("lambda must lie in [0, 1], got {lambda}")));
        }
        Ok(HybridLoss { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn uses_ranking(&self) -> bool {
        self.lambda > 0.0
    }

    pub fn uses_regression(&self) -> bool {
        self.lambda < 1.0
    }

    /// `lambda * ranking + (1 - lambda) * regression`. A component with zero
    /// weight is dropped entirely, so it may be passed as anything.
    pub fn combine(&self, ranking: f64, regression: f64) -> f64 {
        let mut total = 0.0;
        if self.uses_ranking() {
            total += self.lambda * ranking;
        }
        if self.uses_regression() {
            total += (1.0 - self.lambda) * regression;
        }
        total
    }
}

/// Homogeneity of a set of labels with respect to the node's regression and
/// ranking labels: the hybrid combination of the mean Spearman loss and the
/// mean MSE over the members.
pub fn node_loss<L: AsRef<[f64]>>(
    members: &[L],
    regression: &[f64],
    ranking: &Ranking,
    loss: HybridLoss,
) -> Result<f64> {
    if members.is_empty() {
        return Err(Error::domain("node loss of an empty set"));
    }
    let n = members.len() as f64;

    let mut rank_term = 0.0;
    if loss.uses_ranking() {
        for y in members {
            rank_term += spearman_loss(&rank_vector(y.as_ref()), ranking)?;
        }
        rank_term /= n;
    }
    let mut reg_term = 0.0;
    if loss.uses_regression() {
        for y in members {
            reg_term += mse_loss(y.as_ref(), regression)?;
        }
        reg_term /= n;
    }
    Ok(loss.combine(rank_term, reg_term))
}

/// Kendall's tau-b between two rankings.
///
/// Fails with [`Error::UndefinedMetric`] when either ranking ties every pair.
pub fn kendall_tau_b(r1: &Ranking, r2: &Ranking) -> Result<f64> {
    check_pair(&r1.0, &r2.0, 2)?;
    let (a, b) = (&r1.0, &r2.0);
    let (mut concordant, mut discordant) = (0u64, 0u64);
    let (mut tied_a_only, mut tied_b_only) = (0u64, 0u64);
    for i in 0..a.len() {
        for j in (i + 1)..a.len() {
            let da = a[i] - a[j];
            let db = b[i] - b[j];
            match (da == 0.0, db == 0.0) {
                (true, true) => {}
                (true, false) => tied_a_only += 1,
                (false, true) => tied_b_only += 1,
                (false, false) => {
                    if (da > 0.0) == (db > 0.0) {
                        concordant += 1
                    } else {
                        discordant += 1
                    }
                }
            }
        }
    }
    let base = concordant + discordant;
    let untied_a = base + tied_b_only;
    let untied_b = base + tied_a_only;
    if untied_a == 0 || untied_b == 0 {
        return Err(Error::UndefinedMetric(
            "kendall tau-b of a fully tied ranking".into(),
        ));
    }
    let denom = ((untied_a as f64) * (untied_b as f64)).sqrt();
    Ok((concordant as f64 - discordant as f64) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(v: &[f64]) -> Ranking {
        Ranking::new(v.to_vec()).unwrap()
    }

    #[test]
    fn rank_vector_examples() {
        assert_eq!(rank_vector(&[0.1, 0.5, 0.9]).ranks(), &[1.0, 2.0, 3.0]);
        assert_eq!(rank_vector(&[0.5, 0.5, 0.9]).ranks(), &[1.5, 1.5, 3.0]);
        assert_eq!(rank_vector(&[3.0, 1.0, 2.0, 1.0]).ranks(), &[4.0, 1.5, 3.0, 1.5]);
        assert_eq!(rank_vector(&[7.0, 7.0]).ranks(), &[1.5, 1.5]);
    }

    #[test]
    fn ranking_rejects_bad_sums() {
        assert!(Ranking::new(vec![1.0, 1.0, 3.0]).is_err());
        assert!(Ranking::new(vec![0.0, 3.0, 3.0]).is_err());
        assert!(Ranking::new(vec![1.5, 1.5, 3.0]).is_ok());
    }

    #[test]
    fn spearman_examples() {
        let id = r(&[1.0, 2.0, 3.0]);
        assert!(spearman_loss(&id, &id).unwrap().abs() < 1e-15);
        assert!((spearman_loss(&id, &r(&[3.0, 2.0, 1.0])).unwrap() - 1.0).abs() < 1e-15);
        assert!((spearman_loss(&id, &r(&[2.0, 1.0, 3.0])).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn spearman_constant_and_errors() {
        let flat = r(&[2.0, 2.0, 2.0]);
        assert_eq!(spearman_loss(&flat, &r(&[1.0, 2.0, 3.0])).unwrap(), 0.5);
        assert!(spearman_loss(&r(&[1.0, 2.0]), &r(&[1.0, 2.0, 3.0])).is_err());
        assert!(spearman_loss(&r(&[1.0]), &r(&[1.0])).is_err());
    }

    #[test]
    fn mse_examples() {
        assert_eq!(mse_loss(&[0.3, 0.4], &[0.3, 0.4]).unwrap(), 0.0);
        assert_eq!(mse_loss(&[0.0, 1.0], &[1.0, 0.0]).unwrap(), 1.0);
        let v = mse_loss(&[0.2, 0.8, 0.5], &[0.0, 1.0, 0.5]).unwrap();
        assert!((v - 0.08 / 3.0).abs() < 1e-15);
        assert!(mse_loss(&[0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn node_loss_examples() {
        let members = vec![vec![0.1, 0.5, 0.9]; 3];
        let ranking = rank_vector(&members[0]);
        for lambda in [0.0, 0.4, 1.0] {
            let l = node_loss(&members, &members[0], &ranking, HybridLoss::new(lambda).unwrap());
            assert!(l.unwrap().abs() < 1e-15);
        }

        let members = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let ranking = r(&[1.0, 2.0]);
        let l = node_loss(&members, &[0.5, 0.5], &ranking, HybridLoss::new(1.0).unwrap()).unwrap();
        assert!((l - 0.5).abs() < 1e-15);
        let l0 = node_loss(&members, &[0.5, 0.5], &ranking, HybridLoss::new(0.0).unwrap()).unwrap();
        assert_eq!(l0, 0.25);

        let empty: Vec<Vec<f64>> = vec![];
        assert!(node_loss(&empty, &[0.0], &ranking, HybridLoss::new(0.5).unwrap()).is_err());
    }

    #[test]
    fn lambda_bounds() {
        assert!(HybridLoss::new(-0.1).is_err());
        assert!(HybridLoss::new(1.1).is_err());
        assert!(HybridLoss::new(f64::NAN).is_err());
        assert!(HybridLoss::new(0.0).is_ok());
    }

    #[test]
    fn kendall_examples() {
        let id = r(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(kendall_tau_b(&id, &id).unwrap(), 1.0);
        assert_eq!(kendall_tau_b(&id, &r(&[4.0, 3.0, 2.0, 1.0])).unwrap(), -1.0);
        let t = kendall_tau_b(&id, &r(&[1.0, 3.0, 2.0, 4.0])).unwrap();
        assert!((t - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn kendall_undefined_on_full_ties() {
        let flat = r(&[2.0, 2.0, 2.0]);
        let err = kendall_tau_b(&flat, &r(&[1.0, 2.0, 3.0])).unwrap_err();
        assert!(matches!(err, Error::UndefinedMetric(_)));
    }
}
