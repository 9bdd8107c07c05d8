//! Brute-force reference implementations used as test oracles. Nothing here
//! calls into the library's loss, label or split code.
#![allow(dead_code)]

use harris::TreeNode;
use rand::Rng;

/// Average ranks by counting: 1 + #smaller + (#equal others) / 2.
pub fn ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|x| {
            let smaller = v.iter().filter(|y| *y < x).count() as f64;
            let equal = v.iter().filter(|y| *y == x).count() as f64 - 1.0;
            1.0 + smaller + equal / 2.0
        })
        .collect()
}

/// (1 - rho) / 2 with rho from the textbook Pearson formula, 0.5 when either
/// side is constant. For tie-free inputs also cross-checked against the
/// rank-difference formula by [`spearman_rank_sum`].
pub fn spearman_loss(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let sab: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let saa: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let sbb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    if saa == 0.0 || sbb == 0.0 {
        return 0.5;
    }
    (1.0 - sab / (saa * sbb).sqrt()) / 2.0
}

/// Tie-free Spearman loss via 1 - 6 sum d^2 / (k (k^2 - 1)).
pub fn spearman_rank_sum(a: &[f64], b: &[f64]) -> f64 {
    let k = a.len() as f64;
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let rho = 1.0 - 6.0 * d2 / (k * (k * k - 1.0));
    (1.0 - rho) / 2.0
}

/// Kendall tau-b from explicit pair classification; `None` if a side is all
/// ties.
pub fn kendall_tau_b(a: &[f64], b: &[f64]) -> Option<f64> {
    let (mut c, mut d, mut ta, mut tb) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut pairs = 0.0f64;
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            pairs += 1.0;
            let da = (a[i] - a[j]).signum() * (a[i] != a[j]) as i32 as f64;
            let db = (b[i] - b[j]).signum() * (b[i] != b[j]) as i32 as f64;
            if da == 0.0 {
                ta += 1.0;
            }
            if db == 0.0 {
                tb += 1.0;
            }
            if da * db > 0.0 {
                c += 1.0;
            } else if da * db < 0.0 {
                d += 1.0;
            }
        }
    }
    let denom = ((pairs - ta) * (pairs - tb)).sqrt();
    (denom > 0.0).then(|| (c - d) / denom)
}

pub fn mean_label(rows: &[&Vec<f64>]) -> Vec<f64> {
    let k = rows[0].len();
    (0..k)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / rows.len() as f64)
        .collect()
}

/// Borda: rank of the per-algorithm sum of member ranks.
pub fn borda(rows: &[&Vec<f64>]) -> Vec<f64> {
    let k = rows[0].len();
    let mut totals = vec![0.0; k];
    for r in rows {
        for (t, x) in totals.iter_mut().zip(ranks(r)) {
            *t += x;
        }
    }
    ranks(&totals)
}

pub fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64
}

/// Hybrid node loss written from the definition; a component with zero
/// weight is not evaluated.
pub fn node_loss(rows: &[&Vec<f64>], lambda: f64) -> f64 {
    let n = rows.len() as f64;
    let mut total = 0.0;
    if lambda > 0.0 {
        let cons = borda(rows);
        let rank_term = rows.iter().map(|r| spearman_loss(&ranks(r), &cons)).sum::<f64>() / n;
        total += lambda * rank_term;
    }
    if lambda < 1.0 {
        let mean = mean_label(rows);
        let reg_term = rows.iter().map(|r| mse(r, &mean)).sum::<f64>() / n;
        total += (1.0 - lambda) * reg_term;
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefSplit {
    pub feature: usize,
    pub split: f64,
    pub loss: f64,
}

/// Every (feature, midpoint) candidate scored from scratch, in enumeration
/// order (feature ascending, split point ascending).
pub fn all_splits(x: &[Vec<f64>], y: &[Vec<f64>], rows: &[usize], lambda: f64) -> Vec<RefSplit> {
    let p = x[0].len();
    let n = rows.len() as f64;
    let mut out = Vec::new();
    for f in 0..p {
        let mut vals: Vec<f64> = rows.iter().map(|&r| x[r][f]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let mut s = (w[0] + w[1]) / 2.0;
            if s >= w[1] {
                s = w[0];
            }
            let left: Vec<&Vec<f64>> = rows.iter().filter(|&&r| x[r][f] <= s).map(|&r| &y[r]).collect();
            let right: Vec<&Vec<f64>> = rows.iter().filter(|&&r| x[r][f] > s).map(|&r| &y[r]).collect();
            let loss = left.len() as f64 / n * node_loss(&left, lambda)
                + right.len() as f64 / n * node_loss(&right, lambda);
            out.push(RefSplit { feature: f, split: s, loss });
        }
    }
    out
}

/// First candidate whose loss is within `1e-9` (relative) of the minimum.
pub fn brute_force_best(x: &[Vec<f64>], y: &[Vec<f64>], rows: &[usize], lambda: f64) -> Option<RefSplit> {
    let all = all_splits(x, y, rows, lambda);
    let min = all.iter().map(|s| s.loss).fold(f64::INFINITY, f64::min);
    all.into_iter().find(|s| s.loss <= min + 1e-9 * min.abs().max(1.0))
}

/// Structure of a tree: pre-order list of `Some((feature, split))` for
/// internal nodes and `None` for leaves.
pub type Shape = Vec<Option<(usize, f64)>>;

pub fn shape(tree: &TreeNode) -> Shape {
    fn walk(t: &TreeNode, out: &mut Shape) {
        match t {
            TreeNode::Leaf { .. } => out.push(None),
            TreeNode::Internal { feature, split, left, right } => {
                out.push(Some((*feature, *split)));
                walk(left, out);
                walk(right, out);
            }
        }
    }
    let mut out = Vec::new();
    walk(tree, &mut out);
    out
}

/// Reference tree using only the brute-force split oracle, with the same
/// stopping rules (depth, fewer than two rows, zero loss, no split).
pub fn reference_tree(x: &[Vec<f64>], y: &[Vec<f64>], rows: &[usize], lambda: f64, max_depth: usize) -> Shape {
    fn grow(x: &[Vec<f64>], y: &[Vec<f64>], rows: &[usize], lambda: f64, depth: usize, max: usize, out: &mut Shape) {
        let members: Vec<&Vec<f64>> = rows.iter().map(|&r| &y[r]).collect();
        if depth >= max || rows.len() < 2 || node_loss(&members, lambda) <= 1e-12 {
            out.push(None);
            return;
        }
        match brute_force_best(x, y, rows, lambda) {
            None => out.push(None),
            Some(s) => {
                out.push(Some((s.feature, s.split)));
                let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x[i][s.feature] <= s.split);
                grow(x, y, &l, lambda, depth + 1, max, out);
                grow(x, y, &r, lambda, depth + 1, max, out);
            }
        }
    }
    let mut out = Vec::new();
    grow(x, y, rows, lambda, 0, max_depth, &mut out);
    out
}

/// Random dataset with coarse feature values and small-integer costs, so
/// that duplicate values and tied rankings are common.
pub fn random_dataset<R: Rng>(rng: &mut R, n: usize, p: usize, k: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let x = (0..n)
        .map(|_| (0..p).map(|_| rng.gen_range(0..6) as f64 * 0.5).collect())
        .collect();
    let y = (0..n)
        .map(|_| (0..k).map(|_| rng.gen_range(0..5) as f64 / 4.0).collect())
        .collect();
    (x, y)
}

/// Heap's algorithm.
pub fn permutations(k: usize) -> Vec<Vec<f64>> {
    fn heap(n: usize, a: &mut Vec<f64>, out: &mut Vec<Vec<f64>>) {
        if n <= 1 {
            out.push(a.clone());
            return;
        }
        for i in 0..n - 1 {
            heap(n - 1, a, out);
            if n % 2 == 0 {
                a.swap(i, n - 1);
            } else {
                a.swap(0, n - 1);
            }
        }
        heap(n - 1, a, out);
    }
    let mut a: Vec<f64> = (1..=k).map(|i| i as f64).collect();
    let mut out = Vec::new();
    heap(k, &mut a, &mut out);
    out
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

/// Library metrics against the brute-force oracles: every pair of
/// permutations for k <= 5, every permutation against 20 random ones for
/// k = 6, and `tied` random tied vectors per k in 2..=8.
pub fn check_metric_oracles(seed: u64, tied: usize) -> Result<usize, String> {
    use harris::losses::{kendall_tau_b as lib_tau, rank_vector, spearman_loss as lib_spearman};
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut checked = 0usize;
    let mut compare = |a: &[f64], b: &[f64], tie_free: bool| -> Result<(), String> {
        let (ra, rb) = (rank_vector(a), rank_vector(b));
        if ra.ranks() != ranks(a).as_slice() {
            return Err(format!("rank_vector({a:?}) = {:?}", ra.ranks()));
        }
        let got = lib_spearman(&ra, &rb).map_err(|e| e.to_string())?;
        let want = spearman_loss(&ranks(a), &ranks(b));
        if !close(got, want, 1e-12) {
            return Err(format!("spearman {a:?} {b:?}: {got} vs {want}"));
        }
        if tie_free && !close(got, spearman_rank_sum(&ranks(a), &ranks(b)), 1e-12) {
            return Err(format!("spearman rank-sum {a:?} {b:?}"));
        }
        match (lib_tau(&ra, &rb), kendall_tau_b(a, b)) {
            (Ok(g), Some(w)) if close(g, w, 1e-12) => {}
            (Err(_), None) => {}
            (g, w) => return Err(format!("tau-b {a:?} {b:?}: {g:?} vs {w:?}")),
        }
        checked += 1;
        Ok(())
    };
    for k in 2..=5 {
        let perms = permutations(k);
        for a in &perms {
            for b in &perms {
                compare(a, b, true)?;
            }
        }
    }
    let perms6 = permutations(6);
    for a in &perms6 {
        for _ in 0..20 {
            let b = &perms6[rng.gen_range(0..perms6.len())];
            compare(a, b, true)?;
        }
    }
    for k in 2..=8 {
        for _ in 0..tied {
            let a: Vec<f64> = (0..k).map(|_| rng.gen_range(0..3) as f64).collect();
            let b: Vec<f64> = (0..k).map(|_| rng.gen_range(0..3) as f64).collect();
            compare(&a, &b, false)?;
        }
    }
    Ok(checked)
}

/// `best_split` against [`brute_force_best`] on random datasets with
/// n <= 20, p <= 3, k <= 4 for each lambda in {0, 0.3, 0.7, 1}.
pub fn check_split_oracle(seed: u64, datasets: usize) -> Result<usize, String> {
    use harris::tree::best_split;
    use harris::HybridLoss;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut checked = 0;
    for d in 0..datasets {
        let n = rng.gen_range(2..=20);
        let p = rng.gen_range(1..=3);
        let k = rng.gen_range(2..=4);
        let (x, y) = random_dataset(&mut rng, n, p, k);
        let rows: Vec<usize> = (0..n).collect();
        let all: Vec<usize> = (0..p).collect();
        for lambda in [0.0, 0.3, 0.7, 1.0] {
            let got = best_split(&x, &y, &rows, HybridLoss::new(lambda).unwrap(), &all)
                .map_err(|e| e.to_string())?;
            let want = brute_force_best(&x, &y, &rows, lambda);
            match (got, want) {
                (None, None) => {}
                (Some(g), Some(w))
                    if g.feature == w.feature && g.split == w.split && close(g.loss, w.loss, 1e-9) => {}
                (g, w) => return Err(format!("dataset {d}, lambda {lambda}: {g:?} vs {w:?}")),
            }
            checked += 1;
        }
    }
    Ok(checked)
}

/// Trees grown at lambda = 0 and 1 have the same shape as reference trees
/// grown with pure MSE and pure Spearman node losses.
pub fn check_lambda_endpoints(seed: u64, fixtures: usize) -> Result<usize, String> {
    use harris::tree::{build_tree, TreeConfig};
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for i in 0..fixtures {
        let n = rng.gen_range(4..=30);
        let p = rng.gen_range(1..=3);
        let k = rng.gen_range(2..=4);
        let depth = rng.gen_range(1..=4);
        let (x, y) = random_dataset(&mut rng, n, p, k);
        let rows: Vec<usize> = (0..n).collect();
        for lambda in [0.0, 1.0] {
            let cfg = TreeConfig::new(lambda, depth).unwrap();
            let tree = build_tree(&x, &y, &rows, &cfg, &mut rng).map_err(|e| e.to_string())?;
            let want = reference_tree(&x, &y, &rows, lambda, depth);
            if shape(&tree) != want {
                return Err(format!("fixture {i}, lambda {lambda}: {:?} vs {want:?}", shape(&tree)));
            }
        }
    }
    Ok(fixtures)
}

/// node_loss is affine in lambda: L(0.5) = (L(0) + L(1)) / 2, and the
/// endpoints equal the pure components.
pub fn check_affine_lambda(seed: u64, nodes: usize) -> Result<usize, String> {
    use harris::losses::node_loss as lib_node_loss;
    use harris::{HybridLoss, NodeLabels};
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for i in 0..nodes {
        let n = rng.gen_range(1..=12);
        let k = rng.gen_range(2..=5);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..k).map(|_| rng.gen::<f64>()).collect()).collect();
        let labels = NodeLabels::compute(&rows).map_err(|e| e.to_string())?;
        let at = |l: f64| lib_node_loss(&rows, &labels.regression, &labels.ranking, HybridLoss::new(l).unwrap()).unwrap();
        let (l0, lh, l1) = (at(0.0), at(0.5), at(1.0));
        let refs: Vec<&Vec<f64>> = rows.iter().collect();
        if !close(lh, 0.5 * l0 + 0.5 * l1, 1e-12)
            || !close(l0, node_loss(&refs, 0.0), 1e-12)
            || !close(l1, node_loss(&refs, 1.0), 1e-12)
        {
            return Err(format!("node {i}: {l0} {lh} {l1}"));
        }
    }
    Ok(nodes)
}
