//! Post-processing of posterior draws: label-switching repair, point and
//! interval summaries, exceedance probabilities, model selection and
//! clustering metrics.

use crate::sampler::PosteriorDraws;
use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PostError {
    #[error("need at least {need} draws, got {got}")]
    TooFewDraws { need: usize, got: usize },
    #[error("interval level must be in (0,1), got {0}")]
    BadLevel(f64),
    #[error("partitions have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least two areas")]
    TooFewAreas,
}

/// Draws after label-switching repair, with the permutation applied to
/// each draw. Applying `undo[m]` to draw m recovers the raw draw exactly.
#[derive(Debug, Clone)]
pub struct RelabelledDraws {
    pub draws: PosteriorDraws,
    /// Permutation applied to draw m: new label = applied[m][old label].
    pub applied: Vec<Vec<usize>>,
    /// Inverse permutations; see [`apply_permutation`].
    pub undo: Vec<Vec<usize>>,
    /// Index of the pivot draw (maximum log-likelihood).
    pub pivot_index: usize,
}

/// Apply a label permutation (new = perm[old]) to one draw of a
/// [`PosteriorDraws`] bundle, remapping allocations, the cluster-indexed
/// parameter rows and the stick parameters.
pub fn apply_permutation(draws: &mut PosteriorDraws, m: usize, perm: &[usize]) {
    let k = draws.k;
    for z in draws.z[m].iter_mut() {
        *z = perm[*z];
    }
    let remap_rows = |mat: &DMatrix<f64>| {
        let mut out = mat.clone();
        for old in 0..k {
            for j in 0..mat.ncols() {
                out[(perm[old], j)] = mat[(old, j)];
            }
        }
        out
    };
    draws.mu[m] = remap_rows(&draws.mu[m]);
    draws.gamma[m] = remap_rows(&draws.gamma[m]);
    let mut delta = draws.delta[m].clone();
    for old in 0..k {
        delta[perm[old]] = draws.delta[m][old];
    }
    draws.delta[m] = delta;
    // The K−1 stick parameters are permuted through a virtual K-th slot:
    // the value displaced to the last position fills the slot's landing
    // spot. This keeps the map bijective on the real entries and makes the
    // inverse permutation an exact undo.
    let old_rho = &draws.rho[m];
    let mut ext: Vec<Option<f64>> = old_rho.iter().copied().map(Some).collect();
    ext.push(None);
    let mut new_ext: Vec<Option<f64>> = vec![None; k];
    for (old, value) in ext.into_iter().enumerate() {
        new_ext[perm[old]] = value;
    }
    let displaced = new_ext[k - 1];
    let mut new_rho: Vec<f64> = Vec::with_capacity(k - 1);
    for slot in new_ext[..k - 1].iter() {
        match slot {
            Some(v) => new_rho.push(*v),
            None => new_rho.push(displaced.expect("exactly one displaced value")),
        }
    }
    draws.rho[m] = new_rho;
}

/// Exact minimum-cost assignment on a square cost matrix (shortest
/// augmenting paths with potentials, O(K³)). Returns `assign` with
/// `assign[row] = column`.
pub fn min_cost_assignment(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    // 1-based potentials algorithm; way[j] remembers the augmenting path.
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1]; // column -> row
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![i64::MAX; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = i64::MAX;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    assign
}

fn invert_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0usize; perm.len()];
    for (old, &new) in perm.iter().enumerate() {
        inv[new] = old;
    }
    inv
}

/// Repair label switching: take the allocation vector of the draw with the
/// largest log-likelihood as the pivot, and permute every draw's labels to
/// minimize allocation disagreements with it (exact assignment on the
/// label-overlap matrix).
pub fn ecr_relabel(draws: &PosteriorDraws) -> RelabelledDraws {
    let k = draws.k;
    let m_total = draws.len();
    assert!(m_total > 0, "no draws to relabel");
    let pivot_index = draws
        .loglik
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    let pivot = draws.z[pivot_index].clone();
    let mut out = draws.clone();
    let mut applied = Vec::with_capacity(m_total);
    let mut undo = Vec::with_capacity(m_total);
    for m in 0..m_total {
        // overlap[a][b] = #{i : z_i = a, pivot_i = b}; sending a → b scores
        // overlap[a][b] agreements, so minimize the negated overlap.
        let mut cost = vec![vec![0i64; k]; k];
        for (z_i, p_i) in draws.z[m].iter().zip(pivot.iter()) {
            cost[*z_i][*p_i] -= 1;
        }
        let perm = min_cost_assignment(&cost);
        apply_permutation(&mut out, m, &perm);
        undo.push(invert_permutation(&perm));
        applied.push(perm);
    }
    RelabelledDraws {
        draws: out,
        applied,
        undo,
        pivot_index,
    }
}

/// Posterior mode of a scalar draw sequence: the argmax of a Gaussian
/// kernel density estimate with Silverman bandwidth, evaluated on a
/// 512-point grid spanning the draw range. Deterministic and robust; a
/// constant sequence returns that constant.
pub fn posterior_mode(draws: &[f64]) -> Result<f64, PostError> {
    if draws.len() < 100 {
        return Err(PostError::TooFewDraws {
            need: 100,
            got: draws.len(),
        });
    }
    let n = draws.len() as f64;
    let mut sorted = draws.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let lo = sorted[0];
    let hi = sorted[sorted.len() - 1];
    if hi == lo {
        return Ok(lo);
    }
    let mean = draws.iter().sum::<f64>() / n;
    let sd = (draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let q1 = sorted[(0.25 * (sorted.len() - 1) as f64).round() as usize];
    let q3 = sorted[(0.75 * (sorted.len() - 1) as f64).round() as usize];
    let iqr = q3 - q1;
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let h = (0.9 * spread * n.powf(-0.2)).max(1e-12 * (hi - lo));
    let grid_n = 512;
    let step = (hi - lo) / (grid_n - 1) as f64;
    let mut best_x = lo;
    let mut best_density = f64::NEG_INFINITY;
    for g in 0..grid_n {
        let x = lo + g as f64 * step;
        let mut acc = 0.0;
        for &v in draws {
            let t = (x - v) / h;
            acc += (-0.5 * t * t).exp();
        }
        if acc > best_density {
            best_density = acc;
            best_x = x;
        }
    }
    Ok(best_x)
}

/// Shortest interval containing ⌈level·M⌉ of the sorted draws.
pub fn hpd_interval(draws: &[f64], level: f64) -> Result<(f64, f64), PostError> {
    if !(level > 0.0 && level < 1.0) {
        return Err(PostError::BadLevel(level));
    }
    if draws.len() < 100 {
        return Err(PostError::TooFewDraws {
            need: 100,
            got: draws.len(),
        });
    }
    let mut sorted = draws.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let m = sorted.len();
    let window = ((level * m as f64).ceil() as usize).clamp(1, m);
    let mut best = (sorted[0], sorted[window - 1]);
    let mut best_width = best.1 - best.0;
    for start in 1..=(m - window) {
        let width = sorted[start + window - 1] - sorted[start];
        if width < best_width {
            best_width = width;
            best = (sorted[start], sorted[start + window - 1]);
        }
    }
    Ok(best)
}

/// Verdict of the exceedance rule: probability of a positive value at
/// least 0.95 flags an excess, at most 0.05 a deficit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Excess,
    Deficit,
    Neutral,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Excess => "excess",
            Verdict::Deficit => "deficit",
            Verdict::Neutral => "neutral",
        }
    }
}

/// Fraction of draws strictly above zero, with the 0.95/0.05 verdict.
pub fn exceedance_prob(draws: &[f64]) -> (f64, Verdict) {
    let positive = draws.iter().filter(|&&x| x > 0.0).count();
    let p = positive as f64 / draws.len().max(1) as f64;
    let verdict = if p >= 0.95 {
        Verdict::Excess
    } else if p <= 0.05 {
        Verdict::Deficit
    } else {
        Verdict::Neutral
    };
    (p, verdict)
}

/// Mixture-density deviance information criterion:
/// DIC₃ = −4·mean_m Σ_i log f(y_i|θ⁽ᵐ⁾) + 2·Σ_i log mean_m f(y_i|θ⁽ᵐ⁾),
/// computed from the stored per-draw per-area log mixture densities.
pub fn dic3(log_mix: &[Vec<f64>]) -> f64 {
    let m = log_mix.len();
    assert!(m > 0, "need stored mixture densities");
    let n = log_mix[0].len();
    let mean_total: f64 = log_mix
        .iter()
        .map(|row| row.iter().sum::<f64>())
        .sum::<f64>()
        / m as f64;
    let mut predictive = 0.0;
    for i in 0..n {
        let max = log_mix
            .iter()
            .map(|row| row[i])
            .fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = log_mix.iter().map(|row| (row[i] - max).exp()).sum();
        predictive += max + (sum / m as f64).ln();
    }
    -4.0 * mean_total + 2.0 * predictive
}

/// Rand index between two partitions: the fraction of area pairs that are
/// co-clustered in both or separated in both. Computed through the
/// contingency table in exact integer arithmetic.
pub fn rand_index(z_a: &[usize], z_b: &[usize]) -> Result<f64, PostError> {
    if z_a.len() != z_b.len() {
        return Err(PostError::LengthMismatch(z_a.len(), z_b.len()));
    }
    let n = z_a.len();
    if n < 2 {
        return Err(PostError::TooFewAreas);
    }
    let ka = z_a.iter().max().unwrap() + 1;
    let kb = z_b.iter().max().unwrap() + 1;
    let mut table = vec![vec![0u64; kb]; ka];
    let mut rows = vec![0u64; ka];
    let mut cols = vec![0u64; kb];
    for (&a, &b) in z_a.iter().zip(z_b.iter()) {
        table[a][b] += 1;
        rows[a] += 1;
        cols[b] += 1;
    }
    let choose2 = |x: u64| x * x.saturating_sub(1) / 2;
    let total = choose2(n as u64);
    let cells: u64 = table.iter().flatten().map(|&c| choose2(c)).sum();
    let row_pairs: u64 = rows.iter().map(|&c| choose2(c)).sum();
    let col_pairs: u64 = cols.iter().map(|&c| choose2(c)).sum();
    // agreements = both-together + both-apart.
    let agree = total + 2 * cells - row_pairs - col_pairs;
    Ok(agree as f64 / total as f64)
}

/// Pairwise co-clustering frequencies across draws: entry (i, i') is the
/// fraction of draws in which areas i and i' share a cluster.
pub fn coclustering_matrix(z_draws: &[Vec<usize>]) -> DMatrix<f64> {
    assert!(!z_draws.is_empty(), "need at least one draw");
    let n = z_draws[0].len();
    let mut counts = DMatrix::<f64>::zeros(n, n);
    for z in z_draws {
        for i in 0..n {
            for ip in (i + 1)..n {
                if z[i] == z[ip] {
                    counts[(i, ip)] += 1.0;
                }
            }
        }
    }
    let m = z_draws.len() as f64;
    let mut out = DMatrix::<f64>::identity(n, n);
    for i in 0..n {
        for ip in (i + 1)..n {
            let v = counts[(i, ip)] / m;
            out[(i, ip)] = v;
            out[(ip, i)] = v;
        }
    }
    out
}

/// Modal cluster label per area across (relabelled) draws; ties break
/// toward the smaller label.
pub fn point_partition(z_draws: &[Vec<usize>], k: usize) -> Vec<usize> {
    assert!(!z_draws.is_empty(), "need at least one draw");
    let n = z_draws[0].len();
    let mut labels = vec![0usize; n];
    for i in 0..n {
        let mut counts = vec![0usize; k];
        for z in z_draws {
            counts[z[i]] += 1;
        }
        let mut best = 0;
        for kk in 1..k {
            if counts[kk] > counts[best] {
                best = kk;
            }
        }
        labels[i] = best;
    }
    labels
}

/// One row of a posterior summary table.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub param: String,
    pub mode: f64,
    pub hpd_low: f64,
    pub hpd_high: f64,
    pub pr_exceed: f64,
    pub verdict: Verdict,
}

/// Mode, HPD interval and exceedance verdict for one scalar stream.
pub fn summarize_scalar(param: &str, draws: &[f64], level: f64) -> Result<SummaryRow, PostError> {
    let mode = posterior_mode(draws)?;
    let (hpd_low, hpd_high) = hpd_interval(draws, level)?;
    let (pr_exceed, verdict) = exceedance_prob(draws);
    Ok(SummaryRow {
        param: param.to_string(),
        mode,
        hpd_low,
        hpd_high,
        pr_exceed,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn assignment_matches_exhaustive_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 2..=6usize {
            for _ in 0..50 {
                let cost: Vec<Vec<i64>> = (0..n)
                    .map(|_| (0..n).map(|_| rng.random_range(-50..50)).collect())
                    .collect();
                let assign = min_cost_assignment(&cost);
                let total: i64 = assign.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
                // brute force over permutations
                let mut perm: Vec<usize> = (0..n).collect();
                let mut best = i64::MAX;
                permute(&mut perm, 0, &mut |p| {
                    let t: i64 = p.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
                    best = best.min(t);
                });
                assert_eq!(total, best, "n={n} cost={cost:?}");
            }
        }
    }

    fn permute(perm: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
        if k == perm.len() {
            f(perm);
            return;
        }
        for i in k..perm.len() {
            perm.swap(k, i);
            permute(perm, k + 1, f);
            perm.swap(k, i);
        }
    }

    #[test]
    fn mode_of_constant_and_bimodal() {
        let constant = vec![2.5; 200];
        assert_eq!(posterior_mode(&constant).unwrap(), 2.5);
        // 70% mass near 1, 30% near 5.
        let mut draws = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for i in 0..1000 {
            let center = if i < 700 { 1.0 } else { 5.0 };
            draws.push(center + 0.1 * (rng.random::<f64>() - 0.5));
        }
        let mode = posterior_mode(&draws).unwrap();
        assert!((mode - 1.0).abs() < 0.2, "mode {mode}");
        assert!(posterior_mode(&[1.0; 10]).is_err());
    }

    #[test]
    fn mode_tracks_median_for_symmetric_samples() {
        // Symmetric unimodal sample with a sharp peak (Laplace): the KDE
        // mode concentrates tightly at the center, so agreement with the
        // sample median within two grid cells is expected.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws: Vec<f64> = (0..20_000)
            .map(|_| {
                let u: f64 = rng.random::<f64>() - 0.5;
                -u.signum() * (1.0 - 2.0 * u.abs()).ln()
            })
            .collect();
        let mut sorted = draws.clone();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let median = sorted[draws.len() / 2];
        let mode = posterior_mode(&draws).unwrap();
        let grid_cell = (sorted[sorted.len() - 1] - sorted[0]) / 511.0;
        assert!(
            (mode - median).abs() <= 2.0 * grid_cell,
            "mode {mode} vs median {median} (cell {grid_cell})"
        );
    }

    #[test]
    fn hpd_examples() {
        let grid: Vec<f64> = (0..1000).map(|i| i as f64 / 999.0).collect();
        let (lo, hi) = hpd_interval(&grid, 0.95).unwrap();
        assert!(((hi - lo) - 0.95).abs() < 0.01);
        let point = vec![3.0; 150];
        assert_eq!(hpd_interval(&point, 0.95).unwrap(), (3.0, 3.0));
        assert!(hpd_interval(&grid, 1.5).is_err());
    }

    #[test]
    fn hpd_matches_normal_quantiles() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let draws: Vec<f64> = (0..100_000)
            .map(|_| {
                let u: f64 = rng.random();
                let v: f64 = rng.random();
                (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
            })
            .collect();
        let (lo, hi) = hpd_interval(&draws, 0.95).unwrap();
        assert!((lo + 1.96).abs() < 0.05, "low {lo}");
        assert!((hi - 1.96).abs() < 0.05, "high {hi}");
    }

    #[test]
    fn hpd_width_shrinks_with_level() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let draws: Vec<f64> = (0..5000).map(|_| rng.random::<f64>().powi(2)).collect();
        let mut last = f64::INFINITY;
        for level in [0.99, 0.95, 0.9, 0.5, 0.1] {
            let (lo, hi) = hpd_interval(&draws, level).unwrap();
            assert!(hi - lo <= last + 1e-12);
            last = hi - lo;
        }
    }

    #[test]
    fn exceedance_counting() {
        let (p, v) = exceedance_prob(&[0.5, -0.2, 0.3, 0.1]);
        assert_abs_diff_eq!(p, 0.75);
        assert_eq!(v, Verdict::Neutral);
        assert_eq!(exceedance_prob(&[1.0, 2.0]).1, Verdict::Excess);
        assert_eq!(exceedance_prob(&[-1.0, -2.0]).1, Verdict::Deficit);
    }

    #[test]
    fn dic3_small_cases() {
        // Single draw: both terms coincide, DIC₃ = −2·Σ log f.
        let single = vec![vec![-1.0, -2.0, -0.5]];
        assert_abs_diff_eq!(dic3(&single), -2.0 * (-3.5), epsilon = 1e-12);
        // Duplicated draw changes nothing.
        let double = vec![vec![-1.0, -2.0, -0.5], vec![-1.0, -2.0, -0.5]];
        assert_abs_diff_eq!(dic3(&double), dic3(&single), epsilon = 1e-12);
        // Hand-computed 2-draw, 3-area instance.
        let rows = vec![vec![-1.0, -0.5, -2.0], vec![-1.5, -0.7, -1.0]];
        let mean_total = ((-3.5) + (-3.2)) / 2.0;
        let mut predictive = 0.0;
        for i in 0..3 {
            let a: f64 = rows[0][i];
            let b: f64 = rows[1][i];
            predictive += ((a.exp() + b.exp()) / 2.0).ln();
        }
        assert_abs_diff_eq!(
            dic3(&rows),
            -4.0 * mean_total + 2.0 * predictive,
            epsilon = 1e-12
        );
    }

    #[test]
    fn rand_index_examples() {
        assert_abs_diff_eq!(rand_index(&[0, 0, 1, 1], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_abs_diff_eq!(rand_index(&[0, 0, 0], &[0, 1, 2]).unwrap(), 0.0);
        assert!(rand_index(&[0], &[0]).is_err());
        assert!(rand_index(&[0, 1], &[0]).is_err());
    }

    #[test]
    fn rand_index_matches_pair_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let n = 8;
            let a: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
            let b: Vec<usize> = (0..n).map(|_| rng.random_range(0..4)).collect();
            let mut agree = 0;
            let mut total = 0;
            for i in 0..n {
                for j in (i + 1)..n {
                    total += 1;
                    let together_a = a[i] == a[j];
                    let together_b = b[i] == b[j];
                    if together_a == together_b {
                        agree += 1;
                    }
                }
            }
            let oracle = agree as f64 / total as f64;
            assert_abs_diff_eq!(rand_index(&a, &b).unwrap(), oracle, epsilon = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn rand_index_symmetric_and_relabel_invariant(
            a in proptest::collection::vec(0usize..4, 5..20),
        ) {
            let n = a.len();
            let b: Vec<usize> = (0..n).map(|i| (i * 7 + 3) % 3).collect();
            let r1 = rand_index(&a, &b).unwrap();
            let r2 = rand_index(&b, &a).unwrap();
            prop_assert!((r1 - r2).abs() < 1e-15);
            // Relabel a by swapping 0 and 3.
            let a_swapped: Vec<usize> = a.iter().map(|&l| match l { 0 => 3, 3 => 0, x => x }).collect();
            let r3 = rand_index(&a_swapped, &b).unwrap();
            prop_assert!((r1 - r3).abs() < 1e-15);
        }

        #[test]
        fn exceedance_complement(draws in proptest::collection::vec(-2.0f64..2.0, 1..50)) {
            let (p, _) = exceedance_prob(&draws);
            let negated: Vec<f64> = draws.iter().map(|x| -x).collect();
            let (q, _) = exceedance_prob(&negated);
            let zeros = draws.iter().filter(|&&x| x == 0.0).count() as f64 / draws.len() as f64;
            prop_assert!((p + q + zeros - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn coclustering_counts() {
        let draws = vec![vec![0, 0, 1], vec![0, 1, 1]];
        let m = coclustering_matrix(&draws);
        assert_abs_diff_eq!(m[(0, 1)], 0.5);
        assert_abs_diff_eq!(m[(1, 2)], 0.5);
        assert_abs_diff_eq!(m[(0, 2)], 0.0);
        for i in 0..3 {
            assert_abs_diff_eq!(m[(i, i)], 1.0);
        }
        let single = coclustering_matrix(&[vec![0, 1, 0]]);
        assert_abs_diff_eq!(single[(0, 2)], 1.0);
        assert_abs_diff_eq!(single[(0, 1)], 0.0);
    }

    #[test]
    fn point_partition_mode_and_ties() {
        let draws = vec![vec![1, 0], vec![1, 0], vec![2, 1]];
        assert_eq!(point_partition(&draws, 3), vec![1, 0]);
        // Tie 0 vs 1 at area 0 resolves to the smaller label.
        let tied = vec![vec![1, 0], vec![0, 0]];
        assert_eq!(point_partition(&tied, 2), vec![0, 0]);
    }

    fn toy_draws(k: usize, z: Vec<Vec<usize>>, loglik: Vec<f64>) -> PosteriorDraws {
        let m = z.len();
        let n = z[0].len();
        let d = 2;
        PosteriorDraws {
            n,
            k,
            d,
            p: 0,
            chains: 1,
            kept_per_chain: m,
            chain_iter: (0..m).map(|i| (0, i as u32 + 1)).collect(),
            mu: (0..m)
                .map(|i| DMatrix::from_fn(k, d, |r, c| (r * d + c) as f64 + i as f64 * 0.001))
                .collect(),
            beta: vec![DMatrix::zeros(0, d); m],
            sigma: vec![DMatrix::identity(d, d); m],
            rho: vec![(1..k).map(|s| 0.1 * s as f64 + 0.05).collect(); m],
            phi: vec![1.0; m],
            zeta: vec![vec![1.0; d]; m],
            delta: (0..m)
                .map(|i| (0..k).map(|r| 1.0 + r as f64 + i as f64 * 0.01).collect())
                .collect(),
            gamma: (0..m)
                .map(|_| DMatrix::from_fn(k, d, |r, c| (r * d + c + 1) as f64))
                .collect(),
            loglik,
            log_mix: vec![vec![-1.0; n]; m],
            rho_accept: vec![0.0],
            z,
        }
    }

    #[test]
    fn ecr_identity_on_aligned_chain() {
        let z = vec![vec![0, 1, 2, 0], vec![0, 1, 2, 0], vec![0, 1, 2, 1]];
        let draws = toy_draws(3, z.clone(), vec![-5.0, -4.0, -6.0]);
        let relabelled = ecr_relabel(&draws);
        assert_eq!(relabelled.pivot_index, 1);
        for perm in &relabelled.applied {
            assert_eq!(perm, &vec![0, 1, 2]);
        }
        assert_eq!(relabelled.draws.z, z);
    }

    #[test]
    fn ecr_inverts_injected_permutation() {
        // Half the draws carry a known permutation; relabelling must undo
        // exactly that permutation on them and leave the rest alone.
        let base = vec![0usize, 1, 2, 0, 1, 2, 0, 1];
        let inject = vec![2usize, 0, 1]; // old -> new
        let mut z = Vec::new();
        for m in 0..6 {
            if m % 2 == 0 {
                z.push(base.clone());
            } else {
                z.push(base.iter().map(|&l| inject[l]).collect());
            }
        }
        let draws = toy_draws(3, z, vec![-1.0, -2.0, -2.0, -2.0, -2.0, -2.0]);
        let relabelled = ecr_relabel(&draws);
        for m in 0..6 {
            assert_eq!(relabelled.draws.z[m], base, "draw {m}");
            if m % 2 == 1 {
                // Applied permutation is the inverse of the injected one.
                assert_eq!(relabelled.applied[m], invert_permutation(&inject));
            }
        }
    }

    #[test]
    fn ecr_undo_recovers_raw_draws() {
        let z = vec![
            vec![0, 1, 2, 0],
            vec![2, 0, 1, 2],
            vec![1, 2, 0, 1],
            vec![0, 2, 1, 0],
        ];
        let draws = toy_draws(3, z, vec![-3.0, -1.0, -2.0, -4.0]);
        let relabelled = ecr_relabel(&draws);
        let mut restored = relabelled.draws.clone();
        for m in 0..restored.len() {
            apply_permutation(&mut restored, m, &relabelled.undo[m]);
            assert_eq!(restored.z[m], draws.z[m]);
            assert_eq!(restored.mu[m], draws.mu[m]);
            assert_eq!(restored.delta[m], draws.delta[m]);
            assert_eq!(restored.gamma[m], draws.gamma[m]);
            assert_eq!(restored.rho[m], draws.rho[m]);
        }
    }

    #[test]
    fn rho_permutation_is_bijective_on_entries() {
        // The virtual-slot rule must keep the K−1 stick values as a set
        // whenever the permutation displaces one of them.
        let z = vec![vec![0, 1, 2, 3]];
        let mut draws = toy_draws(4, z, vec![-1.0]);
        draws.rho[0] = vec![0.2, 0.5, 0.8];
        let before = draws.rho[0].clone();
        apply_permutation(&mut draws, 0, &[3, 0, 2, 1]);
        let mut after = draws.rho[0].clone();
        after.sort_by(|a, b| a.total_cmp(b));
        let mut sorted_before = before;
        sorted_before.sort_by(|a, b| a.total_cmp(b));
        assert_eq!(after, sorted_before);
    }
}
