//! Seeded Lloyd's k-means with random restarts.
//!
//! Used both as the comparison baseline in the simulation studies and as
//! the warm start for the MCMC allocations.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Cluster the rows of `y` into `k` groups; returns one label per row.
/// Runs `restarts` seeded random initializations and keeps the labeling
/// with the smallest within-cluster sum of squares.
pub fn kmeans(y: &DMatrix<f64>, k: usize, restarts: usize, seed: u64) -> Vec<usize> {
    let n = y.nrows();
    assert!(k >= 1 && k <= n, "k must be in 1..=n");
    if k == 1 {
        return vec![0; n];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best_labels = vec![0; n];
    let mut best_wcss = f64::INFINITY;
    for _ in 0..restarts.max(1) {
        let (labels, wcss) = lloyd_once(y, k, &mut rng);
        if wcss < best_wcss {
            best_wcss = wcss;
            best_labels = labels;
        }
    }
    best_labels
}

fn lloyd_once(y: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> (Vec<usize>, f64) {
    let n = y.nrows();
    let d = y.ncols();
    // Initialize centroids at k distinct random rows.
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let mut centroids: Vec<Vec<f64>> = idx[..k]
        .iter()
        .map(|&i| y.row(i).iter().copied().collect())
        .collect();
    let mut labels = vec![0usize; n];
    for _ in 0..100 {
        let mut changed = false;
        for i in 0..n {
            let mut best = 0;
            let mut best_dist = f64::INFINITY;
            for (c, cent) in centroids.iter().enumerate() {
                let dist: f64 = (0..d).map(|j| (y[(i, j)] - cent[j]).powi(2)).sum();
                if dist < best_dist {
                    best_dist = dist;
                    best = c;
                }
            }
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        let mut counts = vec![0usize; k];
        let mut sums = vec![vec![0.0; d]; k];
        for i in 0..n {
            counts[labels[i]] += 1;
            for j in 0..d {
                sums[labels[i]][j] += y[(i, j)];
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for j in 0..d {
                    centroids[c][j] = sums[c][j] / counts[c] as f64;
                }
            }
            // Empty clusters keep their centroid; a later restart covers it.
        }
        if !changed {
            break;
        }
    }
    let wcss: f64 = (0..n)
        .map(|i| {
            (0..d)
                .map(|j| (y[(i, j)] - centroids[labels[i]][j]).powi(2))
                .sum::<f64>()
        })
        .sum();
    (labels, wcss)
}
