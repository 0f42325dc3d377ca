//! Multinomial stick-breaking transforms.
//!
//! A K-category probability vector π is factorized into K−1 sequential
//! binary "sticks" π̃_k, each reparametrised through the logistic function
//! of a latent value ψ_k. The last stick is 1 by construction, so a row of
//! K−1 latent values determines a full probability vector.

use thiserror::Error;

/// Latent values are clamped to ±PSI_CLAMP before exponentiation. The
/// induced probability error is below 1e-15 while overflow becomes
/// impossible.
pub const PSI_CLAMP: f64 = 35.0;

#[derive(Debug, Error, PartialEq)]
pub enum StickError {
    #[error("probability vector must sum to 1 (got {0})")]
    NotNormalized(f64),
    #[error("probability at index {0} is not strictly positive")]
    NonPositive(usize),
    #[error("allocation row must be one-hot")]
    NotOneHot,
    #[error("allocation row has length {z}, expected {k}")]
    LengthMismatch { z: usize, k: usize },
}

#[inline]
fn clamp(psi: f64) -> f64 {
    psi.clamp(-PSI_CLAMP, PSI_CLAMP)
}

/// log σ(x), evaluated without overflow for any finite x.
#[inline]
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Log allocation probabilities for one area: log π_k from the K−1 latent
/// stick values.
pub fn log_psi_to_probs(psi_row: &[f64]) -> Vec<f64> {
    let k = psi_row.len() + 1;
    let mut out = Vec::with_capacity(k);
    // log π_k = log σ(ψ_k) + Σ_{k'<k} log(1−σ(ψ_k')), with log(1−σ(x)) = log σ(−x).
    let mut log_remaining = 0.0;
    for &psi in psi_row {
        let psi = clamp(psi);
        out.push(log_sigmoid(psi) + log_remaining);
        log_remaining += log_sigmoid(-psi);
    }
    out.push(log_remaining);
    out
}

/// Allocation probabilities π (length K) from K−1 latent stick values.
pub fn psi_to_probs(psi_row: &[f64]) -> Vec<f64> {
    log_psi_to_probs(psi_row).iter().map(|lp| lp.exp()).collect()
}

/// Inverse transform: recover the K−1 latent stick values from a strictly
/// positive probability vector summing to 1.
pub fn probs_to_psi(pi: &[f64]) -> Result<Vec<f64>, StickError> {
    for (k, &p) in pi.iter().enumerate() {
        if p.is_nan() || p <= 0.0 {
            return Err(StickError::NonPositive(k));
        }
    }
    let total: f64 = pi.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(StickError::NotNormalized(total));
    }
    // π̃_k = π_k / tail_k with tail_k = Σ_{k'>=k} π_k', hence
    // logit(π̃_k) = ln π_k − ln tail_{k+1}; suffix sums keep the
    // subtraction-free form accurate even for saturated sticks.
    let kk = pi.len();
    let mut tail = vec![0.0; kk + 1];
    for k in (0..kk).rev() {
        tail[k] = tail[k + 1] + pi[k];
    }
    Ok((0..kk - 1).map(|k| pi[k].ln() - tail[k + 1].ln()).collect())
}

/// Stick indicators N_k for a one-hot allocation row: N_k = 1 exactly when
/// the area was not assigned to any of the clusters before k.
pub fn stick_counts(z_row: &[u8]) -> Result<Vec<u8>, StickError> {
    let label = one_hot_label(z_row)?;
    let k = z_row.len();
    Ok((0..k - 1).map(|s| u8::from(label >= s)).collect())
}

/// Index of the single 1 in a one-hot row.
pub fn one_hot_label(z_row: &[u8]) -> Result<usize, StickError> {
    let mut label = None;
    for (k, &z) in z_row.iter().enumerate() {
        match z {
            0 => {}
            1 => {
                if label.replace(k).is_some() {
                    return Err(StickError::NotOneHot);
                }
            }
            _ => return Err(StickError::NotOneHot),
        }
    }
    label.ok_or(StickError::NotOneHot)
}

/// Log-likelihood of a one-hot allocation row under the stick-breaking
/// factorization; equals log π_{k*} for the assigned cluster k*.
pub fn multinomial_loglik(z_row: &[u8], psi_row: &[f64]) -> Result<f64, StickError> {
    let k = psi_row.len() + 1;
    if z_row.len() != k {
        return Err(StickError::LengthMismatch { z: z_row.len(), k });
    }
    let label = one_hot_label(z_row)?;
    Ok(label_loglik(label, psi_row))
}

/// Same as [`multinomial_loglik`] for a label in 0..K.
pub fn label_loglik(label: usize, psi_row: &[f64]) -> f64 {
    let mut ll = 0.0;
    for (s, &psi) in psi_row.iter().enumerate() {
        if label < s {
            break; // N_s = 0 from here on
        }
        let psi = clamp(psi);
        ll += if label == s {
            log_sigmoid(psi)
        } else {
            log_sigmoid(-psi)
        };
    }
    ll
}
