//! Shrinkage-prior configurations and their Gibbs updates, plus the prior
//! on the CAR propriety parameter ρ.
//!
//! Every cluster/outcome intercept μ_kj is zero-centred Gaussian with a
//! variance that multiplies a subset of four half-Cauchy-squared factors: a
//! global φ, an outcome-level ζ_j, a cluster-level δ_k and an entrywise
//! γ_kj. The half-Cauchy scale mixture turns all of them into chained
//! inverse-gamma draws through one augmented scale per factor.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use statrs::distribution::{Beta, Continuous};
use thiserror::Error;

/// Variance of μ_kj under the flat alternative (no shrinkage).
pub const NONINFORMATIVE_VARIANCE: f64 = 10.0;

#[derive(Debug, Error, PartialEq)]
pub enum PriorError {
    #[error("unknown shrinkage code '{0}' (use none|d|c|cd|c_d|d_cd)")]
    UnknownVariant(String),
    #[error("rho must lie strictly inside (0,1), got {0}")]
    RhoOutOfRange(f64),
    #[error("unknown rho mode '{0}' (use fixed|spike_slab)")]
    UnknownRhoMode(String),
}

/// Which shrinkage factors multiply into the prior variance of μ_kj.
/// The global factor φ is part of every shrinkage variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShrinkageVariant {
    /// Flat N(0, 10) prior, no shrinkage machinery.
    Noninformative,
    /// φζ_j — outcome-level shrinkage only.
    Zeta,
    /// φδ_k — cluster-level shrinkage only.
    Delta,
    /// φγ_kj — entrywise (horseshoe) shrinkage.
    Gamma,
    /// φζ_jδ_k — separable outcome and cluster shrinkage.
    ZetaDelta,
    /// φζ_jγ_kj — outcome shrinkage with entrywise refinement.
    ZetaGamma,
}

impl ShrinkageVariant {
    /// Parse the configuration code.
    pub fn from_code(code: &str) -> Result<Self, PriorError> {
        Ok(match code {
            "none" => Self::Noninformative,
            "d" => Self::Zeta,
            "c" => Self::Delta,
            "cd" => Self::Gamma,
            "c_d" => Self::ZetaDelta,
            "d_cd" => Self::ZetaGamma,
            other => return Err(PriorError::UnknownVariant(other.to_string())),
        })
    }

    pub fn code(&self) -> &'static str {
        match self {
            Self::Noninformative => "none",
            Self::Zeta => "d",
            Self::Delta => "c",
            Self::Gamma => "cd",
            Self::ZetaDelta => "c_d",
            Self::ZetaGamma => "d_cd",
        }
    }

    pub fn uses_phi(&self) -> bool {
        !matches!(self, Self::Noninformative)
    }

    pub fn uses_zeta(&self) -> bool {
        matches!(self, Self::Zeta | Self::ZetaDelta | Self::ZetaGamma)
    }

    pub fn uses_delta(&self) -> bool {
        matches!(self, Self::Delta | Self::ZetaDelta)
    }

    pub fn uses_gamma(&self) -> bool {
        matches!(self, Self::Gamma | Self::ZetaGamma)
    }
}

/// Current values of the shrinkage factors and their augmented
/// inverse-gamma scales. Inactive blocks stay pinned at exactly 1 so the
/// prior variance is a plain product for every variant.
#[derive(Debug, Clone, PartialEq)]
pub struct ShrinkageState {
    pub phi: f64,
    pub zeta: Vec<f64>,
    pub delta: Vec<f64>,
    pub gamma: DMatrix<f64>,
    pub alpha_phi: f64,
    pub alpha_zeta: Vec<f64>,
    pub alpha_delta: Vec<f64>,
    pub alpha_gamma: DMatrix<f64>,
}

impl ShrinkageState {
    /// All factors and scales initialized to 1.
    pub fn ones(k: usize, d: usize) -> Self {
        ShrinkageState {
            phi: 1.0,
            zeta: vec![1.0; d],
            delta: vec![1.0; k],
            gamma: DMatrix::from_element(k, d, 1.0),
            alpha_phi: 1.0,
            alpha_zeta: vec![1.0; d],
            alpha_delta: vec![1.0; k],
            alpha_gamma: DMatrix::from_element(k, d, 1.0),
        }
    }

    /// Product of the active local factors at (k, j), excluding φ and ζ.
    fn local(&self, variant: ShrinkageVariant, k: usize, j: usize) -> f64 {
        if variant.uses_gamma() {
            self.gamma[(k, j)]
        } else if variant.uses_delta() {
            self.delta[k]
        } else {
            1.0
        }
    }
}

/// Prior variance of μ_kj under the given variant: the product of the
/// active factors, or the fixed noninformative constant.
pub fn prior_variance(s: &ShrinkageState, variant: ShrinkageVariant, k: usize, j: usize) -> f64 {
    prior_variance_with(s, variant, k, j, NONINFORMATIVE_VARIANCE)
}

/// [`prior_variance`] with a configurable noninformative constant.
pub fn prior_variance_with(
    s: &ShrinkageState,
    variant: ShrinkageVariant,
    k: usize,
    j: usize,
    noninformative: f64,
) -> f64 {
    if !variant.uses_phi() {
        return noninformative;
    }
    let zeta = if variant.uses_zeta() { s.zeta[j] } else { 1.0 };
    s.phi * zeta * s.local(variant, k, j)
}

/// Bounds for sampled shrinkage factors; keeps the factor chain away from
/// the exact-zero / infinity absorbing states of the half-Cauchy mixture.
const FACTOR_MIN: f64 = 1e-10;
const FACTOR_MAX: f64 = 1e10;

/// Inverse-gamma draw with density ∝ x^{−shape−1}·exp(−scale/x).
pub fn sample_inv_gamma<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> f64 {
    let scale = scale.clamp(f64::MIN_POSITIVE, f64::MAX);
    let g = Gamma::new(shape, 1.0 / scale).expect("inverse-gamma parameters");
    1.0 / g.sample(rng)
}

fn sample_factor<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> f64 {
    sample_inv_gamma(shape, scale, rng).clamp(FACTOR_MIN, FACTOR_MAX)
}

/// Posterior shape of ζ_j given K clusters.
pub fn zeta_shape(k: usize) -> f64 {
    (k as f64 + 1.0) / 2.0
}

/// Posterior shape of δ_k given d outcomes.
pub fn delta_shape(d: usize) -> f64 {
    (d as f64 + 1.0) / 2.0
}

/// Posterior shape of φ given K clusters and d outcomes.
pub fn phi_shape(k: usize, d: usize) -> f64 {
    ((k * d) as f64 + 1.0) / 2.0
}

/// Posterior rate of ζ_j: Σ_k μ²_kj/local_kj / (2φ) + 1/α_ζj.
fn zeta_rate(s: &ShrinkageState, variant: ShrinkageVariant, mu: &DMatrix<f64>, j: usize) -> f64 {
    let quad: f64 = (0..mu.nrows())
        .map(|kk| mu[(kk, j)].powi(2) / s.local(variant, kk, j))
        .sum();
    quad / (2.0 * s.phi) + 1.0 / s.alpha_zeta[j]
}

/// Posterior rate of γ_kj: μ²_kj/(2φζ_j) + 1/α_γkj.
fn gamma_rate(
    s: &ShrinkageState,
    variant: ShrinkageVariant,
    mu: &DMatrix<f64>,
    k: usize,
    j: usize,
) -> f64 {
    let zeta = if variant.uses_zeta() { s.zeta[j] } else { 1.0 };
    mu[(k, j)].powi(2) / (2.0 * s.phi * zeta) + 1.0 / s.alpha_gamma[(k, j)]
}

/// Posterior rate of δ_k: Σ_j μ²_kj/ζ_j / (2φ) + 1/α_δk.
fn delta_rate(s: &ShrinkageState, variant: ShrinkageVariant, mu: &DMatrix<f64>, k: usize) -> f64 {
    let quad: f64 = (0..mu.ncols())
        .map(|j| {
            let zeta = if variant.uses_zeta() { s.zeta[j] } else { 1.0 };
            mu[(k, j)].powi(2) / zeta
        })
        .sum();
    quad / (2.0 * s.phi) + 1.0 / s.alpha_delta[k]
}

/// Posterior rate of φ: Σ_j (1/(2ζ_j)) Σ_k μ²_kj/local_kj + 1/α_φ.
fn phi_rate(s: &ShrinkageState, variant: ShrinkageVariant, mu: &DMatrix<f64>) -> f64 {
    let mut quad = 0.0;
    for j in 0..mu.ncols() {
        let zeta = if variant.uses_zeta() { s.zeta[j] } else { 1.0 };
        let inner: f64 = (0..mu.nrows())
            .map(|kk| mu[(kk, j)].powi(2) / s.local(variant, kk, j))
            .sum();
        quad += inner / (2.0 * zeta);
    }
    quad + 1.0 / s.alpha_phi
}

/// One full sweep of inverse-gamma Gibbs draws for all active shrinkage
/// factors and their augmented scales (each scale drawn just before its
/// factor). Inactive blocks are left untouched at 1.
pub fn update_shrinkage<R: Rng + ?Sized>(
    s: &mut ShrinkageState,
    variant: ShrinkageVariant,
    mu: &DMatrix<f64>,
    rng: &mut R,
) {
    if !variant.uses_phi() {
        return;
    }
    let (k, d) = mu.shape();

    if variant.uses_zeta() {
        for j in 0..d {
            s.alpha_zeta[j] = sample_factor(1.0, 1.0 / s.zeta[j] + 1.0, rng);
            s.zeta[j] = sample_factor(zeta_shape(k), zeta_rate(s, variant, mu, j), rng);
        }
    }

    if variant.uses_gamma() {
        for kk in 0..k {
            for j in 0..d {
                s.alpha_gamma[(kk, j)] =
                    sample_factor(1.0, 1.0 / s.gamma[(kk, j)] + 1.0, rng);
                s.gamma[(kk, j)] =
                    sample_factor(1.0, gamma_rate(s, variant, mu, kk, j), rng);
            }
        }
    } else if variant.uses_delta() {
        for kk in 0..k {
            s.alpha_delta[kk] = sample_factor(1.0, 1.0 / s.delta[kk] + 1.0, rng);
            s.delta[kk] = sample_factor(delta_shape(d), delta_rate(s, variant, mu, kk), rng);
        }
    }

    s.alpha_phi = sample_factor(1.0, 1.0 / s.phi + 1.0, rng);
    s.phi = sample_factor(phi_shape(k, d), phi_rate(s, variant, mu), rng);
}

/// Prior treatment of the CAR propriety parameters ρ_k.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhoMode {
    /// ρ_k pinned to a configured constant (default 0.99).
    Fixed,
    /// Symmetric two-component Beta mixture inferred by Metropolis.
    SpikeSlab,
}

impl RhoMode {
    pub fn from_code(code: &str) -> Result<Self, PriorError> {
        match code {
            "fixed" => Ok(Self::Fixed),
            "spike_slab" => Ok(Self::SpikeSlab),
            other => Err(PriorError::UnknownRhoMode(other.to_string())),
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            Self::Fixed => "fixed",
            Self::SpikeSlab => "spike_slab",
        }
    }
}

/// Log density of the spike-and-slab style mixture prior on ρ:
/// 0.5·Beta(2,18) + 0.5·Beta(18,2). Mass concentrates near 0 and near 1
/// while vanishing at both endpoints.
pub fn rho_log_prior(rho: f64) -> Result<f64, PriorError> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(PriorError::RhoOutOfRange(rho));
    }
    let spike = Beta::new(2.0, 18.0).expect("valid Beta");
    let slab = Beta::new(18.0, 2.0).expect("valid Beta");
    let a = 0.5f64.ln() + spike.ln_pdf(rho);
    let b = 0.5f64.ln() + slab.ln_pdf(rho);
    let m = a.max(b);
    Ok(m + ((a - m).exp() + (b - m).exp()).ln())
}
