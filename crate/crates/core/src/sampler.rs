//! The MCMC engine: blocked Gibbs updates with Pólya-gamma augmentation,
//! a Metropolis step on the CAR propriety parameters, chain orchestration
//! and draw collection.
//!
//! Sweep order within one iteration: ω → ψ → Z → μ → shrinkage → β (if
//! covariates are present) → Σ → ρ (if inferred). Allocation labels are
//! never reordered inside the sampler; identifiability repair is entirely
//! the post-processing relabeller's job.

use crate::graph::AdjacencyGraph;
use crate::ingest::Dataset;
use crate::kmeans::kmeans;
use crate::priors::{
    prior_variance_with, rho_log_prior, update_shrinkage, RhoMode, ShrinkageState,
    ShrinkageVariant,
};
use crate::spatial::{car_log_density, car_conditional, CarContext, CarParams};
use crate::stickbreak::log_psi_to_probs;
use crate::pg::sample_pg;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("non-finite log-likelihood at chain {chain}, iteration {iteration}")]
    NonFiniteLogLik { chain: usize, iteration: usize },
    #[error("covariance update lost positive definiteness at chain {chain}, iteration {iteration}")]
    BrokenCovariance { chain: usize, iteration: usize },
}

/// Fit configuration; the defaults reproduce the reference protocol of
/// four chains of 10,000 iterations with the first half discarded.
#[derive(Debug, Clone)]
pub struct FitConfig {
    pub k: usize,
    pub chains: usize,
    pub iterations: usize,
    /// Fraction of each chain discarded as burn-in.
    pub burn_in: f64,
    pub thinning: usize,
    pub seed: u64,
    pub shrinkage: ShrinkageVariant,
    pub rho_mode: RhoMode,
    pub rho_fixed: f64,
    pub tau: f64,
    /// Variance of μ_kj under the noninformative prior.
    pub mu_prior_variance: f64,
    /// Variance of each regression coefficient's Gaussian prior.
    pub beta_prior_variance: f64,
    /// The Σ prior is inverse-Wishart(d, s·I) with this scale s.
    pub sigma_prior_scale: f64,
}

impl FitConfig {
    pub fn new(k: usize) -> Self {
        FitConfig {
            k,
            chains: 4,
            iterations: 10_000,
            burn_in: 0.5,
            thinning: 1,
            seed: 1,
            shrinkage: ShrinkageVariant::Gamma,
            rho_mode: RhoMode::Fixed,
            rho_fixed: 0.99,
            tau: 1.0,
            mu_prior_variance: 10.0,
            beta_prior_variance: 10.0,
            sigma_prior_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), SamplerError> {
        let fail = |msg: String| Err(SamplerError::Config(msg));
        if self.k < 2 {
            return fail(format!("k must be at least 2, got {}", self.k));
        }
        if self.chains == 0 {
            return fail("chains must be positive".into());
        }
        if !(0.0..1.0).contains(&self.burn_in) {
            return fail(format!("burn_in must be in [0,1), got {}", self.burn_in));
        }
        if self.iterations < 2 || self.burn_count() >= self.iterations {
            return fail(format!(
                "iterations ({}) must exceed the burn-in ({})",
                self.iterations,
                self.burn_count()
            ));
        }
        if self.thinning == 0 {
            return fail("thinning must be positive".into());
        }
        if self.tau <= 0.0 {
            return fail(format!("tau must be positive, got {}", self.tau));
        }
        if !(0.0..1.0).contains(&self.rho_fixed) {
            return fail(format!("rho_fixed must be in [0,1), got {}", self.rho_fixed));
        }
        if self.mu_prior_variance <= 0.0
            || self.beta_prior_variance <= 0.0
            || self.sigma_prior_scale <= 0.0
        {
            return fail("prior variances must be positive".into());
        }
        Ok(())
    }

    pub fn burn_count(&self) -> usize {
        (self.iterations as f64 * self.burn_in).floor() as usize
    }

    /// Retained draws per chain after burn-in and thinning.
    pub fn kept_per_chain(&self) -> usize {
        (self.iterations - self.burn_count()).div_ceil(self.thinning)
    }
}

/// One MCMC state. Allocations are stored as labels; row i of the formal
/// allocation matrix is the one-hot vector of `z[i]`.
#[derive(Debug, Clone)]
pub struct ModelState {
    pub z: Vec<usize>,
    /// Latent stick fields, one vector of length n per stick.
    pub psi: Vec<Vec<f64>>,
    /// Pólya-gamma weights, zero exactly where the stick indicator is zero.
    pub omega: Vec<Vec<f64>>,
    pub mu: DMatrix<f64>,
    pub beta: DMatrix<f64>,
    pub sigma: DMatrix<f64>,
    pub shrink: ShrinkageState,
    pub rho: Vec<f64>,
}

/// Retained draws from all chains, merged by chain index then iteration.
#[derive(Debug, Clone)]
pub struct PosteriorDraws {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub p: usize,
    pub chains: usize,
    pub kept_per_chain: usize,
    /// (chain, absolute 1-based iteration) of each retained draw.
    pub chain_iter: Vec<(u32, u32)>,
    pub z: Vec<Vec<usize>>,
    pub mu: Vec<DMatrix<f64>>,
    pub beta: Vec<DMatrix<f64>>,
    pub sigma: Vec<DMatrix<f64>>,
    pub rho: Vec<Vec<f64>>,
    pub phi: Vec<f64>,
    pub zeta: Vec<Vec<f64>>,
    pub delta: Vec<Vec<f64>>,
    pub gamma: Vec<DMatrix<f64>>,
    /// Complete-data Gaussian log-likelihood Σ_i log N_d(y_i | μ_{z_i} +
    /// x_iᵀβ, Σ); invariant under consistent label permutations.
    pub loglik: Vec<f64>,
    /// Per-area log mixture densities log Σ_k π_ik N_d(y_i | μ_k + x_iᵀβ, Σ).
    pub log_mix: Vec<Vec<f64>>,
    /// Metropolis acceptance rate for ρ per chain (0 when ρ is fixed).
    pub rho_accept: Vec<f64>,
}

impl PosteriorDraws {
    pub fn len(&self) -> usize {
        self.loglik.len()
    }

    pub fn is_empty(&self) -> bool {
        self.loglik.is_empty()
    }
}

struct ChainDraws {
    chain_iter: Vec<(u32, u32)>,
    z: Vec<Vec<usize>>,
    mu: Vec<DMatrix<f64>>,
    beta: Vec<DMatrix<f64>>,
    sigma: Vec<DMatrix<f64>>,
    rho: Vec<Vec<f64>>,
    phi: Vec<f64>,
    zeta: Vec<Vec<f64>>,
    delta: Vec<Vec<f64>>,
    gamma: Vec<DMatrix<f64>>,
    loglik: Vec<f64>,
    log_mix: Vec<Vec<f64>>,
    rho_accept: f64,
}

/// Shared read-only context for all chains of one fit.
pub struct Sampler<'a> {
    data: &'a Dataset,
    cfg: &'a FitConfig,
    car: CarContext,
    xtx: Option<DMatrix<f64>>,
}

impl<'a> Sampler<'a> {
    pub fn new(data: &'a Dataset, cfg: &'a FitConfig) -> Result<Self, SamplerError> {
        cfg.validate()?;
        if data.n() <= data.d() {
            return Err(SamplerError::Config(format!(
                "need more areas ({}) than outcomes ({}) for a proper covariance update",
                data.n(),
                data.d()
            )));
        }
        let xtx = data.x.as_ref().map(|x| x.transpose() * x);
        Ok(Sampler {
            data,
            cfg,
            car: CarContext::new(&data.graph),
            xtx,
        })
    }

    pub fn graph(&self) -> &AdjacencyGraph {
        &self.data.graph
    }

    fn car_params(&self, state: &ModelState, stick: usize) -> CarParams {
        CarParams::new(self.cfg.tau, state.rho[stick])
    }

    /// Deterministic warm start: k-means allocations, within-cluster means,
    /// sample covariance, zero fields.
    pub fn init_state(&self, chain_seed: u64) -> ModelState {
        let n = self.data.n();
        let d = self.data.d();
        let p = self.data.p();
        let k = self.cfg.k;
        let z = kmeans(&self.data.y, k, 10, chain_seed);
        let mut mu = DMatrix::zeros(k, d);
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[z[i]] += 1;
            for j in 0..d {
                mu[(z[i], j)] += self.data.y[(i, j)];
            }
        }
        for kk in 0..k {
            if counts[kk] > 0 {
                for j in 0..d {
                    mu[(kk, j)] /= counts[kk] as f64;
                }
            }
        }
        let sigma = sample_covariance(&self.data.y);
        let rho0 = match self.cfg.rho_mode {
            RhoMode::Fixed => self.cfg.rho_fixed,
            RhoMode::SpikeSlab => 0.5,
        };
        ModelState {
            z,
            psi: vec![vec![0.0; n]; k - 1],
            omega: vec![vec![0.0; n]; k - 1],
            mu,
            beta: DMatrix::zeros(p, d),
            sigma,
            shrink: ShrinkageState::ones(k, d),
            rho: vec![rho0; k - 1],
        }
    }

    /// Stick indicator N_ik for stored labels: 1 when area i was not
    /// assigned to any cluster before `stick`.
    #[inline]
    fn stick_active(z_i: usize, stick: usize) -> bool {
        z_i >= stick
    }

    /// Refresh the Pólya-gamma weights: ω_ik ~ PG(1, ψ_ik) where N_ik = 1,
    /// exactly zero elsewhere.
    pub fn update_omega<R: Rng + ?Sized>(&self, state: &mut ModelState, rng: &mut R) {
        for stick in 0..self.cfg.k - 1 {
            for i in 0..self.data.n() {
                state.omega[stick][i] = if Self::stick_active(state.z[i], stick) {
                    sample_pg(1, state.psi[stick][i], rng)
                } else {
                    0.0
                };
            }
        }
    }

    /// Single-site Gibbs scan over every stick field. κ_ik = Z_ik − N_ik/2;
    /// areas with N_ik = 0 still move, from the κ = ω = 0 conditional,
    /// which is the plain CAR full conditional.
    pub fn update_psi<R: Rng + ?Sized>(&self, state: &mut ModelState, rng: &mut R) {
        let g = &self.data.graph;
        for stick in 0..self.cfg.k - 1 {
            let params = self.car_params(state, stick);
            for i in 0..self.data.n() {
                let kappa = if !Self::stick_active(state.z[i], stick) {
                    0.0
                } else if state.z[i] == stick {
                    0.5
                } else {
                    -0.5
                };
                let (mean, var) =
                    car_conditional(&state.psi[stick], i, state.omega[stick][i], kappa, g, params);
                let z: f64 = StandardNormal.sample(rng);
                state.psi[stick][i] = mean + var.sqrt() * z;
            }
        }
    }

    /// Log densities log N_d(y_i | μ_k + x_iᵀβ, Σ) for every area and
    /// cluster under the current state.
    fn gaussian_loglik_matrix(&self, state: &ModelState) -> DMatrix<f64> {
        let n = self.data.n();
        let d = self.data.d();
        let k = self.cfg.k;
        let chol = Cholesky::new(state.sigma.clone())
            .expect("state covariance must stay positive definite");
        let half_log_det: f64 = (0..d).map(|j| chol.l()[(j, j)].ln()).sum();
        let norm = -0.5 * d as f64 * (2.0 * std::f64::consts::PI).ln() - half_log_det;
        let mut out = DMatrix::zeros(n, k);
        let mut resid = DVector::zeros(d);
        for i in 0..n {
            for kk in 0..k {
                for j in 0..d {
                    let fitted = state.mu[(kk, j)] + self.covariate_effect(state, i, j);
                    resid[j] = self.data.y[(i, j)] - fitted;
                }
                let w = chol
                    .l()
                    .solve_lower_triangular(&resid)
                    .expect("triangular solve");
                out[(i, kk)] = norm - 0.5 * w.norm_squared();
            }
        }
        out
    }

    #[inline]
    fn covariate_effect(&self, state: &ModelState, i: usize, j: usize) -> f64 {
        let x = match &self.data.x {
            Some(x) => x,
            None => return 0.0,
        };
        (0..x.ncols()).map(|l| x[(i, l)] * state.beta[(l, j)]).sum()
    }

    /// Redraw every allocation label from its multinomial full conditional:
    /// Pr(Z_ik = 1 | ·) ∝ π_ik · N_d(y_i | μ_k + x_iᵀβ, Σ).
    pub fn update_allocations<R: Rng + ?Sized>(&self, state: &mut ModelState, rng: &mut R) {
        let loglik = self.gaussian_loglik_matrix(state);
        let k = self.cfg.k;
        let mut psi_row = vec![0.0; k - 1];
        let mut weights = vec![0.0; k];
        for i in 0..self.data.n() {
            for (s, slot) in psi_row.iter_mut().enumerate() {
                *slot = state.psi[s][i];
            }
            let log_pi = log_psi_to_probs(&psi_row);
            let mut max_w = f64::NEG_INFINITY;
            for kk in 0..k {
                weights[kk] = log_pi[kk] + loglik[(i, kk)];
                max_w = max_w.max(weights[kk]);
            }
            let mut total = 0.0;
            for w in weights.iter_mut() {
                *w = (*w - max_w).exp();
                total += *w;
            }
            let u: f64 = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut label = k - 1;
            for (kk, w) in weights.iter().enumerate() {
                acc += w;
                if u < acc {
                    label = kk;
                    break;
                }
            }
            state.z[i] = label;
        }
    }

    /// Conjugate update of the cluster intercept rows. Empty clusters draw
    /// straight from their prior.
    pub fn update_mu<R: Rng + ?Sized>(&self, state: &mut ModelState, rng: &mut R) {
        let d = self.data.d();
        let k = self.cfg.k;
        let sigma_chol = Cholesky::new(state.sigma.clone())
            .expect("state covariance must stay positive definite");
        let sigma_inv = sigma_chol.inverse();
        for kk in 0..k {
            let mut count = 0usize;
            let mut resid_sum = DVector::zeros(d);
            for i in 0..self.data.n() {
                if state.z[i] == kk {
                    count += 1;
                    for j in 0..d {
                        resid_sum[j] +=
                            self.data.y[(i, j)] - self.covariate_effect(state, i, j);
                    }
                }
            }
            let prior_prec = DVector::from_fn(d, |j, _| {
                1.0 / prior_variance_with(
                    &state.shrink,
                    self.cfg.shrinkage,
                    kk,
                    j,
                    self.cfg.mu_prior_variance,
                )
            });
            let draw = if count == 0 {
                DVector::from_fn(d, |j, _| {
                    let sd = prior_prec[j].recip().sqrt();
                    let z: f64 = StandardNormal.sample(rng);
                    sd * z
                })
            } else {
                let mut prec = &sigma_inv * count as f64;
                for j in 0..d {
                    prec[(j, j)] += prior_prec[j];
                }
                let b = &sigma_inv * resid_sum;
                sample_gaussian_precision(&prec, &b, rng)
            };
            for j in 0..d {
                state.mu[(kk, j)] = draw[j];
            }
        }
    }

    /// Conjugate update of the regression coefficients (vectorized across
    /// outcomes); no-op when there are no covariates.
    pub fn update_beta<R: Rng + ?Sized>(&self, state: &mut ModelState, rng: &mut R) {
        let x = match &self.data.x {
            Some(x) => x,
            None => return,
        };
        let xtx = self.xtx.as_ref().expect("precomputed with covariates");
        let p = x.ncols();
        let d = self.data.d();
        let n = self.data.n();
        let sigma_inv = Cholesky::new(state.sigma.clone())
            .expect("state covariance must stay positive definite")
            .inverse();
        // Residuals after removing the cluster intercepts.
        let mut r = DMatrix::zeros(n, d);
        for i in 0..n {
            for j in 0..d {
                r[(i, j)] = self.data.y[(i, j)] - state.mu[(state.z[i], j)];
            }
        }
        // Posterior precision Σ^{-1} ⊗ XᵀX + I/v, and linear term
        // vec(Xᵀ R Σ^{-1}) with columns stacked.
        let pd = p * d;
        let mut prec = DMatrix::zeros(pd, pd);
        for j1 in 0..d {
            for j2 in 0..d {
                let s = sigma_inv[(j1, j2)];
                for l1 in 0..p {
                    for l2 in 0..p {
                        prec[(j1 * p + l1, j2 * p + l2)] = s * xtx[(l1, l2)];
                    }
                }
            }
        }
        for idx in 0..pd {
            prec[(idx, idx)] += 1.0 / self.cfg.beta_prior_variance;
        }
        let m = x.transpose() * r * &sigma_inv;
        let b = DVector::from_fn(pd, |idx, _| m[(idx % p, idx / p)]);
        let v = sample_gaussian_precision(&prec, &b, rng);
        for j in 0..d {
            for l in 0..p {
                state.beta[(l, j)] = v[j * p + l];
            }
        }
    }

    /// Conjugate inverse-Wishart update of the outcome covariance.
    pub fn update_sigma<R: Rng + ?Sized>(&self, state: &mut ModelState, rng: &mut R) {
        let n = self.data.n();
        let d = self.data.d();
        let mut scale = DMatrix::identity(d, d) * self.cfg.sigma_prior_scale;
        for i in 0..n {
            for j1 in 0..d {
                let e1 = self.data.y[(i, j1)]
                    - state.mu[(state.z[i], j1)]
                    - self.covariate_effect(state, i, j1);
                for j2 in 0..=j1 {
                    let e2 = self.data.y[(i, j2)]
                        - state.mu[(state.z[i], j2)]
                        - self.covariate_effect(state, i, j2);
                    scale[(j1, j2)] += e1 * e2;
                }
            }
        }
        for j1 in 0..d {
            for j2 in (j1 + 1)..d {
                scale[(j1, j2)] = scale[(j2, j1)];
            }
        }
        let df = (d + n) as f64;
        state.sigma = sample_inverse_wishart(df, &scale, rng);
    }

    /// Random-walk Metropolis on logit(ρ_k) with proposal variance 3.
    /// Returns the number of accepted sticks.
    pub fn update_rho<R: Rng + ?Sized>(&self, state: &mut ModelState, rng: &mut R) -> usize {
        let g = &self.data.graph;
        let mut accepted = 0;
        for stick in 0..self.cfg.k - 1 {
            let current = state.rho[stick];
            let step: f64 = StandardNormal.sample(rng);
            let proposal = sigmoid(logit(current) + 3f64.sqrt() * step);
            if !(proposal > 0.0 && proposal < 1.0) {
                continue; // saturated transform; reject outright
            }
            let cur_params = CarParams::new(self.cfg.tau, current);
            let prop_params = CarParams::new(self.cfg.tau, proposal);
            let field = &state.psi[stick];
            let mut log_ratio = car_log_density(field, g, &self.car, prop_params)
                - car_log_density(field, g, &self.car, cur_params);
            log_ratio += rho_log_prior(proposal).expect("proposal in (0,1)")
                - rho_log_prior(current).expect("state in (0,1)");
            // Jacobian of the logit reparametrization: dρ/dlogit = ρ(1−ρ).
            log_ratio += (proposal * (1.0 - proposal)).ln() - (current * (1.0 - current)).ln();
            if log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio {
                state.rho[stick] = proposal;
                accepted += 1;
            }
        }
        accepted
    }

    /// One full systematic-scan sweep. Returns the number of accepted ρ
    /// proposals (0 when ρ is fixed).
    pub fn sweep<R: Rng + ?Sized>(&self, state: &mut ModelState, rng: &mut R) -> usize {
        self.update_omega(state, rng);
        self.update_psi(state, rng);
        self.update_allocations(state, rng);
        self.update_mu(state, rng);
        update_shrinkage(&mut state.shrink, self.cfg.shrinkage, &state.mu, rng);
        self.update_beta(state, rng);
        self.update_sigma(state, rng);
        match self.cfg.rho_mode {
            RhoMode::SpikeSlab => self.update_rho(state, rng),
            RhoMode::Fixed => 0,
        }
    }

    /// Complete-data log-likelihood and per-area log mixture densities of
    /// the current state.
    fn record_likelihoods(&self, state: &ModelState) -> (f64, Vec<f64>) {
        let loglik_matrix = self.gaussian_loglik_matrix(state);
        let k = self.cfg.k;
        let mut psi_row = vec![0.0; k - 1];
        let mut loglik = 0.0;
        let mut log_mix = Vec::with_capacity(self.data.n());
        for i in 0..self.data.n() {
            loglik += loglik_matrix[(i, state.z[i])];
            for (s, slot) in psi_row.iter_mut().enumerate() {
                *slot = state.psi[s][i];
            }
            let log_pi = log_psi_to_probs(&psi_row);
            let mut max_w = f64::NEG_INFINITY;
            let mut terms = vec![0.0; k];
            for kk in 0..k {
                terms[kk] = log_pi[kk] + loglik_matrix[(i, kk)];
                max_w = max_w.max(terms[kk]);
            }
            let sum: f64 = terms.iter().map(|t| (t - max_w).exp()).sum();
            log_mix.push(max_w + sum.ln());
        }
        (loglik, log_mix)
    }

    /// Run one chain to completion, returning its retained draws.
    fn run_chain(&self, chain_index: usize) -> Result<ChainDraws, SamplerError> {
        let chain_seed = self.cfg.seed.wrapping_add(chain_index as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(chain_seed);
        let mut state = self.init_state(chain_seed);
        let burn = self.cfg.burn_count();
        let kept = self.cfg.kept_per_chain();
        let mut draws = ChainDraws {
            chain_iter: Vec::with_capacity(kept),
            z: Vec::with_capacity(kept),
            mu: Vec::with_capacity(kept),
            beta: Vec::with_capacity(kept),
            sigma: Vec::with_capacity(kept),
            rho: Vec::with_capacity(kept),
            phi: Vec::with_capacity(kept),
            zeta: Vec::with_capacity(kept),
            delta: Vec::with_capacity(kept),
            gamma: Vec::with_capacity(kept),
            loglik: Vec::with_capacity(kept),
            log_mix: Vec::with_capacity(kept),
            rho_accept: 0.0,
        };
        let mut accepted = 0usize;
        let mut proposals = 0usize;
        for t in 0..self.cfg.iterations {
            accepted += self.sweep(&mut state, &mut rng);
            if matches!(self.cfg.rho_mode, RhoMode::SpikeSlab) {
                proposals += self.cfg.k - 1;
            }
            if t >= burn && (t - burn).is_multiple_of(self.cfg.thinning) {
                let (loglik, log_mix) = self.record_likelihoods(&state);
                if !loglik.is_finite() {
                    return Err(SamplerError::NonFiniteLogLik {
                        chain: chain_index,
                        iteration: t + 1,
                    });
                }
                draws.chain_iter.push((chain_index as u32, (t + 1) as u32));
                draws.z.push(state.z.clone());
                draws.mu.push(state.mu.clone());
                draws.beta.push(state.beta.clone());
                draws.sigma.push(state.sigma.clone());
                draws.rho.push(state.rho.clone());
                draws.phi.push(state.shrink.phi);
                draws.zeta.push(state.shrink.zeta.clone());
                draws.delta.push(state.shrink.delta.clone());
                draws.gamma.push(state.shrink.gamma.clone());
                draws.loglik.push(loglik);
                draws.log_mix.push(log_mix);
            }
        }
        draws.rho_accept = if proposals > 0 {
            accepted as f64 / proposals as f64
        } else {
            0.0
        };
        Ok(draws)
    }
}

/// Run `cfg.chains` independent chains (seeds `seed`, `seed+1`, ...) and
/// merge their retained draws in chain order. Chains execute on the global
/// thread pool; the output is byte-identical for any thread count.
pub fn fit(data: &Dataset, cfg: &FitConfig) -> Result<PosteriorDraws, SamplerError> {
    let sampler = Sampler::new(data, cfg)?;
    let chains: Vec<ChainDraws> = (0..cfg.chains)
        .into_par_iter()
        .map(|c| sampler.run_chain(c))
        .collect::<Result<Vec<_>, _>>()?;
    let kept = cfg.kept_per_chain();
    let mut out = PosteriorDraws {
        n: data.n(),
        k: cfg.k,
        d: data.d(),
        p: data.p(),
        chains: cfg.chains,
        kept_per_chain: kept,
        chain_iter: Vec::with_capacity(kept * cfg.chains),
        z: Vec::with_capacity(kept * cfg.chains),
        mu: Vec::with_capacity(kept * cfg.chains),
        beta: Vec::with_capacity(kept * cfg.chains),
        sigma: Vec::with_capacity(kept * cfg.chains),
        rho: Vec::with_capacity(kept * cfg.chains),
        phi: Vec::with_capacity(kept * cfg.chains),
        zeta: Vec::with_capacity(kept * cfg.chains),
        delta: Vec::with_capacity(kept * cfg.chains),
        gamma: Vec::with_capacity(kept * cfg.chains),
        loglik: Vec::with_capacity(kept * cfg.chains),
        log_mix: Vec::with_capacity(kept * cfg.chains),
        rho_accept: Vec::with_capacity(cfg.chains),
    };
    for chain in chains {
        out.chain_iter.extend(chain.chain_iter);
        out.z.extend(chain.z);
        out.mu.extend(chain.mu);
        out.beta.extend(chain.beta);
        out.sigma.extend(chain.sigma);
        out.rho.extend(chain.rho);
        out.phi.extend(chain.phi);
        out.zeta.extend(chain.zeta);
        out.delta.extend(chain.delta);
        out.gamma.extend(chain.gamma);
        out.loglik.extend(chain.loglik);
        out.log_mix.extend(chain.log_mix);
        out.rho_accept.push(chain.rho_accept);
    }
    Ok(out)
}

#[inline]
fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Sample covariance of the rows, with a diagonal fallback when it is not
/// positive definite (degenerate inputs).
fn sample_covariance(y: &DMatrix<f64>) -> DMatrix<f64> {
    let n = y.nrows();
    let d = y.ncols();
    let mean = y.row_mean();
    let mut cov = DMatrix::zeros(d, d);
    for i in 0..n {
        for j1 in 0..d {
            for j2 in 0..d {
                cov[(j1, j2)] += (y[(i, j1)] - mean[j1]) * (y[(i, j2)] - mean[j2]);
            }
        }
    }
    cov /= (n - 1).max(1) as f64;
    if Cholesky::new(cov.clone()).is_some() {
        cov
    } else {
        DMatrix::from_fn(d, d, |a, b| {
            if a == b {
                cov[(a, a)].max(1e-6)
            } else {
                0.0
            }
        })
    }
}

/// Draw from N(P⁻¹b, P⁻¹) given the precision matrix P, via one Cholesky
/// factorization: mean from a two-stage solve, noise from a back-solve of
/// the transposed factor.
fn sample_gaussian_precision<R: Rng + ?Sized>(
    prec: &DMatrix<f64>,
    b: &DVector<f64>,
    rng: &mut R,
) -> DVector<f64> {
    let chol: Cholesky<f64, Dyn> =
        Cholesky::new(prec.clone()).expect("posterior precision must be positive definite");
    let mean = chol.solve(b);
    let z = DVector::from_fn(b.len(), |_, _| StandardNormal.sample(rng));
    let noise = chol
        .l()
        .transpose()
        .solve_upper_triangular(&z)
        .expect("triangular solve");
    mean + noise
}

/// Draw Σ ~ inverse-Wishart(df, scale) by drawing the precision from the
/// matching Wishart via the Bartlett factorization.
pub fn sample_inverse_wishart<R: Rng + ?Sized>(
    df: f64,
    scale: &DMatrix<f64>,
    rng: &mut R,
) -> DMatrix<f64> {
    let d = scale.nrows();
    assert!(df > (d - 1) as f64, "inverse-Wishart needs df > d-1");
    let scale_chol = Cholesky::new(scale.clone()).expect("scale must be positive definite");
    // T Tᵀ = scale⁻¹ with T upper triangular.
    let t = scale_chol
        .l()
        .transpose()
        .solve_upper_triangular(&DMatrix::identity(d, d))
        .expect("triangular solve");
    let mut a = DMatrix::zeros(d, d);
    for i in 0..d {
        let chi2 = Gamma::new((df - i as f64) / 2.0, 2.0).expect("chi-square parameters");
        a[(i, i)] = chi2.sample(rng).sqrt();
        for j in 0..i {
            a[(i, j)] = StandardNormal.sample(rng);
        }
    }
    let m = t * a;
    let wishart = &m * m.transpose(); // Σ⁻¹ draw
    let mut sigma = Cholesky::new(wishart)
        .expect("Wishart draw must be positive definite")
        .inverse();
    // Enforce exact symmetry against round-off drift.
    for j1 in 0..d {
        for j2 in 0..j1 {
            let avg = 0.5 * (sigma[(j1, j2)] + sigma[(j2, j1)]);
            sigma[(j1, j2)] = avg;
            sigma[(j2, j1)] = avg;
        }
    }
    sigma
}
