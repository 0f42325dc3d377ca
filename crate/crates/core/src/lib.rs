//! Bayesian spatial clustering of multivariate areal data.
//!
//! The model partitions the areas of a map into clusters according to the
//! joint levels of several continuous outcomes (typically log standardized
//! mortality ratios or log relative risks). Cluster membership probabilities
//! are built from latent Gaussian fields with conditionally autoregressive
//! (CAR) spatial priors through a multinomial stick-breaking construction,
//! and the cluster/outcome intercepts carry global-local shrinkage priors so
//! that only outcomes with real signal drive the partition.
//!
//! The crate provides:
//!
//! * [`graph`] — adjacency ingestion and validation for areal maps;
//! * [`ingest`] — outcome construction (expected deaths, log-SMR, log
//!   relative risk) and neighbor-average imputation;
//! * [`stickbreak`] — stick-breaking transforms and the multinomial
//!   allocation likelihood;
//! * [`pg`] — exact Pólya-gamma sampling for the logistic augmentation;
//! * [`spatial`] — CAR log densities and conditionals, plus a DAGAR
//!   generator used by the simulation harness;
//! * [`priors`] — shrinkage-prior configurations and their Gibbs updates;
//! * [`sampler`] — the blocked Gibbs/Metropolis MCMC engine;
//! * [`post`] — relabelling, posterior summaries, model selection and
//!   clustering metrics;
//! * [`simstudy`] — synthetic-map generators and evaluation utilities;
//! * [`io`] — draw persistence, flat key-value configs and run manifests.

pub use nalgebra;

pub mod graph;
pub mod ingest;
pub mod io;
pub mod kmeans;
pub mod pg;
pub mod post;
pub mod priors;
pub mod sampler;
pub mod simstudy;
pub mod spatial;
pub mod stickbreak;

pub use graph::AdjacencyGraph;
pub use ingest::Dataset;
pub use sampler::{fit, FitConfig, ModelState, PosteriorDraws};
