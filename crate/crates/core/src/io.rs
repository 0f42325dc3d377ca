//! Run artifacts on disk: draw files, flat key-value configs and run
//! manifests.
//!
//! Every floating-point value is serialized with 17 significant digits, so
//! text round-trips reproduce the exact bit pattern and a re-run from a
//! manifest can be compared byte for byte.

use crate::priors::{RhoMode, ShrinkageVariant};
use crate::sampler::{FitConfig, PosteriorDraws};
use nalgebra::DMatrix;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("configuration: {0}")]
    Config(String),
    #[error("draws directory {0} is missing file {1}")]
    MissingDrawFile(String, String),
}

fn io_err(path: &Path, source: std::io::Error) -> IoError {
    IoError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Serialize a float with 17 significant digits (exact f64 round-trip).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Hex SHA-256 digest of a file's bytes.
pub fn sha256_hex(path: &Path) -> Result<String, IoError> {
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    let digest = Sha256::digest(&bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    Ok(out)
}

/// Write one CSV file with fully prepared string cells.
pub fn write_csv(
    path: &Path,
    header: &[String],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<(), IoError> {
    let mut buf = String::new();
    buf.push_str(&header.join(","));
    buf.push('\n');
    for row in rows {
        buf.push_str(&row.join(","));
        buf.push('\n');
    }
    std::fs::write(path, buf).map_err(|e| io_err(path, e))
}

fn matrix_header(prefix: &str, rows: usize, cols: usize, row_tag: char, col_tag: char) -> Vec<String> {
    let mut out = Vec::with_capacity(rows * cols);
    for r in 1..=rows {
        for c in 1..=cols {
            out.push(format!("{prefix}_{row_tag}{r}_{col_tag}{c}"));
        }
    }
    out
}

fn prefixed(mut header: Vec<String>) -> Vec<String> {
    let mut out = vec!["chain".to_string(), "iter".to_string()];
    out.append(&mut header);
    out
}

fn draw_prefix(draws: &PosteriorDraws, m: usize) -> Vec<String> {
    vec![
        draws.chain_iter[m].0.to_string(),
        draws.chain_iter[m].1.to_string(),
    ]
}

/// Persist all retained draws: one file per parameter block, header row
/// naming flattened coordinates, one row per retained draw, with columns
/// `chain,iter` prefixed. Cluster labels are written 1-based.
pub fn write_draws(dir: &Path, draws: &PosteriorDraws, area_ids: &[String]) -> Result<(), IoError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let m_total = draws.len();
    let float_row = |values: Vec<f64>, m: usize| {
        let mut row = draw_prefix(draws, m);
        row.extend(values.into_iter().map(fmt_f64));
        row
    };

    write_csv(
        &dir.join("areas.csv"),
        &["area_id".to_string()],
        area_ids.iter().map(|id| vec![id.clone()]),
    )?;

    let z_header: Vec<String> = (1..=draws.n).map(|i| format!("z_i{i}")).collect();
    write_csv(
        &dir.join("z.csv"),
        &prefixed(z_header),
        (0..m_total).map(|m| {
            let mut row = draw_prefix(draws, m);
            row.extend(draws.z[m].iter().map(|l| (l + 1).to_string()));
            row
        }),
    )?;

    write_csv(
        &dir.join("mu.csv"),
        &prefixed(matrix_header("mu", draws.k, draws.d, 'k', 'j')),
        (0..m_total).map(|m| float_row(row_major(&draws.mu[m]), m)),
    )?;

    if draws.p > 0 {
        write_csv(
            &dir.join("beta.csv"),
            &prefixed(matrix_header("beta", draws.p, draws.d, 'l', 'j')),
            (0..m_total).map(|m| float_row(row_major(&draws.beta[m]), m)),
        )?;
    }

    write_csv(
        &dir.join("sigma.csv"),
        &prefixed(matrix_header("sigma", draws.d, draws.d, 'j', 'j')),
        (0..m_total).map(|m| float_row(row_major(&draws.sigma[m]), m)),
    )?;

    let rho_header: Vec<String> = (1..=draws.k - 1).map(|k| format!("rho_k{k}")).collect();
    write_csv(
        &dir.join("rho.csv"),
        &prefixed(rho_header),
        (0..m_total).map(|m| float_row(draws.rho[m].clone(), m)),
    )?;

    write_csv(
        &dir.join("phi.csv"),
        &prefixed(vec!["phi".to_string()]),
        (0..m_total).map(|m| float_row(vec![draws.phi[m]], m)),
    )?;

    let zeta_header: Vec<String> = (1..=draws.d).map(|j| format!("zeta_j{j}")).collect();
    write_csv(
        &dir.join("zeta.csv"),
        &prefixed(zeta_header),
        (0..m_total).map(|m| float_row(draws.zeta[m].clone(), m)),
    )?;

    let delta_header: Vec<String> = (1..=draws.k).map(|k| format!("delta_k{k}")).collect();
    write_csv(
        &dir.join("delta.csv"),
        &prefixed(delta_header),
        (0..m_total).map(|m| float_row(draws.delta[m].clone(), m)),
    )?;

    write_csv(
        &dir.join("gamma.csv"),
        &prefixed(matrix_header("gamma", draws.k, draws.d, 'k', 'j')),
        (0..m_total).map(|m| float_row(row_major(&draws.gamma[m]), m)),
    )?;

    write_csv(
        &dir.join("loglik.csv"),
        &prefixed(vec!["loglik".to_string()]),
        (0..m_total).map(|m| float_row(vec![draws.loglik[m]], m)),
    )?;

    let mix_header: Vec<String> = (1..=draws.n).map(|i| format!("logmix_i{i}")).collect();
    write_csv(
        &dir.join("logmix.csv"),
        &prefixed(mix_header),
        (0..m_total).map(|m| float_row(draws.log_mix[m].clone(), m)),
    )?;

    write_csv(
        &dir.join("diagnostics.csv"),
        &["chain".to_string(), "rho_accept_rate".to_string()],
        draws
            .rho_accept
            .iter()
            .enumerate()
            .map(|(c, rate)| vec![c.to_string(), fmt_f64(*rate)]),
    )?;
    Ok(())
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            out.push(m[(r, c)]);
        }
    }
    out
}

struct RawTable {
    chain_iter: Vec<(u32, u32)>,
    columns: usize,
    values: Vec<Vec<f64>>,
}

fn read_table(path: &Path) -> Result<RawTable, IoError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|source| IoError::Csv {
            path: path.display().to_string(),
            source,
        })?;
    let columns = reader
        .headers()
        .map_err(|source| IoError::Csv {
            path: path.display().to_string(),
            source,
        })?
        .len()
        - 2;
    let mut chain_iter = Vec::new();
    let mut values = Vec::new();
    for (pos, record) in reader.records().enumerate() {
        let record = record.map_err(|source| IoError::Csv {
            path: path.display().to_string(),
            source,
        })?;
        let parse_err = |message: String| IoError::Parse {
            path: path.display().to_string(),
            line: pos + 2,
            message,
        };
        let chain: u32 = record[0]
            .parse()
            .map_err(|_| parse_err(format!("bad chain '{}'", &record[0])))?;
        let iter: u32 = record[1]
            .parse()
            .map_err(|_| parse_err(format!("bad iter '{}'", &record[1])))?;
        chain_iter.push((chain, iter));
        let mut row = Vec::with_capacity(columns);
        for field in record.iter().skip(2) {
            row.push(
                field
                    .parse::<f64>()
                    .map_err(|_| parse_err(format!("bad number '{field}'")))?,
            );
        }
        values.push(row);
    }
    Ok(RawTable {
        chain_iter,
        columns,
        values,
    })
}

/// Load a draws directory back into memory, together with the area ids.
pub fn read_draws(dir: &Path) -> Result<(PosteriorDraws, Vec<String>), IoError> {
    let need = |name: &str| -> Result<PathBuf, IoError> {
        let p = dir.join(name);
        if p.exists() {
            Ok(p)
        } else {
            Err(IoError::MissingDrawFile(
                dir.display().to_string(),
                name.to_string(),
            ))
        }
    };
    let area_ids: Vec<String> = {
        let path = need("areas.csv")?;
        let body = std::fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        body.lines().skip(1).map(String::from).collect()
    };

    let z_table = read_table(&need("z.csv")?)?;
    let mu_table = read_table(&need("mu.csv")?)?;
    let sigma_table = read_table(&need("sigma.csv")?)?;
    let rho_table = read_table(&need("rho.csv")?)?;
    let phi_table = read_table(&need("phi.csv")?)?;
    let zeta_table = read_table(&need("zeta.csv")?)?;
    let delta_table = read_table(&need("delta.csv")?)?;
    let gamma_table = read_table(&need("gamma.csv")?)?;
    let loglik_table = read_table(&need("loglik.csv")?)?;
    let logmix_table = read_table(&need("logmix.csv")?)?;
    let beta_path = dir.join("beta.csv");
    let beta_table = if beta_path.exists() {
        Some(read_table(&beta_path)?)
    } else {
        None
    };

    let n = z_table.columns;
    let k = delta_table.columns;
    let d = zeta_table.columns;
    let p = beta_table.as_ref().map_or(0, |t| t.columns / d.max(1));
    let m_total = z_table.values.len();
    let chains = z_table
        .chain_iter
        .iter()
        .map(|(c, _)| *c as usize + 1)
        .max()
        .unwrap_or(0);

    let to_matrix = |row: &[f64], rows: usize, cols: usize| {
        DMatrix::from_fn(rows, cols, |r, c| row[r * cols + c])
    };

    let mut draws = PosteriorDraws {
        n,
        k,
        d,
        p,
        chains,
        kept_per_chain: m_total.checked_div(chains).unwrap_or(0),
        chain_iter: z_table.chain_iter.clone(),
        z: Vec::with_capacity(m_total),
        mu: Vec::with_capacity(m_total),
        beta: Vec::with_capacity(m_total),
        sigma: Vec::with_capacity(m_total),
        rho: rho_table.values,
        phi: phi_table.values.iter().map(|r| r[0]).collect(),
        zeta: zeta_table.values,
        delta: delta_table.values,
        gamma: Vec::with_capacity(m_total),
        loglik: loglik_table.values.iter().map(|r| r[0]).collect(),
        log_mix: logmix_table.values,
        rho_accept: Vec::new(),
    };
    for m in 0..m_total {
        draws.z.push(
            z_table.values[m]
                .iter()
                .map(|&v| (v as usize).saturating_sub(1))
                .collect(),
        );
        draws.mu.push(to_matrix(&mu_table.values[m], k, d));
        draws.sigma.push(to_matrix(&sigma_table.values[m], d, d));
        draws.gamma.push(to_matrix(&gamma_table.values[m], k, d));
        draws.beta.push(match &beta_table {
            Some(t) => to_matrix(&t.values[m], p, d),
            None => DMatrix::zeros(0, d),
        });
    }
    let diag_path = dir.join("diagnostics.csv");
    if diag_path.exists() {
        let body = std::fs::read_to_string(&diag_path).map_err(|e| io_err(&diag_path, e))?;
        for line in body.lines().skip(1) {
            if let Some((_, rate)) = line.split_once(',') {
                draws.rho_accept.push(rate.parse().unwrap_or(0.0));
            }
        }
    }
    Ok((draws, area_ids))
}

/// Parse a flat `key = value` file; '#' starts a comment, blank lines are
/// skipped.
pub fn parse_kv_file(path: &Path) -> Result<Vec<(String, String)>, IoError> {
    let body = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut out = Vec::new();
    for (idx, raw) in body.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| IoError::Parse {
            path: path.display().to_string(),
            line: idx + 1,
            message: "expected 'key = value'".to_string(),
        })?;
        out.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}

/// Full run configuration: sampler settings plus input locations and
/// summary options. Mirrors the flat config/manifest format.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub k: Option<usize>,
    pub chains: usize,
    pub iterations: usize,
    pub burn_in: f64,
    pub thinning: usize,
    pub seed: u64,
    pub shrinkage: ShrinkageVariant,
    pub rho_mode: RhoMode,
    pub rho_fixed: f64,
    pub tau: f64,
    pub mu_prior_variance: f64,
    pub beta_prior_variance: f64,
    pub sigma_prior_scale: f64,
    pub standardize_x: bool,
    pub level: f64,
    pub y_path: Option<String>,
    pub x_path: Option<String>,
    pub adj_path: Option<String>,
    pub areas_path: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            k: None,
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
            standardize_x: false,
            level: 0.95,
            y_path: None,
            x_path: None,
            adj_path: None,
            areas_path: None,
        }
    }
}

impl RunConfig {
    /// Apply one key-value pair. Manifest bookkeeping keys are accepted and
    /// ignored; anything else unknown is an error.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), IoError> {
        let bad = |k: &str, v: &str| IoError::Config(format!("invalid value '{v}' for key '{k}'"));
        match key {
            "k" => self.k = Some(value.parse().map_err(|_| bad(key, value))?),
            "chains" => self.chains = value.parse().map_err(|_| bad(key, value))?,
            "iterations" => self.iterations = value.parse().map_err(|_| bad(key, value))?,
            "burn_in" => self.burn_in = value.parse().map_err(|_| bad(key, value))?,
            "thinning" => self.thinning = value.parse().map_err(|_| bad(key, value))?,
            "seed" => self.seed = value.parse().map_err(|_| bad(key, value))?,
            "shrinkage" => {
                self.shrinkage =
                    ShrinkageVariant::from_code(value).map_err(|e| IoError::Config(e.to_string()))?
            }
            "rho_mode" => {
                self.rho_mode =
                    RhoMode::from_code(value).map_err(|e| IoError::Config(e.to_string()))?
            }
            "rho_fixed" => self.rho_fixed = value.parse().map_err(|_| bad(key, value))?,
            "tau" => self.tau = value.parse().map_err(|_| bad(key, value))?,
            "mu_prior_variance" => {
                self.mu_prior_variance = value.parse().map_err(|_| bad(key, value))?
            }
            "beta_prior_variance" => {
                self.beta_prior_variance = value.parse().map_err(|_| bad(key, value))?
            }
            "sigma_prior_scale" => {
                self.sigma_prior_scale = value.parse().map_err(|_| bad(key, value))?
            }
            "standardize_x" => self.standardize_x = value.parse().map_err(|_| bad(key, value))?,
            "level" => self.level = value.parse().map_err(|_| bad(key, value))?,
            "input.y.path" => self.y_path = Some(value.to_string()),
            "input.x.path" => self.x_path = Some(value.to_string()),
            "input.adj.path" => self.adj_path = Some(value.to_string()),
            "input.areas.path" => self.areas_path = Some(value.to_string()),
            _ if key.starts_with("input.") && key.ends_with(".sha256") => {}
            "version" | "created_unix" | "command" | "threads" => {}
            other => return Err(IoError::Config(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    pub fn load_file(&mut self, path: &Path) -> Result<(), IoError> {
        for (key, value) in parse_kv_file(path)? {
            self.apply(&key, &value)?;
        }
        Ok(())
    }

    pub fn to_fit_config(&self) -> Result<FitConfig, IoError> {
        let k = self
            .k
            .ok_or_else(|| IoError::Config("missing required key 'k'".to_string()))?;
        let mut cfg = FitConfig::new(k);
        cfg.chains = self.chains;
        cfg.iterations = self.iterations;
        cfg.burn_in = self.burn_in;
        cfg.thinning = self.thinning;
        cfg.seed = self.seed;
        cfg.shrinkage = self.shrinkage;
        cfg.rho_mode = self.rho_mode;
        cfg.rho_fixed = self.rho_fixed;
        cfg.tau = self.tau;
        cfg.mu_prior_variance = self.mu_prior_variance;
        cfg.beta_prior_variance = self.beta_prior_variance;
        cfg.sigma_prior_scale = self.sigma_prior_scale;
        Ok(cfg)
    }

    /// Settings in the order they appear in configs and manifests.
    pub fn entries(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        if let Some(k) = self.k {
            out.push(("k".to_string(), k.to_string()));
        }
        out.push(("chains".to_string(), self.chains.to_string()));
        out.push(("iterations".to_string(), self.iterations.to_string()));
        out.push(("burn_in".to_string(), self.burn_in.to_string()));
        out.push(("thinning".to_string(), self.thinning.to_string()));
        out.push(("seed".to_string(), self.seed.to_string()));
        out.push(("shrinkage".to_string(), self.shrinkage.code().to_string()));
        out.push(("rho_mode".to_string(), self.rho_mode.code().to_string()));
        out.push(("rho_fixed".to_string(), self.rho_fixed.to_string()));
        out.push(("tau".to_string(), self.tau.to_string()));
        out.push((
            "mu_prior_variance".to_string(),
            self.mu_prior_variance.to_string(),
        ));
        out.push((
            "beta_prior_variance".to_string(),
            self.beta_prior_variance.to_string(),
        ));
        out.push((
            "sigma_prior_scale".to_string(),
            self.sigma_prior_scale.to_string(),
        ));
        out.push(("standardize_x".to_string(), self.standardize_x.to_string()));
        out.push(("level".to_string(), self.level.to_string()));
        for (key, path) in [
            ("input.y.path", &self.y_path),
            ("input.x.path", &self.x_path),
            ("input.adj.path", &self.adj_path),
            ("input.areas.path", &self.areas_path),
        ] {
            if let Some(p) = path {
                out.push((key.to_string(), p.clone()));
            }
        }
        out
    }
}

/// Write a manifest: configuration first, then input digests and
/// bookkeeping. The manifest parses as a config file, so a run can be
/// repeated from it directly.
pub fn write_manifest(
    path: &Path,
    command: &str,
    config: &RunConfig,
    input_digests: &[(String, String)],
    threads: usize,
) -> Result<(), IoError> {
    let mut buf = String::new();
    let _ = writeln!(buf, "command = {command}");
    let _ = writeln!(buf, "version = {}", env!("CARGO_PKG_VERSION"));
    let created = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let _ = writeln!(buf, "created_unix = {created}");
    let _ = writeln!(buf, "threads = {threads}");
    for (key, value) in config.entries() {
        let _ = writeln!(buf, "{key} = {value}");
    }
    for (key, digest) in input_digests {
        let _ = writeln!(buf, "input.{key}.sha256 = {digest}");
    }
    std::fs::write(path, buf).map_err(|e| io_err(path, e))
}
