//! Outcome construction and data ingestion.
//!
//! Raw mortality inputs become the model's outcome matrix Y through one of
//! two routes: log standardized mortality ratios, log(O/E) with expected
//! deaths built from age-class populations and reference rates, or log
//! relative risks, log(MR_i/MR) with age-adjusted rates. Missing cells are
//! filled with the arithmetic mean of the observed values at neighboring
//! areas before any log transform.

use crate::graph::AdjacencyGraph;
use nalgebra::DMatrix;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("zero observed count in cells {0:?}; impute before taking logs")]
    ZeroObserved(Vec<(usize, usize)>),
    #[error("nonpositive rate at area {area}, outcome {outcome}")]
    NonPositiveRate { area: usize, outcome: usize },
    #[error("nonpositive reference rate for outcome {outcome}")]
    NonPositiveReferenceRate { outcome: usize },
    #[error("standard population classes sum to {got}, expected {expected}")]
    PopulationMismatch { got: f64, expected: f64 },
    #[error("cannot impute area {area}, outcome {outcome}: all neighbors missing")]
    NoObservedNeighbor { area: usize, outcome: usize },
    #[error("outcome rows do not match the area registry: {0}")]
    AreaMismatch(String),
    #[error("non-finite value at area {area}, column {column}")]
    NonFinite { area: usize, column: usize },
    #[error("{path}: row {row}: {message}")]
    BadCell {
        path: String,
        row: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Outcome matrix bound to a map, with optional covariates.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub y: DMatrix<f64>,
    pub x: Option<DMatrix<f64>>,
    pub graph: AdjacencyGraph,
    pub outcome_names: Vec<String>,
    pub covariate_names: Vec<String>,
}

impl Dataset {
    /// Bind a complete outcome matrix (and optional covariates) to a graph,
    /// enforcing the row-order and finiteness invariants.
    pub fn new(
        y: DMatrix<f64>,
        x: Option<DMatrix<f64>>,
        graph: AdjacencyGraph,
        outcome_names: Vec<String>,
        covariate_names: Vec<String>,
    ) -> Result<Self, IngestError> {
        if y.nrows() != graph.n() {
            return Err(IngestError::AreaMismatch(format!(
                "{} outcome rows for {} areas",
                y.nrows(),
                graph.n()
            )));
        }
        if outcome_names.len() != y.ncols() {
            return Err(IngestError::Dimension(format!(
                "{} outcome names for {} columns",
                outcome_names.len(),
                y.ncols()
            )));
        }
        for i in 0..y.nrows() {
            for j in 0..y.ncols() {
                if !y[(i, j)].is_finite() {
                    return Err(IngestError::NonFinite { area: i, column: j });
                }
            }
        }
        if let Some(x) = &x {
            if x.nrows() != graph.n() {
                return Err(IngestError::AreaMismatch(format!(
                    "{} covariate rows for {} areas",
                    x.nrows(),
                    graph.n()
                )));
            }
            if covariate_names.len() != x.ncols() {
                return Err(IngestError::Dimension(format!(
                    "{} covariate names for {} columns",
                    covariate_names.len(),
                    x.ncols()
                )));
            }
            for i in 0..x.nrows() {
                for j in 0..x.ncols() {
                    if !x[(i, j)].is_finite() {
                        return Err(IngestError::NonFinite { area: i, column: j });
                    }
                }
            }
        }
        Ok(Dataset {
            y,
            x,
            graph,
            outcome_names,
            covariate_names,
        })
    }

    pub fn n(&self) -> usize {
        self.y.nrows()
    }

    pub fn d(&self) -> usize {
        self.y.ncols()
    }

    pub fn p(&self) -> usize {
        self.x.as_ref().map_or(0, DMatrix::ncols)
    }

    /// Center and scale every covariate column to unit sample variance.
    pub fn standardize_covariates(&mut self) {
        if let Some(x) = &mut self.x {
            let n = x.nrows() as f64;
            for mut col in x.column_iter_mut() {
                let mean = col.sum() / n;
                let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
                let sd = var.sqrt();
                for v in col.iter_mut() {
                    *v = if sd > 0.0 { (*v - mean) / sd } else { 0.0 };
                }
            }
        }
    }
}

/// Expected death counts E_ij = Σ_t n_it·r_jt from area populations by age
/// class (n×T) and reference rates by age class (d×T).
pub fn expected_deaths(
    pop_by_age: &DMatrix<f64>,
    rates_by_age: &DMatrix<f64>,
) -> Result<DMatrix<f64>, IngestError> {
    if pop_by_age.ncols() != rates_by_age.ncols() {
        return Err(IngestError::Dimension(format!(
            "{} population age classes vs {} rate age classes",
            pop_by_age.ncols(),
            rates_by_age.ncols()
        )));
    }
    Ok(pop_by_age * rates_by_age.transpose())
}

/// Log standardized mortality ratios y_ij = log(O_ij/E_ij). Zero observed
/// counts are reported, not patched: a continuity correction would change
/// the model input silently.
pub fn log_smr(
    observed: &DMatrix<f64>,
    expected: &DMatrix<f64>,
) -> Result<DMatrix<f64>, IngestError> {
    if observed.shape() != expected.shape() {
        return Err(IngestError::Dimension(format!(
            "observed {:?} vs expected {:?}",
            observed.shape(),
            expected.shape()
        )));
    }
    let mut zeros = Vec::new();
    for i in 0..observed.nrows() {
        for j in 0..observed.ncols() {
            if observed[(i, j)] <= 0.0 {
                zeros.push((i, j));
            }
        }
    }
    if !zeros.is_empty() {
        return Err(IngestError::ZeroObserved(zeros));
    }
    Ok(DMatrix::from_fn(observed.nrows(), observed.ncols(), |i, j| {
        observed[(i, j)].ln() - expected[(i, j)].ln()
    }))
}

/// Age-adjusted rate Σ_t rate_t·P_t/P for a standard population split into
/// age classes. The class populations must add up to the declared total.
pub fn age_adjusted_rate(
    rates_by_age: &[f64],
    std_pop_by_age: &[f64],
    std_pop_total: f64,
) -> Result<f64, IngestError> {
    if rates_by_age.len() != std_pop_by_age.len() {
        return Err(IngestError::Dimension(format!(
            "{} rates vs {} population classes",
            rates_by_age.len(),
            std_pop_by_age.len()
        )));
    }
    let total: f64 = std_pop_by_age.iter().sum();
    if (total - std_pop_total).abs() > 1e-9 * std_pop_total.abs().max(1.0) {
        return Err(IngestError::PopulationMismatch {
            got: total,
            expected: std_pop_total,
        });
    }
    Ok(rates_by_age
        .iter()
        .zip(std_pop_by_age)
        .map(|(r, p)| r * p / std_pop_total)
        .sum())
}

/// Log relative risks y_ij = log(MR_ij/MR_j) against territory-wide rates.
pub fn log_relative_risk(
    area_rate: &DMatrix<f64>,
    national_rate: &[f64],
) -> Result<DMatrix<f64>, IngestError> {
    if area_rate.ncols() != national_rate.len() {
        return Err(IngestError::Dimension(format!(
            "{} outcome columns vs {} reference rates",
            area_rate.ncols(),
            national_rate.len()
        )));
    }
    for (j, &r) in national_rate.iter().enumerate() {
        if r <= 0.0 {
            return Err(IngestError::NonPositiveReferenceRate { outcome: j });
        }
    }
    let mut out = DMatrix::zeros(area_rate.nrows(), area_rate.ncols());
    for i in 0..area_rate.nrows() {
        for j in 0..area_rate.ncols() {
            let r = area_rate[(i, j)];
            if r <= 0.0 {
                return Err(IngestError::NonPositiveRate { area: i, outcome: j });
            }
            out[(i, j)] = r.ln() - national_rate[j].ln();
        }
    }
    Ok(out)
}

/// Replace every NaN cell with the arithmetic mean of the observed values
/// at the area's neighbors in the same column. Observed cells pass through
/// unchanged; a cell whose neighbors are all missing in that column is an
/// error (no iterative fill).
pub fn impute_missing(
    values: &DMatrix<f64>,
    graph: &AdjacencyGraph,
) -> Result<DMatrix<f64>, IngestError> {
    if values.nrows() != graph.n() {
        return Err(IngestError::AreaMismatch(format!(
            "{} rows for {} areas",
            values.nrows(),
            graph.n()
        )));
    }
    let mut out = values.clone();
    for j in 0..values.ncols() {
        for i in 0..values.nrows() {
            if values[(i, j)].is_nan() {
                let observed: Vec<f64> = graph
                    .neighbors(i)
                    .iter()
                    .map(|&nb| values[(nb, j)])
                    .filter(|v| !v.is_nan())
                    .collect();
                if observed.is_empty() {
                    return Err(IngestError::NoObservedNeighbor { area: i, outcome: j });
                }
                out[(i, j)] = observed.iter().sum::<f64>() / observed.len() as f64;
            }
        }
    }
    Ok(out)
}

/// Parsed tabular file: `area_id,<col_1>,...,<col_m>` with empty fields
/// read as NaN (missing).
pub struct ValueTable {
    pub area_ids: Vec<String>,
    pub column_names: Vec<String>,
    pub values: DMatrix<f64>,
}

/// Read an outcome or covariate file. One row per area; row order is the
/// registry order of the map.
pub fn read_value_table(path: &Path) -> Result<ValueTable, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|source| IngestError::Csv {
            path: path.display().to_string(),
            source,
        })?;
    let headers = reader
        .headers()
        .map_err(|source| IngestError::Csv {
            path: path.display().to_string(),
            source,
        })?
        .clone();
    if headers.is_empty() || &headers[0] != "area_id" {
        return Err(IngestError::BadCell {
            path: path.display().to_string(),
            row: 0,
            message: "first header column must be 'area_id'".to_string(),
        });
    }
    let column_names: Vec<String> = headers.iter().skip(1).map(String::from).collect();
    let mut area_ids = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (pos, record) in reader.records().enumerate() {
        let row = pos + 1;
        let record = record.map_err(|source| IngestError::Csv {
            path: path.display().to_string(),
            source,
        })?;
        if record.len() != column_names.len() + 1 {
            return Err(IngestError::BadCell {
                path: path.display().to_string(),
                row,
                message: format!("expected {} fields, got {}", column_names.len() + 1, record.len()),
            });
        }
        area_ids.push(record[0].to_string());
        let mut vals = Vec::with_capacity(column_names.len());
        for field in record.iter().skip(1) {
            if field.is_empty() {
                vals.push(f64::NAN);
            } else {
                let v: f64 = field.parse().map_err(|_| IngestError::BadCell {
                    path: path.display().to_string(),
                    row,
                    message: format!("cannot parse '{field}' as a number"),
                })?;
                vals.push(v);
            }
        }
        rows.push(vals);
    }
    let n = rows.len();
    let m = column_names.len();
    let values = DMatrix::from_fn(n, m, |i, j| rows[i][j]);
    Ok(ValueTable {
        area_ids,
        column_names,
        values,
    })
}

/// Check that a value table's rows follow the registry order of the graph.
pub fn check_area_order(table: &ValueTable, graph: &AdjacencyGraph) -> Result<(), IngestError> {
    if table.area_ids.len() != graph.n() {
        return Err(IngestError::AreaMismatch(format!(
            "{} rows for {} areas",
            table.area_ids.len(),
            graph.n()
        )));
    }
    for (i, id) in table.area_ids.iter().enumerate() {
        if graph.area_ids()[i] != *id {
            return Err(IngestError::AreaMismatch(format!(
                "row {} is '{}', expected '{}'",
                i + 1,
                id,
                graph.area_ids()[i]
            )));
        }
    }
    Ok(())
}
