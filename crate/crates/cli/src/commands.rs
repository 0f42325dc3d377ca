//! Implementations of the three subcommands.

use crate::{CliError, FitArgs, SimulateArgs, SummarizeArgs};
use arealclust::graph::{load_adjacency, read_edge_list, AdjacencyGraph};
use arealclust::ingest::{check_area_order, impute_missing, read_value_table, Dataset};
use arealclust::io::{
    fmt_f64, read_draws, sha256_hex, write_csv, write_draws, write_manifest, RunConfig,
};
use arealclust::post::rand_index;
use arealclust::priors::{RhoMode, ShrinkageVariant};
use arealclust::sampler::fit as run_fit;
use arealclust::simstudy::{
    evaluate, kmeans_baseline, lattice_map, scenario_custom, scenario_sim1, scenario_sim2,
    SyntheticTruth,
};
use arealclust::spatial::order_south_to_north;
use std::path::{Path, PathBuf};

fn require_file(path: &Path, what: &str) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "{what} file '{}' does not exist",
            path.display()
        )))
    }
}

fn apply_overrides(cfg: &mut RunConfig, o: &crate::ConfigOverrides) -> Result<(), CliError> {
    if let Some(k) = o.k {
        cfg.k = Some(k);
    }
    if let Some(v) = o.chains {
        cfg.chains = v;
    }
    if let Some(v) = o.iterations {
        cfg.iterations = v;
    }
    if let Some(v) = o.burn_in {
        cfg.burn_in = v;
    }
    if let Some(v) = o.thinning {
        cfg.thinning = v;
    }
    if let Some(v) = o.seed {
        cfg.seed = v;
    }
    if let Some(v) = &o.shrinkage {
        cfg.shrinkage =
            ShrinkageVariant::from_code(v).map_err(|e| CliError::Validation(e.to_string()))?;
    }
    if let Some(v) = &o.rho_mode {
        cfg.rho_mode = RhoMode::from_code(v).map_err(|e| CliError::Validation(e.to_string()))?;
    }
    if let Some(v) = o.rho_fixed {
        cfg.rho_fixed = v;
    }
    if let Some(v) = o.tau {
        cfg.tau = v;
    }
    if let Some(v) = o.level {
        cfg.level = v;
    }
    if o.standardize_x {
        cfg.standardize_x = true;
    }
    Ok(())
}

/// Load the map and data for a fit: registry from `--areas` or the outcome
/// row order, adjacency validation, missing-cell imputation.
fn load_dataset(cfg: &RunConfig) -> Result<Dataset, CliError> {
    let y_path = PathBuf::from(cfg.y_path.as_ref().ok_or_else(|| {
        CliError::Validation("no outcome file: pass --y or set input.y.path".to_string())
    })?);
    let adj_path = PathBuf::from(cfg.adj_path.as_ref().ok_or_else(|| {
        CliError::Validation("no adjacency file: pass --adj or set input.adj.path".to_string())
    })?);
    require_file(&y_path, "outcome")?;
    require_file(&adj_path, "adjacency")?;
    let y_table = read_value_table(&y_path)?;
    let graph = match &cfg.areas_path {
        Some(areas) => {
            let areas = PathBuf::from(areas);
            require_file(&areas, "area registry")?;
            load_adjacency(&areas, &adj_path)?
        }
        None => {
            let edges = read_edge_list(&adj_path)?;
            AdjacencyGraph::from_named_edges(y_table.area_ids.clone(), &edges)?
        }
    };
    check_area_order(&y_table, &graph)?;
    graph.connected_components(); // warns when the map is disconnected
    let missing = y_table.values.iter().filter(|v| v.is_nan()).count();
    if missing > 0 {
        log::info!("imputing {missing} missing outcome cells from neighbor averages");
    }
    let y = impute_missing(&y_table.values, &graph)?;

    let x = match &cfg.x_path {
        Some(xp) => {
            let xp = PathBuf::from(xp);
            require_file(&xp, "covariate")?;
            let x_table = read_value_table(&xp)?;
            check_area_order(&x_table, &graph)?;
            let x_missing = x_table.values.iter().filter(|v| v.is_nan()).count();
            if x_missing > 0 {
                log::info!("imputing {x_missing} missing covariate cells from neighbor averages");
            }
            Some((impute_missing(&x_table.values, &graph)?, x_table.column_names))
        }
        None => None,
    };
    let (x_values, x_names) = match x {
        Some((values, names)) => (Some(values), names),
        None => (None, Vec::new()),
    };
    let mut data = Dataset::new(y, x_values, graph, y_table.column_names, x_names)?;
    if cfg.standardize_x {
        data.standardize_covariates();
    }
    Ok(data)
}

fn input_digests(cfg: &RunConfig) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (name, path) in [
        ("y", &cfg.y_path),
        ("x", &cfg.x_path),
        ("adj", &cfg.adj_path),
        ("areas", &cfg.areas_path),
    ] {
        if let Some(p) = path {
            out.push((name.to_string(), sha256_hex(Path::new(p))?));
        }
    }
    Ok(out)
}

pub fn fit(args: FitArgs, threads: usize) -> Result<(), CliError> {
    let mut cfg = RunConfig::default();
    if let Some(config_path) = &args.config {
        require_file(config_path, "config")?;
        cfg.load_file(config_path)?;
    }
    if let Some(p) = &args.y {
        cfg.y_path = Some(p.display().to_string());
    }
    if let Some(p) = &args.adj {
        cfg.adj_path = Some(p.display().to_string());
    }
    if let Some(p) = &args.x {
        cfg.x_path = Some(p.display().to_string());
    }
    if let Some(p) = &args.areas {
        cfg.areas_path = Some(p.display().to_string());
    }
    apply_overrides(&mut cfg, &args.overrides)?;

    let data = load_dataset(&cfg)?;
    let fit_cfg = cfg.to_fit_config().map_err(|e| CliError::Validation(e.to_string()))?;
    fit_cfg.validate()?;

    std::fs::create_dir_all(&args.out)?;
    write_manifest(
        &args.out.join("manifest.txt"),
        "fit",
        &cfg,
        &input_digests(&cfg)?,
        threads,
    )?;

    log::info!(
        "fitting K={} on {} areas, {} outcomes ({} chains x {} iterations)",
        fit_cfg.k,
        data.n(),
        data.d(),
        fit_cfg.chains,
        fit_cfg.iterations
    );
    let draws = run_fit(&data, &fit_cfg)?;
    write_draws(&args.out.join("draws"), &draws, data.graph.area_ids())?;
    let estimates = crate::summaries::write_all(
        &args.out.join("summary"),
        &draws,
        data.graph.area_ids(),
        cfg.level,
        true,
    )?;
    log::info!("DIC3 = {:.3}", estimates.dic3);
    Ok(())
}

pub fn summarize(args: SummarizeArgs) -> Result<(), CliError> {
    let relabel = match args.relabel.as_str() {
        "on" => true,
        "off" => false,
        other => {
            return Err(CliError::Validation(format!(
                "--relabel must be on or off, got '{other}'"
            )))
        }
    };
    if !args.draws.is_dir() {
        return Err(CliError::Validation(format!(
            "draws directory '{}' does not exist",
            args.draws.display()
        )));
    }
    let (draws, area_ids) = read_draws(&args.draws)?;
    if draws.is_empty() {
        return Err(CliError::Validation(format!(
            "draws directory '{}' holds no retained draws",
            args.draws.display()
        )));
    }
    std::fs::create_dir_all(&args.out)?;
    let cfg = RunConfig {
        level: args.level,
        ..RunConfig::default()
    };
    write_manifest(
        &args.out.join("manifest.txt"),
        &format!(
            "summarize --draws {} --relabel {}",
            args.draws.display(),
            args.relabel
        ),
        &cfg,
        &[("draws.z".to_string(), sha256_hex(&args.draws.join("z.csv"))?)],
        rayon::current_num_threads(),
    )?;
    crate::summaries::write_all(&args.out, &draws, &area_ids, args.level, relabel)?;
    Ok(())
}

struct Scenario {
    name: String,
    k_true: usize,
    d: usize,
    rho: Option<Vec<f64>>,
}

fn write_truth(dir: &Path, truth: &SyntheticTruth, area_ids: &[String]) -> Result<(), CliError> {
    write_csv(
        &dir.join("truth_z.csv"),
        &["area_id".to_string(), "cluster".to_string()],
        truth
            .z
            .iter()
            .zip(area_ids)
            .map(|(z, id)| vec![id.clone(), (z + 1).to_string()]),
    )?;
    let d = truth.d();
    let mu_header: Vec<String> = std::iter::once("cluster".to_string())
        .chain((1..=d).map(|j| format!("mu_j{j}")))
        .collect();
    write_csv(
        &dir.join("truth_mu.csv"),
        &mu_header,
        (0..truth.k()).map(|k| {
            let mut row = vec![(k + 1).to_string()];
            row.extend((0..d).map(|j| fmt_f64(truth.mu[(k, j)])));
            row
        }),
    )?;
    let sig_header: Vec<String> = (1..=d).map(|j| format!("sigma_j{j}")).collect();
    write_csv(
        &dir.join("truth_sigma.csv"),
        &sig_header,
        (0..d).map(|a| (0..d).map(|b| fmt_f64(truth.sigma[(a, b)])).collect()),
    )?;
    write_csv(
        &dir.join("truth_rho.csv"),
        &["stick".to_string(), "rho".to_string()],
        truth
            .rho
            .iter()
            .enumerate()
            .map(|(k, r)| vec![(k + 1).to_string(), fmt_f64(*r)]),
    )?;
    if let Some(flags) = &truth.informative {
        write_csv(
            &dir.join("truth_informative.csv"),
            &["outcome".to_string(), "informative".to_string()],
            flags
                .iter()
                .enumerate()
                .map(|(j, f)| vec![(j + 1).to_string(), (*f as u8).to_string()]),
        )?;
    }
    Ok(())
}

pub fn simulate(args: SimulateArgs, threads: usize) -> Result<(), CliError> {
    let scenario = match args.scenario.as_str() {
        "sim1" => Scenario {
            name: "sim1".to_string(),
            k_true: 3,
            d: args.d.unwrap_or(10),
            rho: None,
        },
        "sim2" => Scenario {
            name: "sim2".to_string(),
            k_true: 4,
            d: 3,
            rho: None,
        },
        "custom" => {
            let k_true = args.k_true.ok_or_else(|| {
                CliError::Validation("custom scenario needs --k-true".to_string())
            })?;
            let d = args
                .d
                .ok_or_else(|| CliError::Validation("custom scenario needs --d".to_string()))?;
            let rho = match &args.rho {
                Some(list) => {
                    let parsed: Result<Vec<f64>, _> =
                        list.split(',').map(|s| s.trim().parse::<f64>()).collect();
                    let parsed = parsed.map_err(|_| {
                        CliError::Validation(format!("cannot parse --rho '{list}'"))
                    })?;
                    if parsed.len() != k_true - 1 {
                        return Err(CliError::Validation(format!(
                            "--rho needs {} values for k_true={}",
                            k_true - 1,
                            k_true
                        )));
                    }
                    parsed
                }
                None => vec![0.9; k_true - 1],
            };
            Scenario {
                name: "custom".to_string(),
                k_true,
                d,
                rho: Some(rho),
            }
        }
        other => {
            return Err(CliError::Validation(format!(
                "unknown scenario '{other}' (use sim1, sim2 or custom)"
            )))
        }
    };

    // Map: supplied files or the built-in 259-area lattice.
    let (graph, latitudes): (AdjacencyGraph, Vec<f64>) = match (&args.adj, &args.areas) {
        (Some(adj), Some(areas)) => {
            require_file(adj, "adjacency")?;
            require_file(areas, "area registry")?;
            let g = load_adjacency(areas, adj)?;
            let lat = match &args.lat {
                Some(lat_path) => {
                    require_file(lat_path, "latitude")?;
                    let table = read_value_table(lat_path)?;
                    check_area_order(&table, &g)?;
                    table.values.column(0).iter().copied().collect()
                }
                None => (0..g.n()).map(|i| i as f64).collect(),
            };
            (g, lat)
        }
        (None, None) => {
            let (g, lat) = lattice_map(37, 7);
            (g, lat)
        }
        _ => {
            return Err(CliError::Validation(
                "--adj and --areas must be given together".to_string(),
            ))
        }
    };
    let ordering = order_south_to_north(&latitudes);

    let seed = args.seed.unwrap_or(1);
    let fit_k = args.fit_k.unwrap_or(scenario.k_true);
    let mut run_cfg = RunConfig {
        k: Some(fit_k),
        seed,
        ..RunConfig::default()
    };
    if let Some(v) = &args.shrinkage {
        run_cfg.shrinkage =
            ShrinkageVariant::from_code(v).map_err(|e| CliError::Validation(e.to_string()))?;
    }
    if let Some(v) = &args.rho_mode {
        run_cfg.rho_mode = RhoMode::from_code(v).map_err(|e| CliError::Validation(e.to_string()))?;
    }
    if let Some(v) = args.iterations {
        run_cfg.iterations = v;
    }
    if let Some(v) = args.chains {
        run_cfg.chains = v;
    }

    std::fs::create_dir_all(&args.out)?;
    write_manifest(
        &args.out.join("manifest.txt"),
        &format!("simulate --scenario {}", scenario.name),
        &run_cfg,
        &[],
        threads,
    )?;

    let mut metrics_rows: Vec<Vec<String>> = Vec::new();
    for rep in 0..args.replicates {
        let rep_seed = seed + rep as u64;
        let rep_dir = args.out.join(format!("rep_{rep:03}"));
        std::fs::create_dir_all(&rep_dir)?;
        let (data, truth) = match scenario.name.as_str() {
            "sim1" => scenario_sim1(&graph, &ordering, scenario.d, rep_seed),
            "sim2" => scenario_sim2(&graph, &ordering, rep_seed),
            _ => {
                let rho = scenario.rho.as_ref().expect("custom rho");
                scenario_custom(&graph, &ordering, scenario.k_true, scenario.d, rho, rep_seed)
            }
        };
        graph.write_registry(&rep_dir.join("areas.txt"))?;
        graph.write_edge_list(&rep_dir.join("edges.csv"))?;
        let mut y_header = vec!["area_id".to_string()];
        y_header.extend(data.outcome_names.iter().cloned());
        write_csv(
            &rep_dir.join("y.csv"),
            &y_header,
            (0..data.n()).map(|i| {
                let mut row = vec![graph.area_ids()[i].clone()];
                row.extend((0..data.d()).map(|j| fmt_f64(data.y[(i, j)])));
                row
            }),
        )?;
        write_truth(&rep_dir, &truth, graph.area_ids())?;

        if args.fit {
            let mut fit_cfg = run_cfg.to_fit_config().map_err(|e| CliError::Validation(e.to_string()))?;
            fit_cfg.seed = rep_seed.wrapping_mul(1000).wrapping_add(17);
            let draws = run_fit(&data, &fit_cfg)?;
            let estimates = crate::summaries::write_all(
                &rep_dir.join("summary"),
                &draws,
                graph.area_ids(),
                run_cfg.level,
                true,
            )?;
            let km = kmeans_baseline(&data.y, fit_k, rep_seed + 101);
            let model_metrics = evaluate(&truth, &estimates.partition, &data.y, &estimates.mu_mean);
            let km_rand = rand_index(&truth.z, &km).map_err(|e| CliError::Validation(e.to_string()))?;
            let mut row = vec![
                rep.to_string(),
                fmt_f64(model_metrics.rand),
                fmt_f64(km_rand),
                fmt_f64(estimates.dic3),
            ];
            for k in 0..truth.k() {
                row.push(fmt_f64(model_metrics.per_cluster_rand[k]));
            }
            for k in 0..truth.k() {
                row.push(fmt_f64(model_metrics.cluster_mse(k)));
            }
            metrics_rows.push(row);
            log::info!(
                "replicate {rep}: rand={:.3}, kmeans rand={:.3}, DIC3={:.1}",
                model_metrics.rand,
                km_rand,
                estimates.dic3
            );
        }
    }

    if args.fit {
        let k_true = scenario.k_true;
        let mut header = vec![
            "replicate".to_string(),
            "rand".to_string(),
            "kmeans_rand".to_string(),
            "dic3".to_string(),
        ];
        header.extend((1..=k_true).map(|k| format!("rand_cluster{k}")));
        header.extend((1..=k_true).map(|k| format!("mse_cluster{k}")));
        write_csv(&args.out.join("metrics.csv"), &header, metrics_rows.into_iter())?;
    }
    Ok(())
}
