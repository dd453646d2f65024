use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use netwatch::calib::{calibrate_grid, estimate_ced_grid, phase1_summary, UclTable, TAG_ARL, TAG_CED};
use netwatch::charts::run_chart;
use netwatch::graph::edgelist::{
    from_edge_list, padded_registry, parse_edge_list, to_edge_list, Ingested, NodeRegistry,
    TimeFormat,
};
use netwatch::simgen::generate_series;
use netwatch::stats::descriptive;
use netwatch::tergm::gof_summary;
use netwatch::{
    derive_seed, estimate_series, mple_fit, phase1_target, stream_rng, CalibResult, CedResult, ChartConfig,
    EstimatorKind, PhaseISummary, ReplicationPool,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::RunConfig;
use crate::error::CliError;

const TAG_GENERATE: u64 = 0x4745_4e;
const TAG_GOF: u64 = 0x474f_46;

/// Written by `calibrate`, read back by `monitor` via `chart.calibration_file`.
#[derive(Debug, Serialize, Deserialize)]
pub struct CalibrationFile {
    pub estimator: EstimatorKind,
    pub window: usize,
    pub phase1: PhaseISummary,
    pub table: UclTable,
    pub results: Vec<CalibResult>,
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    let p = dir.join(name);
    std::fs::write(&p, contents).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    write(dir, name, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn load_input(cfg: &RunConfig) -> Result<(Ingested, TimeFormat), CliError> {
    let path = cfg.input()?;
    let f = File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let (records, format) = parse_edge_list(BufReader::new(f))?;
    let registry = match &cfg.io.registry {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            Some(NodeRegistry::from_csv(&text)?)
        }
        None => None,
    };
    Ok((from_edge_list(&records, registry)?, format))
}

pub fn generate(cfg: &RunConfig, seed: u64) -> Result<(), CliError> {
    let gen = cfg.gen_config();
    let anomaly = cfg.anomaly_spec()?;
    let len = cfg.generator.length;
    let series = generate_series(&gen, len, anomaly.clone(), stream_rng(derive_seed(seed, TAG_GENERATE), 0))?;
    let registry = padded_registry(gen.n_nodes);
    let dir = cfg.output_dir();
    write(dir, "series.csv", &to_edge_list(&series, Some(&registry)))?;
    write(dir, "nodes.csv", &registry.to_csv())?;
    let densities: Vec<f64> = series.graphs().iter().map(|g| g.density()).collect();
    write_json(
        dir,
        "generate.json",
        &json!({
            "start": series.start(),
            "end": series.end(),
            "length": series.len(),
            "n_nodes": gen.n_nodes,
            "anomaly": anomaly,
            "mean_density": densities.iter().sum::<f64>() / densities.len().max(1) as f64,
        }),
    )
}

pub fn fit(cfg: &RunConfig) -> Result<(), CliError> {
    let pipeline = cfg.pipeline_config()?;
    let (ing, format) = load_input(cfg)?;
    let estimates = estimate_series(&ing.series, &pipeline)?;
    let dir = cfg.output_dir();

    let mut est = format!("t,{}\n", pipeline.terms.names().join(","));
    for e in &estimates {
        est.push_str(&format.format(e.t));
        for v in &e.values {
            est.push_str(&format!(",{v}"));
        }
        est.push('\n');
    }
    write(dir, "estimates.csv", &est)?;

    let mut desc = String::from("t,edges,density,reciprocity,transitivity\n");
    for (t, g) in ing.series.iter() {
        let d = descriptive(g);
        desc.push_str(&format!(
            "{},{},{},{},{}\n",
            format.format(t),
            g.edge_count(),
            d.density,
            d.reciprocity,
            d.transitivity
        ));
    }
    write(dir, "descriptive.csv", &desc)?;
    write_json(
        dir,
        "fit.json",
        &json!({
            "nodes": ing.registry.len(),
            "time_points": ing.series.len(),
            "start": format.format(ing.series.start()),
            "end": format.format(ing.series.end()),
            "dropped_self_loops": ing.dropped_self_loops,
            "collapsed_duplicates": ing.collapsed_duplicates,
            "estimator": pipeline.kind,
            "window": pipeline.window,
            "estimates": estimates.len(),
        }),
    )
}

pub fn calibrate(cfg: &RunConfig, seed: u64) -> Result<(), CliError> {
    let gen = cfg.gen_config();
    let pipeline = cfg.pipeline_config()?;
    let charts = cfg.chart_grid()?;
    let arl0s = cfg.arl0s();
    let (summary, target) = phase1_target(&gen, &pipeline, cfg.phase1_design(), seed)?;
    let horizon = horizon_for(cfg.calibration.horizon, &arl0s);
    let mut pool = ReplicationPool::new(
        &gen,
        &pipeline,
        None,
        target,
        cfg.calibration.replications,
        horizon,
        derive_seed(seed, TAG_ARL),
    )?;
    let (table, results) = calibrate_grid(&mut pool, &charts, &arl0s, cfg.calibration.tolerance)?;
    let dir = cfg.output_dir();
    write(dir, "ucl_table.csv", &table.to_csv())?;
    write_json(dir, "phase1.json", &summary)?;
    write_json(
        dir,
        "calibration.json",
        &CalibrationFile {
            estimator: pipeline.kind,
            window: pipeline.window,
            phase1: summary,
            table,
            results,
        },
    )
}

fn horizon_for(explicit: Option<usize>, arl0s: &[f64]) -> usize {
    explicit.unwrap_or_else(|| {
        let top = arl0s.iter().copied().fold(1.0, f64::max);
        (20.0 * top).ceil() as usize
    })
}

fn resolve_ucl(cfg: &RunConfig, chart: &ChartConfig) -> Result<f64, CliError> {
    if let Some(u) = cfg.chart.ucl {
        if !(u.is_finite() && u >= 0.0) {
            return Err(CliError::Config(format!("chart.ucl must be finite and >= 0, got {u}")));
        }
        return Ok(u);
    }
    let Some(path) = &cfg.chart.calibration_file else {
        return Err(CliError::Config("monitor needs chart.ucl or chart.calibration_file".into()));
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let file: CalibrationFile =
        serde_json::from_str(&text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    if file.estimator != cfg.pipeline.estimator || file.window != cfg.pipeline.window {
        return Err(CliError::Config(format!(
            "calibration file was made for {:?} with window {}, pipeline uses {:?} with window {}",
            file.estimator, file.window, cfg.pipeline.estimator, cfg.pipeline.window
        )));
    }
    let matching: Vec<&CalibResult> = file.results.iter().filter(|r| r.chart == *chart).collect();
    let pick = match matching.as_slice() {
        [] => None,
        [only] => Some(*only),
        many => many.iter().copied().find(|r| r.arl0 == cfg.calibration.arl0),
    };
    pick.map(|r| r.ucl)
        .ok_or_else(|| CliError::Config(format!("no UCL for {chart} in {}", path.display())))
}

pub fn monitor(cfg: &RunConfig) -> Result<(), CliError> {
    let pipeline = cfg.pipeline_config()?;
    let chart = cfg.chart_config()?;
    let ucl = resolve_ucl(cfg, &chart)?;
    let (ing, format) = load_input(cfg)?;
    let estimates = estimate_series(&ing.series, &pipeline)?;
    let Some(first) = estimates.first() else {
        return Err(netwatch::Error::WindowTooShort {
            got: ing.series.len(),
            need: pipeline.warmup(),
        }
        .into());
    };
    let m = &cfg.monitor;
    let p1_start = match &m.phase1_start {
        Some(s) => s.resolve("monitor.phase1_start")?,
        None => first.t,
    };
    let p1_end = m
        .phase1_end
        .as_ref()
        .ok_or_else(|| CliError::Config("monitor needs monitor.phase1_end".into()))?
        .resolve("monitor.phase1_end")?;
    let start = match &m.start {
        Some(s) => s.resolve("monitor.start")?,
        None => p1_end + 1,
    };
    if p1_start > p1_end {
        return Err(CliError::Config("monitor.phase1_start is after monitor.phase1_end".into()));
    }
    if start <= p1_end && !m.allow_overlap {
        return Err(CliError::Config(
            "monitored span overlaps the Phase-I span; set monitor.allow_overlap = true to permit".into(),
        ));
    }
    let phase1: Vec<_> = estimates
        .iter()
        .filter(|e| (p1_start..=p1_end).contains(&e.t))
        .cloned()
        .collect();
    let summary = phase1_summary(&phase1)?;
    let target = summary.target()?;
    let trace = run_chart(
        &chart,
        &target,
        estimates.iter().map(|e| (e.t, e.values.as_slice())),
        ucl,
        cfg.chart.reset_on_signal,
    )?;

    let mut csv = String::from("t,statistic,ucl,signal\n");
    for p in &trace {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            format.format(p.t),
            p.statistic,
            p.ucl,
            u8::from(p.signal)
        ));
    }
    let dir = cfg.output_dir();
    write(dir, "trace.csv", &csv)?;

    let signals: Vec<i64> = trace.iter().filter(|p| p.signal).map(|p| p.t).collect();
    let phase2: Vec<String> = signals.iter().filter(|&&t| t >= start).map(|&t| format.format(t)).collect();
    let phase2_points = trace.iter().filter(|p| p.t >= start).count();
    write_json(
        dir,
        "monitor.json",
        &json!({
            "chart": chart,
            "ucl": ucl,
            "reset_on_signal": cfg.chart.reset_on_signal,
            "phase1": {
                "start": format.format(p1_start),
                "end": format.format(p1_end),
                "estimates": summary.n_samples,
                "signals": signals.iter().filter(|&&t| (p1_start..=p1_end).contains(&t)).count(),
            },
            "monitor_start": format.format(start),
            "monitored_points": phase2_points,
            "first_signal": phase2.first(),
            "signal_count": phase2.len(),
            "signals": phase2,
        }),
    )
}

pub fn evaluate_ced(cfg: &RunConfig, seed: u64) -> Result<(), CliError> {
    let gen = cfg.gen_config();
    let pipeline = cfg.pipeline_config()?;
    let charts = cfg.chart_grid()?;
    let arl0 = cfg.calibration.arl0;
    let anomaly = cfg.anomaly_spec()?;
    let tau = anomaly.as_ref().map_or(cfg.ced.tau, |a| a.tau);
    let (_, target) = phase1_target(&gen, &pipeline, cfg.phase1_design(), seed)?;

    let (grid, calibration): (Vec<(ChartConfig, f64)>, Vec<CalibResult>) = match cfg.chart.ucl {
        Some(u) if charts.len() == 1 => (vec![(charts[0], u)], Vec::new()),
        _ => {
            let mut pool = ReplicationPool::new(
                &gen,
                &pipeline,
                None,
                target.clone(),
                cfg.calibration.replications,
                horizon_for(cfg.calibration.horizon, &[arl0]),
                derive_seed(seed, TAG_ARL),
            )?;
            let (_, results) = calibrate_grid(&mut pool, &charts, &[arl0], cfg.calibration.tolerance)?;
            (results.iter().map(|r| (r.chart, r.ucl)).collect(), results)
        }
    };

    let mut pool = ReplicationPool::new(
        &gen,
        &pipeline,
        anomaly.as_ref(),
        target,
        cfg.ced.replications,
        horizon_for(cfg.ced.horizon, &[arl0]),
        derive_seed(seed, TAG_CED),
    )?;
    let ced: CedResult = estimate_ced_grid(&mut pool, &grid, tau)?;
    write_json(
        cfg.output_dir(),
        "ced.json",
        &json!({
            "anomaly": anomaly,
            "tau": tau,
            "arl0": arl0,
            "calibration": calibration,
            "ced": ced,
        }),
    )
}

pub fn gof(cfg: &RunConfig, seed: u64) -> Result<(), CliError> {
    let pipeline = cfg.pipeline_config()?;
    let (ing, format) = load_input(cfg)?;
    let series = &ing.series;
    let end = match &cfg.gof.end {
        Some(s) => s.resolve("gof.end")?,
        None => series.end(),
    };
    let z = pipeline.window;
    let from = end - z as i64 + 1;
    let window = series.slice(from, end).ok_or_else(|| {
        CliError::Config(format!(
            "gof window {}..={} is outside the series {}..={}",
            format.format(from),
            format.format(end),
            format.format(series.start()),
            format.format(series.end())
        ))
    })?;
    let fit = mple_fit(window.graphs(), &pipeline.terms, pipeline.lag)?;
    let mut rng = stream_rng(derive_seed(seed, TAG_GOF), 0);
    let report = gof_summary(&fit.theta, &pipeline.terms, &window, cfg.gof.n_sims, cfg.gof.sweeps, &mut rng)?;
    let dir = cfg.output_dir();
    write(dir, "gof.csv", &report.to_csv())?;
    let names = pipeline.terms.names();
    write_json(
        dir,
        "gof.json",
        &json!({
            "window": { "start": format.format(from), "end": format.format(end) },
            "terms": names,
            "fit": fit,
            "coverage": report.coverage(),
            "report": report,
        }),
    )
}
