use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use netwatch::calib::{estimate_ced_grid, TAG_ARL, TAG_CED};
use netwatch::simgen::{generate_series, metropolis_sweeps};
use netwatch::{
    acf, derive_seed, estimate_series, mahalanobis, mple_fit, phase1_target, stream_rng, AnomalySpec, ChartConfig,
    ChartTarget, DirectedGraph, EstimatorKind, GenConfig, McusumState, MewmaState, PhaseIDesign, PipelineConfig,
    ReplicationPool, Term, TermSet,
};
use rand::Rng;

const ARL0: f64 = 50.0;
const TAU: i64 = 101;
const CALIB_REPS: usize = 300;
const CED_REPS: usize = 100;
const HORIZON: usize = 1000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn lambda_grid() -> Vec<ChartConfig> {
    (1..=10).map(|i| ChartConfig::Mewma { lambda: i as f64 / 10.0 }).collect()
}

fn k_grid() -> Vec<ChartConfig> {
    (5..=15).map(|i| ChartConfig::Mcusum { k: i as f64 / 10.0 }).collect()
}

/// Phase-I target and calibrated UCLs for one estimator at z = 7.
struct Calibrated {
    target: ChartTarget,
    ucls: Vec<(ChartConfig, f64)>,
}

struct Lab {
    gen: GenConfig,
    calibrated: BTreeMap<&'static str, Calibrated>,
}

impl Lab {
    fn new() -> Self {
        Self {
            gen: GenConfig::default(),
            calibrated: BTreeMap::new(),
        }
    }

    fn pipeline(kind: EstimatorKind) -> PipelineConfig {
        PipelineConfig::new(kind, 7)
    }

    fn calibrated(&mut self, kind: EstimatorKind) -> Result<&Calibrated, String> {
        let key = match kind {
            EstimatorKind::ThetaHat => "theta",
            EstimatorKind::SBar => "s",
        };
        if !self.calibrated.contains_key(key) {
            let pipe = Self::pipeline(kind);
            let (_, target) = phase1_target(&self.gen, &pipe, PhaseIDesign::default(), 1).map_err(|e| e.to_string())?;
            let mut pool = ReplicationPool::new(
                &self.gen,
                &pipe,
                None,
                target.clone(),
                CALIB_REPS,
                HORIZON,
                derive_seed(2, TAG_ARL),
            )
            .map_err(|e| e.to_string())?;
            let mut ucls = Vec::new();
            for c in lambda_grid().into_iter().chain(k_grid()) {
                let r = pool.calibrate(&c, ARL0, 0.01).map_err(|e| format!("{c}: {e}"))?;
                ucls.push((c, r.ucl));
            }
            self.calibrated.insert(key, Calibrated { target, ucls });
        }
        Ok(&self.calibrated[key])
    }

    fn ucl(&mut self, kind: EstimatorKind, chart: ChartConfig) -> Result<f64, String> {
        self.calibrated(kind)?
            .ucls
            .iter()
            .find(|(c, _)| *c == chart)
            .map(|(_, u)| *u)
            .ok_or_else(|| format!("{chart} not calibrated"))
    }

    /// CED pool for one estimator and anomaly case (`None` = control).
    fn ced_pool(&mut self, kind: EstimatorKind, case: Option<&str>) -> Result<ReplicationPool, String> {
        let target = self.calibrated(kind)?.target.clone();
        let anomaly = case.map(|c| AnomalySpec::case(c, TAU)).transpose().map_err(|e| e.to_string())?;
        ReplicationPool::new(
            &self.gen,
            &Self::pipeline(kind),
            anomaly.as_ref(),
            target,
            CED_REPS,
            HORIZON,
            derive_seed(3, TAG_CED),
        )
        .map_err(|e| e.to_string())
    }
}

fn c1_steady_state(_: &mut Lab) -> Outcome {
    let start = Instant::now();
    let cfg = GenConfig::default();
    let mut total = 0.0;
    let mut count = 0.0;
    for seed in 0..20 {
        let s = generate_series(&cfg, 100, None, stream_rng(1000 + seed, 0)).unwrap();
        for g in s.graphs() {
            total += g.edge_count() as f64;
            count += 1.0;
        }
    }
    let mean = total / count;
    let secs = start.elapsed().as_secs_f64();
    let rel = (mean - 1980.0).abs() / 1980.0;
    outcome(
        rel <= 0.03 && secs < 60.0,
        format!("mean edges {mean:.1} vs 1980 ({:+.2}%), {secs:.1}s", 100.0 * (mean / 1980.0 - 1.0)),
    )
}

struct Cell {
    label: &'static str,
    kind: EstimatorKind,
    z: usize,
    chart: ChartConfig,
    reference: f64,
}

fn table_cells() -> Vec<Cell> {
    use ChartConfig::{Mcusum, Mewma};
    use EstimatorKind::{SBar, ThetaHat};
    let cell = |label, kind, z, chart, reference| Cell {
        label,
        kind,
        z,
        chart,
        reference,
    };
    vec![
        cell("theta z=7 MEWMA 0.5", ThetaHat, 7, Mewma { lambda: 0.5 }, 22.58),
        cell("theta z=7 MEWMA 1.0", ThetaHat, 7, Mewma { lambda: 1.0 }, 10.46),
        cell("s z=7 MEWMA 1.0", SBar, 7, Mewma { lambda: 1.0 }, 8.31),
        cell("theta z=7 MCUSUM 0.5", ThetaHat, 7, Mcusum { k: 0.5 }, 21.01),
        cell("theta z=7 MCUSUM 1.5", ThetaHat, 7, Mcusum { k: 1.5 }, 8.03),
        cell("s z=7 MCUSUM 1.5", SBar, 7, Mcusum { k: 1.5 }, 13.06),
        cell("theta z=14 MEWMA 1.0", ThetaHat, 14, Mewma { lambda: 1.0 }, 9.15),
        cell("theta z=14 MCUSUM 1.5", ThetaHat, 14, Mcusum { k: 1.5 }, 11.06),
    ]
}

/// Relative UCL errors for every table cell at `reps` replications.
fn ucl_errors(reps: usize) -> Result<Vec<(String, f64)>, String> {
    let gen = GenConfig::default();
    let cells = table_cells();
    let mut out = Vec::new();
    let mut groups: Vec<(EstimatorKind, usize)> = Vec::new();
    for c in &cells {
        if !groups.contains(&(c.kind, c.z)) {
            groups.push((c.kind, c.z));
        }
    }
    for (kind, z) in groups {
        let pipe = PipelineConfig::new(kind, z);
        let (_, target) = phase1_target(&gen, &pipe, PhaseIDesign::default(), 1).map_err(|e| e.to_string())?;
        let mut pool = ReplicationPool::new(&gen, &pipe, None, target, reps, HORIZON, derive_seed(2, TAG_ARL))
            .map_err(|e| e.to_string())?;
        for c in cells.iter().filter(|c| c.kind == kind && c.z == z) {
            let r = pool.calibrate(&c.chart, ARL0, 0.01).map_err(|e| e.to_string())?;
            out.push((format!("{} {:.2}/{:.2}", c.label, r.ucl, c.reference), r.ucl / c.reference - 1.0));
        }
    }
    Ok(out)
}

fn describe(errs: &[(String, f64)]) -> String {
    errs.iter()
        .map(|(l, e)| format!("{l} ({:+.1}%)", 100.0 * e))
        .collect::<Vec<_>>()
        .join("; ")
}

fn c2_smoke(_: &mut Lab) -> Outcome {
    match ucl_errors(100) {
        Ok(errs) => outcome(errs.iter().all(|(_, e)| e.abs() <= 0.20), format!("100 reps, +-20%: {}", describe(&errs))),
        Err(e) => outcome(false, e),
    }
}

fn c2_full(_: &mut Lab) -> Outcome {
    match ucl_errors(500) {
        Ok(errs) => {
            let within7 = errs.iter().filter(|(_, e)| e.abs() <= 0.07).count();
            let within12 = errs.iter().filter(|(_, e)| e.abs() <= 0.12).count();
            outcome(
                within7 >= 6 && within12 == errs.len(),
                format!("500 reps: {within7}/8 within 7%, {within12}/8 within 12%: {}", describe(&errs)),
            )
        }
        Err(e) => outcome(false, e),
    }
}

fn c3_control(lab: &mut Lab) -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for kind in [EstimatorKind::ThetaHat, EstimatorKind::SBar] {
        let run = |lab: &mut Lab| -> Result<Vec<(ChartConfig, f64, f64, usize)>, String> {
            let charts = [ChartConfig::Mewma { lambda: 0.5 }, ChartConfig::Mcusum { k: 1.0 }];
            let grid: Vec<(ChartConfig, f64)> =
                charts.iter().map(|&c| lab.ucl(kind, c).map(|u| (c, u))).collect::<Result<_, _>>()?;
            let mut pool = lab.ced_pool(kind, None)?;
            let mut out = Vec::new();
            for g in grid {
                let r = estimate_ced_grid(&mut pool, &[g], TAU).map_err(|e| e.to_string())?;
                out.push((g.0, r.ced, r.se, r.valid_runs));
            }
            Ok(out)
        };
        match run(lab) {
            Ok(rows) => {
                for (c, ced, se, valid) in rows {
                    let ok = (ced - ARL0).abs() <= 3.0 * se;
                    pass &= ok;
                    parts.push(format!("{kind:?} {c}: {ced:.1} +- {se:.1} ({valid} runs)"));
                }
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{kind:?}: {e}"));
            }
        }
    }
    outcome(pass, parts.join("; "))
}

/// CED per chart for one estimator and case over both chart grids.
fn ced_table(lab: &mut Lab, kind: EstimatorKind, case: &str) -> Result<Vec<(ChartConfig, f64)>, String> {
    let grid = lab.calibrated(kind)?.ucls.clone();
    let mut pool = lab.ced_pool(kind, Some(case))?;
    let mut out = Vec::new();
    for family in [&grid[..10], &grid[10..]] {
        let r = estimate_ced_grid(&mut pool, family, TAU).map_err(|e| format!("{case}: {e}"))?;
        out.extend(r.settings.iter().map(|s| (s.chart, s.ced)));
    }
    Ok(out)
}

fn best_mewma(rows: &[(ChartConfig, f64)]) -> (ChartConfig, f64) {
    rows.iter()
        .filter(|(c, _)| matches!(c, ChartConfig::Mewma { .. }))
        .copied()
        .fold((rows[0].0, f64::INFINITY), |b, r| if r.1 < b.1 { r } else { b })
}

fn c4_direction(lab: &mut Lab) -> Outcome {
    let mut tables: BTreeMap<(String, String), Vec<(ChartConfig, f64)>> = BTreeMap::new();
    for kind in [EstimatorKind::ThetaHat, EstimatorKind::SBar] {
        for case in ["C.1", "C.2", "C.3"] {
            match ced_table(lab, kind, case) {
                Ok(t) => {
                    tables.insert((format!("{kind:?}"), case.to_string()), t);
                }
                Err(e) => return outcome(false, format!("{kind:?} {e}")),
            }
        }
    }
    let t = |k: &str, c: &str| &tables[&(k.to_string(), c.to_string())];
    let (ca, a) = best_mewma(t("ThetaHat", "C.3"));
    let (cb_theta, b_theta) = best_mewma(t("ThetaHat", "C.2"));
    let (cb_s, b_s) = best_mewma(t("SBar", "C.2"));
    let pass_a = a <= 3.0;
    let pass_b = b_theta < b_s;
    let mut violations = Vec::new();
    let mut checked = 0;
    for k in ["ThetaHat", "SBar"] {
        for i in 0..t(k, "C.1").len() {
            let (c, c1) = t(k, "C.1")[i];
            let (c2, c3) = (t(k, "C.2")[i].1, t(k, "C.3")[i].1);
            checked += 1;
            if !(c1 >= c2 && c2 >= c3 && c1 > c3) {
                violations.push(format!("{k} {c}: {c1:.2}/{c2:.2}/{c3:.2}"));
            }
        }
    }
    let pass_c = violations.is_empty();
    outcome(
        pass_a && pass_b && pass_c,
        format!(
            "(a) theta C.3 best {ca}: {a:.2} <= 3 [{}]; (b) C.2 theta {cb_theta}: {b_theta:.2} < s {cb_s}: {b_s:.2} [{}]; \
             (c) C.1>=C.2>=C.3 on {}/{checked} configs [{}]{}",
            ok(pass_a),
            ok(pass_b),
            checked - violations.len(),
            ok(pass_c),
            if violations.is_empty() { String::new() } else { format!(" violations: {}", violations.join(", ")) }
        ),
    )
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAIL"
    }
}

fn random_spd<R: Rng>(p: usize, rng: &mut R) -> DMatrix<f64> {
    let a = DMatrix::from_fn(p, p, |_, _| rng.gen_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(p, p) * 0.5
}

fn c5_chart_algebra(_: &mut Lab) -> Outcome {
    let mut rng = stream_rng(55, 0);
    let p = 4;
    let c0: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let target = ChartTarget::new(c0.clone(), random_spd(p, &mut rng)).unwrap();

    let mut mewma = MewmaState::new(p, 1.0).unwrap();
    let mut worst_mewma: f64 = 0.0;
    for _ in 0..1000 {
        let x: Vec<f64> = (0..p).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let s = mewma.step(&x, &target, f64::INFINITY, false).unwrap().statistic;
        let d = mahalanobis(&x, &target).unwrap();
        worst_mewma = worst_mewma.max((s - d).abs() / d.max(1.0));
    }

    let mut worst_cusum: f64 = 0.0;
    for _ in 0..1000 {
        let k = rng.gen_range(0.1..3.0);
        let x: Vec<f64> = (0..p).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let mut st = McusumState::new(p, k).unwrap();
        let s = st.step(&x, &target, f64::INFINITY, false).unwrap().statistic;
        let m = mahalanobis(&x, &target).unwrap().sqrt();
        worst_cusum = worst_cusum.max((s - (m - k).max(0.0)).abs());
    }

    let mut worst_affine: f64 = 0.0;
    for _ in 0..100 {
        let sigma = random_spd(p, &mut rng);
        let a = loop {
            let a: DMatrix<f64> = DMatrix::from_fn(p, p, |_, _| rng.gen_range(-2.0..2.0));
            if a.determinant().abs() > 0.1 {
                break a;
            }
        };
        let b = DVector::from_fn(p, |_, _| rng.gen_range(-5.0..5.0));
        let x: Vec<f64> = (0..p).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let map = |v: &[f64]| -> Vec<f64> { (&a * DVector::from_column_slice(v) + &b).iter().copied().collect() };
        let base = mahalanobis(&x, &ChartTarget::new(c0.clone(), sigma.clone()).unwrap()).unwrap();
        let moved = ChartTarget::new(map(&c0), &a * sigma * a.transpose()).unwrap();
        let d = mahalanobis(&map(&x), &moved).unwrap();
        worst_affine = worst_affine.max((d - base).abs() / base.max(1.0));
    }
    outcome(
        worst_mewma <= 1e-10 && worst_cusum <= 1e-10 && worst_affine <= 1e-8,
        format!(
            "MEWMA(1) vs Hotelling max err {worst_mewma:.1e}; Crosier one-step {worst_cusum:.1e}; affine {worst_affine:.1e}"
        ),
    )
}

fn graph_from_mask(n: usize, mask: u64) -> DirectedGraph {
    let mut g = DirectedGraph::new(n).unwrap();
    let mut b = 0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                if mask >> b & 1 == 1 {
                    g.set_edge(i, j, true).unwrap();
                }
                b += 1;
            }
        }
    }
    g
}

fn brute_counts(y: &DirectedGraph, prev: &DirectedGraph) -> [i64; 5] {
    let n = y.order();
    let e = |i: usize, j: usize| y.has_edge(i, j);
    let (mut tt, mut cyc, mut mutual, mut asym, mut edges, mut same) = (0, 0, 0, 0, 0, 0);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            edges += i64::from(e(i, j));
            same += i64::from(e(i, j) == prev.has_edge(i, j));
            if i < j && e(i, j) && e(j, i) {
                mutual += 1;
            }
            if i < j && e(i, j) != e(j, i) {
                asym += 1;
            }
            for k in 0..n {
                if k != i && k != j && e(i, j) && e(j, k) {
                    tt += i64::from(e(i, k));
                    cyc += i64::from(e(k, i));
                }
            }
        }
    }
    [edges, tt + cyc / 3, asym, mutual, same]
}

fn c6_estimation(_: &mut Lab) -> Outcome {
    let mut rng = stream_rng(66, 0);
    let terms = TermSet::new(vec![
        Term::Edges,
        Term::Triangles,
        Term::AsymmetricDyads,
        Term::MutualDyads,
        Term::Stability,
    ])
    .unwrap();
    let mut mismatches = 0;
    for case in 0..50 {
        let n = 3 + case % 8;
        let y = random_fill(DirectedGraph::new(n).unwrap(), &mut rng);
        let prev = random_fill(DirectedGraph::new(n).unwrap(), &mut rng);
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let on = brute_counts(&y.clone().with_edge(i, j, true).unwrap(), &prev);
                let off = brute_counts(&y.clone().with_edge(i, j, false).unwrap(), &prev);
                let want: Vec<i64> = on.iter().zip(off).map(|(a, b)| a - b).collect();
                if terms.change_counts(&y, Some(&prev), i, j).unwrap() != want {
                    mismatches += 1;
                }
            }
        }
    }

    let edges = TermSet::new(vec![Term::Edges]).unwrap();
    let window: Vec<DirectedGraph> =
        (0..7).map(|_| random_fill(DirectedGraph::new(12).unwrap(), &mut rng)).collect();
    let fit = mple_fit(&window, &edges, 1).unwrap();
    let on: usize = window[1..].iter().map(DirectedGraph::edge_count).sum();
    let pd = on as f64 / (6 * 132) as f64;
    let logit_err = (fit.theta[0] - (pd / (1.0 - pd)).ln()).abs();

    let sep = TermSet::new(vec![Term::Edges, Term::Stability]).unwrap();
    let prev = graph_from_mask(4, 0b1010_0110_0101);
    let y = graph_from_mask(4, 0b1000_0111_0011);
    let exact = exact_mle(&y, &prev, &sep);
    let fit = mple_fit(&[prev, y], &sep, 1).unwrap();
    let mle_err = fit.theta.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let base = TermSet::base_network();
    let theta = [-0.4, 0.6, -0.3];
    let w: Vec<f64> = (0..64u64)
        .map(|m| {
            let c = base.counts(&graph_from_mask(3, m), None).unwrap();
            c.iter().zip(theta).map(|(&c, t)| c as f64 * t).sum::<f64>().exp()
        })
        .collect();
    let z: f64 = w.iter().sum();
    let mut g = DirectedGraph::new(3).unwrap();
    metropolis_sweeps(&mut g, &base, &theta, None, 100, &mut rng);
    let draws = 200_000;
    let mut freq = [0.0; 64];
    for _ in 0..draws {
        metropolis_sweeps(&mut g, &base, &theta, None, 1, &mut rng);
        let mut mask = 0;
        let mut b = 0;
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    mask |= usize::from(g.has_edge(i, j)) << b;
                    b += 1;
                }
            }
        }
        freq[mask] += 1.0 / draws as f64;
    }
    let tv = freq.iter().zip(&w).map(|(f, wi)| (f - wi / z).abs()).sum::<f64>() / 2.0;

    outcome(
        mismatches == 0 && logit_err <= 1e-8 && mle_err <= 1e-6 && tv < 0.02,
        format!(
            "change-stat mismatches {mismatches}; edges-only logit err {logit_err:.1e}; n=4 exact MLE err {mle_err:.1e}; n=3 sampler TV {tv:.4}"
        ),
    )
}

fn random_fill<R: Rng>(mut g: DirectedGraph, rng: &mut R) -> DirectedGraph {
    let n = g.order();
    let p = rng.gen_range(0.1..0.9);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                g.set_edge(i, j, rng.gen::<f64>() < p).unwrap();
            }
        }
    }
    g
}

fn exact_mle(y: &DirectedGraph, prev: &DirectedGraph, terms: &TermSet) -> Vec<f64> {
    let p = terms.len();
    let stats: Vec<DVector<f64>> = (0..1u64 << 12)
        .map(|m| {
            let c = terms.counts(&graph_from_mask(4, m), Some(prev)).unwrap();
            DVector::from_iterator(p, c.into_iter().map(|v| v as f64))
        })
        .collect();
    let obs = DVector::from_iterator(p, terms.counts(y, Some(prev)).unwrap().into_iter().map(|v| v as f64));
    let mut theta = DVector::zeros(p);
    for _ in 0..100 {
        let w: Vec<f64> = stats.iter().map(|s| s.dot(&theta).exp()).collect();
        let z: f64 = w.iter().sum();
        let mean = stats.iter().zip(&w).fold(DVector::zeros(p), |a, (s, &wi)| a + s * wi) / z;
        let cov = stats.iter().zip(&w).fold(DMatrix::zeros(p, p), |a, (s, &wi)| {
            let d = s - &mean;
            a + &d * d.transpose() * wi
        }) / z;
        let step = cov.lu().solve(&(&obs - &mean)).unwrap();
        theta += &step;
        if step.norm() < 1e-13 {
            break;
        }
    }
    theta.iter().copied().collect()
}

fn c7_acf(_: &mut Lab) -> Outcome {
    let series = generate_series(&GenConfig::default(), 1000, None, stream_rng(77, 0)).unwrap();
    let column = |est: &[netwatch::CharEstimate], k: usize| est.iter().map(|e| e.values[k]).collect::<Vec<f64>>();
    let s = estimate_series(&series, &PipelineConfig::new(EstimatorKind::SBar, 7)).unwrap();
    let theta = estimate_series(&series, &PipelineConfig::new(EstimatorKind::ThetaHat, 7).with_stride(7)).unwrap();
    let names = TermSet::monitoring().names();
    let mut parts = Vec::new();
    let mut pass = true;
    for (k, name) in names.iter().enumerate().take(3) {
        let r = acf(&column(&s, k), 1).unwrap()[1];
        pass &= r > 0.5;
        parts.push(format!("s {name} rho1 {r:.2}"));
    }
    let band = 1.96 / (theta.len() as f64).sqrt();
    for (k, name) in names.iter().enumerate() {
        let r = acf(&column(&theta, k), 1).unwrap()[1];
        pass &= r.abs() < band;
        parts.push(format!("theta {name} rho1 {r:.2}"));
    }
    outcome(pass, format!("{}; band +-{band:.3} over {} windows", parts.join(", "), theta.len()))
}

fn netwatch(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_netwatch"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("netwatch {} failed: {}", args[0], String::from_utf8_lossy(&out.stderr).trim()))
    }
}

fn read_trace(path: &Path) -> Vec<(i64, bool)> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[3] == "1")
        })
        .collect()
}

fn c8_cli(_: &mut Lab) -> Outcome {
    let run = || -> Result<String, String> {
        let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
        let d = |s: &str| tmp.path().join(s).to_string_lossy().into_owned();
        let tau = 201;
        netwatch(&[
            "generate", "--seed", "81", "--output-dir", &d("gen"),
            "--set", "generator.length=320", "--set", "anomaly.case=A.3", "--set", &format!("anomaly.tau={tau}"),
        ])?;
        let common = |out: &str| -> Vec<String> {
            [
                "--seed", "82", "--output-dir", out, "--input", &d("gen/series.csv"),
                "--set", &format!("io.registry={}", d("gen/nodes.csv")),
                "--set", "calibration.arl0=100", "--set", "calibration.replications=200",
                "--set", "calibration.phase1_series=50",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect()
        };
        let mut lines = Vec::new();
        let mut failures = Vec::new();
        for (name, set) in [("mewma", "chart.lambda=0.9"), ("mcusum", "chart.k=1.5")] {
            let chart = ["--set".to_string(), format!("chart.type={name}"), "--set".to_string(), set.to_string()];
            let mut cal: Vec<String> = vec!["calibrate".into()];
            cal.extend(common(&d(&format!("cal-{name}"))));
            cal.extend(chart.iter().cloned());
            netwatch(&cal.iter().map(String::as_str).collect::<Vec<_>>())?;
            let mut mon: Vec<String> = vec!["monitor".into()];
            mon.extend(common(&d(&format!("mon-{name}"))));
            mon.extend(chart.iter().cloned());
            mon.extend([
                "--set".into(),
                format!("chart.calibration_file={}", d(&format!("cal-{name}/calibration.json"))),
                "--set".into(),
                "monitor.phase1_end=150".into(),
            ]);
            netwatch(&mon.iter().map(String::as_str).collect::<Vec<_>>())?;
            let trace = read_trace(&tmp.path().join(format!("mon-{name}/trace.csv")));
            let pre: Vec<bool> = trace.iter().filter(|(t, _)| (151..tau).contains(t)).map(|p| p.1).collect();
            let post: Vec<bool> = trace.iter().filter(|(t, _)| *t >= tau + 7).map(|p| p.1).collect();
            let pre_signals = pre.iter().filter(|&&s| s).count();
            let allowed = (2.0 * pre.len() as f64 / 100.0).ceil() as usize + 2;
            let post_rate = post.iter().filter(|&&s| s).count() as f64 / post.len() as f64;
            let longest = post.iter().fold((0, 0), |(best, cur), &s| {
                let cur = if s { cur + 1 } else { 0 };
                (best.max(cur), cur)
            });
            let good = pre_signals <= allowed && post_rate >= 0.9 && longest.0 >= 50;
            if !good {
                failures.push(name);
            }
            lines.push(format!(
                "{name}: {pre_signals} signals in {} pre-change points (allowed {allowed}), {:.0}% of {} post-change points signal, longest run {}",
                pre.len(),
                100.0 * post_rate,
                post.len(),
                longest.0
            ));
        }
        if failures.is_empty() {
            Ok(lines.join("; "))
        } else {
            Err(lines.join("; "))
        }
    };
    match run() {
        Ok(s) => outcome(true, s),
        Err(s) => outcome(false, s),
    }
}

type Criterion = (&'static str, &'static str, fn(&mut Lab) -> Outcome, bool);

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        return;
    }
    let slow = args.iter().any(|a| a == "--ignored" || a == "--include-ignored");
    let filters: Vec<&String> = args.iter().filter(|a| !a.starts_with('-')).collect();
    let criteria: [Criterion; 9] = [
        ("C1", "steady-state edge count", c1_steady_state, false),
        ("C2", "UCL table smoke (100 reps)", c2_smoke, true),
        ("C2", "UCL table spot checks (500 reps)", c2_full, true),
        ("C3", "CED control without anomaly", c3_control, false),
        ("C4", "CED direction checks", c4_direction, false),
        ("C5", "chart algebra", c5_chart_algebra, false),
        ("C6", "estimation oracles", c6_estimation, false),
        ("C7", "ACF overlap contrast", c7_acf, false),
        ("C8", "CLI end-to-end monitoring", c8_cli, false),
    ];
    let mut lab = Lab::new();
    let mut failed = 0;
    for (id, name, check, gated) in criteria {
        if !filters.is_empty() && !filters.iter().any(|f| id.eq_ignore_ascii_case(f)) {
            continue;
        }
        if gated && !slow {
            println!("SKIP {id} {name}: slow suite, run with `-- --include-ignored`");
            continue;
        }
        let start = Instant::now();
        let o = check(&mut lab);
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("{status} {id} {name}: {} [{:.1}s]", o.detail, start.elapsed().as_secs_f64());
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
