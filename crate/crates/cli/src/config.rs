use std::path::{Path, PathBuf};

use netwatch::graph::edgelist::parse_label;
use netwatch::simgen::logit;
use netwatch::{
    AnomalyKind, AnomalySpec, ChartConfig, EstimatorKind, GenConfig, PhaseIDesign, PipelineConfig, Term,
    TermSet, TransitionMatrix,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub generator: GeneratorSection,
    pub pipeline: PipelineSection,
    pub chart: ChartSection,
    pub calibration: CalibrationSection,
    pub anomaly: Option<AnomalySection>,
    pub ced: CedSection,
    pub monitor: MonitorSection,
    pub gof: GofSection,
    pub io: IoSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSection {
    pub n_nodes: usize,
    pub phi: f64,
    pub m: TransitionMatrix,
    pub base_coeffs: Vec<f64>,
    pub base_sweeps: usize,
    pub burn_in: usize,
    /// Retained states written by `generate`.
    pub length: usize,
}

impl Default for GeneratorSection {
    fn default() -> Self {
        Self {
            n_nodes: 100,
            phi: 0.01,
            m: TransitionMatrix::in_control(),
            base_coeffs: vec![logit(0.2), 0.0, 0.0],
            base_sweeps: 50,
            burn_in: 1000,
            length: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSection {
    pub terms: Vec<Term>,
    pub window: usize,
    pub lag: usize,
    pub estimator: EstimatorKind,
    pub stride: usize,
}

impl Default for PipelineSection {
    fn default() -> Self {
        Self {
            terms: TermSet::monitoring().terms().to_vec(),
            window: 7,
            lag: 1,
            estimator: EstimatorKind::ThetaHat,
            stride: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChartSection {
    #[serde(rename = "type")]
    pub kind: String,
    pub lambda: Option<f64>,
    pub k: Option<f64>,
    pub reset_on_signal: bool,
    pub ucl: Option<f64>,
    pub calibration_file: Option<PathBuf>,
}

impl Default for ChartSection {
    fn default() -> Self {
        Self {
            kind: "mewma".into(),
            lambda: None,
            k: None,
            reset_on_signal: true,
            ucl: None,
            calibration_file: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationSection {
    pub arl0: f64,
    /// Several ARL₀ rows for a table; overrides `arl0` when set.
    pub arl0s: Option<Vec<f64>>,
    /// Chart parameters (λ or k) to calibrate; defaults to the chart's own.
    pub grid: Option<Vec<f64>>,
    pub replications: usize,
    pub tolerance: f64,
    pub horizon: Option<usize>,
    pub phase1_series: usize,
    pub phase1_length: usize,
}

impl Default for CalibrationSection {
    fn default() -> Self {
        let d = PhaseIDesign::default();
        Self {
            arl0: 50.0,
            arl0s: None,
            grid: None,
            replications: 500,
            tolerance: 0.01,
            horizon: None,
            phase1_series: d.series,
            phase1_length: d.length,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnomalySection {
    /// Named case such as `A.3` or `C.2`.
    pub case: Option<String>,
    #[serde(rename = "type")]
    pub kind: Option<String>,
    pub m1: Option<TransitionMatrix>,
    pub phi1: Option<f64>,
    pub zeta: Option<f64>,
    pub tau: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CedSection {
    pub replications: usize,
    pub tau: i64,
    /// Monitored steps allowed after `tau`; defaults to `20 * arl0`.
    pub horizon: Option<usize>,
}

impl Default for CedSection {
    fn default() -> Self {
        Self {
            replications: 100,
            tau: 101,
            horizon: None,
        }
    }
}

/// A time label: an integer or a `YYYY-MM-DD` date.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Int(i64),
    Text(String),
}

impl Label {
    pub fn resolve(&self, what: &str) -> Result<i64, CliError> {
        match self {
            Label::Int(t) => Ok(*t),
            Label::Text(s) => parse_label(s.trim())
                .map(|(t, _)| t)
                .ok_or_else(|| CliError::Config(format!("{what}: `{s}` is not an integer or YYYY-MM-DD label"))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonitorSection {
    /// Inclusive label range of Phase-I estimates.
    pub phase1_start: Option<Label>,
    pub phase1_end: Option<Label>,
    /// First Phase-II label; defaults to the label after `phase1_end`.
    pub start: Option<Label>,
    pub allow_overlap: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GofSection {
    pub n_sims: usize,
    pub sweeps: usize,
    /// Label of the last graph of the fitted window; defaults to the last.
    pub end: Option<Label>,
}

impl Default for GofSection {
    fn default() -> Self {
        Self {
            n_sims: 100,
            sweeps: 2,
            end: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IoSection {
    pub input: Option<PathBuf>,
    pub registry: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl Default for IoSection {
    fn default() -> Self {
        Self {
            input: None,
            registry: None,
            output_dir: PathBuf::from("netwatch-out"),
        }
    }
}

impl RunConfig {
    /// Reads a TOML file (if any) and applies `section.key=value` overrides.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                text.parse::<toml::Table>()
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn gen_config(&self) -> GenConfig {
        let g = &self.generator;
        GenConfig {
            n_nodes: g.n_nodes,
            phi: g.phi,
            m: g.m,
            base_coeffs: g.base_coeffs.clone(),
            base_sweeps: g.base_sweeps,
            burn_in: g.burn_in,
            seed: self.seed.unwrap_or(0),
        }
    }

    pub fn pipeline_config(&self) -> Result<PipelineConfig, CliError> {
        let p = &self.pipeline;
        let cfg = PipelineConfig {
            terms: TermSet::new(p.terms.clone())?,
            window: p.window,
            lag: p.lag,
            kind: p.estimator,
            stride: p.stride,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn chart_config(&self) -> Result<ChartConfig, CliError> {
        let c = &self.chart;
        match c.kind.to_ascii_lowercase().as_str() {
            "mewma" => {
                if c.k.is_some() {
                    return Err(CliError::Config("chart.k is not a MEWMA parameter; use chart.lambda".into()));
                }
                Ok(ChartConfig::Mewma {
                    lambda: c.lambda.unwrap_or(0.9),
                })
            }
            "mcusum" => {
                if c.lambda.is_some() {
                    return Err(CliError::Config("chart.lambda is not an MCUSUM parameter; use chart.k".into()));
                }
                Ok(ChartConfig::Mcusum { k: c.k.unwrap_or(1.5) })
            }
            other => Err(CliError::Config(format!("unknown chart type `{other}` (mewma or mcusum)"))),
        }
        .and_then(|cfg| {
            cfg.validate()?;
            Ok(cfg)
        })
    }

    /// The chart at every grid parameter, or just the configured chart.
    pub fn chart_grid(&self) -> Result<Vec<ChartConfig>, CliError> {
        let base = self.chart_config()?;
        let charts: Vec<ChartConfig> = match &self.calibration.grid {
            Some(g) if !g.is_empty() => g.iter().map(|&p| base.with_parameter(p)).collect(),
            _ => vec![base],
        };
        for c in &charts {
            c.validate()?;
        }
        Ok(charts)
    }

    pub fn arl0s(&self) -> Vec<f64> {
        match &self.calibration.arl0s {
            Some(v) if !v.is_empty() => v.clone(),
            _ => vec![self.calibration.arl0],
        }
    }

    pub fn phase1_design(&self) -> PhaseIDesign {
        PhaseIDesign {
            series: self.calibration.phase1_series,
            length: self.calibration.phase1_length,
        }
    }

    pub fn anomaly_spec(&self) -> Result<Option<AnomalySpec>, CliError> {
        let Some(a) = &self.anomaly else {
            return Ok(None);
        };
        let tau = a.tau.unwrap_or(self.ced.tau);
        if let Some(case) = &a.case {
            return Ok(Some(AnomalySpec::case(case, tau)?));
        }
        let kind = match a.kind.as_deref().map(str::to_ascii_uppercase).as_deref() {
            Some("A") => AnomalyKind::A {
                m1: a
                    .m1
                    .ok_or_else(|| CliError::Config("anomaly type A needs anomaly.m1".into()))?,
            },
            Some("B") => AnomalyKind::B {
                phi1: a
                    .phi1
                    .ok_or_else(|| CliError::Config("anomaly type B needs anomaly.phi1".into()))?,
            },
            Some("C") => AnomalyKind::C {
                zeta: a
                    .zeta
                    .ok_or_else(|| CliError::Config("anomaly type C needs anomaly.zeta".into()))?,
            },
            Some(other) => return Err(CliError::Config(format!("unknown anomaly type `{other}`"))),
            None => return Err(CliError::Config("anomaly needs `case` or `type`".into())),
        };
        Ok(Some(AnomalySpec::new(kind, tau)?))
    }

    pub fn output_dir(&self) -> &Path {
        &self.io.output_dir
    }

    pub fn input(&self) -> Result<&Path, CliError> {
        self.io
            .input
            .as_deref()
            .ok_or_else(|| CliError::Config("this command needs io.input (or --input)".into()))
    }
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), CliError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{spec}` is not key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("bad override key `{key}`")));
    }
    let value = parse_value(raw.trim());
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut cur = table;
    for p in parents {
        let entry = cur
            .entry((*p).to_owned())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("override `{key}`: `{p}` is not a section")))?;
    }
    cur.insert((*last).to_owned(), value);
    Ok(())
}

/// TOML literal if it parses as one, otherwise a bare string.
fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_owned()))
}
