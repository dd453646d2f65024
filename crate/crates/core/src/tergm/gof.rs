//! Simulation-based goodness-of-fit.
//!
//! For each observed transition `Y_{u-1} → Y_u` of a window, `n_sims`
//! networks are drawn from the fitted conditional model given `Y_{u-1}`.
//! For every bin of every statistic family the simulated values are
//! summarised by five quantiles and set against the median of the observed
//! networks.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sim::simulate_from_fit;
use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, GraphSeries};
use crate::stats::structure::{
    edgewise_shared_partners, geodesic_distribution, in_degree_distribution,
    out_degree_distribution, triad_census, TRIAD_CLASSES,
};
use crate::stats::TermSet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GofBin {
    pub label: String,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub observed_median: f64,
}

impl GofBin {
    pub fn covers_observed(&self) -> bool {
        self.q1 <= self.observed_median && self.observed_median <= self.q3
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GofFamily {
    pub name: String,
    pub bins: Vec<GofBin>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub n_sims: usize,
    pub transitions: usize,
    pub families: Vec<GofFamily>,
}

impl GofReport {
    pub fn family(&self, name: &str) -> Option<&GofFamily> {
        self.families.iter().find(|f| f.name == name)
    }

    /// Share of bins whose observed median lies inside `[q1, q3]`.
    pub fn coverage(&self) -> f64 {
        let bins: Vec<&GofBin> = self.families.iter().flat_map(|f| &f.bins).collect();
        bins.iter().filter(|b| b.covers_observed()).count() as f64 / bins.len() as f64
    }

    /// Flat CSV: `family,bin,min,q1,median,q3,max,observed_median`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("family,bin,min,q1,median,q3,max,observed_median\n");
        for f in &self.families {
            for b in &f.bins {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    f.name, b.label, b.min, b.q1, b.median, b.q3, b.max, b.observed_median
                ));
            }
        }
        s
    }
}

/// Linear-interpolation quantile of sorted data.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

struct Profile {
    in_deg: Vec<u64>,
    out_deg: Vec<u64>,
    esp: Vec<u64>,
    geo: Vec<u64>,
    triads: [u64; 16],
}

impl Profile {
    fn of(g: &DirectedGraph) -> Self {
        Self {
            in_deg: in_degree_distribution(g),
            out_deg: out_degree_distribution(g),
            esp: edgewise_shared_partners(g),
            geo: geodesic_distribution(g),
            triads: triad_census(g),
        }
    }
}

fn family(
    name: &str,
    labels: Vec<String>,
    observed: &[Vec<u64>],
    simulated: &[Vec<u64>],
) -> GofFamily {
    let bins = labels
        .into_iter()
        .enumerate()
        .map(|(k, label)| {
            let mut sim: Vec<f64> = simulated.iter().map(|v| v[k] as f64).collect();
            let mut obs: Vec<f64> = observed.iter().map(|v| v[k] as f64).collect();
            sim.sort_by(f64::total_cmp);
            obs.sort_by(f64::total_cmp);
            GofBin {
                label,
                min: sim[0],
                q1: quantile_sorted(&sim, 0.25),
                median: quantile_sorted(&sim, 0.5),
                q3: quantile_sorted(&sim, 0.75),
                max: sim[sim.len() - 1],
                observed_median: quantile_sorted(&obs, 0.5),
            }
        })
        .collect();
    GofFamily {
        name: name.to_owned(),
        bins,
    }
}

/// Trims trailing bins that are zero in every observed and simulated graph.
fn used_bins(observed: &[Vec<u64>], simulated: &[Vec<u64>], min_len: usize) -> usize {
    let last = observed
        .iter()
        .chain(simulated)
        .filter_map(|v| v.iter().rposition(|&c| c > 0))
        .max()
        .map_or(0, |p| p + 1);
    last.max(min_len)
}

pub fn gof_summary<R: Rng + ?Sized>(
    theta: &[f64],
    terms: &TermSet,
    observed: &GraphSeries,
    n_sims: usize,
    sweeps: usize,
    rng: &mut R,
) -> Result<GofReport> {
    if n_sims == 0 {
        return Err(Error::InvalidConfig("n_sims must be >= 1".into()));
    }
    if observed.len() < 2 {
        return Err(Error::WindowTooShort {
            got: observed.len(),
            need: 2,
        });
    }
    let mut obs = Vec::new();
    let mut sims = Vec::new();
    for pair in observed.graphs().windows(2) {
        obs.push(Profile::of(&pair[1]));
        for _ in 0..n_sims {
            let g = simulate_from_fit(theta, terms, &pair[0], sweeps, rng)?;
            sims.push(Profile::of(&g));
        }
    }

    let pick = |f: fn(&Profile) -> Vec<u64>| -> (Vec<Vec<u64>>, Vec<Vec<u64>>) {
        (obs.iter().map(f).collect(), sims.iter().map(f).collect())
    };
    let mut families = Vec::new();
    for (name, f) in [
        ("in_degree", (|p: &Profile| p.in_deg.clone()) as fn(&Profile) -> Vec<u64>),
        ("out_degree", |p: &Profile| p.out_deg.clone()),
        ("edgewise_shared_partners", |p: &Profile| p.esp.clone()),
    ] {
        let (o, s) = pick(f);
        let used = used_bins(&o, &s, 1);
        let o: Vec<Vec<u64>> = o.into_iter().map(|v| v[..used].to_vec()).collect();
        let s: Vec<Vec<u64>> = s.into_iter().map(|v| v[..used].to_vec()).collect();
        families.push(family(name, (0..used).map(|k| k.to_string()).collect(), &o, &s));
    }

    // geodesics: keep finite distances up to the last used one, then infinity
    let (o, s) = pick(|p| p.geo.clone());
    let n = observed.order().expect("non-empty");
    let finite = |v: &Vec<u64>| v[..n - 1].to_vec();
    let used = used_bins(
        &o.iter().map(finite).collect::<Vec<_>>(),
        &s.iter().map(finite).collect::<Vec<_>>(),
        1,
    );
    let keep = |v: Vec<u64>| {
        let mut w = v[..used].to_vec();
        w.push(v[n - 1]);
        w
    };
    let o: Vec<Vec<u64>> = o.into_iter().map(keep).collect();
    let s: Vec<Vec<u64>> = s.into_iter().map(keep).collect();
    let mut labels: Vec<String> = (1..=used).map(|d| d.to_string()).collect();
    labels.push("inf".into());
    families.push(family("geodesic_distance", labels, &o, &s));

    let (o, s) = pick(|p| p.triads.to_vec());
    families.push(family(
        "triad_census",
        TRIAD_CLASSES.iter().map(|c| (*c).to_owned()).collect(),
        &o,
        &s,
    ));

    Ok(GofReport {
        n_sims,
        transitions: observed.len() - 1,
        families,
    })
}
