//! Topological entropy from lap counts and from Markov spectral radii.

use crate::error::{Error, Result};
use crate::markov::{markov_closure, MarkovStructure, DEFAULT_TOL};
use crate::pwmap::{PwaMap, DEFAULT_NODE_LIMIT};
use crate::rational::format_real;

pub const DEFAULT_DEPTH: usize = 12;
pub const DEFAULT_AGREE_TOL: f64 = 0.02;
pub const DEFAULT_MAX_POINTS: usize = 2000;

#[derive(Clone, Debug, PartialEq)]
pub struct EntropyReport {
    /// `c_1..c_N` (fewer when truncated).
    pub lap_counts: Vec<usize>,
    /// `(1/n) log c_n`.
    pub estimates: Vec<f64>,
    /// `min_n (1/n) log c_n`, an upper bound for the entropy.
    pub fekete: f64,
    /// `log(c_N / c_{N-1})`, the growth rate at the deepest level.
    pub trend: f64,
    pub spectral: Option<f64>,
    /// `|trend - spectral|` when a spectral value exists.
    pub gap: Option<f64>,
    pub agreed: Option<bool>,
    pub truncated: bool,
    pub warning: Option<String>,
}

impl EntropyReport {
    fn from_counts(counts: Vec<usize>, truncated: bool) -> Self {
        let estimates: Vec<f64> = counts
            .iter()
            .enumerate()
            .map(|(i, &c)| (c as f64).ln() / (i + 1) as f64)
            .collect();
        let fekete = estimates.iter().cloned().fold(f64::INFINITY, f64::min);
        let trend = trend_of(&counts);
        let warning = (trend <= 0.0 && counts.last() == Some(&1))
            .then(|| "no positive entropy; normalization undefined".to_string());
        EntropyReport {
            lap_counts: counts,
            estimates,
            fekete,
            trend,
            spectral: None,
            gap: None,
            agreed: None,
            truncated,
            warning,
        }
    }

    /// Best available value: the spectral one when known, else the trend.
    pub fn estimate(&self) -> f64 {
        self.spectral.unwrap_or(self.trend)
    }

    /// Whether the lap counts grow at all.
    pub fn positive(&self) -> bool {
        self.spectral.map_or(self.trend > 1e-12, |s| s > 1e-12)
    }

    /// TSV with columns `n`, `c_n`, `estimate`, then footer rows.
    pub fn to_tsv(&self, sig: usize) -> String {
        let mut out = String::from("n\tc_n\testimate\n");
        for (i, (c, e)) in self.lap_counts.iter().zip(&self.estimates).enumerate() {
            out.push_str(&format!("{}\t{}\t{}\n", i + 1, c, format_real(*e, sig)));
        }
        out.push_str(&format!("trend\t-\t{}\n", format_real(self.trend, sig)));
        out.push_str(&format!("fekete\t-\t{}\n", format_real(self.fekete, sig)));
        match self.spectral {
            Some(s) => out.push_str(&format!("spectral\t-\t{}\n", format_real(s, sig))),
            None => out.push_str("spectral\t-\t-\n"),
        }
        match self.agreed {
            Some(a) => out.push_str(&format!("agreed\t-\t{a}\n")),
            None => out.push_str("agreed\t-\t-\n"),
        }
        out
    }
}

fn trend_of(counts: &[usize]) -> f64 {
    match counts.len() {
        0 => 0.0,
        1 => (counts[0] as f64).ln(),
        n => (counts[n - 1] as f64 / counts[n - 2] as f64).ln(),
    }
}

/// Exact lap counts of `f^n` for `n = 1..=depth` and their estimates. Stops
/// early, flagging the report, when an iterate exceeds `node_limit` nodes.
pub fn entropy_lapcount(f: &PwaMap, depth: usize, node_limit: usize) -> Result<EntropyReport> {
    if depth == 0 {
        return Err(Error::Precondition("depth must be at least 1".into()));
    }
    let (counts, truncated) = f.lap_counts(depth, node_limit);
    if counts.is_empty() {
        return Err(Error::Budget("no lap count within the node limit".into()));
    }
    Ok(EntropyReport::from_counts(counts, truncated))
}

/// `log beta` of a Markov structure (zero when `beta <= 1`).
pub fn entropy_spectral(s: &MarkovStructure) -> f64 {
    s.entropy()
}

#[derive(Clone, Debug)]
pub struct EntropyConfig {
    pub depth: usize,
    pub node_limit: usize,
    pub max_points: usize,
    pub agree_tol: f64,
}

impl Default for EntropyConfig {
    fn default() -> Self {
        EntropyConfig {
            depth: DEFAULT_DEPTH,
            node_limit: DEFAULT_NODE_LIMIT,
            max_points: DEFAULT_MAX_POINTS,
            agree_tol: DEFAULT_AGREE_TOL,
        }
    }
}

/// Lap-count report, completed with the spectral value when a Markov set is
/// found within `max_points`.
pub fn entropy(f: &PwaMap, cfg: &EntropyConfig) -> Result<EntropyReport> {
    let mut report = entropy_lapcount(f, cfg.depth, cfg.node_limit)?;
    if let Ok(s) = markov_closure(f, cfg.max_points, DEFAULT_TOL) {
        let h = entropy_spectral(&s);
        let gap = (report.trend - h).abs();
        report.spectral = Some(h);
        report.gap = Some(gap);
        report.agreed = Some(gap < cfg.agree_tol);
        if h <= 1e-12 {
            report.warning = Some("no positive entropy; normalization undefined".into());
        }
    }
    Ok(report)
}
