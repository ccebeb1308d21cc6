//! Markov approximation of non-Markov maps and the normalization pipeline.

use crate::entropy::entropy_lapcount;
use crate::error::{Error, Result};
use crate::markov::{markov_closure, MarkovStructure, DEFAULT_TOL};
use crate::pwmap::{Direction, Node, PwaMap, Side, DEFAULT_NODE_LIMIT};
use crate::rational::{self, int, Rational};
use crate::semiconjugacy::{
    build_constant_slope, build_psi, verify_semiconjugacy, ConstantSlopeMap, PsiTable,
    DEFAULT_TABLE_CELLS,
};
use num::{One, Signed};
use std::collections::BTreeSet;

pub use crate::semiconjugacy::ResidualReport;

pub const DEFAULT_SCHEDULE: [usize; 5] = [2, 4, 8, 16, 32];
pub const DEFAULT_GRID: usize = 4096;
pub const DEFAULT_SHADOW_CAP: usize = 6;

/// Data of one Markov approximation.
#[derive(Clone, Debug, PartialEq)]
pub struct ApproxConfig {
    pub n: usize,
    pub delta: Rational,
    /// The Markov set of the approximant.
    pub points: Vec<Rational>,
    /// Lap endpoints of `f^k` were shadowed for `k <= shadow_depth`.
    pub shadow_depth: usize,
}

/// Largest element of the sorted set `p` not above `y`.
fn snap_down<'a>(p: &'a [Rational], y: &Rational) -> &'a Rational {
    let k = p.partition_point(|q| q <= y);
    &p[k.max(1) - 1]
}

/// A Markov map `g` with `sup |f - g| < 1/n`.
///
/// `P` holds a dyadic grid finer than `delta`, the nodes of `f`, and the
/// one-sided orbits `f^i(a+)`, `f^i(b-)` (`i <= k`) of the endpoints of every
/// lap `[a, b]` of `f^k` for `k <= min(n, shadow_cap)`. Then
/// `g(p±) = max{y in P : y <= f(p±)}` and `g` is affine between points of `P`.
pub fn markov_approx(f: &PwaMap, n: usize, shadow_cap: usize) -> Result<(PwaMap, ApproxConfig)> {
    if n == 0 {
        return Err(Error::Precondition("approximation index must be >= 1".into()));
    }
    if f.has_constant_lap() {
        return Err(Error::NotPsm("f has a constant piece".into()));
    }
    let (a, b) = (f.lo().clone(), f.hi().clone());
    let len = &b - &a;
    let nn = int(n as i64);
    let slope = f.max_abs_slope();
    let d1 = Rational::one() / (int(2) * &nn * &slope);
    let d2 = Rational::one() / (int(4) * &nn);
    let delta = if d1 < d2 { d1 } else { d2 };

    let mut m = 0u32;
    let mut denom = int(1);
    while &len / &denom >= delta {
        m += 1;
        denom *= int(2);
    }
    let steps: i64 = 1 << m;
    let mut set: BTreeSet<Rational> = (0..=steps)
        .map(|j| &a + &len * rational::ratio(j, steps))
        .collect();
    for node in f.nodes() {
        set.insert(node.x.clone());
    }
    let shadow_depth = n.min(shadow_cap);
    let mut fk = f.clone();
    for k in 1..=shadow_depth {
        if k > 1 {
            fk = f.compose(&fk)?.simplify();
            if fk.nodes().len() > DEFAULT_NODE_LIMIT {
                return Err(Error::Budget("shadowing iterate too large".into()));
            }
        }
        for lap in fk.laps() {
            for (x, side) in [(&lap.lo, Side::Right), (&lap.hi, Side::Left)] {
                set.extend(f.orbit_one_sided(x, side, k));
            }
        }
    }
    let points: Vec<Rational> = set.into_iter().collect();

    let last = points.len() - 1;
    let nodes: Vec<Node> = points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let yl = (i > 0).then(|| {
                snap_down(&points, &f.eval(p, Side::Left).expect("in domain")).clone()
            });
            let yr = (i < last).then(|| {
                snap_down(&points, &f.eval(p, Side::Right).expect("in domain")).clone()
            });
            Node::new(p.clone(), yl, yr)
        })
        .collect();
    let g = PwaMap::new(nodes)?;
    Ok((
        g,
        ApproxConfig {
            n,
            delta,
            points,
            shadow_depth,
        },
    ))
}

/// Checks that for every lap `[a, b]` of `f^k`, `g^i(a+) = f^i(a+)` and
/// `g^i(b-) = f^i(b-)` for `i <= k`, and that `g^k` is continuous and weakly
/// monotone in the same direction on `[a, b]`.
pub fn check_shadowing(f: &PwaMap, g: &PwaMap, k: usize) -> std::result::Result<(), String> {
    let fk = f.iterate(k, DEFAULT_NODE_LIMIT).map_err(|e| e.to_string())?;
    let gk = g.iterate(k, DEFAULT_NODE_LIMIT).map_err(|e| e.to_string())?;
    for lap in fk.laps() {
        for (x, side) in [(&lap.lo, Side::Right), (&lap.hi, Side::Left)] {
            let of = f.orbit_one_sided(x, side, k);
            let og = g.orbit_one_sided(x, side, k);
            if of != og {
                return Err(format!(
                    "orbit of {} differs between f and g",
                    rational::format_rational(x)
                ));
            }
        }
        let start = gk.locate(&lap.lo, Side::Right).map_err(|e| e.to_string())?;
        let end = gk.locate(&lap.hi, Side::Left).map_err(|e| e.to_string())?;
        for i in start..=end {
            if i > start && gk.nodes()[i].is_jump() {
                return Err(format!(
                    "g^{k} jumps inside the lap [{}, {}]",
                    rational::format_rational(&lap.lo),
                    rational::format_rational(&lap.hi)
                ));
            }
            let d = gk.segment(i).direction();
            if d != Direction::Constant && d != lap.direction {
                return Err(format!(
                    "g^{k} is not monotone on the lap [{}, {}]",
                    rational::format_rational(&lap.lo),
                    rational::format_rational(&lap.hi)
                ));
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct NormalizeConfig {
    /// Cauchy threshold for successive `psi_i`.
    pub target: f64,
    pub schedule: Vec<usize>,
    pub grid: usize,
    /// Depth of the lap-count entropy estimate of `f`.
    pub entropy_depth: usize,
    /// Node budget for that estimate; deeper levels are skipped past it.
    pub entropy_node_limit: usize,
    /// Truncation error requested from every `psi_i`, relative to `target`.
    pub psi_factor: f64,
    pub max_closure_points: usize,
    pub shadow_cap: usize,
    pub slope_tol: f64,
    pub table_cells: usize,
}

impl Default for NormalizeConfig {
    fn default() -> Self {
        NormalizeConfig {
            target: 1e-6,
            schedule: DEFAULT_SCHEDULE.to_vec(),
            grid: DEFAULT_GRID,
            entropy_depth: 14,
            entropy_node_limit: 50_000,
            psi_factor: 0.1,
            max_closure_points: 2000,
            shadow_cap: DEFAULT_SHADOW_CAP,
            slope_tol: 1e-6,
            table_cells: DEFAULT_TABLE_CELLS,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineStep {
    pub index: usize,
    pub beta: f64,
    /// `sup |psi_i - psi_{i-1}|` on the common grid.
    pub cauchy_gap: Option<f64>,
    pub residual: f64,
    pub points: usize,
}

#[derive(Clone, Debug)]
pub struct PipelineTrace {
    pub steps: Vec<PipelineStep>,
    pub psi: PsiTable,
    pub g: ConstantSlopeMap,
    /// Slope of the final map.
    pub gamma: f64,
    /// `log(c_N / c_{N-1})` for `f`.
    pub entropy_estimate: f64,
    /// True when `f` itself was Markov and no approximation was needed.
    pub exact: bool,
    pub converged: bool,
    /// Set when the beta trace is not monotone.
    pub non_monotone_betas: bool,
    /// The Markov structure behind the final step.
    pub structure: MarkovStructure,
}

impl PipelineTrace {
    pub fn residual(&self) -> f64 {
        self.steps.last().map_or(f64::NAN, |s| s.residual)
    }

    /// TSV with columns `i`, `beta_i`, `cauchy_gap`, `residual`.
    pub fn to_tsv(&self, sig: usize) -> String {
        let mut out = String::from("i\tbeta_i\tcauchy_gap\tresidual\n");
        for s in &self.steps {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                s.index,
                rational::format_real(s.beta, sig),
                s.cauchy_gap
                    .map_or("-".to_string(), |c| rational::format_real(c, sig)),
                rational::format_real(s.residual, sig)
            ));
        }
        out
    }
}

/// Grid used for Cauchy gaps and residuals: equispaced points plus the nodes of `f`.
pub fn common_grid(f: &PwaMap, grid: usize) -> Vec<f64> {
    let (lo, hi) = (f.lo_f64(), f.hi_f64());
    let mut xs: Vec<f64> = (0..=grid)
        .map(|i| lo + (hi - lo) * i as f64 / grid.max(1) as f64)
        .collect();
    xs.extend(f.nodes().iter().map(|n| rational::to_f64(&n.x)));
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

/// Semiconjugacy of `f` onto a map of constant slope.
///
/// A Markov `f` is handled directly. Otherwise each schedule index `i`
/// yields a Markov approximant `f_i`, its Perron data, `psi_i` and `g_i`; the
/// run stops once successive `psi_i` differ by less than `target` on the
/// common grid.
pub fn normalize(f: &PwaMap, cfg: &NormalizeConfig) -> Result<PipelineTrace> {
    let report = entropy_lapcount(f, cfg.entropy_depth, cfg.entropy_node_limit)?;
    if !report.positive() {
        return Err(Error::EntropyNotPositive);
    }
    let entropy_estimate = report.trend;
    let grid = common_grid(f, cfg.grid);
    let psi_target = cfg.target * cfg.psi_factor;

    if let Ok(s) = markov_closure(f, cfg.max_closure_points, DEFAULT_TOL) {
        if s.beta() <= 1.0 + 1e-12 {
            return Err(Error::EntropyNotPositive);
        }
        let psi = build_psi(&s, psi_target, cfg.table_cells)?;
        let g = build_constant_slope(&s, &psi, cfg.slope_tol)?;
        let residual = verify_semiconjugacy(f, &g.map, &psi, cfg.grid).residual;
        return Ok(PipelineTrace {
            steps: vec![PipelineStep {
                index: 0,
                beta: s.beta(),
                cauchy_gap: Some(0.0),
                residual,
                points: s.points.len(),
            }],
            gamma: s.beta(),
            psi,
            g,
            entropy_estimate,
            exact: true,
            converged: true,
            non_monotone_betas: false,
            structure: s,
        });
    }

    let mut steps = Vec::new();
    let mut prev: Option<Vec<f64>> = None;
    let mut last: Option<(PsiTable, ConstantSlopeMap, MarkovStructure)> = None;
    let mut converged = false;
    for &i in &cfg.schedule {
        let (gi, ac) = markov_approx(f, i, cfg.shadow_cap)?;
        let s = MarkovStructure::new(gi, ac.points, DEFAULT_TOL)?;
        if s.beta() <= 1.0 + 1e-12 {
            steps.push(PipelineStep {
                index: i,
                beta: s.beta(),
                cauchy_gap: None,
                residual: f64::NAN,
                points: s.points.len(),
            });
            continue;
        }
        let psi = build_psi(&s, psi_target, cfg.table_cells)?;
        let g = build_constant_slope(&s, &psi, cfg.slope_tol)?;
        let vals: Vec<f64> = grid.iter().map(|&x| psi.eval(x)).collect();
        let gap = prev.as_ref().map(|p| {
            p.iter()
                .zip(&vals)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        });
        let residual = verify_semiconjugacy(f, &g.map, &psi, cfg.grid).residual;
        steps.push(PipelineStep {
            index: i,
            beta: s.beta(),
            cauchy_gap: gap,
            residual,
            points: s.points.len(),
        });
        prev = Some(vals);
        last = Some((psi, g, s));
        if gap.is_some_and(|g| g < cfg.target) {
            converged = true;
            break;
        }
    }
    let (psi, g, structure) = last.ok_or(Error::EntropyNotPositive)?;
    let betas: Vec<f64> = steps
        .iter()
        .filter(|s| s.beta > 1.0)
        .map(|s| s.beta)
        .collect();
    let non_monotone_betas = !(betas.windows(2).all(|w| w[1] >= w[0])
        || betas.windows(2).all(|w| w[1] <= w[0]));
    Ok(PipelineTrace {
        steps,
        gamma: structure.beta(),
        psi,
        g,
        entropy_estimate,
        exact: false,
        converged,
        non_monotone_betas,
        structure,
    })
}

/// `sup |psi(x) - x|` on an equispaced grid over `[lo, hi]`, with `x`
/// rescaled onto `[0, 1]`.
pub fn distance_from_identity(psi: &PsiTable, grid: usize) -> f64 {
    let (lo, hi) = (rational::to_f64(psi.lo()), rational::to_f64(psi.hi()));
    (0..=grid)
        .map(|i| {
            let t = i as f64 / grid as f64;
            (psi.eval(lo + (hi - lo) * t) - t).abs()
        })
        .fold(0.0, f64::max)
}

/// `sup |f - g|` as a float, for maps whose breakpoints are inexact.
pub fn sup_dist_f64(f: &PwaMap, g: &PwaMap) -> Result<f64> {
    f.sup_dist(g).map(|d| rational::to_f64(&d.abs()))
}
