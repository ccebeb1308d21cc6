//! The semiconjugacy `psi` of a Markov map onto a map of constant slope, and
//! numerical checks of the identities it satisfies.

mod constant_slope;
mod psi;

pub use constant_slope::{build_constant_slope, ConstantSlopeMap, SLOPE_TOL};
pub use psi::{
    build_psi, psi_from_refinement, psi_on_points, MarkovPsi, PsiTable, COLLAPSE_EPS,
    DEFAULT_TABLE_CELLS, MAX_DEPTH,
};

use crate::pwmap::{Direction, Lap, PwaMap, Side};
use crate::rational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Largest `||psi(f y) - psi(f x)| - beta |psi(y) - psi(x)||` over random
/// pairs `x, y` taken inside a common lap of `f`.
pub fn check_eq4a1(f: &PwaMap, psi: &PsiTable, beta: f64, samples: usize, seed: u64) -> f64 {
    let laps: Vec<Lap> = f
        .laps()
        .into_iter()
        .filter(|l| l.direction != Direction::Constant)
        .collect();
    if laps.is_empty() {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let lap = &laps[rng.gen_range(0..laps.len())];
        let (lo, hi) = (rational::to_f64(&lap.lo), rational::to_f64(&lap.hi));
        let x = lo + (hi - lo) * rng.gen::<f64>();
        let y = lo + (hi - lo) * rng.gen::<f64>();
        let img = |t: f64| {
            let v = f.eval_f64(t, Side::Right);
            let a = f.eval_f64(lo, Side::Right);
            let b = f.eval_f64(hi, Side::Left);
            v.clamp(a.min(b), a.max(b))
        };
        let lhs = (psi.eval(img(y)) - psi.eval(img(x))).abs();
        let rhs = beta * (psi.eval(y) - psi.eval(x)).abs();
        worst = worst.max((lhs - rhs).abs());
    }
    worst
}

/// If `psi` collapses a lap `J` to a point it must collapse `f(J)` as well.
/// Returns the first lap violating this.
pub fn check_compatibility(f: &PwaMap, psi: &PsiTable) -> Result<(), Lap> {
    for lap in f.laps() {
        let a = psi.eval_exact(&lap.lo);
        let b = psi.eval_exact(&lap.hi);
        if (b - a).abs() > COLLAPSE_EPS {
            continue;
        }
        let y0 = f.eval_within(&lap.lo, &lap.lo, &lap.hi);
        let y1 = f.eval_within(&lap.hi, &lap.lo, &lap.hi);
        let (u, w) = if y0 <= y1 { (y0, y1) } else { (y1, y0) };
        if (psi.eval_exact(&w) - psi.eval_exact(&u)).abs() > COLLAPSE_EPS {
            return Err(lap);
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualReport {
    /// `sup |psi(f(x)) - g(psi(x))|` over the grid.
    pub residual: f64,
    pub worst_x: f64,
    /// Distinct absolute slopes of `g` (grouped at 1e-9 relative) with counts.
    pub slopes: Vec<(f64, usize)>,
}

/// `sup |psi(f(x)) - g(psi(x))|` on `grid + 1` equispaced points plus the
/// nodes of `f`, using both one-sided values at the nodes. Where `g` is
/// two-valued the closer value counts.
pub fn verify_semiconjugacy(f: &PwaMap, g: &PwaMap, psi: &PsiTable, grid: usize) -> ResidualReport {
    let (lo, hi) = (f.lo_f64(), f.hi_f64());
    let probes: Vec<(f64, Side)> = (0..=grid)
        .map(|i| (lo + (hi - lo) * i as f64 / grid.max(1) as f64, Side::Right))
        .collect();
    residual_at(f, g, psi, probes)
}

/// Same residual, probed only at (up to `max_points` of) the tabulated points
/// of `psi` plus the nodes of `f`. For a table without an evaluator these are
/// the only points where `psi` is known rather than interpolated; on a Markov
/// table `f` maps them back into the table.
pub fn verify_on_table(f: &PwaMap, g: &PwaMap, psi: &PsiTable, max_points: usize) -> ResidualReport {
    let stride = psi.xs.len().div_ceil(max_points.max(1)).max(1);
    let probes: Vec<(f64, Side)> = psi
        .xs
        .iter()
        .step_by(stride)
        .map(|x| (rational::to_f64(x), Side::Right))
        .collect();
    let mut r = residual_at(f, g, psi, probes);
    // exact lookups where f(x) is itself a table point
    for x in psi.xs.iter().step_by(stride) {
        for side in [Side::Left, Side::Right] {
            let Ok(y) = f.eval(x, f.clamp_side(x, side)) else { continue };
            let lhs = psi.eval_exact(&y);
            let p = psi.eval_exact(x);
            let d = [Side::Left, Side::Right]
                .iter()
                .map(|&s| (lhs - g.eval_f64(p, s)).abs())
                .fold(f64::INFINITY, f64::min);
            if d > r.residual {
                r.residual = d;
                r.worst_x = rational::to_f64(x);
            }
        }
    }
    r
}

fn residual_at(f: &PwaMap, g: &PwaMap, psi: &PsiTable, mut probes: Vec<(f64, Side)>) -> ResidualReport {
    let (lo, hi) = (f.lo_f64(), f.hi_f64());
    for n in f.nodes() {
        let x = rational::to_f64(&n.x);
        if n.y_left.is_some() {
            probes.push((x, Side::Left));
        }
        if n.y_right.is_some() {
            probes.push((x, Side::Right));
        }
    }
    let mut residual: f64 = 0.0;
    let mut worst_x = lo;
    for (x, side) in probes {
        let side = if x >= hi { Side::Left } else { side };
        let lhs = psi.eval(f.eval_f64(x, side));
        let p = psi.eval(x);
        let r = [Side::Left, Side::Right]
            .iter()
            .map(|&s| (lhs - g.eval_f64(p, s)).abs())
            .fold(f64::INFINITY, f64::min);
        if r > residual {
            residual = r;
            worst_x = x;
        }
    }
    ResidualReport {
        residual,
        worst_x,
        slopes: slope_histogram(g),
    }
}

pub fn slope_histogram(g: &PwaMap) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    for s in g.slopes() {
        let s = rational::to_f64(&s).abs();
        match out
            .iter_mut()
            .find(|(t, _)| (t - s).abs() <= 1e-9 * t.max(s).max(1e-300))
        {
            Some(e) => e.1 += 1,
            None => out.push((s, 1)),
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}
