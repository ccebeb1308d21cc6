//! Maps of constant slope and their construction from Markov data.

use super::psi::{PsiTable, COLLAPSE_EPS};
use crate::error::{Error, Result};
use crate::markov::MarkovStructure;
use crate::pwmap::{Node, PwaMap, Side};
use crate::rational::{self, int, Rational};
use num::Signed;

/// Relative slope tolerance for fixtures.
pub const SLOPE_TOL: f64 = 1e-9;

/// A map on `[0, 1]` whose non-constant pieces all have `|slope| = slope`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstantSlopeMap {
    pub map: PwaMap,
    pub slope: f64,
}

impl ConstantSlopeMap {
    /// Checks slope uniformity of an arbitrary map within `tol` (relative).
    pub fn from_map(map: PwaMap, tol: f64) -> Result<Self> {
        let slopes: Vec<f64> = map
            .slopes()
            .iter()
            .map(|s| rational::to_f64(&s.abs()))
            .filter(|s| *s > 0.0)
            .collect();
        if slopes.is_empty() {
            return Err(Error::Precondition("map is constant".into()));
        }
        let slope = slopes.iter().sum::<f64>() / slopes.len() as f64;
        if let Some(bad) = slopes.iter().find(|s| (*s - slope).abs() > tol * slope) {
            return Err(Error::Verification(format!(
                "slope {bad} deviates from {slope}"
            )));
        }
        Ok(ConstantSlopeMap { map, slope })
    }

    /// The common exact slope magnitude, when every piece agrees exactly.
    pub fn exact_slope(&self) -> Option<Rational> {
        let mut it = self
            .map
            .slopes()
            .into_iter()
            .map(|s| s.abs())
            .filter(|s| !num::Zero::is_zero(s));
        let first = it.next()?;
        it.all(|s| s == first).then_some(first)
    }
}

/// `g` on `[0, 1]` with nodes `psi(p)` for `p in P` and one-sided values
/// `psi(f(p±))`; runs of `P` collapsed by `psi` become a single node.
pub fn build_constant_slope(
    s: &MarkovStructure,
    psi: &PsiTable,
    slope_tol: f64,
) -> Result<ConstantSlopeMap> {
    let f = &s.map;
    let beta = s.beta();
    if beta <= 1.0 {
        return Err(Error::EntropyNotPositive);
    }
    let psi_at = |x: &Rational| -> f64 { psi.eval_exact(x) };
    let np = s.points.len();
    let vals: Vec<f64> = s.points.iter().map(psi_at).collect();

    // group consecutive points with equal psi
    let mut groups: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for i in 1..np {
        if vals[i] - vals[i - 1] > COLLAPSE_EPS {
            groups.push((start, i - 1));
            start = i;
        }
    }
    groups.push((start, np - 1));

    let last = groups.len() - 1;
    let mut nodes = Vec::with_capacity(groups.len());
    for (k, &(i, j)) in groups.iter().enumerate() {
        let x = if k == 0 {
            int(0)
        } else if k == last {
            int(1)
        } else {
            rational::from_f64(vals[i])
        };
        let yl = (k > 0).then(|| {
            let y = f.eval(&s.points[i], Side::Left).expect("interior point");
            snap(psi_at(&y))
        });
        let yr = (k < last).then(|| {
            let y = f.eval(&s.points[j], Side::Right).expect("interior point");
            snap(psi_at(&y))
        });
        nodes.push(Node::new(x, yl, yr));
    }
    if nodes.len() < 2 {
        return Err(Error::Verification("psi collapses the whole interval".into()));
    }
    let map = PwaMap::new(nodes)?;
    for seg in map.segments() {
        let slope = rational::to_f64(&seg.slope()).abs();
        if slope != 0.0 && (slope - beta).abs() > slope_tol * beta {
            return Err(Error::Verification(format!(
                "piece slope {slope} differs from beta {beta}; psi too coarse"
            )));
        }
    }
    Ok(ConstantSlopeMap { map, slope: beta })
}

fn snap(y: f64) -> Rational {
    rational::from_f64(y.clamp(0.0, 1.0))
}
