//! The normal-form operator on continuous maps and the slope-gap bound.

use crate::approximation::{common_grid, normalize, NormalizeConfig, PipelineTrace};
use crate::coding::{psm_reduce, QuotientResult, DEFAULT_DEPTH, DEFAULT_MAX_POINTS};
use crate::error::{Error, Result};
use crate::pwmap::{PwaMap, Side};
use crate::rational::{self, int, Rational};
use crate::semiconjugacy::{verify_semiconjugacy, ConstantSlopeMap, PsiTable, COLLAPSE_EPS};
use num::{One, Signed, Zero};
use rand::Rng;
use std::fmt;

/// How transitivity of the input was supported.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Evidence {
    /// `f` is Markov with a primitive transition matrix.
    MatrixPrimitive,
    /// A sampled orbit visited every bin of a fine partition.
    DenseOrbitSample,
    Unknown,
}

impl fmt::Display for Evidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Evidence::MatrixPrimitive => "matrix_primitive",
            Evidence::DenseOrbitSample => "dense_orbit_sample",
            Evidence::Unknown => "unknown",
        })
    }
}

#[derive(Clone, Debug)]
pub struct PhiConfig {
    pub normalize: NormalizeConfig,
    pub reduce_depth: usize,
    pub orbit_steps: usize,
    pub orbit_bins: usize,
    pub seed: u64,
}

impl Default for PhiConfig {
    fn default() -> Self {
        PhiConfig {
            normalize: NormalizeConfig::default(),
            reduce_depth: DEFAULT_DEPTH,
            orbit_steps: 200_000,
            orbit_bins: 256,
            seed: 7,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NormalForm {
    pub psi: PsiTable,
    pub g: ConstantSlopeMap,
    /// `psi` verified strictly increasing with nothing collapsed.
    pub conjugacy: bool,
    pub evidence: Evidence,
    pub residual: f64,
    /// Smallest increment of `psi` over its table, or over the common grid
    /// for pipeline results.
    pub min_gap: f64,
    pub modality_in: usize,
    pub modality_out: usize,
    pub trace: PipelineTrace,
    /// Present when `f` had constant pieces.
    pub quotient: Option<QuotientResult>,
}

impl NormalForm {
    /// `key=value` lines for reports.
    pub fn evidence_text(&self, sig: usize) -> String {
        format!(
            "beta={}\nconjugacy={}\nevidence={}\nresidual={}\nmodality_in={}\nmodality_out={}\nmin_psi_gap={}\n",
            rational::format_real(self.g.slope, sig),
            self.conjugacy,
            self.evidence,
            rational::format_real(self.residual, sig),
            self.modality_in,
            self.modality_out,
            rational::format_real(self.min_gap, sig),
        )
    }
}

/// Whether an orbit of `f` started at a seeded random point visits every one
/// of `bins` equal subintervals. Each step adds a jitter of relative size
/// 1e-9; without it expanding maps run out of mantissa bits and float orbits
/// fall into a fixed point within a few dozen steps.
pub fn dense_orbit_sample(f: &PwaMap, steps: usize, bins: usize, seed: u64) -> bool {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (f.lo_f64(), f.hi_f64());
    let mut x = lo + (hi - lo) * rng.gen::<f64>();
    let mut seen = vec![false; bins];
    let mut left = bins;
    for _ in 0..steps {
        let b = (((x - lo) / (hi - lo)) * bins as f64) as usize;
        let b = b.min(bins - 1);
        if !seen[b] {
            seen[b] = true;
            left -= 1;
            if left == 0 {
                return true;
            }
        }
        x = f.eval_f64(x, Side::Right) + 1e-9 * (hi - lo) * (rng.gen::<f64>() - 0.5);
        if !x.is_finite() {
            return false;
        }
        x = x.clamp(lo, hi);
    }
    false
}

/// Normal form of a continuous piecewise monotone map of positive entropy:
/// the map of constant slope it is semiconjugate to, and the semiconjugacy.
pub fn phi(f: &PwaMap, cfg: &PhiConfig) -> Result<NormalForm> {
    if !f.is_continuous() {
        return Err(Error::Discontinuous);
    }
    let quotient = if f.has_constant_lap() {
        Some(psm_reduce(f, cfg.reduce_depth, DEFAULT_MAX_POINTS)?)
    } else {
        None
    };
    let base = quotient.as_ref().map_or(f, |q| &q.fhat);
    let trace = normalize(base, &cfg.normalize)?;

    let psi = match &quotient {
        None => trace.psi.clone(),
        Some(q) => compose_psi(&trace.psi, &q.psi0, cfg.normalize.grid)?,
    };
    let g = trace.g.clone();
    let residual = verify_semiconjugacy(f, &g.map, &psi, cfg.normalize.grid).residual;
    let tol = if trace.exact {
        g.slope * psi.error_bound + 1e-9
    } else {
        cfg.normalize.target * g.slope.max(1.0) + 1e-9
    };
    let collapsed = quotient
        .as_ref()
        .is_some_and(|q| !q.collapse_intervals.is_empty());
    // Approximants have constant cells of width about 1/i, so a pipeline psi
    // is judged on the common grid rather than on its own table.
    let min_gap = if trace.exact {
        psi.min_gap()
    } else {
        let vals: Vec<f64> = common_grid(f, cfg.normalize.grid)
            .iter()
            .map(|&x| psi.eval(x))
            .collect();
        vals.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    };
    let no_collapse = if trace.exact {
        psi.collapse_intervals().is_empty()
    } else {
        min_gap > COLLAPSE_EPS
    };
    let conjugacy = !collapsed && no_collapse && min_gap > COLLAPSE_EPS && residual < tol;
    let evidence = if trace.exact && trace.structure.matrix.mixing().primitive {
        Evidence::MatrixPrimitive
    } else if dense_orbit_sample(f, cfg.orbit_steps, cfg.orbit_bins, cfg.seed) {
        Evidence::DenseOrbitSample
    } else {
        Evidence::Unknown
    };
    Ok(NormalForm {
        modality_in: f.modality(),
        modality_out: g.map.modality(),
        psi,
        g,
        conjugacy,
        evidence,
        residual,
        min_gap,
        trace,
        quotient,
    })
}

/// Samples `psi(psi0(x))` on a grid plus the knots of `psi0`.
fn compose_psi(psi: &PsiTable, psi0: &PwaMap, grid: usize) -> Result<PsiTable> {
    let (lo, hi) = (psi0.lo().clone(), psi0.hi().clone());
    let len = &hi - &lo;
    let g = grid.max(1) as i64;
    let mut xs: Vec<Rational> = (0..=g).map(|i| &lo + &len * rational::ratio(i, g)).collect();
    xs.extend(psi0.nodes().iter().map(|n| n.x.clone()));
    xs.sort();
    xs.dedup();
    let ys = xs
        .iter()
        .map(|x| psi.eval_exact(&psi0.eval_clamped(x, Side::Right)))
        .collect();
    let mut t = PsiTable::from_samples(xs, ys, psi.beta)?;
    t.error_bound = psi.error_bound;
    Ok(t)
}

/// `(alpha - beta) / (2n + 2)`.
pub fn slope_gap_bound(alpha: f64, beta: f64, modality: usize) -> Result<f64> {
    if alpha.is_nan() || beta.is_nan() || alpha <= beta {
        return Err(Error::Precondition(format!(
            "slope gap needs alpha > beta, got {alpha} and {beta}"
        )));
    }
    if modality < 1 {
        return Err(Error::Precondition("modality must be at least 1".into()));
    }
    Ok((alpha - beta) / (2 * modality + 2) as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GapCheck {
    pub holds: bool,
    pub dist: Rational,
    /// Exact when both slopes are exact.
    pub bound: Rational,
    pub alpha: Rational,
    pub beta: Rational,
    pub modality: usize,
}

fn exact_or_snapped(m: &ConstantSlopeMap) -> Rational {
    m.exact_slope().unwrap_or_else(|| rational::from_f64(m.slope))
}

/// Checks `sup |f - g| >= (alpha - beta) / (2n + 2)` exactly, where `f` has
/// slope `alpha` and modality `n` and `g` has slope `beta < alpha`.
pub fn check_gap_bound(f: &ConstantSlopeMap, g: &ConstantSlopeMap) -> Result<GapCheck> {
    if !f.map.is_continuous() || !g.map.is_continuous() {
        return Err(Error::Discontinuous);
    }
    if f.map.lo() != g.map.lo() || f.map.hi() != g.map.hi() {
        return Err(Error::DomainMismatch);
    }
    if f.map.hi() - f.map.lo() != Rational::one() {
        return Err(Error::Precondition("the bound assumes a domain of length 1".into()));
    }
    let alpha = exact_or_snapped(f);
    let beta = exact_or_snapped(g);
    if alpha <= beta {
        return Err(Error::Precondition(format!(
            "slope gap needs alpha > beta, got {} and {}",
            rational::format_rational(&alpha),
            rational::format_rational(&beta)
        )));
    }
    let modality = f.map.modality();
    if modality < 1 {
        return Err(Error::Precondition("modality must be at least 1".into()));
    }
    let bound = (&alpha - &beta) / int(2 * modality as i64 + 2);
    let dist = f.map.sup_dist(&g.map)?;
    Ok(GapCheck {
        holds: dist >= bound,
        dist,
        bound,
        alpha,
        beta,
        modality,
    })
}

/// A random continuous map of constant slope on `[0, 1]` with `laps` laps.
///
/// Turning values are random rationals with denominator at most `max_den`,
/// alternating up and down; lap lengths are proportional to the value
/// changes, so the slope equals the total variation.
pub fn random_constant_slope<R: Rng>(rng: &mut R, laps: usize, max_den: i64) -> ConstantSlopeMap {
    assert!(laps >= 1 && max_den >= 2);
    loop {
        let mut ys: Vec<Rational> = Vec::with_capacity(laps + 1);
        let mut up = rng.gen::<bool>();
        let den = rng.gen_range(2..=max_den);
        ys.push(rational::ratio(rng.gen_range(0..=den), den));
        let mut ok = true;
        for _ in 0..laps {
            let cur = ys.last().expect("nonempty").clone();
            let choices: Vec<Rational> = (0..=den)
                .map(|k| rational::ratio(k, den))
                .filter(|y| if up { *y > cur } else { *y < cur })
                .collect();
            if choices.is_empty() {
                ok = false;
                break;
            }
            ys.push(choices[rng.gen_range(0..choices.len())].clone());
            up = !up;
        }
        if !ok {
            continue;
        }
        let tv: Rational = ys
            .windows(2)
            .fold(Rational::zero(), |s, w| s + (&w[1] - &w[0]).abs());
        let mut x = Rational::zero();
        let mut pts = vec![(x.clone(), ys[0].clone())];
        for w in ys.windows(2) {
            x += (&w[1] - &w[0]).abs() / &tv;
            pts.push((x.clone(), w[1].clone()));
        }
        pts.last_mut().expect("nonempty").0 = Rational::one();
        let map = PwaMap::continuous(pts).expect("valid construction");
        return ConstantSlopeMap {
            map,
            slope: rational::to_f64(&tv),
        };
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approximation::distance_from_identity;
    use crate::fixtures;
    use crate::rational::ratio;
    use rand::SeedableRng;

    #[test]
    fn bound_formula() {
        assert_eq!(slope_gap_bound(2.0, 1.5, 1).unwrap(), 0.125);
        assert!((slope_gap_bound(3.0, 2.0, 2).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!(slope_gap_bound(phi, phi, 1).is_err());
    }

    #[test]
    fn gap_examples() {
        let tent = ConstantSlopeMap::from_map(fixtures::tent(), 1e-12).unwrap();
        let low = ConstantSlopeMap::from_map(fixtures::tent_three_halves(), 1e-12).unwrap();
        let c = check_gap_bound(&tent, &low).unwrap();
        assert!(c.holds);
        assert_eq!(c.bound, ratio(1, 8));
        assert_eq!(c.dist, ratio(1, 4));
        let flipped = PwaMap::continuous(vec![
            (int(0), int(1)),
            (ratio(1, 2), int(0)),
            (int(1), int(1)),
        ])
        .unwrap();
        let flipped = ConstantSlopeMap::from_map(flipped, 1e-12).unwrap();
        assert!(matches!(check_gap_bound(&tent, &flipped), Err(Error::Precondition(_))));
    }

    #[test]
    fn generator_has_exact_constant_slope() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for laps in 1..6 {
            let m = random_constant_slope(&mut rng, laps, 9);
            assert_eq!(m.map.laps().len(), laps);
            let s = m.exact_slope().unwrap();
            assert_eq!(rational::to_f64(&s), m.slope);
            assert!(m.map.nodes().iter().all(|n| {
                let y = n.y_right.as_ref().or(n.y_left.as_ref()).unwrap();
                *y >= int(0) && *y <= int(1)
            }));
        }
    }

    #[test]
    fn phi_skew_tent() {
        let nf = phi(&fixtures::skew_tent(), &PhiConfig::default()).unwrap();
        assert_eq!(nf.g.map, fixtures::tent());
        assert!(nf.conjugacy);
        assert_eq!(nf.evidence, Evidence::MatrixPrimitive);
        assert!((nf.psi.eval_exact(&ratio(5, 12)) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn phi_fixes_markov_constant_slope_maps() {
        for f in [fixtures::tent(), fixtures::n_map()] {
            let nf = phi(&f, &PhiConfig::default()).unwrap();
            assert!(distance_from_identity(&nf.psi, 4096) < 1e-6);
            let d = nf.g.map.sup_dist(&f).unwrap();
            assert!(rational::to_f64(&d) < 1e-6);
            assert!(nf.conjugacy);
        }
    }

    #[test]
    fn phi_rejects_jumps() {
        assert_eq!(
            phi(&fixtures::doubling(), &PhiConfig::default()).unwrap_err(),
            Error::Discontinuous
        );
    }

    #[test]
    fn phi_collapses_a_plateau() {
        let cfg = PhiConfig {
            reduce_depth: 10,
            ..PhiConfig::default()
        };
        let nf = phi(&fixtures::flat_top_tent(), &cfg).unwrap();
        assert!(!nf.conjugacy);
        assert!(nf.quotient.is_some());
        assert!((nf.g.slope - 2.0).abs() < 1e-9);
        assert!(nf.residual < 1e-3);
    }

    #[test]
    fn orbit_sampling() {
        assert!(dense_orbit_sample(&fixtures::tent(), 200_000, 64, 1));
        assert!(!dense_orbit_sample(&fixtures::tent_three_halves(), 200_000, 64, 1));
    }
}
