//! The increasing semiconjugacy `psi` of a Markov map.

use crate::error::{Error, Result};
use crate::markov::{MarkovStructure, Refinement};
use crate::pwmap::{Direction, PwaMap, Side};
use crate::rational::{self, format_rational, format_real, parse_rational, Rational};

/// Consecutive table values closer than this are treated as equal.
pub const COLLAPSE_EPS: f64 = 1e-12;
/// Default cap on the number of table cells.
pub const DEFAULT_TABLE_CELLS: usize = 1 << 14;
/// Largest truncation depth accepted by [`build_psi`].
pub const MAX_DEPTH: usize = 4096;

/// Evaluates `psi` anywhere on `I` from the Perron data by unrolling
/// `psi(x) = psi(p) ± beta^{-1} (psi(f x) - psi(f(p+)))` on the cell `[p, q]`
/// containing `x`, stopping at `P` or after `depth` steps.
#[derive(Clone, Debug)]
pub struct MarkovPsi {
    map: PwaMap,
    points: Vec<Rational>,
    points_f64: Vec<f64>,
    /// `psi` on `P`: prefix sums of `v`.
    psi_p: Vec<f64>,
    cells: Vec<EvalCell>,
    beta: f64,
}

#[derive(Clone, Debug)]
struct EvalCell {
    direction: Direction,
    /// `psi(f(p+))` for the left endpoint `p`.
    psi_image_lo: f64,
}

impl MarkovPsi {
    pub fn new(s: &MarkovStructure) -> Self {
        let mut psi_p = Vec::with_capacity(s.points.len());
        let mut acc = 0.0;
        psi_p.push(0.0);
        for v in s.v() {
            acc += v;
            psi_p.push(acc);
        }
        let last = psi_p.len() - 1;
        psi_p[last] = 1.0;
        let cells = s
            .cells
            .iter()
            .enumerate()
            .map(|(i, c)| EvalCell {
                direction: if s.v()[i] == 0.0 {
                    Direction::Constant
                } else {
                    c.direction
                },
                psi_image_lo: psi_p[s.points.binary_search(&c.y_lo).expect("f(P) in P")],
            })
            .collect();
        MarkovPsi {
            map: s.map.clone(),
            points_f64: s.points.iter().map(rational::to_f64).collect(),
            points: s.points.clone(),
            psi_p,
            cells,
            beta: s.beta(),
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `psi` at the `i`-th point of `P`.
    pub fn at_point(&self, i: usize) -> f64 {
        self.psi_p[i]
    }

    /// Exact orbit; the truncation error is at most `beta^{-depth} / 2`.
    pub fn eval_exact(&self, x: &Rational, depth: usize) -> f64 {
        let mut acc = 0.0;
        let mut coef = 1.0;
        let mut x = x.clone();
        let mut step = 0;
        loop {
            if let Ok(i) = self.points.binary_search(&x) {
                return acc + coef * self.psi_p[i];
            }
            let c = self.points.partition_point(|p| p <= &x) - 1;
            let cell = &self.cells[c];
            let base = self.psi_p[c];
            let sign = match cell.direction {
                Direction::Constant => return acc + coef * base,
                Direction::Increasing => 1.0,
                Direction::Decreasing => -1.0,
            };
            if step == depth {
                return acc + coef * 0.5 * (base + self.psi_p[c + 1]);
            }
            acc += coef * (base - sign * cell.psi_image_lo / self.beta);
            coef *= sign / self.beta;
            x = self.map.eval(&x, Side::Right).expect("x inside domain");
            step += 1;
        }
    }

    /// Binary64 orbit; no early stop at `P` except on exact hits.
    pub fn eval_f64(&self, x: f64, depth: usize) -> f64 {
        let lo = self.points_f64[0];
        let hi = self.points_f64[self.points_f64.len() - 1];
        let mut x = x.clamp(lo, hi);
        let mut acc = 0.0;
        let mut coef = 1.0;
        for step in 0..=depth {
            let pos = self.points_f64.partition_point(|&p| p <= x);
            if pos > 0 && self.points_f64[pos - 1] == x {
                return acc + coef * self.psi_p[pos - 1];
            }
            let c = pos - 1;
            let cell = &self.cells[c];
            let base = self.psi_p[c];
            let sign = match cell.direction {
                Direction::Constant => return acc + coef * base,
                Direction::Increasing => 1.0,
                Direction::Decreasing => -1.0,
            };
            if step == depth {
                return acc + coef * 0.5 * (base + self.psi_p[c + 1]);
            }
            acc += coef * (base - sign * cell.psi_image_lo / self.beta);
            coef *= sign / self.beta;
            // evaluate on the cell's own branch so rounding cannot hop a jump
            let (p, q) = (self.points_f64[c], self.points_f64[c + 1]);
            let y0 = self.map.eval_f64(p, Side::Right);
            let y1 = self.map.eval_f64(q, Side::Left);
            let y = self.map.eval_f64(x, Side::Right);
            x = y.clamp(y0.min(y1), y0.max(y1));
        }
        unreachable!()
    }
}

/// `psi` sampled on a point set, with an optional exact evaluator.
#[derive(Clone, Debug)]
pub struct PsiTable {
    /// Truncation depth `n` of the evaluator; the error bound is `beta^{-n}`.
    pub depth: usize,
    /// Depth `m <= n` of the refinement whose points form the table.
    pub table_depth: usize,
    pub xs: Vec<Rational>,
    pub ys: Vec<f64>,
    pub beta: f64,
    pub error_bound: f64,
    xs_f64: Vec<f64>,
    evaluator: Option<MarkovPsi>,
}

impl PsiTable {
    /// Table without an evaluator; `psi` is interpolated linearly.
    pub fn from_samples(xs: Vec<Rational>, ys: Vec<f64>, beta: f64) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::Precondition("psi table needs at least 2 samples".into()));
        }
        if xs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Precondition("psi abscissae must increase".into()));
        }
        if ys.windows(2).any(|w| w[1] < w[0] - COLLAPSE_EPS) {
            return Err(Error::Precondition("psi values must not decrease".into()));
        }
        Ok(PsiTable {
            depth: 0,
            table_depth: 0,
            xs_f64: xs.iter().map(rational::to_f64).collect(),
            xs,
            ys,
            beta,
            error_bound: 0.0,
            evaluator: None,
        })
    }

    /// The identity on `[lo, hi]` rescaled onto `[0, 1]`.
    pub fn identity(lo: Rational, hi: Rational) -> Self {
        PsiTable::from_samples(vec![lo, hi], vec![0.0, 1.0], 1.0).expect("valid")
    }

    pub fn has_evaluator(&self) -> bool {
        self.evaluator.is_some()
    }

    pub fn evaluator(&self) -> Option<&MarkovPsi> {
        self.evaluator.as_ref()
    }

    pub fn lo(&self) -> &Rational {
        &self.xs[0]
    }

    pub fn hi(&self) -> &Rational {
        &self.xs[self.xs.len() - 1]
    }

    fn interp(&self, x: f64) -> f64 {
        let n = self.xs_f64.len();
        let x = x.clamp(self.xs_f64[0], self.xs_f64[n - 1]);
        let pos = self.xs_f64.partition_point(|&p| p <= x);
        if pos >= n {
            return self.ys[n - 1];
        }
        let (x0, x1) = (self.xs_f64[pos - 1], self.xs_f64[pos]);
        let (y0, y1) = (self.ys[pos - 1], self.ys[pos]);
        y0 + (x - x0) / (x1 - x0) * (y1 - y0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.evaluator {
            Some(e) => e.eval_f64(x, self.depth),
            None => self.interp(x),
        }
    }

    pub fn eval_exact(&self, x: &Rational) -> f64 {
        if let Ok(i) = self.xs.binary_search(x) {
            return self.ys[i];
        }
        match &self.evaluator {
            Some(e) => e.eval_exact(x, self.depth),
            None => self.interp(rational::to_f64(x)),
        }
    }

    /// Maximal runs of table points on which `psi` is constant (within
    /// [`COLLAPSE_EPS`]), as closed intervals.
    pub fn collapse_intervals(&self) -> Vec<(Rational, Rational)> {
        let mut out = Vec::new();
        let mut i = 0;
        while i + 1 < self.xs.len() {
            if self.ys[i + 1] - self.ys[i] <= COLLAPSE_EPS {
                let start = i;
                while i + 1 < self.xs.len() && self.ys[i + 1] - self.ys[i] <= COLLAPSE_EPS {
                    i += 1;
                }
                out.push((self.xs[start].clone(), self.xs[i].clone()));
            } else {
                i += 1;
            }
        }
        out
    }

    /// Smallest difference of consecutive table values.
    pub fn min_gap(&self) -> f64 {
        self.ys
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn strictly_increasing(&self) -> bool {
        self.min_gap() > COLLAPSE_EPS
    }

    /// Header `x<TAB>psi<TAB>exact`; `x` and `psi` as decimals.
    pub fn to_tsv(&self, sig: usize) -> String {
        let mut out = String::from("x\tpsi\texact\n");
        for (x, y) in self.xs.iter().zip(&self.ys) {
            out.push_str(&format!(
                "{}\t{}\t{}\n",
                rational::format_rational_decimal(x, sig),
                format_real(*y, sig),
                format_rational(x)
            ));
        }
        out
    }

    /// Reads the TSV written by [`PsiTable::to_tsv`]; the exact column wins
    /// over the decimal one when present.
    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let perr = |line: usize, msg: &str| Error::Parse {
            line,
            msg: msg.to_string(),
        };
        match lines.next() {
            Some((_, h)) if h.starts_with("x\tpsi") => {}
            _ => return Err(perr(1, "expected header 'x<TAB>psi'")),
        }
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() < 2 {
                return Err(perr(i + 1, "expected at least two columns"));
            }
            let x = match f.get(2) {
                Some(t) => parse_rational(t),
                None => parse_rational(f[0]),
            }
            .ok_or_else(|| perr(i + 1, "bad x value"))?;
            let y: f64 = f[1].parse().map_err(|_| perr(i + 1, "bad psi value"))?;
            xs.push(x);
            ys.push(y);
        }
        PsiTable::from_samples(xs, ys, f64::NAN)
    }
}

/// `psi` on `P_n` by the prefix-sum formula over the cells of `A_n`.
pub fn psi_from_refinement(s: &MarkovStructure, r: &Refinement) -> Vec<f64> {
    let scale = s.beta().powi(-(r.depth as i32));
    let v = s.v();
    let mut ys = Vec::with_capacity(r.points.len());
    // Neumaier summation: deep tables have millions of cells and the naive
    // prefix sum drifts past 1e-12.
    let (mut acc, mut comp) = (0.0f64, 0.0f64);
    ys.push(0.0);
    for img in &r.image {
        if let Some(k) = img {
            let x = v[*k];
            let t = acc + x;
            comp += if acc.abs() >= x.abs() { (acc - t) + x } else { (x - t) + acc };
            acc = t;
        }
        ys.push((acc + comp) * scale);
    }
    let last = ys.len() - 1;
    ys[last] = 1.0;
    ys
}

/// The table at exactly depth `n`.
pub fn psi_on_points(s: &MarkovStructure, n: usize, max_cells: usize) -> Result<PsiTable> {
    let r = crate::markov::refine(s, n, max_cells)?;
    let ys = psi_from_refinement(s, &r);
    Ok(PsiTable {
        depth: n,
        table_depth: n,
        xs_f64: r.points.iter().map(rational::to_f64).collect(),
        xs: r.points,
        ys,
        beta: s.beta(),
        error_bound: s.beta().powi(-(n as i32)),
        evaluator: Some(MarkovPsi::new(s)),
    })
}

/// Depth `n` with `beta^{-n} < target_err`, a table at the deepest level
/// within `max_cells`, and the evaluator for everything finer.
pub fn build_psi(s: &MarkovStructure, target_err: f64, max_cells: usize) -> Result<PsiTable> {
    let beta = s.beta();
    if beta <= 1.0 + 1e-12 {
        return Err(Error::EntropyNotPositive);
    }
    if !(target_err > 0.0) {
        return Err(Error::Precondition("target error must be positive".into()));
    }
    let n = ((1.0 / target_err).ln() / beta.ln()).floor() as usize + 1;
    if n > MAX_DEPTH {
        return Err(Error::Budget(format!(
            "target error {target_err} needs depth {n} > {MAX_DEPTH}"
        )));
    }
    let mut r = Refinement::base(s);
    while r.depth < n {
        match r.next(s, max_cells) {
            Ok(next) => r = next,
            Err(Error::Budget(_)) => break,
            Err(e) => return Err(e),
        }
    }
    let ys = psi_from_refinement(s, &r);
    Ok(PsiTable {
        depth: n,
        table_depth: r.depth,
        xs_f64: r.points.iter().map(rational::to_f64).collect(),
        xs: r.points,
        ys,
        beta,
        error_bound: beta.powi(-(n as i32)),
        evaluator: Some(MarkovPsi::new(s)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::markov::{markov_closure, DEFAULT_TOL};
    use crate::rational::{int, ratio};

    fn structure(f: &PwaMap) -> MarkovStructure {
        markov_closure(f, 1000, DEFAULT_TOL).unwrap()
    }

    const PHI: f64 = 1.618_033_988_749_895;

    #[test]
    fn golden_depth_zero_and_one() {
        let s = structure(&fixtures::golden());
        let t0 = psi_on_points(&s, 0, 1 << 10).unwrap();
        let v_a = (3.0 - 5f64.sqrt()) / 2.0;
        assert_eq!(t0.ys[0], 0.0);
        assert!((t0.ys[1] - v_a).abs() < 1e-12);
        assert_eq!(t0.ys[2], 1.0);
        let t1 = psi_on_points(&s, 1, 1 << 10).unwrap();
        assert_eq!(t1.xs[2], ratio(3, 4));
        let v_b = (5f64.sqrt() - 1.0) / 2.0;
        assert!((t1.ys[2] - 2.0 * v_b / PHI).abs() < 1e-12);
        assert!((t1.ys[1] - v_a).abs() < 1e-12);
    }

    #[test]
    fn tent_psi_is_identity_on_dyadics() {
        let s = structure(&fixtures::tent());
        let t = psi_on_points(&s, 2, 1 << 10).unwrap();
        for (x, y) in t.xs.iter().zip(&t.ys) {
            assert!((rational::to_f64(x) - y).abs() < 1e-15);
        }
        let t = build_psi(&s, 1e-3, DEFAULT_TABLE_CELLS).unwrap();
        // A_10 has 2^11 cells
        assert_eq!(t.depth, 10);
        assert_eq!(t.xs.len(), 2049);
        assert!(t
            .xs
            .iter()
            .zip(&t.ys)
            .all(|(x, y)| (rational::to_f64(x) - y).abs() < 1e-15));
    }

    #[test]
    fn golden_build_depth() {
        let s = structure(&fixtures::golden());
        let t = build_psi(&s, 1e-6, DEFAULT_TABLE_CELLS).unwrap();
        assert_eq!(t.depth, 29);
        assert!(t.collapse_intervals().is_empty());
        assert!(t.error_bound < 1e-6);
    }

    #[test]
    fn evaluator_agrees_with_the_formula() {
        for f in [
            fixtures::golden(),
            fixtures::skew_tent(),
            fixtures::doubling(),
            fixtures::flat_top_tent(),
            fixtures::n_map(),
        ] {
            let s = structure(&f);
            let t = psi_on_points(&s, 6, 1 << 16).unwrap();
            let e = MarkovPsi::new(&s);
            for (x, y) in t.xs.iter().zip(&t.ys) {
                assert!((e.eval_exact(x, 60) - y).abs() < 1e-12);
                assert!((e.eval_f64(rational::to_f64(x), 60) - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn depth_consistency() {
        for f in [fixtures::golden(), fixtures::tent(), fixtures::skew_tent()] {
            let s = structure(&f);
            let mut prev = psi_on_points(&s, 0, 1 << 16).unwrap();
            for n in 1..=8 {
                let cur = psi_on_points(&s, n, 1 << 16).unwrap();
                for (x, y) in prev.xs.iter().zip(&prev.ys) {
                    let j = cur.xs.binary_search(x).unwrap();
                    assert!((cur.ys[j] - y).abs() < 1e-12);
                }
                prev = cur;
            }
        }
    }

    #[test]
    fn flat_top_collapses_its_plateau() {
        let s = structure(&fixtures::flat_top_tent());
        let t = build_psi(&s, 1e-3, DEFAULT_TABLE_CELLS).unwrap();
        let c = t.collapse_intervals();
        assert!(c.contains(&(ratio(1, 3), ratio(2, 3))));
        // preimages of the plateau collapse too
        assert!(c.contains(&(ratio(1, 9), ratio(2, 9))));
        assert!((t.eval_exact(&ratio(1, 2)) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn entropy_zero_is_rejected() {
        let s = structure(&fixtures::trapezoid());
        assert_eq!(
            build_psi(&s, 1e-3, DEFAULT_TABLE_CELLS).unwrap_err(),
            Error::EntropyNotPositive
        );
    }

    #[test]
    fn tsv_round_trip() {
        let s = structure(&fixtures::skew_tent());
        let t = psi_on_points(&s, 2, 1 << 10).unwrap();
        let text = t.to_tsv(17);
        assert!(text.starts_with("x\tpsi\texact\n0\t0\t0\n"));
        let back = PsiTable::from_tsv(&text).unwrap();
        assert_eq!(back.xs, t.xs);
        for (a, b) in back.ys.iter().zip(&t.ys) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(PsiTable::from_tsv("nope\n").is_err());
        assert_eq!(back.eval_exact(&ratio(5, 12)), 0.5);
        assert_eq!(back.lo(), &int(0));
    }
}
