//! Itineraries and the finite-depth quotient of a piecewise monotone map by
//! its coding, which removes constant pieces.

use crate::entropy::entropy_lapcount;
use crate::error::{Error, Result};
use crate::pwmap::{Direction, Lap, Node, PwaMap, Side, DEFAULT_NODE_LIMIT};
use crate::rational::{self, Rational};
use num::Zero;
use std::collections::BTreeSet;

pub const DEFAULT_DEPTH: usize = 16;
pub const DEFAULT_MAX_POINTS: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Itinerary {
    /// Lap indices of `x, f(x), ..., f^{n-1}(x)`.
    pub word: Vec<usize>,
    /// Positions where the orbit sits on an endpoint shared by two laps.
    pub ambiguous_at: Vec<usize>,
}

impl Itinerary {
    /// Letters `A`, `B`, ... for the first 26 laps, `L<i>` beyond.
    pub fn letters(&self) -> String {
        self.word
            .iter()
            .map(|&i| {
                if i < 26 {
                    char::from(b'A' + i as u8).to_string()
                } else {
                    format!("L{i}")
                }
            })
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Index of the lap holding `x` from the given side.
fn lap_index(laps: &[Lap], x: &Rational, side: Side) -> usize {
    let k = match side {
        Side::Right => laps.partition_point(|l| &l.hi <= x),
        Side::Left => laps.partition_point(|l| &l.hi < x),
    };
    k.min(laps.len() - 1)
}

fn is_shared_endpoint(laps: &[Lap], x: &Rational) -> bool {
    laps.iter().skip(1).any(|l| &l.lo == x)
}

/// Itinerary of `x` under `f`.
///
/// At a point shared by two laps the orbit is followed as a one-sided limit:
/// `x` is read from the right (from the left at the right end of the domain)
/// and the side is carried through each monotone lap, so `f(x+)` lands in the
/// lap entered by points just right of `x`. After a constant lap the right
/// side is used.
pub fn itinerary(f: &PwaMap, x: &Rational, n: usize) -> Result<Itinerary> {
    if !f.contains(x) {
        return Err(Error::OutOfDomain {
            value: rational::format_rational(x),
            lo: rational::format_rational(f.lo()),
            hi: rational::format_rational(f.hi()),
        });
    }
    let laps = f.laps();
    let mut word = Vec::with_capacity(n);
    let mut ambiguous_at = Vec::new();
    let mut cur = x.clone();
    let mut side = f.clamp_side(x, Side::Right);
    for k in 0..n {
        if is_shared_endpoint(&laps, &cur) {
            ambiguous_at.push(k);
        }
        let li = lap_index(&laps, &cur, side);
        word.push(li);
        if k + 1 == n {
            break;
        }
        let seg = f.segment(f.locate(&cur, side)?);
        let next = seg.at(&cur);
        side = seg.direction().carry(side).unwrap_or(Side::Right);
        cur = next;
        side = f.clamp_side(&cur, side);
    }
    Ok(Itinerary { word, ambiguous_at })
}

/// Result of collapsing the intervals on which an iterate of `f` is constant.
#[derive(Clone, Debug)]
pub struct QuotientResult {
    pub depth: usize,
    /// Maximal closed intervals with equal codes on which `f^depth` is constant.
    pub collapse_intervals: Vec<(Rational, Rational)>,
    /// Increasing continuous map onto `[0, 1]`, constant on each collapse interval.
    pub psi0: PwaMap,
    /// The induced map on `[0, 1]`.
    pub fhat: PwaMap,
    /// Number of cells of the depth-`d` coding partition.
    pub cells: usize,
}

impl QuotientResult {
    pub fn collapsed_length(&self) -> Rational {
        self.collapse_intervals
            .iter()
            .fold(Rational::zero(), |acc, (a, b)| acc + (b - a))
    }

    /// `sup |psi0(f(x)) - fhat(psi0(x))|` over a grid plus the nodes of `f`.
    pub fn factor_residual(&self, f: &PwaMap, grid: usize) -> f64 {
        let (lo, hi) = (f.lo_f64(), f.hi_f64());
        let mut probes: Vec<(f64, Side)> = (0..=grid)
            .map(|i| (lo + (hi - lo) * i as f64 / grid.max(1) as f64, Side::Right))
            .collect();
        for n in f.nodes() {
            let x = rational::to_f64(&n.x);
            probes.push((x, Side::Left));
            probes.push((x, Side::Right));
        }
        let mut worst: f64 = 0.0;
        for (x, side) in probes {
            let side = if x >= hi {
                Side::Left
            } else if x <= lo {
                Side::Right
            } else {
                side
            };
            let lhs = self.psi0.eval_f64(f.eval_f64(x, side), Side::Right);
            let p = self.psi0.eval_f64(x, Side::Right);
            let r = [Side::Left, Side::Right]
                .iter()
                .map(|&s| (lhs - self.fhat.eval_f64(p, s)).abs())
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(r);
        }
        worst
    }

    /// Collapse intervals as TSV with exact `lo`, `hi` columns.
    pub fn intervals_tsv(&self) -> String {
        let mut out = String::from("lo\thi\n");
        for (a, b) in &self.collapse_intervals {
            out.push_str(&format!(
                "{}\t{}\n",
                rational::format_rational(a),
                rational::format_rational(b)
            ));
        }
        out
    }
}

/// Points `x` with `f^j(x)` a lap endpoint for some `j < depth`, preimages
/// being taken through non-constant pieces only.
fn coding_points(f: &PwaMap, depth: usize, max_points: usize) -> Result<Vec<Rational>> {
    let ends: BTreeSet<Rational> = f.lap_endpoints().into_iter().collect();
    let mut all = ends.clone();
    let mut frontier: Vec<Rational> = ends.into_iter().collect();
    let pieces: Vec<_> = f
        .segments()
        .filter(|s| s.direction() != Direction::Constant)
        .collect();
    for _ in 1..depth {
        let mut next = Vec::new();
        for y in &frontier {
            for s in &pieces {
                let (a, b) = if s.y0 <= s.y1 { (s.y0, s.y1) } else { (s.y1, s.y0) };
                if a <= y && y <= b {
                    let x = s.preimage(y);
                    if all.insert(x.clone()) {
                        next.push(x);
                    }
                }
            }
        }
        if all.len() > max_points {
            return Err(Error::Budget(format!(
                "coding partition exceeds {max_points} points"
            )));
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(all.into_iter().collect())
}

fn mix(a: u64, b: u64) -> u64 {
    // splitmix64 finalizer over a simple combination
    let mut z = a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.rotate_left(29);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-cell depth-`depth` codes (hashed) and whether `f^depth` is constant
/// on the cell.
///
/// A cell inside one lap is sent by `f` into a single cell of the coarser
/// partition, so its code is its lap followed by the code, one step shorter,
/// of any finer cell meeting its image. Each cell needs one exact image
/// lookup; the rest is integer work.
fn cell_codes(f: &PwaMap, laps: &[Lap], points: &[Rational], depth: usize) -> (Vec<u64>, Vec<bool>) {
    let cells = points.len() - 1;
    let mut lap_of = Vec::with_capacity(cells);
    let mut next = Vec::with_capacity(cells);
    let mut li = 0;
    let cell_right_of = |y: &Rational| points.partition_point(|p| p <= y).clamp(1, cells) - 1;
    for c in 0..cells {
        let (a, b) = (&points[c], &points[c + 1]);
        while laps[li].hi <= *a {
            li += 1;
        }
        lap_of.push(li);
        let ya = f.eval(a, Side::Right).expect("interior");
        let y = if laps[li].direction == Direction::Decreasing {
            f.eval(b, Side::Left).expect("interior")
        } else {
            ya
        };
        next.push(cell_right_of(&y));
    }
    let constant: Vec<bool> = lap_of
        .iter()
        .map(|&l| laps[l].direction == Direction::Constant)
        .collect();
    let mut code: Vec<u64> = lap_of.iter().map(|&l| mix(l as u64, 0)).collect();
    let mut collapsed = constant.clone();
    for _ in 1..depth {
        let (c0, k0) = (code.clone(), collapsed.clone());
        for c in 0..cells {
            code[c] = mix(lap_of[c] as u64, c0[next[c]]);
            collapsed[c] = constant[c] || k0[next[c]];
        }
    }
    (code, collapsed)
}

/// Quotient of `f` by the intervals on which `f^depth` is constant and the
/// depth-`depth` code is constant.
///
/// Such intervals are genuine classes of the full coding relation. `fhat` has
/// nodes at the images of the coding points and of the nodes of `f`, so it
/// is strictly monotone on every piece; the factor identity holds up to the
/// size of intervals collapsed only at greater depth.
pub fn psm_reduce(f: &PwaMap, depth: usize, max_points: usize) -> Result<QuotientResult> {
    if depth == 0 {
        return Err(Error::Precondition("depth must be at least 1".into()));
    }
    let report = entropy_lapcount(f, depth.min(10), DEFAULT_NODE_LIMIT)?;
    if !report.positive() {
        return Err(Error::EntropyNotPositive);
    }
    if !f.has_constant_lap() {
        let (lo, hi) = (f.lo().clone(), f.hi().clone());
        let psi0 = PwaMap::continuous(vec![
            (lo.clone(), rational::zero()),
            (hi.clone(), rational::one()),
        ])?;
        let fhat = rescale(f, &psi0)?;
        return Ok(QuotientResult {
            depth,
            collapse_intervals: Vec::new(),
            psi0,
            fhat,
            cells: f.laps().len(),
        });
    }

    let points = coding_points(f, depth, max_points)?;
    let laps = f.laps();
    let (codes, collapsed) = cell_codes(f, &laps, &points, depth);
    let cells = codes.len();

    // collapse interval index of each cell
    let mut owner: Vec<Option<usize>> = vec![None; cells];
    let mut collapse: Vec<(Rational, Rational)> = Vec::new();
    let mut i = 0;
    while i < cells {
        if !collapsed[i] {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < cells && collapsed[j + 1] && codes[j + 1] == codes[i] {
            j += 1;
        }
        owner[i..=j].iter_mut().for_each(|o| *o = Some(collapse.len()));
        collapse.push((points[i].clone(), points[j + 1].clone()));
        i = j + 1;
    }

    let (lo, hi) = (f.lo().clone(), f.hi().clone());
    let kept = (&hi - &lo) - collapse.iter().fold(Rational::zero(), |s, (a, b)| s + (b - a));
    if kept.is_zero() {
        return Err(Error::EntropyNotPositive);
    }
    // psi0 at every coding point, by a sweep
    let mut base: Vec<Rational> = Vec::with_capacity(points.len());
    let mut acc = Rational::zero();
    base.push(Rational::zero());
    for c in 0..cells {
        if owner[c].is_none() {
            acc += &points[c + 1] - &points[c];
        }
        base.push(&acc / &kept);
    }
    let psi_at = |y: &Rational| -> Rational {
        let k = points.partition_point(|p| p <= y).clamp(1, cells) - 1;
        if owner[k].is_some() || y == &points[k] {
            base[k].clone()
        } else {
            &base[k] + (y - &points[k]) / &kept
        }
    };

    let mut knots: Vec<(Rational, Rational)> = Vec::new();
    for (c, p) in points.iter().enumerate() {
        let boundary = c == 0
            || c == cells
            || owner[c - 1] != owner[c]
            || owner[c].is_none();
        if boundary {
            knots.push((p.clone(), base[c].clone()));
        }
    }
    let psi0 = PwaMap::continuous(knots)?.simplify();

    let mut xs: BTreeSet<Rational> = points.iter().cloned().collect();
    xs.extend(f.nodes().iter().map(|n| n.x.clone()));
    let xs: Vec<Rational> = xs.into_iter().collect();
    let xh: Vec<Rational> = xs.iter().map(|x| psi_at(x)).collect();
    let mut nodes: Vec<Node> = Vec::new();
    let mut k = 0;
    while k < xs.len() {
        let mut m = k;
        while m + 1 < xs.len() && xh[m + 1] == xh[k] {
            m += 1;
        }
        let yl = (k > 0).then(|| psi_at(&f.eval(&xs[k], Side::Left).expect("interior")));
        let yr = (m + 1 < xs.len()).then(|| psi_at(&f.eval(&xs[m], Side::Right).expect("interior")));
        nodes.push(Node::new(xh[k].clone(), yl, yr));
        k = m + 1;
    }
    let fhat = PwaMap::new(nodes)?.simplify();
    Ok(QuotientResult {
        depth,
        collapse_intervals: collapse,
        psi0,
        fhat,
        cells,
    })
}

/// `psi0 f psi0^{-1}` for an affine `psi0`.
fn rescale(f: &PwaMap, psi0: &PwaMap) -> Result<PwaMap> {
    let at = |x: &Rational| psi0.eval_clamped(x, Side::Right);
    let nodes = f
        .nodes()
        .iter()
        .map(|n| Node::new(at(&n.x), n.y_left.as_ref().map(at), n.y_right.as_ref().map(at)))
        .collect();
    PwaMap::new(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rational::{int, ratio};

    #[test]
    fn itinerary_examples() {
        let it = itinerary(&fixtures::tent(), &ratio(1, 3), 4).unwrap();
        assert_eq!(it.letters(), "A,B,B,B");
        assert!(it.ambiguous_at.is_empty());
        let it = itinerary(&fixtures::tent(), &ratio(1, 2), 2).unwrap();
        assert_eq!(it.ambiguous_at, vec![0]);
        let it = itinerary(&fixtures::golden(), &int(0), 3).unwrap();
        assert_eq!(it.letters(), "A,B,B");
        assert_eq!(it.ambiguous_at, vec![1]);
    }

    /// Brute-force oracle: laps of `f` visited by a float orbit.
    fn float_word(f: &PwaMap, x: f64, n: usize) -> Vec<usize> {
        let ends: Vec<f64> = f.lap_endpoints().iter().map(rational::to_f64).collect();
        let mut x = x;
        (0..n)
            .map(|_| {
                let k = ends[1..].partition_point(|e| *e <= x).min(ends.len() - 2);
                x = f.eval_f64(x, Side::Right);
                k
            })
            .collect()
    }

    #[test]
    fn itinerary_matches_float_orbit() {
        let f = fixtures::n_map();
        for x in [ratio(1, 7), ratio(2, 9), ratio(5, 11), ratio(9, 10)] {
            let it = itinerary(&f, &x, 5).unwrap();
            assert_eq!(it.word, float_word(&f, rational::to_f64(&x), 5));
        }
    }

    #[test]
    fn tent_needs_no_collapse() {
        let q = psm_reduce(&fixtures::tent(), 8, DEFAULT_MAX_POINTS).unwrap();
        assert!(q.collapse_intervals.is_empty());
        assert_eq!(q.fhat, fixtures::tent());
        assert_eq!(q.psi0, PwaMap::identity(int(0), int(1)).unwrap());
    }

    #[test]
    fn identity_is_rejected() {
        assert_eq!(
            psm_reduce(&fixtures::identity(), 4, DEFAULT_MAX_POINTS).unwrap_err(),
            Error::EntropyNotPositive
        );
    }

    #[test]
    fn trapezoid_plateau_and_preimages() {
        let f = fixtures::trapezoid();
        let q = psm_reduce(&f, 8, DEFAULT_MAX_POINTS).unwrap();
        assert!(q.collapse_intervals.contains(&(ratio(2, 5), ratio(3, 5))));
        assert!(q.collapse_intervals.contains(&(ratio(1, 5), ratio(3, 10))));
        assert!(q.collapse_intervals.contains(&(ratio(7, 10), ratio(4, 5))));
        assert!(!q.fhat.has_constant_lap());
        // every collapse interval is mapped by f^8 to a point
        let f8 = f.iterate(8, DEFAULT_NODE_LIMIT).unwrap();
        for (a, b) in &q.collapse_intervals {
            let m = rational::midpoint(a, b);
            assert_eq!(f8.eval_clamped(a, Side::Right), f8.eval_clamped(&m, Side::Right));
            assert_eq!(f8.eval_clamped(b, Side::Left), f8.eval_clamped(&m, Side::Right));
        }
    }

    #[test]
    fn deeper_codes_collapse_more() {
        let f = fixtures::trapezoid();
        let mut prev: Option<QuotientResult> = None;
        for d in [4, 6, 8, 12] {
            let q = psm_reduce(&f, d, DEFAULT_MAX_POINTS).unwrap();
            if let Some(p) = &prev {
                assert!(q.collapsed_length() >= p.collapsed_length());
                for (a, b) in &p.collapse_intervals {
                    assert!(q.collapse_intervals.iter().any(|(c, e)| c <= a && b <= e));
                }
            }
            prev = Some(q);
        }
    }

    #[test]
    fn factor_identity_sharpens_with_depth() {
        let f = fixtures::trapezoid();
        let q = psm_reduce(&f, 40, DEFAULT_MAX_POINTS).unwrap();
        assert!(q.factor_residual(&f, 4096) <= 1e-9);
        // middle thirds: the residual shrinks like the widest uncollapsed gap
        let f = fixtures::flat_top_tent();
        for d in [6, 10] {
            let q = psm_reduce(&f, d, DEFAULT_MAX_POINTS).unwrap();
            assert_eq!(q.collapse_intervals.len(), (1 << d) - 1);
            assert!(!q.fhat.has_constant_lap());
            assert!(q.factor_residual(&f, 4096) <= 0.4 / (1u64 << d) as f64);
        }
    }

    #[test]
    fn intervals_tsv_is_exact() {
        let q = psm_reduce(&fixtures::flat_top_tent(), 4, DEFAULT_MAX_POINTS).unwrap();
        let tsv = q.intervals_tsv();
        assert!(tsv.starts_with("lo\thi\n1/81\t2/81\n1/27\t2/27\n"));
        assert!(tsv.contains("\n1/3\t2/3\n"));
        assert_eq!(tsv.lines().count(), 16);
    }
}
