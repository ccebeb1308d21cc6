//! Exact piecewise-affine interval maps with one-sided values at every node.
//!
//! A [`PwaMap`] stores, for each node `x`, the left limit `f(x-)` and the right
//! limit `f(x+)`. Between consecutive nodes the map is the affine interpolation
//! of the right value at the left node and the left value at the right node, so
//! jump discontinuities are allowed only at nodes.

mod format;

pub use format::{parse_pwa, serialize_pwa, serialize_pwa_decimal};

use crate::error::{Error, Result};
use crate::rational::{self, format_rational, Rational};
use num::{Signed, Zero};
use std::cmp::Ordering;

/// Default cap on the node count of an iterate.
pub const DEFAULT_NODE_LIMIT: usize = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn flip(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Increasing,
    Decreasing,
    Constant,
}

impl Direction {
    fn of(y0: &Rational, y1: &Rational) -> Direction {
        match y0.cmp(y1) {
            Ordering::Less => Direction::Increasing,
            Ordering::Greater => Direction::Decreasing,
            Ordering::Equal => Direction::Constant,
        }
    }

    /// The side from which an image is approached when the argument is
    /// approached from `side`.
    pub fn carry(self, side: Side) -> Option<Side> {
        match self {
            Direction::Increasing => Some(side),
            Direction::Decreasing => Some(side.flip()),
            Direction::Constant => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub x: Rational,
    pub y_left: Option<Rational>,
    pub y_right: Option<Rational>,
}

impl Node {
    pub fn new(x: Rational, y_left: Option<Rational>, y_right: Option<Rational>) -> Self {
        Node { x, y_left, y_right }
    }

    pub fn is_jump(&self) -> bool {
        matches!((&self.y_left, &self.y_right), (Some(l), Some(r)) if l != r)
    }
}

/// A maximal closed interval on which the map is continuous and either strictly
/// monotone or constant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lap {
    pub lo: Rational,
    pub hi: Rational,
    pub direction: Direction,
}

impl Lap {
    pub fn contains(&self, x: &Rational) -> bool {
        &self.lo <= x && x <= &self.hi
    }
}

/// Affine piece between two consecutive nodes.
#[derive(Clone, Copy, Debug)]
pub struct Segment<'a> {
    pub x0: &'a Rational,
    pub x1: &'a Rational,
    /// Right limit at `x0`.
    pub y0: &'a Rational,
    /// Left limit at `x1`.
    pub y1: &'a Rational,
}

impl Segment<'_> {
    pub fn direction(&self) -> Direction {
        Direction::of(self.y0, self.y1)
    }

    pub fn slope(&self) -> Rational {
        (self.y1 - self.y0) / (self.x1 - self.x0)
    }

    pub fn at(&self, x: &Rational) -> Rational {
        self.y0 + (x - self.x0) * (self.y1 - self.y0) / (self.x1 - self.x0)
    }

    /// Preimage of `y` under the affine piece; the piece must be non-constant.
    pub fn preimage(&self, y: &Rational) -> Rational {
        self.x0 + (y - self.y0) * (self.x1 - self.x0) / (self.y1 - self.y0)
    }
}

#[derive(Clone, Debug)]
pub struct PwaMap {
    nodes: Vec<Node>,
    // x, y_left, y_right as binary64; NaN marks an absent side
    fast: Vec<[f64; 3]>,
}

impl PartialEq for PwaMap {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes
    }
}

impl Eq for PwaMap {}

impl PwaMap {
    pub fn new(nodes: Vec<Node>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::TooFewNodes(nodes.len()));
        }
        for i in 1..nodes.len() {
            if nodes[i].x <= nodes[i - 1].x {
                return Err(Error::NonIncreasing { index: i });
            }
        }
        let last = nodes.len() - 1;
        for (i, n) in nodes.iter().enumerate() {
            let need_left = i > 0;
            let need_right = i < last;
            if n.y_left.is_some() != need_left {
                return Err(Error::BadNode {
                    index: i,
                    msg: if need_left {
                        "missing left value".into()
                    } else {
                        "left value given at the left endpoint".into()
                    },
                });
            }
            if n.y_right.is_some() != need_right {
                return Err(Error::BadNode {
                    index: i,
                    msg: if need_right {
                        "missing right value".into()
                    } else {
                        "right value given at the right endpoint".into()
                    },
                });
            }
        }
        let lo = &nodes[0].x;
        let hi = &nodes[last].x;
        for n in &nodes {
            for y in n.y_left.iter().chain(n.y_right.iter()) {
                if y < lo || y > hi {
                    return Err(Error::OutOfDomain {
                        value: format_rational(y),
                        lo: format_rational(lo),
                        hi: format_rational(hi),
                    });
                }
            }
        }
        let fast = nodes
            .iter()
            .map(|n| {
                [
                    rational::to_f64(&n.x),
                    n.y_left.as_ref().map_or(f64::NAN, rational::to_f64),
                    n.y_right.as_ref().map_or(f64::NAN, rational::to_f64),
                ]
            })
            .collect();
        Ok(PwaMap { nodes, fast })
    }

    /// Continuous map through the given `(x, y)` points.
    pub fn continuous(points: Vec<(Rational, Rational)>) -> Result<Self> {
        let last = points.len().saturating_sub(1);
        let nodes = points
            .into_iter()
            .enumerate()
            .map(|(i, (x, y))| {
                Node::new(
                    x,
                    (i > 0).then(|| y.clone()),
                    (i < last).then_some(y),
                )
            })
            .collect();
        PwaMap::new(nodes)
    }

    /// The identity on `[lo, hi]`.
    pub fn identity(lo: Rational, hi: Rational) -> Result<Self> {
        PwaMap::continuous(vec![(lo.clone(), lo), (hi.clone(), hi)])
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn lo(&self) -> &Rational {
        &self.nodes[0].x
    }

    pub fn hi(&self) -> &Rational {
        &self.nodes[self.nodes.len() - 1].x
    }

    pub fn num_segments(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn segment(&self, i: usize) -> Segment<'_> {
        Segment {
            x0: &self.nodes[i].x,
            x1: &self.nodes[i + 1].x,
            y0: self.nodes[i].y_right.as_ref().expect("interior right value"),
            y1: self.nodes[i + 1].y_left.as_ref().expect("interior left value"),
        }
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment<'_>> {
        (0..self.num_segments()).map(|i| self.segment(i))
    }

    pub fn contains(&self, x: &Rational) -> bool {
        self.lo() <= x && x <= self.hi()
    }

    /// Index of the segment used to evaluate `f(x±)`.
    pub fn locate(&self, x: &Rational, side: Side) -> Result<usize> {
        if !self.contains(x) {
            return Err(Error::OutOfDomain {
                value: format_rational(x),
                lo: format_rational(self.lo()),
                hi: format_rational(self.hi()),
            });
        }
        match side {
            Side::Left if x == self.lo() => {
                return Err(Error::UndefinedSide(format!(
                    "left value at the left endpoint {}",
                    format_rational(x)
                )))
            }
            Side::Right if x == self.hi() => {
                return Err(Error::UndefinedSide(format!(
                    "right value at the right endpoint {}",
                    format_rational(x)
                )))
            }
            _ => {}
        }
        let pos = self.nodes.partition_point(|n| &n.x <= x);
        // pos >= 1 since x >= lo
        Ok(match side {
            Side::Right => pos - 1,
            Side::Left => {
                if &self.nodes[pos - 1].x == x {
                    pos - 2
                } else {
                    pos - 1
                }
            }
        })
    }

    /// Exact one-sided value `f(x-)` or `f(x+)`.
    pub fn eval(&self, x: &Rational, side: Side) -> Result<Rational> {
        let i = self.locate(x, side)?;
        Ok(self.segment(i).at(x))
    }

    /// One-sided value, falling back to the only defined side at an endpoint.
    pub fn eval_clamped(&self, x: &Rational, side: Side) -> Rational {
        let side = self.clamp_side(x, side);
        self.eval(x, side).expect("x in domain")
    }

    pub fn clamp_side(&self, x: &Rational, side: Side) -> Side {
        if x == self.lo() {
            Side::Right
        } else if x == self.hi() {
            Side::Left
        } else {
            side
        }
    }

    /// Value of the continuous extension of `f` restricted to `[lo, hi]`, which
    /// must lie inside a single continuity interval of `f`.
    pub fn eval_within(&self, x: &Rational, lo: &Rational, hi: &Rational) -> Rational {
        let side = if x == hi && x != lo {
            Side::Left
        } else {
            Side::Right
        };
        self.eval_clamped(x, side)
    }

    pub fn lo_f64(&self) -> f64 {
        self.fast[0][0]
    }

    pub fn hi_f64(&self) -> f64 {
        self.fast[self.fast.len() - 1][0]
    }

    /// Binary64 evaluation, clamped into the domain.
    pub fn eval_f64(&self, x: f64, side: Side) -> f64 {
        let n = self.fast.len();
        let x = x.clamp(self.lo_f64(), self.hi_f64());
        let pos = self.fast.partition_point(|r| r[0] <= x);
        let i = match side {
            Side::Right => {
                if pos >= n {
                    n - 2
                } else {
                    pos - 1
                }
            }
            Side::Left => {
                if self.fast[pos - 1][0] == x {
                    pos.saturating_sub(2)
                } else {
                    pos - 1
                }
            }
        };
        let [x0, _, y0] = self.fast[i];
        let [x1, y1, _] = self.fast[i + 1];
        let t = (x - x0) / (x1 - x0);
        y0 + t * (y1 - y0)
    }

    pub fn is_continuous(&self) -> bool {
        !self.nodes.iter().any(Node::is_jump)
    }

    pub fn jump_points(&self) -> Vec<Rational> {
        self.nodes
            .iter()
            .filter(|n| n.is_jump())
            .map(|n| n.x.clone())
            .collect()
    }

    pub fn slopes(&self) -> Vec<Rational> {
        self.segments().map(|s| s.slope()).collect()
    }

    pub fn max_abs_slope(&self) -> Rational {
        self.segments()
            .map(|s| s.slope().abs())
            .max()
            .expect("at least one segment")
    }

    /// Laps in left-to-right order. Constant stretches form their own laps; a
    /// monotone lap flanking a constant one is closed at the shared endpoint.
    pub fn laps(&self) -> Vec<Lap> {
        let mut laps: Vec<Lap> = Vec::new();
        for i in 0..self.num_segments() {
            let seg = self.segment(i);
            let dir = seg.direction();
            let joined = i > 0 && !self.nodes[i].is_jump();
            match laps.last_mut() {
                Some(last) if joined && last.direction == dir => {
                    last.hi = seg.x1.clone();
                }
                _ => laps.push(Lap {
                    lo: seg.x0.clone(),
                    hi: seg.x1.clone(),
                    direction: dir,
                }),
            }
        }
        laps
    }

    pub fn lap_endpoints(&self) -> Vec<Rational> {
        let laps = self.laps();
        let mut pts: Vec<Rational> = laps.iter().map(|l| l.lo.clone()).collect();
        pts.push(self.hi().clone());
        pts
    }

    pub fn has_constant_lap(&self) -> bool {
        self.segments().any(|s| s.direction() == Direction::Constant)
    }

    /// Number of laps minus one.
    pub fn modality(&self) -> usize {
        self.laps().len() - 1
    }

    /// Removes interior nodes where the map is continuous and the two adjacent
    /// pieces are collinear.
    pub fn simplify(&self) -> PwaMap {
        let n = self.nodes.len();
        let mut kept: Vec<Node> = vec![self.nodes[0].clone()];
        for j in 1..n - 1 {
            let node = &self.nodes[j];
            if !node.is_jump() {
                let prev = kept.last().expect("non-empty");
                let next = &self.nodes[j + 1];
                let y = node.y_left.as_ref().expect("interior");
                let y_prev = prev.y_right.as_ref().expect("interior");
                let y_next = next.y_left.as_ref().expect("interior");
                let s1 = (y - y_prev) / (&node.x - &prev.x);
                let s2 = (y_next - y) / (&next.x - &node.x);
                if s1 == s2 {
                    continue;
                }
            }
            kept.push(node.clone());
        }
        kept.push(self.nodes[n - 1].clone());
        PwaMap::new(kept).expect("simplification preserves validity")
    }

    /// `self ∘ inner`. At an argument where `inner` is locally constant and its
    /// value is a jump of `self`, the right value of `self` is used (the left
    /// value at the right endpoint).
    pub fn compose(&self, inner: &PwaMap) -> Result<PwaMap> {
        self.compose_limited(inner, usize::MAX)
    }

    /// Number of nodes `self.compose(inner)` has before simplification.
    pub fn compose_size(&self, inner: &PwaMap) -> usize {
        let mut count = 1;
        for seg in inner.segments() {
            count += 1;
            let (ylo, yhi) = match seg.direction() {
                Direction::Constant => continue,
                Direction::Increasing => (seg.y0, seg.y1),
                Direction::Decreasing => (seg.y1, seg.y0),
            };
            let start = self.nodes.partition_point(|n| &n.x <= ylo);
            let end = self.nodes.partition_point(|n| &n.x < yhi);
            count += end.saturating_sub(start);
        }
        count
    }

    /// `compose`, failing with `Budget` before any work when the result would
    /// exceed `node_limit` nodes.
    pub fn compose_limited(&self, inner: &PwaMap, node_limit: usize) -> Result<PwaMap> {
        if self.lo() != inner.lo() || self.hi() != inner.hi() {
            return Err(Error::DomainMismatch);
        }
        if node_limit != usize::MAX && self.compose_size(inner) > node_limit {
            return Err(Error::Budget(format!("composition exceeds {node_limit} nodes")));
        }
        // Values are read off directly: at a cut the outer node's one-sided
        // values apply, at an inner node the inner one-sided limits are fed
        // through `self` with the side carried by the inner direction.
        let outer = |seg: &Segment<'_>, y: &Rational, side: Side| -> Rational {
            let side = seg.direction().carry(side).unwrap_or(Side::Right);
            self.eval_clamped(y, side)
        };
        let mut nodes: Vec<Node> = Vec::with_capacity(inner.nodes.len());
        for i in 0..inner.num_segments() {
            let seg = inner.segment(i);
            let yl = (i > 0).then(|| {
                let prev = inner.segment(i - 1);
                outer(&prev, prev.y1, Side::Left)
            });
            let yr = Some(outer(&seg, seg.y0, Side::Right));
            nodes.push(Node::new(seg.x0.clone(), yl, yr));
            let increasing = match seg.direction() {
                Direction::Constant => continue,
                Direction::Increasing => true,
                Direction::Decreasing => false,
            };
            let (ylo, yhi) = if increasing { (seg.y0, seg.y1) } else { (seg.y1, seg.y0) };
            let start = self.nodes.partition_point(|n| &n.x <= ylo);
            let end = self.nodes.partition_point(|n| &n.x < yhi);
            let mut push = |n: &Node| {
                let (l, r) = if increasing {
                    (&n.y_left, &n.y_right)
                } else {
                    (&n.y_right, &n.y_left)
                };
                nodes.push(Node::new(seg.preimage(&n.x), l.clone(), r.clone()));
            };
            if increasing {
                self.nodes[start..end].iter().for_each(&mut push);
            } else {
                self.nodes[start..end].iter().rev().for_each(&mut push);
            }
        }
        let last = inner.segment(inner.num_segments() - 1);
        nodes.push(Node::new(
            inner.hi().clone(),
            Some(outer(&last, last.y1, Side::Left)),
            None,
        ));
        PwaMap::new(nodes)
    }

    /// `f^k` as an exact map, simplified after every step.
    pub fn iterate(&self, k: usize, node_limit: usize) -> Result<PwaMap> {
        if k == 0 {
            return Err(Error::Precondition("iterate needs k >= 1".into()));
        }
        let mut g = self.clone();
        for _ in 1..k {
            g = self.compose_limited(&g, node_limit.saturating_mul(2))?.simplify();
            if g.nodes.len() > node_limit {
                return Err(Error::Budget(format!(
                    "iterate exceeded {node_limit} nodes"
                )));
            }
        }
        Ok(g)
    }

    /// Lap count `c_n` of `f^n`.
    pub fn lap_count(&self, n: usize, node_limit: usize) -> Result<usize> {
        Ok(self.iterate(n, node_limit)?.laps().len())
    }

    /// Lap counts `c_1..c_n`, stopping early (with the counts so far) when the
    /// node budget is exhausted.
    pub fn lap_counts(&self, n: usize, node_limit: usize) -> (Vec<usize>, bool) {
        let mut counts = Vec::with_capacity(n);
        let mut g = self.clone();
        for k in 1..=n {
            if k > 1 {
                match self.compose_limited(&g, node_limit.saturating_mul(2)) {
                    Ok(h) => g = h.simplify(),
                    Err(_) => return (counts, true),
                }
                if g.nodes.len() > node_limit {
                    return (counts, true);
                }
            }
            counts.push(g.laps().len());
        }
        (counts, false)
    }

    /// `sup |f - g|` over the common domain, using one-sided values at nodes.
    pub fn sup_dist(&self, other: &PwaMap) -> Result<Rational> {
        if self.lo() != other.lo() || self.hi() != other.hi() {
            return Err(Error::DomainMismatch);
        }
        let xs = merge_sorted(
            self.nodes.iter().map(|n| &n.x),
            other.nodes.iter().map(|n| &n.x),
        );
        let mut best = Rational::zero();
        for w in xs.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let d0 = (self.eval(a, Side::Right)? - other.eval(a, Side::Right)?).abs();
            let d1 = (self.eval(b, Side::Left)? - other.eval(b, Side::Left)?).abs();
            best = best.max(d0).max(d1);
        }
        Ok(best)
    }

    /// One-sided orbit `x_0 = x, x_{i+1} = f(x_i ±)` where the side is carried
    /// through the local direction of `f`; returns `x_0..x_k`.
    pub fn orbit_one_sided(&self, x: &Rational, side: Side, k: usize) -> Vec<Rational> {
        let mut out = Vec::with_capacity(k + 1);
        let mut cur = x.clone();
        let mut side = side;
        out.push(cur.clone());
        for _ in 0..k {
            let s = self.clamp_side(&cur, side);
            let i = self.locate(&cur, s).expect("orbit stays in domain");
            let seg = self.segment(i);
            let next = seg.at(&cur);
            side = seg.direction().carry(s).unwrap_or(Side::Right);
            cur = next;
            out.push(cur.clone());
        }
        out
    }
}

/// Sorted union without duplicates.
pub(crate) fn merge_sorted<'a>(
    a: impl Iterator<Item = &'a Rational>,
    b: impl Iterator<Item = &'a Rational>,
) -> Vec<Rational> {
    let mut v: Vec<Rational> = a.chain(b).cloned().collect();
    v.sort();
    v.dedup();
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rational::{int, ratio};

    #[test]
    fn eval_examples() {
        let tent = fixtures::tent();
        assert_eq!(tent.eval(&ratio(1, 4), Side::Right).unwrap(), ratio(1, 2));
        assert_eq!(tent.eval(&ratio(1, 2), Side::Left).unwrap(), int(1));
        assert_eq!(tent.eval(&ratio(1, 2), Side::Right).unwrap(), int(1));
        let dbl = fixtures::doubling();
        assert_eq!(dbl.eval(&ratio(1, 2), Side::Left).unwrap(), int(1));
        assert_eq!(dbl.eval(&ratio(1, 2), Side::Right).unwrap(), int(0));
    }

    #[test]
    fn eval_errors() {
        let tent = fixtures::tent();
        assert!(matches!(
            tent.eval(&int(2), Side::Left),
            Err(Error::OutOfDomain { .. })
        ));
        assert!(matches!(
            tent.eval(&int(0), Side::Left),
            Err(Error::UndefinedSide(_))
        ));
        assert!(matches!(
            tent.eval(&int(1), Side::Right),
            Err(Error::UndefinedSide(_))
        ));
    }

    #[test]
    fn constructor_rejects_bad_maps() {
        let n = |x: Rational, l: Option<i64>, r: Option<i64>| Node::new(x, l.map(int), r.map(int));
        assert_eq!(
            PwaMap::new(vec![n(int(0), None, Some(0))]),
            Err(Error::TooFewNodes(1))
        );
        assert!(matches!(
            PwaMap::new(vec![n(int(0), None, Some(0)), n(int(0), Some(1), None)]),
            Err(Error::NonIncreasing { index: 1 })
        ));
        assert!(matches!(
            PwaMap::new(vec![n(int(0), None, Some(0)), n(int(1), Some(2), None)]),
            Err(Error::OutOfDomain { .. })
        ));
        assert!(matches!(
            PwaMap::new(vec![n(int(0), Some(0), Some(0)), n(int(1), Some(1), None)]),
            Err(Error::BadNode { index: 0, .. })
        ));
    }

    fn lap(lo: Rational, hi: Rational, direction: Direction) -> Lap {
        Lap { lo, hi, direction }
    }

    #[test]
    fn laps_examples() {
        use Direction::*;
        assert_eq!(
            fixtures::tent().laps(),
            vec![
                lap(int(0), ratio(1, 2), Increasing),
                lap(ratio(1, 2), int(1), Decreasing)
            ]
        );
        assert_eq!(
            fixtures::doubling().laps(),
            vec![
                lap(int(0), ratio(1, 2), Increasing),
                lap(ratio(1, 2), int(1), Increasing)
            ]
        );
        assert_eq!(
            fixtures::trapezoid().laps(),
            vec![
                lap(int(0), ratio(2, 5), Increasing),
                lap(ratio(2, 5), ratio(3, 5), Constant),
                lap(ratio(3, 5), int(1), Decreasing)
            ]
        );
    }

    #[test]
    fn laps_merge_collinear_and_bent_pieces() {
        // increasing with a slope change at 1/4, continuous
        let f = PwaMap::continuous(vec![
            (int(0), int(0)),
            (ratio(1, 4), ratio(1, 2)),
            (int(1), int(1)),
        ])
        .unwrap();
        assert_eq!(f.laps().len(), 1);
        assert_eq!(f.simplify().nodes().len(), 3);
        let g = PwaMap::continuous(vec![
            (int(0), int(0)),
            (ratio(1, 4), ratio(1, 4)),
            (int(1), int(1)),
        ])
        .unwrap();
        assert_eq!(g.simplify().nodes().len(), 2);
    }

    /// Counts sign changes of consecutive differences on a fine rational grid.
    fn grid_turning_points(f: &PwaMap, k: usize, grid: i64) -> Vec<Rational> {
        let eval_k = |x: &Rational| {
            let mut y = x.clone();
            for _ in 0..k {
                y = f.eval_clamped(&y, Side::Right);
            }
            y
        };
        let xs: Vec<Rational> = (0..=grid).map(|i| ratio(i, grid)).collect();
        let ys: Vec<Rational> = xs.iter().map(eval_k).collect();
        let mut turns = Vec::new();
        for i in 1..grid as usize {
            let a = &ys[i] - &ys[i - 1];
            let b = &ys[i + 1] - &ys[i];
            if (a.is_positive() && b.is_negative()) || (a.is_negative() && b.is_positive()) {
                turns.push(xs[i].clone());
            }
        }
        turns
    }

    #[test]
    fn iterate_tent_twice() {
        let tent = fixtures::tent();
        let t2 = tent.iterate(2, DEFAULT_NODE_LIMIT).unwrap();
        assert_eq!(t2.laps().len(), 4);
        let turns: Vec<Rational> = t2.laps()[1..].iter().map(|l| l.lo.clone()).collect();
        assert_eq!(turns, grid_turning_points(&tent, 2, 64));
        assert_eq!(turns, vec![ratio(1, 4), ratio(1, 2), ratio(3, 4)]);
    }

    #[test]
    fn iterate_once_is_identity_operation() {
        let g = fixtures::golden();
        assert_eq!(g.iterate(1, DEFAULT_NODE_LIMIT).unwrap(), g);
        assert!(g.iterate(0, DEFAULT_NODE_LIMIT).is_err());
    }

    #[test]
    fn iterate_respects_node_limit() {
        let tent = fixtures::tent();
        assert!(matches!(tent.iterate(12, 100), Err(Error::Budget(_))));
    }

    #[test]
    fn golden_lap_growth_is_fibonacci() {
        let g = fixtures::golden();
        assert_eq!(g.lap_count(2, DEFAULT_NODE_LIMIT).unwrap(), 3);
        assert_eq!(g.lap_count(3, DEFAULT_NODE_LIMIT).unwrap(), 5);
        let (counts, truncated) = g.lap_counts(10, DEFAULT_NODE_LIMIT);
        assert!(!truncated);
        assert_eq!(counts, vec![2, 3, 5, 8, 13, 21, 34, 55, 89, 144]);
    }

    #[test]
    fn lap_count_examples() {
        assert_eq!(
            fixtures::tent().lap_count(10, DEFAULT_NODE_LIMIT).unwrap(),
            1024
        );
        assert_eq!(
            fixtures::identity().lap_count(7, DEFAULT_NODE_LIMIT).unwrap(),
            1
        );
    }

    #[test]
    fn doubling_iterate_keeps_jumps() {
        let d2 = fixtures::doubling().iterate(2, DEFAULT_NODE_LIMIT).unwrap();
        assert_eq!(d2.laps().len(), 4);
        assert_eq!(d2.jump_points().len(), 3);
        assert_eq!(d2.eval(&ratio(1, 4), Side::Left).unwrap(), int(1));
        assert_eq!(d2.eval(&ratio(1, 4), Side::Right).unwrap(), int(0));
    }

    #[test]
    fn sup_dist_examples() {
        let tent = fixtures::tent();
        assert_eq!(tent.sup_dist(&tent).unwrap(), int(0));
        assert_eq!(tent.sup_dist(&fixtures::doubling()).unwrap(), int(1));
        let half = PwaMap::continuous(vec![(int(0), ratio(1, 2)), (int(1), ratio(1, 2))]).unwrap();
        assert_eq!(tent.sup_dist(&half).unwrap(), ratio(1, 2));
    }

    #[test]
    fn sup_dist_matches_grid_maximum() {
        // oracle: dense grid including the node x = 1/2 from both sides
        let tent = fixtures::tent();
        let dbl = fixtures::doubling();
        let mut best = Rational::zero();
        for i in 0..=1000 {
            let x = ratio(i, 1000);
            for side in [Side::Left, Side::Right] {
                if (i == 0 && side == Side::Left) || (i == 1000 && side == Side::Right) {
                    continue;
                }
                let d = (tent.eval(&x, side).unwrap() - dbl.eval(&x, side).unwrap()).abs();
                best = best.max(d);
            }
        }
        assert_eq!(best, int(1));
    }

    #[test]
    fn sup_dist_domain_mismatch() {
        let a = fixtures::tent();
        let b = PwaMap::identity(int(0), int(2)).unwrap();
        assert_eq!(a.sup_dist(&b), Err(Error::DomainMismatch));
    }

    #[test]
    fn one_sided_orbit_through_a_jump() {
        let d = fixtures::doubling();
        let orbit = d.orbit_one_sided(&ratio(1, 4), Side::Right, 2);
        assert_eq!(orbit, vec![ratio(1, 4), ratio(1, 2), int(0)]);
        let orbit = d.orbit_one_sided(&ratio(1, 4), Side::Left, 2);
        assert_eq!(orbit, vec![ratio(1, 4), ratio(1, 2), int(1)]);
    }

    #[test]
    fn f64_evaluation_agrees() {
        let g = fixtures::golden();
        for i in 0..=20 {
            let x = ratio(i, 20);
            let exact = rational::to_f64(&g.eval_clamped(&x, Side::Right));
            assert!((g.eval_f64(rational::to_f64(&x), Side::Right) - exact).abs() < 1e-15);
        }
        let d = fixtures::doubling();
        assert_eq!(d.eval_f64(0.5, Side::Left), 1.0);
        assert_eq!(d.eval_f64(0.5, Side::Right), 0.0);
    }
}
