//! Markov partitions: validation, closure search, transition matrices,
//! Perron data and the refinements `A_n`, `P_n`.

mod matrix;
mod perron;
mod refine;

pub use matrix::{Mixing, TransitionMatrix};
pub use perron::{perron, PerronMethod, PerronPair, DEFAULT_TOL};
pub use refine::{refine, Refinement, DEFAULT_MAX_CELLS};

use crate::error::{Error, Result};
use crate::pwmap::{Direction, PwaMap, Side};
use crate::rational::{format_rational, Rational};
use std::collections::BTreeSet;
use std::fmt;

/// Why a point set fails to be Markov.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    MissingEndpoint(Rational),
    ImageOutside {
        x: Rational,
        side: Side,
        image: Rational,
    },
    NotMonotone {
        lo: Rational,
        hi: Rational,
    },
    Discontinuous {
        lo: Rational,
        hi: Rational,
        at: Rational,
    },
    NotSorted,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingEndpoint(x) => write!(f, "endpoint {} missing", format_rational(x)),
            Violation::ImageOutside { x, side, image } => write!(
                f,
                "f({}{}) = {} not in P",
                format_rational(x),
                if *side == Side::Left { "-" } else { "+" },
                format_rational(image)
            ),
            Violation::NotMonotone { lo, hi } => write!(
                f,
                "f not monotone on [{}, {}]",
                format_rational(lo),
                format_rational(hi)
            ),
            Violation::Discontinuous { lo, hi, at } => write!(
                f,
                "f jumps at {} inside [{}, {}]",
                format_rational(at),
                format_rational(lo),
                format_rational(hi)
            ),
            Violation::NotSorted => write!(f, "points not strictly increasing"),
        }
    }
}

/// Direction of `f` on `[lo, hi]` if it is continuous there and strictly
/// monotone or constant.
pub fn cell_direction(
    f: &PwaMap,
    lo: &Rational,
    hi: &Rational,
) -> std::result::Result<Direction, Violation> {
    let start = f.locate(lo, Side::Right).expect("cell inside domain");
    let end = f.locate(hi, Side::Left).expect("cell inside domain");
    let mut dir = None;
    for i in start..=end {
        if i > start && f.nodes()[i].is_jump() {
            return Err(Violation::Discontinuous {
                lo: lo.clone(),
                hi: hi.clone(),
                at: f.nodes()[i].x.clone(),
            });
        }
        let d = f.segment(i).direction();
        match dir {
            None => dir = Some(d),
            Some(prev) if prev != d => {
                return Err(Violation::NotMonotone {
                    lo: lo.clone(),
                    hi: hi.clone(),
                })
            }
            _ => {}
        }
    }
    Ok(dir.expect("non-empty cell"))
}

/// Checks that `points` is a Markov set for `f`; returns the first violation.
pub fn is_markov(f: &PwaMap, points: &[Rational]) -> std::result::Result<(), Violation> {
    if points.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Violation::NotSorted);
    }
    for end in [f.lo(), f.hi()] {
        if points.binary_search(end).is_err() {
            return Err(Violation::MissingEndpoint(end.clone()));
        }
    }
    for x in points {
        for side in [Side::Left, Side::Right] {
            if let Ok(y) = f.eval(x, side) {
                if points.binary_search(&y).is_err() {
                    return Err(Violation::ImageOutside {
                        x: x.clone(),
                        side,
                        image: y,
                    });
                }
            }
        }
    }
    for w in points.windows(2) {
        cell_direction(f, &w[0], &w[1])?;
    }
    Ok(())
}

/// Per-cell image data of a Markov partition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellInfo {
    pub lo: Rational,
    pub hi: Rational,
    pub direction: Direction,
    /// `f(lo+)` and `f(hi-)`.
    pub y_lo: Rational,
    pub y_hi: Rational,
    /// Cells covered by `f(cell)` as an inclusive index range; `None` when
    /// the cell is mapped to a point.
    pub covers: Option<(usize, usize)>,
}

/// `m_AB = 1` iff `f(A) ⊇ B`, for monotone-or-constant cells given by
/// consecutive `points`.
pub fn transition_matrix(f: &PwaMap, points: &[Rational]) -> Result<TransitionMatrix> {
    let cells = cell_infos(f, points)?;
    TransitionMatrix::from_rows(cells.iter().map(cover_row).collect())
}

fn cover_row(c: &CellInfo) -> Vec<usize> {
    match c.covers {
        Some((a, b)) => (a..=b).collect(),
        None => Vec::new(),
    }
}

fn cell_infos(f: &PwaMap, points: &[Rational]) -> Result<Vec<CellInfo>> {
    let mut out = Vec::with_capacity(points.len().saturating_sub(1));
    for w in points.windows(2) {
        let (lo, hi) = (&w[0], &w[1]);
        let direction = cell_direction(f, lo, hi)
            .map_err(|v| Error::Precondition(format!("not a Markov cell: {v}")))?;
        let y_lo = f.eval(lo, Side::Right)?;
        let y_hi = f.eval(hi, Side::Left)?;
        let covers = if direction == Direction::Constant {
            None
        } else {
            let (a, b) = if y_lo < y_hi { (&y_lo, &y_hi) } else { (&y_hi, &y_lo) };
            // first cell starting at or after a, last cell ending at or before b
            let first = points.partition_point(|p| p < a);
            let last_end = points.partition_point(|p| p <= b);
            if last_end < first + 2 {
                None
            } else {
                Some((first, last_end - 2))
            }
        };
        out.push(CellInfo {
            lo: lo.clone(),
            hi: hi.clone(),
            direction,
            y_lo,
            y_hi,
            covers,
        });
    }
    Ok(out)
}

/// A validated Markov partition with its Perron data.
#[derive(Clone, Debug)]
pub struct MarkovStructure {
    pub map: PwaMap,
    pub points: Vec<Rational>,
    pub cells: Vec<CellInfo>,
    pub matrix: TransitionMatrix,
    pub perron: PerronPair,
}

impl MarkovStructure {
    pub fn new(map: PwaMap, points: Vec<Rational>, tol: f64) -> Result<Self> {
        is_markov(&map, &points)
            .map_err(|v| Error::Precondition(format!("not a Markov set: {v}")))?;
        let cells = cell_infos(&map, &points)?;
        let matrix = TransitionMatrix::from_rows(cells.iter().map(cover_row).collect())?;
        let perron = perron(&matrix, tol)?;
        Ok(MarkovStructure {
            map,
            points,
            cells,
            matrix,
            perron,
        })
    }

    pub fn beta(&self) -> f64 {
        self.perron.beta
    }

    pub fn v(&self) -> &[f64] {
        &self.perron.v
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    /// Index of the cell containing `x`, preferring the cell to the right at a
    /// shared endpoint (the left one at the right end of the domain).
    pub fn cell_of(&self, x: &Rational) -> usize {
        let pos = self.points.partition_point(|p| p <= x);
        pos.clamp(1, self.cells.len()) - 1
    }

    /// `log beta`.
    pub fn entropy(&self) -> f64 {
        self.perron.beta.max(1.0).ln()
    }
}

/// Closes the lap endpoints of `f` under exact one-sided images. Fails with a
/// budget error when more than `max_points` points are needed.
pub fn markov_closure(f: &PwaMap, max_points: usize, tol: f64) -> Result<MarkovStructure> {
    let mut set: BTreeSet<Rational> = f.lap_endpoints().into_iter().collect();
    // jumps inside a lap cannot occur, but nodes of constant pieces matter too
    let mut queue: Vec<Rational> = set.iter().cloned().collect();
    while let Some(x) = queue.pop() {
        for side in [Side::Left, Side::Right] {
            if let Ok(y) = f.eval(&x, side) {
                if set.insert(y.clone()) {
                    if set.len() > max_points {
                        return Err(Error::Budget(format!(
                            "no Markov set within {max_points} points"
                        )));
                    }
                    queue.push(y);
                }
            }
        }
    }
    MarkovStructure::new(f.clone(), set.into_iter().collect(), tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rational::{int, ratio};

    #[test]
    fn is_markov_examples() {
        let tent = fixtures::tent();
        assert!(is_markov(&tent, &[int(0), ratio(1, 2), int(1)]).is_ok());
        assert_eq!(
            is_markov(&tent, &[int(0), ratio(1, 3), int(1)]),
            Err(Violation::ImageOutside {
                x: ratio(1, 3),
                side: Side::Left,
                image: ratio(2, 3)
            })
        );
        assert!(is_markov(&fixtures::golden(), &[int(0), ratio(1, 2), int(1)]).is_ok());
        // P = {0, 1}: images are fine but the cell is not monotone
        assert!(matches!(
            is_markov(&tent, &[int(0), int(1)]),
            Err(Violation::NotMonotone { .. })
        ));
        assert!(matches!(
            is_markov(&tent, &[ratio(1, 2), int(1)]),
            Err(Violation::MissingEndpoint(_))
        ));
    }

    #[test]
    fn doubling_is_markov_through_its_jump() {
        let d = fixtures::doubling();
        assert!(is_markov(&d, &[int(0), ratio(1, 2), int(1)]).is_ok());
        assert!(matches!(
            is_markov(&d, &[int(0), ratio(1, 4), int(1)]),
            Err(Violation::ImageOutside { .. })
        ));
    }

    #[test]
    fn transition_matrix_examples() {
        let half = [int(0), ratio(1, 2), int(1)];
        assert_eq!(
            transition_matrix(&fixtures::tent(), &half).unwrap().to_dense(),
            vec![vec![1, 1], vec![1, 1]]
        );
        assert_eq!(
            transition_matrix(&fixtures::golden(), &half)
                .unwrap()
                .to_dense(),
            vec![vec![0, 1], vec![1, 1]]
        );
        let trap = [int(0), ratio(2, 5), ratio(3, 5), int(1)];
        // the trapezoid set is not invariant, but the matrix is still defined
        let m = transition_matrix(&fixtures::trapezoid(), &trap).unwrap();
        assert_eq!(m.row(1), &[] as &[usize]);
    }

    #[test]
    fn closure_examples() {
        let s = markov_closure(&fixtures::tent(), 100, DEFAULT_TOL).unwrap();
        assert_eq!(s.points, vec![int(0), ratio(1, 2), int(1)]);
        let s = markov_closure(&fixtures::skew_tent(), 100, DEFAULT_TOL).unwrap();
        assert_eq!(s.points, vec![int(0), ratio(5, 12), int(1)]);
        assert!(matches!(
            markov_closure(&fixtures::tent_three_halves(), 50, DEFAULT_TOL),
            Err(Error::Budget(_))
        ));
    }

    #[test]
    fn closure_of_flat_top_tent() {
        let s = markov_closure(&fixtures::flat_top_tent(), 100, DEFAULT_TOL).unwrap();
        assert_eq!(s.points, vec![int(0), ratio(1, 3), ratio(2, 3), int(1)]);
        assert_eq!(
            s.matrix.to_dense(),
            vec![vec![1, 1, 1], vec![0, 0, 0], vec![1, 1, 1]]
        );
        assert!((s.beta() - 2.0).abs() < 1e-12);
        assert!(s.v()[1].abs() < 1e-15);
    }

    #[test]
    fn trapezoid_closure_has_unit_spectral_radius() {
        let s = markov_closure(&fixtures::trapezoid(), 100, DEFAULT_TOL).unwrap();
        assert!((s.beta() - 1.0).abs() < 1e-9);
        assert!(s.perron.warning.is_some());
    }

    #[test]
    fn cell_lookup() {
        let s = markov_closure(&fixtures::golden(), 100, DEFAULT_TOL).unwrap();
        assert_eq!(s.cell_of(&int(0)), 0);
        assert_eq!(s.cell_of(&ratio(1, 2)), 1);
        assert_eq!(s.cell_of(&int(1)), 1);
    }
}
