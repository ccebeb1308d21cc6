//! The refinements `A_n` and `P_n` of a Markov partition.

use super::MarkovStructure;
use crate::error::{Error, Result};
use crate::pwmap::{Direction, PwaMap};
use crate::rational::Rational;

pub const DEFAULT_MAX_CELLS: usize = 1 << 20;

/// `A_n` given by its sorted endpoint set `P_n`; cell `i` is
/// `[points[i], points[i+1]]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Refinement {
    pub depth: usize,
    pub points: Vec<Rational>,
    /// Index in `A` of `f^n(cell)`, or `None` when that image is a point.
    pub image: Vec<Option<usize>>,
}

impl Refinement {
    pub fn base(s: &MarkovStructure) -> Self {
        Refinement {
            depth: 0,
            points: s.points.clone(),
            image: (0..s.num_cells()).map(Some).collect(),
        }
    }

    pub fn num_cells(&self) -> usize {
        self.image.len()
    }

    pub fn cell(&self, i: usize) -> (&Rational, &Rational) {
        (&self.points[i], &self.points[i + 1])
    }

    /// Cells whose `f^n`-image is not a point.
    pub fn num_live_cells(&self) -> usize {
        self.image.iter().filter(|i| i.is_some()).count()
    }

    /// `A_{n+1}`: pull `A_n` back through every branch of `f` on `A`.
    pub fn next(&self, s: &MarkovStructure, max_cells: usize) -> Result<Refinement> {
        let f = &s.map;
        let mut points = Vec::with_capacity(self.points.len() * 2);
        let mut image = Vec::with_capacity(self.image.len() * 2);
        for cell in &s.cells {
            points.push(cell.lo.clone());
            if cell.direction == Direction::Constant || cell.covers.is_none() {
                image.push(None);
                continue;
            }
            let (a, b) = if cell.y_lo < cell.y_hi {
                (&cell.y_lo, &cell.y_hi)
            } else {
                (&cell.y_hi, &cell.y_lo)
            };
            let j0 = self.points.binary_search(a).expect("P is contained in P_n");
            let j1 = self.points.binary_search(b).expect("P is contained in P_n");
            let inv = BranchInverse::new(f, &cell.lo, &cell.hi, cell.direction);
            match cell.direction {
                Direction::Increasing => {
                    for j in j0 + 1..j1 {
                        points.push(inv.at(&self.points[j]));
                    }
                    image.extend_from_slice(&self.image[j0..j1]);
                }
                Direction::Decreasing => {
                    for j in (j0 + 1..j1).rev() {
                        points.push(inv.at(&self.points[j]));
                    }
                    image.extend(self.image[j0..j1].iter().rev().cloned());
                }
                Direction::Constant => unreachable!(),
            }
            if image.len() > max_cells {
                return Err(Error::Budget(format!(
                    "refinement exceeds {max_cells} cells at depth {}",
                    self.depth + 1
                )));
            }
        }
        points.push(f.hi().clone());
        Ok(Refinement {
            depth: self.depth + 1,
            points,
            image,
        })
    }
}

/// Inverse of `f` restricted to a monotone continuous cell.
struct BranchInverse {
    /// Per segment: upper end of the image range, `x0`, `y0`, `dx/dy`.
    pieces: Vec<(Rational, Rational, Rational, Rational)>,
    increasing: bool,
}

impl BranchInverse {
    fn new(f: &PwaMap, lo: &Rational, hi: &Rational, dir: Direction) -> Self {
        let start = f
            .locate(lo, crate::pwmap::Side::Right)
            .expect("cell inside domain");
        let end = f
            .locate(hi, crate::pwmap::Side::Left)
            .expect("cell inside domain");
        let pieces = (start..=end)
            .map(|i| {
                let s = f.segment(i);
                (
                    s.y1.clone(),
                    s.x0.clone(),
                    s.y0.clone(),
                    (s.x1 - s.x0) / (s.y1 - s.y0),
                )
            })
            .collect();
        BranchInverse {
            pieces,
            increasing: dir == Direction::Increasing,
        }
    }

    fn at(&self, y: &Rational) -> Rational {
        let k = if self.pieces.len() == 1 {
            0
        } else if self.increasing {
            self.pieces.partition_point(|p| &p.0 < y)
        } else {
            self.pieces.partition_point(|p| &p.0 > y)
        };
        let (_, x0, y0, inv) = &self.pieces[k.min(self.pieces.len() - 1)];
        x0 + (y - y0) * inv
    }
}

/// `A_n` for the given structure.
pub fn refine(s: &MarkovStructure, n: usize, max_cells: usize) -> Result<Refinement> {
    let mut r = Refinement::base(s);
    for _ in 0..n {
        r = r.next(s, max_cells)?;
    }
    Ok(r)
}
