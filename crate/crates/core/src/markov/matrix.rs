//! Sparse 0/1 transition matrices.

use crate::error::{Error, Result};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use std::collections::VecDeque;

/// Square 0/1 matrix stored as sorted column lists per row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionMatrix {
    rows: Vec<Vec<usize>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Mixing {
    pub irreducible: bool,
    pub primitive: bool,
}

impl TransitionMatrix {
    /// Builds from per-row column lists; columns are sorted and deduplicated.
    pub fn from_rows(mut rows: Vec<Vec<usize>>) -> Result<Self> {
        let n = rows.len();
        for row in rows.iter_mut() {
            row.sort_unstable();
            row.dedup();
            if row.last().is_some_and(|&j| j >= n) {
                return Err(Error::Precondition("column index out of range".into()));
            }
        }
        Ok(TransitionMatrix { rows })
    }

    pub fn from_dense(dense: &[Vec<u8>]) -> Result<Self> {
        let n = dense.len();
        let mut rows = Vec::with_capacity(n);
        for r in dense {
            if r.len() != n {
                return Err(Error::Precondition("matrix is not square".into()));
            }
            let mut cols = Vec::new();
            for (j, &e) in r.iter().enumerate() {
                match e {
                    0 => {}
                    1 => cols.push(j),
                    _ => return Err(Error::Precondition("entries must be 0 or 1".into())),
                }
            }
            rows.push(cols);
        }
        Ok(TransitionMatrix { rows })
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i].binary_search(&j).is_ok()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        let n = self.size();
        self.rows
            .iter()
            .map(|r| {
                let mut d = vec![0u8; n];
                for &j in r {
                    d[j] = 1;
                }
                d
            })
            .collect()
    }

    /// `M x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&j| x[j]).sum())
            .collect()
    }

    /// Sum of all entries of `M^k`, saturating at `u128::MAX`.
    pub fn power_entry_sum(&self, k: usize) -> u128 {
        let mut x = vec![1u128; self.size()];
        for _ in 0..k {
            x = self
                .rows
                .iter()
                .map(|r| r.iter().fold(0u128, |acc, &j| acc.saturating_add(x[j])))
                .collect();
        }
        x.iter().fold(0u128, |acc, &v| acc.saturating_add(v))
    }

    fn digraph(&self) -> DiGraph<(), ()> {
        let mut g = DiGraph::with_capacity(self.size(), self.nnz());
        let idx: Vec<_> = (0..self.size()).map(|_| g.add_node(())).collect();
        for (i, r) in self.rows.iter().enumerate() {
            for &j in r {
                g.add_edge(idx[i], idx[j], ());
            }
        }
        g
    }

    /// Strongly connected components, each sorted, listed so that every
    /// component comes after all components it has edges into.
    pub fn components(&self) -> Vec<Vec<usize>> {
        tarjan_scc(&self.digraph())
            .into_iter()
            .map(|c| {
                let mut c: Vec<usize> = c.into_iter().map(|n| n.index()).collect();
                c.sort_unstable();
                c
            })
            .collect()
    }

    /// Irreducibility and primitivity of the directed graph of `M`.
    pub fn mixing(&self) -> Mixing {
        let n = self.size();
        if n == 0 {
            return Mixing {
                irreducible: false,
                primitive: false,
            };
        }
        let irreducible = self.components().len() == 1 && (n > 1 || !self.rows[0].is_empty());
        if !irreducible {
            return Mixing {
                irreducible,
                primitive: false,
            };
        }
        // period = gcd over edges (u,w) of level(u) + 1 - level(w)
        let mut level = vec![usize::MAX; n];
        level[0] = 0;
        let mut queue = VecDeque::from([0usize]);
        while let Some(u) = queue.pop_front() {
            for &w in &self.rows[u] {
                if level[w] == usize::MAX {
                    level[w] = level[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        let mut g = 0i64;
        for u in 0..n {
            for &w in &self.rows[u] {
                let d = (level[u] as i64 + 1 - level[w] as i64).abs();
                g = gcd(g, d);
            }
        }
        Mixing {
            irreducible,
            primitive: g == 1,
        }
    }

    /// Text form: `matrix <n>` followed by `n` rows of space-separated digits.
    pub fn to_text(&self) -> String {
        let mut out = format!("matrix {}\n", self.size());
        for r in self.to_dense() {
            let line: Vec<String> = r.iter().map(u8::to_string).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let perr = |line: usize, msg: &str| Error::Parse {
            line,
            msg: msg.to_string(),
        };
        let (_, head) = lines.next().ok_or_else(|| perr(1, "empty input"))?;
        let n: usize = head
            .strip_prefix("matrix ")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| perr(1, "expected 'matrix <n>'"))?;
        let mut dense = Vec::with_capacity(n);
        for _ in 0..n {
            let (i, line) = lines.next().ok_or_else(|| perr(n + 1, "missing row"))?;
            let row: Option<Vec<u8>> = line
                .split(' ')
                .map(|t| match t {
                    "0" => Some(0),
                    "1" => Some(1),
                    _ => None,
                })
                .collect();
            let row = row.ok_or_else(|| perr(i + 1, "entries must be 0 or 1"))?;
            if row.len() != n {
                return Err(perr(i + 1, "wrong row length"));
            }
            dense.push(row);
        }
        if lines.any(|(_, l)| !l.trim().is_empty()) {
            return Err(perr(n + 2, "trailing content"));
        }
        TransitionMatrix::from_dense(&dense)
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
