//! Perron eigenpair of a nonnegative 0/1 matrix.

use super::matrix::TransitionMatrix;
use crate::error::{Error, Result};

/// Default relative tolerance for the eigen-residual.
pub const DEFAULT_TOL: f64 = 1e-12;

const POWER_ITERS: usize = 20_000;
const CLASS_ITERS: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PerronMethod {
    Power,
    Components,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerronPair {
    pub beta: f64,
    /// Nonnegative, summing to one.
    pub v: Vec<f64>,
    pub method: PerronMethod,
    pub warning: Option<String>,
}

impl PerronPair {
    pub fn residual(&self, m: &TransitionMatrix) -> f64 {
        m.mul_vec(&self.v)
            .iter()
            .zip(&self.v)
            .map(|(mv, v)| (mv - self.beta * v).abs())
            .fold(0.0, f64::max)
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        for x in v.iter_mut() {
            *x /= s;
        }
    }
    s
}

fn residual(m: &TransitionMatrix, v: &[f64], beta: f64) -> f64 {
    m.mul_vec(v)
        .iter()
        .zip(v)
        .map(|(mv, x)| (mv - beta * x).abs())
        .fold(0.0, f64::max)
}

/// Power iteration on `M + I` restricted to `idx`; returns `(rho, vector)`.
fn power(
    m: &TransitionMatrix,
    idx: &[usize],
    iters: usize,
    tol: f64,
) -> (f64, Vec<f64>, bool) {
    let n = idx.len();
    let mut local = vec![usize::MAX; m.size()];
    for (k, &i) in idx.iter().enumerate() {
        local[i] = k;
    }
    let mut v = vec![1.0 / n as f64; n];
    let mut beta = 0.0;
    for it in 0..iters {
        let mut w = vec![0.0; n];
        for (k, &i) in idx.iter().enumerate() {
            let mut s = v[k];
            for &j in m.row(i) {
                if local[j] != usize::MAX {
                    s += v[local[j]];
                }
            }
            w[k] = s;
        }
        let s = normalize(&mut w);
        let lambda = s - 1.0;
        let delta = w
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = w;
        beta = lambda;
        // |(M+I)v - (lambda+1)v| = |Mv - lambda v|; the step size bounds it
        if it > 2 && delta * s <= tol * lambda.max(1.0) * 0.5 {
            return polish(m, idx, &local, v, beta, delta, it.max(50));
        }
    }
    (beta.max(0.0), v, false)
}

/// Keeps iterating while the step still shrinks, down to rounding level, so
/// that errors do not pile up across many refinement levels.
fn polish(
    m: &TransitionMatrix,
    idx: &[usize],
    local: &[usize],
    mut v: Vec<f64>,
    mut beta: f64,
    mut delta: f64,
    budget: usize,
) -> (f64, Vec<f64>, bool) {
    let n = idx.len();
    let mut stalled = 0;
    for _ in 0..budget {
        let mut w = vec![0.0; n];
        for (k, &i) in idx.iter().enumerate() {
            let mut s = v[k];
            for &j in m.row(i) {
                if local[j] != usize::MAX {
                    s += v[local[j]];
                }
            }
            w[k] = s;
        }
        let s = normalize(&mut w);
        let d = w
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if d == 0.0 {
            return (s - 1.0, w, true);
        }
        if d < delta {
            v = w;
            beta = s - 1.0;
            delta = d;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled > 5 {
                break;
            }
        }
    }
    (beta.max(0.0), v, true)
}

/// Perron root and a nonnegative eigenvector normalized to sum one.
///
/// Power iteration on `M + I` is tried first. If it stalls, the matrix is split
/// into strongly connected classes: a class attaining the spectral radius with
/// no other such class upstream carries the Perron vector, classes it cannot
/// reach get zero, and upstream classes are solved by a Neumann series.
pub fn perron(m: &TransitionMatrix, tol: f64) -> Result<PerronPair> {
    let n = m.size();
    if n == 0 {
        return Err(Error::Precondition("empty matrix".into()));
    }
    let all: Vec<usize> = (0..n).collect();
    let (beta, v, converged) = power(m, &all, POWER_ITERS, tol);
    let mut pair = if converged && residual(m, &v, beta) <= tol * beta.max(1.0) {
        PerronPair {
            beta,
            v,
            method: PerronMethod::Power,
            warning: None,
        }
    } else {
        by_components(m, tol)?
    };
    if pair.beta > tol {
        // states whose paths all die out carry no weight when beta > 0
        for i in dead_states(m) {
            pair.v[i] = 0.0;
        }
        normalize(&mut pair.v);
    }
    if pair.beta <= 1.0 + tol {
        pair.warning = Some(format!(
            "spectral radius {} <= 1: no positive entropy",
            pair.beta
        ));
    }
    Ok(pair)
}

/// States from which every path reaches a zero row in finitely many steps.
fn dead_states(m: &TransitionMatrix) -> Vec<usize> {
    let n = m.size();
    let mut dead = vec![false; n];
    loop {
        let mut changed = false;
        for i in 0..n {
            if !dead[i] && m.row(i).iter().all(|&j| dead[j]) {
                dead[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    (0..n).filter(|&i| dead[i]).collect()
}

fn by_components(m: &TransitionMatrix, tol: f64) -> Result<PerronPair> {
    let n = m.size();
    let comps = m.components();
    let mut comp_of = vec![0usize; n];
    for (c, members) in comps.iter().enumerate() {
        for &i in members {
            comp_of[i] = c;
        }
    }
    // spectral radius and Perron vector of every class
    let mut rho = Vec::with_capacity(comps.len());
    let mut vecs = Vec::with_capacity(comps.len());
    for members in &comps {
        let has_edge = members
            .iter()
            .any(|&i| m.row(i).iter().any(|&j| comp_of[j] == comp_of[i]));
        if !has_edge {
            rho.push(0.0);
            vecs.push(vec![1.0]);
            continue;
        }
        let (r, v, ok) = power(m, members, CLASS_ITERS, tol);
        if !ok {
            return Err(Error::NonConvergence(
                "Perron iteration on an irreducible class".into(),
            ));
        }
        rho.push(r);
        vecs.push(v);
    }
    let beta = rho.iter().cloned().fold(0.0, f64::max);
    let basic = |c: usize| rho[c] >= beta - tol * beta.max(1.0) * 10.0;

    // reach[c]: classes reachable from c (including c); components come sinks first
    let ncomp = comps.len();
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); ncomp];
    for i in 0..n {
        for &j in m.row(i) {
            let (a, b) = (comp_of[i], comp_of[j]);
            if a != b && !succ[a].contains(&b) {
                succ[a].push(b);
            }
        }
    }
    let mut reach: Vec<Vec<bool>> = vec![vec![false; ncomp]; ncomp];
    for c in 0..ncomp {
        reach[c][c] = true;
        for &d in &succ[c].clone() {
            for e in 0..ncomp {
                if reach[d][e] {
                    reach[c][e] = true;
                }
            }
        }
    }
    let distinguished = (0..ncomp)
        .find(|&d| basic(d) && (0..ncomp).all(|u| u == d || !reach[u][d] || !basic(u)))
        .ok_or_else(|| Error::NonConvergence("no distinguished class".into()))?;

    let mut v = vec![0.0; n];
    for (k, &i) in comps[distinguished].iter().enumerate() {
        v[i] = vecs[distinguished][k];
    }
    // upstream classes in sinks-first order
    for c in 0..ncomp {
        if c == distinguished || !reach[c][distinguished] {
            continue;
        }
        let members = &comps[c];
        let mut x = vec![0.0; members.len()];
        let rhs: Vec<f64> = members
            .iter()
            .map(|&i| {
                m.row(i)
                    .iter()
                    .filter(|&&j| comp_of[j] != c)
                    .map(|&j| v[j])
                    .sum()
            })
            .collect();
        let mut pos = vec![usize::MAX; n];
        for (k, &i) in members.iter().enumerate() {
            pos[i] = k;
        }
        let mut done = false;
        for _ in 0..CLASS_ITERS {
            let next: Vec<f64> = members
                .iter()
                .enumerate()
                .map(|(k, &i)| {
                    let inner: f64 = m
                        .row(i)
                        .iter()
                        .filter(|&&j| pos[j] != usize::MAX)
                        .map(|&j| x[pos[j]])
                        .sum();
                    (inner + rhs[k]) / beta
                })
                .collect();
            let delta = next
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            x = next;
            if delta <= 1e-18 + 1e-16 * x.iter().cloned().fold(0.0, f64::max) {
                done = true;
                break;
            }
        }
        if !done {
            return Err(Error::NonConvergence("Neumann series on a class".into()));
        }
        for (k, &i) in members.iter().enumerate() {
            v[i] = x[k];
        }
    }
    normalize(&mut v);
    Ok(PerronPair {
        beta,
        v,
        method: PerronMethod::Components,
        warning: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(d: &[&[u8]]) -> TransitionMatrix {
        TransitionMatrix::from_dense(&d.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    /// Inverse of `lambda I - M` by Gauss-Jordan elimination, or `None` when singular.
    fn shifted_inverse(d: &[Vec<u8>], lambda: f64) -> Option<Vec<Vec<f64>>> {
        let n = d.len();
        let mut a: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut row: Vec<f64> = (0..n)
                    .map(|j| (if i == j { lambda } else { 0.0 }) - d[i][j] as f64)
                    .collect();
                row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
                row
            })
            .collect();
        for c in 0..n {
            let p = (c..n)
                .max_by(|&x, &y| a[x][c].abs().partial_cmp(&a[y][c].abs()).unwrap())
                .unwrap();
            if a[p][c].abs() < 1e-300 {
                return None;
            }
            a.swap(p, c);
            let piv = a[c][c];
            for k in 0..2 * n {
                a[c][k] /= piv;
            }
            for r in 0..n {
                if r != c {
                    let f = a[r][c];
                    for k in 0..2 * n {
                        a[r][k] -= f * a[c][k];
                    }
                }
            }
        }
        Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
    }

    /// Spectral radius by bisection on the M-matrix criterion: for a
    /// nonnegative `M`, `lambda > rho(M)` iff `lambda I - M` is invertible with
    /// a nonnegative inverse.
    fn spectral_radius_oracle(d: &[Vec<u8>]) -> f64 {
        let above = |lambda: f64| match shifted_inverse(d, lambda) {
            None => false,
            Some(inv) => {
                let scale = inv.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
                inv.iter().flatten().all(|&x| x >= -1e-9 * scale)
            }
        };
        let (mut lo, mut hi) = (0.0, d.len() as f64 + 1.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if above(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    #[test]
    fn full_shift() {
        let p = perron(&m(&[&[1, 1], &[1, 1]]), DEFAULT_TOL).unwrap();
        assert!((p.beta - 2.0).abs() < 1e-12);
        assert!((p.v[0] - 0.5).abs() < 1e-12 && (p.v[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn golden_pair() {
        let p = perron(&m(&[&[0, 1], &[1, 1]]), DEFAULT_TOL).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((p.beta - phi).abs() < 1e-12);
        assert!((p.v[0] - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-12);
        assert!((p.v[1] - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn one_by_one_warns() {
        let p = perron(&m(&[&[1]]), DEFAULT_TOL).unwrap();
        assert!((p.beta - 1.0).abs() < 1e-12);
        assert_eq!(p.v, vec![1.0]);
        assert!(p.warning.is_some());
    }

    #[test]
    fn periodic_matrix_converges() {
        let a = m(&[&[0, 1], &[1, 0]]);
        let p = perron(&a, DEFAULT_TOL).unwrap();
        assert!((p.beta - 1.0).abs() < 1e-12);
        assert!(p.residual(&a) < 1e-12);
    }

    #[test]
    fn reducible_with_jordan_chain_uses_components() {
        // two full 2-shifts, the first feeding the second: Jordan block at 2
        let a = m(&[
            &[1, 1, 1, 0],
            &[1, 1, 0, 0],
            &[0, 0, 1, 1],
            &[0, 0, 1, 1],
        ]);
        let p = perron(&a, DEFAULT_TOL).unwrap();
        assert!((p.beta - 2.0).abs() < 1e-9);
        assert!(p.residual(&a) < 1e-9);
        assert!(p.v.iter().all(|&x| x >= 0.0));
        assert!((p.v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_rows_get_zero_weight() {
        let a = m(&[&[1, 1, 1], &[0, 0, 0], &[1, 1, 1]]);
        let p = perron(&a, DEFAULT_TOL).unwrap();
        assert!((p.beta - 2.0).abs() < 1e-12);
        assert!(p.v[1].abs() < 1e-12);
        assert!((p.v[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn upstream_class_gets_neumann_solution() {
        // 0 is a transient state feeding the golden class {1,2}
        let a = m(&[&[0, 1, 0], &[0, 0, 1], &[0, 1, 1]]);
        let p = perron(&a, DEFAULT_TOL).unwrap();
        assert!(p.residual(&a) < 1e-9);
        assert!(p.v[0] > 0.0);
    }

    #[test]
    fn matches_characteristic_polynomial_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.gen_range(1..=6);
            let d: Vec<Vec<u8>> = (0..n)
                .map(|_| (0..n).map(|_| rng.gen_bool(0.45) as u8).collect())
                .collect();
            let a = TransitionMatrix::from_dense(&d).unwrap();
            let p = perron(&a, DEFAULT_TOL).unwrap();
            let oracle = spectral_radius_oracle(&d);
            assert!(
                (p.beta - oracle).abs() < 1e-9 * oracle.max(1.0),
                "{d:?}: {} vs {}",
                p.beta,
                oracle
            );
            assert!(p.residual(&a) <= 1e-9 * p.beta.max(1.0), "{d:?}");
            assert!(p.v.iter().all(|&x| x >= 0.0));
            assert!((p.v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
