//! Sparse SPD solve: reverse Cuthill–McKee ordering, sparse Cholesky, and a
//! Jacobi-preconditioned CG fallback.

use crate::{Error, Result};
use nalgebra::DVector;
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CooMatrix, CscMatrix, CsrMatrix};
use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub enum SolveMethod {
    Cholesky,
    Pcg,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SolveReport {
    pub method: SolveMethod,
    pub dofs: usize,
    pub relative_residual: f64,
}

/// Reverse Cuthill–McKee permutation: `perm[new] = old`.
pub fn rcm(n: usize, adj: &[Vec<usize>]) -> Vec<usize> {
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| (adj[v].len(), v));
    for &start in &by_degree {
        if seen[start] {
            continue;
        }
        // pseudo-peripheral start: last vertex of a BFS from the min-degree one
        let root = {
            let mut lvl = vec![usize::MAX; 0];
            lvl.resize(n, usize::MAX);
            let mut q = VecDeque::from([start]);
            lvl[start] = 0;
            let mut last = start;
            while let Some(v) = q.pop_front() {
                last = v;
                for &w in &adj[v] {
                    if lvl[w] == usize::MAX && !seen[w] {
                        lvl[w] = lvl[v] + 1;
                        q.push_back(w);
                    }
                }
            }
            last
        };
        let mut q = VecDeque::from([root]);
        seen[root] = true;
        while let Some(v) = q.pop_front() {
            order.push(v);
            let mut nb: Vec<usize> = adj[v].iter().copied().filter(|&w| !seen[w]).collect();
            nb.sort_by_key(|&w| (adj[w].len(), w));
            for w in nb {
                seen[w] = true;
                q.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

fn residual(a: &CsrMatrix<f64>, x: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let r = b - a * x;
    r.norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// Jacobi-preconditioned conjugate gradients.
pub fn pcg(a: &CsrMatrix<f64>, b: &DVector<f64>, tol: f64, max_iter: usize) -> (DVector<f64>, f64) {
    let n = b.len();
    let mut diag = vec![1.0; n];
    for (i, j, v) in a.triplet_iter() {
        if i == j && *v != 0.0 {
            diag[i] = *v;
        }
    }
    let bn = b.norm();
    let mut x = DVector::zeros(n);
    if bn == 0.0 {
        return (x, 0.0);
    }
    let mut r = b.clone();
    let mut z = DVector::from_fn(n, |i, _| r[i] / diag[i]);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    for _ in 0..max_iter {
        let ap = a * &p;
        let alpha = rz / p.dot(&ap);
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        if r.norm() <= tol * bn {
            break;
        }
        z = DVector::from_fn(n, |i, _| r[i] / diag[i]);
        let rz_new = r.dot(&z);
        p = &z + (rz_new / rz) * &p;
        rz = rz_new;
    }
    let res = residual(a, &x, b);
    (x, res)
}

/// Solve the SPD system given as triplets (duplicates are summed).
pub fn solve_spd(n: usize, triplets: &[(usize, usize, f64)], rhs: &[f64]) -> Result<(Vec<f64>, SolveReport)> {
    if n == 0 {
        return Ok((Vec::new(), SolveReport { method: SolveMethod::Cholesky, dofs: 0, relative_residual: 0.0 }));
    }
    let mut adj = vec![Vec::new(); n];
    for &(i, j, _) in triplets {
        if i != j {
            adj[i].push(j);
        }
    }
    for a in adj.iter_mut() {
        a.sort_unstable();
        a.dedup();
    }
    let perm = rcm(n, &adj);
    let mut inv = vec![0; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let mut coo = CooMatrix::new(n, n);
    for &(i, j, v) in triplets {
        coo.push(inv[i], inv[j], v);
    }
    let b = DVector::from_fn(n, |i, _| rhs[perm[i]]);
    let csr = CsrMatrix::from(&coo);
    let csc = CscMatrix::from(&coo);
    let mut out = None;
    if let Ok(chol) = CscCholesky::factor(&csc) {
        let x = chol.solve(&b);
        let x = DVector::from_column_slice(x.as_slice());
        let res = residual(&csr, &x, &b);
        if res.is_finite() && res <= 1e-10 {
            out = Some((x, SolveReport { method: SolveMethod::Cholesky, dofs: n, relative_residual: res }));
        }
    }
    let (x, report) = match out {
        Some(v) => v,
        None => {
            let (x, res) = pcg(&csr, &b, 1e-12, 20 * n + 100);
            if !(res <= 1e-10) {
                return Err(Error::NotConverged { residual: res });
            }
            (x, SolveReport { method: SolveMethod::Pcg, dofs: n, relative_residual: res })
        }
    };
    let mut sol = vec![0.0; n];
    for (new, &old) in perm.iter().enumerate() {
        sol[old] = x[new];
    }
    Ok((sol, report))
}
