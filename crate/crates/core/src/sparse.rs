//! Sparse symmetric linear algebra for the saddle-point systems the
//! assembly produces: CSR storage over a fixed sparsity pattern, a
//! reverse Cuthill-McKee ordering, an LDL^T factorization without pivoting
//! and a MINRES fallback.
//!
//! The factorization assumes the quasi-definite sign structure the
//! discretization guarantees (positive velocity block, negative pressure
//! block); a zero pivot is reported, never perturbed. The symbolic phase is
//! separate so repeated solves on the same pattern reuse the elimination
//! tree.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::math;
use crate::Result;

const NONE: usize = usize::MAX;

/// Immutable nonzero structure shared by all matrices of one discretization.
/// Column indices are sorted within each row; every diagonal entry must be
/// present for the factorization to see its pivot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsityPattern {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl SparsityPattern {
    pub fn from_rows(rows: Vec<Vec<usize>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for mut cols in rows {
            cols.sort_unstable();
            cols.dedup();
            debug_assert!(cols.last().map_or(true, |&c| c < n));
            col_idx.extend_from_slice(&cols);
            row_ptr.push(col_idx.len());
        }
        SparsityPattern {
            n,
            row_ptr,
            col_idx,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let row = self.row(i);
        row.binary_search(&j).ok().map(|k| self.row_ptr[i] + k)
    }
}

#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pattern: Arc<SparsityPattern>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(pattern: Arc<SparsityPattern>) -> Self {
        let values = vec![0.0; pattern.nnz()];
        CsrMatrix { pattern, values }
    }

    pub fn n(&self) -> usize {
        self.pattern.n
    }

    pub fn pattern(&self) -> &SparsityPattern {
        &self.pattern
    }

    pub fn set_zero(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }

    /// Accumulates into an entry that must exist in the pattern; the
    /// assembly builds the pattern from the same element loop, so a miss is
    /// a programming error.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        match self.pattern.position(i, j) {
            Some(p) => self.values[p] += v,
            None => panic!("entry ({i}, {j}) outside the sparsity pattern"),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pattern
            .position(i, j)
            .map_or(0.0, |p| self.values[p])
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n());
        debug_assert_eq!(y.len(), self.n());
        for i in 0..self.n() {
            let lo = self.pattern.row_ptr[i];
            let hi = self.pattern.row_ptr[i + 1];
            let mut acc = 0.0;
            for p in lo..hi {
                acc += self.values[p] * x[self.pattern.col_idx[p]];
            }
            y[i] = acc;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.get(i, i)).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest asymmetry |a_ij - a_ji| over the pattern, for diagnostics.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.n() {
            for (k, &j) in self.pattern.row(i).iter().enumerate() {
                let a = self.values[self.pattern.row_ptr[i] + k];
                worst = worst.max(math::abs(a - self.get(j, i)));
            }
        }
        worst
    }
}

// ---------------------------------------------------------------------------
// ordering

/// Reverse Cuthill-McKee order of an undirected graph given as adjacency
/// lists. Returns `order` with `order[new] = old`; disconnected components
/// are processed from minimum-degree seeds.
pub fn reverse_cuthill_mckee(adjacency: &[Vec<usize>]) -> Vec<usize> {
    let n = adjacency.len();
    let degree: Vec<usize> = adjacency.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue: Vec<usize> = Vec::new();
    loop {
        let seed = (0..n)
            .filter(|&v| !visited[v])
            .min_by_key(|&v| (degree[v], v));
        let Some(seed) = seed else { break };
        visited[seed] = true;
        queue.push(seed);
        let mut head = 0;
        while head < queue.len() {
            let v = queue[head];
            head += 1;
            order.push(v);
            let mut next: Vec<usize> = adjacency[v]
                .iter()
                .copied()
                .filter(|&w| !visited[w])
                .collect();
            next.sort_unstable_by_key(|&w| (degree[w], w));
            for w in next {
                visited[w] = true;
                queue.push(w);
            }
        }
        queue.clear();
    }
    order.reverse();
    order
}

// ---------------------------------------------------------------------------
// LDL^T

/// Elimination tree and column counts for a pattern; survives value changes.
#[derive(Debug, Clone)]
pub struct LdlSymbolic {
    parent: Vec<usize>,
    col_ptr: Vec<usize>,
}

/// Numeric factorization `A = L D L^T` with unit lower-triangular `L` stored
/// by columns.
#[derive(Debug, Clone)]
pub struct LdlFactor {
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
}

impl LdlSymbolic {
    pub fn analyze(pattern: &SparsityPattern) -> Self {
        let n = pattern.n();
        let mut parent = vec![NONE; n];
        let mut flag = vec![NONE; n];
        let mut counts = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            for &j in pattern.row(k) {
                if j >= k {
                    break;
                }
                let mut i = j;
                while flag[i] != k {
                    if parent[i] == NONE {
                        parent[i] = k;
                    }
                    counts[i] += 1;
                    flag[i] = k;
                    i = parent[i];
                }
            }
        }
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut acc = 0;
        col_ptr.push(0);
        for &c in &counts {
            acc += c;
            col_ptr.push(acc);
        }
        LdlSymbolic { parent, col_ptr }
    }

    pub fn factor(&self, a: &CsrMatrix) -> Result<LdlFactor> {
        let n = a.n();
        let pattern = a.pattern();
        let mut row_idx = vec![0usize; *self.col_ptr.last().unwrap()];
        let mut lx = vec![0.0; row_idx.len()];
        let mut d = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut flag = vec![NONE; n];
        let mut stack = vec![0usize; n];
        let mut lnz = vec![0usize; n];
        for k in 0..n {
            let mut top = n;
            flag[k] = k;
            y[k] = 0.0;
            let lo = pattern.row_ptr[k];
            let hi = pattern.row_ptr[k + 1];
            for p in lo..hi {
                let j = pattern.col_idx[p];
                if j > k {
                    break;
                }
                y[j] += a.values[p];
                let mut i = j;
                let mut len = 0;
                while flag[i] != k {
                    stack[len] = i;
                    len += 1;
                    flag[i] = k;
                    i = self.parent[i];
                }
                while len > 0 {
                    len -= 1;
                    top -= 1;
                    stack[top] = stack[len];
                }
            }
            d[k] = y[k];
            y[k] = 0.0;
            for s in top..n {
                let i = stack[s];
                let yi = y[i];
                y[i] = 0.0;
                let base = self.col_ptr[i];
                for p in base..base + lnz[i] {
                    y[row_idx[p]] -= lx[p] * yi;
                }
                let lki = yi / d[i];
                d[k] -= lki * yi;
                row_idx[base + lnz[i]] = k;
                lx[base + lnz[i]] = lki;
                lnz[i] += 1;
            }
            if d[k] == 0.0 || !d[k].is_finite() {
                return Err(Error::SingularMatrix {
                    n_dofs: n,
                    pivot_index: k,
                    pivot: d[k],
                });
            }
        }
        Ok(LdlFactor {
            col_ptr: self.col_ptr.clone(),
            row_idx,
            lx,
            d,
        })
    }
}

impl LdlFactor {
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.d.len();
        debug_assert_eq!(b.len(), n);
        for j in 0..n {
            let bj = b[j];
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                b[self.row_idx[p]] -= self.lx[p] * bj;
            }
        }
        for j in 0..n {
            b[j] /= self.d[j];
        }
        for j in (0..n).rev() {
            let mut bj = b[j];
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                bj -= self.lx[p] * b[self.row_idx[p]];
            }
            b[j] = bj;
        }
    }

    /// Signs of `D`, as (positive, negative) counts; the inertia check used
    /// in tests.
    pub fn inertia(&self) -> (usize, usize) {
        let pos = self.d.iter().filter(|&&v| v > 0.0).count();
        (pos, self.d.len() - pos)
    }
}

// ---------------------------------------------------------------------------
// MINRES

/// MINRES with symmetric Jacobi scaling by |diag|. Indefinite-safe; returns
/// the solution and the iteration count, or a failure carrying the final
/// relative residual.
pub fn minres(
    a: &CsrMatrix,
    b: &[f64],
    tol: f64,
    max_iters: usize,
) -> Result<(Vec<f64>, usize)> {
    let n = a.n();
    let m_inv: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&v| {
            let s = math::abs(v);
            if s > f64::MIN_POSITIVE {
                1.0 / s
            } else {
                1.0
            }
        })
        .collect();
    let apply_m_inv = |r: &[f64], out: &mut Vec<f64>| {
        out.clear();
        out.extend(r.iter().zip(&m_inv).map(|(&ri, &mi)| ri * mi));
    };

    let mut x = vec![0.0; n];
    let mut r1 = b.to_vec();
    let mut y = Vec::with_capacity(n);
    apply_m_inv(&r1, &mut y);
    let beta1 = dot(&r1, &y);
    if beta1 < 0.0 {
        return Err(crate::error::invalid("scaling matrix lost positivity"));
    }
    let beta1 = math::sqrt(beta1);
    if beta1 == 0.0 {
        return Ok((x, 0));
    }

    let mut r2 = r1.clone();
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln, mut phibar) = (0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0, 0.0);
    let mut v = vec![0.0; n];
    let mut av = vec![0.0; n];

    for itn in 1..=max_iters {
        let s = 1.0 / beta;
        for i in 0..n {
            v[i] = s * y[i];
        }
        a.mul_vec(&v, &mut av);
        if itn >= 2 {
            let f = beta / oldb;
            for i in 0..n {
                av[i] -= f * r1[i];
            }
        }
        let alfa = dot(&v, &av);
        let f = alfa / beta;
        for i in 0..n {
            av[i] -= f * r2[i];
        }
        core::mem::swap(&mut r1, &mut r2);
        core::mem::swap(&mut r2, &mut av);
        apply_m_inv(&r2, &mut y);
        oldb = beta;
        let beta2 = dot(&r2, &y);
        if beta2 < 0.0 {
            return Err(crate::error::invalid("scaling matrix lost positivity"));
        }
        beta = math::sqrt(beta2);

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = math::sqrt(gbar * gbar + beta * beta).max(f64::MIN_POSITIVE);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        for i in 0..n {
            let wi = (v[i] - oldeps * w2[i] - delta * w[i]) / gamma;
            w2[i] = w[i];
            w[i] = wi;
            x[i] += phi * wi;
        }

        if phibar <= tol * beta1 {
            return Ok((x, itn));
        }
    }
    Err(Error::LinearSolveFailure {
        n_dofs: n,
        residual: phibar / beta1,
        tolerance: tol,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}
