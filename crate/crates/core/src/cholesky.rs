//! Sparse Cholesky factorization with a minimum-degree fill-reducing ordering.
//!
//! Rows with identical sparsity patterns (all dofs of one DG element, or of
//! one agglomerate) are merged into supervariables before ordering, so the
//! minimum-degree elimination runs on the element-level quotient graph.
//! The numeric phase is a left-looking "up-looking" row-by-row factorization
//! driven by the elimination tree.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

const NONE: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct SparseCholesky {
    n: usize,
    /// `perm[new] = old`.
    perm: Vec<usize>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Groups rows with identical patterns (diagonal included).
fn supervariables(a: &CsrMatrix) -> (Vec<Vec<usize>>, Vec<usize>) {
    let n = a.nrows();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut group_of = vec![0; n];
    let mut seen: HashMap<Vec<usize>, usize> = HashMap::new();
    for i in 0..n {
        let mut pat: Vec<usize> = a.row(i).0.to_vec();
        if pat.binary_search(&i).is_err() {
            pat.push(i);
            pat.sort_unstable();
        }
        let g = *seen.entry(pat).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(i);
        group_of[i] = g;
    }
    (groups, group_of)
}

/// Minimum-degree ordering of the supervariable quotient graph, expanded to rows.
pub fn minimum_degree_ordering(a: &CsrMatrix) -> Vec<usize> {
    let (groups, group_of) = supervariables(a);
    let m = groups.len();
    let weight: Vec<usize> = groups.iter().map(Vec::len).collect();
    let mut adj: Vec<HashSet<usize>> = vec![HashSet::new(); m];
    for (g, rows) in groups.iter().enumerate() {
        for &j in a.row(rows[0]).0 {
            let h = group_of[j];
            if h != g {
                adj[g].insert(h);
            }
        }
    }
    let degree = |adj: &HashSet<usize>| adj.iter().map(|&h| weight[h]).sum::<usize>();
    let mut deg: Vec<usize> = adj.iter().map(degree).collect();
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> =
        (0..m).map(|g| Reverse((deg[g], g))).collect();
    let mut eliminated = vec![false; m];
    let mut order = Vec::with_capacity(a.nrows());

    while let Some(Reverse((d, v))) = heap.pop() {
        if eliminated[v] || d != deg[v] {
            continue;
        }
        eliminated[v] = true;
        order.extend_from_slice(&groups[v]);
        let mut nbrs: Vec<usize> = adj[v].drain().collect();
        nbrs.sort_unstable();
        for &a in &nbrs {
            adj[a].remove(&v);
        }
        for (i, &a) in nbrs.iter().enumerate() {
            for &b in &nbrs[i + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
        for &a in &nbrs {
            deg[a] = degree(&adj[a]);
            heap.push(Reverse((deg[a], a)));
        }
    }
    order
}

impl SparseCholesky {
    pub fn factorize(a: &CsrMatrix) -> Result<Self> {
        Error::check_len(a.nrows(), a.ncols())?;
        let perm = minimum_degree_ordering(a);
        Self::factorize_with_ordering(a, perm)
    }

    /// Factorizes `P A Pᵀ = L Lᵀ` for a given ordering (`perm[new] = old`).
    pub fn factorize_with_ordering(a: &CsrMatrix, perm: Vec<usize>) -> Result<Self> {
        let n = a.nrows();
        Error::check_len(n, perm.len())?;
        let mut pinv = vec![NONE; n];
        for (new, &old) in perm.iter().enumerate() {
            pinv[old] = new;
        }

        // Upper triangle of the permuted matrix, column by column.
        let mut up_ptr = Vec::with_capacity(n + 1);
        let mut up_idx = Vec::new();
        let mut up_val = Vec::new();
        up_ptr.push(0);
        for k in 0..n {
            let (cols, vals) = a.row(perm[k]);
            for (&j, &v) in cols.iter().zip(vals) {
                let i = pinv[j];
                if i <= k {
                    up_idx.push(i);
                    up_val.push(v);
                }
            }
            up_ptr.push(up_idx.len());
        }

        let parent = etree(n, &up_ptr, &up_idx);

        // Column counts from the row patterns.
        let mut counts = vec![1usize; n];
        let mut stack = vec![0usize; n];
        let mut mark = vec![NONE; n];
        for k in 0..n {
            let top = ereach(k, &up_ptr, &up_idx, &parent, &mut stack, &mut mark);
            for &j in &stack[top..] {
                counts[j] += 1;
            }
        }
        let mut col_ptr = vec![0usize; n + 1];
        for j in 0..n {
            col_ptr[j + 1] = col_ptr[j] + counts[j];
        }
        let nnz = col_ptr[n];
        let mut row_idx = vec![0usize; nnz];
        let mut values = vec![0.0f64; nnz];
        let mut next = col_ptr[..n].to_vec();
        let mut x = vec![0.0f64; n];
        mark.fill(NONE);

        for k in 0..n {
            let top = ereach(k, &up_ptr, &up_idx, &parent, &mut stack, &mut mark);
            for p in up_ptr[k]..up_ptr[k + 1] {
                x[up_idx[p]] = up_val[p];
            }
            let mut d = x[k];
            x[k] = 0.0;
            for &i in &stack[top..] {
                let lki = x[i] / values[col_ptr[i]];
                x[i] = 0.0;
                for p in col_ptr[i] + 1..next[i] {
                    x[row_idx[p]] -= values[p] * lki;
                }
                d -= lki * lki;
                let p = next[i];
                next[i] += 1;
                row_idx[p] = k;
                values[p] = lki;
            }
            if !(d > 0.0) {
                return Err(Error::Factorization {
                    index: perm[k],
                    value: d,
                });
            }
            let p = next[k];
            next[k] += 1;
            row_idx[p] = k;
            values[p] = d.sqrt();
        }

        Ok(Self {
            n,
            perm,
            col_ptr,
            row_idx,
            values,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Factorization flops: sum over columns of `nnz(L_col)^2`.
    pub fn factorization_flops(&self) -> u64 {
        (0..self.n)
            .map(|j| {
                let c = (self.col_ptr[j + 1] - self.col_ptr[j]) as u64;
                c * c
            })
            .sum()
    }

    /// Flops of one forward plus backward substitution: `4 nnz(L)`.
    pub fn solve_flops(&self) -> u64 {
        4 * self.nnz() as u64
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for j in 0..self.n {
            let (s, e) = (self.col_ptr[j], self.col_ptr[j + 1]);
            y[j] /= self.values[s];
            let yj = y[j];
            for p in s + 1..e {
                y[self.row_idx[p]] -= self.values[p] * yj;
            }
        }
        for j in (0..self.n).rev() {
            let (s, e) = (self.col_ptr[j], self.col_ptr[j + 1]);
            let mut acc = y[j];
            for p in s + 1..e {
                acc -= self.values[p] * y[self.row_idx[p]];
            }
            y[j] = acc / self.values[s];
        }
        for (new, &old) in self.perm.iter().enumerate() {
            b[old] = y[new];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Dense `L` of the permuted matrix.
    pub fn lower_dense(&self) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.n, self.n);
        for j in 0..self.n {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                l[(self.row_idx[p], j)] = self.values[p];
            }
        }
        l
    }
}

fn etree(n: usize, up_ptr: &[usize], up_idx: &[usize]) -> Vec<usize> {
    let mut parent = vec![NONE; n];
    let mut ancestor = vec![NONE; n];
    for k in 0..n {
        for &start in &up_idx[up_ptr[k]..up_ptr[k + 1]] {
            let mut i = start;
            while i != NONE && i < k {
                let next = ancestor[i];
                ancestor[i] = k;
                if next == NONE {
                    parent[i] = k;
                }
                i = next;
            }
        }
    }
    parent
}

/// Nonzero pattern of row `k` of `L` (excluding the diagonal) in
/// topological order, returned as `stack[top..]`.
fn ereach(
    k: usize,
    up_ptr: &[usize],
    up_idx: &[usize],
    parent: &[usize],
    stack: &mut [usize],
    mark: &mut [usize],
) -> usize {
    let n = stack.len();
    let mut top = n;
    mark[k] = k;
    let mut path = Vec::new();
    for &start in &up_idx[up_ptr[k]..up_ptr[k + 1]] {
        let mut i = start;
        if i > k {
            continue;
        }
        while mark[i] != k {
            path.push(i);
            mark[i] = k;
            i = parent[i];
        }
        while let Some(j) = path.pop() {
            top -= 1;
            stack[top] = j;
        }
    }
    top
}
