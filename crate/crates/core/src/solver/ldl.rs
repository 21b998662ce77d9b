//! Sparse LDLᵀ factorization for symmetric quasi-definite matrices.
//!
//! Quasi-definite matrices `[[P, Aᵀ], [A, −R]]` with `P, R` positive definite
//! are strongly factorizable: every symmetric permutation has an LDLᵀ
//! factorization with diagonal `D`, so the ordering can be chosen purely for
//! fill. The ordering is a plain minimum-degree elimination on the explicit
//! graph; the factorization is the up-looking row-by-row algorithm driven by
//! the elimination tree.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};

use crate::error::{Error, Result};

/// Upper-triangular pattern of a symmetric matrix in CSC form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymPattern {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
}

/// Ordering and elimination tree, reusable for any values on one pattern.
#[derive(Debug)]
pub struct Symbolic {
    n: usize,
    perm: Vec<usize>,
    /// Permuted upper-triangular CSC of the input.
    c_ptr: Vec<usize>,
    c_idx: Vec<usize>,
    /// Position in the permuted storage of each input value.
    value_map: Vec<usize>,
    parent: Vec<Option<usize>>,
    l_ptr: Vec<usize>,
}

#[derive(Debug)]
pub struct Factor {
    symbolic: std::sync::Arc<Symbolic>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    d: Vec<f64>,
}

impl Symbolic {
    pub fn analyze(pattern: &SymPattern) -> Result<Self> {
        let n = pattern.n;
        for j in 0..n {
            let col = &pattern.row_idx[pattern.col_ptr[j]..pattern.col_ptr[j + 1]];
            if col.iter().any(|&i| i > j) {
                return Err(Error::invalid("pattern has entries below the diagonal"));
            }
        }
        let perm = minimum_degree(pattern);
        let mut pinv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            pinv[old] = new;
        }

        // Permute into upper-triangular storage, remembering where each value goes.
        let mut counts = vec![0usize; n + 1];
        let mut targets = Vec::with_capacity(pattern.row_idx.len());
        for j in 0..n {
            for p in pattern.col_ptr[j]..pattern.col_ptr[j + 1] {
                let (a, b) = (pinv[pattern.row_idx[p]], pinv[j]);
                let (row, col) = if a <= b { (a, b) } else { (b, a) };
                counts[col + 1] += 1;
                targets.push((row, col));
            }
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let c_ptr = counts.clone();
        let mut next = counts;
        let mut c_idx = vec![0; targets.len()];
        let mut value_map = vec![0; targets.len()];
        for (k, &(row, col)) in targets.iter().enumerate() {
            let pos = next[col];
            next[col] += 1;
            c_idx[pos] = row;
            value_map[k] = pos;
        }

        // Elimination tree and column counts of L.
        let mut parent = vec![None; n];
        let mut flag = vec![usize::MAX; n];
        let mut l_nz = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            for p in c_ptr[k]..c_ptr[k + 1] {
                let mut i = c_idx[p];
                if i >= k {
                    continue;
                }
                while flag[i] != k {
                    if parent[i].is_none() {
                        parent[i] = Some(k);
                    }
                    l_nz[i] += 1;
                    flag[i] = k;
                    i = parent[i].expect("set above");
                }
            }
        }
        let mut l_ptr = vec![0; n + 1];
        for k in 0..n {
            l_ptr[k + 1] = l_ptr[k] + l_nz[k];
        }
        Ok(Symbolic {
            n,
            perm,
            c_ptr,
            c_idx,
            value_map,
            parent,
            l_ptr,
        })
    }

    pub fn nnz_l(&self) -> usize {
        self.l_ptr[self.n]
    }
}

impl Factor {
    /// Numeric factorization. `values` are aligned with the pattern given to
    /// [`Symbolic::analyze`].
    pub fn factorize(symbolic: std::sync::Arc<Symbolic>, values: &[f64]) -> Result<Self> {
        let s = &*symbolic;
        let n = s.n;
        if values.len() != s.value_map.len() {
            return Err(Error::invalid("value count does not match the analyzed pattern"));
        }
        let mut c_val = vec![0.0; s.c_idx.len()];
        for (k, &pos) in s.value_map.iter().enumerate() {
            c_val[pos] += values[k];
        }

        let nnz = s.nnz_l();
        let mut l_idx = vec![0usize; nnz];
        let mut l_val = vec![0.0; nnz];
        let mut l_len = vec![0usize; n];
        let mut d = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut flag = vec![usize::MAX; n];
        let mut pattern = vec![0usize; n];

        for k in 0..n {
            // Nonzero pattern of row k of L, in topological order.
            let mut top = n;
            flag[k] = k;
            for p in s.c_ptr[k]..s.c_ptr[k + 1] {
                let mut i = s.c_idx[p];
                y[i] += c_val[p];
                let mut len = 0;
                while flag[i] != k {
                    pattern[len] = i;
                    len += 1;
                    flag[i] = k;
                    i = match s.parent[i] {
                        Some(pi) => pi,
                        None => break,
                    };
                }
                while len > 0 {
                    top -= 1;
                    len -= 1;
                    pattern[top] = pattern[len];
                }
            }
            d[k] = y[k];
            y[k] = 0.0;
            for &i in &pattern[top..n] {
                let yi = y[i];
                y[i] = 0.0;
                let start = s.l_ptr[i];
                for p in start..start + l_len[i] {
                    y[l_idx[p]] -= l_val[p] * yi;
                }
                let lki = yi / d[i];
                d[k] -= lki * yi;
                let p = start + l_len[i];
                l_idx[p] = k;
                l_val[p] = lki;
                l_len[i] += 1;
            }
            if d[k] == 0.0 || !d[k].is_finite() {
                return Err(Error::Numerical(format!("zero or non-finite pivot at column {k}")));
            }
        }
        Ok(Factor {
            symbolic,
            l_idx,
            l_val,
            d,
        })
    }

    /// Solves `K x = rhs` in place.
    pub fn solve_in_place(&self, rhs: &mut [f64], work: &mut Vec<f64>) {
        let s = &*self.symbolic;
        let n = s.n;
        work.clear();
        work.extend(s.perm.iter().map(|&p| rhs[p]));
        let x = &mut work[..];
        for j in 0..n {
            let xj = x[j];
            if xj != 0.0 {
                for p in s.l_ptr[j]..s.l_ptr[j + 1] {
                    x[self.l_idx[p]] -= self.l_val[p] * xj;
                }
            }
        }
        for j in 0..n {
            x[j] /= self.d[j];
        }
        for j in (0..n).rev() {
            let mut acc = x[j];
            for p in s.l_ptr[j]..s.l_ptr[j + 1] {
                acc -= self.l_val[p] * x[self.l_idx[p]];
            }
            x[j] = acc;
        }
        for (k, &p) in s.perm.iter().enumerate() {
            rhs[p] = x[k];
        }
    }

    /// Number of positive and negative pivots.
    pub fn inertia(&self) -> (usize, usize) {
        let pos = self.d.iter().filter(|&&v| v > 0.0).count();
        (pos, self.d.len() - pos)
    }
}

/// Minimum-degree ordering on the adjacency graph of a symmetric pattern.
/// Returns `perm` with `perm[new] = old`.
fn minimum_degree(pattern: &SymPattern) -> Vec<usize> {
    let n = pattern.n;
    let mut adj: Vec<HashSet<usize>> = vec![HashSet::new(); n];
    for j in 0..n {
        for p in pattern.col_ptr[j]..pattern.col_ptr[j + 1] {
            let i = pattern.row_idx[p];
            if i != j {
                adj[i].insert(j);
                adj[j].insert(i);
            }
        }
    }
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> = (0..n).map(|v| Reverse((adj[v].len(), v))).collect();
    let mut eliminated = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse((deg, v))) = heap.pop() {
        if eliminated[v] || deg != adj[v].len() {
            continue;
        }
        eliminated[v] = true;
        order.push(v);
        let nbrs: Vec<usize> = adj[v].drain().collect();
        for &u in &nbrs {
            adj[u].remove(&v);
        }
        for (a, &u) in nbrs.iter().enumerate() {
            for &w in &nbrs[a + 1..] {
                if adj[u].insert(w) {
                    adj[w].insert(u);
                }
            }
        }
        for &u in &nbrs {
            heap.push(Reverse((adj[u].len(), u)));
        }
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    /// Upper triangle of a dense symmetric matrix as (pattern, values).
    fn upper(dense: &[Vec<f64>]) -> (SymPattern, Vec<f64>) {
        let n = dense.len();
        let mut col_ptr = vec![0];
        let mut row_idx = Vec::new();
        let mut vals = Vec::new();
        for j in 0..n {
            for (i, row) in dense.iter().enumerate().take(j + 1) {
                if row[j] != 0.0 || i == j {
                    row_idx.push(i);
                    vals.push(row[j]);
                }
            }
            col_ptr.push(row_idx.len());
        }
        (SymPattern { n, col_ptr, row_idx }, vals)
    }

    #[test]
    fn solves_quasidefinite_system() {
        // [[I, Aᵀ], [A, −I]] with A = [[1, 2], [0, 3]]
        let k = vec![
            vec![1.0, 0.0, 1.0, 0.0],
            vec![0.0, 1.0, 2.0, 3.0],
            vec![1.0, 2.0, -1.0, 0.0],
            vec![0.0, 3.0, 0.0, -1.0],
        ];
        let (pat, vals) = upper(&k);
        let sym = Arc::new(Symbolic::analyze(&pat).unwrap());
        let f = Factor::factorize(sym, &vals).unwrap();
        assert_eq!(f.inertia(), (2, 2));
        let x_true = [1.0, -2.0, 0.5, 3.0];
        let mut rhs: Vec<f64> = k.iter().map(|row| row.iter().zip(&x_true).map(|(a, b)| a * b).sum()).collect();
        let mut work = Vec::new();
        f.solve_in_place(&mut rhs, &mut work);
        for (a, b) in rhs.iter().zip(&x_true) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_lower_entries() {
        let pat = SymPattern {
            n: 2,
            col_ptr: vec![0, 2, 3],
            row_idx: vec![0, 1, 1],
        };
        assert!(Symbolic::analyze(&pat).is_err());
    }

    #[test]
    fn arrow_matrix_has_no_fill() {
        // Dense last row/column: minimum degree eliminates the hub last.
        let n = 30;
        let mut k = vec![vec![0.0; n]; n];
        for i in 0..n {
            k[i][i] = 4.0 + i as f64;
            k[i][0] = 1.0;
            k[0][i] = 1.0;
        }
        k[0][0] = 100.0;
        let (pat, vals) = upper(&k);
        let sym = Arc::new(Symbolic::analyze(&pat).unwrap());
        assert_eq!(sym.nnz_l(), n - 1);
        let f = Factor::factorize(sym, &vals).unwrap();
        let mut rhs = vec![1.0; n];
        let mut work = Vec::new();
        f.solve_in_place(&mut rhs, &mut work);
        let resid: f64 = (0..n)
            .map(|i| (k[i].iter().zip(&rhs).map(|(a, b)| a * b).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(resid < 1e-12);
    }
}
