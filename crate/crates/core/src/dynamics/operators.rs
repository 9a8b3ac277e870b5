//! Sparse complex operators on a tensor-product space, acting on dense row-major matrices.

use num_complex::Complex64 as C64;
use std::collections::BTreeMap;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Subsystem dimensions; the first subsystem is the most significant digit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Space {
    pub dims: Vec<usize>,
}

/// Small dense operator on one subsystem.
pub type Local = Vec<Vec<C64>>;

impl Space {
    pub fn new(dims: Vec<usize>) -> Self {
        Self { dims }
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut d = vec![0; self.dims.len()];
        for k in (0..self.dims.len()).rev() {
            d[k] = index % self.dims[k];
            index /= self.dims[k];
        }
        d
    }

    pub fn flatten(&self, d: &[usize]) -> usize {
        d.iter().zip(&self.dims).fold(0, |acc, (x, n)| acc * n + x)
    }

    /// Product of local operators on distinct subsystems, identity elsewhere.
    pub fn embed(&self, factors: &[(usize, &Local)]) -> SparseOp {
        let n = self.total();
        let mut triplets = Vec::new();
        for col in 0..n {
            let d = self.digits(col);
            // Expand column `col` through each factor in turn.
            let mut amps: Vec<(Vec<usize>, C64)> = vec![(d, C64::new(1.0, 0.0))];
            for (k, op) in factors {
                let mut next = Vec::new();
                for (digits, amp) in &amps {
                    let c = digits[*k];
                    for (r, row) in op.iter().enumerate() {
                        let v = row[c];
                        if v != ZERO {
                            let mut nd = digits.clone();
                            nd[*k] = r;
                            next.push((nd, amp * v));
                        }
                    }
                }
                amps = next;
            }
            for (digits, amp) in amps {
                triplets.push((self.flatten(&digits), col, amp));
            }
        }
        SparseOp::from_triplets(n, triplets)
    }
}

/// Compressed-sparse-row square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOp {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<C64>,
}

impl SparseOp {
    /// Builds from `(row, col, value)` entries, summing duplicates and dropping zeros.
    pub fn from_triplets(n: usize, triplets: Vec<(usize, usize, C64)>) -> Self {
        let mut map: BTreeMap<(usize, usize), C64> = BTreeMap::new();
        for (r, c, v) in triplets {
            *map.entry((r, c)).or_insert(ZERO) += v;
        }
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::with_capacity(map.len());
        let mut vals = Vec::with_capacity(map.len());
        for ((r, c), v) in map {
            if v == ZERO {
                continue;
            }
            row_ptr[r + 1] += 1;
            cols.push(c);
            vals.push(v);
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn zero(n: usize) -> Self {
        Self::from_triplets(n, vec![])
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn triplets(&self) -> Vec<(usize, usize, C64)> {
        let mut t = Vec::with_capacity(self.nnz());
        for r in 0..self.n {
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                t.push((r, self.cols[i], self.vals[i]));
            }
        }
        t
    }

    pub fn adjoint(&self) -> Self {
        let t = self.triplets().into_iter().map(|(r, c, v)| (c, r, v.conj())).collect();
        Self::from_triplets(self.n, t)
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut o = self.clone();
        o.vals.iter_mut().for_each(|v| *v *= s);
        o
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut t = self.triplets();
        t.extend(other.triplets());
        Self::from_triplets(self.n, t)
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let mut t = Vec::new();
        for r in 0..self.n {
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                let (k, v) = (self.cols[i], self.vals[i]);
                for j in other.row_ptr[k]..other.row_ptr[k + 1] {
                    t.push((r, other.cols[j], v * other.vals[j]));
                }
            }
        }
        Self::from_triplets(self.n, t)
    }

    /// Diagonal entries if the operator is diagonal.
    pub fn diagonal(&self) -> Option<Vec<C64>> {
        let mut d = vec![ZERO; self.n];
        for (r, c, v) in self.triplets() {
            if r != c {
                return None;
            }
            d[r] = v;
        }
        Some(d)
    }

    /// `out += s · (self · m)` for a dense row-major `n × n` matrix `m`.
    pub fn mul_dense_acc(&self, m: &[C64], out: &mut [C64], s: C64) {
        let n = self.n;
        for r in 0..n {
            let dst = &mut out[r * n..(r + 1) * n];
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                let v = s * self.vals[i];
                let src = &m[self.cols[i] * n..(self.cols[i] + 1) * n];
                for (d, x) in dst.iter_mut().zip(src) {
                    *d += v * x;
                }
            }
        }
    }

    /// `out += m · self†` for a dense row-major matrix `m`.
    pub fn dense_mul_adjoint_acc(&self, m: &[C64], out: &mut [C64]) {
        let n = self.n;
        for a in 0..n {
            let row = &m[a * n..(a + 1) * n];
            let dst = &mut out[a * n..(a + 1) * n];
            for b in 0..n {
                let mut acc = ZERO;
                for i in self.row_ptr[b]..self.row_ptr[b + 1] {
                    acc += row[self.cols[i]] * self.vals[i].conj();
                }
                dst[b] += acc;
            }
        }
    }

    pub fn to_dense(&self) -> Vec<C64> {
        let mut d = vec![ZERO; self.n * self.n];
        for (r, c, v) in self.triplets() {
            d[r * self.n + c] = v;
        }
        d
    }
}

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// `|0⟩⟨1| + |1⟩⟨0|` on a qubit, optionally carrying an inert leak level.
pub fn sigma_x(levels: usize) -> Local {
    let mut m = vec![vec![ZERO; levels]; levels];
    m[0][1] = c(1.0);
    m[1][0] = c(1.0);
    m
}

/// `diag(1, −1, 0)`: `|0⟩` is the `+1` eigenstate.
pub fn sigma_z(levels: usize) -> Local {
    let mut m = vec![vec![ZERO; levels]; levels];
    m[0][0] = c(1.0);
    m[1][1] = c(-1.0);
    m
}

/// `|leak⟩⟨1|`.
pub fn leak(levels: usize) -> Local {
    let mut m = vec![vec![ZERO; levels]; levels];
    m[2][1] = c(1.0);
    m
}

pub fn projector(levels: usize, k: usize) -> Local {
    let mut m = vec![vec![ZERO; levels]; levels];
    m[k][k] = c(1.0);
    m
}

pub fn creation(levels: usize) -> Local {
    let mut m = vec![vec![ZERO; levels]; levels];
    for n in 0..levels - 1 {
        m[n + 1][n] = c(((n + 1) as f64).sqrt());
    }
    m
}

pub fn annihilation(levels: usize) -> Local {
    let mut m = vec![vec![ZERO; levels]; levels];
    for n in 1..levels {
        m[n - 1][n] = c((n as f64).sqrt());
    }
    m
}

pub fn number(levels: usize) -> Local {
    let mut m = vec![vec![ZERO; levels]; levels];
    for (n, row) in m.iter_mut().enumerate() {
        row[n] = c(n as f64);
    }
    m
}
