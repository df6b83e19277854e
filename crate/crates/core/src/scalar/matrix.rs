use std::cmp::Ordering;

use super::Scalar;
use crate::error::{contract, Result};

/// Small dense row-major matrix of scalars.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Scalar>,
}

/// Outcome of [`solve_linear`].
#[derive(Clone, Debug)]
pub enum LinearSolution {
    Unique(Vec<Scalar>),
    Parametrized {
        particular: Vec<Scalar>,
        nullspace: Vec<Vec<Scalar>>,
    },
    Inconsistent,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Scalar>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return contract("empty matrix");
        }
        if entries.len() != rows * cols {
            return contract(format!(
                "matrix entries length {} does not match {rows}x{cols}",
                entries.len()
            ));
        }
        Ok(DenseMatrix { rows, cols, entries })
    }

    pub fn from_rows(rows: Vec<Vec<Scalar>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return contract("ragged rows");
        }
        DenseMatrix::new(r, c, rows.into_iter().flatten().collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix { rows, cols, entries: vec![Scalar::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Scalar::one());
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Scalar {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Scalar) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Scalar] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_exact(&self) -> bool {
        self.entries.iter().all(Scalar::is_exact)
    }

    fn precision(&self) -> usize {
        self.entries
            .iter()
            .filter_map(Scalar::precision)
            .max()
            .unwrap_or(super::DEFAULT_PRECISION)
    }

    pub fn mul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return contract("matrix product dimension mismatch");
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let s = (0..self.cols).map(|k| self.get(i, k) * other.get(k, j)).sum();
                out.set(i, j, s);
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[Scalar]) -> Result<Vec<Scalar>> {
        if x.len() != self.cols {
            return contract("matrix-vector dimension mismatch");
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> Scalar {
        Scalar::max_abs(&self.entries)
    }
}

fn vec_max_abs(v: &[Scalar]) -> Scalar {
    Scalar::max_abs(v)
}

/// Solves `A x = b`, classifying the system as uniquely solvable,
/// parametrized by a nullspace, or inconsistent.
///
/// Exact matrices are classified exactly. Rounded ones treat a pivot as zero
/// when it is below `2^(-p/2)` times the largest entry of `A`.
pub fn solve_linear(a: &DenseMatrix, b: &[Scalar]) -> Result<LinearSolution> {
    if b.len() != a.rows {
        return contract(format!("rhs length {} does not match {} rows", b.len(), a.rows));
    }
    let exact = a.is_exact() && b.iter().all(Scalar::is_exact);
    let bits = a
        .precision()
        .max(b.iter().filter_map(Scalar::precision).max().unwrap_or(0));
    let eps = Scalar::half_precision_eps(bits);
    let pivot_tol = &eps * &a.max_abs();
    let rhs_tol = &eps * &(Scalar::one() + vec_max_abs(b));

    let (m, n) = (a.rows, a.cols);
    let mut rows: Vec<Vec<Scalar>> = (0..m)
        .map(|i| {
            let mut r = a.row(i).to_vec();
            r.push(b[i].clone());
            r
        })
        .collect();

    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for c in 0..n {
        if r == m {
            break;
        }
        let candidate = if exact {
            (r..m).find(|&i| !rows[i][c].is_zero())
        } else {
            (r..m)
                .max_by(|&i, &j| rows[i][c].cmp_abs(&rows[j][c]))
                .filter(|&i| rows[i][c].cmp_abs(&pivot_tol) == Ordering::Greater)
        };
        let Some(p) = candidate else { continue };
        rows.swap(r, p);
        let inv = rows[r][c].recip();
        for v in rows[r].iter_mut() {
            *v = &*v * &inv;
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                *v = &*v - &(&f * pv);
            }
            row[c] = Scalar::zero();
        }
        pivot_cols.push(c);
        r += 1;
    }

    for row in &rows[r..] {
        let rhs = &row[n];
        let bad = if exact { !rhs.is_zero() } else { !rhs.abs_le(&rhs_tol) };
        if bad {
            return Ok(LinearSolution::Inconsistent);
        }
    }

    let mut particular = vec![Scalar::zero(); n];
    for (i, &c) in pivot_cols.iter().enumerate() {
        particular[c] = rows[i][n].clone();
    }
    if pivot_cols.len() == n {
        return Ok(LinearSolution::Unique(particular));
    }
    let free: Vec<usize> = (0..n).filter(|c| !pivot_cols.contains(c)).collect();
    let nullspace = free
        .iter()
        .map(|&f| {
            let mut v = vec![Scalar::zero(); n];
            v[f] = Scalar::one();
            for (i, &c) in pivot_cols.iter().enumerate() {
                v[c] = -&rows[i][f];
            }
            v
        })
        .collect();
    Ok(LinearSolution::Parametrized { particular, nullspace })
}

/// Determinant by Gaussian elimination; exact for exact-rational entries.
pub fn determinant(a: &DenseMatrix) -> Result<Scalar> {
    if a.rows != a.cols {
        return contract(format!("determinant of non-square {}x{} matrix", a.rows, a.cols));
    }
    let n = a.rows;
    let exact = a.is_exact();
    let mut m: Vec<Vec<Scalar>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let mut det = Scalar::one();
    for c in 0..n {
        let p = if exact {
            (c..n).find(|&i| !m[i][c].is_zero())
        } else {
            (c..n).max_by(|&i, &j| m[i][c].cmp_abs(&m[j][c])).filter(|&i| !m[i][c].is_zero())
        };
        let Some(p) = p else { return Ok(Scalar::zero()) };
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        let piv = m[c][c].clone();
        det = &det * &piv;
        for i in c + 1..n {
            if m[i][c].is_zero() {
                continue;
            }
            let f = &m[i][c] / &piv;
            for j in c..n {
                let v = &m[i][j] - &(&f * &m[c][j]);
                m[i][j] = v;
            }
        }
    }
    Ok(det)
}
