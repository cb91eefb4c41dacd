//! Compressed sparse rows and an envelope Cholesky factorization.
//!
//! Matrices come from finite-element assembly over meshes numbered ring by
//! ring, so their profile is narrow and a skyline factorization is both
//! simple and fast enough.

use std::io::Write;

use crate::error::{Error, Result};

/// Square sparse matrix in CSR layout.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed in
    /// their input order, so the result is reproducible bit for bit.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_by_key(|&k| (triplets[k].0, triplets[k].1, k));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::new();
        let mut vals: Vec<f64> = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for k in order {
            let (i, j, v) = triplets[k];
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix { n, row_ptr, cols, vals }
    }

    pub fn zeros(n: usize) -> Self {
        CsrMatrix { n, row_ptr: vec![0; n + 1], cols: vec![], vals: vec![] }
    }

    pub fn identity(n: usize) -> Self {
        let t: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_triplets(n, &t)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.n).flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v))).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        (0..self.n).map(|i| x[i] * self.row(i).map(|(j, v)| v * y[j]).sum::<f64>()).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `Σ aₖ Aₖ` over matrices of equal size.
    pub fn linear_combination(terms: &[(f64, &CsrMatrix)]) -> Self {
        let n = terms.first().map(|t| t.1.n).unwrap_or(0);
        let mut trip = Vec::new();
        for (a, m) in terms {
            assert_eq!(m.n, n, "dimension mismatch in linear combination");
            trip.extend(m.triplets().into_iter().map(|(i, j, v)| (i, j, a * v)));
        }
        Self::from_triplets(n, &trip)
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut m = self.clone();
        m.vals.iter_mut().for_each(|v| *v *= a);
        m
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|Aᵢⱼ − Aⱼᵢ|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Half bandwidth `max |i − j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.n).flat_map(|i| self.row(i).map(move |(j, _)| i.abs_diff(j))).max().unwrap_or(0)
    }

    /// Coordinate-format text, one `i j value` line per stored entry.
    pub fn write_coo(&self, mut w: impl Write) -> std::io::Result<()> {
        for (i, j, v) in self.triplets() {
            writeln!(w, "{i} {j} {v:.17e}")?;
        }
        Ok(())
    }
}

/// Cholesky factor `L` of a symmetric positive definite matrix in skyline storage.
#[derive(Clone, Debug)]
pub struct EnvelopeCholesky {
    n: usize,
    /// First stored column of each row.
    first: Vec<usize>,
    /// Offset of row `i` in `vals`; the row holds columns `first[i]..=i`.
    start: Vec<usize>,
    vals: Vec<f64>,
}

impl EnvelopeCholesky {
    /// Factors the lower triangle of `a`.
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.dim();
        let mut first = vec![0; n];
        for (i, f) in first.iter_mut().enumerate() {
            *f = a.row(i).map(|(j, _)| j).filter(|&j| j <= i).min().unwrap_or(i);
        }
        let mut start = vec![0; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i] + 1);
        }
        let mut vals = vec![0.0; start[n]];
        for i in 0..n {
            for (j, v) in a.row(i) {
                if j <= i {
                    vals[start[i] + j - first[i]] = v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let lo = fi.max(fj);
                let mut s = vals[start[i] + j - fi];
                let ri = &vals[start[i] + lo - fi..start[i] + j - fi];
                let rj = &vals[start[j] + lo - fj..start[j] + j - fj];
                s -= ri.iter().zip(rj).map(|(x, y)| x * y).sum::<f64>();
                if j == i {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite { row: i, pivot: s });
                    }
                    vals[start[i] + i - fi] = s.sqrt();
                } else {
                    vals[start[i] + j - fi] = s / vals[start[j] + j - fj];
                }
            }
        }
        Ok(EnvelopeCholesky { n, first, start, vals })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.vals[self.start[i]..self.start[i + 1]];
            let s: f64 = row[..i - fi].iter().zip(&y[fi..i]).map(|(l, v)| l * v).sum();
            y[i] = (y[i] - s) / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.vals[self.start[i]..self.start[i + 1]];
            y[i] /= row[i - fi];
            let yi = y[i];
            for (k, l) in row[..i - fi].iter().enumerate() {
                y[fi + k] -= l * yi;
            }
        }
        y
    }
}

/// Jacobi-preconditioned conjugate gradients for symmetric positive definite `a`.
pub fn conjugate_gradient(a: &CsrMatrix, b: &[f64], rel_tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = a.dim();
    let diag = a.diagonal();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for _ in 0..max_iter {
        let ap = a.mul_vec(&p);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if dot(&r, &r).sqrt() <= rel_tol * bnorm {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NoConvergence { iterations: max_iter, residual: dot(&r, &r).sqrt() / bnorm })
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn laplacian_1d(n: usize, shift: f64) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 + shift));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, &t)
    }

    #[test]
    fn triplets_are_summed() {
        let m = CsrMatrix::from_triplets(2, &[(0, 1, 1.0), (1, 0, 2.0), (0, 1, 0.5), (1, 1, 3.0)]);
        assert_eq!(m.get(0, 1), 1.5);
        assert_eq!(m.get(0, 0), 0.0);
        assert_eq!(m.mul_vec(&[1.0, 2.0]), vec![3.0, 8.0]);
        assert_eq!(m.nnz(), 3);
    }

    #[test]
    fn cholesky_solves_random_banded_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 60;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 8.0));
            for d in 1..4 {
                if i + d < n && rng.gen_bool(0.7) {
                    let v: f64 = rng.gen_range(-1.0..1.0);
                    t.push((i, i + d, v));
                    t.push((i + d, i, v));
                }
            }
        }
        let a = CsrMatrix::from_triplets(n, &t);
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let b = a.mul_vec(&x);
        let y = EnvelopeCholesky::factor(&a).unwrap().solve(&b);
        let err = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12);
        let z = conjugate_gradient(&a, &b, 1e-13, 500).unwrap();
        assert!(x.iter().zip(&z).all(|(a, b)| (a - b).abs() < 1e-10));
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let a = laplacian_1d(10, -1.0);
        assert!(matches!(EnvelopeCholesky::factor(&a), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn coo_export() {
        let a = laplacian_1d(2, 0.0);
        let mut out = Vec::new();
        a.write_coo(&mut out).unwrap();
        let s = String::from_utf8(out).unwrap();
        assert_eq!(s.lines().count(), 4);
        assert!(s.starts_with("0 0 2.0"));
    }
}
