//! Shift-invert subspace iteration for the pencil `(A, M)`.

use std::io::{self, Write};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::discretize::AssembledOperators;
use crate::error::{Error, Result};
use crate::sparse::{dot, CsrMatrix, EnvelopeCholesky};

/// Relative residual below which a Ritz pair counts as converged.
pub const SOLVER_TOLERANCE: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 500;
const GUARD_VECTORS: usize = 6;
const SEED: u64 = 0x00c0_ffee;

/// Lowest eigenpairs of `(K − Q + B) v = λ M v`.
#[derive(Clone, Debug, Serialize)]
pub struct Spectrum {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Vertex values, `M`-orthonormal.
    #[serde(skip)]
    pub eigenfunctions: Vec<Vec<f64>>,
    /// `‖Av − λMv‖ / ((‖A‖ + |λ|‖M‖)‖v‖)`, projected off `M·1` when constrained.
    pub residuals: Vec<f64>,
    /// Restricted to mean-zero functions.
    pub constrained: bool,
    /// Shift `σ` with `A − σM ≻ 0` used for the inverse.
    pub shift: f64,
    pub iterations: usize,
}

impl Spectrum {
    pub fn lowest(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Number of reported eigenvalues below `-tol`.
    pub fn negative_count(&self, tol: f64) -> usize {
        self.eigenvalues.iter().filter(|&&l| l < -tol).count()
    }

    /// Columns `index,lambda,residual`, index starting at 1.
    pub fn write_csv(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "index,lambda,residual")?;
        for (i, (l, r)) in self.eigenvalues.iter().zip(&self.residuals).enumerate() {
            writeln!(w, "{},{:.15e},{:.3e}", i + 1, l, r)?;
        }
        Ok(())
    }
}

/// The `k` smallest eigenpairs of the assembled index form, optionally on the
/// `M`-orthogonal complement of the constants.
pub fn solve_spectrum(ops: &AssembledOperators, k: usize, constrained: bool) -> Result<Spectrum> {
    solve_pencil(&ops.system, &ops.mass, k, constrained)
}

/// As [`solve_spectrum`] for an arbitrary symmetric pencil with `M ≻ 0`.
pub fn solve_pencil(a: &CsrMatrix, m: &CsrMatrix, k: usize, constrained: bool) -> Result<Spectrum> {
    let n = a.dim();
    if m.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: m.dim() });
    }
    let available = n.saturating_sub(constrained as usize);
    if k == 0 || k > available {
        return Err(Error::InvalidArgument(format!(
            "cannot compute {k} eigenpairs of a {available}-dimensional problem"
        )));
    }
    let p = (k + GUARD_VECTORS).min(available);
    let (shift, chol) = shifted_factor(a, m)?;

    let ones = vec![1.0; n];
    let m1 = m.mul_vec(&ones);
    let m1_norm2 = dot(&m1, &m1);
    let constraint = constrained.then(|| {
        let z = chol.solve(&m1);
        let mz = dot(&m1, &z);
        (z, mz)
    });
    // Remove the `M`-mean of `x`; keeps the iteration inside the constrained space.
    let total = dot(&m1, &ones);
    let project = |x: &mut Vec<f64>| {
        let s = dot(&m1, x) / total;
        x.iter_mut().for_each(|v| *v -= s);
    };
    let apply = |x: &Vec<f64>| -> Vec<f64> {
        let mut w = chol.solve(&m.mul_vec(x));
        if let Some((z, mz)) = &constraint {
            let s = dot(&m1, &w) / mz;
            w.iter_mut().zip(z).for_each(|(a, b)| *a -= s * b);
            project(&mut w);
        }
        w
    };

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let random_vector = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if constrained {
            project(&mut v);
        }
        v
    };
    let mut block: Vec<Vec<f64>> = Vec::with_capacity(p);
    if !constrained {
        block.push(ones.clone());
    }
    while block.len() < p {
        block.push(random_vector(&mut rng));
    }
    m_orthonormalize(&mut block, m, &mut || random_vector(&mut rng));

    let a_norm = a.max_abs();
    let m_norm = m.max_abs();
    let mut last = None;
    for it in 1..=MAX_ITERATIONS {
        let mut w: Vec<Vec<f64>> = block.par_iter().map(&apply).collect();
        m_orthonormalize(&mut w, m, &mut || random_vector(&mut rng));
        let aw: Vec<Vec<f64>> = w.par_iter().map(|x| a.mul_vec(x)).collect();
        let h = DMatrix::from_fn(p, p, |i, j| 0.5 * (dot(&w[i], &aw[j]) + dot(&w[j], &aw[i])));
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

        let combine = |src: &[Vec<f64>], col: usize| -> Vec<f64> {
            let mut out = vec![0.0; n];
            for (i, s) in src.iter().enumerate() {
                let c = eig.eigenvectors[(i, col)];
                out.iter_mut().zip(s).for_each(|(o, x)| *o += c * x);
            }
            out
        };
        let pairs: Vec<(Vec<f64>, Vec<f64>)> =
            order.par_iter().map(|&col| (combine(&w, col), combine(&aw, col))).collect();
        let values: Vec<f64> = order.iter().map(|&c| eig.eigenvalues[c]).collect();
        let residuals: Vec<f64> = pairs
            .par_iter()
            .zip(&values)
            .map(|((x, ax), &lambda)| {
                let mx = m.mul_vec(x);
                let mut r: Vec<f64> = ax.iter().zip(&mx).map(|(a, b)| a - lambda * b).collect();
                if constrained {
                    let s = dot(&m1, &r) / m1_norm2;
                    r.iter_mut().zip(&m1).for_each(|(a, b)| *a -= s * b);
                }
                let scale = (a_norm + lambda.abs() * m_norm) * dot(x, x).sqrt();
                if scale > 0.0 {
                    dot(&r, &r).sqrt() / scale
                } else {
                    0.0
                }
            })
            .collect();
        block = pairs.into_iter().map(|(x, _)| x).collect();
        let worst = residuals[..k].iter().fold(0.0f64, |w, r| w.max(*r));
        if worst < SOLVER_TOLERANCE {
            return Ok(Spectrum {
                eigenvalues: values[..k].to_vec(),
                eigenfunctions: block[..k].to_vec(),
                residuals: residuals[..k].to_vec(),
                constrained,
                shift,
                iterations: it,
            });
        }
        last = Some(worst);
    }
    Err(Error::NoConvergence { iterations: MAX_ITERATIONS, residual: last.unwrap_or(f64::NAN) })
}

/// Finds `σ` with `A − σM` positive definite by stepping down from `−1`.
fn shifted_factor(a: &CsrMatrix, m: &CsrMatrix) -> Result<(f64, EnvelopeCholesky)> {
    let mut sigma = -1.0;
    let mut last_err = None;
    for _ in 0..64 {
        let shifted = CsrMatrix::linear_combination(&[(1.0, a), (-sigma, m)]);
        match EnvelopeCholesky::factor(&shifted) {
            Ok(f) => return Ok((sigma, f)),
            Err(e) => last_err = Some(e),
        }
        sigma = 2.0 * sigma - 1.0;
    }
    Err(last_err.unwrap())
}

/// Modified Gram–Schmidt in the `M` inner product, run twice for stability.
/// Columns that collapse are replaced by fresh vectors.
fn m_orthonormalize(block: &mut [Vec<f64>], m: &CsrMatrix, fresh: &mut dyn FnMut() -> Vec<f64>) {
    for j in 0..block.len() {
        for attempt in 0..8 {
            let before = m.bilinear(&block[j], &block[j]).sqrt();
            for _ in 0..2 {
                for i in 0..j {
                    let mi = m.mul_vec(&block[i]);
                    let s = dot(&mi, &block[j]);
                    let (head, tail) = block.split_at_mut(j);
                    tail[0].iter_mut().zip(&head[i]).for_each(|(x, y)| *x -= s * y);
                }
            }
            let norm = m.bilinear(&block[j], &block[j]).sqrt();
            if norm > 1e-10 * before && norm.is_finite() {
                block[j].iter_mut().for_each(|x| *x /= norm);
                break;
            }
            assert!(attempt < 7, "could not extend an M-orthonormal block");
            block[j] = fresh();
        }
    }
}
