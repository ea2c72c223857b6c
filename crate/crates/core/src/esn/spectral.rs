//! Spectral radius of the sparse reservoir matrix.
//!
//! Random sparse matrices have complex-conjugate dominant eigenvalues with
//! nearly equal moduli, so plain power iteration does not settle on a
//! direction. Each cycle builds a small Arnoldi basis, takes the largest Ritz
//! value, and restarts from the real span of its Ritz vector.

use nalgebra::{Complex, DMatrix, DVector, Schur};
use rand::Rng;

use super::sparse::CsrMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerIterationOptions {
    /// Ritz residual, relative to the estimate, that counts as converged.
    pub tol: f64,
    /// Budget of sparse matrix-vector products.
    pub max_matvecs: usize,
    /// Subspace size per restart cycle; a third of it is kept across restarts.
    pub krylov_dim: usize,
}

impl Default for PowerIterationOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_matvecs: 10_000,
            krylov_dim: 60,
        }
    }
}

/// Largest eigenvalue modulus from a full Schur decomposition.
pub fn dense_spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 100 * m.nrows().max(10))
        .ok_or_else(|| Error::Convergence("Schur decomposition did not converge".into()))?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max))
}

/// Eigenvalues of a small dense matrix sorted by decreasing modulus.
fn sorted_eigenvalues(h: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let schur = Schur::try_new(h.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Convergence("Schur decomposition did not converge".into()))?;
    let mut ev: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.norm().total_cmp(&a.norm()).then(b.im.total_cmp(&a.im)));
    Ok(ev)
}

/// Unit eigenvector of `h` for the eigenvalue `theta` by inverse iteration.
fn eigenvector(h: &DMatrix<f64>, theta: Complex<f64>) -> Option<DVector<Complex<f64>>> {
    let k = h.nrows();
    let shift = theta + Complex::new(1e-10, 1e-10) * theta.norm().max(f64::MIN_POSITIVE);
    let mut shifted = h.map(|x| Complex::new(x, 0.0));
    for i in 0..k {
        shifted[(i, i)] -= shift;
    }
    let lu = shifted.lu();
    let mut y = DVector::from_fn(k, |i, _| Complex::new(1.0, 0.1 * i as f64));
    for _ in 0..3 {
        let z = lu.solve(&y)?;
        let s = z.norm();
        if !(s > 0.0 && s.is_finite()) {
            return None;
        }
        y = z.unscale(s);
    }
    Some(y)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(c: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yj, xj)| *yj += c * xj);
}

/// Orthogonal basis `V` together with `A V`, so vectors can be recombined
/// without further products with `A`.
struct Subspace {
    v: Vec<Vec<f64>>,
    av: Vec<Vec<f64>>,
}

impl Subspace {
    /// Orthogonalize `(x, ax)` against the basis (two Gram-Schmidt passes,
    /// applied to both halves) and append it. Returns false if `x` lies in the
    /// span.
    fn push(&mut self, mut x: Vec<f64>, mut ax: Vec<f64>) -> bool {
        let scale = norm(&x);
        for _ in 0..2 {
            for (q, aq) in self.v.iter().zip(&self.av) {
                let c = dot(q, &x);
                axpy(-c, q, &mut x);
                axpy(-c, aq, &mut ax);
            }
        }
        let s = norm(&x);
        if !(s > 1e-10 * scale) {
            return false;
        }
        x.iter_mut().for_each(|v| *v /= s);
        ax.iter_mut().for_each(|v| *v /= s);
        self.v.push(x);
        self.av.push(ax);
        true
    }

    fn combine(vecs: &[Vec<f64>], coef: impl Iterator<Item = f64>, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (q, c) in vecs.iter().zip(coef) {
            axpy(c, q, &mut out);
        }
        out
    }
}

/// Spectral radius of `a` by thick-restarted Krylov iteration.
///
/// Each cycle extends the basis to `krylov_dim` vectors, takes Ritz values of
/// `V' A V`, and restarts from the real span of the leading third of the Ritz
/// vectors plus the next Krylov direction. Keeping several of them matters:
/// the edge of a random spectrum is crowded, and a single kept vector tends to
/// lock onto whichever edge eigenvalue dominates it rather than the largest.
///
/// Converged when the Ritz residual `‖A y − θ y‖` of the largest Ritz value
/// is below `tol·|θ|`. Returns 0 for a collapsing (nilpotent) start and fails
/// with [`Error::Convergence`] if the budget runs out.
pub fn power_spectral_radius<R: Rng>(
    a: &CsrMatrix,
    opts: &PowerIterationOptions,
    rng: &mut R,
) -> Result<f64> {
    let n = a.dim();
    if n == 0 {
        return Ok(0.0);
    }
    let m = opts.krylov_dim.clamp(2, n.max(2)).min(n);
    let keep = (m / 3).max(1);
    let mut matvecs = 0usize;
    let mut last: Option<f64> = None;
    let matvec = |x: &[f64], count: &mut usize| {
        let mut y = vec![0.0; n];
        a.mul_vec_into(x, &mut y);
        *count += 1;
        y
    };

    let start: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let a_start = matvec(&start, &mut matvecs);
    if norm(&a_start) == 0.0 {
        // A x = 0: nilpotent on the sampled direction
        return Ok(0.0);
    }
    let mut sub = Subspace {
        v: Vec::with_capacity(m),
        av: Vec::with_capacity(m),
    };
    sub.push(start, a_start);

    while matvecs < opts.max_matvecs {
        let mut invariant = false;
        while sub.v.len() < m {
            let next = sub.av.last().expect("basis is never empty").clone();
            let a_next = matvec(&next, &mut matvecs);
            if !sub.push(next, a_next) {
                invariant = true;
                break;
            }
        }
        let k = sub.v.len();
        let h = DMatrix::from_fn(k, k, |i, j| dot(&sub.v[i], &sub.av[j]));
        let ev = sorted_eigenvalues(&h)?;
        let theta = ev[0];
        let estimate = theta.norm();
        // next Krylov direction: A v_last with the subspace removed
        let mut f = sub.av.last().expect("basis is never empty").clone();
        let f_scale = norm(&f);
        for _ in 0..2 {
            for q in &sub.v {
                axpy(-dot(q, &f), q, &mut f);
            }
        }
        if invariant || k == n || estimate == 0.0 || !(norm(&f) > 1e-10 * f_scale) {
            // the subspace is invariant: Ritz values are eigenvalues
            return Ok(estimate);
        }

        // Ritz vectors of the leading values, conjugate pairs counted once
        let mut kept = Subspace {
            v: Vec::with_capacity(m),
            av: Vec::with_capacity(m),
        };
        let mut residual = None;
        for (idx, &mu) in ev.iter().enumerate() {
            if kept.v.len() >= keep {
                break;
            }
            if mu.im < 0.0 && ev[..idx].iter().any(|z| (z.conj() - mu).norm() <= 1e-12 * mu.norm()) {
                continue;
            }
            let Some(y) = eigenvector(&h, mu) else { continue };
            let re = || y.iter().map(|c| c.re);
            let im = || y.iter().map(|c| c.im);
            let (vr, vi) = (Subspace::combine(&sub.v, re(), n), Subspace::combine(&sub.v, im(), n));
            let (ar, ai) = (Subspace::combine(&sub.av, re(), n), Subspace::combine(&sub.av, im(), n));
            if idx == 0 {
                // ‖A(vr + i vi) − θ(vr + i vi)‖ with ‖vr + i vi‖ = 1
                let r: f64 = (0..n)
                    .map(|j| {
                        let re = ar[j] - (mu.re * vr[j] - mu.im * vi[j]);
                        let im = ai[j] - (mu.re * vi[j] + mu.im * vr[j]);
                        re * re + im * im
                    })
                    .sum();
                residual = Some(r.sqrt());
            }
            kept.push(vr, ar);
            if mu.im != 0.0 {
                kept.push(vi, ai);
            }
        }
        if residual.is_some_and(|r| r <= opts.tol * estimate) {
            return Ok(estimate);
        }
        last = Some(estimate);
        // Ritz vectors of a Krylov space share the residual direction f, so
        // kept vectors plus f span a Krylov space again
        let a_f = matvec(&f, &mut matvecs);
        kept.push(f, a_f);
        sub = kept;
    }
    Err(Error::Convergence(format!(
        "no convergence to {:e} within {} matrix-vector products (last estimate {:?})",
        opts.tol, opts.max_matvecs, last
    )))
}
