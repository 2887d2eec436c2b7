//! Dense and banded complex linear algebra used by the resolvent, spectrum
//! and evolution modules. Solves and the matrix exponential are written
//! generically; the nonsymmetric eigendecomposition and the operator 2-norm
//! are delegated to LAPACK.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, Lapack, Scalar, SVD};
use num_complex::Complex;

use crate::error::{CoreError, Result};
use crate::scalar::{c_one, c_zero, Real, C};

/// Bound for operations that go through LAPACK.
pub trait LapackComplex<T: Real>: Lapack + Scalar<Real = T, Complex = Complex<T>> {}
impl<T: Real, A: Lapack + Scalar<Real = T, Complex = Complex<T>>> LapackComplex<T> for A {}

/// LU factorization with partial pivoting of a dense complex matrix.
pub struct DenseLu<T: Real> {
    lu: Array2<C<T>>,
    pivots: Vec<usize>,
}

impl<T: Real> DenseLu<T> {
    pub fn factor(a: &Array2<C<T>>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(CoreError::DimensionMismatch("LU needs a square matrix".into()));
        }
        let mut lu = a.clone();
        let mut pivots = Vec::with_capacity(n);
        for k in 0..n {
            let mut p = k;
            let mut best = lu[[k, k]].norm();
            for i in (k + 1)..n {
                let v = lu[[i, k]].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > T::zero()) || !best.is_finite() {
                return Err(CoreError::SingularSystem(format!(
                    "zero pivot at column {k}"
                )));
            }
            pivots.push(p);
            if p != k {
                for j in 0..n {
                    let tmp = lu[[k, j]];
                    lu[[k, j]] = lu[[p, j]];
                    lu[[p, j]] = tmp;
                }
            }
            let inv_piv = c_one::<T>() / lu[[k, k]];
            for i in (k + 1)..n {
                let factor = lu[[i, k]] * inv_piv;
                lu[[i, k]] = factor;
                for j in (k + 1)..n {
                    let upd = lu[[k, j]] * factor;
                    lu[[i, j]] = lu[[i, j]] - upd;
                }
            }
        }
        Ok(Self { lu, pivots })
    }

    pub fn solve_vec(&self, b: &[C<T>]) -> Result<Vec<C<T>>> {
        let n = self.lu.nrows();
        if b.len() != n {
            return Err(CoreError::DimensionMismatch("rhs length".into()));
        }
        let mut x = b.to_vec();
        // All row interchanges first: later swaps permute the stored
        // multipliers of earlier columns, so they cannot be interleaved.
        for k in 0..n {
            x.swap(k, self.pivots[k]);
        }
        for k in 0..n {
            for i in (k + 1)..n {
                let upd = self.lu[[i, k]] * x[k];
                x[i] = x[i] - upd;
            }
        }
        for k in (0..n).rev() {
            for j in (k + 1)..n {
                let upd = self.lu[[k, j]] * x[j];
                x[k] = x[k] - upd;
            }
            x[k] = x[k] / self.lu[[k, k]];
        }
        Ok(x)
    }

    pub fn solve_mat(&self, b: &Array2<C<T>>) -> Result<Array2<C<T>>> {
        let n = self.lu.nrows();
        let mut out = Array2::from_elem((n, b.ncols()), c_zero());
        for j in 0..b.ncols() {
            let col: Vec<C<T>> = (0..n).map(|i| b[[i, j]]).collect();
            let x = self.solve_vec(&col)?;
            for i in 0..n {
                out[[i, j]] = x[i];
            }
        }
        Ok(out)
    }
}

/// Inverse through LU; fine at the sizes used here (<= a few hundred).
pub fn dense_inverse<T: Real>(a: &Array2<C<T>>) -> Result<Array2<C<T>>> {
    let lu = DenseLu::factor(a)?;
    lu.solve_mat(&Array2::eye(a.nrows()))
}

pub fn frobenius_norm<T: Real>(a: &Array2<C<T>>) -> T {
    a.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
}

pub fn max_norm<T: Real>(a: &Array2<C<T>>) -> T {
    a.iter().map(|z| z.norm()).fold(T::zero(), T::max)
}

/// Maximum absolute column sum.
pub fn one_norm<T: Real>(a: &Array2<C<T>>) -> T {
    let mut worst = T::zero();
    for j in 0..a.ncols() {
        let s: T = (0..a.nrows()).map(|i| a[[i, j]].norm()).sum();
        worst = worst.max(s);
    }
    worst
}

pub(crate) fn matmul<T: Real>(a: &Array2<C<T>>, b: &Array2<C<T>>) -> Array2<C<T>> {
    let (n, k) = (a.nrows(), a.ncols());
    let m = b.ncols();
    let mut out = Array2::from_elem((n, m), c_zero());
    for i in 0..n {
        for l in 0..k {
            let ail = a[[i, l]];
            if ail == c_zero() {
                continue;
            }
            for j in 0..m {
                let upd = ail * b[[l, j]];
                out[[i, j]] = out[[i, j]] + upd;
            }
        }
    }
    out
}

/// Matrix exponential by Pade(13) with scaling and squaring.
pub fn expm<T: Real>(a: &Array2<C<T>>) -> Result<Array2<C<T>>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(CoreError::DimensionMismatch("expm needs a square matrix".into()));
    }
    // theta_13 from the standard degree-13 Pade error analysis.
    let theta = T::of(5.371920351148152);
    let norm = one_norm(a);
    let s = if norm > theta {
        (norm / theta).log2().ceil().to_i32().unwrap_or(0).max(0) as u32
    } else {
        0
    };
    let scale = T::of(0.5).powi(s as i32);
    let a0 = a.mapv(|z| z * Complex::new(scale, T::zero()));

    let b: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    let bc = |i: usize| Complex::new(T::of(b[i]), T::zero());

    let ident: Array2<C<T>> = Array2::eye(n);
    let a2 = matmul(&a0, &a0);
    let a4 = matmul(&a2, &a2);
    let a6 = matmul(&a2, &a4);

    // u = A (A6 (b13 A6 + b11 A4 + b9 A2) + b7 A6 + b5 A4 + b3 A2 + b1 I)
    let mut w = a6.mapv(|z| z * bc(13));
    w = &w + &a4.mapv(|z| z * bc(11));
    w = &w + &a2.mapv(|z| z * bc(9));
    let mut u_inner = matmul(&a6, &w);
    u_inner = &u_inner + &a6.mapv(|z| z * bc(7));
    u_inner = &u_inner + &a4.mapv(|z| z * bc(5));
    u_inner = &u_inner + &a2.mapv(|z| z * bc(3));
    u_inner = &u_inner + &ident.mapv(|z| z * bc(1));
    let u = matmul(&a0, &u_inner);

    // v = A6 (b12 A6 + b10 A4 + b8 A2) + b6 A6 + b4 A4 + b2 A2 + b0 I
    let mut w2 = a6.mapv(|z| z * bc(12));
    w2 = &w2 + &a4.mapv(|z| z * bc(10));
    w2 = &w2 + &a2.mapv(|z| z * bc(8));
    let mut v = matmul(&a6, &w2);
    v = &v + &a6.mapv(|z| z * bc(6));
    v = &v + &a4.mapv(|z| z * bc(4));
    v = &v + &a2.mapv(|z| z * bc(2));
    v = &v + &ident.mapv(|z| z * bc(0));

    // (V - U) X = (V + U)
    let lhs = &v - &u;
    let rhs = &v + &u;
    let lu = DenseLu::factor(&lhs)?;
    let mut x = lu.solve_mat(&rhs)?;
    for _ in 0..s {
        x = matmul(&x, &x);
    }
    Ok(x)
}

/// Tridiagonal system storage: sub[i] couples row i to i-1, sup[i] to i+1.
pub struct Tridiagonal<T: Real> {
    pub sub: Vec<C<T>>,
    pub diag: Vec<C<T>>,
    pub sup: Vec<C<T>>,
}

/// Banded LU with partial pivoting for a tridiagonal matrix (fill-in adds a
/// second superdiagonal). Stable for the non-diagonally-dominant M systems.
pub fn solve_tridiagonal<T: Real>(t: &Tridiagonal<T>, rhs: &[C<T>]) -> Result<Vec<C<T>>> {
    let n = t.diag.len();
    if t.sub.len() != n || t.sup.len() != n || rhs.len() != n {
        return Err(CoreError::DimensionMismatch("tridiagonal sizes".into()));
    }
    let mut d = t.diag.clone();
    let mut e = t.sup.clone(); // first superdiagonal, e[i] = A[i, i+1]
    let mut f = vec![c_zero(); n]; // fill-in second superdiagonal
    let mut c = t.sub.clone(); // c[i] = A[i, i-1]
    let mut x = rhs.to_vec();

    for k in 0..n - 1 {
        let below = c[k + 1];
        if below.norm() > d[k].norm() {
            // Swap rows k and k+1.
            std::mem::swap(&mut d[k], &mut c[k + 1]);
            // Row k had (d e f) at columns k, k+1, k+2; row k+1 has (c d e).
            let tmp = e[k];
            e[k] = d[k + 1];
            d[k + 1] = tmp;
            if k + 2 < n {
                let tmp = f[k];
                f[k] = e[k + 1];
                e[k + 1] = tmp;
            }
            x.swap(k, k + 1);
        }
        if d[k].norm() == T::zero() {
            return Err(CoreError::SingularSystem(format!("pivot {k}")));
        }
        let m = c[k + 1] / d[k];
        d[k + 1] = d[k + 1] - m * e[k];
        if k + 2 < n {
            e[k + 1] = e[k + 1] - m * f[k];
        }
        let upd = m * x[k];
        x[k + 1] = x[k + 1] - upd;
    }
    if d[n - 1].norm() == T::zero() {
        return Err(CoreError::SingularSystem("last pivot".into()));
    }
    // Back substitution over the (d, e, f) upper triangle.
    for k in (0..n).rev() {
        let mut acc = x[k];
        if k + 1 < n {
            acc = acc - e[k] * x[k + 1];
        }
        if k + 2 < n {
            acc = acc - f[k] * x[k + 2];
        }
        x[k] = acc / d[k];
    }
    Ok(x)
}

/// Eigenvalues and right eigenvectors of a dense complex matrix (LAPACK).
pub fn eig_dense<T: Real>(a: &Array2<C<T>>) -> Result<(Vec<C<T>>, Array2<C<T>>)>
where
    C<T>: LapackComplex<T>,
{
    let (vals, vecs): (Array1<C<T>>, Array2<C<T>>) = a
        .eig()
        .map_err(|e| CoreError::EigenFailure(e.to_string()))?;
    Ok((vals.to_vec(), vecs))
}

/// Operator 2-norm (largest singular value, LAPACK SVD).
pub fn two_norm<T: Real>(a: &Array2<C<T>>) -> Result<T>
where
    C<T>: LapackComplex<T>,
{
    // LAPACK SVD does not converge on non-finite input; the operator
    // norm of such a matrix is unbounded, so report it as infinite.
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Ok(T::infinity());
    }
    let (_, s, _) = a
        .svd(false, false)
        .map_err(|e| CoreError::EigenFailure(e.to_string()))?;
    Ok(s.iter().copied().fold(T::zero(), T::max))
}
