//! The factorization L = S M and everything built on it: the block
//! decomposition of the truncated operator relative to constants and
//! mean-zero functions, the two constructions of the inverse on the
//! mean-zero block, the block resolvent, and the Hilbert-Schmidt norm
//! estimate for that inverse.

use ndarray::Array2;
use num_complex::Complex;

use crate::error::{CoreError, Result};
use crate::fourier::FourierVector;
use crate::inverse::{compute_z0, minv_fourier};
use crate::linalg::{
    dense_inverse, eig_dense, frobenius_norm, max_norm, DenseLu, LapackComplex,
};
use crate::operators::{assemble, assemble_quadrature, OperatorKind};
use crate::params::OperatorParams;
use crate::scalar::{c_zero, Real, C};

/// Index of mode m inside the mean-zero block (mode 0 removed).
fn l11_index(m: i64, half_width: usize) -> usize {
    let n = half_width as i64;
    debug_assert!(m != 0 && m.abs() <= n);
    if m < 0 {
        (m + n) as usize
    } else {
        (m + n - 1) as usize
    }
}

/// Inverse of `l11_index`.
fn l11_mode(i: usize, half_width: usize) -> i64 {
    let n = half_width as i64;
    let m = i as i64 - n;
    if m < 0 {
        m
    } else {
        m + 1
    }
}

/// Truncated L split against the splitting span{1} + mean-zero: the full
/// matrix, the mean-zero diagonal block L11, and the coupling column l10
/// (the coefficients of L 1 = a sin x restricted to mean-zero modes).
/// The row coupling l01 vanishes identically because row 0 of L is zero.
#[derive(Debug, Clone)]
pub struct BlockDecomposition<T: Real> {
    pub half_width: usize,
    pub full: Array2<C<T>>,
    pub l11: Array2<C<T>>,
    pub l10: Vec<C<T>>,
}

impl<T: Real> BlockDecomposition<T> {
    pub fn new(params: &OperatorParams<T>, half_width: usize) -> Result<Self> {
        let l = assemble(params, half_width, OperatorKind::L)?;
        let full = l.to_dense();
        let n = half_width;
        let dim = 2 * n;
        let mut l11 = Array2::from_elem((dim, dim), c_zero::<T>());
        let mut l10 = vec![c_zero::<T>(); dim];
        let nn = n as i64;
        for m in -nn..=nn {
            if m == 0 {
                continue;
            }
            let i = l11_index(m, n);
            l10[i] = l.entry(m, 0);
            for k in -nn..=nn {
                if k == 0 {
                    continue;
                }
                l11[[i, l11_index(k, n)]] = l.entry(m, k);
            }
        }
        Ok(Self {
            half_width: n,
            full,
            l11,
            l10,
        })
    }

    /// Mean-zero coefficients of f, in L11 index order.
    pub fn restrict(&self, f: &FourierVector<T>) -> Result<Vec<C<T>>> {
        if f.half_width() != self.half_width {
            return Err(CoreError::DimensionMismatch(format!(
                "half-width {} does not match the decomposition's {}",
                f.half_width(),
                self.half_width
            )));
        }
        let nn = self.half_width as i64;
        let mut v = vec![c_zero::<T>(); 2 * self.half_width];
        for m in -nn..=nn {
            if m != 0 {
                v[l11_index(m, self.half_width)] = f.coeff(m);
            }
        }
        Ok(v)
    }

    /// Embed an L11 vector back as a mean-zero FourierVector.
    pub fn extend(&self, v: &[C<T>]) -> Result<FourierVector<T>> {
        if v.len() != 2 * self.half_width {
            return Err(CoreError::DimensionMismatch(format!(
                "vector length {} does not match the mean-zero block size {}",
                v.len(),
                2 * self.half_width
            )));
        }
        let mut f = FourierVector::zeros(self.half_width);
        for (i, &c) in v.iter().enumerate() {
            *f.coeff_mut(l11_mode(i, self.half_width)) = c;
        }
        Ok(f)
    }
}

/// Max entrywise defect between the quadrature-assembled L and the product
/// S M of the separately assembled factors, over interior columns |n| < N.
pub fn factorization_residual<T: Real>(
    params: &OperatorParams<T>,
    half_width: usize,
    grid_points: usize,
) -> Result<T> {
    let s = assemble(params, half_width, OperatorKind::S)?;
    let m = assemble(params, half_width, OperatorKind::M)?;
    let l_quad = assemble_quadrature(params, half_width, OperatorKind::L, grid_points)?;
    let nn = half_width as i64;
    let mut worst = T::zero();
    for col in (-nn + 1)..nn {
        for row in -nn..=nn {
            // S is diagonal, so (S M)[row, col] = s[row, row] m[row, col].
            let prod = s.entry(row, row) * m.entry(row, col);
            let quad = l_quad[[(row + nn) as usize, (col + nn) as usize]];
            worst = worst.max((prod - quad).norm());
        }
    }
    Ok(worst)
}

/// Dense inverse of the mean-zero block with its quality figures.
#[derive(Debug, Clone)]
pub struct L11Inverse<T: Real> {
    pub inverse: Array2<C<T>>,
    /// max |L11 inv - I|.
    pub residual: T,
    /// Crude condition figure ||L11||_F ||L11^-1||_F.
    pub condition: T,
}

pub fn l11_inverse_direct<T: Real>(decomp: &BlockDecomposition<T>) -> Result<L11Inverse<T>> {
    let inverse = dense_inverse(&decomp.l11)?;
    let prod = decomp.l11.dot(&inverse);
    let dim = prod.nrows();
    let mut residual = T::zero();
    for i in 0..dim {
        for j in 0..dim {
            let expect = if i == j {
                Complex::new(T::one(), T::zero())
            } else {
                c_zero()
            };
            residual = residual.max((prod[[i, j]] - expect).norm());
        }
    }
    let condition = frobenius_norm(&decomp.l11) * frobenius_norm(&inverse);
    Ok(L11Inverse {
        inverse,
        residual,
        condition,
    })
}

/// Solve L11 y = g (g mean-zero) through the dense inverse route.
pub fn l11_solve_direct<T: Real>(
    decomp: &BlockDecomposition<T>,
    g: &FourierVector<T>,
) -> Result<FourierVector<T>> {
    let rhs = decomp.restrict(g)?;
    let lu = DenseLu::factor(&decomp.l11)?;
    decomp.extend(&lu.solve_vec(&rhs)?)
}

/// The composed inverse and its construction intermediates.
#[derive(Debug, Clone)]
pub struct ComposedSolve<T: Real> {
    pub y: FourierVector<T>,
    /// Constant added to the antiderivative so that (v, z0) = 0.
    pub constant: C<T>,
    /// The pairing (1, z0) used as the denominator.
    pub z0_pairing: C<T>,
    /// |c_0(y)|: zero up to roundoff by construction.
    pub mean_defect: T,
}

/// Solve L11 y = g by composing the explicit pieces: antidifferentiate
/// (u_n = g_n / (i n)), fix the constant against z0 = (M*)^-1 1 so that the
/// M-solve lands in the mean-zero block, then solve the banded M system.
pub fn l11_solve_composed<T: Real>(
    params: &OperatorParams<T>,
    g: &FourierVector<T>,
) -> Result<ComposedSolve<T>> {
    let n = g.half_width();
    let scale = g.l2_norm();
    if g.mean().norm() > T::of(1e-10) * (T::one() + scale) {
        return Err(CoreError::InvalidInput(
            "composed inverse needs a mean-zero right-hand side".into(),
        ));
    }
    let mut u = FourierVector::zeros(n);
    let nn = n as i64;
    for m in -nn..=nn {
        if m != 0 {
            // u_m = g_m / (i m).
            *u.coeff_mut(m) = g.coeff(m) / Complex::new(T::zero(), T::of_i64(m));
        }
    }
    let z = compute_z0(params, n)?;
    if z.pairing.norm() < T::of(1e-12) {
        return Err(CoreError::SingularSystem(
            "(1, z0) pairing vanishes; hyperplane correction impossible".into(),
        ));
    }
    let constant = -u.inner(&z.z0)? / z.pairing;
    let mut v = u;
    *v.coeff_mut(0) += constant;
    let y = minv_fourier(params, &v)?;
    let mean_defect = y.mean().norm();
    Ok(ComposedSolve {
        y,
        constant,
        z0_pairing: z.pairing,
        mean_defect,
    })
}

/// Result of a block resolvent application (T - lambda)^-1 f.
#[derive(Debug, Clone)]
pub struct ResolventSolve<T: Real> {
    pub y: FourierVector<T>,
    /// Spectrum point of the truncated operator closest to lambda.
    pub nearest_eigenvalue: C<T>,
    pub distance: T,
    pub threshold: T,
}

/// Apply (L_N - lambda)^-1 blockwise: the constant component is
/// y_0 = -f_0 / lambda, the mean-zero component solves
/// (L11 - lambda) y_1 = f_1 + (f_0 / lambda) l10.
/// Refuses lambda within 1e-8 ||L_N||_F of the truncated spectrum
/// (which always contains 0, from the zero row).
pub fn resolvent_apply<T: Real>(
    params: &OperatorParams<T>,
    lambda: C<T>,
    f: &FourierVector<T>,
) -> Result<ResolventSolve<T>>
where
    C<T>: LapackComplex<T>,
{
    let decomp = BlockDecomposition::new(params, f.half_width())?;
    let threshold = T::of(1e-8) * frobenius_norm(&decomp.full);
    let (eigs, _) = eig_dense(&decomp.l11)?;
    let mut nearest = c_zero::<T>();
    let mut distance = lambda.norm(); // eigenvalue 0 of the constant block
    for ev in eigs {
        let d = (lambda - ev).norm();
        if d < distance {
            distance = d;
            nearest = ev;
        }
    }
    if distance < threshold {
        return Err(CoreError::LambdaNearEigenvalue {
            lambda: format!("{lambda}"),
            nearest: format!("{nearest}"),
            distance: distance.to_f64().unwrap_or(f64::NAN),
            threshold: threshold.to_f64().unwrap_or(f64::NAN),
        });
    }
    let f0 = f.coeff(0);
    let y0 = -f0 / lambda;
    let mut rhs = decomp.restrict(f)?;
    let scale = f0 / lambda;
    for (r, l) in rhs.iter_mut().zip(&decomp.l10) {
        *r += scale * *l;
    }
    let dim = 2 * f.half_width();
    let mut shifted = decomp.l11.clone();
    for i in 0..dim {
        shifted[[i, i]] -= lambda;
    }
    let lu = DenseLu::factor(&shifted)?;
    let mut y = decomp.extend(&lu.solve_vec(&rhs)?)?;
    *y.coeff_mut(0) = y0;
    Ok(ResolventSolve {
        y,
        nearest_eigenvalue: nearest,
        distance,
        threshold,
    })
}

/// Hilbert-Schmidt (Frobenius) norm of L11^-1 across truncations, with the
/// diagnostics showing the sequence saturates: increments must shrink and
/// the inverse's row norms must decay like 1/|m|.
#[derive(Debug, Clone)]
pub struct HsNormReport<T: Real> {
    pub half_widths: Vec<usize>,
    pub values: Vec<T>,
    pub increments_strictly_decreasing: bool,
    /// Log-log slope of row norms of L11^-1 over the top octave of modes.
    pub row_norm_slope: T,
}

pub fn hs_norm_estimate<T: Real>(
    params: &OperatorParams<T>,
    half_widths: &[usize],
) -> Result<HsNormReport<T>> {
    if half_widths.len() < 2 {
        return Err(CoreError::InvalidInput(
            "need at least two truncation levels".into(),
        ));
    }
    let mut values = Vec::with_capacity(half_widths.len());
    let mut last_inverse: Option<(usize, Array2<C<T>>)> = None;
    for &n in half_widths {
        let decomp = BlockDecomposition::new(params, n)?;
        let inv = dense_inverse(&decomp.l11)?;
        values.push(frobenius_norm(&inv));
        last_inverse = Some((n, inv));
    }
    let mut increments_strictly_decreasing = true;
    let mut prev = T::infinity();
    for w in values.windows(2) {
        let d = w[1] - w[0];
        if d >= prev {
            increments_strictly_decreasing = false;
        }
        prev = d;
    }
    let (n, inv) = last_inverse.unwrap();
    // Row norms indexed by positive mode m (positive and negative rows
    // averaged), fitted over the top octave [N/2, N].
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for m in (n as i64 / 2).max(1)..=(n as i64) {
        let rp = l11_index(m, n);
        let rm = l11_index(-m, n);
        let mut s = T::zero();
        for j in 0..2 * n {
            s += inv[[rp, j]].norm_sqr() + inv[[rm, j]].norm_sqr();
        }
        let norm = (s * T::of(0.5)).sqrt();
        if norm > T::zero() {
            xs.push(T::of_i64(m).ln());
            ys.push(norm.ln());
        }
    }
    let row_norm_slope = fit_slope(&xs, &ys);
    Ok(HsNormReport {
        half_widths: half_widths.to_vec(),
        values,
        increments_strictly_decreasing,
        row_norm_slope,
    })
}

fn fit_slope<T: Real>(xs: &[T], ys: &[T]) -> T {
    let n = T::of_usize(xs.len());
    let mx = xs.iter().copied().sum::<T>() / n;
    let my = ys.iter().copied().sum::<T>() / n;
    let mut num = T::zero();
    let mut den = T::zero();
    for (x, y) in xs.iter().zip(ys) {
        num += (*x - mx) * (*y - my);
        den += (*x - mx) * (*x - mx);
    }
    num / den
}

/// Max-entry norm of the full truncated operator, for reporting.
pub fn operator_scale<T: Real>(params: &OperatorParams<T>, half_width: usize) -> Result<T> {
    let l = assemble(params, half_width, OperatorKind::L)?;
    Ok(max_norm(&l.to_dense()))
}
