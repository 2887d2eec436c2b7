//! Truncated spectrum of the mean-zero block, with the structural checks
//! that make it trustworthy: stability against halving the truncation,
//! symmetry of the eigenvalue set under lambda -> -conj(lambda), real-part
//! suppression in the unperturbed case a = 0, and the J-selfadjointness
//! defect of the full operator.

use ndarray::Array2;
use num_complex::Complex;

use crate::error::{CoreError, Result};
use crate::factorization::BlockDecomposition;
use crate::fourier::FourierVector;
use crate::linalg::{eig_dense, max_norm, LapackComplex};
use crate::params::OperatorParams;
use crate::scalar::{c_zero, Real, C};

/// One converged eigenpair of the mean-zero block.
#[derive(Debug, Clone)]
pub struct EigenPair<T: Real> {
    pub value: C<T>,
    /// Eigenvector embedded as a mean-zero Fourier vector, unit l2 norm.
    pub vector: FourierVector<T>,
    /// ||L11 v - lambda v||_2.
    pub residual: T,
    /// Distance to the nearest eigenvalue at half the truncation.
    pub shift: T,
    /// True when `shift` is within 1e-6 (1 + |lambda|).
    pub stable: bool,
}

#[derive(Debug, Clone)]
pub struct SpectrumReport<T: Real> {
    pub half_width: usize,
    /// The k smallest-modulus eigenpairs, sorted by (Im, Re).
    pub pairs: Vec<EigenPair<T>>,
    /// max |Re lambda| / (1 + |lambda|) over the reported pairs.
    pub max_real_part_ratio: T,
    /// max over reported lambda of dist(-conj lambda, spectrum) / (1 + |lambda|).
    pub conjugate_pairing_defect: T,
}

impl<T: Real> SpectrumReport<T> {
    pub fn eigenvalues(&self) -> Vec<C<T>> {
        self.pairs.iter().map(|p| p.value).collect()
    }
}

/// Diagonalize the mean-zero block at truncation N and keep the k
/// smallest-modulus eigenpairs; k may not exceed N/2, the resolved range.
pub fn compute_spectrum<T: Real>(
    params: &OperatorParams<T>,
    half_width: usize,
    k: usize,
) -> Result<SpectrumReport<T>>
where
    C<T>: LapackComplex<T>,
{
    if k == 0 || k > half_width / 2 {
        return Err(CoreError::InvalidInput(format!(
            "requested {k} eigenvalues; the resolved range at N = {half_width} is 1..={}",
            half_width / 2
        )));
    }
    let decomp = BlockDecomposition::new(params, half_width)?;
    let (vals, vecs) = eig_dense(&decomp.l11)?;
    let coarse = BlockDecomposition::new(params, half_width / 2)?;
    let (coarse_vals, _) = eig_dense(&coarse.l11)?;

    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&i, &j| vals[i].norm().partial_cmp(&vals[j].norm()).unwrap());
    let mut pairs = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let value = vals[idx];
        let col: Vec<C<T>> = vecs.column(idx).to_vec();
        let mut vector = decomp.extend(&col)?;
        let norm = vector.l2_norm();
        if norm > T::zero() {
            vector = vector.scaled(Complex::new(T::one() / norm, T::zero()));
        }
        let mut image = vec![c_zero::<T>(); col.len()];
        for (i, row) in decomp.l11.rows().into_iter().enumerate() {
            let mut s = c_zero::<T>();
            for (l, c) in row.iter().zip(&col) {
                s += *l * *c;
            }
            image[i] = s;
        }
        let mut res_sq = T::zero();
        let col_norm_sq: T = col.iter().map(|c| c.norm_sqr()).sum();
        for (im, c) in image.iter().zip(&col) {
            res_sq += (*im - value * *c).norm_sqr();
        }
        let residual = (res_sq / col_norm_sq).sqrt();
        let tol = T::of(1e-6) * (T::one() + value.norm());
        let shift = coarse_vals
            .iter()
            .map(|cv| (*cv - value).norm())
            .fold(T::infinity(), T::min);
        pairs.push(EigenPair {
            value,
            vector,
            residual,
            shift,
            stable: shift <= tol,
        });
    }
    pairs.sort_by(|p, q| {
        (p.value.im, p.value.re)
            .partial_cmp(&(q.value.im, q.value.re))
            .unwrap()
    });

    let mut max_real_part_ratio = T::zero();
    let mut conjugate_pairing_defect = T::zero();
    for p in &pairs {
        let lam = p.value;
        max_real_part_ratio = max_real_part_ratio.max(lam.re.abs() / (T::one() + lam.norm()));
        let mirror = Complex::new(-lam.re, lam.im);
        let d = vals
            .iter()
            .map(|v| (*v - mirror).norm())
            .fold(T::infinity(), T::min);
        conjugate_pairing_defect = conjugate_pairing_defect.max(d / (T::one() + lam.norm()));
    }
    Ok(SpectrumReport {
        half_width,
        pairs,
        max_real_part_ratio,
        conjugate_pairing_defect,
    })
}

/// In the unperturbed case the eigenfunctions satisfy y(-x) = conj(y(x)),
/// i.e. all Fourier coefficients are real once the free phase is fixed so
/// the largest coefficient is real positive. Returns the worst relative
/// defect ||y(-x) - conj(y(x))|| / ||y|| over the k reported eigenpairs,
/// which in coefficients is twice the relative imaginary residue.
pub fn eigenfunction_symmetry_check<T: Real>(
    params: &OperatorParams<T>,
    half_width: usize,
    k: usize,
) -> Result<T>
where
    C<T>: LapackComplex<T>,
{
    let report = compute_spectrum(params, half_width, k)?;
    let mut worst = T::zero();
    for p in &report.pairs {
        let c = &p.vector;
        let nn = half_width as i64;
        let mut gauge = c_zero::<T>();
        let mut best = T::zero();
        for m in -nn..=nn {
            let v = c.coeff(m);
            if v.norm() > best {
                best = v.norm();
                gauge = v;
            }
        }
        if best == T::zero() {
            continue;
        }
        let phase = gauge.conj() / Complex::new(best, T::zero());
        let mut imag_sq = T::zero();
        let mut total_sq = T::zero();
        for m in -nn..=nn {
            let v = c.coeff(m) * phase;
            imag_sq += v.im * v.im;
            total_sq += v.norm_sqr();
        }
        worst = worst.max(T::of(2.0) * (imag_sq / total_sq).sqrt());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy)]
pub struct JSymmetryReport<T: Real> {
    /// max |(J L - L^H J)_{mn}|; zero (roundoff) exactly when a = 0.
    pub selfadjointness_defect: T,
    /// max |(J^2 - I)_{mn}|, a structural sanity check.
    pub involution_defect: T,
}

/// The signed reflection (J c)_m = (-1)^m c_{-m} conjugates the operator to
/// its adjoint when a = 0; for a > 0 the defect grows linearly in a and is
/// reported as-is.
pub fn j_symmetry_check<T: Real>(
    params: &OperatorParams<T>,
    half_width: usize,
) -> Result<JSymmetryReport<T>> {
    let decomp = BlockDecomposition::new(params, half_width)?;
    let dim = 2 * half_width + 1;
    let nn = half_width as i64;
    let mut j = Array2::from_elem((dim, dim), c_zero::<T>());
    for m in -nn..=nn {
        let row = (m + nn) as usize;
        let col = (-m + nn) as usize;
        let sign = if m.rem_euclid(2) == 0 {
            T::one()
        } else {
            -T::one()
        };
        j[[row, col]] = Complex::new(sign, T::zero());
    }
    let l = &decomp.full;
    let lh = l.t().mapv(|z| z.conj());
    let defect = &j.dot(l) - &lh.dot(&j);
    let jj = j.dot(&j);
    let mut eye = Array2::from_elem((dim, dim), c_zero::<T>());
    for i in 0..dim {
        eye[[i, i]] = Complex::new(T::one(), T::zero());
    }
    Ok(JSymmetryReport {
        selfadjointness_defect: max_norm(&defect),
        involution_defect: max_norm(&(&jj - &eye)),
    })
}
