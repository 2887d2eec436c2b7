//! Truncated Fourier series: coefficient vectors on modes n = -N..N and the
//! synthesis/analysis maps between coefficients and physical-space samples.
//!
//! Convention (shared by every module): y(x) = sum_n c_n e^{inx} with
//! <f, g> = int f conj(g) dx on [-pi, pi], so <e^{inx}, e^{imx}> = 2 pi delta.

use num_complex::Complex;

use crate::error::{CoreError, Result};
use crate::grid::GridFunction;
use crate::scalar::{c_zero, cis, Real, C};

/// Complex coefficient vector c_n, n in [-N, N], representing
/// y(x) = sum c_n e^{inx}.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierVector<T: Real> {
    half_width: usize,
    coeffs: Vec<C<T>>,
}

impl<T: Real> FourierVector<T> {
    /// Zero vector of half-width N (length 2N + 1).
    pub fn zeros(half_width: usize) -> Self {
        Self {
            half_width,
            coeffs: vec![c_zero(); 2 * half_width + 1],
        }
    }

    /// Construct from coefficients ordered n = -N..N.
    pub fn from_coeffs(half_width: usize, coeffs: Vec<C<T>>) -> Result<Self> {
        if coeffs.len() != 2 * half_width + 1 {
            return Err(CoreError::DimensionMismatch(format!(
                "expected {} coefficients for half-width {half_width}, got {}",
                2 * half_width + 1,
                coeffs.len()
            )));
        }
        Ok(Self { half_width, coeffs })
    }

    /// The constant function `value`.
    pub fn constant(half_width: usize, value: C<T>) -> Self {
        let mut v = Self::zeros(half_width);
        *v.coeff_mut(0) = value;
        v
    }

    /// Single mode e^{ikx} scaled by `value`.
    pub fn mode(half_width: usize, k: i64, value: C<T>) -> Self {
        let mut v = Self::zeros(half_width);
        *v.coeff_mut(k) = value;
        v
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coefficient c_n; n must lie in [-N, N].
    pub fn coeff(&self, n: i64) -> C<T> {
        self.coeffs[self.index_of(n)]
    }

    pub fn coeff_mut(&mut self, n: i64) -> &mut C<T> {
        let i = self.index_of(n);
        &mut self.coeffs[i]
    }

    /// Storage index of mode n.
    pub fn index_of(&self, n: i64) -> usize {
        let shifted = n + self.half_width as i64;
        assert!(
            (0..self.coeffs.len() as i64).contains(&shifted),
            "mode {n} outside [-{0}, {0}]",
            self.half_width
        );
        shifted as usize
    }

    /// Mode number of storage index i.
    pub fn mode_of(&self, i: usize) -> i64 {
        i as i64 - self.half_width as i64
    }

    /// Coefficients in storage order n = -N..N.
    pub fn coeffs(&self) -> &[C<T>] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [C<T>] {
        &mut self.coeffs
    }

    /// Mean value of the represented function (the n = 0 coefficient).
    pub fn mean(&self) -> C<T> {
        self.coeff(0)
    }

    /// L2 norm sqrt(2 pi sum |c_n|^2).
    pub fn l2_norm(&self) -> T {
        (self.sum_sq() * T::of(2.0) * T::PI()).sqrt()
    }

    /// H1 norm sqrt(2 pi sum (1 + n^2) |c_n|^2).
    pub fn h1_norm(&self) -> T {
        let two_pi = T::of(2.0) * T::PI();
        let s = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let n = T::of_i64(self.mode_of(i));
                (T::one() + n * n) * c.norm_sqr()
            })
            .sum::<T>();
        (s * two_pi).sqrt()
    }

    fn sum_sq(&self) -> T {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Inner product (self, other) = int self conj(other) dx
    /// = 2 pi sum c_n conj(d_n).
    pub fn inner(&self, other: &Self) -> Result<C<T>> {
        if self.half_width != other.half_width {
            return Err(CoreError::DimensionMismatch(format!(
                "half-widths {} and {}",
                self.half_width, other.half_width
            )));
        }
        let two_pi = T::of(2.0) * T::PI();
        let s = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .fold(c_zero::<T>(), |acc, (c, d)| acc + c * d.conj());
        Ok(s * Complex::new(two_pi, T::zero()))
    }

    pub fn scaled(&self, alpha: C<T>) -> Self {
        Self {
            half_width: self.half_width,
            coeffs: self.coeffs.iter().map(|c| c * alpha).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.half_width != other.half_width {
            return Err(CoreError::DimensionMismatch("add".into()));
        }
        Ok(Self {
            half_width: self.half_width,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(c, d)| c + d)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Ok(self.add(&other.scaled(Complex::new(-T::one(), T::zero())))?)
    }

    /// Zero-pad or truncate to a new half-width.
    pub fn resized(&self, half_width: usize) -> Self {
        let mut out = Self::zeros(half_width);
        let keep = self.half_width.min(half_width) as i64;
        for n in -keep..=keep {
            *out.coeff_mut(n) = self.coeff(n);
        }
        out
    }

    /// Evaluate the series at a single point.
    pub fn eval(&self, x: T) -> C<T> {
        let mut acc = c_zero::<T>();
        for (i, c) in self.coeffs.iter().enumerate() {
            let n = T::of_i64(self.mode_of(i));
            acc = acc + c * cis(n * x);
        }
        acc
    }
}

/// Evaluate y(x) = sum c_n e^{inx} on the given nodes.
pub fn synthesize<T: Real>(coeffs: &FourierVector<T>, nodes: &[T]) -> Result<GridFunction<T>> {
    let values: Vec<C<T>> = nodes.iter().map(|&x| coeffs.eval(x)).collect();
    GridFunction::new(nodes.to_vec(), values)
}

/// Evaluate y(x) = sum c_n e^{inx} on the uniform periodic grid of
/// `points` nodes (see [`uniform_grid`]) in O(P log P) via a radix-2 FFT.
/// `points` must be a power of two strictly greater than 2N, so every mode
/// has a distinct residue mod P and nothing aliases. This is the only
/// practical synthesis path at the large truncations needed to resolve the
/// solution's endpoint singularities.
pub fn synthesize_uniform<T: Real>(coeffs: &FourierVector<T>, points: usize) -> Result<Vec<C<T>>> {
    let n = coeffs.half_width();
    if !points.is_power_of_two() {
        return Err(CoreError::InvalidInput(format!(
            "uniform synthesis needs a power-of-two grid, got {points}"
        )));
    }
    if points <= 2 * n {
        return Err(CoreError::GridTooCoarse { points, n });
    }
    // On x_j = -pi + 2 pi j / P: e^{i n x_j} = (-1)^n e^{2 pi i n j / P},
    // so fold the signed coefficients into DFT bins by residue and apply an
    // unnormalized inverse DFT.
    let mut bins = vec![c_zero::<T>(); points];
    for (i, cval) in coeffs.coeffs().iter().enumerate() {
        let mode = coeffs.mode_of(i);
        let signed = if mode.rem_euclid(2) == 0 { *cval } else { -*cval };
        let bin = mode.rem_euclid(points as i64) as usize;
        bins[bin] += signed;
    }
    fft_radix2(&mut bins, false);
    Ok(bins)
}

/// In-place iterative radix-2 FFT; `forward` applies e^{-2 pi i jk / P},
/// inverse applies e^{+2 pi i jk / P}. Neither direction normalizes.
fn fft_radix2<T: Real>(data: &mut [C<T>], forward: bool) {
    let n = data.len();
    debug_assert!(n.is_power_of_two());
    // Bit-reversal permutation.
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            data.swap(i, j);
        }
    }
    let sign = if forward { -T::one() } else { T::one() };
    let mut len = 2usize;
    while len <= n {
        let ang = sign * T::of(2.0) * T::PI() / T::of_usize(len);
        let wlen = cis(ang);
        for start in (0..n).step_by(len) {
            let mut w = Complex::new(T::one(), T::zero());
            for k in 0..len / 2 {
                let u = data[start + k];
                let v = data[start + k + len / 2] * w;
                data[start + k] = u + v;
                data[start + k + len / 2] = u - v;
                w *= wlen;
            }
        }
        len <<= 1;
    }
}

/// Uniform periodic grid of `points` nodes, x_j = -pi + 2 pi j / points.
/// The right endpoint pi is excluded (it aliases with -pi).
pub fn uniform_grid<T: Real>(points: usize) -> Vec<T> {
    let two_pi = T::of(2.0) * T::PI();
    (0..points)
        .map(|j| -T::PI() + two_pi * T::of_usize(j) / T::of_usize(points))
        .collect()
}

/// Trigonometric interpolation coefficients of `f` on a uniform periodic
/// grid: c_n = (1/P) sum_j f(x_j) e^{-i n x_j}. Exact for trigonometric
/// polynomials of degree <= N when the grid has P >= 2N + 1 points.
pub fn analyze<T: Real>(f: &GridFunction<T>, half_width: usize) -> Result<FourierVector<T>> {
    let points = f.len();
    if points < 2 * half_width + 1 {
        return Err(CoreError::GridTooCoarse {
            points,
            n: half_width,
        });
    }
    f.require_uniform_periodic()?;
    let inv_p = T::one() / T::of_usize(points);
    let mut out = FourierVector::zeros(half_width);
    for n in -(half_width as i64)..=(half_width as i64) {
        let mut acc = c_zero::<T>();
        for (x, v) in f.nodes().iter().zip(f.values()) {
            acc = acc + v * cis(-T::of_i64(n) * *x);
        }
        *out.coeff_mut(n) = acc * Complex::new(inv_p, T::zero());
    }
    Ok(out)
}

/// Max aliasing defect of representing `f` at half-width N: compares the
/// analysis at N against the analysis on the same grid at the largest
/// alias-free half-width. Zero (to roundoff) when f is band-limited to N.
pub fn aliasing_defect<T: Real>(f: &GridFunction<T>, half_width: usize) -> Result<T> {
    let full = (f.len() - 1) / 2;
    let coarse = analyze(f, half_width)?;
    let fine = analyze(f, full)?;
    let mut defect = T::zero();
    for n in -(full as i64)..=(full as i64) {
        let c = fine.coeff(n);
        let d = if n.unsigned_abs() as usize <= half_width {
            coarse.coeff(n)
        } else {
            c_zero()
        };
        // Modes beyond N are lost; modes within N may be polluted by aliases.
        let err = if n.unsigned_abs() as usize <= half_width {
            (c - d).norm()
        } else {
            c.norm()
        };
        defect = defect.max(err);
    }
    Ok(defect)
}
