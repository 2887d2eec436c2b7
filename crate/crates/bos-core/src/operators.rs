//! Discretization of S, M, M*, D, C and L on the truncated Fourier basis.
//!
//! All six operators are diagonal or tridiagonal in the e^{inx} basis:
//!
//! * `S y = y'`                      -> diagonal `in`
//! * `M y = (1 - a cos x) y + b sin x y'`
//! * `M* z = (1 - a cos x) z - b (sin x z)'`
//! * `D = (M + M*)/2`, multiplication by `1 - (a + b/2) cos x`
//! * `C = (M - M*)/(2i)`
//! * `L = S M`, assembled as the product so the factorization holds by
//!   construction; an independent quadrature assembly is available as an
//!   oracle.

use std::io::Write;

use ndarray::Array2;
use num_complex::Complex;

use crate::error::{CoreError, Result};
use crate::fourier::{analyze, uniform_grid, FourierVector};
use crate::grid::GridFunction;
use crate::params::OperatorParams;
use crate::scalar::{c_zero, cis, Real, C};

/// Which operator a matrix discretizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OperatorKind {
    S,
    M,
    Mstar,
    D,
    C,
    L,
}

impl OperatorKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "S" => Ok(Self::S),
            "M" => Ok(Self::M),
            "Mstar" => Ok(Self::Mstar),
            "D" => Ok(Self::D),
            "C" => Ok(Self::C),
            "L" => Ok(Self::L),
            other => Err(CoreError::InvalidInput(format!(
                "unknown operator kind {other:?} (expected S, M, Mstar, D, C or L)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::S => "S",
            Self::M => "M",
            Self::Mstar => "Mstar",
            Self::D => "D",
            Self::C => "C",
            Self::L => "L",
        }
    }
}

/// Tridiagonal operator matrix on modes n = -N..N, stored by column:
/// for input mode n the operator contributes `to_upper[n]` to mode n+1,
/// `on_diag[n]` to mode n and `to_lower[n]` to mode n-1.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedOperatorMatrix<T: Real> {
    half_width: usize,
    kind: OperatorKind,
    to_upper: Vec<C<T>>,
    on_diag: Vec<C<T>>,
    to_lower: Vec<C<T>>,
}

/// Band coefficients of the operator acting on mode n, before truncation.
fn stencil<T: Real>(params: &OperatorParams<T>, kind: OperatorKind, n: i64) -> [C<T>; 3] {
    let a = params.a();
    let b = params.b();
    let nf = T::of_i64(n);
    let half = T::of(0.5);
    let quarter = T::of(0.25);
    let re = |v: T| Complex::new(v, T::zero());
    let im = |v: T| Complex::new(T::zero(), v);
    match kind {
        OperatorKind::S => [c_zero(), im(nf), c_zero()],
        OperatorKind::M => [
            re((nf * b - a) * half),
            re(T::one()),
            re(-(nf * b + a) * half),
        ],
        OperatorKind::Mstar => [
            re(-(a + b * (nf + T::one())) * half),
            re(T::one()),
            re((b * (nf - T::one()) - a) * half),
        ],
        OperatorKind::D => [
            re(-(a + b * half) * half),
            re(T::one()),
            re(-(a + b * half) * half),
        ],
        OperatorKind::C => [
            im(-b * (T::of(2.0) * nf + T::one()) * quarter),
            c_zero(),
            im(b * (T::of(2.0) * nf - T::one()) * quarter),
        ],
        // L = S M: the output row m scales the M stencil by i m.
        OperatorKind::L => {
            let [up, diag, low] = stencil(params, OperatorKind::M, n);
            [
                up * im(nf + T::one()),
                diag * im(nf),
                low * im(nf - T::one()),
            ]
        }
    }
}

/// Assemble the discretized operator of the requested kind at half-width N.
pub fn assemble<T: Real>(
    params: &OperatorParams<T>,
    half_width: usize,
    kind: OperatorKind,
) -> Result<BandedOperatorMatrix<T>> {
    if half_width < 2 {
        return Err(CoreError::InvalidInput(format!(
            "half-width must be >= 2, got {half_width}"
        )));
    }
    let len = 2 * half_width + 1;
    let mut to_upper = vec![c_zero(); len];
    let mut on_diag = vec![c_zero(); len];
    let mut to_lower = vec![c_zero(); len];
    let nn = half_width as i64;
    for n in -nn..=nn {
        let [up, diag, low] = stencil(params, kind, n);
        let i = (n + nn) as usize;
        on_diag[i] = diag;
        // Contributions leaving the truncation are dropped.
        if n < nn {
            to_upper[i] = up;
        }
        if n > -nn {
            to_lower[i] = low;
        }
    }
    Ok(BandedOperatorMatrix {
        half_width,
        kind,
        to_upper,
        on_diag,
        to_lower,
    })
}

impl<T: Real> BandedOperatorMatrix<T> {
    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        2 * self.half_width + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Entry at output mode m, input mode n. Zero outside the band.
    pub fn entry(&self, m: i64, n: i64) -> C<T> {
        let nn = self.half_width as i64;
        if m.abs() > nn || n.abs() > nn {
            return c_zero();
        }
        let i = (n + nn) as usize;
        match m - n {
            1 => self.to_upper[i],
            0 => self.on_diag[i],
            -1 => self.to_lower[i],
            _ => c_zero(),
        }
    }

    /// y = A x exploiting the band.
    pub fn apply(&self, x: &FourierVector<T>) -> Result<FourierVector<T>> {
        if x.half_width() != self.half_width {
            return Err(CoreError::DimensionMismatch(format!(
                "operator half-width {} vs vector {}",
                self.half_width,
                x.half_width()
            )));
        }
        let nn = self.half_width as i64;
        let mut out = FourierVector::zeros(self.half_width);
        for n in -nn..=nn {
            let c = x.coeff(n);
            if n < nn {
                *out.coeff_mut(n + 1) = out.coeff(n + 1) + self.to_upper[(n + nn) as usize] * c;
            }
            *out.coeff_mut(n) = out.coeff(n) + self.on_diag[(n + nn) as usize] * c;
            if n > -nn {
                *out.coeff_mut(n - 1) = out.coeff(n - 1) + self.to_lower[(n + nn) as usize] * c;
            }
        }
        Ok(out)
    }

    /// Dense matrix, rows = output modes, columns = input modes (order -N..N).
    pub fn to_dense(&self) -> Array2<C<T>> {
        let len = self.len();
        let nn = self.half_width as i64;
        let mut a = Array2::from_elem((len, len), c_zero());
        for n in -nn..=nn {
            for m in (n - 1).max(-nn)..=(n + 1).min(nn) {
                a[[(m + nn) as usize, (n + nn) as usize]] = self.entry(m, n);
            }
        }
        a
    }

    /// Max-norm of A - B over all entries.
    pub fn max_diff(&self, other: &Self) -> T {
        let nn = self.half_width as i64;
        let mut worst = T::zero();
        for n in -nn..=nn {
            for m in (n - 1).max(-nn)..=(n + 1).min(nn) {
                worst = worst.max((self.entry(m, n) - other.entry(m, n)).norm());
            }
        }
        worst
    }

    /// Hermitian defect max |A[m,n] - conj(A[n,m])|.
    pub fn hermitian_defect(&self) -> T {
        let nn = self.half_width as i64;
        let mut worst = T::zero();
        for n in -nn..=nn {
            for m in (n - 1).max(-nn)..=(n + 1).min(nn) {
                worst = worst.max((self.entry(m, n) - self.entry(n, m).conj()).norm());
            }
        }
        worst
    }

    /// Nonzero entries as `m,n,re,im` CSV.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "m,n,re,im")?;
        let nn = self.half_width as i64;
        for n in -nn..=nn {
            for m in (n - 1).max(-nn)..=(n + 1).min(nn) {
                let e = self.entry(m, n);
                if e != c_zero() {
                    writeln!(w, "{m},{n},{:.17e},{:.17e}", e.re, e.im)?;
                }
            }
        }
        Ok(())
    }
}

/// Pointwise application of the continuous operator to y = e^{inx};
/// used by the quadrature assembly oracle.
fn apply_to_mode_pointwise<T: Real>(
    params: &OperatorParams<T>,
    kind: OperatorKind,
    n: i64,
    x: T,
) -> C<T> {
    let a = params.a();
    let b = params.b();
    let nf = T::of_i64(n);
    let y = cis(nf * x);
    let i = Complex::new(T::zero(), T::one());
    let yp = y * i * Complex::new(nf, T::zero());
    let ypp = y * Complex::new(-nf * nf, T::zero());
    let re = |v: T| Complex::new(v, T::zero());
    match kind {
        OperatorKind::S => yp,
        OperatorKind::M => y * re(T::one() - a * x.cos()) + yp * re(b * x.sin()),
        OperatorKind::Mstar => {
            y * re(T::one() - a * x.cos()) - y * re(b * x.cos()) - yp * re(b * x.sin())
        }
        OperatorKind::D => y * re(T::one() - (a + b * T::of(0.5)) * x.cos()),
        OperatorKind::C => {
            (y * re(-b * T::of(0.5) * x.cos()) - yp * re(b * x.sin())) * i
        }
        OperatorKind::L => {
            y * re(a * x.sin())
                + yp * re(T::one() - a * x.cos())
                + yp * re(b * x.cos())
                + ypp * re(b * x.sin())
        }
    }
}

/// Independent assembly by quadrature of <A e^{inx}, e^{imx}> / 2 pi on a
/// uniform grid (trapezoidal rule, spectrally accurate for these smooth
/// integrands). Oracle for the stencil-based `assemble`.
pub fn assemble_quadrature<T: Real>(
    params: &OperatorParams<T>,
    half_width: usize,
    kind: OperatorKind,
    grid_points: usize,
) -> Result<Array2<C<T>>> {
    if grid_points < 2 * half_width + 2 {
        return Err(CoreError::GridTooCoarse {
            points: grid_points,
            n: half_width,
        });
    }
    let nodes = uniform_grid::<T>(grid_points);
    let len = 2 * half_width + 1;
    let nn = half_width as i64;
    let mut out = Array2::from_elem((len, len), c_zero());
    for n in -nn..=nn {
        let values: Vec<C<T>> = nodes
            .iter()
            .map(|&x| apply_to_mode_pointwise(params, kind, n, x))
            .collect();
        let g = GridFunction::new(nodes.clone(), values)?;
        let col = analyze(&g, half_width)?;
        for m in -nn..=nn {
            out[[(m + nn) as usize, (n + nn) as usize]] = col.coeff(m);
        }
    }
    Ok(out)
}

/// Max-norm defect between the independently assembled M* and the conjugate
/// transpose of M. Contract: <= 1e-13 for all N <= 512 (in f64).
pub fn adjoint_check<T: Real>(params: &OperatorParams<T>, half_width: usize) -> Result<T> {
    let m = assemble(params, half_width, OperatorKind::M)?;
    let mstar = assemble(params, half_width, OperatorKind::Mstar)?;
    let nn = half_width as i64;
    let mut worst = T::zero();
    for n in -nn..=nn {
        for mm in (n - 1).max(-nn)..=(n + 1).min(nn) {
            worst = worst.max((mstar.entry(mm, n) - m.entry(n, mm).conj()).norm());
        }
    }
    Ok(worst)
}

/// Norms entering the graph-norm description of the domain of L:
/// ||f||^2 = ||f||^2_{H1} + ||sin(x) f'||^2_{H1}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainDiagnostic<T: Real> {
    pub h1_norm_sq: T,
    pub weighted_norm_sq: T,
    pub total_norm_sq: T,
    pub in_domain: bool,
}

/// Coefficients of sin(x) f'(x); output half-width grows by one.
pub fn sin_times_derivative<T: Real>(f: &FourierVector<T>) -> FourierVector<T> {
    let n_in = f.half_width() as i64;
    let mut out = FourierVector::zeros(f.half_width() + 1);
    // sin x e^{inx} = (e^{i(n+1)x} - e^{i(n-1)x}) / (2i), f' mode n carries in.
    // g_m = ((m-1) c_{m-1} - (m+1) c_{m+1}) / 2.
    for m in -(n_in + 1)..=(n_in + 1) {
        let lower = if (m - 1).abs() <= n_in {
            f.coeff(m - 1) * Complex::new(T::of_i64(m - 1), T::zero())
        } else {
            c_zero()
        };
        let upper = if (m + 1).abs() <= n_in {
            f.coeff(m + 1) * Complex::new(T::of_i64(m + 1), T::zero())
        } else {
            c_zero()
        };
        *out.coeff_mut(m) = (lower - upper) * Complex::new(T::of(0.5), T::zero());
    }
    out
}

/// Fitted log-log slope of the H1-weighted tail terms over the top octave of
/// modes; `None` when the tail is already at roundoff level.
fn tail_slope<T: Real>(f: &FourierVector<T>) -> Option<T> {
    let n = f.half_width();
    if n < 8 {
        return None;
    }
    let scale: T = f
        .coeffs()
        .iter()
        .map(|c| c.norm_sqr())
        .fold(T::zero(), T::max);
    let floor = scale * T::of(1e-24) + T::of(1e-300);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for k in (n / 2).max(1)..=n {
        let kk = k as i64;
        let term =
            (T::one() + T::of_i64(kk * kk)) * (f.coeff(kk).norm_sqr() + f.coeff(-kk).norm_sqr());
        if term > floor {
            xs.push(T::of_usize(k).ln());
            ys.push(term.ln());
        }
    }
    if xs.len() < 4 {
        // Tail is numerically zero: decayed.
        return None;
    }
    let n_pts = T::of_usize(xs.len());
    let mx = xs.iter().copied().sum::<T>() / n_pts;
    let my = ys.iter().copied().sum::<T>() / n_pts;
    let mut num = T::zero();
    let mut den = T::zero();
    for (x, y) in xs.iter().zip(&ys) {
        num += (*x - mx) * (*y - my);
        den += (*x - mx) * (*x - mx);
    }
    Some(num / den)
}

/// Decide membership in the domain of L by a tail-decay test: the
/// H1-weighted tail terms of f and of sin(x) f' must decay at a summable
/// rate (fitted slope below -1 with margin 0.1).
pub fn domain_membership<T: Real>(f: &FourierVector<T>) -> DomainDiagnostic<T> {
    let two_pi = T::of(2.0) * T::PI();
    let h1_norm_sq = {
        let s: T = f
            .coeffs()
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let n = T::of_i64(f.mode_of(i));
                (T::one() + n * n) * c.norm_sqr()
            })
            .sum();
        s * two_pi
    };
    let g = sin_times_derivative(f);
    let weighted_norm_sq = {
        let s: T = g
            .coeffs()
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let n = T::of_i64(g.mode_of(i));
                (T::one() + n * n) * c.norm_sqr()
            })
            .sum();
        s * two_pi
    };
    let summable = |slope: Option<T>| match slope {
        None => true,
        Some(s) => s < T::of(-1.1),
    };
    let in_domain = summable(tail_slope(f)) && summable(tail_slope(&g));
    DomainDiagnostic {
        h1_norm_sq,
        weighted_norm_sq,
        total_norm_sq: h1_norm_sq + weighted_norm_sq,
        in_domain,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    fn params(a: f64, b: f64) -> OperatorParams<f64> {
        OperatorParams::new(a, b).unwrap()
    }

    #[test]
    fn s_is_diagonal_derivative() {
        let s = assemble(&params(0.3, 1.0), 8, OperatorKind::S).unwrap();
        assert_eq!(s.entry(3, 3), Complex64::new(0.0, 3.0));
        assert_eq!(s.entry(4, 3), Complex64::new(0.0, 0.0));
        assert_eq!(s.entry(-5, -5), Complex64::new(0.0, -5.0));
    }

    #[test]
    fn m_stencil_matches_quadrature_oracle() {
        let p = params(0.3, 1.0);
        let m = assemble(&p, 8, OperatorKind::M).unwrap();
        // Column n = 2 stated values.
        assert_abs_diff_eq!(m.entry(3, 2).re, 0.85, epsilon = 1e-15);
        assert_abs_diff_eq!(m.entry(1, 2).re, -1.15, epsilon = 1e-15);
        assert_abs_diff_eq!(m.entry(2, 2).re, 1.0, epsilon = 1e-15);
        let quad = assemble_quadrature(&p, 8, OperatorKind::M, 4096).unwrap();
        let dense = m.to_dense();
        for ((i, j), v) in dense.indexed_iter() {
            assert!(
                (v - quad[[i, j]]).norm() < 1e-12,
                "mismatch at ({i}, {j}): {v} vs {}",
                quad[[i, j]]
            );
        }
    }

    #[test]
    fn all_kinds_match_quadrature_oracle() {
        let p = params(0.2, 1.2);
        for kind in [
            OperatorKind::S,
            OperatorKind::M,
            OperatorKind::Mstar,
            OperatorKind::D,
            OperatorKind::C,
            OperatorKind::L,
        ] {
            let band = assemble(&p, 6, kind).unwrap();
            let quad = assemble_quadrature(&p, 6, kind, 1024).unwrap();
            let dense = band.to_dense();
            for ((i, j), v) in dense.indexed_iter() {
                assert!(
                    (v - quad[[i, j]]).norm() < 1e-12,
                    "{:?} mismatch at ({i}, {j})",
                    kind
                );
            }
        }
    }

    #[test]
    fn l_column_zero_is_a_sin_x() {
        // L . 1 = a sin x: only m = +-1 entries, values -+ i a / 2.
        let l = assemble(&params(0.3, 1.0), 8, OperatorKind::L).unwrap();
        assert_abs_diff_eq!(l.entry(1, 0).im, -0.15, epsilon = 1e-15);
        assert_abs_diff_eq!(l.entry(-1, 0).im, 0.15, epsilon = 1e-15);
        assert_eq!(l.entry(0, 0), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn row_zero_of_l_vanishes() {
        for (a, b) in [(0.0, 1.0), (0.3, 1.0), (0.45, 1.0)] {
            let l = assemble(&params(a, b), 16, OperatorKind::L).unwrap();
            for n in -16i64..=16 {
                assert_eq!(l.entry(0, n), Complex64::new(0.0, 0.0), "(a,b)=({a},{b})");
            }
        }
    }

    #[test]
    fn apply_s_kills_constant_and_m_gives_one_minus_a_cos() {
        let p = params(0.3, 1.0);
        let s = assemble(&p, 8, OperatorKind::S).unwrap();
        let m = assemble(&p, 8, OperatorKind::M).unwrap();
        let one = FourierVector::constant(8, Complex64::new(1.0, 0.0));
        let sy = s.apply(&one).unwrap();
        assert!(sy.l2_norm() < 1e-15);
        let my = m.apply(&one).unwrap();
        assert_abs_diff_eq!(my.coeff(0).re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(my.coeff(1).re, -0.15, epsilon = 1e-15);
        assert_abs_diff_eq!(my.coeff(-1).re, -0.15, epsilon = 1e-15);
    }

    #[test]
    fn apply_l_to_cos_matches_pointwise_oracle() {
        // l[cos x] evaluated pointwise, analyzed, compared to the band apply.
        let p = params(0.3, 1.0);
        let n = 8;
        let l = assemble(&p, n, OperatorKind::L).unwrap();
        let mut cosv = FourierVector::zeros(n);
        *cosv.coeff_mut(1) = Complex64::new(0.5, 0.0);
        *cosv.coeff_mut(-1) = Complex64::new(0.5, 0.0);
        let applied = l.apply(&cosv).unwrap();
        let (a, b) = (p.a(), p.b());
        let nodes = uniform_grid::<f64>(2048);
        let g = GridFunction::sample(nodes, |x| {
            // l[cos x] = a sin x cos x + (1 - a cos x)(-sin x) + b cos x (-sin x) + b sin x (-cos x)
            let v = a * x.sin() * x.cos() - (1.0 - a * x.cos()) * x.sin()
                - b * x.cos() * x.sin()
                - b * x.sin() * x.cos();
            Complex64::new(v, 0.0)
        })
        .unwrap();
        let oracle = analyze(&g, n).unwrap();
        for i in 0..applied.len() {
            assert!((applied.coeffs()[i] - oracle.coeffs()[i]).norm() < 1e-10);
        }
    }

    #[test]
    fn adjoint_and_hermitian_parts() {
        for (a, b) in [(0.3, 1.0), (0.0, 1.0)] {
            let p = params(a, b);
            for n in [16usize, 32] {
                assert!(adjoint_check(&p, n).unwrap() <= 1e-13);
                let c = assemble(&p, n, OperatorKind::C).unwrap();
                assert!(c.hermitian_defect() <= 1e-13);
                let d = assemble(&p, n, OperatorKind::D).unwrap();
                assert!(d.hermitian_defect() <= 1e-13);
                // D equals the Hermitian part of M entrywise.
                let m = assemble(&p, n, OperatorKind::M).unwrap();
                let nn = n as i64;
                for col in -nn..=nn {
                    for row in (col - 1).max(-nn)..=(col + 1).min(nn) {
                        let herm = (m.entry(row, col) + m.entry(col, row).conj()) * 0.5;
                        assert!((herm - d.entry(row, col)).norm() <= 1e-13);
                    }
                }
            }
        }
    }

    #[test]
    fn product_identity_on_interior_modes() {
        let p = params(0.3, 1.0);
        let n = 16usize;
        let s = assemble(&p, n, OperatorKind::S).unwrap().to_dense();
        let m = assemble(&p, n, OperatorKind::M).unwrap().to_dense();
        let l = assemble(&p, n, OperatorKind::L).unwrap().to_dense();
        let prod = s.dot(&m);
        let nn = n as i64;
        for col in -(nn - 1)..=(nn - 1) {
            for row in -nn..=nn {
                let i = (row + nn) as usize;
                let j = (col + nn) as usize;
                assert!((prod[[i, j]] - l[[i, j]]).norm() <= 1e-13);
            }
        }
    }

    #[test]
    fn domain_membership_single_mode() {
        let f = FourierVector::mode(32, 1, Complex64::new(1.0, 0.0));
        let d = domain_membership(&f);
        assert!(d.in_domain);
        assert_abs_diff_eq!(d.h1_norm_sq, 4.0 * std::f64::consts::PI, epsilon = 1e-12);
        assert_abs_diff_eq!(
            d.total_norm_sq,
            d.h1_norm_sq + d.weighted_norm_sq,
            epsilon = 1e-12
        );
    }

    #[test]
    fn domain_membership_rejects_slow_decay() {
        let n = 256;
        let mut f = FourierVector::zeros(n);
        for k in -(n as i64)..=(n as i64) {
            *f.coeff_mut(k) = Complex64::new(1.0 / (1.0 + k.abs() as f64), 0.0);
        }
        assert!(!domain_membership(&f).in_domain);
    }

    #[test]
    fn unknown_kind_and_small_n_rejected() {
        assert!(OperatorKind::parse("Q").is_err());
        assert!(assemble(&params(0.3, 1.0), 1, OperatorKind::M).is_err());
    }
}
