//! Gauss-Legendre quadrature with geometrically graded panels, used to
//! evaluate the singular-endpoint integrals of the closed-form inverse.

use crate::error::{CoreError, Result};
use crate::scalar::Real;

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre polynomial from the Chebyshev initial guess.
pub fn gauss_legendre<T: Real>(order: usize) -> Result<(Vec<T>, Vec<T>)> {
    if order == 0 {
        return Err(CoreError::InvalidInput("quadrature order must be >= 1".into()));
    }
    let n = order;
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    for k in 0..n {
        // Initial guess: Chebyshev-like root.
        let mut x = (T::PI() * (T::of_usize(k) + T::of(0.75))
            / (T::of_usize(n) + T::of(0.5)))
        .cos();
        for _ in 0..100 {
            // Evaluate P_n and P_n' by the three-term recurrence.
            let mut p0 = T::one();
            let mut p1 = x;
            for j in 2..=n {
                let jf = T::of_usize(j);
                let p2 = ((T::of(2.0) * jf - T::one()) * x * p1 - (jf - T::one()) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { p1 } else { p1 };
            let dpn = T::of_usize(n) * (x * p1 - p0) / (x * x - T::one());
            let dx = pn / dpn;
            x = x - dx;
            if dx.abs() < T::epsilon() * T::of(4.0) {
                break;
            }
        }
        // Recompute P_{n-1} at the converged node for the weight formula.
        let mut p0 = T::one();
        let mut p1 = x;
        for j in 2..=n {
            let jf = T::of_usize(j);
            let p2 = ((T::of(2.0) * jf - T::one()) * x * p1 - (jf - T::one()) * p0) / jf;
            p0 = p1;
            p1 = p2;
        }
        let dpn = T::of_usize(n) * (x * p1 - p0) / (x * x - T::one());
        nodes[k] = x;
        weights[k] = T::of(2.0) / ((T::one() - x * x) * dpn * dpn);
    }
    nodes.reverse();
    weights.reverse();
    Ok((nodes, weights))
}

/// Panel [lo, hi] mapped Gauss rule.
pub fn panel_rule<T: Real>(nodes: &[T], weights: &[T], lo: T, hi: T) -> (Vec<T>, Vec<T>) {
    let half = (hi - lo) * T::of(0.5);
    let mid = (hi + lo) * T::of(0.5);
    let xs = nodes.iter().map(|&t| mid + half * t).collect();
    let ws = weights.iter().map(|&w| w * half).collect();
    (xs, ws)
}

/// Panel boundaries on [lo, hi] geometrically graded toward `lo`:
/// the panel nearest `lo` has width (hi - lo) * ratio^(panels - 1)
/// (up to normalization), successive panels grow by 1/ratio.
pub fn graded_breakpoints<T: Real>(lo: T, hi: T, panels: usize, ratio: T) -> Vec<T> {
    assert!(panels >= 1);
    let len = hi - lo;
    // Widths proportional to ratio^(panels-1-i), i = 0 nearest lo.
    let mut widths = Vec::with_capacity(panels);
    let mut w = T::one();
    for _ in 0..panels {
        widths.push(w);
        w = w / ratio;
    }
    let total: T = widths.iter().copied().sum();
    let mut pts = Vec::with_capacity(panels + 1);
    let mut acc = T::zero();
    pts.push(lo);
    for w in &widths {
        acc += *w / total;
        pts.push(lo + len * acc.min(T::one()));
    }
    *pts.last_mut().unwrap() = hi;
    pts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_integrates_polynomials_exactly() {
        let (xs, ws) = gauss_legendre::<f64>(8).unwrap();
        // Degree up to 2*8 - 1 = 15 exact.
        for deg in 0..=15usize {
            let num: f64 = xs.iter().zip(&ws).map(|(x, w)| w * x.powi(deg as i32)).sum();
            let exact = if deg % 2 == 1 {
                0.0
            } else {
                2.0 / (deg as f64 + 1.0)
            };
            assert!((num - exact).abs() < 1e-13, "degree {deg}: {num} vs {exact}");
        }
    }

    #[test]
    fn gauss_weights_sum_to_two() {
        for order in [1usize, 2, 5, 16, 40] {
            let (_, ws) = gauss_legendre::<f64>(order).unwrap();
            assert!((ws.iter().sum::<f64>() - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn panel_rule_integrates_exp() {
        let (xs, ws) = gauss_legendre::<f64>(16).unwrap();
        let (nodes, weights) = panel_rule(&xs, &ws, 0.0, 1.0);
        let num: f64 = nodes.iter().zip(&weights).map(|(x, w)| w * x.exp()).sum();
        assert!((num - (1.0f64.exp() - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn graded_breakpoints_cover_and_cluster() {
        let pts = graded_breakpoints(0.0, 1.0, 10, 0.5);
        assert_eq!(pts.len(), 11);
        assert_eq!(pts[0], 0.0);
        assert_eq!(pts[10], 1.0);
        for w in pts.windows(2) {
            assert!(w[1] > w[0]);
        }
        // First panel much smaller than the last.
        assert!(pts[1] - pts[0] < (pts[10] - pts[9]) / 100.0);
    }
}
