//! Physical-space samples of a function on [-pi, pi].

use std::io::{BufRead, Write};

use num_complex::Complex;

use crate::error::{CoreError, Result};
use crate::scalar::{Real, C};

/// Samples of a complex-valued function on strictly increasing nodes
/// in [-pi, pi].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<T: Real> {
    nodes: Vec<T>,
    values: Vec<C<T>>,
}

impl<T: Real> GridFunction<T> {
    pub fn new(nodes: Vec<T>, values: Vec<C<T>>) -> Result<Self> {
        if nodes.len() != values.len() {
            return Err(CoreError::DimensionMismatch(format!(
                "{} nodes vs {} values",
                nodes.len(),
                values.len()
            )));
        }
        if nodes.is_empty() {
            return Err(CoreError::InvalidInput("empty grid".into()));
        }
        let bound = T::PI() + T::of(1e-12);
        for w in nodes.windows(2) {
            if w[1] <= w[0] {
                return Err(CoreError::InvalidInput(
                    "nodes must be strictly increasing".into(),
                ));
            }
        }
        if nodes[0] < -bound || *nodes.last().unwrap() > bound {
            return Err(CoreError::InvalidInput(
                "nodes must lie in [-pi, pi]".into(),
            ));
        }
        Ok(Self { nodes, values })
    }

    /// Sample a function on the given nodes.
    pub fn sample(nodes: Vec<T>, f: impl Fn(T) -> C<T>) -> Result<Self> {
        let values = nodes.iter().map(|&x| f(x)).collect();
        Self::new(nodes, values)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn values(&self) -> &[C<T>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C<T>] {
        &mut self.values
    }

    /// Check that the grid is x_j = -pi + 2 pi j / P (analysis requires it).
    pub fn require_uniform_periodic(&self) -> Result<()> {
        let p = self.nodes.len();
        let two_pi = T::of(2.0) * T::PI();
        let tol = T::of(1e-9);
        for (j, &x) in self.nodes.iter().enumerate() {
            let expect = -T::PI() + two_pi * T::of_usize(j) / T::of_usize(p);
            if (x - expect).abs() > tol {
                return Err(CoreError::InvalidInput(format!(
                    "node {j} = {x} is not on the uniform periodic grid"
                )));
            }
        }
        Ok(())
    }

    /// Trapezoidal integral over [-pi, pi], treating the function as
    /// periodic (the wrap-around panel closes the interval).
    pub fn periodic_trapezoid(&self) -> C<T> {
        let two_pi = T::of(2.0) * T::PI();
        let p = self.nodes.len();
        let mut acc = Complex::new(T::zero(), T::zero());
        for j in 0..p {
            let next = (j + 1) % p;
            let dx = if next == 0 {
                self.nodes[0] + two_pi - self.nodes[j]
            } else {
                self.nodes[next] - self.nodes[j]
            };
            acc = acc + (self.values[j] + self.values[next]) * Complex::new(dx / T::of(2.0), T::zero());
        }
        acc
    }

    /// Write in the CSV interchange format: header `x,re,im`, one row per node.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,re,im")?;
        for (x, v) in self.nodes.iter().zip(&self.values) {
            writeln!(w, "{:.17e},{:.17e},{:.17e}", x, v.re, v.im)?;
        }
        Ok(())
    }

    /// Read the `x,re,im` CSV format.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut nodes = Vec::new();
        let mut values = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if i == 0 && line.starts_with('x') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(CoreError::InvalidInput(format!(
                    "line {}: expected 3 fields, got {}",
                    i + 1,
                    fields.len()
                )));
            }
            let parse = |s: &str| -> Result<T> {
                s.trim()
                    .parse::<f64>()
                    .map(T::of)
                    .map_err(|e| CoreError::InvalidInput(format!("line {}: {e}", i + 1)))
            };
            nodes.push(parse(fields[0])?);
            values.push(Complex::new(parse(fields[1])?, parse(fields[2])?));
        }
        Self::new(nodes, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::uniform_grid;
    use num_complex::Complex64;

    #[test]
    fn rejects_bad_grids() {
        let c0 = Complex64::new(0.0, 0.0);
        assert!(GridFunction::<f64>::new(vec![], vec![]).is_err());
        assert!(GridFunction::new(vec![0.0, 0.0], vec![c0, c0]).is_err());
        assert!(GridFunction::new(vec![1.0, 0.5], vec![c0, c0]).is_err());
        assert!(GridFunction::new(vec![-4.0, 0.0], vec![c0, c0]).is_err());
        assert!(GridFunction::new(vec![0.0], vec![c0, c0]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let g = GridFunction::sample(uniform_grid::<f64>(9), |x| {
            Complex64::new(x.cos(), x.sin())
        })
        .unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x,re,im\n"));
        assert!(!text.contains('\r'));
        let h = GridFunction::<f64>::read_csv(&buf[..]).unwrap();
        assert_eq!(g, h);
    }

    #[test]
    fn trapezoid_integrates_constant() {
        let g = GridFunction::sample(uniform_grid::<f64>(31), |_| Complex64::new(1.0, 0.0))
            .unwrap();
        let v = g.periodic_trapezoid();
        assert!((v.re - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    }
}
