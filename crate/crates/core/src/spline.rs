//! Natural cubic splines on a uniform knot grid.
//!
//! The second-derivative system of a natural spline on uniform knots is the
//! same constant tridiagonal matrix for every data vector, so [`SplineGrid`]
//! factors it once and [`SplineGrid::fit`] only runs the two substitution
//! sweeps. Evaluation goes through a [`Stencil`], the four coefficients that
//! map `(y_i, y_{i+1}, y''_i, y''_{i+1})` to the value at a point; stencils
//! can be computed once and applied to many fits on the same grid.

use crate::error::{Error, Result};

/// Uniform knots `x_0 < ... < x_M` with a factored natural-spline system.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineGrid {
    x0: f64,
    h: f64,
    segments: usize,
    knots: Vec<f64>,
    // Thomas algorithm factors for the interior system
    // y''_{i-1} + 4 y''_i + y''_{i+1} = 6/h² (y_{i+1} - 2 y_i + y_{i-1}).
    inv_pivot: Vec<f64>,
}

impl SplineGrid {
    /// `segments + 1` equally spaced knots spanning `[x_min, x_max]`.
    pub fn build(x_min: f64, x_max: f64, segments: usize) -> Result<Self> {
        if !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "bounds must be finite, got [{x_min}, {x_max}]"
            )));
        }
        if x_min >= x_max {
            return Err(Error::InvalidGrid(format!(
                "lower bound {x_min} must be below upper bound {x_max}"
            )));
        }
        if segments < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 segments, got {segments}"
            )));
        }

        let h = (x_max - x_min) / segments as f64;
        let mut knots: Vec<f64> = (0..=segments).map(|i| x_min + i as f64 * h).collect();
        knots[segments] = x_max;

        // Interior unknowns 1..M-1; inv_pivot[i] = 1 / modified diagonal.
        let interior = segments - 1;
        let mut inv_pivot = vec![0.0; interior];
        let mut upper_prev = 0.0;
        for (i, slot) in inv_pivot.iter_mut().enumerate() {
            let diag = if i == 0 { 4.0 } else { 4.0 - upper_prev };
            *slot = 1.0 / diag;
            upper_prev = *slot;
        }

        Ok(SplineGrid {
            x0: x_min,
            h,
            segments,
            knots,
            inv_pivot,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn segments(&self) -> usize {
        self.segments
    }

    pub fn lower(&self) -> f64 {
        self.knots[0]
    }

    pub fn upper(&self) -> f64 {
        self.knots[self.segments]
    }

    /// Fits the natural spline through `values` (one per knot).
    pub fn fit(&self, values: Vec<f64>) -> Result<SplineFit<'_>> {
        if values.len() != self.segments + 1 {
            return Err(Error::InvalidData(format!(
                "expected {} values, got {}",
                self.segments + 1,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite value {} at knot {i}",
                values[i]
            )));
        }
        Ok(self.fit_unchecked(values))
    }

    /// Fit without input validation; callers guarantee length and finiteness.
    pub(crate) fn fit_unchecked(&self, values: Vec<f64>) -> SplineFit<'_> {
        let m = self.segments;
        let scale = 6.0 / (self.h * self.h);
        let mut second = vec![0.0; m + 1];

        // Forward sweep.
        for i in 1..m {
            let rhs = scale * (values[i + 1] - 2.0 * values[i] + values[i - 1]);
            let carried = if i > 1 { second[i - 1] } else { 0.0 };
            second[i] = (rhs - carried) * self.inv_pivot[i - 1];
        }
        // Back substitution; the superdiagonal is 1.
        for i in (1..m - 1).rev() {
            second[i] -= self.inv_pivot[i - 1] * second[i + 1];
        }

        SplineFit {
            grid: self,
            values,
            second,
        }
    }

    /// Coefficients for evaluating any fit on this grid at `x`.
    ///
    /// Inside the knot range this is the usual cubic segment; outside it the
    /// spline is continued linearly with the value and slope of the nearest
    /// end knot.
    pub fn stencil(&self, x: f64) -> Stencil {
        let m = self.segments;
        let h = self.h;
        if x < self.knots[0] {
            let d = x - self.knots[0];
            return Stencil {
                index: 0,
                weights: [1.0 - d / h, d / h, -d * h / 3.0, -d * h / 6.0],
            };
        }
        if x > self.knots[m] {
            let d = x - self.knots[m];
            return Stencil {
                index: m - 1,
                weights: [-d / h, 1.0 + d / h, d * h / 6.0, d * h / 3.0],
            };
        }

        let pos = (x - self.x0) / h;
        let mut i = (pos.floor() as usize).min(m - 1);
        // Guard against rounding placing x just outside segment i.
        if i + 1 < m && x >= self.knots[i + 1] {
            i += 1;
        } else if i > 0 && x < self.knots[i] {
            i -= 1;
        }
        let b = ((x - self.knots[i]) / h).clamp(0.0, 1.0);
        let a = 1.0 - b;
        let c = h * h / 6.0;
        Stencil {
            index: i,
            weights: [a, b, (a * a * a - a) * c, (b * b * b - b) * c],
        }
    }
}

/// Precomputed evaluation coefficients at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stencil {
    index: usize,
    weights: [f64; 4],
}

impl Stencil {
    /// Stencil that returns the value at knot `index` exactly.
    pub fn at_knot(index: usize, segments: usize) -> Self {
        if index == segments {
            Stencil {
                index: index - 1,
                weights: [0.0, 1.0, 0.0, 0.0],
            }
        } else {
            Stencil {
                index,
                weights: [1.0, 0.0, 0.0, 0.0],
            }
        }
    }
}

/// Natural cubic spline through one data vector on a [`SplineGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SplineFit<'g> {
    grid: &'g SplineGrid,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl<'g> SplineFit<'g> {
    pub fn grid(&self) -> &'g SplineGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn second_derivatives(&self) -> &[f64] {
        &self.second
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_stencil(&self.grid.stencil(x))
    }

    #[inline]
    pub fn eval_stencil(&self, s: &Stencil) -> f64 {
        let i = s.index;
        let w = &s.weights;
        w[0] * self.values[i]
            + w[1] * self.values[i + 1]
            + w[2] * self.second[i]
            + w[3] * self.second[i + 1]
    }

    /// First derivative; one-sided at knots is resolved toward the segment
    /// on the right, except at the last knot.
    pub fn derivative(&self, x: f64) -> f64 {
        let m = self.grid.segments;
        let h = self.grid.h;
        let knots = &self.grid.knots;
        let (y, s) = (&self.values, &self.second);
        let end_slope_left = (y[1] - y[0]) / h - h / 6.0 * (2.0 * s[0] + s[1]);
        let end_slope_right = (y[m] - y[m - 1]) / h + h / 6.0 * (s[m - 1] + 2.0 * s[m]);
        if x < knots[0] {
            return end_slope_left;
        }
        if x > knots[m] {
            return end_slope_right;
        }
        let i = (((x - self.grid.x0) / h).floor() as usize).min(m - 1);
        self.segment_derivative(i, x)
    }

    /// Derivative of the cubic on segment `i` at `x`.
    pub fn segment_derivative(&self, i: usize, x: f64) -> f64 {
        let h = self.grid.h;
        let b = (x - self.grid.knots[i]) / h;
        let a = 1.0 - b;
        let (y, s) = (&self.values, &self.second);
        (y[i + 1] - y[i]) / h - (3.0 * a * a - 1.0) * h / 6.0 * s[i]
            + (3.0 * b * b - 1.0) * h / 6.0 * s[i + 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Assembles and solves the full natural-spline system densely, then
    /// evaluates the resulting cubic at `x`.
    fn dense_natural_spline(xs: &[f64], ys: &[f64], x: f64) -> f64 {
        let n = xs.len();
        let mut a = vec![vec![0.0; n + 1]; n];
        a[0][0] = 1.0;
        a[n - 1][n - 1] = 1.0;
        for i in 1..n - 1 {
            let h0 = xs[i] - xs[i - 1];
            let h1 = xs[i + 1] - xs[i];
            a[i][i - 1] = h0 / 6.0;
            a[i][i] = (h0 + h1) / 3.0;
            a[i][i + 1] = h1 / 6.0;
            a[i][n] = (ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0;
        }
        // Gauss-Jordan with partial pivoting on the augmented matrix.
        for c in 0..n {
            let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
            a.swap(c, p);
            for r in 0..n {
                if r != c {
                    let f = a[r][c] / a[c][c];
                    for k in c..=n {
                        a[r][k] -= f * a[c][k];
                    }
                }
            }
        }
        let m2: Vec<f64> = (0..n).map(|i| a[i][n] / a[i][i]).collect();
        let i = xs.windows(2).position(|w| x >= w[0] && x <= w[1]).unwrap();
        let h = xs[i + 1] - xs[i];
        let (t0, t1) = (xs[i + 1] - x, x - xs[i]);
        m2[i] * t0.powi(3) / (6.0 * h)
            + m2[i + 1] * t1.powi(3) / (6.0 * h)
            + (ys[i] / h - m2[i] * h / 6.0) * t0
            + (ys[i + 1] / h - m2[i + 1] * h / 6.0) * t1
    }

    #[test]
    fn uniform_knots() {
        let g = SplineGrid::build(0.0, 1.0, 4).unwrap();
        assert_eq!(g.knots(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn log_wealth_grid() {
        let lo = (1e-10f64 / 100.0).ln();
        let hi = 5.0 * 0.2 * 10f64.sqrt();
        let g = SplineGrid::build(lo, hi, 400).unwrap();
        assert_eq!(g.knots().len(), 401);
        assert!((g.spacing() - (hi - lo) / 400.0).abs() < 1e-15);
        assert_eq!(g.upper(), hi);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(SplineGrid::build(0.0, 1.0, 2).is_err());
        assert!(SplineGrid::build(1.0, 1.0, 10).is_err());
        assert!(SplineGrid::build(f64::NEG_INFINITY, 1.0, 10).is_err());
        assert!(SplineGrid::build(0.0, f64::NAN, 10).is_err());
    }

    #[test]
    fn rejects_bad_data() {
        let g = SplineGrid::build(0.0, 1.0, 4).unwrap();
        assert!(g.fit(vec![0.0; 4]).is_err());
        assert!(g.fit(vec![0.0, 1.0, f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn linear_data_is_reproduced_everywhere() {
        let g = SplineGrid::build(-2.0, 3.0, 20).unwrap();
        let f = |x: f64| 1.5 - 0.75 * x;
        let fit = g.fit(g.knots().iter().map(|&x| f(x)).collect()).unwrap();
        for k in 0..=200 {
            let x = -4.0 + k as f64 * 0.045;
            assert!((fit.eval(x) - f(x)).abs() <= 1e-12 * f(x).abs().max(1.0), "x={x}");
        }
    }

    #[test]
    fn constant_data() {
        let g = SplineGrid::build(0.0, 10.0, 7).unwrap();
        let fit = g.fit(vec![7.0; 8]).unwrap();
        for x in [-3.0, 0.0, 0.1, 4.4, 10.0, 12.0] {
            assert!((fit.eval(x) - 7.0).abs() < 1e-14);
        }
    }

    #[test]
    fn sin_error_is_fourth_order() {
        let probe_error = |m: usize| {
            let g = SplineGrid::build(0.0, std::f64::consts::PI, m).unwrap();
            let fit = g.fit(g.knots().iter().map(|x| x.sin()).collect()).unwrap();
            (0..=10_000)
                .map(|k| {
                    let x = std::f64::consts::PI * k as f64 / 10_000.0;
                    (fit.eval(x) - x.sin()).abs()
                })
                .fold(0.0, f64::max)
        };
        let ratio = probe_error(50) / probe_error(100);
        assert!((14.0..18.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn matches_dense_system_between_knots() {
        let g = SplineGrid::build(-1.0, 2.0, 12).unwrap();
        let f = |x: f64| x * x * x - 2.0 * x * x + 0.5;
        let ys: Vec<f64> = g.knots().iter().map(|&x| f(x)).collect();
        let fit = g.fit(ys.clone()).unwrap();
        for i in 0..12 {
            let x = 0.5 * (g.knots()[i] + g.knots()[i + 1]);
            let want = dense_natural_spline(g.knots(), &ys, x);
            assert!((fit.eval(x) - want).abs() < 1e-10, "x={x}");
        }
    }

    #[test]
    fn natural_boundary_and_smoothness() {
        let g = SplineGrid::build(0.0, 4.0, 16).unwrap();
        let fit = g.fit(g.knots().iter().map(|x| (x * 1.3).exp()).collect()).unwrap();
        assert_eq!(fit.second_derivatives()[0], 0.0);
        assert_eq!(fit.second_derivatives()[16], 0.0);
        for i in 1..16 {
            let x = g.knots()[i];
            let left = fit.segment_derivative(i - 1, x);
            let right = fit.segment_derivative(i, x);
            assert!((left - right).abs() <= 1e-10 * left.abs().max(1.0), "knot {i}");
        }
    }

    #[test]
    fn extrapolation_is_linear_from_end_slope() {
        let g = SplineGrid::build(0.0, 1.0, 10).unwrap();
        let fit = g.fit(g.knots().iter().map(|x| x * x).collect()).unwrap();
        let top = fit.eval(1.0);
        let slope = fit.derivative(1.0);
        assert!((fit.eval(1.5) - (top + 0.5 * slope)).abs() < 1e-12);
        let bottom = fit.eval(0.0);
        let slope0 = fit.derivative(0.0);
        assert!((fit.eval(-0.25) - (bottom - 0.25 * slope0)).abs() < 1e-12);
    }

    #[test]
    fn knot_stencils_are_exact() {
        let g = SplineGrid::build(0.0, 1.0, 5).unwrap();
        let ys = vec![3.0, -1.0, 4.0, 1.0, 5.0, 9.0];
        let fit = g.fit(ys.clone()).unwrap();
        for (i, y) in ys.iter().enumerate() {
            assert_eq!(fit.eval_stencil(&Stencil::at_knot(i, 5)), *y);
        }
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn interpolates_at_knots(ys in prop::collection::vec(-1e3f64..1e3, 4..60)) {
                let m = ys.len() - 1;
                let g = SplineGrid::build(-3.0, 5.0, m).unwrap();
                let fit = g.fit(ys.clone()).unwrap();
                for (i, y) in ys.iter().enumerate() {
                    let got = fit.eval(g.knots()[i]);
                    prop_assert!((got - y).abs() <= 1e-12 * y.abs().max(1.0));
                }
            }

            #[test]
            fn linear_reproduction(a in -50f64..50.0, b in -5f64..5.0, m in 3usize..80, x in -20f64..20.0) {
                let g = SplineGrid::build(-4.0, 6.0, m).unwrap();
                let fit = g.fit(g.knots().iter().map(|&k| a + b * k).collect()).unwrap();
                let want = a + b * x;
                prop_assert!((fit.eval(x) - want).abs() <= 1e-10 * (a.abs() + (b * x).abs()).max(1.0));
            }
        }
    }
}
