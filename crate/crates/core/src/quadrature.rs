//! Gauss-Hermite rules and moment-matched quadrature weights.
//!
//! A [`HermiteRule`] of order `q` integrates `e^{-x^2} f(x)` over the real line
//! exactly for polynomials `f` of degree up to `2q - 1`. The moment-matched
//! variant keeps the Hermite abscissas but replaces the weights with the
//! solution of a small linear system, so that the rule reproduces a supplied
//! set of central moments of the transition law instead of relying on its
//! density.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Largest order accepted by [`gh_rule`].
pub const MAX_ORDER: usize = 64;

/// Largest order accepted by [`moment_matched_weights`]; the power matrix
/// becomes too ill-conditioned beyond this.
pub const MAX_MOMENT_ORDER: usize = 16;

/// Rejection threshold for the 1-norm condition estimate of the
/// equilibrated moment system.
const MAX_CONDITION: f64 = 1e13;

/// Relative residual each matched moment equation must satisfy.
const MOMENT_RESIDUAL_TOL: f64 = 1e-9;

const NEWTON_EPS: f64 = 1e-14;
const NEWTON_MAX_ITER: usize = 100;

/// Abscissas and weights of a Gauss-Hermite rule for the weight `e^{-x^2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteRule {
    abscissas: Vec<f64>,
    weights: Vec<f64>,
}

impl HermiteRule {
    pub fn order(&self) -> usize {
        self.abscissas.len()
    }

    /// Roots of `H_q`, strictly increasing.
    pub fn abscissas(&self) -> &[f64] {
        &self.abscissas
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Approximates `∫ e^{-x^2} f(x) dx`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.abscissas
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Builds the `q`-point Gauss-Hermite rule.
///
/// Roots are found by Newton iteration on the orthonormal Hermite recurrence,
/// starting from the usual asymptotic guesses for the largest roots and
/// extrapolating inward. Only the non-negative half is computed; the other
/// half is mirrored so the rule is exactly antisymmetric.
pub fn gh_rule(q: usize) -> Result<HermiteRule> {
    if q == 0 || q > MAX_ORDER {
        return Err(Error::InvalidOrder {
            order: q,
            max: MAX_ORDER,
        });
    }

    let n = q as f64;
    let half = (q + 1) / 2;
    // Descending roots of the upper half, and their weights.
    let mut roots = vec![0.0; half];
    let mut weights = vec![0.0; half];
    let mut z = 0.0;

    for i in 0..half {
        z = match i {
            0 => (2.0 * n + 1.0).sqrt() - 1.85575 * (2.0 * n + 1.0).powf(-0.16667),
            1 => z - 1.14 * n.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * roots[0],
            3 => 1.91 * z - 0.91 * roots[1],
            _ => 2.0 * z - roots[i - 2],
        };
        if q % 2 == 1 && i == half - 1 {
            // Odd orders have an exact root at the origin.
            z = 0.0;
        }

        let mut derivative = 0.0;
        for _ in 0..NEWTON_MAX_ITER {
            let (p, dp) = orthonormal_hermite(q, z);
            derivative = dp;
            let step = p / dp;
            z -= step;
            if step.abs() <= NEWTON_EPS * z.abs().max(1.0) {
                break;
            }
        }
        // Refresh the derivative at the converged root.
        let (_, dp) = orthonormal_hermite(q, z);
        if dp.is_finite() && dp != 0.0 {
            derivative = dp;
        }
        roots[i] = z;
        weights[i] = 2.0 / (derivative * derivative);
    }

    let mut abscissas = vec![0.0; q];
    let mut w = vec![0.0; q];
    for i in 0..half {
        abscissas[q - 1 - i] = roots[i];
        abscissas[i] = -roots[i];
        w[q - 1 - i] = weights[i];
        w[i] = weights[i];
    }
    if q % 2 == 1 {
        abscissas[q / 2] = 0.0;
    }

    Ok(HermiteRule {
        abscissas,
        weights: w,
    })
}

/// Evaluates the orthonormal Hermite polynomial of degree `q` and the
/// scaled derivative used by the weight formula, at `x`.
fn orthonormal_hermite(q: usize, x: f64) -> (f64, f64) {
    let mut p1 = PI.powf(-0.25);
    let mut p2 = 0.0;
    for j in 1..=q {
        let jf = j as f64;
        let p3 = p2;
        p2 = p1;
        p1 = x * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
    }
    (p1, (2.0 * q as f64).sqrt() * p2)
}

/// Central moment `E[(X - E X)^K]` of a normal variable with standard deviation `tau`.
pub fn normal_central_moment(tau: f64, k: u32) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k % 2 == 1 {
        return 0.0;
    }
    tau.powi(k as i32) * double_factorial(k - 1)
}

/// Central moments `K = 0..q-1` of a normal law with standard deviation `tau`.
pub fn normal_central_moments(tau: f64, q: usize) -> Vec<f64> {
    (0..q as u32).map(|k| normal_central_moment(tau, k)).collect()
}

fn double_factorial(n: u32) -> f64 {
    (1..=n).rev().step_by(2).map(f64::from).product()
}

/// Weights that make the scaled Hermite abscissas reproduce given moments.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentWeights {
    tau: f64,
    weights: Vec<f64>,
}

impl MomentWeights {
    pub fn order(&self) -> usize {
        self.weights.len()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Solves `Σ_i ω_i (τ ξ_i)^K = moments[K]` for `K = 0..q-1`.
///
/// Row `K` is divided by `τ^K` before elimination, so the solve itself works
/// on the well-scaled power matrix `ξ_i^K`; residuals are checked against the
/// original equations.
pub fn moment_matched_weights(rule: &HermiteRule, moments: &[f64], tau: f64) -> Result<MomentWeights> {
    let q = rule.order();
    if q > MAX_MOMENT_ORDER {
        return Err(Error::InvalidOrder {
            order: q,
            max: MAX_MOMENT_ORDER,
        });
    }
    if moments.len() != q {
        return Err(Error::InvalidArgument(format!(
            "expected {q} moments, got {}",
            moments.len()
        )));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidArgument(format!("tau must be positive, got {tau}")));
    }
    if moments.iter().any(|m| !m.is_finite()) {
        return Err(Error::InvalidArgument("moments must be finite".into()));
    }
    if (moments[0] - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "zeroth moment must be 1, got {}",
            moments[0]
        )));
    }

    let xi = rule.abscissas();
    let matrix: Vec<Vec<f64>> = (0..q)
        .map(|k| xi.iter().map(|&x| x.powi(k as i32)).collect())
        .collect();
    let rhs: Vec<f64> = moments
        .iter()
        .enumerate()
        .map(|(k, &m)| m / tau.powi(k as i32))
        .collect();

    let conditioning = |detail: String| Error::Conditioning { order: q, tau, detail };

    let lu = Lu::factor(matrix.clone()).ok_or_else(|| conditioning("singular moment matrix".into()))?;
    let cond = lu.condition_estimate(&matrix);
    if !(cond <= MAX_CONDITION) {
        return Err(conditioning(format!("condition estimate {cond:e}")));
    }

    let mut weights = lu.solve(&rhs);
    // One step of iterative refinement.
    let residual: Vec<f64> = (0..q)
        .map(|k| rhs[k] - dot(&matrix[k], &weights))
        .collect();
    let correction = lu.solve(&residual);
    for (w, c) in weights.iter_mut().zip(&correction) {
        *w += c;
    }

    for (k, &target) in moments.iter().enumerate() {
        let terms: Vec<f64> = xi
            .iter()
            .zip(&weights)
            .map(|(&x, &w)| w * (tau * x).powi(k as i32))
            .collect();
        let value: f64 = terms.iter().sum();
        let scale = terms.iter().map(|t| t.abs()).sum::<f64>().max(target.abs());
        if scale > 0.0 && (value - target).abs() > MOMENT_RESIDUAL_TOL * scale {
            return Err(conditioning(format!(
                "moment {k} residual {:e} exceeds tolerance",
                (value - target).abs() / scale
            )));
        }
    }

    Ok(MomentWeights { tau, weights })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Dense LU factorization with partial pivoting.
struct Lu {
    lu: Vec<Vec<f64>>,
    perm: Vec<usize>,
}

impl Lu {
    fn factor(mut a: Vec<Vec<f64>>) -> Option<Self> {
        let n = a.len();
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
            if a[pivot][col] == 0.0 || !a[pivot][col].is_finite() {
                return None;
            }
            a.swap(col, pivot);
            perm.swap(col, pivot);
            for row in col + 1..n {
                let factor = a[row][col] / a[col][col];
                a[row][col] = factor;
                for c in col + 1..n {
                    a[row][c] -= factor * a[col][c];
                }
            }
        }
        Some(Lu { lu: a, perm })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.len();
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] -= self.lu[i][j] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.lu[i][j] * x[j];
            }
            x[i] /= self.lu[i][i];
        }
        x
    }

    /// `‖A‖₁ ‖A⁻¹‖₁`, with the inverse formed column by column.
    fn condition_estimate(&self, a: &[Vec<f64>]) -> f64 {
        let n = a.len();
        let norm = |col: &dyn Fn(usize) -> Vec<f64>| {
            (0..n)
                .map(|j| col(j).iter().map(|v| v.abs()).sum::<f64>())
                .fold(0.0, f64::max)
        };
        let a_norm = norm(&|j| (0..n).map(|i| a[i][j]).collect());
        let inv_norm = norm(&|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            self.solve(&e)
        });
        a_norm * inv_norm
    }
}
