//! Root finding for the fair fee `α*` with `price(α*) = W0`.
//!
//! The price is decreasing in the fee. The default method is safeguarded
//! Newton: central-difference derivative, bracket tightened after every
//! evaluation, bisection whenever a Newton step would leave the bracket.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootMethod {
    /// Newton with bisection fallback.
    Hybrid,
    /// Unsafeguarded Newton; fails if an iterate leaves the search interval.
    Newton,
    Bisection,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeeSolverConfig {
    /// Absolute tolerance on `|price(α) - target|`.
    pub tolerance: f64,
    pub lower: f64,
    pub upper: f64,
    pub max_iterations: usize,
    /// Derivative bump as a fraction of the current fee.
    pub relative_bump: f64,
    /// Smallest derivative bump, in fee units.
    pub min_bump: f64,
    pub initial_guess: Option<f64>,
    pub method: RootMethod,
}

impl FeeSolverConfig {
    /// Defaults scaled to a premium of `premium`: tolerance `1e-6 · W0`,
    /// fee searched on `[0, 10%]`.
    pub fn for_premium(premium: f64) -> Self {
        FeeSolverConfig {
            tolerance: premium / 1e6,
            lower: 0.0,
            upper: 0.1,
            max_iterations: 50,
            relative_bump: 0.01,
            min_bump: 1e-5,
            initial_guess: None,
            method: RootMethod::Hybrid,
        }
    }

    pub fn with_method(mut self, method: RootMethod) -> Self {
        self.method = method;
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_bounds(mut self, lower: f64, upper: f64) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    pub fn with_initial_guess(mut self, guess: f64) -> Self {
        self.initial_guess = Some(guess);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) || !self.tolerance.is_finite() {
            return Err(Error::Config(format!("solver tolerance must be positive, got {}", self.tolerance)));
        }
        if !(self.lower >= 0.0 && self.upper > self.lower && self.upper.is_finite()) {
            return Err(Error::Config(format!(
                "fee search interval [{}, {}] is invalid",
                self.lower, self.upper
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("solver needs at least one iteration".into()));
        }
        if !(self.relative_bump > 0.0) || !(self.min_bump > 0.0) {
            return Err(Error::Config("derivative bumps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeeResult {
    pub fee: f64,
    pub iterations: usize,
    /// Number of price evaluations, derivative bumps included.
    pub evaluations: usize,
    /// `price(fee) - target` at the returned fee.
    pub residual: f64,
    /// Fee standard error from re-solving at `target ± ε_Q`.
    pub std_error_bounds: Option<f64>,
    /// Fee standard error `ε_Q / |dQ/dα|`.
    pub std_error_derivative: Option<f64>,
}

/// Price function wrapper that counts calls and rejects non-finite values.
struct Counted<F> {
    f: F,
    calls: usize,
}

impl<F: FnMut(f64) -> Result<f64>> Counted<F> {
    fn eval(&mut self, fee: f64) -> Result<f64> {
        self.calls += 1;
        let v = (self.f)(fee)?;
        if !v.is_finite() {
            return Err(Error::InvalidData(format!("price at fee {fee} is not finite")));
        }
        Ok(v)
    }
}

fn bump(fee: f64, cfg: &FeeSolverConfig) -> f64 {
    (cfg.relative_bump * fee.abs()).max(cfg.min_bump)
}

/// `dQ/dα` at `fee`, central where possible and forward at the lower bound.
fn slope<F: FnMut(f64) -> Result<f64>>(
    f: &mut Counted<F>,
    fee: f64,
    value_at_fee: f64,
    cfg: &FeeSolverConfig,
) -> Result<f64> {
    let h = bump(fee, cfg);
    let up = f.eval(fee + h)?;
    if fee - h < cfg.lower {
        Ok((up - value_at_fee) / h)
    } else {
        let down = f.eval(fee - h)?;
        Ok((up - down) / (2.0 * h))
    }
}

/// Endpoint prices, evaluated at most once each.
struct Bracket {
    lo: f64,
    hi: f64,
    at_lower: Option<f64>,
    at_upper: Option<f64>,
}

impl Bracket {
    /// Confirms that the root lies in `[lower, upper]`; a no-op once the
    /// bracket has been tightened from both sides by interior evaluations.
    fn verify<F: FnMut(f64) -> Result<f64>>(
        &mut self,
        f: &mut Counted<F>,
        target: f64,
        cfg: &FeeSolverConfig,
    ) -> Result<()> {
        let needs_lower = self.lo == cfg.lower;
        let needs_upper = self.hi == cfg.upper;
        if needs_lower && self.at_lower.is_none() {
            self.at_lower = Some(f.eval(cfg.lower)?);
        }
        if needs_upper && self.at_upper.is_none() {
            self.at_upper = Some(f.eval(cfg.upper)?);
        }
        let lower_ok = !needs_lower || self.at_lower.is_some_and(|p| p >= target - cfg.tolerance);
        let upper_ok = !needs_upper || self.at_upper.is_some_and(|p| p <= target + cfg.tolerance);
        if lower_ok && upper_ok {
            return Ok(());
        }
        let price_at_lower = match self.at_lower {
            Some(p) => p,
            None => f.eval(cfg.lower)?,
        };
        let price_at_upper = match self.at_upper {
            Some(p) => p,
            None => f.eval(cfg.upper)?,
        };
        Err(Error::NoSolution {
            target,
            price_at_lower,
            price_at_upper,
        })
    }
}

/// Solves `price_fn(α) = target` for `α` in `[cfg.lower, cfg.upper]`.
pub fn solve_for_target<F>(price_fn: F, target: f64, cfg: &FeeSolverConfig) -> Result<FeeResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    cfg.validate()?;
    if !target.is_finite() {
        return Err(Error::InvalidArgument(format!("target price {target} is not finite")));
    }
    let mut f = Counted { f: price_fn, calls: 0 };
    let mut bracket = Bracket {
        lo: cfg.lower,
        hi: cfg.upper,
        at_lower: None,
        at_upper: None,
    };

    if cfg.method == RootMethod::Bisection {
        bracket.verify(&mut f, target, cfg)?;
        for (bound, price) in [(cfg.lower, bracket.at_lower), (cfg.upper, bracket.at_upper)] {
            let p = price.expect("verified endpoints");
            if (p - target).abs() <= cfg.tolerance {
                return Ok(done(bound, 0, f.calls, p - target));
            }
        }
    }

    let mut fee = match cfg.method {
        RootMethod::Bisection => 0.5 * (cfg.lower + cfg.upper),
        _ => cfg
            .initial_guess
            .unwrap_or(cfg.lower + 0.1 * (cfg.upper - cfg.lower))
            .clamp(cfg.lower, cfg.upper),
    };

    let mut last_residual = f64::NAN;
    for iter in 1..=cfg.max_iterations {
        let value = f.eval(fee)?;
        let residual = value - target;
        last_residual = residual;
        if residual.abs() <= cfg.tolerance {
            return Ok(done(fee, iter, f.calls, residual));
        }
        if residual > 0.0 {
            bracket.lo = bracket.lo.max(fee);
        } else {
            bracket.hi = bracket.hi.min(fee);
        }

        fee = match cfg.method {
            RootMethod::Bisection => 0.5 * (bracket.lo + bracket.hi),
            RootMethod::Newton => {
                let d = slope(&mut f, fee, value, cfg)?;
                let next = fee - residual / d;
                if !next.is_finite() || next < cfg.lower || next > cfg.upper {
                    return Err(Error::NoConvergence {
                        iterations: iter,
                        residual,
                    });
                }
                next
            }
            RootMethod::Hybrid => {
                let d = slope(&mut f, fee, value, cfg)?;
                let next = fee - residual / d;
                if d < 0.0 && next.is_finite() && next > bracket.lo && next < bracket.hi {
                    next
                } else {
                    bracket.verify(&mut f, target, cfg)?;
                    0.5 * (bracket.lo + bracket.hi)
                }
            }
        };
    }
    Err(Error::NoConvergence {
        iterations: cfg.max_iterations,
        residual: last_residual,
    })
}

fn done(fee: f64, iterations: usize, evaluations: usize, residual: f64) -> FeeResult {
    FeeResult {
        fee,
        iterations,
        evaluations,
        residual,
        std_error_bounds: None,
        std_error_derivative: None,
    }
}

/// Fair fee: the `α` at which the contract value equals the premium.
pub fn solve_fair_fee<F>(price_fn: F, premium: f64, cfg: &FeeSolverConfig) -> Result<FeeResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    solve_for_target(price_fn, premium, cfg)
}

/// Fee standard error from price noise `eps`: half the width between the
/// fees solving `price = W0 + ε` and `price = W0 - ε`.
pub fn fee_std_error_bounds<F>(mut price_fn: F, premium: f64, eps: f64, cfg: &FeeSolverConfig) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if eps < 0.0 || !eps.is_finite() {
        return Err(Error::InvalidArgument(format!("price standard error {eps} is invalid")));
    }
    if eps == 0.0 {
        return Ok(0.0);
    }
    let low = solve_for_target(&mut price_fn, premium + eps, cfg)?;
    let cfg_up = cfg.with_initial_guess(low.fee);
    let high = solve_for_target(&mut price_fn, premium - eps, &cfg_up)?;
    Ok(0.5 * (high.fee - low.fee))
}

/// Fee standard error `ε / |dQ/dα|` at the solved fee.
pub fn fee_std_error_derivative<F>(price_fn: F, fee: f64, eps: f64, cfg: &FeeSolverConfig) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if eps < 0.0 || !eps.is_finite() {
        return Err(Error::InvalidArgument(format!("price standard error {eps} is invalid")));
    }
    let mut f = Counted { f: price_fn, calls: 0 };
    let value = f.eval(fee)?;
    let d = slope(&mut f, fee, value, cfg)?;
    if !(d.abs() > 0.0) || !d.is_finite() {
        return Err(Error::DegenerateSensitivity { fee });
    }
    Ok(eps / d.abs())
}
