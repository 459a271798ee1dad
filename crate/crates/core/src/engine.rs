//! Backward-induction pricer for GMWB contracts.
//!
//! Value functions are stored per guarantee level on a uniform grid in
//! `X = ln(W / W(0))`. Between withdrawal dates each knot value is the
//! discounted Gauss-Hermite expectation of the spline through the next
//! date's values; at each withdrawal date the jump condition links the
//! levels, either with the contractual withdrawal (static behaviour) or with
//! the best admissible withdrawal (dynamic behaviour).

use std::f64::consts::{PI, SQRT_2};

use rayon::prelude::*;

use crate::contract::{cashflow_unchecked, GmwbContract, MarketModel};
use crate::error::{Error, Result};
use crate::quadrature::{gh_rule, moment_matched_weights, normal_central_moments, HermiteRule};
use crate::spline::{SplineFit, SplineGrid, Stencil};

/// Withdrawal behaviour of the policyholder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Withdraw exactly the contractual amount at every date.
    Static,
    /// Choose the withdrawal that maximises the contract value.
    Dynamic,
}

/// How the between-dates expectation is discretised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Hermite weights against the known lognormal transition density.
    Density,
    /// Hermite abscissas with weights matched to the central moments.
    MomentMatched,
}

/// Numerical settings for one pricing run.
#[derive(Debug, Clone, PartialEq)]
pub struct PricingConfig {
    pub mode: Mode,
    pub variant: Variant,
    /// Number of segments `M` of the log-wealth grid.
    pub wealth_segments: usize,
    /// Number of guarantee levels `J` (dynamic mode only). With
    /// `align_guarantee_grid` this is a target; see [`Grids::build`].
    pub guarantee_levels: usize,
    /// Round `J` so that every contractual amount is a whole number of
    /// guarantee steps.
    pub align_guarantee_grid: bool,
    /// Quadrature order `q`.
    pub order: usize,
    /// Integration steps per withdrawal period. One is exact for the
    /// lognormal transition; larger values exist to check that claim.
    pub substeps: usize,
    /// `W_min / W(0)`, the proxy for zero wealth at the bottom of the grid.
    pub min_wealth_fraction: f64,
    /// Upper grid bound in units of `σ_ref √T`.
    pub width_in_stdevs: f64,
}

pub const DEFAULT_WEALTH_SEGMENTS: usize = 400;
pub const DEFAULT_ORDER: usize = 9;
pub const DEFAULT_MIN_WEALTH_FRACTION: f64 = 1e-12;
pub const DEFAULT_WIDTH_IN_STDEVS: f64 = 5.0;

/// Smallest upper log-wealth bound, used when volatility is (near) zero.
const MIN_UPPER_LOG_WEALTH: f64 = 0.5;

impl PricingConfig {
    /// Defaults: `M = 400`, `q = 9`, and `J = 300` for monthly or more
    /// frequent withdrawals, `J = 100` otherwise.
    pub fn new(mode: Mode, withdrawals_per_year: u32) -> Self {
        PricingConfig {
            mode,
            variant: Variant::Density,
            wealth_segments: DEFAULT_WEALTH_SEGMENTS,
            guarantee_levels: default_guarantee_levels(withdrawals_per_year),
            align_guarantee_grid: true,
            order: DEFAULT_ORDER,
            substeps: 1,
            min_wealth_fraction: DEFAULT_MIN_WEALTH_FRACTION,
            width_in_stdevs: DEFAULT_WIDTH_IN_STDEVS,
        }
    }

    pub fn for_contract(mode: Mode, contract: &GmwbContract) -> Self {
        Self::new(mode, contract.withdrawals_per_year())
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_order(mut self, order: usize) -> Self {
        self.order = order;
        self
    }

    pub fn with_wealth_segments(mut self, segments: usize) -> Self {
        self.wealth_segments = segments;
        self
    }

    pub fn with_guarantee_levels(mut self, levels: usize) -> Self {
        self.guarantee_levels = levels;
        self
    }

    pub fn with_aligned_guarantee_grid(mut self, align: bool) -> Self {
        self.align_guarantee_grid = align;
        self
    }

    pub fn with_substeps(mut self, substeps: usize) -> Self {
        self.substeps = substeps;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.wealth_segments < 3 {
            return Err(Error::Config(format!("M must be at least 3, got {}", self.wealth_segments)));
        }
        if self.mode == Mode::Dynamic && self.guarantee_levels < 2 {
            return Err(Error::Config(format!("J must be at least 2, got {}", self.guarantee_levels)));
        }
        if self.order == 0 {
            return Err(Error::Config("q must be at least 1".into()));
        }
        if self.substeps == 0 {
            return Err(Error::Config("substeps must be at least 1".into()));
        }
        if !(self.min_wealth_fraction > 0.0 && self.min_wealth_fraction < 1.0) {
            return Err(Error::Config(format!(
                "minimum wealth fraction must lie in (0, 1), got {}",
                self.min_wealth_fraction
            )));
        }
        if !(self.width_in_stdevs > 0.0 && self.width_in_stdevs.is_finite()) {
            return Err(Error::Config("grid width must be positive".into()));
        }
        Ok(())
    }
}

pub fn default_guarantee_levels(withdrawals_per_year: u32) -> usize {
    if withdrawals_per_year >= 12 {
        300
    } else {
        100
    }
}

/// Largest step count considered when aligning the guarantee grid.
const MAX_ALIGNED_STEPS: usize = 4000;

/// Level count for a uniform guarantee grid whose step divides `G_n` for
/// every date with a jump (`n < N`), closest to `requested`. Falls back to
/// `requested` when no step count up to [`MAX_ALIGNED_STEPS`] works.
pub fn aligned_guarantee_levels(contract: &GmwbContract, requested: usize) -> usize {
    let n = contract.num_withdrawals();
    let fractions: Vec<f64> = contract.contractual_amounts()[..n - 1]
        .iter()
        .map(|g| g / contract.premium())
        .collect();
    let unit = (1..=MAX_ALIGNED_STEPS).find(|&steps| {
        fractions.iter().all(|f| {
            let units = f * steps as f64;
            (units - units.round()).abs() < 1e-8 && units.round() >= 1.0
        })
    });
    match unit {
        Some(unit) => {
            let multiple = ((requested.saturating_sub(1)) as f64 / unit as f64).round().max(1.0) as usize;
            multiple * unit + 1
        }
        None => requested,
    }
}

/// Log-wealth knots and guarantee levels.
#[derive(Debug, Clone)]
pub struct Grids {
    x: SplineGrid,
    wealth: Vec<f64>,
    guarantee: Vec<f64>,
    premium: f64,
}

impl Grids {
    /// `X` spans `[ln(W_min / W(0)), X_max]` with `X_max = 5 σ_ref √T`,
    /// `σ_ref` the largest period volatility. The upper bound is kept above
    /// twice the riskless log-growth so that a vanishing volatility still
    /// leaves room above `W(0)`.
    ///
    /// Guarantee levels are uniform on `[0, W(0)]`. When the config asks for
    /// alignment, the number of steps is the multiple of the smallest step
    /// count that divides every interior contractual amount which is closest
    /// to `J - 1`, so withdrawing exactly `G_n` is always admissible.
    pub fn build(contract: &GmwbContract, market: &MarketModel, config: &PricingConfig) -> Result<Self> {
        config.validate()?;
        market.check_matches(contract)?;

        let premium = contract.premium();
        let lower = config.min_wealth_fraction.ln();
        let growth: f64 = (1..=contract.num_withdrawals())
            .map(|n| market.rate(n).max(0.0) * contract.period_length(n))
            .sum();
        let upper = (config.width_in_stdevs * market.max_vol() * contract.maturity().sqrt())
            .max(2.0 * growth)
            .max(MIN_UPPER_LOG_WEALTH);
        let x = SplineGrid::build(lower, upper, config.wealth_segments)?;
        let wealth = x.knots().iter().map(|&k| premium * k.exp()).collect();

        let levels = if config.align_guarantee_grid {
            aligned_guarantee_levels(contract, config.guarantee_levels)
        } else {
            config.guarantee_levels
        }
        .max(2);
        let guarantee = (0..levels)
            .map(|j| premium * j as f64 / (levels - 1) as f64)
            .collect();

        Ok(Grids {
            x,
            wealth,
            guarantee,
            premium,
        })
    }

    pub fn log_wealth(&self) -> &SplineGrid {
        &self.x
    }

    /// Wealth at each knot, `W(0) e^{X_m}`.
    pub fn wealth(&self) -> &[f64] {
        &self.wealth
    }

    /// Guarantee levels `0 = A_1 < ... < A_J = W(0)`.
    pub fn guarantee(&self) -> &[f64] {
        &self.guarantee
    }

    /// Stencil evaluating a value function at wealth `w`; anything at or
    /// below the bottom knot's wealth maps onto that knot.
    fn wealth_stencil(&self, w: f64) -> Stencil {
        if w <= self.wealth[0] {
            Stencil::at_knot(0, self.x.segments())
        } else {
            self.x.stencil((w / self.premium).ln())
        }
    }
}

/// Value functions at one time, one spline per tracked guarantee level.
#[derive(Debug, Clone)]
pub struct ValueSurface<'g> {
    time_index: usize,
    levels: Vec<f64>,
    tracks: Vec<SplineFit<'g>>,
}

impl<'g> ValueSurface<'g> {
    /// Index `n` of the withdrawal date this surface belongs to.
    pub fn time_index(&self) -> usize {
        self.time_index
    }

    /// Guarantee balance of each track.
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn tracks(&self) -> &[SplineFit<'g>] {
        &self.tracks
    }

    pub fn track(&self, j: usize) -> &SplineFit<'g> {
        &self.tracks[j]
    }

    /// Builds a surface from raw knot values, one vector per level.
    pub fn from_values(grids: &'g Grids, time_index: usize, levels: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if levels.len() != values.len() {
            return Err(Error::InvalidData(format!(
                "{} levels but {} value vectors",
                levels.len(),
                values.len()
            )));
        }
        let tracks = values
            .into_iter()
            .map(|v| grids.x.fit(v))
            .collect::<Result<Vec<_>>>()?;
        Ok(ValueSurface {
            time_index,
            levels,
            tracks,
        })
    }
}

/// Discounted quadrature for one integration step:
/// `Q(X) ≈ discount · Σ_i weight_i · Q_next(X + offset_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepKernel {
    discount: f64,
    offsets: Vec<f64>,
    weights: Vec<f64>,
}

impl StepKernel {
    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn apply_at(&self, fit: &SplineFit<'_>, x: f64) -> f64 {
        let sum: f64 = self
            .offsets
            .iter()
            .zip(&self.weights)
            .map(|(&o, &w)| w * fit.eval(x + o))
            .sum();
        self.discount * sum
    }
}

/// Quadrature data shared by every step of a pricing run.
#[derive(Debug, Clone)]
pub struct Quadrature {
    rule: HermiteRule,
    variant: Variant,
}

impl Quadrature {
    pub fn new(order: usize, variant: Variant) -> Result<Self> {
        Ok(Quadrature {
            rule: gh_rule(order)?,
            variant,
        })
    }

    pub fn rule(&self) -> &HermiteRule {
        &self.rule
    }

    /// Kernel for a step of length `dt` inside period `n`.
    pub fn kernel(&self, market: &MarketModel, n: usize, dt: f64) -> Result<StepKernel> {
        let drift = market.log_drift(n, dt);
        let tau = market.log_stdev(n, dt);
        let discount = (-market.rate(n) * dt).exp();
        if tau == 0.0 {
            return Ok(StepKernel {
                discount,
                offsets: vec![drift],
                weights: vec![1.0],
            });
        }
        let xi = self.rule.abscissas();
        let (offsets, weights) = match self.variant {
            Variant::Density => {
                let norm = PI.sqrt();
                (
                    xi.iter().map(|&x| SQRT_2 * tau * x + drift).collect(),
                    self.rule.weights().iter().map(|&l| l / norm).collect(),
                )
            }
            Variant::MomentMatched => {
                let q = self.rule.order();
                let mw = moment_matched_weights(&self.rule, &normal_central_moments(tau, q), tau)?;
                (
                    xi.iter().map(|&x| tau * x + drift).collect(),
                    mw.weights().to_vec(),
                )
            }
        };
        Ok(StepKernel {
            discount,
            offsets,
            weights,
        })
    }
}

/// Pricing machinery bound to one contract and market.
#[derive(Debug)]
pub struct Pricer<'a> {
    contract: &'a GmwbContract,
    market: &'a MarketModel,
    config: &'a PricingConfig,
    grids: Grids,
    quadrature: Quadrature,
}

impl<'a> Pricer<'a> {
    pub fn new(contract: &'a GmwbContract, market: &'a MarketModel, config: &'a PricingConfig) -> Result<Self> {
        let grids = Grids::build(contract, market, config)?;
        let quadrature = Quadrature::new(config.order, config.variant)?;
        Ok(Pricer {
            contract,
            market,
            config,
            grids,
            quadrature,
        })
    }

    pub fn grids(&self) -> &Grids {
        &self.grids
    }

    pub fn quadrature(&self) -> &Quadrature {
        &self.quadrature
    }

    /// Maturity values `max(W_m, C(A_j))` for each requested guarantee level.
    pub fn terminal_surface(&self, levels: &[f64]) -> Result<ValueSurface<'_>> {
        let n = self.contract.num_withdrawals();
        let last = self.contract.contractual_amount(n);
        let beta = self.contract.penalty();
        if let Some(a) = levels.iter().find(|a| !(**a >= 0.0)) {
            return Err(Error::InvalidArgument(format!("guarantee level {a} is negative")));
        }
        let values = levels
            .iter()
            .map(|&a| {
                let cash = cashflow_unchecked(a, last, beta);
                self.grids.wealth.iter().map(|&w| w.max(cash)).collect()
            })
            .collect();
        ValueSurface::from_values(&self.grids, n, levels.to_vec(), values)
    }

    /// Kernels for the sub-steps of period `n`.
    fn period_kernel(&self, n: usize) -> Result<StepKernel> {
        let dt = self.contract.period_length(n) / self.config.substeps as f64;
        self.quadrature.kernel(self.market, n, dt)
    }

    /// Integrates every track of a surface at `t_n^-` back to `t_{n-1}^+`.
    pub fn step_back<'g>(&'g self, surface: &ValueSurface<'g>, n: usize) -> Result<ValueSurface<'g>> {
        let kernel = self.period_kernel(n)?;
        let mut current = self.integrate(surface, &kernel, n)?;
        for _ in 1..self.config.substeps {
            current = self.integrate(&current, &kernel, n)?;
        }
        current.time_index = n - 1;
        Ok(current)
    }

    fn integrate<'g>(&'g self, surface: &ValueSurface<'g>, kernel: &StepKernel, n: usize) -> Result<ValueSurface<'g>> {
        let grid = &self.grids.x;
        let knots = grid.knots();
        // Quadrature points relative to each knot are the same for every level.
        let stencils: Vec<Vec<Stencil>> = knots
            .iter()
            .map(|&x| kernel.offsets.iter().map(|&o| grid.stencil(x + o)).collect())
            .collect();

        let tracks = surface
            .tracks
            .par_iter()
            .enumerate()
            .map(|(j, fit)| {
                let mut values = Vec::with_capacity(knots.len());
                for (m, node) in stencils.iter().enumerate() {
                    let sum: f64 = node
                        .iter()
                        .zip(&kernel.weights)
                        .map(|(s, &w)| w * fit.eval_stencil(s))
                        .sum();
                    let v = kernel.discount * sum;
                    if !v.is_finite() {
                        return Err(Error::NumericalFailure {
                            period: n,
                            node: m,
                            level: j,
                            value: v,
                        });
                    }
                    values.push(v);
                }
                Ok(grid.fit_unchecked(values))
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(ValueSurface {
            time_index: surface.time_index,
            levels: surface.levels.clone(),
            tracks,
        })
    }

    /// Static jump at date `n`: `Q^-(W) = Q^+(max(W - G_n, 0)) + G_n` on every track.
    pub fn jump_static<'g>(&'g self, surface: &ValueSurface<'g>, n: usize) -> ValueSurface<'g> {
        let amount = self.contract.contractual_amount(n);
        let stencils: Vec<Stencil> = self
            .grids
            .wealth
            .iter()
            .map(|&w| self.grids.wealth_stencil(w - amount))
            .collect();
        let tracks = surface
            .tracks
            .iter()
            .map(|fit| {
                let values = stencils.iter().map(|s| fit.eval_stencil(s) + amount).collect();
                self.grids.x.fit_unchecked(values)
            })
            .collect();
        ValueSurface {
            time_index: n,
            levels: surface.levels.iter().map(|a| a + amount).collect(),
            tracks,
        }
    }

    /// Stencils for wealth `W_m - A_d` for every withdrawal gap `d` and knot `m`.
    fn gap_stencils(&self) -> Vec<Vec<Stencil>> {
        let segments = self.grids.x.segments();
        self.grids
            .guarantee
            .iter()
            .enumerate()
            .map(|(d, &gap)| {
                self.grids
                    .wealth
                    .iter()
                    .enumerate()
                    .map(|(m, &w)| {
                        if d == 0 {
                            Stencil::at_knot(m, segments)
                        } else {
                            self.grids.wealth_stencil(w - gap)
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Optimal jump at date `n` over all guarantee levels:
    /// `Q^-(W_m, A_j) = max_{k ≤ j} [Q^+(max(W_m - A_j + A_k, 0), A_k) + C(A_j - A_k)]`.
    pub fn jump_dynamic<'g>(&'g self, surface: &ValueSurface<'g>, n: usize) -> Result<ValueSurface<'g>> {
        let levels = self.grids.guarantee.len();
        self.jump_dynamic_levels(surface, n, 0..levels, &self.gap_stencils())
    }

    fn jump_dynamic_levels<'g>(
        &'g self,
        surface: &ValueSurface<'g>,
        n: usize,
        targets: std::ops::Range<usize>,
        gaps: &[Vec<Stencil>],
    ) -> Result<ValueSurface<'g>> {
        let levels = &self.grids.guarantee;
        if surface.tracks.len() != levels.len() {
            return Err(Error::InvalidArgument(format!(
                "dynamic jump needs {} tracks, surface has {}",
                levels.len(),
                surface.tracks.len()
            )));
        }
        let amount = self.contract.contractual_amount(n);
        let beta = self.contract.penalty();

        let tracks = targets
            .clone()
            .into_par_iter()
            .map(|j| {
                // k = j (no withdrawal) seeds the maximum; ties keep the larger k.
                let mut best: Vec<f64> = surface.tracks[j].values().to_vec();
                for k in (0..j).rev() {
                    let d = j - k;
                    let cash = cashflow_unchecked(levels[d], amount, beta);
                    let fit = &surface.tracks[k];
                    for (b, s) in best.iter_mut().zip(&gaps[d]) {
                        let v = fit.eval_stencil(s) + cash;
                        if v > *b {
                            *b = v;
                        }
                    }
                }
                self.grids.x.fit_unchecked(best)
            })
            .collect();

        Ok(ValueSurface {
            time_index: n,
            levels: levels[targets].to_vec(),
            tracks,
        })
    }

    /// Value at `W = W(0)` after the final step from `t_1` to `t_0`, using
    /// the track at index `track`.
    fn value_at_start(&self, surface: &ValueSurface<'_>, track: usize) -> Result<f64> {
        let kernel = self.period_kernel(1)?;
        let mut current = surface.clone();
        if self.config.substeps > 1 {
            current.tracks = vec![current.tracks[track].clone()];
            current.levels = vec![current.levels[track]];
            for _ in 1..self.config.substeps {
                current = self.integrate(&current, &kernel, 1)?;
            }
            let v = kernel.apply_at(&current.tracks[0], 0.0);
            return finite_or_fail(v, 1, track);
        }
        let v = kernel.apply_at(&current.tracks[track], 0.0);
        finite_or_fail(v, 1, track)
    }

    /// Contract value `Q_0(W(0), W(0))` under the configured behaviour.
    pub fn price(&self) -> Result<f64> {
        match self.config.mode {
            Mode::Static => self.price_static(),
            Mode::Dynamic => self.price_dynamic(),
        }
    }

    fn price_static(&self) -> Result<f64> {
        let n_dates = self.contract.num_withdrawals();
        let last = self.contract.contractual_amount(n_dates);
        let mut surface = self.terminal_surface(&[last])?;
        for n in (2..=n_dates).rev() {
            surface = self.step_back(&surface, n)?;
            surface = self.jump_static(&surface, n - 1);
        }
        self.value_at_start(&surface, 0)
    }

    fn price_dynamic(&self) -> Result<f64> {
        let n_dates = self.contract.num_withdrawals();
        let levels = self.grids.guarantee.clone();
        let top = levels.len() - 1;
        if n_dates == 1 {
            let surface = self.terminal_surface(&levels[top..])?;
            return self.value_at_start(&surface, 0);
        }
        let gaps = self.gap_stencils();
        let mut surface = self.terminal_surface(&levels)?;
        for n in (2..=n_dates).rev() {
            surface = self.step_back(&surface, n)?;
            // Only the full-guarantee level is needed at the first date.
            let targets = if n == 2 { top..top + 1 } else { 0..top + 1 };
            surface = self.jump_dynamic_levels(&surface, n - 1, targets, &gaps)?;
        }
        self.value_at_start(&surface, 0)
    }
}

fn finite_or_fail(v: f64, period: usize, level: usize) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NumericalFailure {
            period,
            node: 0,
            level,
            value: v,
        })
    }
}

/// Prices the contract: `Q_0(W(0), W(0))`.
pub fn price(contract: &GmwbContract, market: &MarketModel, config: &PricingConfig) -> Result<f64> {
    Pricer::new(contract, market, config)?.price()
}
