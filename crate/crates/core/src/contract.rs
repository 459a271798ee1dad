//! Contract terms, the piecewise-constant market model, and the cashflow rules.

use crate::error::{Error, Result};

/// GMWB contract terms with the derived withdrawal schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct GmwbContract {
    premium: f64,
    maturity: f64,
    withdrawals_per_year: u32,
    penalty: f64,
    dates: Vec<f64>,
    amounts: Vec<f64>,
}

impl GmwbContract {
    pub fn new(premium: f64, maturity: f64, withdrawals_per_year: u32, penalty: f64) -> Result<Self> {
        if !(premium > 0.0 && premium.is_finite()) {
            return Err(Error::InvalidArgument(format!("premium must be positive, got {premium}")));
        }
        if !(maturity > 0.0 && maturity.is_finite()) {
            return Err(Error::InvalidArgument(format!("maturity must be positive, got {maturity}")));
        }
        if withdrawals_per_year == 0 {
            return Err(Error::InvalidArgument("withdrawal frequency must be positive".into()));
        }
        if !(0.0..=1.0).contains(&penalty) {
            return Err(Error::InvalidArgument(format!("penalty must lie in [0, 1], got {penalty}")));
        }

        let freq = f64::from(withdrawals_per_year);
        // Absorb representation error in products like 4 * (1 / 0.04).
        let count = ((freq * maturity) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let mut dates: Vec<f64> = (1..=count).map(|n| (n as f64 / freq).min(maturity)).collect();
        dates[count - 1] = maturity;

        let mut amounts = Vec::with_capacity(count);
        let mut previous = 0.0;
        for &t in &dates {
            amounts.push(premium * (t - previous) / maturity);
            previous = t;
        }

        Ok(GmwbContract {
            premium,
            maturity,
            withdrawals_per_year,
            penalty,
            dates,
            amounts,
        })
    }

    /// Contract with maturity `1 / g` for an annual contractual rate `g`.
    pub fn from_rate(premium: f64, rate: f64, withdrawals_per_year: u32, penalty: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidArgument(format!("contractual rate must be positive, got {rate}")));
        }
        Self::new(premium, 1.0 / rate, withdrawals_per_year, penalty)
    }

    pub fn premium(&self) -> f64 {
        self.premium
    }

    pub fn maturity(&self) -> f64 {
        self.maturity
    }

    pub fn withdrawals_per_year(&self) -> u32 {
        self.withdrawals_per_year
    }

    pub fn penalty(&self) -> f64 {
        self.penalty
    }

    /// Annual contractual rate `1 / T`.
    pub fn contractual_rate(&self) -> f64 {
        1.0 / self.maturity
    }

    pub fn num_withdrawals(&self) -> usize {
        self.dates.len()
    }

    /// Withdrawal dates `t_1 < ... < t_N = T`.
    pub fn dates(&self) -> &[f64] {
        &self.dates
    }

    /// Length of period `n` (1-based), `t_n - t_{n-1}`.
    pub fn period_length(&self, n: usize) -> f64 {
        let prev = if n == 1 { 0.0 } else { self.dates[n - 2] };
        self.dates[n - 1] - prev
    }

    /// Contractual amount `G_n` for period `n` (1-based).
    pub fn contractual_amount(&self, n: usize) -> f64 {
        self.amounts[n - 1]
    }

    pub fn contractual_amounts(&self) -> &[f64] {
        &self.amounts
    }

    /// Same contract with the premium replaced; amounts scale with it.
    pub fn with_premium(&self, premium: f64) -> Result<Self> {
        Self::new(premium, self.maturity, self.withdrawals_per_year, self.penalty)
    }
}

/// Piecewise-constant rates and volatilities per withdrawal period, and the fee.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketModel {
    rates: Vec<f64>,
    vols: Vec<f64>,
    fee: f64,
}

impl MarketModel {
    pub fn new(rates: Vec<f64>, vols: Vec<f64>, fee: f64) -> Result<Self> {
        if rates.len() != vols.len() || rates.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "need one rate and one volatility per period, got {} and {}",
                rates.len(),
                vols.len()
            )));
        }
        if rates.iter().any(|r| !r.is_finite()) {
            return Err(Error::InvalidArgument("rates must be finite".into()));
        }
        if vols.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidArgument("volatilities must be finite and non-negative".into()));
        }
        if !(fee.is_finite() && fee >= 0.0) {
            return Err(Error::InvalidArgument(format!("fee must be non-negative, got {fee}")));
        }
        Ok(MarketModel { rates, vols, fee })
    }

    /// Constant rate and volatility over all periods of `contract`.
    pub fn flat(contract: &GmwbContract, rate: f64, vol: f64, fee: f64) -> Result<Self> {
        let n = contract.num_withdrawals();
        Self::new(vec![rate; n], vec![vol; n], fee)
    }

    pub fn num_periods(&self) -> usize {
        self.rates.len()
    }

    /// Rate of period `n` (1-based).
    pub fn rate(&self, n: usize) -> f64 {
        self.rates[n - 1]
    }

    /// Volatility of period `n` (1-based).
    pub fn vol(&self, n: usize) -> f64 {
        self.vols[n - 1]
    }

    pub fn fee(&self) -> f64 {
        self.fee
    }

    pub fn max_vol(&self) -> f64 {
        self.vols.iter().copied().fold(0.0, f64::max)
    }

    pub fn with_fee(&self, fee: f64) -> Result<Self> {
        Self::new(self.rates.clone(), self.vols.clone(), fee)
    }

    pub(crate) fn check_matches(&self, contract: &GmwbContract) -> Result<()> {
        if self.num_periods() != contract.num_withdrawals() {
            return Err(Error::InvalidArgument(format!(
                "market has {} periods but the contract has {} withdrawals",
                self.num_periods(),
                contract.num_withdrawals()
            )));
        }
        Ok(())
    }

    /// Log-wealth drift `(r_n - α - σ_n²/2) dt` over a step of length `dt` in period `n`.
    pub fn log_drift(&self, n: usize, dt: f64) -> f64 {
        let v = self.vol(n);
        (self.rate(n) - self.fee - 0.5 * v * v) * dt
    }

    /// Log-wealth standard deviation `σ_n √dt`.
    pub fn log_stdev(&self, n: usize, dt: f64) -> f64 {
        self.vol(n) * dt.sqrt()
    }

    /// Wealth at the end of period `n` given wealth `w` at its start and a
    /// standard normal draw `z`. Zero wealth is absorbing.
    pub fn evolve_wealth(&self, w: f64, n: usize, dt: f64, z: f64) -> f64 {
        if w == 0.0 {
            return 0.0;
        }
        w * (self.log_drift(n, dt) + self.log_stdev(n, dt) * z).exp()
    }
}

/// Guarantee and wealth balances of a policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccountState {
    pub wealth: f64,
    pub guarantee: f64,
}

impl AccountState {
    pub fn new(wealth: f64, guarantee: f64, premium: f64) -> Result<Self> {
        if !(wealth >= 0.0) {
            return Err(Error::InvalidArgument(format!("wealth must be non-negative, got {wealth}")));
        }
        if !(0.0..=premium).contains(&guarantee) {
            return Err(Error::InvalidArgument(format!(
                "guarantee {guarantee} outside [0, {premium}]"
            )));
        }
        Ok(AccountState { wealth, guarantee })
    }

    /// Applies a withdrawal of `amount`, returning the state just after it and
    /// the cash received.
    pub fn withdraw(self, amount: f64, contractual: f64, penalty: f64) -> Result<(Self, f64)> {
        if amount > self.guarantee {
            return Err(Error::InvalidArgument(format!(
                "withdrawal {amount} exceeds remaining guarantee {}",
                self.guarantee
            )));
        }
        let cash = cashflow(amount, contractual, penalty)?;
        let next = AccountState {
            wealth: (self.wealth - amount).max(0.0),
            guarantee: self.guarantee - amount,
        };
        Ok((next, cash))
    }
}

/// Cash received for a withdrawal `gamma` against contractual amount `contractual`.
pub fn cashflow(gamma: f64, contractual: f64, penalty: f64) -> Result<f64> {
    if !(gamma >= 0.0) || !(contractual >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "withdrawal {gamma} and contractual amount {contractual} must be non-negative"
        )));
    }
    if !(0.0..=1.0).contains(&penalty) {
        return Err(Error::InvalidArgument(format!("penalty must lie in [0, 1], got {penalty}")));
    }
    Ok(cashflow_unchecked(gamma, contractual, penalty))
}

#[inline]
pub(crate) fn cashflow_unchecked(gamma: f64, contractual: f64, penalty: f64) -> f64 {
    if gamma <= contractual {
        gamma
    } else {
        contractual + (1.0 - penalty) * (gamma - contractual)
    }
}

/// Maturity payoff `max(W, C(A))`, with the final contractual amount as the
/// penalty threshold.
pub fn terminal_payoff(wealth: f64, guarantee: f64, final_amount: f64, penalty: f64) -> Result<f64> {
    if !(wealth >= 0.0) {
        return Err(Error::InvalidArgument(format!("wealth must be non-negative, got {wealth}")));
    }
    Ok(wealth.max(cashflow(guarantee, final_amount, penalty)?))
}
