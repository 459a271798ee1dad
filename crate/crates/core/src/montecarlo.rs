//! Forward Monte Carlo price of the static-withdrawal contract.
//!
//! Paths are generated in fixed-size chunks of antithetic pairs. Chunk `c`
//! draws from its own ChaCha stream (`seed`, stream `c`), and chunk summaries
//! are merged in index order, so an estimate depends only on the seed and
//! the path count.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::contract::{GmwbContract, MarketModel};
use crate::error::{Error, Result};

/// Antithetic pairs simulated per chunk.
const PAIRS_PER_CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    /// Total simulated paths, counting both members of each antithetic pair.
    pub paths: usize,
    pub seed: u64,
}

impl McConfig {
    pub fn new(paths: usize, seed: u64) -> Self {
        McConfig { paths, seed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub price: f64,
    /// Standard error of `price`, computed over antithetic-pair averages.
    pub std_error: f64,
    pub paths: usize,
}

/// Standard normal draws by inverse-CDF transform of a ChaCha8 stream.
pub struct NormalStream {
    rng: ChaCha8Rng,
    normal: Normal,
}

impl NormalStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        NormalStream {
            rng,
            normal: Normal::standard(),
        }
    }

    #[inline]
    pub fn next_normal(&mut self) -> f64 {
        // Midpoints of a 2^-53 lattice, strictly inside (0, 1).
        let u = ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
        self.normal.inverse_cdf(u)
    }
}

impl Iterator for NormalStream {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        Some(self.next_normal())
    }
}

/// Per-period quantities shared by every path.
struct PathModel {
    drift: Vec<f64>,
    stdev: Vec<f64>,
    amounts: Vec<f64>,
    /// Discount factor from the maturity back to time zero.
    final_discount: f64,
    /// Present value of the contractual withdrawals, identical on every path.
    guaranteed_value: f64,
}

impl PathModel {
    fn new(contract: &GmwbContract, market: &MarketModel) -> Self {
        let n = contract.num_withdrawals();
        let mut drift = Vec::with_capacity(n);
        let mut stdev = Vec::with_capacity(n);
        let mut discount = 1.0;
        let mut guaranteed_value = 0.0;
        for k in 1..=n {
            let dt = contract.period_length(k);
            drift.push(market.log_drift(k, dt));
            stdev.push(market.log_stdev(k, dt));
            discount *= (-market.rate(k) * dt).exp();
            guaranteed_value += discount * contract.contractual_amount(k);
        }
        PathModel {
            drift,
            stdev,
            amounts: contract.contractual_amounts().to_vec(),
            final_discount: discount,
            guaranteed_value,
        }
    }

    /// Discounted payoff in excess of the guaranteed withdrawals for the
    /// path driven by `sign * z_n`. `draws` holds `z_1..z_N`.
    fn excess_payoff(&self, premium: f64, draws: &[f64], sign: f64) -> f64 {
        let last = self.amounts.len() - 1;
        let mut w = premium;
        for (n, &z) in draws.iter().enumerate() {
            if w > 0.0 {
                w *= (self.drift[n] + self.stdev[n] * sign * z).exp();
            }
            if n < last {
                w = (w - self.amounts[n]).max(0.0);
            }
        }
        // max(W_T, G_N) - G_N
        self.final_discount * (w - self.amounts[last]).max(0.0)
    }

    fn pair_value(&self, premium: f64, draws: &[f64], flip: bool) -> f64 {
        let (first, second) = if flip { (-1.0, 1.0) } else { (1.0, -1.0) };
        0.5 * (self.excess_payoff(premium, draws, first) + self.excess_payoff(premium, draws, second))
    }
}

/// Running mean and sum of squared deviations, mergeable in a fixed order.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    /// Summary of `values`, accumulated relative to the first value so that
    /// identical samples give exactly zero spread.
    fn of(values: impl Iterator<Item = f64>) -> Self {
        let mut count = 0usize;
        let mut shift = 0.0;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for v in values {
            if count == 0 {
                shift = v;
            }
            let d = v - shift;
            sum += d;
            sum_sq += d * d;
            count += 1;
        }
        if count == 0 {
            return Moments::default();
        }
        let n = count as f64;
        Moments {
            count,
            mean: shift + sum / n,
            m2: (sum_sq - sum * sum / n).max(0.0),
        }
    }

    fn merge(self, other: Moments) -> Moments {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let delta = other.mean - self.mean;
        Moments {
            count: self.count + other.count,
            mean: self.mean + delta * nb / n,
            m2: self.m2 + other.m2 + delta * delta * na * nb / n,
        }
    }
}

fn simulate(contract: &GmwbContract, market: &MarketModel, config: &McConfig, flip: bool) -> Result<McEstimate> {
    if config.paths == 0 || config.paths % 2 == 1 {
        return Err(Error::Config(format!(
            "path count must be positive and even for antithetic pairs, got {}",
            config.paths
        )));
    }
    market.check_matches(contract)?;

    let model = PathModel::new(contract, market);
    let premium = contract.premium();
    let periods = contract.num_withdrawals();
    let pairs = config.paths / 2;
    let chunks = pairs.div_ceil(PAIRS_PER_CHUNK);

    let summaries: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * PAIRS_PER_CHUNK;
            let len = PAIRS_PER_CHUNK.min(pairs - start);
            let mut normals = NormalStream::new(config.seed, c as u64);
            let mut draws = vec![0.0; periods];
            Moments::of((0..len).map(|_| {
                for z in draws.iter_mut() {
                    *z = normals.next_normal();
                }
                model.pair_value(premium, &draws, flip)
            }))
        })
        .collect();

    let total = summaries.into_iter().fold(Moments::default(), Moments::merge);
    let n = total.count as f64;
    let std_error = if total.count > 1 {
        (total.m2 / (n - 1.0)).sqrt() / n.sqrt()
    } else {
        0.0
    };

    Ok(McEstimate {
        price: model.guaranteed_value + total.mean,
        std_error,
        paths: config.paths,
    })
}

/// Monte Carlo price under static withdrawals `γ_n = G_n`.
///
/// Each path pays the contractual amounts `G_1..G_{N-1}` and
/// `max(W(T^-), G_N)` at maturity, with wealth reduced by `G_n` after every
/// withdrawal and floored at zero.
pub fn mc_static_price(contract: &GmwbContract, market: &MarketModel, config: &McConfig) -> Result<McEstimate> {
    simulate(contract, market, config, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn deterministic_value(contract: &GmwbContract, r: f64, fee: f64) -> f64 {
        let mut w = contract.premium();
        let mut pv = 0.0;
        let mut t_prev = 0.0;
        let n = contract.num_withdrawals();
        for k in 1..=n {
            let t = contract.dates()[k - 1];
            w *= ((r - fee) * (t - t_prev)).exp();
            t_prev = t;
            let g = contract.contractual_amount(k);
            if k < n {
                pv += (-r * t).exp() * g;
                w = (w - g).max(0.0);
            } else {
                pv += (-r * t).exp() * w.max(g);
            }
        }
        pv
    }

    #[test]
    fn zero_volatility_is_deterministic() {
        let c = GmwbContract::from_rate(100.0, 0.1, 4, 0.1).unwrap();
        let m = MarketModel::flat(&c, 0.05, 0.0, 0.01).unwrap();
        let est = mc_static_price(&c, &m, &McConfig::new(20_000, 7)).unwrap();
        assert_eq!(est.std_error, 0.0);
        let want = deterministic_value(&c, 0.05, 0.01);
        assert!(((est.price - want) / want).abs() < 1e-12, "{} vs {want}", est.price);
    }

    #[test]
    fn odd_or_zero_path_counts_rejected() {
        let c = GmwbContract::from_rate(100.0, 0.1, 4, 0.1).unwrap();
        let m = MarketModel::flat(&c, 0.05, 0.2, 0.01).unwrap();
        assert!(matches!(mc_static_price(&c, &m, &McConfig::new(1001, 1)), Err(Error::Config(_))));
        assert!(mc_static_price(&c, &m, &McConfig::new(0, 1)).is_err());
    }

    #[test]
    fn antithetic_partner_order_is_irrelevant() {
        let c = GmwbContract::from_rate(100.0, 0.1, 4, 0.1).unwrap();
        let m = MarketModel::flat(&c, 0.05, 0.2, 0.01).unwrap();
        let cfg = McConfig::new(20_000, 11);
        let a = simulate(&c, &m, &cfg, false).unwrap();
        let b = simulate(&c, &m, &cfg, true).unwrap();
        assert_eq!(a.price, b.price);
        assert_eq!(a.std_error, b.std_error);
    }

    #[test]
    fn factoring_out_guaranteed_cash_is_exact() {
        let c = GmwbContract::from_rate(100.0, 0.1, 4, 0.1).unwrap();
        let m = MarketModel::flat(&c, 0.05, 0.2, 0.01).unwrap();
        let model = PathModel::new(&c, &m);
        let mut normals = NormalStream::new(3, 0);
        let mut total_direct = 0.0;
        let mut total_factored = 0.0;
        let pairs = 2000;
        for _ in 0..pairs {
            let draws: Vec<f64> = (0..c.num_withdrawals()).map(|_| normals.next_normal()).collect();
            let excess = model.pair_value(100.0, &draws, false);
            total_factored += excess;
            // Full cashflow per path, without factoring.
            let full = |sign: f64| {
                let mut w = 100.0;
                let mut pv = 0.0;
                let mut disc = 1.0;
                let n = c.num_withdrawals();
                for k in 1..=n {
                    let dt = c.period_length(k);
                    w = m.evolve_wealth(w, k, dt, sign * draws[k - 1]);
                    disc *= (-0.05 * dt).exp();
                    let g = c.contractual_amount(k);
                    if k < n {
                        pv += disc * g;
                        w = (w - g).max(0.0);
                    } else {
                        pv += disc * w.max(g);
                    }
                }
                pv
            };
            total_direct += 0.5 * (full(1.0) + full(-1.0));
        }
        let direct = total_direct / pairs as f64;
        let factored = model.guaranteed_value + total_factored / pairs as f64;
        assert!(((direct - factored) / direct).abs() < 1e-12);
    }

    #[test]
    fn normal_stream_moments() {
        let n = 400_000;
        let draws: Vec<f64> = NormalStream::new(42, 5).take(n).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|z| (z - mean) * (z - mean)).sum::<f64>() / (n as f64 - 1.0);
        assert!(mean.abs() <= 4.0 / (n as f64).sqrt());
        assert!((var - 1.0).abs() <= 4.0 * (2.0 / n as f64).sqrt());
    }

    #[test]
    fn moments_merge_matches_single_pass() {
        let values: Vec<f64> = (0..1000).map(|i| ((i * 37 % 101) as f64).sqrt()).collect();
        let whole = Moments::of(values.iter().copied());
        let merged = values
            .chunks(97)
            .map(|c| Moments::of(c.iter().copied()))
            .fold(Moments::default(), Moments::merge);
        assert_eq!(whole.count, merged.count);
        assert!((whole.mean - merged.mean).abs() < 1e-12);
        assert!((whole.m2 - merged.m2).abs() < 1e-9 * whole.m2);
    }
}
