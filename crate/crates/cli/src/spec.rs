//! Run specification: flags and config-file keys resolved into one value.
//!
//! Config files are flat `key=value` lines; `#` starts a comment. Keys are
//! the long flag names (`g`, `T`, `Nw`, `sigma`, ...). A resolved spec can be
//! written back in the same format with [`RunSpec::emit`], and parsing that
//! text yields the same spec.

use std::collections::BTreeMap;

use gmwb::engine::default_guarantee_levels;
use gmwb::quadrature::MAX_ORDER;
use gmwb::{GmwbContract, MarketModel, Mode, PricingConfig, Variant};

use crate::error::CliError;
use crate::tables::{TableId, INTEREST_RATE};
use crate::units::{format_bp, format_percent, format_years, parse_count, parse_rate, parse_years};

/// Every accepted key, in emission order.
pub const KEYS: [&str; 21] = [
    "command", "id", "rows", "W0", "g", "T", "Nw", "beta", "r", "sigma", "alpha", "mode", "variant", "M", "J",
    "q", "paths", "seed", "format", "output", "timing",
];

/// Keys fixed by a built-in table's parameter set.
const TABLE_FIXED: [&str; 8] = ["g", "T", "Nw", "beta", "r", "sigma", "alpha", "mode"];

pub const DEFAULT_PREMIUM: f64 = 100.0;
pub const DEFAULT_FREQUENCY: u32 = 4;
pub const DEFAULT_PENALTY: f64 = 0.10;
pub const DEFAULT_VOLATILITY: f64 = 0.20;
pub const DEFAULT_PATHS: u64 = 2_000_000;
pub const DEFAULT_SEED: u64 = 42;

pub type Pairs = BTreeMap<String, String>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Price,
    Fee,
    Table,
    McValidate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Price => "price",
            Command::Fee => "fee",
            Command::Table => "table",
            Command::McValidate => "mc-validate",
        }
    }

    fn parse(text: &str) -> Result<Self, CliError> {
        match text.trim() {
            "price" => Ok(Command::Price),
            "fee" => Ok(Command::Fee),
            "table" => Ok(Command::Table),
            "mc-validate" => Ok(Command::McValidate),
            other => Err(CliError::usage("command", format!("unknown command '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Text,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Text => "text",
        }
    }
}

pub fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Static => "static",
        Mode::Dynamic => "dynamic",
    }
}

pub fn variant_name(variant: Variant) -> &'static str {
    match variant {
        Variant::Density => "density",
        Variant::MomentMatched => "moment-matched",
    }
}

/// Contract and market for a single-contract command.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractSpec {
    pub rate: f64,
    pub maturity: f64,
    pub withdrawals_per_year: u32,
    pub penalty: f64,
    pub interest: f64,
    pub volatility: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableSpec {
    pub id: TableId,
    /// Selected rows, 1-based.
    pub rows: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub command: Command,
    pub premium: f64,
    /// Present for every command except `table`.
    pub contract: Option<ContractSpec>,
    /// Present for `table` only.
    pub table: Option<TableSpec>,
    pub fee: Option<f64>,
    pub mode: Mode,
    pub variant: Variant,
    pub wealth_segments: usize,
    pub guarantee_levels: usize,
    pub order: usize,
    pub paths: usize,
    pub seed: u64,
    pub format: Format,
    pub output: Option<String>,
    pub timing: bool,
}

/// Reads `key=value` lines. Unknown and repeated keys are errors.
pub fn parse_config_text(text: &str) -> Result<Pairs, CliError> {
    let mut pairs = Pairs::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| CliError::Usage {
            key: None,
            message: format!("line {}: expected key=value, got '{line}'", lineno + 1),
        })?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(CliError::usage(key, format!("unknown key (line {})", lineno + 1)));
        }
        if pairs.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(CliError::usage(key, format!("repeated key (line {})", lineno + 1)));
        }
    }
    Ok(pairs)
}

fn positive(key: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::usage(key, format!("must be positive, got {v}")))
    }
}

fn non_negative(key: &str, v: f64) -> Result<f64, CliError> {
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(CliError::usage(key, format!("must be non-negative, got {v}")))
    }
}

fn fraction(key: &str, v: f64) -> Result<f64, CliError> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(CliError::usage(key, format!("must lie between 0% and 100%, got {v}")))
    }
}

fn count_at_least(key: &str, text: &str, min: u64) -> Result<usize, CliError> {
    let v = parse_count(key, text)?;
    if v < min {
        return Err(CliError::usage(key, format!("must be at least {min}, got {v}")));
    }
    usize::try_from(v).map_err(|_| CliError::usage(key, "too large"))
}

/// Typed lookup with a default.
struct Lookup<'a> {
    pairs: &'a Pairs,
}

impl Lookup<'_> {
    fn get(&self, key: &str) -> Option<&str> {
        self.pairs.get(key).map(String::as_str)
    }

    fn or<T>(
        &self,
        key: &str,
        default: T,
        parse: impl FnOnce(&str, &str) -> Result<T, CliError>,
    ) -> Result<T, CliError> {
        match self.get(key) {
            Some(v) => parse(key, v),
            None => Ok(default),
        }
    }
}

fn parse_mode(key: &str, text: &str) -> Result<Mode, CliError> {
    match text.trim() {
        "static" => Ok(Mode::Static),
        "dynamic" => Ok(Mode::Dynamic),
        other => Err(CliError::usage(key, format!("expected static or dynamic, got '{other}'"))),
    }
}

fn parse_variant(key: &str, text: &str) -> Result<Variant, CliError> {
    match text.trim() {
        "density" => Ok(Variant::Density),
        "moment-matched" => Ok(Variant::MomentMatched),
        other => Err(CliError::usage(key, format!("expected density or moment-matched, got '{other}'"))),
    }
}

fn parse_format(key: &str, text: &str) -> Result<Format, CliError> {
    match text.trim() {
        "csv" => Ok(Format::Csv),
        "json" => Ok(Format::Json),
        "text" => Ok(Format::Text),
        other => Err(CliError::usage(key, format!("expected csv, json or text, got '{other}'"))),
    }
}

fn parse_switch(key: &str, text: &str) -> Result<bool, CliError> {
    match text.trim() {
        "on" => Ok(true),
        "off" => Ok(false),
        other => Err(CliError::usage(key, format!("expected on or off, got '{other}'"))),
    }
}

fn parse_rows(key: &str, text: &str, available: usize) -> Result<Vec<usize>, CliError> {
    let mut rows = Vec::new();
    for part in text.split(',') {
        let row = count_at_least(key, part, 1)?;
        if row > available {
            return Err(CliError::usage(key, format!("row {row} out of range 1..={available}")));
        }
        if rows.contains(&row) {
            return Err(CliError::usage(key, format!("row {row} listed twice")));
        }
        rows.push(row);
    }
    Ok(rows)
}

impl RunSpec {
    /// Resolves `pairs` into a full spec. `command` (from the command line)
    /// takes precedence over a `command` key.
    pub fn resolve(command: Option<Command>, pairs: &Pairs) -> Result<Self, CliError> {
        if let Some(key) = pairs.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(CliError::usage(key.as_str(), "unknown key"));
        }
        let at = Lookup { pairs };
        let command = match (command, at.get("command")) {
            (Some(c), _) => c,
            (None, Some(text)) => Command::parse(text)?,
            (None, None) => return Err(CliError::usage("command", "no command given")),
        };

        let premium = at.or("W0", DEFAULT_PREMIUM, |k, v| {
            let w: f64 = v
                .trim()
                .parse()
                .map_err(|_| CliError::usage(k, format!("'{v}' is not a number")))?;
            if w.is_finite() {
                positive(k, w)
            } else {
                Err(CliError::usage(k, "must be finite"))
            }
        })?;
        let variant = at.or("variant", Variant::Density, parse_variant)?;
        let wealth_segments = at.or("M", 400, |k, v| count_at_least(k, v, 3))?;
        let order = at.or("q", 9, |k, v| count_at_least(k, v, 1))?;
        if order > MAX_ORDER {
            return Err(CliError::usage("q", format!("at most {MAX_ORDER}, got {order}")));
        }
        let paths = at.or("paths", DEFAULT_PATHS as usize, |k, v| count_at_least(k, v, 2))?;
        if paths % 2 == 1 {
            return Err(CliError::usage("paths", "must be even (antithetic pairs)"));
        }
        let seed = at.or("seed", DEFAULT_SEED, parse_count)?;
        let format = at.or("format", Format::Csv, parse_format)?;
        let output = at.get("output").map(str::to_string);
        let timing = at.or("timing", true, parse_switch)?;

        if command == Command::Table {
            for key in TABLE_FIXED {
                if pairs.contains_key(key) {
                    return Err(CliError::usage(key, "fixed by the built-in table; remove it"));
                }
            }
            let id = match at.get("id") {
                Some(text) => TableId::parse("id", text)?,
                None => return Err(CliError::usage("id", "table needs --id")),
            };
            let available = id.rows().len();
            let rows = match at.get("rows") {
                Some(text) => parse_rows("rows", text, available)?,
                None => (1..=available).collect(),
            };
            let guarantee_levels = at.or("J", id.guarantee_levels(), |k, v| count_at_least(k, v, 2))?;
            return Ok(RunSpec {
                command,
                premium,
                contract: None,
                table: Some(TableSpec { id, rows }),
                fee: None,
                mode: id.mode(),
                variant,
                wealth_segments,
                guarantee_levels,
                order,
                paths,
                seed,
                format,
                output,
                timing,
            });
        }

        for key in ["id", "rows"] {
            if pairs.contains_key(key) {
                return Err(CliError::usage(key, format!("only used by the table command, not {}", command.name())));
            }
        }
        let mode = at.or("mode", Mode::Static, parse_mode)?;
        if command == Command::McValidate && mode == Mode::Dynamic {
            return Err(CliError::usage("mode", "Monte Carlo validation covers static withdrawals only"));
        }

        let rate = at.get("g").map(|v| parse_rate("g", v).and_then(|g| positive("g", g))).transpose()?;
        let maturity = at.get("T").map(|v| parse_years("T", v).and_then(|t| positive("T", t))).transpose()?;
        let (rate, maturity) = match (rate, maturity) {
            (Some(g), Some(t)) => {
                if ((g * t) - 1.0).abs() > 1e-9 {
                    return Err(CliError::usage(
                        "T",
                        format!("{} is inconsistent with g={} (g·T must be 1)", format_years(t), format_percent(g)),
                    ));
                }
                (g, t)
            }
            (Some(g), None) => (g, 1.0 / g),
            (None, Some(t)) => (1.0 / t, t),
            (None, None) => return Err(CliError::usage("g", "give the contractual rate g or the maturity T")),
        };
        let withdrawals_per_year = at.or("Nw", DEFAULT_FREQUENCY as usize, |k, v| count_at_least(k, v, 1))?;
        let withdrawals_per_year =
            u32::try_from(withdrawals_per_year).map_err(|_| CliError::usage("Nw", "too large"))?;
        let penalty = at.or("beta", DEFAULT_PENALTY, |k, v| fraction(k, parse_rate(k, v)?))?;
        let interest = at.or("r", INTEREST_RATE, parse_rate)?;
        let volatility = at.or("sigma", DEFAULT_VOLATILITY, |k, v| non_negative(k, parse_rate(k, v)?))?;
        let fee = at.get("alpha").map(|v| non_negative("alpha", parse_rate("alpha", v)?)).transpose()?;
        if command == Command::Price && fee.is_none() {
            return Err(CliError::usage("alpha", "price needs the fee --alpha"));
        }
        let guarantee_levels = at.or("J", default_guarantee_levels(withdrawals_per_year), |k, v| {
            count_at_least(k, v, 2)
        })?;

        Ok(RunSpec {
            command,
            premium,
            contract: Some(ContractSpec {
                rate,
                maturity,
                withdrawals_per_year,
                penalty,
                interest,
                volatility,
            }),
            table: None,
            fee,
            mode,
            variant,
            wealth_segments,
            guarantee_levels,
            order,
            paths,
            seed,
            format,
            output,
            timing,
        })
    }

    /// Parses emitted or hand-written config text.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        Self::resolve(None, &parse_config_text(text)?)
    }

    /// Resolved spec as ordered `(key, value)` pairs.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let mut out = vec![("command", self.command.name().to_string())];
        if let Some(t) = &self.table {
            out.push(("id", t.id.name().to_string()));
            let rows: Vec<String> = t.rows.iter().map(usize::to_string).collect();
            out.push(("rows", rows.join(",")));
        }
        out.push(("W0", format!("{}", self.premium)));
        if let Some(c) = &self.contract {
            out.push(("g", format_percent(c.rate)));
            out.push(("T", format_years(c.maturity)));
            out.push(("Nw", c.withdrawals_per_year.to_string()));
            out.push(("beta", format_percent(c.penalty)));
            out.push(("r", format_percent(c.interest)));
            out.push(("sigma", format_percent(c.volatility)));
            if let Some(fee) = self.fee {
                out.push(("alpha", format_bp(fee)));
            }
            out.push(("mode", mode_name(self.mode).to_string()));
        }
        out.push(("variant", variant_name(self.variant).to_string()));
        out.push(("M", self.wealth_segments.to_string()));
        out.push(("J", self.guarantee_levels.to_string()));
        out.push(("q", self.order.to_string()));
        out.push(("paths", self.paths.to_string()));
        out.push(("seed", self.seed.to_string()));
        out.push(("format", self.format.name().to_string()));
        if let Some(path) = &self.output {
            out.push(("output", path.clone()));
        }
        out.push(("timing", if self.timing { "on" } else { "off" }.to_string()));
        out
    }

    pub fn emit(&self) -> String {
        self.to_pairs().into_iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn pricing_config(&self, mode: Mode, withdrawals_per_year: u32) -> PricingConfig {
        PricingConfig::new(mode, withdrawals_per_year)
            .with_variant(self.variant)
            .with_wealth_segments(self.wealth_segments)
            .with_guarantee_levels(self.guarantee_levels)
            .with_order(self.order)
    }

    /// Contract, flat market at `fee`, for single-contract commands.
    pub fn build_contract(&self) -> Result<(GmwbContract, &ContractSpec), CliError> {
        let c = self
            .contract
            .as_ref()
            .ok_or_else(|| CliError::usage("command", "no contract parameters for this command"))?;
        let contract = GmwbContract::new(self.premium, c.maturity, c.withdrawals_per_year, c.penalty)
            .map_err(|e| CliError::pricing("contract", e))?;
        Ok((contract, c))
    }
}

pub fn flat_market(contract: &GmwbContract, c: &ContractSpec, fee: f64) -> gmwb::Result<MarketModel> {
    MarketModel::flat(contract, c.interest, c.volatility, fee)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pairs(items: &[(&str, &str)]) -> Pairs {
        items.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn defaults_are_filled() {
        let s = RunSpec::resolve(Some(Command::Fee), &pairs(&[("g", "5%")])).unwrap();
        let c = s.contract.as_ref().unwrap();
        assert_eq!(c.maturity, 20.0);
        assert_eq!(c.withdrawals_per_year, 4);
        assert_eq!((s.wealth_segments, s.guarantee_levels, s.order), (400, 100, 9));
        assert_eq!(s.premium, 100.0);
        let monthly = RunSpec::resolve(Some(Command::Fee), &pairs(&[("g", "5%"), ("Nw", "12")])).unwrap();
        assert_eq!(monthly.guarantee_levels, 300);
    }

    #[test]
    fn maturity_alone_sets_rate() {
        let s = RunSpec::resolve(Some(Command::Fee), &pairs(&[("T", "10y")])).unwrap();
        assert_eq!(s.contract.unwrap().rate, 0.1);
    }

    #[test]
    fn inconsistent_rate_and_maturity() {
        let err = RunSpec::resolve(Some(Command::Fee), &pairs(&[("g", "5%"), ("T", "10")])).unwrap_err();
        assert!(matches!(&err, CliError::Usage { key: Some(k), .. } if k == "T"), "{err}");
        assert!(RunSpec::resolve(Some(Command::Fee), &pairs(&[("g", "5%"), ("T", "20")])).is_ok());
    }

    #[test]
    fn unitless_rate_rejected() {
        let err = RunSpec::resolve(Some(Command::Fee), &pairs(&[("g", "5%"), ("sigma", "20")])).unwrap_err();
        assert!(matches!(&err, CliError::Usage { key: Some(k), .. } if k == "sigma"), "{err}");
    }

    #[test]
    fn config_text_rules() {
        let p = parse_config_text("# comment\n g = 5% \n\nsigma=30% # trailing\n").unwrap();
        assert_eq!(p["g"], "5%");
        assert_eq!(p["sigma"], "30%");
        let err = parse_config_text("volatility=20%\n").unwrap_err();
        assert!(matches!(&err, CliError::Usage { key: Some(k), .. } if k == "volatility"), "{err}");
        assert!(parse_config_text("g=5%\ng=6%\n").is_err());
        assert!(parse_config_text("g 5%\n").is_err());
    }

    #[test]
    fn table_keys() {
        let s = RunSpec::resolve(Some(Command::Table), &pairs(&[("id", "table3-dynamic-monthly")])).unwrap();
        assert_eq!(s.guarantee_levels, 300);
        assert_eq!(s.mode, Mode::Dynamic);
        assert_eq!(s.table.as_ref().unwrap().rows, (1..=8).collect::<Vec<_>>());
        assert!(RunSpec::resolve(Some(Command::Table), &pairs(&[("id", "table1-static"), ("g", "5%")])).is_err());
        assert!(RunSpec::resolve(Some(Command::Table), &pairs(&[("id", "table1-static"), ("rows", "9")])).is_err());
        assert!(RunSpec::resolve(Some(Command::Fee), &pairs(&[("g", "5%"), ("id", "table1-static")])).is_err());
        assert!(RunSpec::resolve(Some(Command::Table), &Pairs::new()).is_err());
    }

    #[test]
    fn command_specific_requirements() {
        assert!(RunSpec::resolve(Some(Command::Price), &pairs(&[("g", "5%")])).is_err());
        assert!(
            RunSpec::resolve(Some(Command::McValidate), &pairs(&[("g", "5%"), ("mode", "dynamic")])).is_err()
        );
        assert!(RunSpec::resolve(Some(Command::Fee), &pairs(&[("g", "5%"), ("paths", "1001")])).is_err());
        assert!(RunSpec::resolve(None, &pairs(&[("g", "5%")])).is_err());
    }

    #[test]
    fn command_line_beats_file_command() {
        let s = RunSpec::resolve(Some(Command::Fee), &pairs(&[("command", "price"), ("g", "5%")])).unwrap();
        assert_eq!(s.command, Command::Fee);
    }

    #[test]
    fn emitted_table_spec_round_trips() {
        let s = RunSpec::resolve(
            Some(Command::Table),
            &pairs(&[("id", "table5-forsyth"), ("rows", "4,1"), ("timing", "off"), ("output", "t5.csv")]),
        )
        .unwrap();
        assert_eq!(RunSpec::parse(&s.emit()).unwrap(), s);
    }

    fn arb_spec() -> impl Strategy<Value = RunSpec> {
        (
            (
                prop_oneof![Just(Command::Price), Just(Command::Fee), Just(Command::McValidate)],
                0.5f64..1e6,
                0.01f64..0.5,
                prop_oneof![Just(1u32), Just(2), Just(4), Just(12)],
                0.0f64..1.0,
                -0.02f64..0.1,
                0.0f64..0.8,
                0.0f64..0.05,
            ),
            (
                prop_oneof![Just(Mode::Static), Just(Mode::Dynamic)],
                prop_oneof![Just(Variant::Density), Just(Variant::MomentMatched)],
                3usize..5000,
                2usize..1000,
                1usize..=64,
                1usize..10_000_000,
                any::<u64>(),
                prop_oneof![Just(Format::Csv), Just(Format::Json), Just(Format::Text)],
                any::<bool>(),
            ),
        )
            .prop_map(|((command, premium, g, nw, beta, r, sigma, fee), (mode, variant, m, j, q, pairs, seed, format, timing))| {
                RunSpec {
                    command,
                    premium,
                    contract: Some(ContractSpec {
                        rate: g,
                        maturity: 1.0 / g,
                        withdrawals_per_year: nw,
                        penalty: beta,
                        interest: r,
                        volatility: sigma,
                    }),
                    table: None,
                    fee: Some(fee),
                    mode: if command == Command::McValidate { Mode::Static } else { mode },
                    variant,
                    wealth_segments: m,
                    guarantee_levels: j,
                    order: q,
                    paths: 2 * pairs,
                    seed,
                    format,
                    output: None,
                    timing,
                }
            })
    }

    proptest! {
        #[test]
        fn emit_then_parse_is_identity(spec in arb_spec()) {
            let text = spec.emit();
            let back = RunSpec::parse(&text).unwrap();
            prop_assert_eq!(back, spec, "{}", text);
        }
    }
}
