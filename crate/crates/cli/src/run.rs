use std::time::Instant;

use gmwb::engine::aligned_guarantee_levels;
use gmwb::feesolver::{fee_std_error_bounds, fee_std_error_derivative};
use gmwb::{
    mc_static_price, price, solve_fair_fee, FeeSolverConfig, GmwbContract, McConfig, Mode, PricingConfig, BP,
};

use crate::error::CliError;
use crate::report::{Cell, Report};
use crate::spec::{flat_market, mode_name, variant_name, Command, ContractSpec, RunSpec};
use crate::tables::{frequency_name, TableRow, INTEREST_RATE};
use crate::units::{format_percent, format_years};

const FEE_DIGITS: usize = 4;

pub fn execute(spec: &RunSpec) -> Result<Report, CliError> {
    match spec.command {
        Command::Price => run_price(spec),
        Command::Fee => run_fee(spec),
        Command::Table => run_table(spec),
        Command::McValidate => run_mc_validate(spec),
    }
}

fn metadata(spec: &RunSpec) -> Vec<(String, String)> {
    let mut meta = vec![("tool".to_string(), format!("gmwb {}", env!("CARGO_PKG_VERSION")))];
    meta.extend(spec.to_pairs().into_iter().map(|(k, v)| (k.to_string(), v)));
    let solver = FeeSolverConfig::for_premium(spec.premium);
    meta.push(("fee_tolerance".into(), format!("{:e}", solver.tolerance)));
    meta.push(("fee_bracket".into(), format!("{}bp..{}bp", solver.lower * BP, solver.upper * BP)));
    meta
}

fn runtime(spec: &RunSpec, start: Instant) -> Cell {
    if spec.timing {
        Cell::Int(start.elapsed().as_millis() as u64)
    } else {
        Cell::Missing
    }
}

/// Guarantee levels actually used, after alignment; blank for static runs.
fn effective_levels(contract: &GmwbContract, config: &PricingConfig) -> Cell {
    match config.mode {
        Mode::Static => Cell::Missing,
        Mode::Dynamic if config.align_guarantee_grid => {
            Cell::Int(aligned_guarantee_levels(contract, config.guarantee_levels) as u64)
        }
        Mode::Dynamic => Cell::Int(config.guarantee_levels as u64),
    }
}

fn solve_fee(
    contract: &GmwbContract,
    c: &ContractSpec,
    config: &PricingConfig,
) -> Result<gmwb::FeeResult, CliError> {
    let solver = FeeSolverConfig::for_premium(contract.premium());
    solve_fair_fee(
        |fee| price(contract, &flat_market(contract, c, fee)?, config),
        contract.premium(),
        &solver,
    )
    .map_err(|e| CliError::pricing(format!("fair fee for g={}", format_percent(c.rate)), e))
}

fn run_price(spec: &RunSpec) -> Result<Report, CliError> {
    let (contract, c) = spec.build_contract()?;
    let fee = spec.fee.ok_or_else(|| CliError::usage("alpha", "price needs the fee --alpha"))?;
    let config = spec.pricing_config(spec.mode, c.withdrawals_per_year);
    let market = flat_market(&contract, c, fee).map_err(|e| CliError::pricing("market", e))?;
    let start = Instant::now();
    let value = price(&contract, &market, &config).map_err(|e| CliError::pricing("price", e))?;
    let mut report = Report::new(
        "Contract value",
        metadata(spec),
        vec!["g", "T", "alpha_bp", "price", "mode", "variant", "M", "J", "q", "runtime_ms"],
    );
    report.push(vec![
        Cell::Text(format_percent(c.rate)),
        Cell::Text(format_years(c.maturity)),
        Cell::Num(fee * BP, FEE_DIGITS),
        Cell::Num(value, 6),
        Cell::Text(mode_name(spec.mode).into()),
        Cell::Text(variant_name(spec.variant).into()),
        Cell::Int(spec.wealth_segments as u64),
        effective_levels(&contract, &config),
        Cell::Int(spec.order as u64),
        runtime(spec, start),
    ]);
    Ok(report)
}

fn run_fee(spec: &RunSpec) -> Result<Report, CliError> {
    let (contract, c) = spec.build_contract()?;
    let config = spec.pricing_config(spec.mode, c.withdrawals_per_year);
    let start = Instant::now();
    let result = solve_fee(&contract, c, &config)?;
    let mut report = Report::new(
        "Fair fee",
        metadata(spec),
        vec!["g", "T", "fee_bp", "mode", "variant", "M", "J", "q", "runtime_ms", "iterations", "residual"],
    );
    report.push(vec![
        Cell::Text(format_percent(c.rate)),
        Cell::Text(format_years(c.maturity)),
        Cell::Num(result.fee * BP, FEE_DIGITS),
        Cell::Text(mode_name(spec.mode).into()),
        Cell::Text(variant_name(spec.variant).into()),
        Cell::Int(spec.wealth_segments as u64),
        effective_levels(&contract, &config),
        Cell::Int(spec.order as u64),
        runtime(spec, start),
        Cell::Int(result.iterations as u64),
        Cell::Num(result.residual, 9),
    ]);
    Ok(report)
}

fn run_table(spec: &RunSpec) -> Result<Report, CliError> {
    let table = spec
        .table
        .as_ref()
        .ok_or_else(|| CliError::usage("id", "table needs --id"))?;
    let id = table.id;
    let mut columns = vec!["g", "T", "fee_bp", "mode", "variant", "M", "J", "q", "runtime_ms"];
    if id.has_reference() {
        columns.extend(["frequency", "sigma", "reference_bp"]);
    }
    let mut report = Report::new(format!("Fair fees, {}", id.name()), metadata(spec), columns);
    let rows = id.rows();
    for &index in &table.rows {
        let row: TableRow = rows[index - 1];
        let c = ContractSpec {
            rate: row.rate,
            maturity: 1.0 / row.rate,
            withdrawals_per_year: row.withdrawals_per_year,
            penalty: id.penalty(),
            interest: INTEREST_RATE,
            volatility: row.volatility,
        };
        let contract = GmwbContract::new(spec.premium, c.maturity, c.withdrawals_per_year, c.penalty)
            .map_err(|e| CliError::pricing("contract", e))?;
        let config = spec.pricing_config(id.mode(), c.withdrawals_per_year);
        let start = Instant::now();
        let result = solve_fee(&contract, &c, &config)?;
        let mut cells = vec![
            Cell::Text(format_percent(c.rate)),
            Cell::Text(format_years(c.maturity)),
            Cell::Num(result.fee * BP, FEE_DIGITS),
            Cell::Text(mode_name(id.mode()).into()),
            Cell::Text(variant_name(spec.variant).into()),
            Cell::Int(spec.wealth_segments as u64),
            effective_levels(&contract, &config),
            Cell::Int(spec.order as u64),
            runtime(spec, start),
        ];
        if id.has_reference() {
            cells.push(Cell::Text(frequency_name(c.withdrawals_per_year)));
            cells.push(Cell::Text(format_percent(c.volatility)));
            cells.push(row.reference_bp.map_or(Cell::Missing, |v| Cell::Num(v, 1)));
        }
        report.push(cells);
    }
    Ok(report)
}

fn run_mc_validate(spec: &RunSpec) -> Result<Report, CliError> {
    let (contract, c) = spec.build_contract()?;
    let config = spec.pricing_config(Mode::Static, c.withdrawals_per_year);
    let start = Instant::now();
    let quad = solve_fee(&contract, c, &config)?;

    let mc = McConfig::new(spec.paths, spec.seed);
    let mut mc_price = |fee: f64| Ok(mc_static_price(&contract, &flat_market(&contract, c, fee)?, &mc)?.price);
    let solver = FeeSolverConfig::for_premium(contract.premium()).with_initial_guess(quad.fee);
    let sim = solve_fair_fee(&mut mc_price, contract.premium(), &solver)
        .map_err(|e| CliError::pricing("Monte Carlo fair fee", e))?;
    let market = flat_market(&contract, c, sim.fee).map_err(|e| CliError::pricing("market", e))?;
    let eps = mc_static_price(&contract, &market, &mc)
        .map_err(|e| CliError::pricing("Monte Carlo price", e))?
        .std_error;
    let se_bounds = fee_std_error_bounds(&mut mc_price, contract.premium(), eps, &solver.with_initial_guess(sim.fee))
        .map_err(|e| CliError::pricing("fee standard error (bounds)", e))?;
    let se_derivative = fee_std_error_derivative(&mut mc_price, sim.fee, eps, &solver)
        .map_err(|e| CliError::pricing("fee standard error (derivative)", e))?;

    let mut report = Report::new(
        "Monte Carlo validation, static withdrawals",
        metadata(spec),
        vec![
            "g",
            "T",
            "mc_fee_bp",
            "quad_fee_bp",
            "diff_bp",
            "se_bounds_bp",
            "se_derivative_bp",
            "paths",
            "seed",
            "M",
            "q",
            "runtime_ms",
        ],
    );
    report.push(vec![
        Cell::Text(format_percent(c.rate)),
        Cell::Text(format_years(c.maturity)),
        Cell::Num(sim.fee * BP, FEE_DIGITS),
        Cell::Num(quad.fee * BP, FEE_DIGITS),
        Cell::Num((sim.fee - quad.fee) * BP, FEE_DIGITS),
        Cell::Num(se_bounds * BP, FEE_DIGITS),
        Cell::Num(se_derivative * BP, FEE_DIGITS),
        Cell::Int(spec.paths as u64),
        Cell::Int(spec.seed),
        Cell::Int(spec.wealth_segments as u64),
        Cell::Int(spec.order as u64),
        runtime(spec, start),
    ]);
    Ok(report)
}
