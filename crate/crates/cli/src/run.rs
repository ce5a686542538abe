use std::fmt::Write as _;

use irwin_core::digit_model::{BlockIndex, Digit};
use irwin_core::engine::{block_sum, init_table, MomentEngine, MomentTable};
use irwin_core::numerics::{BigReal, ErrBound, Precision};
use irwin_core::oracle::{oracle_level_sums, MAX_ORACLE_BLOCK};
use irwin_core::series::{
    error_term, resolving_tolerance_digits, sum_chain, ChainResult, LimitFlag, LimitReport, Ordering3, SeriesError,
    SeriesParams,
};
use irwin_core::verify::{run_verify, Status, VerifyConfig, VerifyError};
use serde::Serialize;

use crate::args::{EngineArgs, Format, OracleArgs, SumArgs, TableArgs, VerifyArgs};

const DEFAULT_TOL_DIGITS: u32 = 20;
const MIN_PRECISION: u32 = 15;

#[derive(Debug)]
pub enum Failure {
    /// Bad flags or an engine configuration that cannot run.
    Usage(String),
    /// Output was produced but the computation did not reach its target.
    NotConverged(String),
    /// A check or comparison failed.
    Check(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) | Failure::Check(_) => 1,
            Failure::NotConverged(_) => 2,
        }
    }
}

pub struct Outcome {
    pub text: String,
    pub failure: Option<Failure>,
}

/// Resolves the series settings for `r_max` from the flags.
pub fn series_params(r_max: usize, flags: &EngineArgs, default_tol_digits: u32) -> Result<SeriesParams, Failure> {
    let tol = match &flags.tol {
        Some(s) => {
            let x = BigReal::parse(s, Precision::DEFAULT).map_err(|e| Failure::Usage(e.to_string()))?;
            if !x.is_positive() {
                return Err(Failure::Usage(format!("--tol must be positive, got {s}")));
            }
            Some(x.magnitude())
        }
        None => None,
    };
    let tol_digits = tol.map_or(default_tol_digits, |t| (-t.log10()).ceil().max(0.0) as u32);
    let mut params = SeriesParams::for_tolerance(r_max, tol_digits);
    if let Some(t) = tol {
        params.tol = t;
    }
    if let Some(p) = flags.precision {
        if p < MIN_PRECISION {
            return Err(Failure::Usage(format!("--precision must be at least {MIN_PRECISION}, got {p}")));
        }
        params.engine.precision = Precision::new(p).map_err(|e| Failure::Usage(e.to_string()))?;
    }
    if let Some(j) = flags.j_max {
        params.engine.max_order = j as usize;
    }
    if let Some(i) = flags.trunc_depth {
        params.engine.trunc_depth = i as usize;
    }
    if let Some(n0) = flags.seed_level {
        params.engine.seed_level = n0;
    }
    if let Some(n) = flags.max_blocks {
        params.max_blocks = n;
    }
    params.engine.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(params)
}

/// Runs a chain, keeping partial results when the target was not reached.
fn chain_or_partial(d: Digit, params: &SeriesParams) -> Result<(ChainResult, Option<Failure>), Failure> {
    match sum_chain(d, params) {
        Ok(chain) => Ok((chain, None)),
        Err(SeriesError::NotConverged { blocks, partial }) => {
            let msg = format!("not converged after {blocks} blocks; raise --max-blocks or loosen --tol");
            Ok((*partial, Some(Failure::NotConverged(msg))))
        }
        Err(e @ SeriesError::TailUnsound { .. }) => Err(Failure::NotConverged(e.to_string())),
        Err(e) => Err(Failure::Usage(e.to_string())),
    }
}

#[derive(Serialize)]
struct SumRecord {
    digit: u8,
    r: u32,
    value: String,
    uncertainty: String,
    blocks_used: u32,
    j_max: usize,
    trunc_depth: usize,
    precision: u32,
    converged: bool,
}

#[derive(Serialize)]
struct Row {
    digit: u8,
    r: u32,
    value: String,
    uncertainty: String,
    blocks_used: u32,
    j_max: usize,
    trunc_depth: usize,
    precision: u32,
    converged: bool,
    gap: String,
    c_r: Option<String>,
}

fn rows(chain: &ChainResult, from: usize) -> Vec<Row> {
    let report = LimitReport::from_chain(chain);
    chain.series[from..]
        .iter()
        .map(|s| {
            let r = s.spec.occurrences as usize;
            let p = s.params.precision();
            let c_r = (r >= 1).then(|| error_term(&chain.series[r - 1], s).value.to_scientific_string(10));
            Row {
                digit: chain.digit.get(),
                r: r as u32,
                value: s.value.to_decimal_string(p.digits() as usize),
                uncertainty: s.uncertainty.to_string_up(2),
                blocks_used: s.blocks_used,
                j_max: s.params.engine.max_order,
                trunc_depth: s.params.engine.trunc_depth,
                precision: p.digits(),
                converged: s.converged,
                gap: report.rows[r].gap.value.to_scientific_string(10),
                c_r,
            }
        })
        .collect()
}

fn csv_rows(rows: &[Row]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["digit", "r", "value", "uncertainty", "gap", "c_r"]).expect("in-memory write");
    for row in rows {
        let fields = [
            row.digit.to_string(),
            row.r.to_string(),
            row.value.clone(),
            row.uncertainty.clone(),
            row.gap.clone(),
            row.c_r.clone().unwrap_or_default(),
        ];
        w.write_record(&fields).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

fn text_rows(rows: &[Row]) -> String {
    let width = rows.iter().map(|r| r.value.len()).max().unwrap_or(5).max(5);
    let mut out = format!("{:>3}  {:<width$}  {:<9}  {:<17}  {:<17}  {}\n", "r", "value", "unc", "gap", "c_r", "blocks");
    for row in rows {
        let c_r = row.c_r.as_deref().unwrap_or("-");
        let mark = if row.converged { "" } else { "  (not converged)" };
        let _ = writeln!(
            out,
            "{:>3}  {:<width$}  {:<9}  {:<17}  {:<17}  {}{mark}",
            row.r, row.value, row.uncertainty, row.gap, c_r, row.blocks_used
        );
    }
    out
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub fn sum(args: &SumArgs) -> Result<Outcome, Failure> {
    let params = series_params(args.r as usize, &args.engine, DEFAULT_TOL_DIGITS)?;
    let (chain, failure) = chain_or_partial(args.digit, &params)?;
    let s = chain.series.last().expect("chain covers r");
    let p = s.params.precision();
    let record = SumRecord {
        digit: args.digit.get(),
        r: args.r,
        value: s.value.to_decimal_string(p.digits() as usize),
        uncertainty: s.uncertainty.to_string_up(2),
        blocks_used: s.blocks_used,
        j_max: s.params.engine.max_order,
        trunc_depth: s.params.engine.trunc_depth,
        precision: p.digits(),
        converged: s.converged,
    };
    let text = match args.output.format {
        Format::Json => json(&record),
        Format::Csv => csv_rows(&rows(&chain, args.r as usize)),
        Format::Text => format!(
            "digit        {}\nr            {}\nvalue        {}\nuncertainty  {}\nblocks_used  {}\nj_max        {}\n\
             trunc_depth  {}\nprecision    {}\nconverged    {}\n",
            record.digit,
            record.r,
            record.value,
            record.uncertainty,
            record.blocks_used,
            record.j_max,
            record.trunc_depth,
            record.precision,
            record.converged
        ),
    };
    Ok(Outcome { text, failure })
}

pub fn table(args: &TableArgs) -> Result<Outcome, Failure> {
    let params = series_params(args.r_max as usize, &args.engine, DEFAULT_TOL_DIGITS)?;
    let (chain, failure) = chain_or_partial(args.digit, &params)?;
    let rows = rows(&chain, 0);
    let text = match args.output.format {
        Format::Json => json(&rows),
        Format::Csv => csv_rows(&rows),
        Format::Text => text_rows(&rows),
    };
    Ok(Outcome { text, failure })
}

pub fn limits(args: &TableArgs) -> Result<Outcome, Failure> {
    let r_max = args.r_max as usize;
    let params = series_params(r_max, &args.engine, resolving_tolerance_digits(r_max))?;
    let (chain, failure) = chain_or_partial(args.digit, &params)?;
    let report = LimitReport::from_chain(&chain);
    let rows = rows(&chain, 0);
    let text = match args.output.format {
        Format::Json => json(&rows),
        Format::Csv => csv_rows(&rows),
        Format::Text => {
            let mut out = text_rows(&rows);
            let _ = writeln!(out, "limit 10 ln 10 = {}", report.limit.to_decimal_string(params.precision().digits() as usize));
            if let Some(o) = report.inversion_at_zero {
                let word = match o {
                    Ordering3::Below => "certified",
                    Ordering3::Above => "violated",
                    Ordering3::Unresolved => "unresolved",
                };
                let _ = writeln!(out, "sigma(0) < sigma(1): {word}");
            }
            if report.flags.is_empty() {
                out.push_str("monotone decrease and floor certified for every row\n");
            }
            for f in &report.flags {
                let _ = writeln!(out, "flag: {}", describe_flag(f));
            }
            out
        }
    };
    Ok(Outcome { text, failure })
}

fn describe_flag(f: &LimitFlag) -> String {
    match f {
        LimitFlag::Increase { r } => format!("sigma({}) > sigma({r})", r + 1),
        LimitFlag::UnresolvedStep { r } => format!("sigma({}) vs sigma({r}) unresolved at this tolerance", r + 1),
        LimitFlag::BelowLimit { r } => format!("sigma({r}) < 10 ln 10"),
        LimitFlag::UnresolvedFloor { r } => format!("sigma({r}) vs 10 ln 10 unresolved at this tolerance"),
    }
}

#[derive(Serialize)]
struct CheckRecord<'a> {
    status: String,
    name: &'a str,
    detail: &'a str,
}

pub fn verify(args: &VerifyArgs) -> Result<Outcome, Failure> {
    let r_max = args.r_max as usize;
    if args.blocks > MAX_ORACLE_BLOCK {
        return Err(Failure::Usage(format!("--blocks must be at most {MAX_ORACLE_BLOCK}")));
    }
    let params = series_params(r_max, &args.engine, resolving_tolerance_digits(r_max))?;
    let cfg = VerifyConfig { digit: args.digit, r_max, params, oracle_blocks: args.blocks };
    let checks = match run_verify(&cfg) {
        Ok(c) => c,
        Err(VerifyError::Series(SeriesError::NotConverged { blocks, .. })) => {
            return Err(Failure::NotConverged(format!("series not converged after {blocks} blocks")))
        }
        Err(VerifyError::Series(e @ SeriesError::TailUnsound { .. })) => return Err(Failure::NotConverged(e.to_string())),
        Err(e) => return Err(Failure::Usage(e.to_string())),
    };
    let count = |s: Status| checks.iter().filter(|c| c.status == s).count();
    let (pass, warn, fail) = (count(Status::Pass), count(Status::Warn), count(Status::Fail));
    let text = match args.output.format {
        Format::Json => {
            let records: Vec<_> = checks
                .iter()
                .map(|c| CheckRecord { status: c.status.to_string(), name: &c.name, detail: &c.detail })
                .collect();
            json(&records)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["status", "name", "detail"]).expect("in-memory write");
            for c in &checks {
                w.write_record([c.status.to_string().as_str(), &c.name, &c.detail]).expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
        }
        Format::Text => {
            let mut out = String::new();
            for c in &checks {
                let _ = writeln!(out, "{c}");
            }
            let _ = writeln!(out, "{} checks: {pass} PASS, {warn} WARN, {fail} FAIL", checks.len());
            out
        }
    };
    let failure = (fail > 0).then(|| Failure::Check(format!("{fail} check(s) failed")));
    Ok(Outcome { text, failure })
}

#[derive(Serialize)]
struct OracleRow {
    n: u32,
    r: u32,
    oracle: String,
    engine: String,
    difference: String,
    budget: String,
    status: String,
}

/// Tables for levels `0..=last`: enumerated up to the seed level, expanded after.
fn engine_levels(d: Digit, last: u32, params: &SeriesParams) -> Result<Vec<MomentTable>, Failure> {
    let e = params.engine;
    let engine = MomentEngine::new(d, e).map_err(|e| Failure::Usage(e.to_string()))?;
    let mut tables = Vec::new();
    for n in 0..=last.min(e.seed_level) {
        let t = init_table(d, e.max_order, e.max_occurrences, BlockIndex(n), e.precision)
            .map_err(|e| Failure::Usage(e.to_string()))?;
        tables.push(t);
    }
    while tables.last().expect("level 0 present").level().get() < last {
        let next = engine.advance(tables.last().expect("level 0 present")).map_err(|e| Failure::Usage(e.to_string()))?;
        tables.push(next);
    }
    Ok(tables)
}

pub fn oracle(args: &OracleArgs) -> Result<Outcome, Failure> {
    if args.blocks > MAX_ORACLE_BLOCK {
        return Err(Failure::Usage(format!("--blocks must be at most {MAX_ORACLE_BLOCK}")));
    }
    let r_max = args.r_max as usize;
    let params = series_params(r_max, &args.engine, DEFAULT_TOL_DIGITS)?;
    let p = params.precision();
    let tables = engine_levels(args.digit, args.blocks, &params)?;
    let slack = ErrBound::pow10(-i64::from(p.digits()) + 3);
    let mut rows = Vec::new();
    for t in &tables {
        let n = t.level();
        let truth = oracle_level_sums(n, args.digit, p).map_err(|e| Failure::Usage(e.to_string()))?;
        for r in 0..=r_max {
            let engine = block_sum(t, r).map_err(|e| Failure::Usage(e.to_string()))?;
            let exact = truth.get(r).map_or(BigReal::zero(p), |b| b.value.clone());
            let diff = (&engine.value - &exact).abs();
            let ok = diff.magnitude() <= engine.uncertainty + slack;
            rows.push(OracleRow {
                n: n.get(),
                r: r as u32,
                oracle: exact.to_decimal_string(p.digits() as usize),
                engine: engine.value.to_decimal_string(p.digits() as usize),
                difference: diff.magnitude().to_string_up(2),
                budget: engine.uncertainty.to_string_up(2),
                status: if ok { "PASS" } else { "FAIL" }.to_string(),
            });
        }
    }
    let fails = rows.iter().filter(|r| r.status == "FAIL").count();
    let text = match args.output.format {
        Format::Json => json(&rows),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in &rows {
                w.serialize(row).expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
        }
        Format::Text => {
            let mut out = String::new();
            for row in &rows {
                let _ = writeln!(
                    out,
                    "{} n={} r={} oracle={} engine={} diff={} budget={}",
                    row.status, row.n, row.r, row.oracle, row.engine, row.difference, row.budget
                );
            }
            out
        }
    };
    let failure = (fails > 0).then(|| Failure::Check(format!("{fails} row(s) outside the engine budget")));
    Ok(Outcome { text, failure })
}
