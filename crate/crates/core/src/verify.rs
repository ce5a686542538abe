//! Self-checks of the computed series against identities, closed forms and
//! brute-force enumeration.

use std::fmt;

use crate::digit_model::{BlockIndex, Digit};
use crate::engine::{block_sum, EngineParams, MomentEngine, MomentTable};
use crate::numerics::{BigReal, ErrBound, Precision};
use crate::oracle::{oracle_error_term_explicit, oracle_level_error_terms, oracle_level_sums, OracleError};
use crate::series::{
    compare, delta_closed_form, delta_direct_sum, error_term_total_bound, level_zero_sum, sum_chain,
    sum_c_closed_form_for, ChainResult, LimitFlag, LimitReport, Ordering3, SeriesError, SeriesParams,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Warn,
    Fail,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Warn => "WARN",
            Status::Fail => "FAIL",
        })
    }
}

#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, status: Status, detail: impl Into<String>) -> Self {
        Check { name: name.into(), status, detail: detail.into() }
    }

    fn pass_or_fail(name: impl Into<String>, ok: bool, detail: impl Into<String>) -> Self {
        Check::new(name, if ok { Status::Pass } else { Status::Fail }, detail)
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", self.status, self.name, self.detail)
    }
}

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub digit: Digit,
    pub r_max: usize,
    pub params: SeriesParams,
    /// Largest block compared against enumeration.
    pub oracle_blocks: u32,
}

#[derive(Debug, thiserror::Error)]
pub enum VerifyError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

fn sci(x: &BigReal) -> String {
    x.to_scientific_string(3)
}

/// Runs every check and returns one line per check.
pub fn run_verify(cfg: &VerifyConfig) -> Result<Vec<Check>, VerifyError> {
    let mut checks = Vec::new();
    let p = cfg.params.precision();
    checks.extend(oracle_checks(cfg.digit, cfg.oracle_blocks, cfg.r_max.min(3), p)?);
    checks.push(error_term_sign_check(cfg.digit, cfg.oracle_blocks, p)?);

    let mut params = cfg.params;
    params.engine.max_occurrences = cfg.r_max;
    let chain = sum_chain(cfg.digit, &params)?;
    let report = LimitReport::from_chain(&chain);
    checks.extend(series_checks(&chain, &report));
    checks.push(delta_check(p));
    Ok(checks)
}

fn engine_tables(d: Digit, last: u32, r_max: usize, p: Precision) -> Result<Vec<MomentTable>, SeriesError> {
    let params = EngineParams::new(r_max, p);
    let engine = MomentEngine::new(d, params)?;
    let mut tables = vec![engine.seed()?];
    while tables.last().expect("seeded").level().get() < last {
        let next = engine.advance(tables.last().expect("seeded"))?;
        tables.push(next);
    }
    Ok(tables)
}

/// Engine block sums and level residuals against enumeration.
pub fn oracle_checks(d: Digit, blocks: u32, r_max: usize, p: Precision) -> Result<Vec<Check>, VerifyError> {
    let tables = engine_tables(d, blocks.max(1), r_max, p)?;
    let mut worst_ratio = 0.0f64;
    let mut worst_budget = ErrBound::ZERO;
    let mut failures = Vec::new();
    let mut residual_gap = ErrBound::ZERO;
    let mut residual_failures = Vec::new();
    let residual_tol = ErrBound::pow10(-15);
    for t in tables.iter().filter(|t| t.level().get() <= blocks) {
        let n = t.level();
        let oracle = oracle_level_sums(n, d, p)?;
        for r in 0..=r_max {
            let engine = block_sum(t, r).map_err(SeriesError::from)?;
            let truth = oracle.get(r).map_or(BigReal::zero(p), |b| b.value.clone());
            let diff = (&engine.value - &truth).abs().magnitude();
            let allowed = engine.uncertainty + ErrBound::pow10(-i64::from(p.digits()) + 3);
            worst_budget = worst_budget.max(engine.uncertainty);
            if !allowed.is_zero() {
                worst_ratio = worst_ratio.max(diff.to_f64() / allowed.to_f64());
            }
            if diff > allowed {
                failures.push(format!("n={} r={r}: engine {} vs enumeration {}", n.get(), engine.value, truth));
            }
            if r >= 1 && n.get() >= 1 {
                if let Some(c) = t.defect(r) {
                    let explicit = oracle_error_term_explicit(n, r as u32, d, p)?;
                    let gap = (&c.value - &explicit.value).abs().magnitude();
                    residual_gap = residual_gap.max(gap);
                    if gap > residual_tol || gap > c.uncertainty + explicit.uncertainty + residual_tol {
                        residual_failures.push(format!(
                            "n={} r={r}: residual {} vs -C_{{n,r}} {}",
                            n.get(),
                            sci(&-c.value.clone()),
                            sci(&-explicit.value)
                        ));
                    }
                }
            }
        }
    }
    let name = format!("engine block sums match enumeration (n <= {blocks}, r <= {r_max})");
    let detail = if failures.is_empty() {
        format!("worst |diff|/budget {worst_ratio:.2e}, largest budget {worst_budget}")
    } else {
        failures.join("; ")
    };
    let mut out = vec![Check::pass_or_fail(name, failures.is_empty() && worst_budget <= ErrBound::pow10(-12), detail)];
    let name = format!("level residuals equal -C_{{n,r}} from the explicit sum (1 <= n <= {blocks})");
    let detail = if residual_failures.is_empty() {
        format!("largest gap {residual_gap} (limit 1e-15)")
    } else {
        residual_failures.join("; ")
    };
    out.push(Check::pass_or_fail(name, residual_failures.is_empty(), detail));
    Ok(out)
}

/// `C_{n,r} >= 0` on enumerated blocks, strictly where a contributing term exists.
pub fn error_term_sign_check(d: Digit, blocks: u32, p: Precision) -> Result<Check, VerifyError> {
    let mut failures = Vec::new();
    let mut smallest: Option<BigReal> = None;
    for n in 1..=blocks {
        let terms = oracle_level_error_terms(BlockIndex(n), d, p)?;
        for (r, c) in terms.iter().enumerate().skip(1).take(5) {
            let r = r as u32;
            let strict = if d.get() == 0 { n > r } else { n >= r };
            if c.upper().is_negative() {
                failures.push(format!("C_{{{n},{r}}} = {} < 0", sci(&c.value)));
            } else if strict && !c.lower().is_positive() {
                failures.push(format!("C_{{{n},{r}}} = {} not certified positive", sci(&c.value)));
            }
            if strict && smallest.as_ref().is_none_or(|s| c.value < *s) {
                smallest = Some(c.value.clone());
            }
        }
    }
    let scope = if d.get() == 0 { "n > r" } else { "n >= r" };
    let name = format!("C_{{n,r}} >= 0 on enumerated blocks, > 0 for {scope} (n <= {blocks}, r <= 5)");
    let detail = if failures.is_empty() {
        format!("smallest strict term {}", smallest.map_or("-".to_string(), |s| sci(&s)))
    } else {
        failures.join("; ")
    };
    Ok(Check::pass_or_fail(name, failures.is_empty(), detail))
}

fn status_from(flags: &[LimitFlag], hard: impl Fn(&LimitFlag) -> bool, soft: impl Fn(&LimitFlag) -> bool) -> Status {
    if flags.iter().any(&hard) {
        Status::Fail
    } else if flags.iter().any(&soft) {
        Status::Warn
    } else {
        Status::Pass
    }
}

/// Checks computed from one chain of series values.
pub fn series_checks(chain: &ChainResult, report: &LimitReport) -> Vec<Check> {
    let d = chain.digit;
    let r_max = chain.series.len() - 1;
    let p = chain.series[0].params.precision();
    let rows = &report.rows;
    let mut out = Vec::new();

    if r_max >= 1 {
        let zero = d.get() == 0;
        let first = if zero { 0 } else { 1 };
        let margin = rows
            .windows(2)
            .skip(first)
            .map(|w| w[0].sigma.lower() - w[1].sigma.upper())
            .min()
            .map_or("-".to_string(), |m| sci(&m));
        let status = status_from(
            &report.flags,
            |f| matches!(f, LimitFlag::Increase { .. }),
            |f| matches!(f, LimitFlag::UnresolvedStep { .. }),
        );
        let detail = match status {
            Status::Pass => format!("smallest certified step {margin}"),
            _ => describe_steps(report),
        };
        out.push(Check::new(format!("sigma_{d}(r+1) < sigma_{d}(r) for {first} <= r < {r_max}"), status, detail));

        let margin = rows.iter().skip(1).map(|row| row.gap.lower()).min().map_or("-".to_string(), |m| sci(&m));
        let status = status_from(
            &report.flags,
            |f| matches!(f, LimitFlag::BelowLimit { .. }),
            |f| matches!(f, LimitFlag::UnresolvedFloor { .. }),
        );
        let detail = match status {
            Status::Pass => format!("smallest certified gap {margin}"),
            _ => describe_floor(report),
        };
        out.push(Check::new(format!("sigma_{d}(r) > 10 ln 10 for 1 <= r <= {r_max}"), status, detail));

        let (name, expected) = if zero {
            (format!("sigma_{d}(0) > sigma_{d}(1)"), Ordering3::Above)
        } else {
            (format!("sigma_{d}(0) < sigma_{d}(1)"), Ordering3::Below)
        };
        let got = compare(&rows[0].sigma, &rows[1].sigma);
        let status = match got {
            g if g == expected => Status::Pass,
            Ordering3::Unresolved => Status::Warn,
            _ => Status::Fail,
        };
        let step = &rows[1].sigma.value - &rows[0].sigma.value;
        out.push(Check::new(
            name,
            status,
            format!("sigma(1) - sigma(0) = {} +- {}", sci(&step), rows[0].sigma.uncertainty + rows[1].sigma.uncertainty),
        ));

        out.push(error_term_positivity(report));
        out.push(error_term_routes(report));
        out.push(telescoping(chain, p));
        out.push(closed_form(chain, report, p));
        if let Some(check) = gap_ratio(report) {
            out.push(check);
        }
    }
    out
}

fn describe_steps(report: &LimitReport) -> String {
    report
        .flags
        .iter()
        .filter_map(|f| match f {
            LimitFlag::Increase { r } | LimitFlag::UnresolvedStep { r } => {
                let (a, b) = (&report.rows[*r as usize].sigma, &report.rows[*r as usize + 1].sigma);
                Some(format!(
                    "r={r}: sigma(r) = {} +- {}, sigma(r+1) = {} +- {}",
                    a.value.to_scientific_string(20),
                    a.uncertainty,
                    b.value.to_scientific_string(20),
                    b.uncertainty
                ))
            }
            _ => None,
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn describe_floor(report: &LimitReport) -> String {
    report
        .flags
        .iter()
        .filter_map(|f| match f {
            LimitFlag::BelowLimit { r } | LimitFlag::UnresolvedFloor { r } => {
                let row = &report.rows[*r as usize];
                Some(format!(
                    "r={r}: sigma = {} +- {}, 10 ln 10 = {}",
                    row.sigma.value.to_scientific_string(20),
                    row.sigma.uncertainty,
                    report.limit.to_scientific_string(20)
                ))
            }
            _ => None,
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn error_term_positivity(report: &LimitReport) -> Check {
    let mut status = Status::Pass;
    let mut notes = Vec::new();
    let mut smallest: Option<BigReal> = None;
    for c in report.rows.iter().filter_map(|row| row.c_r.as_ref()) {
        let e = c.estimate();
        if e.upper().is_negative() {
            status = Status::Fail;
            notes.push(format!("C_{} = {} +- {}", c.r, sci(&c.value), c.uncertainty));
        } else if !e.lower().is_positive() {
            if status == Status::Pass {
                status = Status::Warn;
            }
            notes.push(format!("C_{} = {} +- {} unresolved", c.r, sci(&c.value), c.uncertainty));
        }
        if smallest.as_ref().is_none_or(|s| c.value < *s) {
            smallest = Some(c.value.clone());
        }
    }
    let detail = if notes.is_empty() {
        format!("smallest C_r {}", smallest.map_or("-".to_string(), |s| sci(&s)))
    } else {
        notes.join("; ")
    };
    Check::new(format!("C_r > 0 for 1 <= r <= {}", report.rows.len() - 1), status, detail)
}

fn error_term_routes(report: &LimitReport) -> Check {
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for row in &report.rows[1..] {
        let c = row.c_r.as_ref().expect("r >= 1");
        let allowed = c.uncertainty + row.c_direct.uncertainty;
        let diff = (&c.value - &row.c_direct.value).abs().magnitude();
        if !allowed.is_zero() {
            worst = worst.max(diff.to_f64() / allowed.to_f64());
        }
        if diff > allowed {
            failures.push(format!(
                "r={}: from series {} vs block sum {}",
                row.r,
                c.value.to_scientific_string(20),
                row.c_direct.value.to_scientific_string(20)
            ));
        }
    }
    let detail =
        if failures.is_empty() { format!("worst |diff|/uncertainty {worst:.2e}") } else { failures.join("; ") };
    Check::pass_or_fail("C_r from consecutive series equals the block-by-block sum", failures.is_empty(), detail)
}

fn telescoping(chain: &ChainResult, p: Precision) -> Check {
    let r_max = chain.series.len() - 1;
    let mut value = chain.series[0].value.clone() - &chain.series[r_max].value;
    let mut unc = chain.series[0].uncertainty + chain.series[r_max].uncertainty;
    for r in 1..=r_max {
        value -= &chain.defects[r].value.mul_u64(10);
        value += level_zero_sum(chain.series[r].spec, p).mul_u64(10);
        unc += chain.defects[r].uncertainty.mul_u64(10);
    }
    unc += ErrBound::from_u64(200) * p.unit_roundoff().mul_u64(4 * r_max as u64 + 4);
    let d = chain.digit;
    Check::pass_or_fail(
        format!("sigma_{d}(0) - 10 sum C_r + 10 sum S_0^(r) - sigma_{d}({r_max}) = 0"),
        value.abs().magnitude() <= unc,
        format!("residual {} within {}", sci(&value), unc),
    )
}

fn closed_form(chain: &ChainResult, report: &LimitReport, p: Precision) -> Check {
    let d = chain.digit;
    let r_max = chain.series.len() - 1;
    let closed = sum_c_closed_form_for(d, &chain.series[0].value, p);
    let mut partial = BigReal::zero(p);
    let mut unc = chain.series[0].uncertainty * ErrBound::pow10(-1) + closed.magnitude() * p.unit_roundoff().mul_u64(8);
    for c in &chain.defects[1..] {
        partial += &c.value;
        unc += c.uncertainty;
    }
    let diff = &closed - &partial;
    // The remainder is sum_{r > r_max} C_r = gap(r_max) / 10.
    let gap = &report.rows[r_max].gap;
    let expected = gap.value.div_u64(10);
    let allowed = unc + gap.uncertainty * ErrBound::pow10(-1) + expected.magnitude() * p.unit_roundoff().mul_u64(4);
    let off = (&diff - &expected).abs().magnitude();
    let bound = error_term_total_bound(p);
    let under_bound = closed < bound;
    let mut status = if off <= allowed && under_bound { Status::Pass } else { Status::Fail };
    let mut detail = format!(
        "closed form {} vs sum to r={r_max}: remainder {} (expected gap/10 = {}), bound (9/20) pi^2/6 = {}",
        closed.to_scientific_string(15),
        sci(&diff),
        sci(&expected),
        bound.to_scientific_string(6)
    );
    if r_max >= 12 && diff.abs().magnitude() + unc >= ErrBound::pow10(-10) {
        status = Status::Fail;
        detail.push_str("; remainder not below 1e-10");
    }
    Check::new(format!("sum_{{r=1..{r_max}}} C_r against sigma_{d}(0)/10 - ln 10 + sum S_0^(r)"), status, detail)
}

fn gap_ratio(report: &LimitReport) -> Option<Check> {
    let last = (report.rows.len() - 1).min(11);
    if last < 3 {
        return None;
    }
    let mut ratios = Vec::new();
    let mut outside = Vec::new();
    for r in 2..last {
        let (a, b) = (&report.rows[r].gap, &report.rows[r + 1].gap);
        if !a.lower().is_positive() || !b.lower().is_positive() {
            outside.push(format!("r={r}: gap unresolved"));
            continue;
        }
        let ratio = (&b.value / &a.value).to_f64();
        ratios.push(ratio);
        if !(0.005..0.05).contains(&ratio) {
            outside.push(format!("r={r}: {ratio:.4}"));
        }
    }
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(0.0, f64::max);
    let status = if outside.is_empty() { Status::Pass } else { Status::Warn };
    let detail = if outside.is_empty() { format!("ratios in [{lo:.4}, {hi:.4}]") } else { outside.join("; ") };
    Some(Check::new(format!("gap(r+1)/gap(r) in (0.005, 0.05) for 2 <= r < {last}"), status, detail))
}

/// `H_9 - ln 10` against the double sum truncated at `t = 10^6`.
pub fn delta_check(p: Precision) -> Check {
    let closed = delta_closed_form(p);
    let direct = delta_direct_sum(1_000_000);
    let diff = (closed.to_f64() - direct).abs();
    Check::pass_or_fail(
        "H_9 - ln 10 equals the double sum truncated at T = 10^6",
        diff < 1e-5 && closed.is_positive(),
        format!("closed {} vs direct {direct:.12}, |diff| {diff:.2e} (limit 1e-5)", closed.to_decimal_string(15)),
    )
}
