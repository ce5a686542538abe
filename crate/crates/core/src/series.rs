//! Full series `sigma_d(r)` assembled from block sums, with rigorous tails.

use thiserror::Error;

use crate::digit_model::{block_cardinality, BlockIndex, Digit, DigitSpec};
use crate::engine::{block_sum, init_table, EngineError, EngineParams, MomentEngine, MomentTable};
use crate::numerics::{BigReal, ErrBound, Estimate, Precision};

pub const DEFAULT_MAX_BLOCKS: u32 = 600;

#[derive(Debug, Clone, Error)]
pub enum SeriesError {
    #[error("tolerance must be positive")]
    InvalidTolerance,
    #[error("not converged after {blocks} blocks")]
    NotConverged { blocks: u32, partial: Box<ChainResult> },
    #[error("tail bound unavailable after {blocks} blocks for r={r}: ratio test needs more blocks")]
    TailUnsound { blocks: u32, r: u32 },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesParams {
    pub engine: EngineParams,
    pub tol: ErrBound,
    /// Last block index that may be summed.
    pub max_blocks: u32,
}

impl SeriesParams {
    pub fn new(r_max: usize, precision: Precision, tol: ErrBound) -> Self {
        SeriesParams { engine: EngineParams::new(r_max, precision), tol, max_blocks: DEFAULT_MAX_BLOCKS }
    }

    /// Settings able to reach `10^-tol_digits` for every `r <= r_max`: the
    /// seed level and expansion depth grow with the target so that the first
    /// expanded level is already accurate enough, and the block cap covers
    /// the slowest tail.
    pub fn for_tolerance(r_max: usize, tol_digits: u32) -> Self {
        let digits = Precision::DEFAULT.digits().max(tol_digits + 8).min(Precision::MAX_DIGITS);
        let precision = Precision::new(digits).expect("digits within range");
        let seed_level = match tol_digits {
            0..=18 => 1,
            19..=40 => 2,
            _ => 3,
        };
        let reach = f64::from(seed_level) + 1.0 - 9f64.log10();
        let depth = ((f64::from(tol_digits + 2) / reach).ceil() as usize).saturating_sub(1);
        let trunc_depth = depth.clamp(crate::engine::DEFAULT_DEPTH, crate::engine::MAX_ORDER - 4);
        let tol = ErrBound::pow10(-i64::from(tol_digits));
        let max_blocks = (0..=r_max)
            .filter_map(|r| blocks_needed(DigitSpec::new(Digit::NINE, r as u32), tol.scale_pow2(-2)))
            .max()
            .map_or(DEFAULT_MAX_BLOCKS, |n| DEFAULT_MAX_BLOCKS.max(n + 16));
        SeriesParams {
            engine: EngineParams {
                max_order: trunc_depth + 4,
                trunc_depth,
                seed_level,
                max_occurrences: r_max,
                precision,
            },
            tol,
            max_blocks,
        }
    }

    pub fn precision(&self) -> Precision {
        self.engine.precision
    }
}

/// Digits of tolerance needed to separate consecutive `sigma_d(r)` up to
/// `r_max`; the gaps shrink by roughly a factor of 100 per step.
pub fn resolving_tolerance_digits(r_max: usize) -> u32 {
    (2 * r_max as u32 + 2).max(20)
}

/// Smallest block index after which the tail bound drops below `tol`.
pub fn blocks_needed(spec: DigitSpec, tol: ErrBound) -> Option<u32> {
    let mut tracker = TailTracker::new(spec);
    (0..=1_000_000u32).find(|&n| tracker.bound(u64::from(n)).is_some_and(|t| t <= tol))
}

#[derive(Clone, Debug)]
pub struct SeriesResult {
    pub spec: DigitSpec,
    pub value: BigReal,
    /// Block budgets, summation rounding and the tail bound.
    pub uncertainty: ErrBound,
    /// Number of blocks summed (indices `0..blocks_used`).
    pub blocks_used: u32,
    pub params: SeriesParams,
    pub converged: bool,
}

impl SeriesResult {
    pub fn estimate(&self) -> Estimate {
        Estimate { value: self.value.clone(), uncertainty: self.uncertainty }
    }
}

#[derive(Clone, Debug)]
pub struct ErrorTermSummary {
    pub digit: Digit,
    pub r: u32,
    pub value: BigReal,
    pub uncertainty: ErrBound,
}

impl ErrorTermSummary {
    pub fn estimate(&self) -> Estimate {
        Estimate { value: self.value.clone(), uncertainty: self.uncertainty }
    }
}

/// Every `sigma_d(r)`, `r = 0..=r_max`, from one moment chain, together with
/// the directly summed defects `C_r = sum_n C_{n,r}`.
#[derive(Clone, Debug)]
pub struct ChainResult {
    pub digit: Digit,
    pub series: Vec<SeriesResult>,
    /// Index `r`; entry 0 is the analogous sum for `r = 0`.
    pub defects: Vec<Estimate>,
}

/// Upper bound on `sum_{n > last} card(n, spec) 10^-n`, or `None` when the
/// ratio test does not yet apply.
pub fn tail_bound(last: BlockIndex, spec: DigitSpec) -> Option<ErrBound> {
    let n = u64::from(last.get());
    let r = u64::from(spec.occurrences);
    let ratio = tail_ratio(n, r)?;
    let card = block_cardinality(BlockIndex(last.get() + 1), spec);
    Some(ErrBound::from_ubig(&card) * ErrBound::pow10(-(n as i64 + 1)) * ratio)
}

/// `1 / (1 - rho)` with `rho = 0.9 (N + 2) / (N + 2 - r)`, rounded up.
fn tail_ratio(n: u64, r: u64) -> Option<ErrBound> {
    let num = 9 * (n + 2);
    let den = 10 * (n + 2).checked_sub(r)?;
    // 1 / (1 - num/den) = den / (den - num)
    let gap = den.checked_sub(num).filter(|&g| g > 0)?;
    Some(ErrBound::from_u64(den) * ErrBound::from_u64(gap).recip())
}

/// Running bound on `C(n, r) 0.9^n 9^-r` for `n >= r`.
#[derive(Clone, Copy, Debug)]
struct CardinalityTerm {
    r: u64,
    n: u64,
    value: ErrBound,
}

impl CardinalityTerm {
    fn new(r: u64) -> Self {
        CardinalityTerm { r, n: r, value: ErrBound::pow10(-(r as i64)) }
    }

    fn at(&mut self, n: u64) -> ErrBound {
        if n < self.r {
            return ErrBound::ZERO;
        }
        while self.n < n {
            let k = self.n + 1;
            self.value = self.value * ErrBound::from_u64(9 * k) * ErrBound::from_u64(10 * (k - self.r)).recip();
            self.n = k;
        }
        self.value
    }
}

/// Incremental form of [`tail_bound`] for one occurrence count.
#[derive(Clone, Debug)]
struct TailTracker {
    zero_digit: bool,
    r: u64,
    same: CardinalityTerm,
    lower: Option<CardinalityTerm>,
}

impl TailTracker {
    fn new(spec: DigitSpec) -> Self {
        let r = u64::from(spec.occurrences);
        let zero_digit = spec.digit.get() == 0;
        let lower = (!zero_digit && r >= 1).then(|| CardinalityTerm::new(r - 1));
        TailTracker { zero_digit, r, same: CardinalityTerm::new(r), lower }
    }

    fn bound(&mut self, last: u64) -> Option<ErrBound> {
        let ratio = tail_ratio(last, self.r)?;
        let n = last + 1;
        let head = if self.zero_digit {
            self.same.at(n).mul_u64(9)
        } else {
            let lower = self.lower.as_mut().map_or(ErrBound::ZERO, |t| t.at(n));
            self.same.at(n).mul_u64(8) + lower
        };
        Some(head * ratio)
    }
}

/// Upper bound on `sum_{n > last} C_{n,r}`, valid for every `r`.
fn defect_tail(last: u32) -> ErrBound {
    ErrBound::from_f64(4.5) * ErrBound::pow10(-i64::from(last))
}

/// Block-0 sum `S_0^(r)`, exact up to one rounding.
pub fn level_zero_sum(spec: DigitSpec, p: Precision) -> BigReal {
    let d = u64::from(spec.digit.get());
    let h9 = BigReal::harmonic(9, p);
    match (d, spec.occurrences) {
        (0, 0) => h9,
        (0, _) => BigReal::zero(p),
        (_, 0) => h9 - BigReal::ratio(1, d as i64, p),
        (_, 1) => BigReal::ratio(1, d as i64, p),
        _ => BigReal::zero(p),
    }
}

struct Accumulator {
    value: BigReal,
    budget: ErrBound,
    defect: BigReal,
    defect_budget: ErrBound,
    done: Option<SeriesResult>,
    tail: TailTracker,
}

/// Sums `sigma_d(r)` for all `r <= params.engine.max_occurrences` at once.
pub fn sum_chain(digit: Digit, params: &SeriesParams) -> Result<ChainResult, SeriesError> {
    if params.tol.is_zero() {
        return Err(SeriesError::InvalidTolerance);
    }
    let engine = MomentEngine::new(digit, params.engine)?;
    let p = params.precision();
    let u = p.unit_roundoff();
    let r_max = params.engine.max_occurrences;
    let seed_level = params.engine.seed_level;

    let mut acc: Vec<Accumulator> = (0..=r_max)
        .map(|r| Accumulator {
            value: BigReal::zero(p),
            budget: ErrBound::ZERO,
            defect: BigReal::zero(p),
            defect_budget: ErrBound::ZERO,
            done: None,
            tail: TailTracker::new(DigitSpec::new(digit, r as u32)),
        })
        .collect();

    let mut prev_sums: Option<Vec<Estimate>> = None;
    let mut table: Option<MomentTable> = None;
    let mut last = 0u32;
    for n in 0..=params.max_blocks {
        last = n;
        let (sums, defects) = if n <= seed_level {
            let sums = if n == seed_level {
                let t = engine.seed()?;
                let sums = first_order(&t, r_max)?;
                table = Some(t);
                sums
            } else {
                first_order(&init_table(digit, 1, r_max, BlockIndex(n), p)?, r_max)?
            };
            let defects = prev_sums.as_ref().map(|prev| enumerated_defects(prev, &sums, p));
            (sums, defects)
        } else {
            let next = engine.advance(table.as_ref().expect("seed table present"))?;
            let sums = first_order(&next, r_max)?;
            let defects: Vec<Estimate> = (0..=r_max).map(|r| next.defect(r).expect("advanced table").clone()).collect();
            table = Some(next);
            (sums, Some(defects))
        };

        for (r, a) in acc.iter_mut().enumerate() {
            if let Some(defects) = &defects {
                a.defect += &defects[r].value;
                a.defect_budget += defects[r].uncertainty + a.defect.magnitude() * u;
            }
            if a.done.is_some() {
                continue;
            }
            a.value += &sums[r].value;
            a.budget += sums[r].uncertainty + a.value.magnitude() * u;
            if let Some(tail) = a.tail.bound(u64::from(n)) {
                let total = a.budget + tail;
                if total <= params.tol {
                    a.done = Some(SeriesResult {
                        spec: DigitSpec::new(digit, r as u32),
                        value: a.value.clone(),
                        uncertainty: total,
                        blocks_used: n + 1,
                        params: *params,
                        converged: true,
                    });
                }
            }
        }
        prev_sums = Some(sums);
        if acc.iter().all(|a| a.done.is_some()) {
            break;
        }
    }

    let mut series = Vec::with_capacity(r_max + 1);
    let mut defects = Vec::with_capacity(r_max + 1);
    for (r, mut a) in acc.into_iter().enumerate() {
        let result = match a.done.take() {
            Some(s) => s,
            None => {
                let Some(tail) = a.tail.bound(u64::from(last)) else {
                    return Err(SeriesError::TailUnsound { blocks: last + 1, r: r as u32 });
                };
                SeriesResult {
                    spec: DigitSpec::new(digit, r as u32),
                    value: a.value.clone(),
                    uncertainty: a.budget + tail,
                    blocks_used: last + 1,
                    params: *params,
                    converged: false,
                }
            }
        };
        defects.push(Estimate { value: a.defect, uncertainty: a.defect_budget + defect_tail(last) });
        series.push(result);
    }
    let chain = ChainResult { digit, series, defects };
    if chain.series.iter().any(|s| !s.converged) {
        return Err(SeriesError::NotConverged { blocks: last + 1, partial: Box::new(chain) });
    }
    Ok(chain)
}

fn first_order(t: &MomentTable, r_max: usize) -> Result<Vec<Estimate>, SeriesError> {
    (0..=r_max)
        .map(|r| {
            let b = block_sum(t, r)?;
            Ok(Estimate { value: b.value, uncertainty: b.uncertainty })
        })
        .collect()
}

/// `T - S` between two enumerated levels.
fn enumerated_defects(prev: &[Estimate], cur: &[Estimate], p: Precision) -> Vec<Estimate> {
    let u = p.unit_roundoff();
    (0..cur.len())
        .map(|r| {
            let mut t = prev[r].value.mul_u64(9);
            let mut err = prev[r].uncertainty.mul_u64(9);
            if r >= 1 {
                t += &prev[r - 1].value;
                err += prev[r - 1].uncertainty;
            }
            let t = t.div_u64(10);
            let err = err * ErrBound::pow10(-1);
            let value = &t - &cur[r].value;
            let err = err + cur[r].uncertainty + (t.magnitude() + value.magnitude()).mul_u64(4) * u;
            Estimate { value, uncertainty: err }
        })
        .collect()
}

/// `sigma_d(r)` for a single occurrence count.
pub fn sum_series(spec: DigitSpec, params: &SeriesParams) -> Result<SeriesResult, SeriesError> {
    let mut params = *params;
    params.engine.max_occurrences = spec.occurrences as usize;
    let chain = sum_chain(spec.digit, &params)?;
    Ok(chain.series.into_iter().last().expect("chain covers r"))
}

/// `C_r = (sigma(r-1) - sigma(r)) / 10 + S_0^(r)`.
pub fn error_term(prev: &SeriesResult, cur: &SeriesResult) -> ErrorTermSummary {
    assert_eq!(prev.spec.digit, cur.spec.digit, "error term needs one digit");
    assert_eq!(prev.spec.occurrences + 1, cur.spec.occurrences, "error term needs consecutive r");
    let p = cur.params.precision();
    let diff = (&prev.value - &cur.value).div_u64(10);
    let value = &diff + level_zero_sum(cur.spec, p);
    let u = p.unit_roundoff();
    let uncertainty = (prev.uncertainty + cur.uncertainty) * ErrBound::pow10(-1)
        + (diff.magnitude() + value.magnitude()).mul_u64(4) * u;
    ErrorTermSummary { digit: cur.spec.digit, r: cur.spec.occurrences, value, uncertainty }
}

/// `H_9 - ln 10`.
pub fn delta_closed_form(p: Precision) -> BigReal {
    BigReal::harmonic(9, p) - BigReal::ln10(p)
}

/// `sum_{l=0..9} sum_{t=1..T} (1/(10t) - 1/(10t+l))`, in double precision.
pub fn delta_direct_sum(t_max: u64) -> f64 {
    (1..=t_max)
        .rev()
        .map(|t| {
            let base = 10.0 * t as f64;
            (1..=9).map(|l| l as f64 / (base * (base + l as f64))).sum::<f64>()
        })
        .sum()
}

/// `sum_{r>=1} C_r = S^(0)/10 - ln 10 + 1/9`, the closed form for the digit 9.
pub fn sum_c_closed_form(s0: &BigReal, p: Precision) -> BigReal {
    sum_c_closed_form_for(Digit::NINE, s0, p)
}

/// `sum_{r>=1} C_r = sigma_d(0)/10 - ln 10 + sum_{r>=1} S_0^(r)` for any digit.
pub fn sum_c_closed_form_for(d: Digit, s0: &BigReal, p: Precision) -> BigReal {
    let mut out = s0.div_u64(10) - BigReal::ln10(p);
    if d.get() != 0 {
        out += BigReal::ratio(1, i64::from(d.get()), p);
    }
    out
}

/// `(9/20) pi^2 / 6`, an upper bound on `sum_r C_r`.
pub fn error_term_total_bound(p: Precision) -> BigReal {
    let pi = BigReal::pi(p);
    (&pi * &pi).mul_u64(9).div_u64(120)
}

/// Outcome of comparing two certified intervals.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ordering3 {
    Below,
    Above,
    Unresolved,
}

/// Orders `a` against `b` using their uncertainties.
pub fn compare(a: &Estimate, b: &Estimate) -> Ordering3 {
    if a.upper() < b.lower() {
        Ordering3::Below
    } else if a.lower() > b.upper() {
        Ordering3::Above
    } else {
        Ordering3::Unresolved
    }
}

#[derive(Clone, Debug)]
pub struct LimitRow {
    pub r: u32,
    pub sigma: Estimate,
    /// `sigma_d(r) - 10 ln 10`.
    pub gap: Estimate,
    /// `C_r` from consecutive series values; absent for `r = 0`.
    pub c_r: Option<ErrorTermSummary>,
    /// `C_r` summed block by block.
    pub c_direct: Estimate,
    pub blocks_used: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LimitFlag {
    /// `sigma(r + 1) > sigma(r)` for some `r >= 1` (or `r >= 0` for the digit 0).
    Increase { r: u32 },
    /// The intervals of `sigma(r)` and `sigma(r + 1)` overlap.
    UnresolvedStep { r: u32 },
    /// `sigma(r) < 10 ln 10` for some `r >= 1`.
    BelowLimit { r: u32 },
    UnresolvedFloor { r: u32 },
}

#[derive(Clone, Debug)]
pub struct LimitReport {
    pub digit: Digit,
    pub limit: BigReal,
    pub rows: Vec<LimitRow>,
    pub flags: Vec<LimitFlag>,
    /// For nonzero digits, whether `sigma(0) < sigma(1)` was certified.
    pub inversion_at_zero: Option<Ordering3>,
}

impl LimitReport {
    pub fn from_chain(chain: &ChainResult) -> Self {
        let p = chain.series[0].params.precision();
        let limit = BigReal::ln10(p).mul_u64(10);
        let limit_err = limit.magnitude() * p.unit_roundoff().mul_u64(4);
        let rows: Vec<LimitRow> = chain
            .series
            .iter()
            .enumerate()
            .map(|(r, s)| LimitRow {
                r: r as u32,
                sigma: s.estimate(),
                gap: Estimate { value: &s.value - &limit, uncertainty: s.uncertainty + limit_err },
                c_r: (r >= 1).then(|| error_term(&chain.series[r - 1], s)),
                c_direct: chain.defects[r].clone(),
                blocks_used: s.blocks_used,
            })
            .collect();

        let mut flags = Vec::new();
        let zero_digit = chain.digit.get() == 0;
        let first = if zero_digit { 0 } else { 1 };
        for w in rows.windows(2).skip(first) {
            match compare(&w[1].sigma, &w[0].sigma) {
                Ordering3::Below => {}
                Ordering3::Above => flags.push(LimitFlag::Increase { r: w[0].r }),
                Ordering3::Unresolved => flags.push(LimitFlag::UnresolvedStep { r: w[0].r }),
            }
        }
        let zero = Estimate::exact(BigReal::zero(p));
        for row in rows.iter().skip(1) {
            match compare(&row.gap, &zero) {
                Ordering3::Above => {}
                Ordering3::Below => flags.push(LimitFlag::BelowLimit { r: row.r }),
                Ordering3::Unresolved => flags.push(LimitFlag::UnresolvedFloor { r: row.r }),
            }
        }
        let inversion_at_zero = (!zero_digit && rows.len() > 1).then(|| compare(&rows[0].sigma, &rows[1].sigma));
        LimitReport { digit: chain.digit, limit, rows, flags, inversion_at_zero }
    }
}

/// Rows `r = 0..=r_max` with gaps to `10 ln 10` and both routes to `C_r`.
pub fn limit_report(d: Digit, params: &SeriesParams) -> Result<LimitReport, SeriesError> {
    Ok(LimitReport::from_chain(&sum_chain(d, params)?))
}
