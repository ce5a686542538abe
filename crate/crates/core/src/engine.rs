//! Propagation of power-sum moments from one block level to the next.
//!
//! For a level `n` the table holds `s_j(n, r) = sum 1/k^j` over the
//! `(n + 1)`-digit integers `k` with exactly `r` target digits, for orders
//! `1..=J` and occurrence counts `0..=R`. Writing `k = 10t + l` and expanding
//! `(10t + l)^-j` in powers of `l / 10t` gives each entry of level `n` as a
//! finite combination of level `n - 1` entries plus a bounded remainder.

use dashu_int::{IBig, UBig};
use thiserror::Error;

use crate::digit_model::{digit_count, BlockIndex, Digit, DigitSpec};
use crate::numerics::{BigReal, ErrBound, Estimate, Precision};
use crate::oracle::{BlockSum, MAX_ORACLE_BLOCK};

pub const MAX_ORDER: usize = 64;
pub const MAX_OCCURRENCES: usize = 512;
pub const DEFAULT_ORDER: usize = 24;
pub const DEFAULT_DEPTH: usize = 20;
pub const DEFAULT_SEED_LEVEL: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("invalid engine parameters: {0}")]
    InvalidParams(String),
    #[error("seed level {0} is too large to enumerate (limit {MAX_ORACLE_BLOCK})")]
    BlockTooLarge(u32),
    #[error("expansion remainder does not converge at level {level}, order {order}; seed at a higher level")]
    TruncationUnsound { level: u32, order: usize },
    #[error("moment at level {level}, order {order}, r={occurrences} is negative beyond its budget")]
    NegativeMoment { level: u32, order: usize, occurrences: usize },
    #[error("block sum at level {level}, r={occurrences} has a budget larger than its value")]
    OrderUnavailable { level: u32, occurrences: usize },
    #[error("occurrence count {requested} exceeds the table capacity {capacity}")]
    OccurrencesOutOfRange { requested: usize, capacity: usize },
}

/// Knobs of the moment recursion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EngineParams {
    /// Highest moment order `J`.
    pub max_order: usize,
    /// Expansion depth `I` (terms `i = 0..=I` are kept).
    pub trunc_depth: usize,
    /// Level enumerated directly.
    pub seed_level: u32,
    /// Highest occurrence count `R` carried.
    pub max_occurrences: usize,
    pub precision: Precision,
}

impl EngineParams {
    pub fn new(max_occurrences: usize, precision: Precision) -> Self {
        EngineParams {
            max_order: DEFAULT_ORDER,
            trunc_depth: DEFAULT_DEPTH,
            seed_level: DEFAULT_SEED_LEVEL,
            max_occurrences,
            precision,
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: String| Err(EngineError::InvalidParams(m));
        if self.max_order == 0 || self.max_order > MAX_ORDER {
            return bad(format!("j_max must be in 1..={MAX_ORDER}, got {}", self.max_order));
        }
        if self.trunc_depth >= self.max_order {
            return bad(format!(
                "trunc_depth must be below j_max, got {} >= {}",
                self.trunc_depth, self.max_order
            ));
        }
        if self.max_occurrences > MAX_OCCURRENCES {
            return bad(format!("r_max must be at most {MAX_OCCURRENCES}, got {}", self.max_occurrences));
        }
        if self.seed_level > MAX_ORACLE_BLOCK {
            return Err(EngineError::BlockTooLarge(self.seed_level));
        }
        Ok(())
    }
}

/// Moments of one level together with their error budgets.
#[derive(Clone, Debug)]
pub struct MomentTable {
    level: BlockIndex,
    digit: Digit,
    max_order: usize,
    max_occurrences: usize,
    precision: Precision,
    moments: Vec<BigReal>,
    budgets: Vec<ErrBound>,
    truncation: Vec<ErrBound>,
    defects: Option<Vec<Estimate>>,
    depth: usize,
}

impl MomentTable {
    fn idx(&self, j: usize, r: usize) -> usize {
        assert!((1..=self.max_order).contains(&j), "order {j} outside 1..={}", self.max_order);
        assert!(r <= self.max_occurrences, "occurrences {r} outside 0..={}", self.max_occurrences);
        r * self.max_order + (j - 1)
    }

    pub fn level(&self) -> BlockIndex {
        self.level
    }

    pub fn digit(&self) -> Digit {
        self.digit
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn max_occurrences(&self) -> usize {
        self.max_occurrences
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    /// Expansion depth used to build this level (zero for a seed).
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn moment(&self, j: usize, r: usize) -> &BigReal {
        &self.moments[self.idx(j, r)]
    }

    /// Total error budget of `moment(j, r)`.
    pub fn budget(&self, j: usize, r: usize) -> ErrBound {
        self.budgets[self.idx(j, r)]
    }

    /// Part of the budget added by truncating the expansion at this level.
    pub fn truncation(&self, j: usize, r: usize) -> ErrBound {
        self.truncation[self.idx(j, r)]
    }

    /// `T - S` for this level, where `T = (9 s_1(n-1, r) + s_1(n-1, r-1)) / 10`.
    /// Only available on advanced levels.
    pub fn defect(&self, r: usize) -> Option<&Estimate> {
        self.defects.as_ref().map(|d| &d[r])
    }
}

/// Enumerates block `n0` directly.
pub fn init_table(
    d: Digit,
    max_order: usize,
    max_occurrences: usize,
    seed_level: BlockIndex,
    p: Precision,
) -> Result<MomentTable, EngineError> {
    let n0 = seed_level.get();
    if n0 > MAX_ORACLE_BLOCK {
        return Err(EngineError::BlockTooLarge(n0));
    }
    let size = max_order * (max_occurrences + 1);
    let mut moments = vec![BigReal::zero(p); size];
    let mut counts = vec![0u64; max_occurrences + 1];
    for k in seed_level.range().expect("seed block fits in u64") {
        let c = digit_count(k, d) as usize;
        if c > max_occurrences {
            continue;
        }
        counts[c] += 1;
        let inv = BigReal::one(p).div_u64(k);
        let mut pw = inv.clone();
        for j in 0..max_order {
            moments[c * max_order + j] += &pw;
            if j + 1 < max_order {
                pw = &pw * &inv;
            }
        }
    }
    let u = p.unit_roundoff();
    let budgets = moments
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let (r, j) = (i / max_order, i % max_order + 1);
            m.magnitude() * u.mul_u64(counts[r] + j as u64 + 2)
        })
        .collect();
    Ok(MomentTable {
        level: seed_level,
        digit: d,
        max_order,
        max_occurrences,
        precision: p,
        moments,
        budgets,
        truncation: vec![ErrBound::ZERO; size],
        defects: None,
        depth: 0,
    })
}

/// First-order entry of a table as a block sum.
pub fn block_sum(table: &MomentTable, r: usize) -> Result<BlockSum, EngineError> {
    if r > table.max_occurrences {
        return Err(EngineError::OccurrencesOutOfRange { requested: r, capacity: table.max_occurrences });
    }
    let value = table.moment(1, r).clone();
    let uncertainty = table.budget(1, r);
    if !uncertainty.le_big(&value.abs()) && !uncertainty.is_zero() {
        return Err(EngineError::OrderUnavailable { level: table.level.get(), occurrences: r });
    }
    Ok(BlockSum {
        block: table.level,
        spec: DigitSpec::new(table.digit, r as u32),
        value,
        uncertainty,
    })
}

/// Advances `table` by one level with expansion depth at most `depth`,
/// keeping its order, occurrence range and precision.
pub fn advance(table: &MomentTable, depth: usize) -> Result<MomentTable, EngineError> {
    let params = EngineParams {
        max_order: table.max_order,
        trunc_depth: depth,
        seed_level: table.level.get().min(MAX_ORACLE_BLOCK),
        max_occurrences: table.max_occurrences,
        precision: table.precision,
    };
    MomentEngine::new(table.digit, params)?.advance(table)
}

/// A coefficient together with an upper bound on its magnitude.
#[derive(Clone, Debug)]
struct Coef {
    value: BigReal,
    mag: ErrBound,
}

/// Precomputed expansion coefficients for one digit and parameter set.
#[derive(Clone, Debug)]
pub struct MomentEngine {
    digit: Digit,
    params: EngineParams,
    /// `same[j][i] = C(j+i-1, i) * sum_{l != d} (-l)^i / 10^(j+i)`.
    same: Vec<Vec<Option<Coef>>>,
    /// `target[j][i] = C(j+i-1, i) * (-d)^i / 10^(j+i)`.
    target: Vec<Vec<Option<Coef>>>,
    /// `sum_{l != d} l^m` and `d^m`, as upper bounds.
    other_powers: Vec<ErrBound>,
    digit_powers: Vec<ErrBound>,
    binom: Vec<Vec<u128>>,
}

impl MomentEngine {
    pub fn new(digit: Digit, params: EngineParams) -> Result<Self, EngineError> {
        params.validate()?;
        let j_max = params.max_order;
        let p = params.precision;
        let d = i64::from(digit.get());

        let mut binom = vec![vec![0u128; 2 * j_max + 2]; 2 * j_max + 2];
        for a in 0..binom.len() {
            binom[a][0] = 1;
            for b in 1..=a {
                binom[a][b] = binom[a - 1][b - 1] + binom[a - 1][b];
            }
        }

        let power_sum = |i: u32| -> IBig {
            (0..=9i64).filter(|&l| l != d).map(|l| IBig::from(-l).pow(i as usize)).sum()
        };
        let make = |num: IBig, e: usize| -> Option<Coef> {
            if num == IBig::ZERO {
                return None;
            }
            let value = BigReal::from_ibig(num, p) / BigReal::pow10(e as i64, p);
            let mag = value.magnitude();
            Some(Coef { value, mag })
        };
        let mut same = vec![Vec::new(); j_max + 1];
        let mut target = vec![Vec::new(); j_max + 1];
        for j in 1..=j_max {
            for i in 0..=j_max - j {
                let c = IBig::from(UBig::from(binom[j + i - 1][i]));
                same[j].push(make(&c * power_sum(i as u32), j + i));
                target[j].push(make(&c * IBig::from(-d).pow(i), j + i));
            }
        }

        let mut other_powers = Vec::with_capacity(j_max + 2);
        let mut digit_powers = Vec::with_capacity(j_max + 2);
        for m in 0..=j_max + 1 {
            let s: UBig = (0..=9u32).filter(|&l| i64::from(l) != d).map(|l| UBig::from(l).pow(m)).sum();
            other_powers.push(ErrBound::from_ubig(&s));
            digit_powers.push(ErrBound::from_ubig(&UBig::from(d as u64).pow(m)));
        }

        Ok(MomentEngine { digit, params, same, target, other_powers, digit_powers, binom })
    }

    pub fn params(&self) -> &EngineParams {
        &self.params
    }

    pub fn digit(&self) -> Digit {
        self.digit
    }

    pub fn seed(&self) -> Result<MomentTable, EngineError> {
        init_table(
            self.digit,
            self.params.max_order,
            self.params.max_occurrences,
            BlockIndex(self.params.seed_level),
            self.params.precision,
        )
    }

    /// Depth actually used at `level`: the configured depth, lowered once the
    /// dropped terms sit well below the working precision.
    pub fn effective_depth(&self, level: BlockIndex) -> usize {
        let n = f64::from(level.get());
        let gain = n - 9f64.log10();
        let goal = f64::from(self.params.precision.digits()) + 3.0;
        let j_max = self.params.max_order;
        for i in 0..self.params.trunc_depth {
            let log_binom = (self.binom[j_max][(i + 1).min(j_max)] as f64).log10();
            if (i as f64 + 1.0) * gain - log_binom >= goal {
                return i;
            }
        }
        self.params.trunc_depth
    }

    /// Upper bound on `1 / (1 - q (j + depth + 1) / (depth + 2))`, or `None`
    /// if the remainder series is not dominated by a geometric one.
    fn remainder_factor(q: f64, j: usize, depth: usize) -> Option<ErrBound> {
        let x = (q * (j + depth + 1) as f64).next_up() / (depth + 2) as f64;
        let den = (1.0 - x.next_up()).next_down();
        (den > 0.0).then(|| ErrBound::from_f64((1.0 / den).next_up()))
    }

    /// Builds level `n + 1` from level `n`.
    pub fn advance(&self, prev: &MomentTable) -> Result<MomentTable, EngineError> {
        let j_max = self.params.max_order;
        let r_max = self.params.max_occurrences;
        let p = self.params.precision;
        if prev.max_order != j_max || prev.max_occurrences != r_max || prev.digit != self.digit {
            return Err(EngineError::InvalidParams("table shape does not match the engine".into()));
        }
        let n = prev.level.get() + 1;
        let level = BlockIndex(n);

        let q = ErrBound::pow10(-i64::from(n)).mul_u64(9);
        let qf = q.to_f64().max(f64::MIN_POSITIVE);
        let depth = self.effective_depth(level);
        let full = j_max - depth;
        if Self::remainder_factor(qf, full, depth).is_none() {
            return Err(EngineError::TruncationUnsound { level: n, order: full });
        }

        let u = p.unit_roundoff();
        let kappa = u.mul_u64(2 * depth as u64 + 8);
        let shrink = ErrBound::pow10(-i64::from(n - 1));
        let mut shrink_pows = vec![ErrBound::ONE];
        for _ in 0..=depth + 1 {
            let last = *shrink_pows.last().unwrap();
            shrink_pows.push(last * shrink);
        }

        // Magnitudes, per-entry input error and upper bounds of the previous level.
        let mag: Vec<ErrBound> = prev.moments.iter().map(BigReal::magnitude).collect();
        let input_err: Vec<ErrBound> = mag.iter().zip(&prev.budgets).map(|(&m, &b)| b + m * kappa).collect();
        let upper: Vec<ErrBound> = mag.iter().zip(&prev.budgets).map(|(&m, &b)| m + b).collect();
        let upper_at = |r: usize, m: usize| -> ErrBound {
            if m <= j_max {
                upper[r * j_max + m - 1]
            } else {
                upper[r * j_max + j_max - 1] * shrink_pows[m - j_max]
            }
        };

        let size = j_max * (r_max + 1);
        let mut moments = vec![BigReal::zero(p); size];
        let mut budgets = vec![ErrBound::ZERO; size];
        let mut truncation = vec![ErrBound::ZERO; size];
        let mut defects = vec![Estimate::exact(BigReal::zero(p)); r_max + 1];

        for (r, defect) in defects.iter_mut().enumerate() {
            if r > n as usize + 1 {
                continue;
            }
            let rows = [Some((r, &self.same)), r.checked_sub(1).map(|rm| (rm, &self.target))];
            for j in 1..=j_max {
                let d_j = if j <= full { depth } else { j_max - j };
                let factor = Self::remainder_factor(qf, j, d_j);

                let mut head = BigReal::zero(p);
                let mut head_err = ErrBound::ZERO;
                let mut tail = BigReal::zero(p);
                let mut tail_err = ErrBound::ZERO;
                let terms = if factor.is_some() { d_j } else { 0 };
                for &(rr, coefs) in rows.iter().flatten() {
                    for (i, c) in coefs[j].iter().enumerate().take(terms + 1) {
                        let Some(c) = c else { continue };
                        let k = rr * j_max + j + i - 1;
                        if prev.moments[k].is_zero() && prev.budgets[k].is_zero() {
                            continue;
                        }
                        let term = &c.value * &prev.moments[k];
                        let err = c.mag * input_err[k];
                        if i == 0 {
                            head += term;
                            head_err += err;
                        } else {
                            tail += term;
                            tail_err += err;
                        }
                    }
                }

                let trunc = factor.map(|f| {
                    let m = j + d_j + 1;
                    let b = ErrBound::from_ubig(&UBig::from(self.binom[j + d_j][d_j + 1]));
                    let mut t = self.other_powers[d_j + 1] * upper_at(r, m);
                    if r >= 1 {
                        t += self.digit_powers[d_j + 1] * upper_at(r - 1, m);
                    }
                    b * f * ErrBound::pow10(-(m as i64)) * t
                });

                let expanded = trunc.map(|t| (&head + &tail, head_err + tail_err + t, t));
                let crude = (j > full).then(|| {
                    // (1 + q)^-j >= 1 - jq, so s_j lies in [U (1 - 2w), U].
                    let w = q.mul_u64(j as u64).scale_pow2(-1);
                    let w = if w > ErrBound::pow2(-1) { ErrBound::pow2(-1) } else { w };
                    let half = &head * w.to_big(p);
                    let spread = half.magnitude() + half.magnitude() * u;
                    (&head - &half, head_err + spread + head.magnitude() * kappa, spread)
                });
                let (value, budget, trunc) = match (expanded, crude) {
                    (Some(e), Some(c)) => {
                        if c.1 < e.1 {
                            c
                        } else {
                            e
                        }
                    }
                    (Some(e), None) => e,
                    (None, Some(c)) => c,
                    (None, None) => return Err(EngineError::TruncationUnsound { level: n, order: j }),
                };

                if value.is_negative() && budget.le_big(&value.abs()) {
                    return Err(EngineError::NegativeMoment { level: n, order: j, occurrences: r });
                }
                if j == 1 {
                    let t = trunc;
                    *defect = Estimate { value: -tail, uncertainty: tail_err + t };
                }
                let k = r * j_max + j - 1;
                moments[k] = value;
                budgets[k] = budget;
                truncation[k] = trunc;
            }
        }

        Ok(MomentTable {
            level,
            digit: self.digit,
            max_order: j_max,
            max_occurrences: r_max,
            precision: p,
            moments,
            budgets,
            truncation,
            defects: Some(defects),
            depth,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{oracle_block_moment, oracle_error_term, oracle_level_moments};

    fn p(digits: u32) -> Precision {
        Precision::new(digits).unwrap()
    }

    fn digit(d: u32) -> Digit {
        Digit::new(d).unwrap()
    }

    fn params(j: usize, i: usize, n0: u32, r: usize, digits: u32) -> EngineParams {
        EngineParams { max_order: j, trunc_depth: i, seed_level: n0, max_occurrences: r, precision: p(digits) }
    }

    fn run(d: u32, prm: EngineParams, last: u32) -> Vec<MomentTable> {
        let engine = MomentEngine::new(digit(d), prm).unwrap();
        let mut tables = vec![engine.seed().unwrap()];
        while tables.last().unwrap().level().get() < last {
            let next = engine.advance(tables.last().unwrap()).unwrap();
            tables.push(next);
        }
        tables
    }

    #[test]
    fn seed_level_zero() {
        let t = init_table(Digit::NINE, 4, 2, BlockIndex(0), p(30)).unwrap();
        let h8 = BigReal::harmonic(8, p(30));
        assert!((t.moment(1, 0) - &h8).abs().magnitude() <= ErrBound::pow10(-28));
        assert!((t.moment(1, 1) - BigReal::ratio(1, 9, p(30))).abs().magnitude() <= ErrBound::pow10(-29));
        assert!(t.moment(1, 2).is_zero());
        let t0 = init_table(digit(0), 4, 2, BlockIndex(0), p(30)).unwrap();
        assert!(t0.moment(1, 1).is_zero());
        let h9 = BigReal::harmonic(9, p(30));
        assert!((t0.moment(1, 0) - &h9).abs().magnitude() <= ErrBound::pow10(-28));
    }

    #[test]
    fn seed_matches_enumeration_oracle() {
        let t = init_table(Digit::NINE, 3, 3, BlockIndex(2), p(30)).unwrap();
        for j in 1..=3u32 {
            for r in 0..=3u32 {
                let o = oracle_block_moment(BlockIndex(2), DigitSpec::new(Digit::NINE, r), j, p(30)).unwrap();
                let diff = (t.moment(j as usize, r as usize) - &o.value).abs().magnitude();
                assert!(diff <= t.budget(j as usize, r as usize) + o.uncertainty, "j={j} r={r}");
            }
        }
    }

    #[test]
    fn zero_depth_keeps_only_the_leading_term() {
        let prm = params(6, 0, 2, 2, 30);
        let engine = MomentEngine::new(Digit::NINE, prm).unwrap();
        let seed = engine.seed().unwrap();
        let next = engine.advance(&seed).unwrap();
        assert_eq!(next.depth(), 0);
        for r in 1..=2 {
            let t = (seed.moment(1, r).mul_u64(9) + seed.moment(1, r - 1)).div_u64(10);
            assert!((next.moment(1, r) - &t).abs().magnitude() <= ErrBound::pow10(-28));
            let c = next.defect(r).unwrap();
            assert!(c.value.is_zero());
            assert!(!c.uncertainty.is_zero());
        }
    }

    #[test]
    fn agrees_with_enumeration() {
        for d in [0, 3, 9] {
            let tables = run(d, params(16, 10, 1, 3, 30), 5);
            for t in &tables[1..] {
                let n = t.level();
                let oracle = oracle_level_moments(n, digit(d), 1, p(30)).unwrap();
                for r in 0..=3usize {
                    let o = oracle.get(r).map(|b| b.value.clone()).unwrap_or_else(|| BigReal::zero(p(30)));
                    let got = block_sum(t, r).unwrap();
                    assert!(got.uncertainty <= ErrBound::pow10(-12), "d={d} n={} r={r}: {}", n.get(), got.uncertainty);
                    let diff = (&got.value - &o).abs().magnitude();
                    assert!(diff <= got.uncertainty + ErrBound::pow10(-27), "d={d} n={} r={r}", n.get());
                }
            }
        }
    }

    #[test]
    fn defects_match_enumeration() {
        for d in [0, 9] {
            let tables = run(d, params(20, 12, 1, 3, 30), 4);
            for t in &tables[1..] {
                for r in 1..=3u32 {
                    let o = oracle_error_term(t.level(), r, digit(d), p(30)).unwrap();
                    let c = t.defect(r as usize).unwrap();
                    let diff = (&c.value - &o.value).abs().magnitude();
                    assert!(diff <= c.uncertainty + o.uncertainty, "d={d} n={} r={r}", t.level().get());
                }
            }
        }
    }

    #[test]
    fn deeper_expansion_tightens_budget() {
        let mut last = None;
        for i in [2, 6, 10, 14] {
            let t = run(9, params(16, i, 1, 2, 40), 3).pop().unwrap();
            let b = t.budget(1, 1);
            if let Some(prev) = last {
                assert!(b <= prev, "depth {i}");
            }
            last = Some(b);
        }
    }

    #[test]
    fn moments_decay_with_order() {
        let tables = run(9, params(12, 8, 1, 3, 30), 4);
        for t in &tables {
            let scale = BigReal::pow10(-i64::from(t.level().get()), p(30));
            for r in 0..=3 {
                for j in 1..12 {
                    let lhs = t.moment(j + 1, r);
                    let rhs = t.moment(j, r) * &scale;
                    assert!(*lhs <= &rhs + t.budget(j + 1, r).to_big(p(30)) + t.budget(j, r).to_big(p(30)));
                }
            }
        }
    }

    #[test]
    fn moments_are_nonnegative_and_vanish_past_the_block_width() {
        let tables = run(0, params(12, 8, 1, 6, 30), 4);
        for t in &tables {
            let n = t.level().get() as usize;
            for r in 0..=6 {
                for j in 1..=12 {
                    let m = t.moment(j, r);
                    assert!(!m.is_negative() || !t.budget(j, r).le_big(&m.abs()));
                    if r > n + 1 {
                        assert!(m.is_zero() && t.budget(j, r).is_zero());
                    }
                }
            }
        }
    }

    #[test]
    fn high_precision_kempner_block() {
        for prm in [params(20, 12, 2, 5, 30), params(24, 20, 1, 5, 30)] {
            let t = run(9, prm, 3).pop().unwrap();
            let o = oracle_block_moment(BlockIndex(3), DigitSpec::new(Digit::NINE, 0), 1, p(30)).unwrap();
            let s = block_sum(&t, 0).unwrap();
            assert!(s.uncertainty <= ErrBound::pow10(-20), "{prm:?}: {}", s.uncertainty);
            assert!((&s.value - &o.value).abs().magnitude() <= ErrBound::pow10(-20));
            let empty = block_sum(&t, 5).unwrap();
            assert!(empty.value.is_zero() && empty.uncertainty.is_zero());
        }
    }

    #[test]
    fn one_digit_seed_block_sum() {
        let t = init_table(Digit::NINE, 8, 2, BlockIndex(0), p(30)).unwrap();
        let s = block_sum(&t, 1).unwrap();
        assert!((&s.value - BigReal::ratio(1, 9, p(30))).abs().magnitude() <= ErrBound::pow10(-29));
        assert!(s.uncertainty <= ErrBound::pow10(-29));
    }

    #[test]
    fn full_depth_agrees_with_enumeration() {
        let engine = MomentEngine::new(Digit::NINE, params(12, 11, 1, 3, 30)).unwrap();
        let mut t = init_table(Digit::NINE, 12, 3, BlockIndex(1), p(30)).unwrap();
        for n in 2..=5u32 {
            t = engine.advance(&t).unwrap();
            let oracle = oracle_level_moments(BlockIndex(n), Digit::NINE, 1, p(30)).unwrap();
            for (r, o) in oracle.iter().enumerate().take(4) {
                let s = block_sum(&t, r).unwrap();
                assert!((&s.value - &o.value).abs().magnitude() <= s.uncertainty + o.uncertainty, "n={n} r={r}");
            }
        }
    }

    #[test]
    fn seeding_too_low_is_refused() {
        let engine = MomentEngine::new(Digit::NINE, params(24, 20, 0, 2, 30)).unwrap();
        let seed = engine.seed().unwrap();
        assert!(matches!(engine.advance(&seed), Err(EngineError::TruncationUnsound { level: 1, .. })));
    }

    #[test]
    fn parameter_validation() {
        assert!(MomentEngine::new(Digit::NINE, params(0, 0, 1, 1, 30)).is_err());
        assert!(MomentEngine::new(Digit::NINE, params(65, 20, 1, 1, 30)).is_err());
        assert!(MomentEngine::new(Digit::NINE, params(10, 10, 1, 1, 30)).is_err());
        assert!(matches!(
            MomentEngine::new(Digit::NINE, params(10, 5, 8, 1, 30)),
            Err(EngineError::BlockTooLarge(8))
        ));
        assert!(MomentEngine::new(Digit::NINE, params(10, 5, 1, MAX_OCCURRENCES + 1, 30)).is_err());
        let t = init_table(Digit::NINE, 4, 2, BlockIndex(1), p(30)).unwrap();
        assert!(matches!(block_sum(&t, 3), Err(EngineError::OccurrencesOutOfRange { .. })));
    }
}
