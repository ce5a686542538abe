//! Brute-force ground truth by direct enumeration of blocks.
//!
//! Nothing here is clever on purpose: every block is walked integer by
//! integer and filtered with [`digit_count`]. Blocks above
//! [`MAX_ORACLE_BLOCK`] are refused.

use thiserror::Error;

use crate::digit_model::{digit_count, BlockIndex, Digit, DigitSpec};
use crate::numerics::{BigReal, ErrBound, Estimate, Precision};

/// Largest block index the oracle will enumerate (`9 * 10^7` integers).
pub const MAX_ORACLE_BLOCK: u32 = 7;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("block {0} is too large to enumerate (limit {MAX_ORACLE_BLOCK})")]
    BlockTooLarge(u32),
    #[error("error terms are defined for n >= 1 and r >= 1, got n={n}, r={r}")]
    InvalidErrorTerm { n: u32, r: u32 },
}

/// One block sum `S_n^(r)` with its uncertainty.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockSum {
    pub block: BlockIndex,
    pub spec: DigitSpec,
    pub value: BigReal,
    pub uncertainty: ErrBound,
}

fn check_block(n: BlockIndex) -> Result<std::ops::Range<u64>, OracleError> {
    if n.get() > MAX_ORACLE_BLOCK {
        return Err(OracleError::BlockTooLarge(n.get()));
    }
    Ok(n.range().expect("small blocks fit in u64"))
}

/// `sum k^-order` over block `n`, for every occurrence class `r = 0..=n+1`.
pub fn oracle_level_moments(n: BlockIndex, d: Digit, order: u32, p: Precision) -> Result<Vec<BlockSum>, OracleError> {
    assert!(order >= 1, "moment order starts at 1");
    let range = check_block(n)?;
    let classes = n.get() as usize + 2;
    let mut sums = vec![BigReal::zero(p); classes];
    let mut counts = vec![0u64; classes];
    let one = BigReal::one(p);
    for k in range {
        let r = digit_count(k, d) as usize;
        let inv = one.div_u64(k);
        let mut term = inv.clone();
        for _ in 1..order {
            term = &term * &inv;
        }
        sums[r] += term;
        counts[r] += 1;
    }
    let u = p.unit_roundoff();
    Ok(sums
        .into_iter()
        .zip(counts)
        .enumerate()
        .map(|(r, (value, count))| {
            // each term carries <= (order + 1) roundings, each partial sum one more
            let factor = ErrBound::from_u64(count + u64::from(order) + 2);
            let uncertainty = value.magnitude() * u * factor;
            BlockSum { block: n, spec: DigitSpec::new(d, r as u32), value, uncertainty }
        })
        .collect())
}

/// Reciprocal sums of block `n` for every occurrence class `r = 0..=n+1`.
pub fn oracle_level_sums(n: BlockIndex, d: Digit, p: Precision) -> Result<Vec<BlockSum>, OracleError> {
    oracle_level_moments(n, d, 1, p)
}

/// `S_n^(r) = sum of 1/k over the (n+1)-digit integers with exactly r
/// occurrences of the digit`.
pub fn oracle_block_sum(n: BlockIndex, spec: DigitSpec, p: Precision) -> Result<BlockSum, OracleError> {
    oracle_block_moment(n, spec, 1, p)
}

/// `sum k^-order` over the members of `E_n^(r)`.
pub fn oracle_block_moment(n: BlockIndex, spec: DigitSpec, order: u32, p: Precision) -> Result<BlockSum, OracleError> {
    let mut level = oracle_level_moments(n, spec.digit, order, p)?;
    let r = spec.occurrences as usize;
    if r < level.len() {
        Ok(level.swap_remove(r))
    } else {
        Ok(BlockSum { block: n, spec, value: BigReal::zero(p), uncertainty: ErrBound::ZERO })
    }
}

fn class(level: &[BlockSum], r: i64) -> Option<&BlockSum> {
    usize::try_from(r).ok().and_then(|r| level.get(r))
}

/// First-order defect `C_{n,r} = T_n^(r) - S_n^(r)` with
/// `T_n^(r) = (9/10) S_{n-1}^(r) + (1/10) S_{n-1}^(r-1)`, both sides enumerated.
pub fn oracle_error_term(n: BlockIndex, r: u32, d: Digit, p: Precision) -> Result<Estimate, OracleError> {
    if n.get() == 0 || r == 0 {
        return Err(OracleError::InvalidErrorTerm { n: n.get(), r });
    }
    check_block(n)?;
    let prev = oracle_level_sums(BlockIndex(n.get() - 1), d, p)?;
    let cur = oracle_level_sums(n, d, p)?;
    Ok(defect_from_levels(&prev, &cur, r, p))
}

/// `C_{n,r}` for every `r = 0..=n+1`, from one pair of enumerated levels.
pub fn oracle_level_error_terms(n: BlockIndex, d: Digit, p: Precision) -> Result<Vec<Estimate>, OracleError> {
    if n.get() == 0 {
        return Err(OracleError::InvalidErrorTerm { n: 0, r: 0 });
    }
    check_block(n)?;
    let prev = oracle_level_sums(BlockIndex(n.get() - 1), d, p)?;
    let cur = oracle_level_sums(n, d, p)?;
    Ok((0..=n.get() + 1).map(|r| defect_from_levels(&prev, &cur, r, p)).collect())
}

/// Defect `C_{n,r}` from two consecutive enumerated levels.
pub(crate) fn defect_from_levels(prev: &[BlockSum], cur: &[BlockSum], r: u32, p: Precision) -> Estimate {
    let zero = BigReal::zero(p);
    let pick = |level: &[BlockSum], r: i64| {
        class(level, r).map_or((zero.clone(), ErrBound::ZERO), |b| (b.value.clone(), b.uncertainty))
    };
    let (same, same_unc) = pick(prev, i64::from(r));
    let (lower, lower_unc) = pick(prev, i64::from(r) - 1);
    let (actual, actual_unc) = pick(cur, i64::from(r));
    let approx = (same.mul_u64(9) + lower).div_u64(10);
    let value = &approx - &actual;
    let u = p.unit_roundoff();
    let rounding = (approx.magnitude() + actual.magnitude()) * u.mul_u64(6);
    Estimate { value, uncertainty: same_unc + lower_unc + actual_unc + rounding }
}

/// `C_{n,r}` evaluated from its explicit form: for every `t` in block `n - 1`
/// with `r` occurrences, `sum over non-target l of l / (10t (10t + l))`, plus
/// `d / (10t (10t + d))` for every `t` with `r - 1` occurrences.
pub fn oracle_error_term_explicit(n: BlockIndex, r: u32, d: Digit, p: Precision) -> Result<Estimate, OracleError> {
    if n.get() == 0 || r == 0 {
        return Err(OracleError::InvalidErrorTerm { n: n.get(), r });
    }
    check_block(n)?;
    let range = BlockIndex(n.get() - 1).range().expect("small block");
    let target = u64::from(d.get());
    let mut sum = BigReal::zero(p);
    let mut terms = 0u64;
    let mut add = |t: u64, l: u64| {
        let den = 10 * t * (10 * t + l);
        sum += BigReal::ratio(l as i64, den as i64, p);
        terms += 1;
    };
    for t in range {
        let c = digit_count(t, d);
        if c == r {
            for l in (1..=9).filter(|&l| l != target) {
                add(t, l);
            }
        } else if c + 1 == r && target > 0 {
            add(t, target);
        }
    }
    let uncertainty = sum.magnitude() * p.unit_roundoff() * ErrBound::from_u64(terms + 2);
    Ok(Estimate { value: sum, uncertainty })
}

/// `sum_{n=0..=last} S_n^(r)`, a lower bound on the full series.
pub fn oracle_series_prefix(spec: DigitSpec, last: BlockIndex, p: Precision) -> Result<Estimate, OracleError> {
    check_block(last)?;
    let mut value = BigReal::zero(p);
    let mut uncertainty = ErrBound::ZERO;
    for n in 0..=last.get() {
        let b = oracle_block_sum(BlockIndex(n), spec, p)?;
        value += &b.value;
        uncertainty += b.uncertainty + value.magnitude() * p.unit_roundoff();
    }
    Ok(Estimate { value, uncertainty })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digit_model::block_cardinality;

    fn p30() -> Precision {
        Precision::new(30).unwrap()
    }

    fn nine(r: u32) -> DigitSpec {
        DigitSpec::new(Digit::NINE, r)
    }

    fn close(a: &BigReal, b: &BigReal, tol_exp: i64) -> bool {
        (a - b).abs() <= BigReal::pow10(tol_exp, p30())
    }

    #[test]
    fn one_digit_blocks() {
        let p = p30();
        let s = oracle_block_sum(BlockIndex(0), nine(0), p).unwrap();
        assert!(close(&s.value, &BigReal::ratio(761, 280, p), -28));
        assert!(s.value.to_decimal_string(13).starts_with("2.717857142857"));
        let s = oracle_block_sum(BlockIndex(0), nine(1), p).unwrap();
        assert!(close(&s.value, &BigReal::ratio(1, 9, p), -28));
        let s = oracle_block_sum(BlockIndex(0), nine(2), p).unwrap();
        assert!(s.value.is_zero());
    }

    #[test]
    fn two_digit_block_with_one_nine() {
        let p = p30();
        let mut expected = BigReal::zero(p);
        for k in [19u64, 29, 39, 49, 59, 69, 79, 89, 90, 91, 92, 93, 94, 95, 96, 97, 98] {
            expected += BigReal::ratio(1, k as i64, p);
        }
        let s = oracle_block_sum(BlockIndex(1), nine(1), p).unwrap();
        assert!(close(&s.value, &expected, -27));
    }

    #[test]
    fn refuses_large_blocks() {
        let p = p30();
        assert_eq!(oracle_block_sum(BlockIndex(8), nine(0), p), Err(OracleError::BlockTooLarge(8)));
        assert!(oracle_error_term(BlockIndex(8), 1, Digit::NINE, p).is_err());
        assert!(oracle_series_prefix(nine(0), BlockIndex(8), p).is_err());
        assert!(oracle_error_term(BlockIndex(0), 1, Digit::NINE, p).is_err());
        assert!(oracle_error_term(BlockIndex(2), 0, Digit::NINE, p).is_err());
    }

    #[test]
    fn block_sums_within_cardinality_bounds() {
        let p = p30();
        for d in [0, 1, 9] {
            let d = Digit::new(d).unwrap();
            for n in 0..=3u32 {
                for b in oracle_level_sums(BlockIndex(n), d, p).unwrap() {
                    let card = BigReal::from_ubig(block_cardinality(BlockIndex(n), b.spec), p);
                    let hi = &card / BigReal::pow10(i64::from(n), p);
                    let lo = &card / BigReal::pow10(i64::from(n) + 1, p);
                    assert!(b.value <= hi && b.value >= lo, "n={n} {:?}", b.spec);
                }
            }
        }
    }

    #[test]
    fn error_term_vanishes_for_empty_sources() {
        let p = p30();
        let c = oracle_error_term(BlockIndex(1), 4, Digit::NINE, p).unwrap();
        assert!(c.value.is_zero());
    }

    #[test]
    fn error_term_first_block_two_routes() {
        let p = p30();
        let direct = oracle_error_term(BlockIndex(1), 1, Digit::NINE, p).unwrap();
        // sum_{l=1..8} l/(90(90+l)) + sum_{t=1..8} 9/(10t(10t+9))
        let mut expected = BigReal::zero(p);
        for l in 1..=8i64 {
            expected += BigReal::ratio(l, 90 * (90 + l), p);
        }
        for t in 1..=8i64 {
            expected += BigReal::ratio(9, 10 * t * (10 * t + 9), p);
        }
        assert!(direct.value.is_positive());
        assert!(close(&direct.value, &expected, -27));
        let explicit = oracle_error_term_explicit(BlockIndex(1), 1, Digit::NINE, p).unwrap();
        assert!(close(&explicit.value, &expected, -27));
    }

    #[test]
    fn second_block_error_term_within_summable_bound() {
        let p = p30();
        let c = oracle_error_term(BlockIndex(2), 1, Digit::NINE, p).unwrap();
        let sq1 = oracle_block_moment(BlockIndex(1), nine(1), 2, p).unwrap().value;
        let sq0 = oracle_block_moment(BlockIndex(1), nine(0), 2, p).unwrap().value;
        let bound = sq1.mul_u64(9).div_u64(25) + sq0.mul_u64(9).div_u64(100);
        assert!(c.value.is_positive());
        assert!(c.value < bound);
    }

    #[test]
    fn recurrence_holds_on_enumerated_data() {
        let p = p30();
        for d in Digit::all() {
            for n in 1..=3u32 {
                let prev = oracle_level_sums(BlockIndex(n - 1), d, p).unwrap();
                let cur = oracle_level_sums(BlockIndex(n), d, p).unwrap();
                for r in 1..=n + 1 {
                    let c = oracle_error_term_explicit(BlockIndex(n), r, d, p).unwrap();
                    let lower = if r >= 1 { prev.get(r as usize - 1).map(|b| b.value.clone()) } else { None };
                    let same = prev.get(r as usize).map(|b| b.value.clone()).unwrap_or_else(|| BigReal::zero(p));
                    let rhs = (same.mul_u64(9) + lower.unwrap_or_else(|| BigReal::zero(p))).div_u64(10) - &c.value;
                    assert!(close(&cur[r as usize].value, &rhs, -25), "d={d} n={n} r={r}");
                }
            }
        }
    }

    #[test]
    fn prefixes_increase() {
        let p = p30();
        let mut last = BigReal::zero(p);
        for n in 0..=4u32 {
            let s = oracle_series_prefix(nine(0), BlockIndex(n), p).unwrap();
            assert!(s.value > last);
            last = s.value;
        }
        assert!(oracle_series_prefix(nine(0), BlockIndex(0), p).unwrap().value.to_decimal_string(13).starts_with("2.717857142857"));
        assert!(last < BigReal::parse("22.920", p).unwrap());
    }
}
