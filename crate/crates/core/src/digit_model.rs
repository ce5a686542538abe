//! Decimal-digit bookkeeping: occurrence counts, block membership and exact
//! block cardinalities.

use std::fmt;

use dashu_int::UBig;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DigitError {
    #[error("digit must be in 0..=9, got {0}")]
    OutOfRange(u32),
}

/// A decimal digit, `0..=9`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Digit(u8);

impl Digit {
    pub const NINE: Digit = Digit(9);

    pub fn new(d: u32) -> Result<Self, DigitError> {
        if d <= 9 {
            Ok(Digit(d as u8))
        } else {
            Err(DigitError::OutOfRange(d))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = Digit> {
        (0..=9).map(Digit)
    }
}

impl fmt::Display for Digit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The target digit together with its exact number of occurrences.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DigitSpec {
    pub digit: Digit,
    pub occurrences: u32,
}

impl DigitSpec {
    pub fn new(digit: Digit, occurrences: u32) -> Self {
        DigitSpec { digit, occurrences }
    }
}

/// Index `n` of the block of `(n + 1)`-digit integers, `[10^n, 10^(n+1))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockIndex(pub u32);

impl BlockIndex {
    pub fn get(self) -> u32 {
        self.0
    }

    /// Integer range of the block, when it fits in a `u64`.
    pub fn range(self) -> Option<std::ops::Range<u64>> {
        let lo = 10u64.checked_pow(self.0)?;
        let hi = lo.checked_mul(10)?;
        Some(lo..hi)
    }
}

/// Number of occurrences of `d` in the decimal representation of `k`.
pub fn digit_count(mut k: u64, d: Digit) -> u32 {
    assert!(k >= 1, "digit_count needs a positive integer");
    let d = u64::from(d.get());
    let mut count = 0;
    while k > 0 {
        count += u32::from(k % 10 == d);
        k /= 10;
    }
    count
}

/// Block holding `k`, i.e. `floor(log10 k)`.
pub fn block_of(k: u64) -> BlockIndex {
    assert!(k >= 1, "block_of needs a positive integer");
    BlockIndex(k.ilog10())
}

/// Binomial coefficient `C(n, k)`; zero when `k < 0` or `k > n`.
pub fn binomial(n: u32, k: i64) -> UBig {
    if k < 0 || k > i64::from(n) {
        return UBig::ZERO;
    }
    let k = (k as u32).min(n - k as u32);
    let mut acc = UBig::ONE;
    for i in 0..k {
        acc *= UBig::from(n - i);
        acc /= UBig::from(i + 1);
    }
    acc
}

/// Exact size of the block `E_n^(r)` of `(n + 1)`-digit integers containing
/// `spec.digit` exactly `spec.occurrences` times.
///
/// The leading digit is never zero. For a nonzero digit it is one of eight
/// non-target digits or the target itself; for zero it is any of nine digits
/// and never a target occurrence.
pub fn block_cardinality(n: BlockIndex, spec: DigitSpec) -> UBig {
    let n = n.get();
    let r = i64::from(spec.occurrences);
    let nine = UBig::from(9u8);
    let nine_pow = |e: i64| if e < 0 { UBig::ZERO } else { nine.pow(e as usize) };
    if spec.digit.get() == 0 {
        binomial(n, r) * nine_pow(i64::from(n) - r + 1)
    } else {
        UBig::from(8u8) * binomial(n, r) * nine_pow(i64::from(n) - r)
            + binomial(n, r - 1) * nine_pow(i64::from(n) - r + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(d: u32, r: u32) -> DigitSpec {
        DigitSpec::new(Digit::new(d).unwrap(), r)
    }

    #[test]
    fn counts() {
        assert_eq!(digit_count(9, Digit::NINE), 1);
        assert_eq!(digit_count(1999, Digit::NINE), 3);
        assert_eq!(digit_count(100, Digit::new(0).unwrap()), 2);
        assert_eq!(digit_count(5, Digit::new(0).unwrap()), 0);
    }

    #[test]
    fn blocks() {
        assert_eq!(block_of(1), BlockIndex(0));
        assert_eq!(block_of(10), BlockIndex(1));
        assert_eq!(block_of(999), BlockIndex(2));
        assert_eq!(block_of(u64::MAX), BlockIndex(19));
        assert_eq!(BlockIndex(2).range(), Some(100..1000));
        assert_eq!(BlockIndex(19).range(), None);
    }

    #[test]
    fn digit_range_checked() {
        assert!(Digit::new(10).is_err());
        assert_eq!(Digit::all().count(), 10);
    }

    #[test]
    fn small_cardinalities() {
        assert_eq!(block_cardinality(BlockIndex(1), spec(9, 1)), UBig::from(17u8));
        assert_eq!(block_cardinality(BlockIndex(1), spec(0, 1)), UBig::from(9u8));
        assert_eq!(block_cardinality(BlockIndex(0), spec(9, 2)), UBig::ZERO);
        assert_eq!(block_cardinality(BlockIndex(0), spec(9, 0)), UBig::from(8u8));
        assert_eq!(block_cardinality(BlockIndex(0), spec(0, 0)), UBig::from(9u8));
    }

    #[test]
    fn cardinality_matches_enumeration() {
        for n in 0..=5u32 {
            let range = BlockIndex(n).range().unwrap();
            for d in Digit::all() {
                let mut counts = vec![0u64; n as usize + 3];
                for k in range.clone() {
                    counts[digit_count(k, d) as usize] += 1;
                }
                for (r, &c) in counts.iter().enumerate() {
                    let s = DigitSpec::new(d, r as u32);
                    assert_eq!(block_cardinality(BlockIndex(n), s), UBig::from(c), "n={n} d={d} r={r}");
                }
            }
        }
    }

    #[test]
    fn cardinalities_partition_the_block() {
        for n in 0..=8u32 {
            for d in Digit::all() {
                let total: UBig = (0..=n + 1).map(|r| block_cardinality(BlockIndex(n), DigitSpec::new(d, r))).sum();
                assert_eq!(total, UBig::from(9u8) * UBig::from(10u8).pow(n as usize));
                for r in n + 2..n + 5 {
                    assert_eq!(block_cardinality(BlockIndex(n), DigitSpec::new(d, r)), UBig::ZERO);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn appending_a_digit(t in 1u64..1_000_000_000, l in 0u64..10, d in 0u32..10) {
            let d = Digit::new(d).unwrap();
            let expected = digit_count(t, d) + u32::from(l == u64::from(d.get()));
            prop_assert_eq!(digit_count(10 * t + l, d), expected);
        }

        #[test]
        fn block_brackets_value(k in 1u64..u64::MAX / 10) {
            let n = block_of(k).get();
            prop_assert!(10u64.pow(n) <= k);
            prop_assert!(k < 10u64.pow(n) * 10);
        }
    }
}
