//! Integer increment laws with exact rational probabilities.

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::WalkError;

/// A zero-mean integer step law. Probabilities are exact rationals: the sum
/// is checked to be exactly one and the mean exactly zero, so downstream
/// variance identities hold with no floating slack.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IncrementLaw {
    support: Vec<i64>,
    probs: Vec<Ratio<i64>>,
    /// cumulative probability scaled to 2^64; entry k is the exclusive upper
    /// bound of the u64 range mapped to support[k] (last entry is 2^64)
    thresholds: Vec<u128>,
}

impl IncrementLaw {
    /// Build from `(step, (numerator, denominator))` pairs.
    pub fn new(pairs: &[(i64, (i64, i64))]) -> Result<Self, WalkError> {
        let ratios: Result<Vec<_>, _> = pairs
            .iter()
            .map(|&(s, (n, d))| {
                if d <= 0 || n <= 0 {
                    Err(WalkError::BadProbabilities)
                } else {
                    Ok((s, Ratio::new(n, d)))
                }
            })
            .collect();
        Self::from_ratios(&ratios?)
    }

    pub fn from_ratios(pairs: &[(i64, Ratio<i64>)]) -> Result<Self, WalkError> {
        if pairs.is_empty() {
            return Err(WalkError::BadProbabilities);
        }
        let mut sorted = pairs.to_vec();
        sorted.sort_by_key(|&(s, _)| s);
        for w in sorted.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(WalkError::DuplicateStep);
            }
        }
        let mut sum = Ratio::zero();
        let mut mean = Ratio::zero();
        let mut var = Ratio::zero();
        for &(s, p) in &sorted {
            if !p.is_positive() {
                return Err(WalkError::BadProbabilities);
            }
            sum += p;
            mean += p * Ratio::from_integer(s);
            var += p * Ratio::from_integer(s * s);
        }
        if sum != Ratio::from_integer(1) {
            return Err(WalkError::BadProbabilities);
        }
        if !mean.is_zero() {
            return Err(WalkError::MeanNotZero);
        }
        if !var.is_positive() {
            return Err(WalkError::ZeroVariance);
        }
        let mut thresholds = Vec::with_capacity(sorted.len());
        let mut cum = Ratio::zero();
        for &(_, p) in &sorted {
            cum += p;
            let num = *cum.numer() as u128;
            let den = *cum.denom() as u128;
            thresholds.push((num << 64) / den);
        }
        *thresholds.last_mut().unwrap() = 1u128 << 64;
        Ok(IncrementLaw {
            support: sorted.iter().map(|&(s, _)| s).collect(),
            probs: sorted.iter().map(|&(_, p)| p).collect(),
            thresholds,
        })
    }

    /// The fair `+-1` coin.
    pub fn fair_pm1() -> Self {
        Self::new(&[(-1, (1, 2)), (1, (1, 2))]).expect("fair coin is valid")
    }

    pub fn is_fair_pm1(&self) -> bool {
        self.support == [-1, 1] && self.probs.iter().all(|p| *p == Ratio::new(1, 2))
    }

    /// Map a uniform u64 to a step. The 2^64 lattice is partitioned into
    /// blocks proportional to the probabilities (each block size off by at
    /// most one part in 2^64 from exact).
    #[inline]
    pub fn sample(&self, u: u64) -> i64 {
        let u = u as u128;
        for (k, &thr) in self.thresholds.iter().enumerate() {
            if u < thr {
                return self.support[k];
            }
        }
        unreachable!("last threshold is 2^64")
    }

    pub fn support(&self) -> &[i64] {
        &self.support
    }

    pub fn probabilities(&self) -> &[Ratio<i64>] {
        &self.probs
    }

    /// Exact variance (the mean is exactly zero by construction).
    pub fn variance(&self) -> Ratio<i64> {
        self.support
            .iter()
            .zip(&self.probs)
            .map(|(&s, &p)| p * Ratio::from_integer(s * s))
            .sum()
    }

    pub fn max_abs_step(&self) -> i64 {
        self.support.iter().map(|s| s.abs()).max().unwrap()
    }
}

/// JSON shape: `[[step, p], ...]` where `p` is either a number (must be an
/// exact binary fraction like 0.5 or 0.25) or a string `"n/d"`.
impl Serialize for IncrementLaw {
    fn serialize<Z: Serializer>(&self, ser: Z) -> Result<Z::Ok, Z::Error> {
        let rows: Vec<(i64, String)> = self
            .support
            .iter()
            .zip(&self.probs)
            .map(|(&s, p)| (s, format!("{}/{}", p.numer(), p.denom())))
            .collect();
        rows.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for IncrementLaw {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum P {
            Num(f64),
            Frac(String),
        }
        let rows: Vec<(i64, P)> = Vec::deserialize(de)?;
        let mut pairs = Vec::with_capacity(rows.len());
        for (s, p) in rows {
            let r = match p {
                P::Num(x) => {
                    dyadic_ratio(x).ok_or_else(|| D::Error::custom(WalkError::InexactProbability))?
                }
                P::Frac(f) => {
                    let (n, d) = f
                        .split_once('/')
                        .ok_or_else(|| D::Error::custom("expected \"n/d\""))?;
                    let n: i64 = n.trim().parse().map_err(D::Error::custom)?;
                    let d: i64 = d.trim().parse().map_err(D::Error::custom)?;
                    if d <= 0 {
                        return Err(D::Error::custom(WalkError::BadProbabilities));
                    }
                    Ratio::new(n, d)
                }
            };
            pairs.push((s, r));
        }
        IncrementLaw::from_ratios(&pairs).map_err(D::Error::custom)
    }
}

/// The exact rational value of a float, when it fits in i64 terms.
fn dyadic_ratio(x: f64) -> Option<Ratio<i64>> {
    if !(x > 0.0) || !x.is_finite() {
        return None;
    }
    let (mant, exp, sign) = num_traits::Float::integer_decode(x);
    debug_assert!(sign > 0);
    let mut num: i64 = i64::try_from(mant).ok()?;
    let mut exp = exp as i32;
    // strip trailing zero bits so the denominator is minimal
    while num % 2 == 0 && exp < 0 {
        num /= 2;
        exp += 1;
    }
    if exp > 0 {
        num = num.checked_mul(1i64.checked_shl(exp as u32)?)?;
        exp = 0;
    }
    // Beyond 2^-32 the number was almost surely meant as a decimal fraction
    // (0.1, 0.333...) that the double only approximates; demand "n/d" instead.
    if exp < -32 {
        return None;
    }
    Some(Ratio::new(num, 1i64 << (-exp)))
}
