//! Integer-exact `SL₂(ℤ)` matrices and their words in the generators `S`, `T`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Element of `SL₂(ℤ)` with entries `[[m11, m12], [m21, m22]]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SL2Matrix {
    m11: i64,
    m12: i64,
    m21: i64,
    m22: i64,
}

impl SL2Matrix {
    pub fn new(m11: i64, m12: i64, m21: i64, m22: i64) -> Result<Self> {
        let det = m11
            .checked_mul(m22)
            .zip(m12.checked_mul(m21))
            .and_then(|(p, q)| p.checked_sub(q))
            .ok_or(Error::Overflow)?;
        if det != 1 {
            return Err(Error::NotUnimodular(m11, m12, m21, m22, det));
        }
        Ok(Self { m11, m12, m21, m22 })
    }

    pub const fn identity() -> Self {
        Self { m11: 1, m12: 0, m21: 0, m22: 1 }
    }

    /// `S = [[0, 1], [-1, 0]]`.
    pub const fn s() -> Self {
        Self { m11: 0, m12: 1, m21: -1, m22: 0 }
    }

    /// `T = [[1, -1], [0, 1]]`.
    pub const fn t() -> Self {
        Self { m11: 1, m12: -1, m21: 0, m22: 1 }
    }

    pub fn entries(&self) -> [i64; 4] {
        [self.m11, self.m12, self.m21, self.m22]
    }

    pub fn trace(&self) -> i64 {
        self.m11 + self.m22
    }

    pub fn inverse(&self) -> Self {
        Self { m11: self.m22, m12: -self.m12, m21: -self.m21, m22: self.m11 }
    }

    pub fn checked_mul(&self, rhs: &Self) -> Result<Self> {
        let dot = |a: i64, b: i64, c: i64, d: i64| -> Option<i64> {
            a.checked_mul(b)?.checked_add(c.checked_mul(d)?)
        };
        let m11 = dot(self.m11, rhs.m11, self.m12, rhs.m21);
        let m12 = dot(self.m11, rhs.m12, self.m12, rhs.m22);
        let m21 = dot(self.m21, rhs.m11, self.m22, rhs.m21);
        let m22 = dot(self.m21, rhs.m12, self.m22, rhs.m22);
        match (m11, m12, m21, m22) {
            (Some(m11), Some(m12), Some(m21), Some(m22)) => Ok(Self { m11, m12, m21, m22 }),
            _ => Err(Error::Overflow),
        }
    }

    pub fn max_abs_entry(&self) -> i64 {
        self.entries().iter().map(|e| e.abs()).max().unwrap_or(0)
    }

    /// Hyperbolic elements, `|Tr φ| > 2`: the quantum cat maps.
    pub fn is_anosov(&self) -> bool {
        self.trace().abs() > 2
    }

    /// Linear map carried by this element on Fourier exponents `(a, b)` under
    /// the Weil representation implemented in [`crate::weil`].
    ///
    /// For `φ = [[p, q], [r, s]]` the map is `[[s, q], [r, p]]`, i.e. the
    /// conjugate of `φ⁻¹` by `diag(1, -1)`. It agrees with `φ` on both
    /// generators, and `φ ↦ exponent_map(φ)` reverses products, which is
    /// what makes `ρ(φ)⁻¹ Op(f) ρ(φ) = Op(f∘φ)` consistent for every word.
    pub fn exponent_map(&self) -> [[i64; 2]; 2] {
        [[self.m22, self.m12], [self.m21, self.m11]]
    }

    pub fn act_on_exponent(&self, (a, b): (i64, i64)) -> (i64, i64) {
        let [[p, q], [r, s]] = self.exponent_map();
        (p * a + q * b, r * a + s * b)
    }
}

impl fmt::Display for SL2Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.m11, self.m12, self.m21, self.m22)
    }
}

/// Parses `"m11,m12,m21,m22"`.
impl FromStr for SL2Matrix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(Error::OutOfRange(format!(
                "expected four comma-separated integers, got {s:?}"
            )));
        }
        let mut e = [0i64; 4];
        for (slot, part) in e.iter_mut().zip(&parts) {
            *slot = part
                .parse()
                .map_err(|_| Error::OutOfRange(format!("not an integer: {part:?}")))?;
        }
        Self::new(e[0], e[1], e[2], e[3])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Letter {
    S,
    SInv,
    T,
    TInv,
}

impl Letter {
    pub fn matrix(self) -> SL2Matrix {
        match self {
            Letter::S => SL2Matrix::s(),
            Letter::SInv => SL2Matrix::s().inverse(),
            Letter::T => SL2Matrix::t(),
            Letter::TInv => SL2Matrix::t().inverse(),
        }
    }

    pub fn inverse(self) -> Self {
        match self {
            Letter::S => Letter::SInv,
            Letter::SInv => Letter::S,
            Letter::T => Letter::TInv,
            Letter::TInv => Letter::T,
        }
    }
}

/// A word in `{S, S⁻¹, T, T⁻¹}`, read left to right as a matrix product.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SL2Word {
    letters: Vec<Letter>,
}

impl SL2Word {
    /// Builds a freely reduced word.
    pub fn from_letters<I: IntoIterator<Item = Letter>>(letters: I) -> Self {
        let mut out: Vec<Letter> = Vec::new();
        for l in letters {
            if out.last() == Some(&l.inverse()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Self { letters: out }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn evaluate(&self) -> Result<SL2Matrix> {
        self.letters
            .iter()
            .try_fold(SL2Matrix::identity(), |acc, l| acc.checked_mul(&l.matrix()))
    }

    /// Maximal runs of equal letters, `(letter, run length)`.
    pub fn runs(&self) -> Vec<(Letter, usize)> {
        let mut runs: Vec<(Letter, usize)> = Vec::new();
        for &l in &self.letters {
            match runs.last_mut() {
                Some((last, n)) if *last == l => *n += 1,
                _ => runs.push((l, 1)),
            }
        }
        runs
    }
}

fn push_t_power(out: &mut Vec<Letter>, k: i64) {
    let letter = if k >= 0 { Letter::T } else { Letter::TInv };
    out.extend(std::iter::repeat_n(letter, k.unsigned_abs() as usize));
}

/// Writes `phi` as a word in `S` and `T` by Euclidean reduction of its first
/// column. The result is checked to multiply back to `phi` exactly.
pub fn decompose_sl2(phi: &SL2Matrix) -> Result<SL2Word> {
    // Re-validate: deserialized matrices bypass the constructor.
    let [a, b, c, d] = phi.entries();
    SL2Matrix::new(a, b, c, d)?;

    // Invariant: phi = prefix · cur.
    let mut prefix: Vec<Letter> = Vec::new();
    let mut cur = *phi;
    while cur.m21 != 0 {
        // Nearest-integer quotient keeps |a - k c| <= |c| / 2.
        let (a, c) = (cur.m11 as i128, cur.m21 as i128);
        let k = (a as f64 / c as f64).round() as i128;
        let k = [k - 1, k, k + 1]
            .into_iter()
            .min_by_key(|k| (a - k * c).abs())
            .expect("non-empty");
        let k = i64::try_from(k).map_err(|_| Error::Overflow)?;
        if k != 0 {
            // next = T^k · cur, so cur = T^{-k} · next.
            cur = SL2Matrix {
                m11: cur.m11 - k * cur.m21,
                m12: cur.m12 - k * cur.m22,
                ..cur
            };
            push_t_power(&mut prefix, -k);
        }
        // next = S · cur, so cur = S⁻¹ · next.
        cur = SL2Matrix::s().checked_mul(&cur)?;
        prefix.push(Letter::SInv);
    }
    // cur = ±[[1, x], [0, 1]]
    if cur.m11 == 1 {
        push_t_power(&mut prefix, -cur.m12);
    } else {
        prefix.push(Letter::S);
        prefix.push(Letter::S);
        push_t_power(&mut prefix, cur.m12);
    }
    let word = SL2Word::from_letters(prefix);
    debug_assert_eq!(word.evaluate().ok(), Some(*phi));
    if word.evaluate()? != *phi {
        return Err(Error::OutOfRange(format!("decomposition of {phi} failed")));
    }
    Ok(word)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_non_unimodular() {
        assert!(matches!(SL2Matrix::new(2, 0, 0, 2), Err(Error::NotUnimodular(..))));
        assert!("1,2,3".parse::<SL2Matrix>().is_err());
        assert_eq!("2,1,1,1".parse::<SL2Matrix>().unwrap(), SL2Matrix::new(2, 1, 1, 1).unwrap());
    }

    #[test]
    fn small_decompositions() {
        assert!(decompose_sl2(&SL2Matrix::identity()).unwrap().is_empty());
        assert_eq!(decompose_sl2(&SL2Matrix::s()).unwrap().letters(), &[Letter::S]);
        let t3 = SL2Matrix::new(1, -3, 0, 1).unwrap();
        assert_eq!(decompose_sl2(&t3).unwrap().letters(), &[Letter::T, Letter::T, Letter::T]);
        let minus = SL2Matrix::new(-1, 0, 0, -1).unwrap();
        assert_eq!(decompose_sl2(&minus).unwrap().evaluate().unwrap(), minus);
    }

    #[test]
    fn anosov_criterion() {
        assert!(SL2Matrix::new(2, 1, 1, 1).unwrap().is_anosov());
        assert!(!SL2Matrix::identity().is_anosov());
        assert!(!SL2Matrix::s().is_anosov());
        assert!(!SL2Matrix::t().is_anosov());
    }

    #[test]
    fn exponent_map_fixes_generators() {
        for g in [SL2Matrix::s(), SL2Matrix::t()] {
            let [p, q, r, s] = g.entries();
            assert_eq!(g.exponent_map(), [[p, q], [r, s]]);
        }
    }

    fn letter() -> impl Strategy<Value = Letter> {
        prop_oneof![Just(Letter::S), Just(Letter::SInv), Just(Letter::T), Just(Letter::TInv)]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn decomposition_round_trips(letters in prop::collection::vec(letter(), 0..=30)) {
            let phi = SL2Word::from_letters(letters).evaluate().unwrap();
            let word = decompose_sl2(&phi).unwrap();
            prop_assert_eq!(word.evaluate().unwrap(), phi);
        }

        #[test]
        fn exponent_map_reverses_products(
            a in prop::collection::vec(letter(), 0..12),
            b in prop::collection::vec(letter(), 0..12),
        ) {
            let phi = SL2Word::from_letters(a).evaluate().unwrap();
            let psi = SL2Word::from_letters(b).evaluate().unwrap();
            let prod = phi.checked_mul(&psi).unwrap();
            let v = (3, -2);
            prop_assert_eq!(
                prod.act_on_exponent(v),
                psi.act_on_exponent(phi.act_on_exponent(v))
            );
        }
    }
}
