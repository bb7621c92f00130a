//! Verlinde dimensions `dim V_p(Σ_g)` and their splitting under spin
//! characters at level `p = 4r`.

use num_bigfloat::BigFloat;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{neumaier_sum, Scalar};

/// Allowed distance from an integer before rounding.
pub const INTEGRALITY_TOL: f64 = 1e-6;

/// `(p/4)^{g−1} Σ_j sin(2πj/p)^{2−2g}` with `j = 1..⌈p/2⌉−1`, i.e. up to
/// `p/2 − 1` for even `p` and `(p−1)/2` for odd `p`.
pub fn verlinde_value<T: Scalar>(g: u32, p: u64) -> Result<T> {
    if p < 3 {
        return Err(Error::OutOfRange(format!("level p must be at least 3, got {p}")));
    }
    let p_t = T::from_u64(p).ok_or(Error::Overflow)?;
    let top = if p.is_multiple_of(2) { p / 2 - 1 } else { (p - 1) / 2 };
    let power = 2 - 2 * g as i32;
    let terms = (1..=top).map(|j| {
        let x = T::TAU() * T::from_u64(j).expect("j < p") / p_t;
        x.sin().powi(power)
    });
    Ok((p_t / T::int(4)).powi(g as i32 - 1) * neumaier_sum(terms))
}

/// [`verlinde_value`] rounded, in the requested precision.
pub fn verlinde_dim_in<T: Scalar>(g: u32, p: u64) -> Result<u128> {
    let x: T = verlinde_value(g, p)?;
    let r = x.round();
    let tol = T::lit(INTEGRALITY_TOL);
    if !((x - r).abs() <= tol) || r < T::zero() {
        return Err(Error::NonIntegral {
            what: format!("dim V_{p}(genus {g})"),
            value: format!("{x:?}"),
        });
    }
    r.to_u128().ok_or(Error::Overflow)
}

/// Verlinde dimension evaluated in 40-digit arithmetic.
pub fn verlinde_dim(g: u32, p: u64) -> Result<u128> {
    verlinde_dim_in::<BigFloat>(g, p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct SpinCharacter {
    pub is_zero: bool,
    /// Meaningful for even `r` only; the zero character sits in the Arf 0 class.
    pub arf: u8,
}

impl SpinCharacter {
    pub fn label(&self, r_even: bool) -> &'static str {
        match (self.is_zero, r_even, self.arf) {
            (true, _, _) => "chi=0",
            (false, false, _) => "chi!=0",
            (false, true, 0) => "arf=0",
            (false, true, _) => "arf=1",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpinEntry {
    pub class: SpinCharacter,
    pub label: &'static str,
    pub multiplicity: u128,
    pub dimension: u128,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpinDimensionTable {
    pub genus: u32,
    pub r: u64,
    /// Level `N = 4r`.
    pub n: u64,
    pub total: u128,
    pub entries: Vec<SpinEntry>,
    pub partition_ok: bool,
}

impl SpinDimensionTable {
    /// Dimension of the summand for a nonzero character (Arf 1 for even `r`).
    pub fn nonzero_dimension(&self) -> u128 {
        self.entries.iter().rfind(|e| !e.class.is_zero).map_or(0, |e| e.dimension)
    }

    pub fn zero_dimension(&self) -> u128 {
        self.entries.iter().find(|e| e.class.is_zero).map_or(0, |e| e.dimension)
    }

    pub fn character_count(&self) -> u128 {
        self.entries.iter().map(|e| e.multiplicity).sum()
    }
}

fn exact_quotient(num: i128, den: i128, what: &str) -> Result<u128> {
    if num < 0 || num % den != 0 {
        return Err(Error::NonIntegral { what: what.into(), value: format!("{num}/{den}") });
    }
    Ok((num / den) as u128)
}

/// For odd `r`: `dim(χ≠0) = 4^{−g}(D − r^{g−1})`, `dim(χ=0) = dim(χ≠0) + r^{g−1}`.
/// For even `r`: `dim = 4^{−g}(D + r^{g−1}((−1)^ε 2^g − 1))` with `ε` the Arf
/// invariant; `2^{g−1}(2^g+1)` characters have `ε = 0`, `2^{g−1}(2^g−1)` have `ε = 1`.
pub fn spin_dimension_table(g: u32, r: u64) -> Result<SpinDimensionTable> {
    if g == 0 || r < 2 {
        return Err(Error::OutOfRange(format!("need genus >= 1 and r >= 2, got g = {g}, r = {r}")));
    }
    let n = r.checked_mul(4).ok_or(Error::Overflow)?;
    let total = verlinde_dim(g, n)?;
    let big = |x: u128| i128::try_from(x).map_err(|_| Error::Overflow);
    let d = big(total)?;
    let rg = big((r as u128).checked_pow(g - 1).ok_or(Error::Overflow)?)?;
    let two_g = 1i128.checked_shl(g).filter(|_| g < 60).ok_or(Error::Overflow)?;
    let four_g = two_g * two_g;
    let what = |s: &str| format!("dim V_{n}(genus {g}, {s})");
    let zero = SpinCharacter { is_zero: true, arf: 0 };
    let entries = if r % 2 == 1 {
        let nonzero = exact_quotient(d - rg, four_g, &what("chi!=0"))?;
        let nz = SpinCharacter { is_zero: false, arf: 0 };
        vec![
            SpinEntry { class: zero, label: zero.label(false), multiplicity: 1, dimension: nonzero + rg as u128 },
            SpinEntry { class: nz, label: nz.label(false), multiplicity: (four_g - 1) as u128, dimension: nonzero },
        ]
    } else {
        let half = two_g / 2;
        let arf0 = exact_quotient(d + rg * (two_g - 1), four_g, &what("arf=0"))?;
        let arf1 = exact_quotient(d + rg * (-two_g - 1), four_g, &what("arf=1"))?;
        let (c0, c1) = (SpinCharacter { is_zero: false, arf: 0 }, SpinCharacter { is_zero: false, arf: 1 });
        vec![
            SpinEntry { class: zero, label: zero.label(true), multiplicity: 1, dimension: arf0 },
            SpinEntry { class: c0, label: c0.label(true), multiplicity: (half * (two_g + 1) - 1) as u128, dimension: arf0 },
            SpinEntry { class: c1, label: c1.label(true), multiplicity: (half * (two_g - 1)) as u128, dimension: arf1 },
        ]
    };
    let sum = entries
        .iter()
        .try_fold(0u128, |acc, e| e.multiplicity.checked_mul(e.dimension).and_then(|x| acc.checked_add(x)))
        .ok_or(Error::Overflow)?;
    Ok(SpinDimensionTable { genus: g, r, n, total, entries, partition_ok: sum == total })
}

/// [`spin_dimension_table`] addressed by the level `p = 4r`.
pub fn spin_dimension_table_for_level(g: u32, p: u64) -> Result<SpinDimensionTable> {
    if !p.is_multiple_of(4) {
        return Err(Error::LevelNotDivisibleByFour(p));
    }
    spin_dimension_table(g, p / 4)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AsymptoticRow {
    pub r: u64,
    pub total: u128,
    /// `dim V_{4r}(Σ_g) / (4r)^{3g−3}`.
    pub estimate: f64,
    /// `dim V_{4r}(Σ_g, χ) / dim V_{4r}(Σ_g)` for a nonzero `χ`.
    pub ratio: f64,
}

/// Normalized Verlinde dimensions and the nonzero-character share along `r_values`.
pub fn asymptotic_volume_estimate(g: u32, r_values: &[u64]) -> Result<Vec<AsymptoticRow>> {
    if r_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::OutOfRange("r values must be strictly increasing".into()));
    }
    r_values
        .iter()
        .map(|&r| {
            let t = spin_dimension_table(g, r)?;
            let total = BigFloat::from_u128(t.total);
            let scale = num_traits::Float::powi(BigFloat::from_u64(4 * r), 3 * g as i32 - 3);
            Ok(AsymptoticRow {
                r,
                total: t.total,
                estimate: (total / scale).to_f64(),
                ratio: (BigFloat::from_u128(t.nonzero_dimension()) / total).to_f64(),
            })
        })
        .collect()
}
