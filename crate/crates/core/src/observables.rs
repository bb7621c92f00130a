//! Classical observables on the two-torus as finite Fourier polynomials
//! `f = Σ c(a,b) XᵃYᵇ`, with `X = e^{2πiθ₁}` and `Y = e^{2πiθ₂}`.

use std::collections::BTreeMap;
use std::ops::{Add, Neg, Sub};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{cis_turns, Scalar};
use crate::sl2::SL2Matrix;

pub type Exponent = (i64, i64);

/// Finitely supported map from exponent pairs to coefficients. Zero
/// coefficients are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierObservable<T: Scalar> {
    terms: BTreeMap<Exponent, Complex<T>>,
}

/// Point of `ℝ²/ℤ²` in full-turn coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusPoint<T: Scalar> {
    theta1: T,
    theta2: T,
}

fn reduce_turn<T: Scalar>(x: T) -> T {
    let r = x - x.floor();
    if r >= T::one() {
        T::zero()
    } else {
        r
    }
}

impl<T: Scalar> TorusPoint<T> {
    pub fn new(theta1: T, theta2: T) -> Self {
        Self { theta1: reduce_turn(theta1), theta2: reduce_turn(theta2) }
    }

    pub fn theta1(&self) -> T {
        self.theta1
    }

    pub fn theta2(&self) -> T {
        self.theta2
    }
}

impl<T: Scalar> Default for FourierObservable<T> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<T: Scalar> FourierObservable<T> {
    pub fn zero() -> Self {
        Self { terms: BTreeMap::new() }
    }

    pub fn constant(c: Complex<T>) -> Self {
        Self::monomial_with(0, 0, c)
    }

    pub fn one() -> Self {
        Self::constant(Complex::new(T::one(), T::zero()))
    }

    pub fn monomial(a: i64, b: i64) -> Self {
        Self::monomial_with(a, b, Complex::new(T::one(), T::zero()))
    }

    pub fn monomial_with(a: i64, b: i64, c: Complex<T>) -> Self {
        let mut f = Self::zero();
        f.add_term((a, b), c);
        f
    }

    /// The coordinate function `X`.
    pub fn x() -> Self {
        Self::monomial(1, 0)
    }

    /// The coordinate function `Y`.
    pub fn y() -> Self {
        Self::monomial(0, 1)
    }

    /// Sums repeated exponents.
    pub fn from_terms<I: IntoIterator<Item = (Exponent, Complex<T>)>>(terms: I) -> Self {
        let mut f = Self::zero();
        for (e, c) in terms {
            f.add_term(e, c);
        }
        f
    }

    pub fn add_term(&mut self, exponent: Exponent, c: Complex<T>) {
        let entry = self.terms.entry(exponent).or_insert_with(Complex::zero_value);
        *entry = *entry + c;
        if entry.re == T::zero() && entry.im == T::zero() {
            self.terms.remove(&exponent);
        }
    }

    pub fn coefficient(&self, a: i64, b: i64) -> Complex<T> {
        self.terms.get(&(a, b)).copied().unwrap_or_else(Complex::zero_value)
    }

    /// Terms in lexicographic exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (Exponent, Complex<T>)> + '_ {
        self.terms.iter().map(|(&e, &c)| (e, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// `max(|a|, |b|)` over the support; 0 for constants and for zero.
    pub fn degree(&self) -> i64 {
        self.terms.keys().map(|&(a, b)| a.abs().max(b.abs())).max().unwrap_or(0)
    }

    /// Whether `c(-a,-b) = conj(c(a,b))` for every exponent, i.e. the
    /// function is real-valued. Computed from the coefficients every time.
    pub fn is_real_valued(&self) -> bool {
        self.terms.iter().all(|(&(a, b), c)| self.coefficient(-a, -b) == c.conj())
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self::from_terms(self.terms().map(|(e, c)| (e, c * s)))
    }

    pub fn map_scalar<U: Scalar>(&self) -> FourierObservable<U> {
        let conv = |x: T| U::from_f64(x.to_f64().unwrap_or(f64::NAN)).unwrap_or_else(U::nan);
        FourierObservable::from_terms(
            self.terms().map(|(e, c)| (e, Complex::new(conv(c.re), conv(c.im)))),
        )
    }

    /// Largest coefficient modulus of `self - other`.
    pub fn sup_distance(&self, other: &Self) -> T {
        (self - other).terms().map(|(_, c)| c.norm()).fold(T::zero(), T::max)
    }

    /// Value at a point of the torus.
    pub fn evaluate(&self, p: &TorusPoint<T>) -> Complex<T> {
        self.terms().fold(Complex::zero_value(), |acc, ((a, b), c)| {
            acc + c * cis_turns(T::int(a) * p.theta1 + T::int(b) * p.theta2)
        })
    }

    /// Pointwise product.
    pub fn pointwise(&self, other: &Self) -> Self {
        self.bilinear(other, |_, _| Complex::new(T::one(), T::zero()))
    }

    /// `XᵃYᵇ ⋆ Xᵃ'Yᵇ' = exp(πi(b'a - a'b)ħ) Xᵃ⁺ᵃ'Yᵇ⁺ᵇ'`, extended bilinearly.
    pub fn star(&self, other: &Self, hbar: T) -> Self {
        self.bilinear(other, |(a, b), (a2, b2)| {
            cis_turns(T::int(b2 * a - a2 * b) * hbar / T::int(2))
        })
    }

    /// `{XᵃYᵇ, Xᵃ'Yᵇ'} = -2π(ab' - a'b) Xᵃ⁺ᵃ'Yᵇ⁺ᵇ'`: the first-order term of
    /// the star commutator, `f⋆g - g⋆f = (ħ/i){f, g} + O(ħ³)`.
    pub fn poisson_bracket(&self, other: &Self) -> Self {
        self.bilinear(other, |(a, b), (a2, b2)| {
            Complex::new(-T::TAU() * T::int(a * b2 - a2 * b), T::zero())
        })
    }

    fn bilinear<F>(&self, other: &Self, phase: F) -> Self
    where
        F: Fn(Exponent, Exponent) -> Complex<T>,
    {
        let mut out = Self::zero();
        for (e1, c1) in self.terms() {
            for (e2, c2) in other.terms() {
                let k = phase(e1, e2);
                out.add_term((e1.0 + e2.0, e1.1 + e2.1), c1 * c2 * k);
            }
        }
        out
    }

    /// Normalized integral over the torus: the constant coefficient.
    pub fn classical_average(&self) -> Complex<T> {
        self.coefficient(0, 0)
    }

    /// Composition with the torus automorphism attached to `phi`; exponents
    /// move by [`SL2Matrix::exponent_map`].
    pub fn pullback(&self, phi: &SL2Matrix) -> Self {
        Self::from_terms(self.terms().map(|(e, c)| (phi.act_on_exponent(e), c)))
    }
}

impl<T: Scalar> Add for &FourierObservable<T> {
    type Output = FourierObservable<T>;
    fn add(self, rhs: Self) -> FourierObservable<T> {
        let mut out = self.clone();
        for (e, c) in rhs.terms() {
            out.add_term(e, c);
        }
        out
    }
}

impl<T: Scalar> Sub for &FourierObservable<T> {
    type Output = FourierObservable<T>;
    fn sub(self, rhs: Self) -> FourierObservable<T> {
        let mut out = self.clone();
        for (e, c) in rhs.terms() {
            out.add_term(e, -c);
        }
        out
    }
}

impl<T: Scalar> Neg for &FourierObservable<T> {
    type Output = FourierObservable<T>;
    fn neg(self) -> FourierObservable<T> {
        self.scale(Complex::new(-T::one(), T::zero()))
    }
}

trait ZeroValue {
    fn zero_value() -> Self;
}

impl<T: Scalar> ZeroValue for Complex<T> {
    fn zero_value() -> Self {
        Complex::new(T::zero(), T::zero())
    }
}

/// JSON form: `{"terms": [{"a", "b", "re", "im"}, ...]}`, exponents unique and
/// sorted lexicographically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableJson {
    pub terms: Vec<TermJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub a: i64,
    pub b: i64,
    pub re: f64,
    pub im: f64,
}

impl<T: Scalar> FourierObservable<T> {
    pub fn to_json_value(&self) -> ObservableJson {
        let f = |x: T| x.to_f64().unwrap_or(f64::NAN);
        ObservableJson {
            terms: self
                .terms()
                .map(|((a, b), c)| TermJson { a, b, re: f(c.re), im: f(c.im) })
                .collect(),
        }
    }

    pub fn from_json_value(json: &ObservableJson) -> Result<Self> {
        let mut terms = BTreeMap::new();
        for t in &json.terms {
            if !(t.re.is_finite() && t.im.is_finite()) {
                return Err(Error::InvalidObservable(format!(
                    "non-finite coefficient at ({}, {})",
                    t.a, t.b
                )));
            }
            let c = Complex::new(T::lit(t.re), T::lit(t.im));
            if terms.insert((t.a, t.b), c).is_some() {
                return Err(Error::InvalidObservable(format!(
                    "duplicate exponent ({}, {})",
                    t.a, t.b
                )));
            }
        }
        Ok(Self::from_terms(terms))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_json_value())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_json_value(&serde_json::from_str(s)?)
    }
}
