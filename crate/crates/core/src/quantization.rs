//! Schrödinger representation of the quantum torus on `ℂ^N`.
//!
//! Basis vectors are 1-based, `e_1 … e_N`, with indices taken mod `N`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::observables::FourierObservable;
use crate::scalar::{root_of_unity, MatrixScalar};

/// Level `N` together with `A` and `ħ`, `A = exp(iπħ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuantizationContext<T> {
    n: usize,
    a: Complex<T>,
    hbar: T,
}

impl<T: MatrixScalar> QuantizationContext<T> {
    /// Odd `N`: `A = e^{2iπ/N}`, `ħ = 2/N`. Even `N`: `A = e^{iπ/N}`, `ħ = 1/N`.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroLevel);
        }
        let ni = n as i64;
        let hbar = if n % 2 == 1 { T::int(2) / T::int(ni) } else { T::one() / T::int(ni) };
        let ctx = Self { n, a: root_of_unity(1, Self::order_of(n)), hbar };
        debug_assert!(num_traits::Float::abs(ctx.a.norm() - T::one()) <= T::lit(1e-6));
        Ok(ctx)
    }

    fn order_of(n: usize) -> i64 {
        if n % 2 == 1 {
            n as i64
        } else {
            2 * n as i64
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn a(&self) -> Complex<T> {
        self.a
    }

    pub fn hbar(&self) -> T {
        self.hbar
    }

    /// Multiplicative order of `A`.
    pub fn order(&self) -> i64 {
        Self::order_of(self.n)
    }

    /// `A^k`, reduced exactly before evaluation.
    pub fn a_pow(&self, k: i128) -> Complex<T> {
        let m = self.order() as i128;
        root_of_unity(k.rem_euclid(m) as i64, m as i64)
    }
}

/// `N×N` matrix tied to a context.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumOperator<T: MatrixScalar> {
    context: QuantizationContext<T>,
    matrix: DMatrix<Complex<T>>,
}

impl<T: MatrixScalar> QuantumOperator<T> {
    pub fn new(context: QuantizationContext<T>, matrix: DMatrix<Complex<T>>) -> Result<Self> {
        if matrix.nrows() != context.n || matrix.ncols() != context.n {
            return Err(Error::DimensionMismatch {
                index: 0,
                len: matrix.nrows().max(matrix.ncols()),
                expected: context.n,
            });
        }
        Ok(Self { context, matrix })
    }

    pub fn identity(context: QuantizationContext<T>) -> Self {
        Self { matrix: DMatrix::identity(context.n, context.n), context }
    }

    pub fn context(&self) -> &QuantizationContext<T> {
        &self.context
    }

    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex<T>> {
        self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self { context: self.context, matrix: self.matrix.adjoint() }
    }

    pub fn compose(&self, rhs: &Self) -> Self {
        Self { context: self.context, matrix: &self.matrix * &rhs.matrix }
    }

    pub fn distance(&self, other: &Self) -> T {
        (&self.matrix - &other.matrix).norm()
    }

    pub fn hermiticity_defect(&self) -> T {
        (&self.matrix - self.matrix.adjoint()).norm()
    }

    pub fn unitarity_defect(&self) -> T {
        let n = self.context.n;
        (self.matrix.adjoint() * &self.matrix - DMatrix::identity(n, n)).norm()
    }

    pub fn trace(&self) -> Complex<T> {
        self.matrix.trace()
    }

    /// Debug dump `{"n", "re", "im"}`.
    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Dump {
            n: usize,
            re: Vec<Vec<f64>>,
            im: Vec<Vec<f64>>,
        }
        let n = self.context.n;
        let part = |f: fn(&Complex<T>) -> T| -> Vec<Vec<f64>> {
            (0..n)
                .map(|i| (0..n).map(|j| f(&self.matrix[(i, j)]).to_f64().unwrap_or(f64::NAN)).collect())
                .collect()
        };
        Ok(serde_json::to_string(&Dump { n, re: part(|c| c.re), im: part(|c| c.im) })?)
    }
}

/// Row (0-based) hit by column `col` (0-based) under `Ŷ^b`, and the
/// Weyl-ordered phase `A^{2a·j − ab}` with `j` the 1-based row index.
fn monomial_entry<T: MatrixScalar>(
    ctx: &QuantizationContext<T>,
    a: i64,
    b: i64,
    col: usize,
) -> (usize, Complex<T>) {
    let n = ctx.n as i64;
    let row = (col as i64 + b).rem_euclid(n) as usize;
    let j = row as i128 + 1;
    let (a, b) = (a as i128, b as i128);
    (row, ctx.a_pow(2 * a * j - a * b))
}

/// `Op_N(f)` with `Op_N(XᵃYᵇ) = A^{−ab} X̂ᵃ Ŷᵇ`, `X̂ e_i = A^{2i} e_i`,
/// `Ŷ e_i = e_{i+1}`.
pub fn quantize<T: MatrixScalar>(
    ctx: &QuantizationContext<T>,
    f: &FourierObservable<T>,
) -> QuantumOperator<T> {
    let n = ctx.n;
    let mut m = DMatrix::from_element(n, n, Complex::new(T::zero(), T::zero()));
    for ((a, b), c) in f.terms() {
        for col in 0..n {
            let (row, phase) = monomial_entry(ctx, a, b, col);
            m[(row, col)] += c * phase;
        }
    }
    QuantumOperator { context: *ctx, matrix: m }
}

/// `Op_N(f)·v` without forming the matrix.
pub fn apply<T: MatrixScalar>(
    ctx: &QuantizationContext<T>,
    f: &FourierObservable<T>,
    v: &DVector<Complex<T>>,
) -> DVector<Complex<T>> {
    let mut out = DVector::from_element(ctx.n, Complex::new(T::zero(), T::zero()));
    for ((a, b), c) in f.terms() {
        for col in 0..ctx.n {
            let (row, phase) = monomial_entry(ctx, a, b, col);
            out[row] += c * phase * v[col];
        }
    }
    out
}

/// `(1/N) Tr Op_N(f)`.
pub fn trace_average<T: MatrixScalar>(
    ctx: &QuantizationContext<T>,
    f: &FourierObservable<T>,
) -> Complex<T> {
    let n = ctx.n as i64;
    let mut sum = Complex::new(T::zero(), T::zero());
    for ((a, b), c) in f.terms() {
        if b.rem_euclid(n) != 0 {
            continue;
        }
        for col in 0..ctx.n {
            sum += c * monomial_entry(ctx, a, b, col).1;
        }
    }
    sum / T::int(n)
}

/// Orthonormality tolerance for bases, loosened to the working precision.
pub fn orthonormality_tolerance<T: MatrixScalar>() -> T {
    num_traits::Float::max(T::lit(1e-10), T::lit(128.0) * <T as num_traits::Float>::epsilon())
}

/// Rejects bases whose Gram matrix differs from the identity.
pub fn check_orthonormal<T: MatrixScalar>(n: usize, basis: &[DVector<Complex<T>>]) -> Result<()> {
    for (index, v) in basis.iter().enumerate() {
        if v.len() != n {
            return Err(Error::DimensionMismatch { index, len: v.len(), expected: n });
        }
    }
    let tol = orthonormality_tolerance::<T>();
    for (i, u) in basis.iter().enumerate() {
        for (j, v) in basis.iter().enumerate().skip(i) {
            let g = u.dotc(v);
            let expected = if i == j { T::one() } else { T::zero() };
            if (g - Complex::new(expected, T::zero())).norm() > tol {
                let f = |x: T| x.to_f64().unwrap_or(f64::NAN);
                return Err(Error::NonOrthonormal { row: i, col: j, re: f(g.re), im: f(g.im) });
            }
        }
    }
    Ok(())
}

/// `⟨v, Op_N(f) v⟩`.
pub fn expectation<T: MatrixScalar>(
    ctx: &QuantizationContext<T>,
    f: &FourierObservable<T>,
    v: &DVector<Complex<T>>,
) -> Complex<T> {
    v.dotc(&apply(ctx, f, v))
}

/// `τ_W(f) = (1/dim W) Tr(Π_W Op_N(f))` for an orthonormal basis of `W`.
pub fn subspace_state_value<T: MatrixScalar>(
    ctx: &QuantizationContext<T>,
    basis: &[DVector<Complex<T>>],
    f: &FourierObservable<T>,
) -> Result<Complex<T>> {
    if basis.is_empty() {
        return Err(Error::OutOfRange("empty basis".into()));
    }
    check_orthonormal(ctx.n, basis)?;
    Ok(subspace_state_value_unchecked(ctx, basis, f))
}

pub(crate) fn subspace_state_value_unchecked<T: MatrixScalar>(
    ctx: &QuantizationContext<T>,
    basis: &[DVector<Complex<T>>],
    f: &FourierObservable<T>,
) -> Complex<T> {
    let sum = basis
        .iter()
        .fold(Complex::new(T::zero(), T::zero()), |acc, v| acc + expectation(ctx, f, v));
    sum / T::int(basis.len() as i64)
}
