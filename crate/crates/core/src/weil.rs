//! Weil representation `ρ_N` of `SL₂(ℤ)` on `ℂ^N`.
//!
//! `ρ_N(T) = diag(A^{i²})` and `ρ_N(S)` is the normalized finite Fourier
//! transform `e_i ↦ g·Σ_j A^{−2ij} e_j`, `g = (1/N)Σ_{k mod N} A^{k²}`.
//! With these two matrices `ρ_N(φ)⁻¹ Op_N(f) ρ_N(φ) = Op_N(f∘φ)` holds
//! exactly, for odd and even `N`, where `f∘φ` is
//! [`FourierObservable::pullback`].

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::observables::FourierObservable;
use crate::quantization::{quantize, QuantizationContext, QuantumOperator};
use crate::scalar::MatrixScalar;
use crate::sl2::{decompose_sl2, Letter, SL2Matrix};

/// Unitary image `ρ_N(φ)`, defined up to a global phase.
#[derive(Clone, Debug, PartialEq)]
pub struct WeilOperator<T: MatrixScalar> {
    operator: QuantumOperator<T>,
    source: SL2Matrix,
}

/// Unitarity tolerance on `‖U†U − I‖_F`, loosened to the working precision.
pub fn unitarity_tolerance<T: MatrixScalar>(n: usize) -> T {
    let eps = <T as num_traits::Float>::epsilon();
    num_traits::Float::max(T::lit(1e-9), T::lit(16.0) * T::int(n as i64) * eps)
}

impl<T: MatrixScalar> WeilOperator<T> {
    fn checked(operator: QuantumOperator<T>, source: SL2Matrix) -> Result<Self> {
        let defect = operator.unitarity_defect();
        if !(defect <= unitarity_tolerance::<T>(operator.context().n())) {
            return Err(Error::NotUnitary(defect.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(Self { operator, source })
    }

    pub fn context(&self) -> &QuantizationContext<T> {
        self.operator.context()
    }

    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        self.operator.matrix()
    }

    pub fn operator(&self) -> &QuantumOperator<T> {
        &self.operator
    }

    pub fn source(&self) -> SL2Matrix {
        self.source
    }

    /// `ρ⁻¹ = ρ†`.
    pub fn inverse(&self) -> Self {
        Self { operator: self.operator.adjoint(), source: self.source.inverse() }
    }
}

/// `(1/N) Σ_{k mod N} A^{k²}`.
pub fn gauss_prefactor<T: MatrixScalar>(ctx: &QuantizationContext<T>) -> Complex<T> {
    let n = ctx.n() as i128;
    let sum = (0..n).fold(Complex::new(T::zero(), T::zero()), |acc, k| acc + ctx.a_pow(k * k));
    sum / T::int(n as i64)
}

fn t_power<T: MatrixScalar>(ctx: &QuantizationContext<T>, k: i128) -> Vec<Complex<T>> {
    (1..=ctx.n() as i128).map(|i| ctx.a_pow(k * i * i)).collect()
}

fn s_matrix<T: MatrixScalar>(ctx: &QuantizationContext<T>, g: Complex<T>, sign: i128) -> DMatrix<Complex<T>> {
    let n = ctx.n();
    DMatrix::from_fn(n, n, |r, c| {
        let (i, j) = (r as i128 + 1, c as i128 + 1);
        g * ctx.a_pow(-2 * sign * i * j)
    })
}

fn checked_prefactor<T: MatrixScalar>(ctx: &QuantizationContext<T>) -> Result<Complex<T>> {
    let n = ctx.n();
    if n < 2 {
        return Err(Error::LevelTooSmall(n, 2));
    }
    let g = gauss_prefactor(ctx);
    let expected = T::one() / num_traits::Float::sqrt(T::int(n as i64));
    let magnitude = g.norm();
    if !(num_traits::Float::abs(magnitude - expected) <= unitarity_tolerance::<T>(1)) {
        return Err(Error::GaussPrefactor { n, magnitude: magnitude.to_f64().unwrap_or(f64::NAN) });
    }
    Ok(g)
}

/// `(ρ_N(S), ρ_N(T))`.
pub fn generators<T: MatrixScalar>(
    ctx: &QuantizationContext<T>,
) -> Result<(WeilOperator<T>, WeilOperator<T>)> {
    let g = checked_prefactor(ctx)?;
    let s = QuantumOperator::new(*ctx, s_matrix(ctx, g, 1))?;
    let t = QuantumOperator::new(*ctx, DMatrix::from_diagonal(&t_power(ctx, 1).into()))?;
    Ok((WeilOperator::checked(s, SL2Matrix::s())?, WeilOperator::checked(t, SL2Matrix::t())?))
}

/// `ρ_N(φ)` as the product of generator images along [`decompose_sl2`].
/// Runs of `T^{±1}` collapse into a single diagonal factor.
pub fn rho<T: MatrixScalar>(ctx: &QuantizationContext<T>, phi: &SL2Matrix) -> Result<WeilOperator<T>> {
    let word = decompose_sl2(phi)?;
    let g = checked_prefactor(ctx)?;
    let n = ctx.n();
    let mut s_cache: [Option<DMatrix<Complex<T>>>; 2] = [None, None];
    let mut acc: DMatrix<Complex<T>> = DMatrix::identity(n, n);
    for (letter, count) in word.runs() {
        match letter {
            Letter::T | Letter::TInv => {
                let k = if letter == Letter::T { count as i128 } else { -(count as i128) };
                let d = t_power(ctx, k);
                for (mut col, phase) in acc.column_iter_mut().zip(d) {
                    col *= phase;
                }
            }
            Letter::S | Letter::SInv => {
                // S⁻¹ = S†. Both are symmetric, so S† is entrywise conjugation.
                let slot = usize::from(letter == Letter::SInv);
                let s = s_cache[slot].get_or_insert_with(|| {
                    let s = s_matrix(ctx, g, 1);
                    if slot == 1 {
                        s.adjoint()
                    } else {
                        s
                    }
                });
                for _ in 0..count {
                    acc = &acc * &*s;
                }
            }
        }
    }
    WeilOperator::checked(QuantumOperator::new(*ctx, acc)?, *phi)
}

/// `min_λ ‖A − λB‖_F` over unit `λ`, attained at the phase of `Tr(A†B)`.
pub fn projective_distance<T: MatrixScalar>(a: &DMatrix<Complex<T>>, b: &DMatrix<Complex<T>>) -> T {
    let overlap = (a.adjoint() * b).trace();
    let lambda = if overlap.norm() > T::zero() {
        overlap.conj() / overlap.norm()
    } else {
        Complex::new(T::one(), T::zero())
    };
    (a - b * lambda).norm()
}

/// Distance from `M` to the nearest multiple of the identity.
pub fn scalar_defect<T: MatrixScalar>(m: &DMatrix<Complex<T>>) -> T {
    let n = m.nrows();
    let lambda = m.trace() / T::int(n as i64);
    (m - DMatrix::identity(n, n) * lambda).norm()
}

/// `min_λ ‖ρ(φψ) − λρ(φ)ρ(ψ)‖_F`.
pub fn homomorphism_defect<T: MatrixScalar>(
    ctx: &QuantizationContext<T>,
    phi: &SL2Matrix,
    psi: &SL2Matrix,
) -> Result<T> {
    let prod = rho(ctx, &phi.checked_mul(psi)?)?;
    let (a, b) = (rho(ctx, phi)?, rho(ctx, psi)?);
    Ok(projective_distance(prod.matrix(), &(a.matrix() * b.matrix())))
}

/// `‖ρ(φ)⁻¹ Op_N(f) ρ(φ) − Op_N(f∘φ)‖_F`.
pub fn egorov_defect<T: MatrixScalar>(
    ctx: &QuantizationContext<T>,
    phi: &SL2Matrix,
    f: &FourierObservable<T>,
) -> Result<T> {
    let u = rho(ctx, phi)?;
    Ok(egorov_defect_with(&u, f))
}

/// [`egorov_defect`] for a precomputed `ρ(φ)`.
pub fn egorov_defect_with<T: MatrixScalar>(u: &WeilOperator<T>, f: &FourierObservable<T>) -> T {
    let ctx = u.context();
    let op = quantize(ctx, f);
    let conj = u.matrix().adjoint() * op.matrix() * u.matrix();
    let pulled = quantize(ctx, &f.pullback(&u.source()));
    (conj - pulled.matrix()).norm()
}
