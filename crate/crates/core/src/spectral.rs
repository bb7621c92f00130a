//! Eigenspaces of unitary operators with clustered eigenvalues.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quantization::QuantumOperator;

pub const DEFAULT_CLUSTER_TOL: f64 = 1e-8;
/// Admissible `‖U†U − I‖_F` on input.
pub const UNITARITY_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct EigenBlock {
    pub eigenvalue: Complex64,
    pub basis: Vec<DVector<Complex64>>,
}

impl EigenBlock {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Phase in `[0, 2π)`.
    pub fn phase(&self) -> f64 {
        phase(self.eigenvalue)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenspaceDecomposition {
    pub blocks: Vec<EigenBlock>,
    pub cluster_tol: f64,
}

fn phase(z: Complex64) -> f64 {
    let p = z.arg().rem_euclid(TAU);
    if p >= TAU {
        0.0
    } else {
        p
    }
}

fn circular_gap(p: f64, q: f64) -> f64 {
    let d = (p - q).rem_euclid(TAU);
    d.min(TAU - d)
}

impl EigenspaceDecomposition {
    pub fn dims(&self) -> Vec<usize> {
        self.blocks.iter().map(EigenBlock::dim).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(EigenBlock::dim).sum()
    }

    /// `‖U − Σ λ_i Π_i‖_F`.
    pub fn reconstruction_defect(&self, u: &DMatrix<Complex64>) -> f64 {
        let mut r = u.clone();
        for b in &self.blocks {
            for v in &b.basis {
                r -= v * v.adjoint() * b.eigenvalue;
            }
        }
        r.norm()
    }

    /// `max ‖U v − λ v‖` over all basis vectors.
    pub fn invariance_defect(&self, u: &DMatrix<Complex64>) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.basis.iter().map(move |v| (u * v - v * b.eigenvalue).norm()))
            .fold(0.0, f64::max)
    }

    /// `‖G − I‖_F` for the Gram matrix of all basis vectors.
    pub fn orthonormality_defect(&self) -> f64 {
        let vs: Vec<&DVector<Complex64>> = self.blocks.iter().flat_map(|b| &b.basis).collect();
        let n = vs.len();
        let g = DMatrix::from_fn(n, n, |i, j| vs[i].dotc(vs[j]));
        (g - DMatrix::identity(n, n)).norm()
    }
}

/// Complex Schur form `U = Q T Q†`. For normal `U`, `T` is diagonal, so the
/// columns of `Q` are orthonormal eigenvectors. Eigenvalues are sorted by
/// phase and chained into clusters when neighbours lie within `cluster_tol`
/// on the circle; the first and last clusters merge across phase 0.
pub fn spectral_decomposition(u: &QuantumOperator<f64>, cluster_tol: f64) -> Result<EigenspaceDecomposition> {
    let defect = u.unitarity_defect();
    if !(defect <= UNITARITY_TOL) {
        return Err(Error::NotUnitary(defect));
    }
    if !(cluster_tol >= 0.0) {
        return Err(Error::OutOfRange(format!("cluster_tol must be nonnegative, got {cluster_tol}")));
    }
    let n = u.context().n();
    let schur = nalgebra::Schur::try_new(u.matrix().clone(), 1e-15, 10_000).ok_or(Error::Eigen)?;
    let (q, t) = schur.unpack();
    let mut order: Vec<(f64, usize)> = (0..n).map(|i| (phase(t[(i, i)]), i)).collect();
    order.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));

    let mut groups: Vec<Vec<(f64, usize)>> = Vec::new();
    for item in order {
        match groups.last_mut() {
            Some(g) if circular_gap(g.last().expect("nonempty").0, item.0) <= cluster_tol => g.push(item),
            _ => groups.push(vec![item]),
        }
    }
    if groups.len() > 1 {
        let first = groups[0][0].0;
        let last = groups.last().and_then(|g| g.last()).expect("nonempty").0;
        if circular_gap(first, last) <= cluster_tol {
            let tail = groups.pop().expect("nonempty");
            groups[0].splice(0..0, tail);
        }
    }

    let blocks = groups
        .into_iter()
        .map(|g| {
            let sum: Complex64 = g.iter().map(|&(_, i)| t[(i, i)]).sum();
            let eigenvalue = if sum.norm() > 0.0 { sum / sum.norm() } else { Complex64::new(1.0, 0.0) };
            let basis = g.iter().map(|&(_, i)| q.column(i).into_owned()).collect();
            EigenBlock { eigenvalue, basis }
        })
        .collect::<Vec<_>>();
    let mut blocks = blocks;
    blocks.sort_by(|a, b| a.phase().total_cmp(&b.phase()));
    Ok(EigenspaceDecomposition { blocks, cluster_tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantization::QuantizationContext;
    use crate::sl2::SL2Matrix;
    use crate::weil::{generators, rho};

    fn op(n: usize, m: DMatrix<Complex64>) -> QuantumOperator<f64> {
        QuantumOperator::new(QuantizationContext::new(n).unwrap(), m).unwrap()
    }

    #[test]
    fn identity_is_one_block() {
        let d = spectral_decomposition(&op(5, DMatrix::identity(5, 5)), DEFAULT_CLUSTER_TOL).unwrap();
        assert_eq!(d.dims(), vec![5]);
        assert!((d.blocks[0].eigenvalue - 1.0).norm() < 1e-14);
    }

    #[test]
    fn reflection_splits() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]));
        let d = spectral_decomposition(&op(2, m), DEFAULT_CLUSTER_TOL).unwrap();
        assert_eq!(d.dims(), vec![1, 1]);
        assert!((d.blocks[1].eigenvalue + 1.0).norm() < 1e-14);
    }

    #[test]
    fn t_generator_at_four() {
        let ctx = QuantizationContext::new(4).unwrap();
        let (_, t) = generators(&ctx).unwrap();
        let d = spectral_decomposition(t.operator(), DEFAULT_CLUSTER_TOL).unwrap();
        let summary: Vec<(f64, usize)> = d.blocks.iter().map(|b| (b.phase(), b.dim())).collect();
        let pi = std::f64::consts::PI;
        assert_eq!(summary.len(), 3);
        assert!(summary[0].0.abs() < 1e-12 && summary[0].1 == 1);
        assert!((summary[1].0 - pi / 4.0).abs() < 1e-12 && summary[1].1 == 2);
        assert!((summary[2].0 - pi).abs() < 1e-12 && summary[2].1 == 1);
    }

    #[test]
    fn wraparound_merges() {
        let z = |p: f64| Complex64::from_polar(1.0, p);
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![z(1e-10), z(-1e-10), z(2.0)]));
        let d = spectral_decomposition(&op(3, m), 1e-8).unwrap();
        assert_eq!(d.dims(), vec![2, 1]);
        assert!((d.blocks[0].eigenvalue - 1.0).norm() < 1e-9);
    }

    #[test]
    fn rejects_non_unitary() {
        let m = DMatrix::identity(3, 3) * Complex64::new(2.0, 0.0);
        assert!(matches!(spectral_decomposition(&op(3, m), 1e-8), Err(Error::NotUnitary(_))));
    }

    #[test]
    fn cat_map_blocks_satisfy_invariants() {
        let phi = SL2Matrix::new(2, 1, 1, 1).unwrap();
        for n in [7, 10, 16, 31, 64] {
            let ctx = QuantizationContext::new(n).unwrap();
            let u = rho(&ctx, &phi).unwrap();
            let d = spectral_decomposition(u.operator(), DEFAULT_CLUSTER_TOL).unwrap();
            assert_eq!(d.total_dim(), n);
            assert!(d.orthonormality_defect() < 1e-8);
            assert!(d.reconstruction_defect(u.matrix()) <= 10.0 * DEFAULT_CLUSTER_TOL);
            assert!(d.invariance_defect(u.matrix()) <= 10.0 * DEFAULT_CLUSTER_TOL);
            assert!(d.blocks.windows(2).all(|w| w[0].phase() < w[1].phase()));
        }
    }
}
