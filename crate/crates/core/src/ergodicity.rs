//! Eigenspace states of quantum cat maps and their concentration around the
//! classical state.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{
    barycenter, classical_state, distance, evaluate_subspace_state, select_concentrated, State, TestFamily,
    WeightedCloud,
};
use crate::quantization::{trace_average, QuantizationContext};
use crate::sl2::SL2Matrix;
use crate::spectral::{spectral_decomposition, DEFAULT_CLUSTER_TOL};
use crate::weil::rho;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Outlier {
    pub block: usize,
    pub distance: f64,
    pub dimension: usize,
}

/// Per-block data kept for scar inspection; not part of the serialized record.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockState {
    pub eigenvalue: Complex64,
    pub dimension: usize,
    pub distance: f64,
    pub state: State,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErgodicityRecord {
    pub n: usize,
    /// `(1/N) Σ_{i ∈ J_N} dim W_i`.
    pub weighted_fraction_within_eps: f64,
    /// `d(Σ (dim W_i/N) τ_{W_i}, τ_classical)`.
    pub barycenter_distance: f64,
    /// `max_n |(Σ (dim W_i/N) τ_{W_i})(f_n) − (1/N) Tr Op_N(f_n)|`.
    pub barycenter_identity_defect: f64,
    /// `2·2^{-n_max}`: bound on the part of any distance cut off by truncation.
    pub truncation_bound: f64,
    pub blocks: usize,
    pub max_block_dim: usize,
    /// Blocks farther than `eps` from the classical state.
    pub outliers: Vec<Outlier>,
    #[serde(skip)]
    pub block_states: Vec<BlockState>,
}

impl ErgodicityRecord {
    /// Weighted fraction for another radius on the same data.
    pub fn fraction_within(&self, eps: f64) -> f64 {
        let inside: usize = self.block_states.iter().filter(|b| b.distance <= eps).map(|b| b.dimension).sum();
        inside as f64 / self.n as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub eps: f64,
    pub cluster_tol: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self { eps: 0.3, cluster_tol: DEFAULT_CLUSTER_TOL }
    }
}

/// One record per `N`, in input order; sweep points run in parallel.
pub fn ergodicity_report(
    phi: &SL2Matrix,
    n_values: &[usize],
    family: &Arc<TestFamily>,
    eps: f64,
) -> Result<Vec<ErgodicityRecord>> {
    ergodicity_report_with(phi, n_values, family, &ExperimentConfig { eps, ..ExperimentConfig::default() })
}

pub fn ergodicity_report_with(
    phi: &SL2Matrix,
    n_values: &[usize],
    family: &Arc<TestFamily>,
    cfg: &ExperimentConfig,
) -> Result<Vec<ErgodicityRecord>> {
    if !phi.is_anosov() {
        return Err(Error::OutOfRange(format!("{phi} is not Anosov")));
    }
    if !(cfg.eps > 0.0) {
        return Err(Error::OutOfRange(format!("eps must be positive, got {}", cfg.eps)));
    }
    n_values.par_iter().map(|&n| record_for(phi, n, family, cfg)).collect()
}

fn record_for(phi: &SL2Matrix, n: usize, family: &Arc<TestFamily>, cfg: &ExperimentConfig) -> Result<ErgodicityRecord> {
    let ctx = QuantizationContext::<f64>::new(n)?;
    let u = rho(&ctx, phi)?;
    let decomposition = spectral_decomposition(u.operator(), cfg.cluster_tol)?;
    let classical = classical_state(family);
    let mut block_states = Vec::with_capacity(decomposition.blocks.len());
    for b in &decomposition.blocks {
        let state = evaluate_subspace_state(&ctx, &b.basis, family)?;
        block_states.push(BlockState {
            eigenvalue: b.eigenvalue,
            dimension: b.dim(),
            distance: distance(&state, &classical)?,
            state,
        });
    }
    let cloud = WeightedCloud::normalized(
        block_states.iter().map(|b| (b.state.clone(), b.dimension as f64)).collect(),
    )?;
    let selection = select_concentrated(&cloud, &classical, cfg.eps)?;
    let inside: usize = selection.indices.iter().map(|&i| block_states[i].dimension).sum();
    let bary = barycenter(&cloud);
    let identity_defect = family
        .observables()
        .iter()
        .zip(bary.values())
        .map(|(f, v)| (trace_average(&ctx, f) - v).norm())
        .fold(0.0, f64::max);
    let outliers = block_states
        .iter()
        .enumerate()
        .filter(|(_, b)| b.distance > cfg.eps)
        .map(|(i, b)| Outlier { block: i, distance: b.distance, dimension: b.dimension })
        .collect();
    Ok(ErgodicityRecord {
        n,
        weighted_fraction_within_eps: inside as f64 / n as f64,
        barycenter_distance: distance(&bary, &classical)?,
        barycenter_identity_defect: identity_defect,
        truncation_bound: 2.0 * family.truncation_weight(),
        blocks: block_states.len(),
        max_block_dim: block_states.iter().map(|b| b.dimension).max().unwrap_or(0),
        outliers,
        block_states,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScarCandidate {
    pub n: usize,
    pub block: usize,
    pub eigenvalue: [f64; 2],
    pub dimension: usize,
    pub distance: f64,
    pub values: Vec<[f64; 2]>,
}

/// Blocks farther than `threshold` from the classical state, by decreasing
/// distance (ties: increasing `N`, then block index).
pub fn scar_outliers(report: &[ErgodicityRecord], threshold: f64) -> Vec<ScarCandidate> {
    let mut out: Vec<ScarCandidate> = report
        .iter()
        .flat_map(|r| {
            r.block_states.iter().enumerate().filter(move |(_, b)| b.distance > threshold).map(move |(i, b)| {
                ScarCandidate {
                    n: r.n,
                    block: i,
                    eigenvalue: [b.eigenvalue.re, b.eigenvalue.im],
                    dimension: b.dimension,
                    distance: b.distance,
                    values: b.state.values().iter().map(|z| [z.re, z.im]).collect(),
                }
            })
        })
        .collect();
    out.sort_by(|a, b| b.distance.total_cmp(&a.distance).then(a.n.cmp(&b.n)).then(a.block.cmp(&b.block)));
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CeilingViolation {
    pub n: usize,
    pub block: usize,
    pub dimension_fraction: f64,
}

/// Outlier blocks at `N ≥ min_n` whose share `dim W / N` exceeds `ceiling`.
/// Reported, not asserted: special `N` may carry scars.
pub fn dimension_ceiling_violations(report: &[ErgodicityRecord], ceiling: f64, min_n: usize) -> Vec<CeilingViolation> {
    report
        .iter()
        .filter(|r| r.n >= min_n)
        .flat_map(|r| {
            r.outliers.iter().filter_map(move |o| {
                let frac = o.dimension as f64 / r.n as f64;
                (frac > ceiling).then_some(CeilingViolation { n: r.n, block: o.block, dimension_fraction: frac })
            })
        })
        .collect()
}

/// Primes in `[lo, hi]`.
pub fn primes_in(lo: usize, hi: usize) -> Vec<usize> {
    (lo.max(2)..=hi).filter(|&n| (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)).collect()
}

/// Median of a nonempty list (mean of the middle pair for even length).
pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::default_test_family;
    use crate::quantization::quantize;
    use nalgebra::DMatrix;

    fn cat() -> SL2Matrix {
        SL2Matrix::new(2, 1, 1, 1).unwrap()
    }

    fn family(n: usize) -> Arc<TestFamily> {
        Arc::new(default_test_family(n).unwrap())
    }

    #[test]
    fn wide_eps_captures_everything() {
        let rs = ergodicity_report(&cat(), &[11, 12], &family(9), 10.0).unwrap();
        for r in &rs {
            assert_eq!(r.weighted_fraction_within_eps, 1.0);
            assert!(r.outliers.is_empty());
        }
    }

    #[test]
    fn barycenter_identity_and_distance() {
        let fam = family(25);
        let rs = ergodicity_report(&cat(), &[5, 13, 20, 37], &fam, 0.3).unwrap();
        for r in &rs {
            assert!(r.barycenter_identity_defect <= 1e-10, "N = {}", r.n);
            // Family degree 2 < N: the trace state is classical.
            assert!(r.barycenter_distance <= 1e-10, "N = {}", r.n);
        }
        assert_eq!(rs.iter().map(|r| r.n).collect::<Vec<_>>(), vec![5, 13, 20, 37]);
    }

    #[test]
    fn small_degree_exception_is_visible() {
        // At N = 2 the family contains X², whose trace average is 1.
        let r = &ergodicity_report(&cat(), &[2], &family(25), 0.3).unwrap()[0];
        assert!(r.barycenter_distance > 1e-3);
    }

    #[test]
    fn block_states_match_dense_projection() {
        let fam = family(9);
        let n = 11;
        let ctx = QuantizationContext::<f64>::new(n).unwrap();
        let r = &ergodicity_report(&cat(), &[n], &fam, 0.3).unwrap()[0];
        let u = rho(&ctx, &cat()).unwrap();
        let d = spectral_decomposition(u.operator(), DEFAULT_CLUSTER_TOL).unwrap();
        for (b, bs) in d.blocks.iter().zip(&r.block_states) {
            let mut proj = DMatrix::<Complex64>::zeros(n, n);
            for v in &b.basis {
                proj += v * v.adjoint();
            }
            for (f, val) in fam.observables().iter().zip(bs.state.values()) {
                let dense = (&proj * quantize(&ctx, f).matrix()).trace() / b.dim() as f64;
                assert!((dense - val).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn fraction_is_monotone_in_eps() {
        let r = &ergodicity_report(&cat(), &[29], &family(25), 0.3).unwrap()[0];
        let mut last = 1.0;
        for k in 0..40 {
            let f = r.fraction_within(0.4 - 0.01 * k as f64);
            assert!(f <= last);
            last = f;
        }
        assert_eq!(r.fraction_within(0.3), r.weighted_fraction_within_eps);
    }

    #[test]
    fn scar_list_contract() {
        let rs = ergodicity_report(&cat(), &[10, 11, 15], &family(9), 0.05).unwrap();
        let all = scar_outliers(&rs, 0.0);
        assert_eq!(all.len(), rs.iter().map(|r| r.blocks).sum::<usize>());
        assert!(all.windows(2).all(|w| w[0].distance >= w[1].distance));
        let max = all[0].distance;
        assert!(scar_outliers(&rs, max).is_empty());
        assert!(dimension_ceiling_violations(&rs, 1.0, 0).is_empty());
    }

    #[test]
    fn rejects_non_anosov() {
        assert!(ergodicity_report(&SL2Matrix::s(), &[5], &family(3), 0.3).is_err());
        assert!(ergodicity_report(&cat(), &[5], &family(3), 0.0).is_err());
    }

    #[test]
    fn helpers() {
        assert_eq!(primes_in(11, 41), vec![11, 13, 17, 19, 23, 29, 31, 37, 41]);
        assert_eq!(primes_in(0, 3), vec![2, 3]);
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }
}
