//! Maximum-margin separating functionals and the concentration bound they
//! induce.

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use super::{distance_unchecked, State, WeightedCloud};
use crate::error::{Error, Result};

/// Margins at or below this count as "inside the hull".
pub const EXPOSURE_TOL: f64 = 1e-9;

/// Affine functional `L` with thresholds `a = L(target) < c`.
///
/// For states the coefficients act on `[re v_1, im v_1, re v_2, …]`. The
/// coefficient on `re v_1` is an offset: `v_1 = τ(1) = 1` on every state, so it
/// shifts `L(target)` to zero without entering `‖L‖`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparatingFunctional {
    coefficients: Vec<f64>,
    norm: f64,
    a: f64,
    c: f64,
    margin: f64,
}

impl SeparatingFunctional {
    /// Requires `a < c` and a positive finite norm.
    pub fn from_parts(coefficients: Vec<f64>, norm: f64, a: f64, c: f64) -> Result<Self> {
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::OutOfRange(format!("norm must be positive, got {norm}")));
        }
        if !(a < c) {
            return Err(Error::OutOfRange(format!("need a < c, got a = {a}, c = {c}")));
        }
        Ok(Self { coefficients, norm, a, c, margin: 2.0 * (c - a) })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Dual norm to the weighted metric.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// `min_i L(p_i) − a` over the cloud the functional was built from.
    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn evaluate(&self, s: &State) -> f64 {
        s.values()
            .iter()
            .zip(self.coefficients.chunks_exact(2))
            .map(|(z, l)| l[0] * z.re + l[1] * z.im)
            .sum()
    }

    pub fn evaluate_raw(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.coefficients).map(|(x, l)| x * l).sum()
    }

    /// Same functional with threshold `c`, which must exceed `a`.
    pub fn with_threshold(&self, c: f64) -> Result<Self> {
        if !(c > self.a) {
            return Err(Error::OutOfRange(format!("threshold {c} must exceed a = {}", self.a)));
        }
        Ok(Self { c, ..self.clone() })
    }

    /// `K = max_i d(τ, τ_i) / (L(τ_i) − a)`. On the hull of the target and the
    /// vertices, `L ≤ c` implies `d(τ, ·) ≤ K (c − a)`.
    pub fn slab_constant(&self, target: &State, vertices: &[State]) -> f64 {
        vertices
            .iter()
            .map(|v| distance_unchecked(target, v) / (self.evaluate(v) - self.a))
            .fold(0.0, f64::max)
    }

    /// Threshold `c = a + eps / K` whose slab lies in the `eps`-ball.
    pub fn threshold_for_radius(&self, slab_constant: f64, eps: f64) -> Result<Self> {
        self.with_threshold(self.a + eps / slab_constant)
    }
}

/// Maximizes `t` subject to `Σ_k scale_k u_k diff_ik ≥ t` for every row,
/// `|u_k| ≤ 1`. Columns with zero scale are left out. Returns `l_k = scale_k u_k`.
fn max_margin(diffs: &[Vec<f64>], scale: &[f64]) -> Result<(Vec<f64>, f64)> {
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = scale
        .iter()
        .map(|&s| (s > 0.0).then(|| lp.add_var(0.0, (-1.0, 1.0))))
        .collect();
    if vars.iter().all(Option::is_none) {
        return Ok((vec![0.0; scale.len()], 0.0));
    }
    let t = lp.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    for row in diffs {
        let mut expr: Vec<_> = vars
            .iter()
            .zip(row)
            .zip(scale)
            .filter_map(|((v, d), s)| v.map(|v| (v, s * d)))
            .collect();
        expr.push((t, -1.0));
        lp.add_constraint(expr.as_slice(), ComparisonOp::Ge, 0.0);
    }
    let outcome = lp.solve().map_err(|e| Error::Lp(e.to_string()))?;
    let sol = outcome
        .into_solution()
        .map_err(|_| Error::Lp("solver interrupted".into()))?;
    let l = vars
        .iter()
        .zip(scale)
        .map(|(v, s)| v.map_or(0.0, |v| s * sol[v]))
        .collect();
    Ok((l, sol.objective()))
}

fn stacked(s: &State) -> Vec<f64> {
    s.values().iter().flat_map(|z| [z.re, z.im]).collect()
}

/// Max-margin separator of `target` from every cloud point, with
/// `|l_n| ≤ 2^{-n}` componentwise and `‖L‖ = max_{n≥2} 2^n |l_n|₂`.
pub fn find_separating_functional(
    cloud: &WeightedCloud,
    target: &State,
) -> Result<SeparatingFunctional> {
    let family = cloud.family().clone();
    cloud.points()[0].0.same_family(target)?;
    let tau = stacked(target);
    let diffs: Vec<Vec<f64>> = cloud
        .points()
        .iter()
        .map(|(s, _)| stacked(s).iter().zip(&tau).map(|(x, t)| x - t).collect())
        .collect();
    let scale: Vec<f64> = (0..tau.len())
        .map(|k| {
            let n = k / 2;
            let moves = diffs.iter().any(|d| d[k] != 0.0);
            if n == 0 || !moves {
                0.0
            } else {
                family.weight(n)
            }
        })
        .collect();
    let (mut l, margin) = max_margin(&diffs, &scale)?;
    if !(margin > EXPOSURE_TOL) {
        return Err(Error::NotExposed { margin });
    }
    l[0] = -l.iter().zip(&tau).skip(2).map(|(l, t)| l * t).sum::<f64>();
    let norm = (1..family.len())
        .map(|n| l[2 * n].hypot(l[2 * n + 1]) / family.weight(n))
        .fold(0.0, f64::max);
    finish(l, norm, |f| f.evaluate(target), cloud.points().iter().map(|(s, _)| s), |f, s| f.evaluate(s))
}

/// Raw-coordinate variant: points in `ℝ^d` under the metric
/// `Σ_k w_k |x_k − y_k|`, `‖L‖ = max_k |l_k| / w_k`.
pub fn find_separating_functional_raw(
    points: &[Vec<f64>],
    target: &[f64],
    weights: &[f64],
) -> Result<SeparatingFunctional> {
    let d = target.len();
    if points.is_empty() {
        return Err(Error::InvalidWeights("empty cloud".into()));
    }
    for (index, p) in points.iter().enumerate() {
        if p.len() != d {
            return Err(Error::DimensionMismatch { index, len: p.len(), expected: d });
        }
    }
    if weights.len() != d || weights.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::InvalidWeights(format!("need {d} positive metric weights")));
    }
    let diffs: Vec<Vec<f64>> =
        points.iter().map(|p| p.iter().zip(target).map(|(x, t)| x - t).collect()).collect();
    let scale: Vec<f64> = (0..d)
        .map(|k| if diffs.iter().any(|r| r[k] != 0.0) { weights[k] } else { 0.0 })
        .collect();
    let (l, margin) = max_margin(&diffs, &scale)?;
    if !(margin > EXPOSURE_TOL) {
        return Err(Error::NotExposed { margin });
    }
    let norm = l.iter().zip(weights).map(|(l, w)| l.abs() / w).fold(0.0, f64::max);
    finish(l, norm, |f| f.evaluate_raw(target), points.iter(), |f, p| f.evaluate_raw(p))
}

fn finish<'p, P: 'p>(
    coefficients: Vec<f64>,
    norm: f64,
    at_target: impl Fn(&SeparatingFunctional) -> f64,
    points: impl Iterator<Item = &'p P>,
    at: impl Fn(&SeparatingFunctional, &P) -> f64,
) -> Result<SeparatingFunctional> {
    let mut f = SeparatingFunctional { coefficients, norm, a: 0.0, c: 0.0, margin: 0.0 };
    f.a = at_target(&f);
    let lowest = points.map(|p| at(&f, p)).fold(f64::INFINITY, f64::min);
    f.margin = lowest - f.a;
    if !(f.margin > EXPOSURE_TOL) {
        return Err(Error::NotExposed { margin: f.margin });
    }
    f.c = 0.5 * (f.a + lowest);
    Ok(f)
}

/// `((1 − δ) c − a) / ‖L‖`. The caller picks `c` so that the slab `L ≤ c`
/// sits inside the `eps`-ball around the target, e.g. through
/// [`SeparatingFunctional::threshold_for_radius`].
pub fn lemma_bound(l: &SeparatingFunctional, eps: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::OutOfRange(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(eps > 0.0) {
        return Err(Error::OutOfRange(format!("eps must be positive, got {eps}")));
    }
    let value = ((1.0 - delta) * l.c - l.a) / l.norm;
    if !(value > 0.0) {
        return Err(Error::DegenerateBound(value));
    }
    Ok(value)
}
