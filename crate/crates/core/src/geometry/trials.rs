//! Randomized checks of the separating-functional concentration bound and
//! the `‖J_N‖ → 1` schedule on synthetic cloud sequences.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::separation::{find_separating_functional, lemma_bound};
use super::{barycenter, default_test_family, distance, select_concentrated, State, TestFamily, WeightedCloud};
use crate::error::{Error, Result};

/// Slack allowed on `weight ≥ δ` for floating-point weight sums.
pub const WEIGHT_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaTrialConfig {
    pub trials: usize,
    pub seed: u64,
    /// Complex dimensions `1..=max_complex_dim` beyond `τ(1)`; real dimension is twice that.
    pub max_complex_dim: usize,
    pub max_points: usize,
    pub max_reweight_points: usize,
}

impl Default for LemmaTrialConfig {
    fn default() -> Self {
        Self { trials: 1000, seed: 0x5eed, max_complex_dim: 4, max_points: 50, max_reweight_points: 40 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaTrial {
    pub trial: usize,
    pub real_dim: usize,
    pub points: usize,
    pub eps: f64,
    pub delta: f64,
    /// `None` when the target turned out not to be exposed.
    pub bound: Option<f64>,
    pub barycenter_distance: f64,
    pub hypothesis_met: bool,
    pub concentrated_weight: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaSummary {
    pub trials: usize,
    pub exposed: usize,
    pub hypothesis_met: usize,
    pub counterexamples: usize,
    pub outcomes: Vec<LemmaTrial>,
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn random_simplex(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..m).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|x| x / total).collect()
}

fn mix(family: &Arc<TestFamily>, parts: &[(&State, f64)]) -> State {
    let values = (0..family.len())
        .map(|n| parts.iter().map(|(s, w)| s.values()[n] * *w).sum())
        .collect();
    State::new(family.clone(), values).expect("convex combination stays normalized")
}

fn one_trial(cfg: &LemmaTrialConfig, trial: usize) -> Result<LemmaTrial> {
    let mut rng = trial_rng(cfg.seed, trial);
    let k = rng.gen_range(1..=cfg.max_complex_dim);
    let family = Arc::new(default_test_family(k + 1)?);
    let m = rng.gen_range(1..=cfg.max_points);

    let coords = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..2 * k).map(|_| rng.gen_range(-1.0..1.0)).collect() };
    let to_state = |x: &[f64]| {
        let mut v = vec![Complex64::new(1.0, 0.0)];
        v.extend(x.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])));
        State::new(family.clone(), v).expect("normalized")
    };
    let t = coords(&mut rng);
    let target = to_state(&t);
    // Offsets on one side of a random hyperplane, so the target is a vertex.
    let u = coords(&mut rng);
    let vertices: Vec<State> = (0..m)
        .map(|_| {
            let mut d = coords(&mut rng);
            let dot: f64 = d.iter().zip(&u).map(|(a, b)| a * b).sum();
            if dot < 0.0 {
                d.iter_mut().for_each(|x| *x = -*x);
            }
            let x: Vec<f64> = t.iter().zip(&d).map(|(a, b)| a + 0.5 * b).collect();
            to_state(&x)
        })
        .collect();
    let eps_frac = rng.gen_range(0.2..0.8);
    let delta = rng.gen_range(0.5..0.99);

    let cloud = WeightedCloud::normalized(vertices.iter().map(|v| (v.clone(), 1.0)).collect())?;
    let mut outcome = LemmaTrial {
        trial,
        real_dim: 2 * k,
        points: m,
        eps: 0.0,
        delta,
        bound: None,
        barycenter_distance: 0.0,
        hypothesis_met: false,
        concentrated_weight: 0.0,
        holds: true,
    };
    let l = match find_separating_functional(&cloud, &target) {
        Ok(l) => l,
        Err(Error::NotExposed { .. }) => return Ok(outcome),
        Err(e) => return Err(e),
    };
    let diameter = vertices.iter().map(|v| distance(&target, v)).collect::<Result<Vec<_>>>()?;
    let diameter = diameter.into_iter().fold(0.0, f64::max);
    let eps = eps_frac * diameter;
    let k_slab = l.slab_constant(&target, &vertices);
    let l = l.threshold_for_radius(k_slab, eps)?;
    let bound = lemma_bound(&l, eps, delta)?;
    outcome.eps = eps;
    outcome.bound = Some(bound);

    // Reweighted cloud in the hull: heavy points just around the target,
    // light ones anywhere.
    let r = rng.gen_range(2..=cfg.max_reweight_points);
    let near_share = rng.gen_range(0.5..1.0);
    let reach = rng.gen_range(0.0..4.0) * bound / diameter;
    let points: Vec<(State, f64)> = (0..r)
        .map(|_| {
            let mu = random_simplex(&mut rng, m);
            let far = mix(&family, &vertices.iter().zip(&mu).map(|(v, w)| (v, *w)).collect::<Vec<_>>());
            let near = rng.gen::<f64>() < near_share;
            let s = if near { rng.gen::<f64>() * reach.min(1.0) } else { rng.gen::<f64>() };
            let w = if near { rng.gen_range(1.0..4.0) } else { rng.gen_range(0.0..0.3) };
            (mix(&family, &[(&target, 1.0 - s), (&far, s)]), w)
        })
        .collect();
    let weighted = WeightedCloud::normalized(points)?;
    let b = barycenter(&weighted);
    outcome.barycenter_distance = distance(&target, &b)?;
    outcome.hypothesis_met = outcome.barycenter_distance <= bound;
    outcome.concentrated_weight = select_concentrated(&weighted, &target, eps)?.weight;
    outcome.holds = !outcome.hypothesis_met || outcome.concentrated_weight >= delta - WEIGHT_SLACK;
    Ok(outcome)
}

/// Runs the trials in parallel; each trial owns its own RNG stream, so the
/// result does not depend on the thread count.
pub fn lemma_trials(cfg: &LemmaTrialConfig) -> Result<LemmaSummary> {
    let outcomes = (0..cfg.trials)
        .into_par_iter()
        .map(|i| one_trial(cfg, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(LemmaSummary {
        trials: outcomes.len(),
        exposed: outcomes.iter().filter(|o| o.bound.is_some()).count(),
        hypothesis_met: outcomes.iter().filter(|o| o.hypothesis_met).count(),
        counterexamples: outcomes.iter().filter(|o| !o.holds).count(),
        outcomes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScheduleStep {
    pub r: usize,
    pub eps: f64,
    pub delta: f64,
    pub bound: f64,
    pub n: usize,
    pub barycenter_distance: f64,
    pub weight: f64,
}

/// Target `τ = (1, 0, …)` and vertices `v_j = τ + e_j`, `j = 1..=k`.
fn synthetic_simplex(k: usize) -> Result<(Arc<TestFamily>, State, Vec<State>)> {
    let family = Arc::new(default_test_family(k + 1)?);
    let mut origin = vec![Complex64::new(0.0, 0.0); k + 1];
    origin[0] = Complex64::new(1.0, 0.0);
    let target = State::new(family.clone(), origin.clone())?;
    let vertices = (1..=k)
        .map(|j| {
            let mut v = origin.clone();
            v[j] = Complex64::new(1.0, 0.0);
            State::new(family.clone(), v)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((family, target, vertices))
}

/// Cloud at step `N`: `τ + (v_1 − τ)/N` with weight `1 − 1/N` and each vertex
/// with weight `1/(kN)`. Its barycenter reaches `τ` at rate `1/N`.
pub fn synthetic_cloud(family: &Arc<TestFamily>, target: &State, vertices: &[State], n: usize) -> Result<WeightedCloud> {
    let inv = 1.0 / n as f64;
    let k = vertices.len() as f64;
    let mut points = vec![(mix(family, &[(target, 1.0 - inv), (&vertices[0], inv)]), 1.0 - inv)];
    points.extend(vertices.iter().map(|v| (v.clone(), inv / k)));
    WeightedCloud::normalized(points)
}

/// For `r = 2..=r_max`, with `eps = 1/r` and `δ = 1 − 1/r`, picks the first
/// `N > N(r−1)` whose barycenter is within the bound and records `‖J_N‖`.
pub fn concentration_schedule(k: usize, r_max: usize) -> Result<Vec<ScheduleStep>> {
    if k == 0 || r_max < 2 {
        return Err(Error::OutOfRange("need k >= 1 and r_max >= 2".into()));
    }
    let (family, target, vertices) = synthetic_simplex(k)?;
    let hull = WeightedCloud::normalized(vertices.iter().map(|v| (v.clone(), 1.0)).collect())?;
    let l = find_separating_functional(&hull, &target)?;
    let k_slab = l.slab_constant(&target, &vertices);
    let dist_at = |n: usize| -> Result<f64> {
        distance(&target, &barycenter(&synthetic_cloud(&family, &target, &vertices, n)?))
    };
    let mut steps = Vec::with_capacity(r_max - 1);
    let mut prev_n = 1usize;
    for r in 2..=r_max {
        let eps = 1.0 / r as f64;
        let delta = 1.0 - eps;
        let bound = lemma_bound(&l.threshold_for_radius(k_slab, eps)?, eps, delta)?;
        // The distance decreases in N, so bracket and bisect.
        let (mut lo, mut hi) = (prev_n, prev_n + 1);
        while dist_at(hi)? > bound {
            lo = hi;
            hi = hi.checked_mul(2).ok_or(Error::Overflow)?;
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if dist_at(mid)? > bound {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let cloud = synthetic_cloud(&family, &target, &vertices, hi)?;
        steps.push(ScheduleStep {
            r,
            eps,
            delta,
            bound,
            n: hi,
            barycenter_distance: distance(&target, &barycenter(&cloud))?,
            weight: select_concentrated(&cloud, &target, eps)?.weight,
        });
        prev_n = hi;
    }
    Ok(steps)
}
