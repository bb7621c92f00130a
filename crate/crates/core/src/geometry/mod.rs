//! Metrized state space over a truncated test family, weighted clouds of
//! states and their concentration around a target.

mod separation;
pub mod trials;

pub use separation::{
    find_separating_functional, find_separating_functional_raw, lemma_bound, SeparatingFunctional,
};

use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observables::FourierObservable;
use crate::quantization::{check_orthonormal, subspace_state_value_unchecked, QuantizationContext};
use crate::scalar::neumaier_sum;

/// Tolerance on `τ(1) = 1`.
pub const NORMALIZATION_TOL: f64 = 1e-9;
/// Tolerance on `Σ α_i = 1`.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Ordered observables `f_1, f_2, …` with metric weights `2^{-n}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TestFamily {
    id: String,
    observables: Vec<FourierObservable<f64>>,
}

impl TestFamily {
    /// `f_1` must be the constant 1 and entries must be pairwise distinct.
    pub fn new(id: impl Into<String>, observables: Vec<FourierObservable<f64>>) -> Result<Self> {
        if observables.first() != Some(&FourierObservable::one()) {
            return Err(Error::InvalidObservable("first family entry must be 1".into()));
        }
        for (i, f) in observables.iter().enumerate() {
            if observables[..i].contains(f) {
                return Err(Error::InvalidObservable(format!("family entry {} repeats", i + 1)));
            }
        }
        Ok(Self { id: id.into(), observables })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn observables(&self) -> &[FourierObservable<f64>] {
        &self.observables
    }

    pub fn len(&self) -> usize {
        self.observables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observables.is_empty()
    }

    /// `2^{-n}` for the 0-based index `n - 1`.
    pub fn weight(&self, index: usize) -> f64 {
        0.5f64.powi(index as i32 + 1)
    }

    /// Tail mass `Σ_{n > n_max} 2^{-n} = 2^{-n_max}` dropped by truncation; it
    /// bounds the missing part of any distance between states with `|τ(f_n)| ≤ 1`
    /// up to a factor 2.
    pub fn truncation_weight(&self) -> f64 {
        0.5f64.powi(self.len() as i32)
    }

    /// Largest `max(|a|, |b|)` over all entries.
    pub fn degree(&self) -> i64 {
        self.observables.iter().map(FourierObservable::degree).max().unwrap_or(0)
    }
}

/// `1`, then monomials `XᵃYᵇ` by shell `max(|a|,|b|)` and lexicographically
/// inside each shell, cut at `n_max` entries.
pub fn default_test_family(n_max: usize) -> Result<TestFamily> {
    if n_max == 0 {
        return Err(Error::OutOfRange("n_max must be at least 1".into()));
    }
    let mut obs = vec![FourierObservable::one()];
    let mut shell = 1i64;
    'fill: while obs.len() < n_max {
        for a in -shell..=shell {
            for b in -shell..=shell {
                if a.abs().max(b.abs()) == shell {
                    if obs.len() == n_max {
                        break 'fill;
                    }
                    obs.push(FourierObservable::monomial(a, b));
                }
            }
        }
        shell += 1;
    }
    TestFamily::new(format!("shell-lex-{n_max}"), obs)
}

/// Values of a normalized functional on each family entry.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    family: Arc<TestFamily>,
    values: Vec<Complex64>,
}

impl State {
    pub fn new(family: Arc<TestFamily>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != family.len() {
            return Err(Error::DimensionMismatch { index: 0, len: values.len(), expected: family.len() });
        }
        if (values[0] - 1.0).norm() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized(format!("{}", values[0])));
        }
        Ok(Self { family, values })
    }

    pub fn family(&self) -> &Arc<TestFamily> {
        &self.family
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    fn same_family(&self, other: &State) -> Result<()> {
        if Arc::ptr_eq(&self.family, &other.family) || *self.family == *other.family {
            Ok(())
        } else {
            Err(Error::FamilyMismatch(self.family.id.clone(), other.family.id.clone()))
        }
    }

    pub fn to_json_value(&self) -> StateJson {
        StateJson {
            family_id: self.family.id.clone(),
            values: self.values.iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn from_json_value(family: Arc<TestFamily>, json: &StateJson) -> Result<Self> {
        if json.family_id != family.id {
            return Err(Error::FamilyMismatch(json.family_id.clone(), family.id.clone()));
        }
        Self::new(family, json.values.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateJson {
    pub family_id: String,
    pub values: Vec<[f64; 2]>,
}

/// `τ_W` on every family entry.
pub fn evaluate_subspace_state(
    ctx: &QuantizationContext<f64>,
    basis: &[DVector<Complex64>],
    family: &Arc<TestFamily>,
) -> Result<State> {
    if basis.is_empty() {
        return Err(Error::OutOfRange("empty basis".into()));
    }
    check_orthonormal(ctx.n(), basis)?;
    let values =
        family.observables.iter().map(|f| subspace_state_value_unchecked(ctx, basis, f)).collect();
    State::new(family.clone(), values)
}

/// The state `f ↦ c(0,0)`.
pub fn classical_state(family: &Arc<TestFamily>) -> State {
    let values = family.observables.iter().map(FourierObservable::classical_average).collect();
    State::new(family.clone(), values).expect("f_1 = 1 has average 1")
}

/// `Σ_n 2^{-n} |τ₁(f_n) − τ₂(f_n)|` over the truncated family.
pub fn distance(s1: &State, s2: &State) -> Result<f64> {
    s1.same_family(s2)?;
    Ok(distance_unchecked(s1, s2))
}

fn distance_unchecked(s1: &State, s2: &State) -> f64 {
    neumaier_sum(
        s1.values
            .iter()
            .zip(&s2.values)
            .enumerate()
            .map(|(i, (x, y))| s1.family.weight(i) * (x - y).norm()),
    )
}

/// Convex combination of states sharing one family.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedCloud {
    points: Vec<(State, f64)>,
}

impl WeightedCloud {
    pub fn new(points: Vec<(State, f64)>) -> Result<Self> {
        let Some((first, _)) = points.first() else {
            return Err(Error::InvalidWeights("empty cloud".into()));
        };
        for (i, (s, w)) in points.iter().enumerate() {
            first.same_family(s)?;
            if !(w.is_finite() && *w >= 0.0) {
                return Err(Error::InvalidWeights(format!("weight {i} = {w}")));
            }
        }
        let total = neumaier_sum(points.iter().map(|p| p.1));
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidWeights(format!("weights sum to {total}")));
        }
        Ok(Self { points })
    }

    /// Weights are divided by their sum.
    pub fn normalized(points: Vec<(State, f64)>) -> Result<Self> {
        let total = neumaier_sum(points.iter().map(|p| p.1));
        if !(total > 0.0) {
            return Err(Error::InvalidWeights(format!("weights sum to {total}")));
        }
        Self::new(points.into_iter().map(|(s, w)| (s, w / total)).collect())
    }

    pub fn points(&self) -> &[(State, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn family(&self) -> &Arc<TestFamily> {
        self.points[0].0.family()
    }

    pub fn to_json_value(&self) -> CloudJson {
        CloudJson {
            points: self
                .points
                .iter()
                .map(|(s, alpha)| CloudPointJson { state: s.to_json_value(), alpha: *alpha })
                .collect(),
        }
    }

    pub fn from_json_value(family: Arc<TestFamily>, json: &CloudJson) -> Result<Self> {
        let points = json
            .points
            .iter()
            .map(|p| Ok((State::from_json_value(family.clone(), &p.state)?, p.alpha)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(points)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CloudJson {
    pub points: Vec<CloudPointJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CloudPointJson {
    pub state: StateJson,
    pub alpha: f64,
}

/// `Σ α_i τ_i`.
pub fn barycenter(cloud: &WeightedCloud) -> State {
    let family = cloud.family().clone();
    let values = (0..family.len())
        .map(|n| {
            let re = neumaier_sum(cloud.points.iter().map(|(s, w)| w * s.values[n].re));
            let im = neumaier_sum(cloud.points.iter().map(|(s, w)| w * s.values[n].im));
            Complex64::new(re, im)
        })
        .collect();
    State { family, values }
}

/// Points of a cloud within `eps` of a target.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub indices: Vec<usize>,
    /// `Σ_{i ∈ indices} α_i`.
    pub weight: f64,
}

pub fn select_concentrated(cloud: &WeightedCloud, target: &State, eps: f64) -> Result<Selection> {
    if !(eps > 0.0) {
        return Err(Error::OutOfRange(format!("eps must be positive, got {eps}")));
    }
    cloud.points[0].0.same_family(target)?;
    let indices: Vec<usize> = cloud
        .points
        .iter()
        .enumerate()
        .filter(|(_, (s, _))| distance_unchecked(target, s) <= eps)
        .map(|(i, _)| i)
        .collect();
    let weight = neumaier_sum(indices.iter().map(|&i| cloud.points[i].1));
    Ok(Selection { indices, weight })
}


#[cfg(test)]
mod tests {
    use super::test_support::{family, state};
    use super::*;
    use proptest::prelude::*;

    fn unit(n: usize, i: usize) -> DVector<Complex64> {
        let mut v = DVector::zeros(n);
        v[i] = Complex64::new(1.0, 0.0);
        v
    }

    #[test]
    fn default_family_layout() {
        assert_eq!(default_test_family(1).unwrap().observables(), &[FourierObservable::one()]);
        let f4 = default_test_family(4).unwrap();
        let expected: Vec<_> = [(0, 0), (-1, -1), (-1, 0), (-1, 1)]
            .iter()
            .map(|&(a, b)| FourierObservable::monomial(a, b))
            .collect();
        assert_eq!(f4.observables(), &expected[..]);
        let f25 = default_test_family(25).unwrap();
        assert_eq!(f25.degree(), 2);
        assert_eq!(f25.observables()[9], FourierObservable::monomial(-2, -2));
        assert_eq!(f25.observables()[24], FourierObservable::monomial(2, 2));
        let f60 = default_test_family(60).unwrap();
        assert_eq!(f60.len(), 60);
        assert_eq!(f60.weight(2), 0.125);
        assert!(matches!(default_test_family(0), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn family_rejects_duplicates_and_bad_head() {
        let x = FourierObservable::x();
        assert!(TestFamily::new("d", vec![FourierObservable::one(), x.clone(), x.clone()]).is_err());
        assert!(TestFamily::new("h", vec![x]).is_err());
    }

    #[test]
    fn subspace_states() {
        let ctx = QuantizationContext::new(4).unwrap();
        let fam = Arc::new(
            TestFamily::new("fx", vec![FourierObservable::one(), FourierObservable::x()]).unwrap(),
        );
        let full: Vec<_> = (0..4).map(|i| unit(4, i)).collect();
        let s = evaluate_subspace_state(&ctx, &full, &fam).unwrap();
        assert_eq!(s.values()[0], Complex64::new(1.0, 0.0));
        assert!(s.values()[1].norm() < 1e-15);
        let s = evaluate_subspace_state(&ctx, &[unit(4, 0)], &fam).unwrap();
        assert!((s.values()[1] - ctx.a() * ctx.a()).norm() < 1e-15);
    }

    #[test]
    fn classical_examples() {
        let fam = Arc::new(
            TestFamily::new(
                "c",
                vec![
                    FourierObservable::one(),
                    FourierObservable::x(),
                    &FourierObservable::constant(Complex64::new(2.0, 0.0)) + &FourierObservable::monomial(1, 1),
                ],
            )
            .unwrap(),
        );
        let s = classical_state(&fam);
        assert_eq!(s.values(), &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(2.0, 0.0)]);
    }

    #[test]
    fn distance_examples() {
        let fam = family(4);
        let s = state(&fam, &[(0.3, 0.1), (0.0, 0.0), (0.5, 0.5)]);
        assert_eq!(distance(&s, &s).unwrap(), 0.0);
        let t = state(&fam, &[(0.3, 0.1), (1.0, 0.0), (0.5, 0.5)]);
        assert_eq!(distance(&s, &t).unwrap(), 0.125);
        let other = Arc::new(default_test_family(4).map(|f| TestFamily::new("other", f.observables().to_vec()).unwrap()).unwrap());
        let u = state(&other, &[(0.3, 0.1), (0.0, 0.0), (0.5, 0.5)]);
        assert!(matches!(distance(&s, &u), Err(Error::FamilyMismatch(..))));
    }

    #[test]
    fn barycenter_examples() {
        let fam = family(2);
        let p = state(&fam, &[(0.4, -0.2)]);
        assert_eq!(barycenter(&WeightedCloud::new(vec![(p.clone(), 1.0)]).unwrap()), p);
        assert_eq!(barycenter(&WeightedCloud::new(vec![(p.clone(), 0.5), (p.clone(), 0.5)]).unwrap()), p);
        let a = state(&fam, &[(0.0, 0.0)]);
        let b = state(&fam, &[(1.0, 0.0)]);
        let bc = barycenter(&WeightedCloud::new(vec![(a, 0.25), (b, 0.75)]).unwrap());
        assert_eq!(bc.values()[1], Complex64::new(0.75, 0.0));
    }

    #[test]
    fn cloud_validation() {
        let fam = family(2);
        let p = state(&fam, &[(0.0, 0.0)]);
        assert!(WeightedCloud::new(vec![(p.clone(), 0.5)]).is_err());
        assert!(WeightedCloud::new(vec![(p.clone(), -0.5), (p.clone(), 1.5)]).is_err());
        assert!(WeightedCloud::new(vec![]).is_err());
        assert!(State::new(fam.clone(), vec![Complex64::new(0.9, 0.0), Complex64::new(0.0, 0.0)]).is_err());
    }

    #[test]
    fn selection_examples() {
        let fam = family(2);
        let target = state(&fam, &[(0.0, 0.0)]);
        let all = WeightedCloud::new(vec![(target.clone(), 0.4), (target.clone(), 0.6)]).unwrap();
        let sel = select_concentrated(&all, &target, 1e-3).unwrap();
        assert_eq!((sel.indices, sel.weight), (vec![0, 1], 1.0));
        // Distances 0.1 and 0.5 through the single weight-1/4 coordinate.
        let near = state(&fam, &[(0.4, 0.0)]);
        let far = state(&fam, &[(2.0, 0.0)]);
        let cloud = WeightedCloud::new(vec![(near, 0.7), (far, 0.3)]).unwrap();
        let sel = select_concentrated(&cloud, &target, 0.2).unwrap();
        assert_eq!(sel.indices, vec![0]);
        assert_eq!(sel.weight, 0.7);
        let none = select_concentrated(&cloud, &target, 0.05).unwrap();
        assert_eq!((none.indices.len(), none.weight), (0, 0.0));
        assert!(select_concentrated(&cloud, &target, 0.0).is_err());
    }

    #[test]
    fn json_round_trip() {
        let fam = family(3);
        let cloud = WeightedCloud::new(vec![
            (state(&fam, &[(0.1, 0.2), (0.3, -0.4)]), 0.25),
            (state(&fam, &[(-0.5, 0.0), (0.0, 1.0)]), 0.75),
        ])
        .unwrap();
        let json = serde_json::to_string(&cloud.to_json_value()).unwrap();
        assert!(json.starts_with(r#"{"points":[{"state":{"family_id":"shell-lex-3","values":[[1.0,0.0],"#));
        let back = WeightedCloud::from_json_value(fam, &serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, cloud);
    }

    fn random_state(len: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len - 1)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn distance_is_a_metric(a in random_state(6), b in random_state(6), c in random_state(6)) {
            let fam = family(6);
            let (a, b, c) = (state(&fam, &a), state(&fam, &b), state(&fam, &c));
            let ab = distance(&a, &b).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert_eq!(ab, distance(&b, &a).unwrap());
            prop_assert_eq!(distance(&a, &a).unwrap(), 0.0);
            prop_assert!(distance(&a, &c).unwrap() <= ab + distance(&b, &c).unwrap() + 1e-15);
            if a != b {
                prop_assert!(ab > 0.0);
            }
        }
    }

    proptest! {
        #[test]
        fn barycenter_splits_along_selection(
            pts in prop::collection::vec((random_state(4), 0.01f64..1.0), 2..12),
            eps in 0.1f64..0.4,
        ) {
            let fam = family(4);
            let target = state(&fam, &[(0.0, 0.0); 3]);
            let cloud = WeightedCloud::normalized(pts.iter().map(|(v, w)| (state(&fam, v), *w)).collect()).unwrap();
            let sel = select_concentrated(&cloud, &target, eps).unwrap();
            let alpha = sel.weight;
            prop_assume!(!sel.indices.is_empty() && sel.indices.len() < cloud.len());
            let part = |inside: bool| {
                WeightedCloud::normalized(
                    cloud.points().iter().enumerate()
                        .filter(|(i, _)| sel.indices.contains(i) == inside)
                        .map(|(_, (s, w))| (s.clone(), *w))
                        .collect(),
                ).unwrap()
            };
            let (b1, b2) = (barycenter(&part(true)), barycenter(&part(false)));
            let b = barycenter(&cloud);
            for n in 0..4 {
                let mix = b1.values()[n] * alpha + b2.values()[n] * (1.0 - alpha);
                prop_assert!((mix - b.values()[n]).norm() <= 1e-12);
            }
        }
    }
}
