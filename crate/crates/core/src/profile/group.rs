use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::neutral::grid;
use super::{OccupantProfile, ProfileError};
use crate::node::NodeId;
use crate::predictor::{predict_tci, FeatureVector, TciModel};
use crate::scalar::{order_free_sum, Scalar};

/// Default candidate spacing for setpoint selection, °C.
pub const DEFAULT_GRID_STEP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore<T> {
    pub temp: T,
    /// Sum over occupants of predicted TCI squared.
    pub objective: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SetpointSelection<T> {
    pub t0: T,
    pub trace: Vec<CandidateScore<T>>,
}

/// Group statistics over the occupants' neutral temperatures.
///
/// Members are kept sorted by occupant id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GroupThermalProfile<T> {
    pub members: Vec<OccupantProfile<T>>,
    pub t_bar: T,
    pub sigma: T,
    pub band: [T; 2],
    pub t0: Option<T>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub objective_trace: Vec<CandidateScore<T>>,
}

impl<T: Scalar> GroupThermalProfile<T> {
    pub fn with_setpoint(mut self, selection: SetpointSelection<T>) -> Self {
        self.t0 = Some(selection.t0);
        self.objective_trace = selection.trace;
        self
    }

    pub fn member_ids(&self) -> impl Iterator<Item = &NodeId> {
        self.members.iter().map(|m| &m.occupant_id)
    }

    pub fn contains(&self, t: T) -> bool {
        t >= self.band[0] && t <= self.band[1]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("group profile serializes")
    }
}

pub fn build_group_profile<T: Scalar>(
    mut members: Vec<OccupantProfile<T>>,
) -> Result<GroupThermalProfile<T>, ProfileError> {
    if members.is_empty() {
        return Err(ProfileError::EmptyGroup);
    }
    if members.iter().any(|m| !m.neutral_temp.is_finite()) {
        return Err(ProfileError::InvalidParameter("neutral temperature must be finite"));
    }
    members.sort_by(|a, b| a.occupant_id.cmp(&b.occupant_id));
    if let Some(w) = members.windows(2).find(|w| w[0].occupant_id == w[1].occupant_id) {
        return Err(ProfileError::DuplicateMember(w[0].occupant_id.clone()));
    }

    let n = T::from_usize(members.len()).unwrap();
    let t_bar = order_free_sum(members.iter().map(|m| m.neutral_temp)) / n;
    let var = order_free_sum(members.iter().map(|m| {
        let d = m.neutral_temp - t_bar;
        d * d
    })) / n;
    let sigma = var.sqrt();

    Ok(GroupThermalProfile {
        members,
        t_bar,
        sigma,
        band: [t_bar - sigma, t_bar + sigma],
        t0: None,
        objective_trace: Vec::new(),
    })
}

/// Picks the grid temperature inside the group band that minimises the summed
/// squared predicted TCI.
///
/// Ties go to the candidate closest to `t_bar`, then to the lower temperature.
/// `features_at` yields an occupant's feature vector at a given air temperature.
pub fn select_setpoint<T, F>(
    group: &GroupThermalProfile<T>,
    model: &TciModel<T>,
    features_at: F,
    grid_step: T,
) -> Result<SetpointSelection<T>, ProfileError>
where
    T: Scalar,
    F: Fn(&NodeId, T) -> Option<FeatureVector<T>>,
{
    if group.members.is_empty() {
        return Err(ProfileError::EmptyGroup);
    }
    if !(grid_step.is_finite() && grid_step > T::zero()) {
        return Err(ProfileError::InvalidParameter("grid step must be positive"));
    }

    let candidates = if group.band[1] > group.band[0] {
        grid(group.band[0], group.band[1], grid_step)
    } else {
        vec![group.band[0]]
    };

    let mut trace = Vec::with_capacity(candidates.len());
    for &temp in &candidates {
        let mut terms = Vec::with_capacity(group.members.len());
        for m in &group.members {
            let fv = features_at(&m.occupant_id, temp)
                .ok_or_else(|| ProfileError::MissingFeatures(m.occupant_id.clone()))?;
            let tci = predict_tci(model, &fv)?.value();
            terms.push(tci * tci);
        }
        trace.push(CandidateScore {
            temp,
            objective: order_free_sum(terms),
        });
    }

    let better = |a: &CandidateScore<T>, b: &CandidateScore<T>| -> Ordering {
        a.objective
            .partial_cmp(&b.objective)
            .unwrap_or(Ordering::Equal)
            .then_with(|| {
                let da = (a.temp - group.t_bar).abs();
                let db = (b.temp - group.t_bar).abs();
                da.partial_cmp(&db).unwrap_or(Ordering::Equal)
            })
            .then_with(|| a.temp.partial_cmp(&b.temp).unwrap_or(Ordering::Equal))
    };
    let best = trace
        .iter()
        .copied()
        .min_by(|a, b| better(a, b))
        .expect("at least one candidate");

    Ok(SetpointSelection { t0: best.temp, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictor::{TrainingMetadata, FEATURE_COUNT};
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn member(id: &str, t: f64) -> OccupantProfile<f64> {
        OccupantProfile {
            occupant_id: NodeId::new(id).unwrap(),
            neutral_temp: t,
            sensitivity: 0.5,
        }
    }

    fn identity_model() -> TciModel<f64> {
        let mut coef = vec![0.0; FEATURE_COUNT];
        coef[0] = 1.0;
        TciModel::from_parts(
            coef,
            0.0,
            vec![0.0; FEATURE_COUNT],
            vec![1.0; FEATURE_COUNT],
            TrainingMetadata {
                seed: 0,
                sample_count: 0,
                ridge_strength: 0.0,
            },
        )
        .unwrap()
    }

    /// Linear responses `slope · (t - neutral)` keyed by occupant id.
    fn linear_fns(spec: &[(&str, f64, f64)]) -> impl Fn(&NodeId, f64) -> Option<FeatureVector<f64>> {
        let map: BTreeMap<String, (f64, f64)> =
            spec.iter().map(|(id, n, s)| (id.to_string(), (*n, *s))).collect();
        move |id, t| {
            map.get(id.as_str()).map(|(n, s)| {
                let mut v = [0.0; FEATURE_COUNT];
                v[0] = s * (t - n);
                FeatureVector(v)
            })
        }
    }

    #[test]
    fn five_member_statistics() {
        let g = build_group_profile(
            [21.0, 22.0, 23.0, 24.0, 25.0]
                .iter()
                .enumerate()
                .map(|(i, t)| member(&format!("o{i}"), *t))
                .collect(),
        )
        .unwrap();
        assert_eq!(g.t_bar, 23.0);
        assert!((g.sigma - 2f64.sqrt()).abs() < 1e-12);
        assert!((g.band[0] - 21.585786437626904).abs() < 1e-12);
        assert!((g.band[1] - 24.414213562373096).abs() < 1e-12);
    }

    #[test]
    fn degenerate_spreads() {
        let g = build_group_profile(vec![member("a", 22.5)]).unwrap();
        assert_eq!((g.t_bar, g.sigma, g.band), (22.5, 0.0, [22.5, 22.5]));
        let g = build_group_profile(vec![member("a", 24.0), member("b", 24.0)]).unwrap();
        assert_eq!((g.t_bar, g.sigma, g.band), (24.0, 0.0, [24.0, 24.0]));
    }

    #[test]
    fn empty_and_duplicate() {
        assert!(matches!(build_group_profile::<f64>(vec![]), Err(ProfileError::EmptyGroup)));
        assert!(matches!(
            build_group_profile(vec![member("a", 1.0), member("a", 2.0)]),
            Err(ProfileError::DuplicateMember(_))
        ));
    }

    #[test]
    fn identical_occupants_select_mean() {
        let g = build_group_profile(vec![member("a", 23.3), member("b", 23.3)]).unwrap();
        let fns = linear_fns(&[("a", 23.3, 0.5), ("b", 23.3, 0.5)]);
        let sel = select_setpoint(&g, &identity_model(), fns, 0.1).unwrap();
        assert_eq!(sel.t0, g.t_bar);
        assert_eq!(sel.trace.len(), 1);
    }

    #[test]
    fn symmetric_pair_selects_midpoint() {
        let g = build_group_profile(vec![member("a", 21.0), member("b", 25.0)]).unwrap();
        let fns = linear_fns(&[("a", 21.0, 0.5), ("b", 25.0, 0.5)]);
        let sel = select_setpoint(&g, &identity_model(), fns, 0.1).unwrap();
        assert!((sel.t0 - 23.0).abs() <= 0.1);
    }

    #[test]
    fn missing_feature_source() {
        let g = build_group_profile(vec![member("a", 21.0), member("b", 25.0)]).unwrap();
        let fns = linear_fns(&[("a", 21.0, 0.5)]);
        assert!(matches!(
            select_setpoint(&g, &identity_model(), fns, 0.1),
            Err(ProfileError::MissingFeatures(_))
        ));
    }

    #[test]
    fn ties_prefer_mean_then_lower() {
        // flat objective: every candidate ties, so t0 is the grid point nearest t_bar
        let g = build_group_profile(vec![member("a", 21.0), member("b", 25.0)]).unwrap();
        let flat = |_: &NodeId, _: f64| Some(FeatureVector([0.0; FEATURE_COUNT]));
        let sel = select_setpoint(&g, &identity_model(), flat, 0.3).unwrap();
        let nearest = sel
            .trace
            .iter()
            .map(|c| (c.temp - g.t_bar).abs())
            .fold(f64::INFINITY, f64::min);
        assert_eq!((sel.t0 - g.t_bar).abs(), nearest);

        // band [1, 3] with step 1: candidates 1, 2, 3; objective symmetric about 2.5 → 2 and 3 tie
        let g = GroupThermalProfile {
            members: vec![member("a", 2.5)],
            t_bar: 2.5,
            sigma: 0.5,
            band: [2.0, 3.0],
            t0: None,
            objective_trace: vec![],
        };
        let fns = linear_fns(&[("a", 2.5, 1.0)]);
        let sel = select_setpoint(&g, &identity_model(), fns, 0.5).unwrap();
        assert_eq!(sel.t0, 2.5);
        let sel = select_setpoint(&g, &identity_model(), linear_fns(&[("a", 2.5, 1.0)]), 1.0).unwrap();
        assert_eq!(sel.t0, 2.0);
    }

    proptest! {
        #[test]
        fn permutation_invariant(temps in prop::collection::vec(16.0f64..30.0, 1..8), rot in 0usize..8) {
            let members: Vec<_> = temps.iter().enumerate().map(|(i, t)| member(&format!("o{i}"), *t)).collect();
            let mut shuffled = members.clone();
            let len = shuffled.len();
            shuffled.rotate_left(rot % len);
            shuffled.reverse();
            let a = build_group_profile(members).unwrap();
            let b = build_group_profile(shuffled).unwrap();
            prop_assert_eq!(&a, &b);
        }

        #[test]
        fn duplicate_at_mean_never_widens(temps in prop::collection::vec(16.0f64..30.0, 1..8)) {
            let members: Vec<_> = temps.iter().enumerate().map(|(i, t)| member(&format!("o{i}"), *t)).collect();
            let g = build_group_profile(members.clone()).unwrap();
            let mut more = members;
            more.push(member("dup", g.t_bar));
            let h = build_group_profile(more).unwrap();
            prop_assert!(h.sigma <= g.sigma + 1e-12 * g.t_bar.abs());
        }
    }
}
