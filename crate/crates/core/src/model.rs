//! Replacement instances, SDN rule timing and hovering-energy evaluation.
//!
//! A handover is processed one flow at a time by the controller. Flow `i`
//! occupies the controller for `T_i` seconds; a retired UAV may land once
//! every flow crossing it has been moved, so its hover time is the finish
//! time of the last of those flows.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Per-rule controller latencies, in seconds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RuleTimings<S> {
    pub tau_del: S,
    pub tau_ins: S,
    pub tau_mod: S,
}

impl<S: Scalar> RuleTimings<S> {
    pub fn new(tau_del: S, tau_ins: S, tau_mod: S) -> Result<Self> {
        for (name, v) in [("tau_del", tau_del), ("tau_ins", tau_ins), ("tau_mod", tau_mod)] {
            if !(v.is_finite_value() && v > S::zero()) {
                return Err(Error::InvalidInstance(format!("{name} must be positive and finite, got {v:?}")));
            }
        }
        Ok(Self { tau_del, tau_ins, tau_mod })
    }

    pub fn from_millis(del_ms: f64, ins_ms: f64, mod_ms: f64) -> Result<Self> {
        let conv = |name: &str, ms: f64| {
            S::from_millis(ms).ok_or_else(|| Error::InvalidInstance(format!("{name} is not a finite number")))
        };
        Self::new(conv("tau_del_ms", del_ms)?, conv("tau_ins_ms", ins_ms)?, conv("tau_mod_ms", mod_ms)?)
    }

    /// Timings in milliseconds, for file output.
    pub fn millis(&self) -> [f64; 3] {
        [self.tau_del, self.tau_ins, self.tau_mod].map(|v| v.as_f64() * 1000.0)
    }
}

impl<S: Scalar> Default for RuleTimings<S> {
    /// 5 ms per delete or insert, 10 ms per modify.
    fn default() -> Self {
        Self::from_millis(5.0, 5.0, 10.0).expect("default timings are valid")
    }
}

/// Forwarding-rule changes needed to move one flow.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RuleCounts {
    pub del: u32,
    pub ins: u32,
    #[serde(rename = "mod")]
    pub modify: u32,
}

impl RuleCounts {
    pub fn new(del: u32, ins: u32, modify: u32) -> Self {
        Self { del, ins, modify }
    }
}

/// Time the controller needs to apply `counts`.
pub fn handover_time<S: Scalar>(counts: RuleCounts, timings: &RuleTimings<S>) -> S {
    let c = |k: u32| S::from_count(k as usize);
    c(counts.del) * timings.tau_del + c(counts.ins) * timings.tau_ins + c(counts.modify) * timings.tau_mod
}

/// Rule changes for rerouting a flow around the retired UAVs on its path.
///
/// Every retired hop needs one delete and one insert. Each maximal run of
/// consecutive retired hops needs one modification at the live node that
/// precedes it.
pub fn rule_counts_from_route(route: &[usize], retired: &BTreeSet<usize>) -> Result<RuleCounts> {
    counts_for_flow(0, route, retired)
}

fn counts_for_flow(flow: usize, route: &[usize], retired: &BTreeSet<usize>) -> Result<RuleCounts> {
    validate_route(flow, route)?;
    for &end in [route[0], route[route.len() - 1]].iter() {
        if retired.contains(&end) {
            return Err(Error::EndpointRetired { flow, uav: end });
        }
    }
    let mut hops = 0;
    let mut runs = 0;
    let mut in_run = false;
    for node in route {
        if retired.contains(node) {
            hops += 1;
            if !in_run {
                runs += 1;
            }
            in_run = true;
        } else {
            in_run = false;
        }
    }
    Ok(RuleCounts::new(hops, hops, runs))
}

fn validate_route(flow: usize, route: &[usize]) -> Result<()> {
    if route.len() < 2 {
        return Err(Error::InvalidRoute { flow, reason: "route needs at least two nodes".into() });
    }
    let mut seen = BTreeSet::new();
    for &node in route {
        if !seen.insert(node) {
            return Err(Error::InvalidRoute { flow, reason: format!("node {node} visited twice") });
        }
    }
    Ok(())
}

/// One flow that must be handed over.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowSpec<S> {
    pub id: usize,
    /// Present when the handover time was derived from rule changes.
    pub rule_counts: Option<RuleCounts>,
    /// `T_i`, seconds.
    pub handover_time: S,
    /// `Δ_i`: retired UAVs on the flow's path, sorted.
    pub retired_set: Vec<usize>,
}

impl<S: Scalar> FlowSpec<S> {
    pub fn from_counts(id: usize, counts: RuleCounts, retired_set: Vec<usize>, timings: &RuleTimings<S>) -> Self {
        Self { id, rule_counts: Some(counts), handover_time: handover_time(counts, timings), retired_set }
    }

    pub fn with_time(id: usize, handover_time: S, retired_set: Vec<usize>) -> Self {
        Self { id, rule_counts: None, handover_time, retired_set }
    }
}

/// A retired UAV and the flows keeping it airborne.
#[derive(Clone, Debug, PartialEq)]
pub struct RetiredUav<S> {
    pub id: usize,
    /// `P_j`, watts.
    pub hover_power: S,
    /// `Λ_j`, sorted.
    pub flow_set: Vec<usize>,
}

/// The abstract scheduling problem: flows `0..n`, retired UAVs `0..m`.
///
/// Construction enforces dense ids, non-empty `Δ_i`, positive handover
/// times and non-negative powers, and derives every `Λ_j` from the `Δ_i`,
/// so the two membership maps are always dual.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplacementInstance<S> {
    flows: Vec<FlowSpec<S>>,
    uavs: Vec<RetiredUav<S>>,
    timings: RuleTimings<S>,
}

impl<S: Scalar> ReplacementInstance<S> {
    pub fn new(flows: Vec<FlowSpec<S>>, hover_powers: Vec<S>, timings: RuleTimings<S>) -> Result<Self> {
        let m = hover_powers.len();
        let mut lambda = vec![Vec::new(); m];
        let mut flows = flows;
        for (pos, flow) in flows.iter_mut().enumerate() {
            if flow.id != pos {
                return Err(Error::InvalidInstance(format!(
                    "flow ids must be dense: position {pos} holds id {}",
                    flow.id
                )));
            }
            let t = flow.handover_time;
            if !(t.is_finite_value() && t > S::zero()) {
                return Err(Error::InvalidInstance(format!("flow {pos} has non-positive handover time {t:?}")));
            }
            if let Some(counts) = flow.rule_counts {
                if !handover_time(counts, &timings).close_to(t) {
                    return Err(Error::InvalidInstance(format!(
                        "flow {pos}: handover time {t:?} disagrees with rule counts {counts:?}"
                    )));
                }
            }
            flow.retired_set.sort_unstable();
            flow.retired_set.dedup();
            if flow.retired_set.is_empty() {
                return Err(Error::InvalidInstance(format!("flow {pos} crosses no retired UAV")));
            }
            for &j in &flow.retired_set {
                if j >= m {
                    return Err(Error::InvalidInstance(format!(
                        "flow {pos} references UAV {j}, but only {m} are retired"
                    )));
                }
                lambda[j].push(pos);
            }
        }
        let mut uavs = Vec::with_capacity(m);
        for (j, (power, flow_set)) in hover_powers.into_iter().zip(lambda).enumerate() {
            if !(power.is_finite_value() && power >= S::zero()) {
                return Err(Error::InvalidInstance(format!("UAV {j} has invalid hover power {power:?}")));
            }
            uavs.push(RetiredUav { id: j, hover_power: power, flow_set });
        }
        Ok(Self { flows, uavs, timings })
    }

    pub fn n(&self) -> usize {
        self.flows.len()
    }

    pub fn m(&self) -> usize {
        self.uavs.len()
    }

    pub fn flows(&self) -> &[FlowSpec<S>] {
        &self.flows
    }

    pub fn uavs(&self) -> &[RetiredUav<S>] {
        &self.uavs
    }

    pub fn timings(&self) -> &RuleTimings<S> {
        &self.timings
    }

    pub fn handover_times(&self) -> Vec<S> {
        self.flows.iter().map(|f| f.handover_time).collect()
    }

    pub fn hover_powers(&self) -> Vec<S> {
        self.uavs.iter().map(|u| u.hover_power).collect()
    }

    /// Same memberships with every hover power multiplied by `factor`.
    pub fn with_scaled_powers(&self, factor: S) -> Result<Self> {
        let powers = self.uavs.iter().map(|u| u.hover_power * factor).collect();
        Self::new(self.flows.clone(), powers, self.timings)
    }

    /// Same memberships with every handover time multiplied by `factor`.
    /// Rule counts are dropped since the times no longer follow the timings.
    pub fn with_scaled_times(&self, factor: S) -> Result<Self> {
        let flows = self
            .flows
            .iter()
            .map(|f| FlowSpec::with_time(f.id, f.handover_time * factor, f.retired_set.clone()))
            .collect();
        Self::new(flows, self.hover_powers(), self.timings)
    }

    /// Checks `j ∈ Δ_i ⇔ i ∈ Λ_j`. Always true for a constructed instance.
    pub fn is_dual(&self) -> bool {
        let forward: BTreeSet<(usize, usize)> =
            self.flows.iter().flat_map(|f| f.retired_set.iter().map(move |&j| (f.id, j))).collect();
        let backward: BTreeSet<(usize, usize)> =
            self.uavs.iter().flat_map(|u| u.flow_set.iter().map(move |&i| (i, u.id))).collect();
        forward == backward
    }
}

/// Dense-to-original id translation produced by [`build_instance`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdMap {
    /// `flows[i]` is the caller's id of dense flow `i`.
    pub flows: Vec<usize>,
    /// `uavs[j]` is the caller's id of dense retired UAV `j`.
    pub uavs: Vec<usize>,
}

/// Builds an instance from routed flows and the retired UAVs.
///
/// Flows that avoid every retired UAV need no handover and are dropped.
/// Surviving flows and the retired UAVs are renumbered densely in input
/// order.
pub fn build_instance<S: Scalar>(
    flows: &[(usize, Vec<usize>)],
    retired_uavs: &[(usize, S)],
    timings: RuleTimings<S>,
) -> Result<(ReplacementInstance<S>, IdMap)> {
    let mut dense_uav = BTreeMap::new();
    for (j, &(id, _)) in retired_uavs.iter().enumerate() {
        if dense_uav.insert(id, j).is_some() {
            return Err(Error::InvalidInstance(format!("retired UAV {id} listed twice")));
        }
    }
    let retired: BTreeSet<usize> = dense_uav.keys().copied().collect();

    let mut specs = Vec::new();
    let mut map = IdMap { flows: Vec::new(), uavs: retired_uavs.iter().map(|&(id, _)| id).collect() };
    for (id, route) in flows {
        let counts = counts_for_flow(*id, route, &retired)?;
        let delta: Vec<usize> = route.iter().filter_map(|node| dense_uav.get(node).copied()).collect();
        if delta.is_empty() {
            continue;
        }
        specs.push(FlowSpec::from_counts(specs.len(), counts, delta, &timings));
        map.flows.push(*id);
    }
    if specs.is_empty() && retired_uavs.is_empty() {
        return Err(Error::EmptyInstance);
    }
    let powers = retired_uavs.iter().map(|&(_, p)| p).collect();
    Ok((ReplacementInstance::new(specs, powers, timings)?, map))
}

/// A handover order: a permutation of the flow ids.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schedule {
    order: Vec<usize>,
}

impl Schedule {
    pub fn new(order: Vec<usize>, n: usize) -> Result<Self> {
        if order.len() != n {
            return Err(Error::InvalidSchedule(format!("expected {n} flows, schedule lists {}", order.len())));
        }
        let mut seen = vec![false; n];
        for &f in &order {
            if f >= n {
                return Err(Error::InvalidSchedule(format!("flow {f} out of range 0..{n}")));
            }
            if std::mem::replace(&mut seen[f], true) {
                return Err(Error::InvalidSchedule(format!("flow {f} scheduled twice")));
            }
        }
        Ok(Self { order })
    }

    pub fn identity(n: usize) -> Self {
        Self { order: (0..n).collect() }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn into_order(self) -> Vec<usize> {
        self.order
    }

    fn check_against<S>(&self, instance: &ReplacementInstance<S>) -> Result<()> {
        if self.order.len() != instance.flows.len() {
            return Err(Error::InvalidSchedule(format!(
                "schedule has {} flows, instance has {}",
                self.order.len(),
                instance.flows.len()
            )));
        }
        Ok(())
    }
}

/// Outcome of executing a schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyReport<S> {
    /// `C_j`: time at which retired UAV `j` may leave service.
    pub completion_times: Vec<S>,
    /// `Σ_j P_j C_j`, joules.
    pub total_energy: S,
    /// Cumulative finish time of each flow, indexed by flow id.
    pub flow_finish_times: Vec<S>,
}

/// Hovering energy spent while the flows are handed over in `schedule` order.
pub fn compute_energy<S: Scalar>(instance: &ReplacementInstance<S>, schedule: &Schedule) -> Result<EnergyReport<S>> {
    schedule.check_against(instance)?;
    let mut finish = vec![S::zero(); instance.n()];
    let mut clock = S::zero();
    for &f in schedule.order() {
        clock += instance.flows[f].handover_time;
        finish[f] = clock;
    }
    let completion_times: Vec<S> = instance
        .uavs
        .iter()
        .map(|u| u.flow_set.iter().map(|&i| finish[i]).fold(S::zero(), |acc, t| if t > acc { t } else { acc }))
        .collect();
    let total_energy = instance.uavs.iter().zip(&completion_times).map(|(u, &c)| u.hover_power * c).sum();
    Ok(EnergyReport { completion_times, total_energy, flow_finish_times: finish })
}

/// The four-flow, five-UAV network used throughout the docs and tests:
/// `T = [40, 30, 30, 30]` ms, every UAV hovering at 100 W, and
/// `Λ = [{0,1}, {0}, {0,2}, {1,2,3}, {3}]`.
pub fn reference_instance<S: Scalar>() -> ReplacementInstance<S> {
    let timings = RuleTimings::default();
    let flows = vec![
        FlowSpec::from_counts(0, RuleCounts::new(3, 3, 1), vec![0, 1, 2], &timings),
        FlowSpec::from_counts(1, RuleCounts::new(2, 2, 1), vec![0, 3], &timings),
        FlowSpec::from_counts(2, RuleCounts::new(2, 2, 1), vec![2, 3], &timings),
        FlowSpec::from_counts(3, RuleCounts::new(2, 2, 1), vec![3, 4], &timings),
    ];
    let p = S::from_count(100);
    ReplacementInstance::new(flows, vec![p; 5], timings).expect("reference instance is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;
    use proptest::prelude::*;

    fn ms(v: i64) -> Rational64 {
        Rational64::new(v, 1000)
    }

    #[test]
    fn handover_time_matches_worked_values() {
        let t = RuleTimings::<Rational64>::default();
        assert_eq!(handover_time(RuleCounts::new(1, 1, 1), &t), ms(20));
        assert_eq!(handover_time(RuleCounts::new(3, 3, 1), &t), ms(40));
        assert_eq!(handover_time(RuleCounts::new(0, 0, 0), &t), ms(0));
        let tf = RuleTimings::<f64>::default();
        assert!((handover_time(RuleCounts::new(1, 1, 1), &tf) - 0.020).abs() < 1e-15);
    }

    #[test]
    fn timings_reject_non_positive() {
        assert!(RuleTimings::<f64>::from_millis(0.0, 5.0, 10.0).is_err());
        assert!(RuleTimings::<f64>::from_millis(5.0, -1.0, 10.0).is_err());
        assert!(RuleTimings::<f64>::from_millis(5.0, 5.0, f64::NAN).is_err());
    }

    #[test]
    fn rule_counts_per_retired_run() {
        let r = |v: &[usize]| v.iter().copied().collect::<BTreeSet<_>>();
        assert_eq!(rule_counts_from_route(&[0, 1, 2, 3, 4], &r(&[1, 2, 3])).unwrap(), RuleCounts::new(3, 3, 1));
        assert_eq!(rule_counts_from_route(&[0, 1, 2], &r(&[1])).unwrap(), RuleCounts::new(1, 1, 1));
        assert_eq!(rule_counts_from_route(&[0, 1, 2, 3, 4], &r(&[1, 3])).unwrap(), RuleCounts::new(2, 2, 2));
        assert_eq!(rule_counts_from_route(&[0, 4], &r(&[1, 3])).unwrap(), RuleCounts::default());
    }

    #[test]
    fn retired_endpoint_is_rejected() {
        let retired: BTreeSet<usize> = [0].into();
        assert!(matches!(rule_counts_from_route(&[0, 1, 2], &retired), Err(Error::EndpointRetired { uav: 0, .. })));
        let retired: BTreeSet<usize> = [2].into();
        assert!(matches!(rule_counts_from_route(&[0, 1, 2], &retired), Err(Error::EndpointRetired { uav: 2, .. })));
    }

    #[test]
    fn malformed_routes_are_rejected() {
        let none = BTreeSet::new();
        assert!(matches!(rule_counts_from_route(&[3], &none), Err(Error::InvalidRoute { .. })));
        assert!(matches!(rule_counts_from_route(&[1, 2, 1], &none), Err(Error::InvalidRoute { .. })));
    }

    /// Six flows over a 13-node network, five of its relays retired. Two
    /// flows avoid the retired relays entirely.
    #[test]
    fn build_instance_drops_untouched_flows() {
        let flows = vec![
            (0, vec![10, 1, 2, 3, 11]),
            (1, vec![12, 1, 4, 13]),
            (2, vec![14, 3, 4, 15]),
            (3, vec![16, 4, 5, 17]),
            (4, vec![20, 21, 22]),
            (5, vec![23, 24]),
        ];
        let retired: Vec<(usize, f64)> = (1..=5).map(|id| (id, 100.0)).collect();
        let (inst, map) = build_instance(&flows, &retired, RuleTimings::default()).unwrap();
        assert_eq!((inst.n(), inst.m()), (4, 5));
        assert_eq!(map.flows, vec![0, 1, 2, 3]);
        assert_eq!(map.uavs, vec![1, 2, 3, 4, 5]);
        assert_eq!(inst.flows()[0].rule_counts, Some(RuleCounts::new(3, 3, 1)));
        assert_eq!(inst.flows()[0].retired_set, vec![0, 1, 2]);
        assert!(inst.is_dual());
    }

    #[test]
    fn build_instance_edge_cases() {
        let t = RuleTimings::<f64>::default();
        let (inst, _) = build_instance(&[(7, vec![0, 1])], &[(5, 30.0)], t).unwrap();
        assert_eq!(inst.n(), 0);
        let report = compute_energy(&inst, &Schedule::identity(0)).unwrap();
        assert_eq!(report.completion_times, vec![0.0]);
        assert_eq!(report.total_energy, 0.0);

        let (inst, map) = build_instance(&[(9, vec![0, 5, 1])], &[(5, 30.0)], t).unwrap();
        assert_eq!(inst.n(), 1);
        assert_eq!(inst.flows()[0].retired_set, vec![0]);
        assert_eq!(inst.uavs()[0].flow_set, vec![0]);
        assert_eq!(map.flows, vec![9]);

        assert!(matches!(build_instance(&[(0, vec![0, 1])], &[], t), Err(Error::EmptyInstance)));
        assert!(matches!(
            build_instance(&[(0, vec![5, 1])], &[(5, 1.0)], t),
            Err(Error::EndpointRetired { flow: 0, uav: 5 })
        ));
        assert!(build_instance(&[], &[(1, 1.0), (1, 2.0)], t).is_err());
    }

    #[test]
    fn instance_validation() {
        let t = RuleTimings::<f64>::default();
        let ok = FlowSpec::with_time(0, 0.01, vec![0]);
        assert!(ReplacementInstance::new(vec![ok.clone()], vec![1.0], t).is_ok());
        assert!(ReplacementInstance::new(vec![FlowSpec::with_time(1, 0.01, vec![0])], vec![1.0], t).is_err());
        assert!(ReplacementInstance::new(vec![FlowSpec::with_time(0, 0.0, vec![0])], vec![1.0], t).is_err());
        assert!(ReplacementInstance::new(vec![FlowSpec::with_time(0, 0.01, vec![])], vec![1.0], t).is_err());
        assert!(ReplacementInstance::new(vec![FlowSpec::with_time(0, 0.01, vec![1])], vec![1.0], t).is_err());
        assert!(ReplacementInstance::new(vec![ok.clone()], vec![-1.0], t).is_err());
        let mut bad = FlowSpec::from_counts(0, RuleCounts::new(1, 1, 1), vec![0], &t);
        bad.handover_time = 0.5;
        assert!(ReplacementInstance::new(vec![bad], vec![1.0], t).is_err());
    }

    #[test]
    fn schedule_must_be_a_permutation() {
        assert!(Schedule::new(vec![2, 0, 1], 3).is_ok());
        assert!(Schedule::new(vec![0, 0, 1], 3).is_err());
        assert!(Schedule::new(vec![0, 3, 1], 3).is_err());
        assert!(Schedule::new(vec![0, 1], 3).is_err());
        let inst = reference_instance::<f64>();
        assert!(matches!(compute_energy(&inst, &Schedule::identity(3)), Err(Error::InvalidSchedule(_))));
    }

    #[test]
    fn reference_schedules_energy() {
        let inst = reference_instance::<Rational64>();
        let e = |order: Vec<usize>| compute_energy(&inst, &Schedule::new(order, 4).unwrap()).unwrap();
        let first = e(vec![1, 0, 2, 3]);
        assert_eq!(first.total_energy, Rational64::from_integer(50));
        assert_eq!(first.completion_times, vec![ms(70), ms(70), ms(100), ms(130), ms(130)]);
        assert_eq!(e(vec![2, 1, 3, 0]).total_energy, Rational64::from_integer(57));

        let inst = reference_instance::<f64>();
        let r = compute_energy(&inst, &Schedule::new(vec![1, 0, 2, 3], 4).unwrap()).unwrap();
        assert!(r.total_energy.close_to(50.0));
    }

    #[test]
    fn single_flow_energy() {
        let t = RuleTimings::<f64>::default();
        let flows = vec![FlowSpec::from_counts(0, RuleCounts::new(1, 1, 1), vec![0], &t)];
        let inst = ReplacementInstance::new(flows, vec![100.0], t).unwrap();
        let r = compute_energy(&inst, &Schedule::identity(1)).unwrap();
        assert!(r.total_energy.close_to(2.0));
    }

    #[test]
    fn empty_lambda_uav_leaves_at_zero() {
        let t = RuleTimings::<f64>::default();
        let flows = vec![FlowSpec::with_time(0, 0.03, vec![1])];
        let inst = ReplacementInstance::new(flows, vec![500.0, 10.0], t).unwrap();
        let r = compute_energy(&inst, &Schedule::identity(1)).unwrap();
        assert_eq!(r.completion_times[0], 0.0);
        assert!(r.total_energy.close_to(0.3));
    }

    fn arb_instance() -> impl Strategy<Value = ReplacementInstance<Rational64>> {
        (1usize..7, 1usize..6).prop_flat_map(|(n, m)| {
            (
                prop::collection::vec((5i64..=60, prop::collection::btree_set(0..m, 1..=m)), n),
                prop::collection::vec(0i64..=310, m),
            )
                .prop_map(|(flows, powers)| {
                    let flows = flows
                        .into_iter()
                        .enumerate()
                        .map(|(i, (t, d))| FlowSpec::with_time(i, ms(t), d.into_iter().collect()))
                        .collect();
                    let powers = powers.into_iter().map(Rational64::from_integer).collect();
                    ReplacementInstance::new(flows, powers, RuleTimings::default()).unwrap()
                })
        })
    }

    fn arb_instance_and_schedule() -> impl Strategy<Value = (ReplacementInstance<Rational64>, Schedule)> {
        arb_instance().prop_flat_map(|inst| {
            let n = inst.n();
            (Just(inst), Just((0..n).collect::<Vec<_>>()).prop_shuffle())
                .prop_map(move |(inst, order)| (inst, Schedule::new(order, n).unwrap()))
        })
    }

    proptest! {
        #[test]
        fn energy_is_sum_of_power_times_completion((inst, sched) in arb_instance_and_schedule()) {
            let r = compute_energy(&inst, &sched).unwrap();
            let expect: Rational64 = inst.uavs().iter().map(|u| u.hover_power * r.completion_times[u.id]).sum();
            prop_assert_eq!(r.total_energy, expect);
            prop_assert!(r.total_energy >= Rational64::from_integer(0));
            for u in inst.uavs() {
                let last = u.flow_set.iter().map(|&i| r.flow_finish_times[i]).max().unwrap_or_default();
                prop_assert_eq!(r.completion_times[u.id], last);
            }
        }

        #[test]
        fn longer_handover_never_saves_energy(
            (inst, sched) in arb_instance_and_schedule(),
            pick in any::<prop::sample::Index>(),
            extra in 1i64..50,
        ) {
            let base = compute_energy(&inst, &sched).unwrap().total_energy;
            let i = pick.index(inst.n());
            let flows = inst.flows().iter().map(|f| {
                let t = if f.id == i { f.handover_time + ms(extra) } else { f.handover_time };
                FlowSpec::with_time(f.id, t, f.retired_set.clone())
            }).collect();
            let slower = ReplacementInstance::new(flows, inst.hover_powers(), *inst.timings()).unwrap();
            prop_assert!(compute_energy(&slower, &sched).unwrap().total_energy >= base);
        }

        #[test]
        fn zero_power_costs_nothing((inst, sched) in arb_instance_and_schedule()) {
            let idle = inst.with_scaled_powers(Rational64::from_integer(0)).unwrap();
            prop_assert_eq!(compute_energy(&idle, &sched).unwrap().total_energy, Rational64::from_integer(0));
        }

        /// Swapping two flows that both finish before a UAV's last flow does
        /// not move that UAV's completion time.
        #[test]
        fn completion_depends_only_on_prefix_set((inst, sched) in arb_instance_and_schedule(), a in any::<prop::sample::Index>(), b in any::<prop::sample::Index>()) {
            let n = inst.n();
            let (a, b) = (a.index(n), b.index(n));
            let mut order = sched.order().to_vec();
            order.swap(a, b);
            let swapped = Schedule::new(order, n).unwrap();
            let r0 = compute_energy(&inst, &sched).unwrap();
            let r1 = compute_energy(&inst, &swapped).unwrap();
            let hi = a.max(b);
            for u in inst.uavs() {
                let pos_last = u.flow_set.iter().map(|&i| sched.order().iter().position(|&f| f == i).unwrap()).max();
                if let Some(p) = pos_last {
                    if p > hi {
                        prop_assert_eq!(r0.completion_times[u.id], r1.completion_times[u.id]);
                    }
                }
            }
        }

        #[test]
        fn build_instance_is_dual(
            routes in prop::collection::vec(prop::collection::vec(0usize..15, 2..8), 1..10),
            retired in prop::collection::btree_set(0usize..15, 0..6),
        ) {
            let flows: Vec<(usize, Vec<usize>)> = routes.into_iter().enumerate().filter_map(|(id, r)| {
                let mut seen = BTreeSet::new();
                let r: Vec<usize> = r.into_iter().filter(|x| seen.insert(*x)).collect();
                let ok = r.len() >= 2 && !retired.contains(&r[0]) && !retired.contains(r.last().unwrap());
                ok.then_some((id, r))
            }).collect();
            let uavs: Vec<(usize, f64)> = retired.iter().map(|&u| (u, 10.0 + u as f64)).collect();
            match build_instance(&flows, &uavs, RuleTimings::default()) {
                Ok((inst, map)) => {
                    prop_assert!(inst.is_dual());
                    for (i, f) in inst.flows().iter().enumerate() {
                        let route = &flows.iter().find(|(id, _)| *id == map.flows[i]).unwrap().1;
                        let expect: BTreeSet<usize> = route.iter().filter(|x| retired.contains(x)).copied().collect();
                        let got: BTreeSet<usize> = f.retired_set.iter().map(|&j| map.uavs[j]).collect();
                        prop_assert_eq!(got, expect);
                    }
                }
                Err(Error::EmptyInstance) => prop_assert!(uavs.is_empty()),
                Err(e) => prop_assert!(false, "unexpected error {e}"),
            }
        }
    }
}
