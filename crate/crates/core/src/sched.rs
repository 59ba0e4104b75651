//! Handover schedulers.
//!
//! * [`heuristic_schedule`]: static score ordering, `O(n log n + Σ|Δ_i| + Σ|Λ_j|)`.
//! * [`random_schedule`]: uniform permutation baseline.
//! * [`exact_schedule_dp`]: optimal order by dynamic programming over flow subsets.
//! * [`brute_force_schedule`]: enumerates every permutation; a test oracle.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{compute_energy, ReplacementInstance, Schedule};
use crate::scalar::Scalar;

/// Default flow cap for the subset DP (2^22 states).
pub const DEFAULT_EXACT_CAP: usize = 22;
/// Flow cap for permutation enumeration.
pub const BRUTE_FORCE_CAP: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Heuristic,
    Random,
    ExactDp,
    BruteForce,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Heuristic => "heuristic",
            Method::Random => "random",
            Method::ExactDp => "exact_dp",
            Method::BruteForce => "brute_force",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heuristic" => Ok(Method::Heuristic),
            "random" => Ok(Method::Random),
            "exact_dp" | "exact" => Ok(Method::ExactDp),
            "brute_force" | "bruteforce" => Ok(Method::BruteForce),
            other => Err(Error::ConfigInvalid(format!("unknown method `{other}`"))),
        }
    }
}

/// A schedule together with its energy and the time spent finding it.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverResult<S> {
    pub schedule: Schedule,
    /// Joules, always `compute_energy(instance, schedule)`.
    pub energy: S,
    pub method: Method,
    /// Seconds of wall time spent inside the scheduler.
    pub wall_time: f64,
}

impl<S: Scalar> SolverResult<S> {
    pub fn new(instance: &ReplacementInstance<S>, schedule: Schedule, method: Method, wall_time: f64) -> Result<Self> {
        let energy = compute_energy(instance, &schedule)?.total_energy;
        Ok(Self { schedule, energy, method, wall_time })
    }
}

/// `H_j` and `S_i` for an instance.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreTable<S> {
    /// Total handover time of the flows crossing each UAV.
    pub h: Vec<S>,
    /// Per-flow score, J/s².
    pub s: Vec<S>,
}

impl<S: Scalar> ScoreTable<S> {
    pub fn new(instance: &ReplacementInstance<S>) -> Self {
        let times = instance.handover_times();
        let h: Vec<S> = instance.uavs().iter().map(|u| u.flow_set.iter().map(|&i| times[i]).sum()).collect();
        let s = instance
            .flows()
            .iter()
            .map(|f| f.retired_set.iter().map(|&j| instance.uavs()[j].hover_power / h[j]).sum())
            .collect();
        Self { h, s }
    }

    /// Flow ids by descending score, lower id first on ties.
    pub fn order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.s.len()).collect();
        order.sort_by(|&a, &b| self.s[b].partial_cmp(&self.s[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
        order
    }
}

/// Hands flows over in descending score order.
///
/// A flow scores high when it crosses power-hungry UAVs that can be freed
/// quickly.
pub fn heuristic_schedule<S: Scalar>(instance: &ReplacementInstance<S>) -> Result<SolverResult<S>> {
    let start = Instant::now();
    let order = ScoreTable::new(instance).order();
    let elapsed = start.elapsed().as_secs_f64();
    let schedule = Schedule::new(order, instance.n())?;
    SolverResult::new(instance, schedule, Method::Heuristic, elapsed)
}

/// Uniformly random handover order.
pub fn random_schedule<S: Scalar>(instance: &ReplacementInstance<S>, seed: u64) -> Result<SolverResult<S>> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..instance.n()).collect();
    order.shuffle(&mut rng);
    let elapsed = start.elapsed().as_secs_f64();
    SolverResult::new(instance, Schedule::new(order, instance.n())?, Method::Random, elapsed)
}

/// Optimal schedule with the default size cap.
pub fn exact_schedule_dp<S: Scalar>(instance: &ReplacementInstance<S>) -> Result<SolverResult<S>> {
    exact_schedule_dp_capped(instance, DEFAULT_EXACT_CAP)
}

/// Optimal schedule by dynamic programming over the set of handed-over flows.
///
/// Once the set `X` of finished flows is fixed, the clock reads
/// `Σ_{i∈X} T_i` regardless of their order, so a UAV released by the last
/// flow added to `X` costs `P_j · Σ_{i∈X} T_i`. The cheapest way to reach `X`
/// therefore only depends on `X`:
///
/// `best(X) = min_{f∈X} best(X∖{f}) + elapsed(X) · Σ{P_j : f ∈ Λ_j ⊆ X}`.
///
/// Among equally cheap candidates (up to [`Scalar::close_to`]) the lowest
/// flow id is handed over last, so ties resolve identically for floats and
/// rationals.
pub fn exact_schedule_dp_capped<S: Scalar>(instance: &ReplacementInstance<S>, cap: usize) -> Result<SolverResult<S>> {
    let n = instance.n();
    if n > cap || n >= usize::BITS as usize - 1 {
        return Err(Error::InstanceTooLarge { n, cap });
    }
    let start = Instant::now();
    let times = instance.handover_times();

    // For each flow, the UAVs it crosses as (mask of Λ_j, P_j).
    let releases: Vec<Vec<(usize, S)>> = instance
        .flows()
        .iter()
        .map(|f| {
            f.retired_set
                .iter()
                .map(|&j| {
                    let u = &instance.uavs()[j];
                    (u.flow_set.iter().fold(0usize, |acc, &i| acc | 1 << i), u.hover_power)
                })
                .collect()
        })
        .collect();

    let states = 1usize << n;
    let mut best = vec![S::zero(); states];
    let mut elapsed = vec![S::zero(); states];
    let mut last = vec![0u8; states];
    for set in 1..states {
        let low = set.trailing_zeros() as usize;
        elapsed[set] = elapsed[set & (set - 1)] + times[low];
        let clock = elapsed[set];
        let mut champion: Option<(S, usize)> = None;
        let mut rest = set;
        while rest != 0 {
            let f = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let released: S = releases[f].iter().filter(|(mask, _)| mask & !set == 0).map(|&(_, p)| p).sum();
            let cost = best[set ^ (1 << f)] + clock * released;
            if champion.is_none_or(|(c, _)| cost < c && !cost.close_to(c)) {
                champion = Some((cost, f));
            }
        }
        let (cost, f) = champion.expect("non-empty set");
        best[set] = cost;
        last[set] = f as u8;
    }

    let mut order = Vec::with_capacity(n);
    let mut set = states - 1;
    while set != 0 {
        let f = last[set] as usize;
        order.push(f);
        set ^= 1 << f;
    }
    order.reverse();
    let wall = start.elapsed().as_secs_f64();
    SolverResult::new(instance, Schedule::new(order, n)?, Method::ExactDp, wall)
}

/// Minimum over all `n!` orders; the lexicographically smallest minimiser wins.
pub fn brute_force_schedule<S: Scalar>(instance: &ReplacementInstance<S>) -> Result<SolverResult<S>> {
    let n = instance.n();
    if n > BRUTE_FORCE_CAP {
        return Err(Error::InstanceTooLarge { n, cap: BRUTE_FORCE_CAP });
    }
    let start = Instant::now();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best: Option<(S, Vec<usize>)> = None;
    loop {
        let e = compute_energy(instance, &Schedule::new(perm.clone(), n)?)?.total_energy;
        if best.as_ref().is_none_or(|(b, _)| e < *b) {
            best = Some((e, perm.clone()));
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    let (_, order) = best.expect("at least one permutation");
    let wall = start.elapsed().as_secs_f64();
    SolverResult::new(instance, Schedule::new(order, n)?, Method::BruteForce, wall)
}

/// Advances to the next lexicographic permutation; false after the last one.
pub fn next_permutation<T: Ord>(v: &mut [T]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{reference_instance, FlowSpec, RuleTimings};
    use num_rational::Rational64;
    use proptest::prelude::*;

    type Q = Rational64;

    fn q(v: i64) -> Q {
        Q::from_integer(v)
    }

    fn ms(v: i64) -> Q {
        Q::new(v, 1000)
    }

    #[test]
    fn permutation_enumeration_counts() {
        let mut v = vec![0, 1, 2, 3];
        let mut count = 1;
        while next_permutation(&mut v) {
            count += 1;
        }
        assert_eq!(count, 24);
        assert_eq!(v, vec![3, 2, 1, 0]);
        assert!(!next_permutation(&mut Vec::<u8>::new()));
    }

    #[test]
    fn reference_scores() {
        let table = ScoreTable::new(&reference_instance::<f64>());
        let expect_h = [0.070, 0.040, 0.070, 0.090, 0.030];
        for (h, e) in table.h.iter().zip(expect_h) {
            assert!((h - e).abs() < 1e-12);
        }
        assert!((table.s[0] - 5357.142857).abs() < 1e-3);
        assert!((table.s[3] - 4444.444444).abs() < 1e-3);
        assert!((table.s[1] - 2539.682540).abs() < 1e-3);
        assert!((table.s[2] - 2539.682540).abs() < 1e-3);

        let exact = ScoreTable::new(&reference_instance::<Q>());
        assert_eq!(exact.s[1], exact.s[2]);
        assert_eq!(exact.s[0], Q::new(37500, 7));
        assert_eq!(exact.order(), vec![0, 3, 1, 2]);
    }

    #[test]
    fn heuristic_on_reference() {
        let r = heuristic_schedule(&reference_instance::<Q>()).unwrap();
        assert_eq!(r.energy, q(47));
        assert_eq!(r.method, Method::Heuristic);
        let rf = heuristic_schedule(&reference_instance::<f64>()).unwrap();
        assert!(rf.energy.close_to(47.0));
    }

    #[test]
    fn heuristic_ties_keep_id_order() {
        let flows = (0..5).map(|i| FlowSpec::with_time(i, ms(20), vec![0, 1])).collect();
        let inst = ReplacementInstance::new(flows, vec![q(50), q(70)], RuleTimings::default()).unwrap();
        assert_eq!(heuristic_schedule(&inst).unwrap().schedule.order(), &[0, 1, 2, 3, 4]);
    }

    #[test]
    fn exact_on_reference() {
        let dp = exact_schedule_dp(&reference_instance::<Q>()).unwrap();
        assert_eq!(dp.energy, q(46));
        assert_eq!(dp.schedule.order(), &[3, 0, 2, 1]);
        // (3,0,1,2) ties at 46 J and is lexicographically first
        let bf = brute_force_schedule(&reference_instance::<Q>()).unwrap();
        assert_eq!(bf.energy, q(46));
        assert_eq!(bf.schedule.order(), &[3, 0, 1, 2]);
        let rf = exact_schedule_dp(&reference_instance::<f64>()).unwrap();
        assert!(rf.energy.close_to(46.0));
        assert_eq!(rf.schedule.order(), &[3, 0, 2, 1]);
    }

    #[test]
    fn single_flow() {
        let flows = vec![FlowSpec::with_time(0, ms(25), vec![0, 2])];
        let inst = ReplacementInstance::new(flows, vec![q(10), q(99), q(30)], RuleTimings::default()).unwrap();
        let r = exact_schedule_dp(&inst).unwrap();
        assert_eq!(r.schedule.order(), &[0]);
        assert_eq!(r.energy, ms(25) * q(40));
        assert_eq!(random_schedule(&inst, 3).unwrap().schedule.order(), &[0]);
    }

    #[test]
    fn empty_instance_schedules() {
        let inst = ReplacementInstance::<Q>::new(vec![], vec![q(10)], RuleTimings::default()).unwrap();
        for r in [
            brute_force_schedule(&inst).unwrap(),
            exact_schedule_dp(&inst).unwrap(),
            heuristic_schedule(&inst).unwrap(),
        ] {
            assert!(r.schedule.is_empty());
            assert_eq!(r.energy, q(0));
        }
    }

    #[test]
    fn heavier_uav_first() {
        let flows = vec![FlowSpec::with_time(0, ms(30), vec![0]), FlowSpec::with_time(1, ms(30), vec![1])];
        let inst = ReplacementInstance::new(flows, vec![q(50), q(200)], RuleTimings::default()).unwrap();
        // order (0,1): 50·0.03 + 200·0.06 = 13.5 J; order (1,0): 200·0.03 + 50·0.06 = 9 J
        let r = brute_force_schedule(&inst).unwrap();
        assert_eq!(r.schedule.order(), &[1, 0]);
        assert_eq!(r.energy, Q::new(9, 1));
    }

    #[test]
    fn size_caps() {
        let flows = (0..9).map(|i| FlowSpec::with_time(i, ms(10), vec![0])).collect();
        let inst = ReplacementInstance::new(flows, vec![q(1)], RuleTimings::default()).unwrap();
        assert!(matches!(brute_force_schedule(&inst), Err(Error::InstanceTooLarge { n: 9, cap: 8 })));
        assert!(matches!(exact_schedule_dp_capped(&inst, 5), Err(Error::InstanceTooLarge { n: 9, cap: 5 })));
        assert!(exact_schedule_dp(&inst).is_ok());
    }

    #[test]
    fn random_is_reproducible_and_uniform() {
        let flows = (0..3).map(|i| FlowSpec::with_time(i, 0.01, vec![0])).collect();
        let inst = ReplacementInstance::new(flows, vec![1.0f64], RuleTimings::default()).unwrap();
        assert_eq!(random_schedule(&inst, 42).unwrap().schedule, random_schedule(&inst, 42).unwrap().schedule);
        let mut counts = std::collections::BTreeMap::new();
        let draws = 10_000;
        for seed in 0..draws {
            *counts.entry(random_schedule(&inst, seed).unwrap().schedule.into_order()).or_insert(0) += 1;
        }
        assert_eq!(counts.len(), 6);
        for c in counts.values() {
            let freq = *c as f64 / draws as f64;
            assert!((freq - 1.0 / 6.0).abs() < 0.02, "frequency {freq}");
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in [Method::Heuristic, Method::Random, Method::ExactDp, Method::BruteForce] {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert_eq!("exact".parse::<Method>().unwrap(), Method::ExactDp);
        assert!("annealing".parse::<Method>().is_err());
    }

    fn arb_instance(max_n: usize) -> impl Strategy<Value = ReplacementInstance<Q>> {
        (1..=max_n, 1usize..=6).prop_flat_map(|(n, m)| {
            (
                prop::collection::vec((5i64..=60, prop::collection::btree_set(0..m, 1..=m)), n),
                prop::collection::vec(20i64..=310, m),
            )
                .prop_map(|(flows, powers)| {
                    let flows = flows
                        .into_iter()
                        .enumerate()
                        .map(|(i, (t, d))| FlowSpec::with_time(i, ms(t), d.into_iter().collect()))
                        .collect();
                    ReplacementInstance::new(flows, powers.into_iter().map(q).collect(), RuleTimings::default())
                        .unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn dp_matches_brute_force(inst in arb_instance(7)) {
            let dp = exact_schedule_dp(&inst).unwrap();
            let bf = brute_force_schedule(&inst).unwrap();
            prop_assert_eq!(dp.energy, bf.energy);
        }

        #[test]
        fn heuristic_never_beats_exact(inst in arb_instance(8)) {
            let h = heuristic_schedule(&inst).unwrap();
            let e = exact_schedule_dp(&inst).unwrap();
            prop_assert!(h.energy >= e.energy);
            prop_assert!(e.energy >= q(0));
        }

        #[test]
        fn heuristic_order_is_scale_invariant(inst in arb_instance(8), c in 1i64..1000, d in 1i64..1000) {
            let base = heuristic_schedule(&inst).unwrap().schedule;
            let factor = Q::new(c, d);
            let powered = heuristic_schedule(&inst.with_scaled_powers(factor).unwrap()).unwrap().schedule;
            let timed = heuristic_schedule(&inst.with_scaled_times(factor).unwrap()).unwrap().schedule;
            prop_assert_eq!(&base, &powered);
            prop_assert_eq!(&base, &timed);
        }

        #[test]
        fn stored_energy_is_reevaluated(inst in arb_instance(7), seed in any::<u64>()) {
            for r in [
                heuristic_schedule(&inst).unwrap(),
                random_schedule(&inst, seed).unwrap(),
                exact_schedule_dp(&inst).unwrap(),
                brute_force_schedule(&inst).unwrap(),
            ] {
                prop_assert_eq!(r.energy, compute_energy(&inst, &r.schedule).unwrap().total_energy);
            }
        }
    }
}
