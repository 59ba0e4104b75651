//! JSON file formats: placed networks and abstract instances.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_instance, FlowSpec, IdMap, ReplacementInstance, RuleCounts, RuleTimings};
use crate::netgen::{NetworkParams, Scenario, UavNetwork};
use crate::scalar::Scalar;

/// Rule latencies as written in files, milliseconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingsMs {
    pub tau_del_ms: f64,
    pub tau_ins_ms: f64,
    pub tau_mod_ms: f64,
}

impl Default for TimingsMs {
    fn default() -> Self {
        Self { tau_del_ms: 5.0, tau_ins_ms: 5.0, tau_mod_ms: 10.0 }
    }
}

impl TimingsMs {
    pub fn to_timings<S: Scalar>(&self) -> Result<RuleTimings<S>> {
        RuleTimings::from_millis(self.tau_del_ms, self.tau_ins_ms, self.tau_mod_ms)
    }

    pub fn from_timings<S: Scalar>(t: &RuleTimings<S>) -> Self {
        let [tau_del_ms, tau_ins_ms, tau_mod_ms] = t.millis();
        Self { tau_del_ms, tau_ins_ms, tau_mod_ms }
    }

    fn time_ms(&self, c: RuleCounts) -> f64 {
        c.del as f64 * self.tau_del_ms + c.ins as f64 * self.tau_ins_ms + c.modify as f64 * self.tau_mod_ms
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowEntry {
    pub id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule_counts: Option<RuleCounts>,
    /// Retired UAV ids the flow crosses.
    pub delta: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UavEntry {
    pub id: usize,
    pub p_watts: f64,
}

/// Abstract instance document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    #[serde(default)]
    pub timings: TimingsMs,
    pub flows: Vec<FlowEntry>,
    pub uavs: Vec<UavEntry>,
    /// Original flow and UAV ids when the instance came from a network.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id_map: Option<IdMap>,
}

impl InstanceFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance serializes");
        s.push('\n');
        s
    }

    pub fn from_instance<S: Scalar>(instance: &ReplacementInstance<S>, id_map: Option<IdMap>) -> Self {
        let timings = TimingsMs::from_timings(instance.timings());
        let flows = instance
            .flows()
            .iter()
            .map(|f| FlowEntry {
                id: f.id,
                t_ms: Some(match f.rule_counts {
                    Some(c) => timings.time_ms(c),
                    None => f.handover_time.as_f64() * 1000.0,
                }),
                rule_counts: f.rule_counts,
                delta: f.retired_set.clone(),
            })
            .collect();
        let uavs = instance.uavs().iter().map(|u| UavEntry { id: u.id, p_watts: u.hover_power.as_f64() }).collect();
        Self { timings, flows, uavs, id_map }
    }

    /// Validates the document and builds the instance. Entries may appear in
    /// any order but ids must cover `0..n` and `0..m` exactly.
    pub fn to_instance<S: Scalar>(&self) -> Result<ReplacementInstance<S>> {
        let timings: RuleTimings<S> = self.timings.to_timings()?;
        let m = self.uavs.len();
        let mut powers = vec![None; m];
        for u in &self.uavs {
            let slot = powers
                .get_mut(u.id)
                .ok_or_else(|| Error::InvalidInstance(format!("UAV id {} out of range 0..{m}", u.id)))?;
            if slot.is_some() {
                return Err(Error::InvalidInstance(format!("UAV id {} repeated", u.id)));
            }
            let p = S::from_decimal(u.p_watts)
                .ok_or_else(|| Error::InvalidInstance(format!("UAV {} power is not finite", u.id)))?;
            *slot = Some(p);
        }
        let powers: Vec<S> = powers.into_iter().map(|p| p.expect("every slot filled")).collect();

        let n = self.flows.len();
        let mut flows: Vec<Option<FlowSpec<S>>> = vec![None; n];
        for f in &self.flows {
            if f.id >= n {
                return Err(Error::InvalidInstance(format!("flow id {} out of range 0..{n}", f.id)));
            }
            if flows[f.id].is_some() {
                return Err(Error::InvalidInstance(format!("flow id {} repeated", f.id)));
            }
            let unique: BTreeSet<usize> = f.delta.iter().copied().collect();
            if unique.len() != f.delta.len() {
                return Err(Error::InvalidInstance(format!("flow {} lists a UAV twice", f.id)));
            }
            let spec = match (f.rule_counts, f.t_ms) {
                (Some(c), t) => {
                    if let Some(t) = t {
                        let expect = self.timings.time_ms(c);
                        if (t - expect).abs() > 1e-9 * expect.abs().max(1.0) {
                            return Err(Error::InvalidInstance(format!(
                                "flow {}: t_ms = {t} but rule counts give {expect}",
                                f.id
                            )));
                        }
                    }
                    FlowSpec::from_counts(f.id, c, f.delta.clone(), &timings)
                }
                (None, Some(t)) => {
                    let t = S::from_millis(t)
                        .ok_or_else(|| Error::InvalidInstance(format!("flow {}: t_ms is not finite", f.id)))?;
                    FlowSpec::with_time(f.id, t, f.delta.clone())
                }
                (None, None) => {
                    return Err(Error::InvalidInstance(format!("flow {} needs `t_ms` or `rule_counts`", f.id)))
                }
            };
            flows[f.id] = Some(spec);
        }
        let flows = flows.into_iter().map(|f| f.expect("every slot filled")).collect();
        ReplacementInstance::new(flows, powers, timings)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UavPlacement {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub mass_kg: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowRoute {
    pub id: usize,
    pub route: Vec<usize>,
}

/// Placed network, optionally with a retired set and routed flows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    #[serde(default)]
    pub params: NetworkParams,
    pub uavs: Vec<UavPlacement>,
    #[serde(default)]
    pub retired: Vec<usize>,
    #[serde(default)]
    pub flows: Vec<FlowRoute>,
    /// Rule latencies used when converting to an instance.
    #[serde(default)]
    pub timings: TimingsMs,
}

impl NetworkFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("network serializes");
        s.push('\n');
        s
    }

    pub fn from_network(params: &NetworkParams, net: &UavNetwork, scenario: Option<&Scenario>) -> Self {
        let uavs = net
            .positions()
            .iter()
            .zip(net.masses())
            .enumerate()
            .map(|(id, (p, &mass_kg))| UavPlacement { id, x: p[0], y: p[1], mass_kg })
            .collect();
        let (retired, flows) = match scenario {
            Some(s) => {
                (s.retired.clone(), s.flows.iter().map(|(id, r)| FlowRoute { id: *id, route: r.clone() }).collect())
            }
            None => (Vec::new(), Vec::new()),
        };
        Self { params: params.clone(), uavs, retired, flows, timings: TimingsMs::default() }
    }

    /// Rebuilds the network, recomputing hover powers and links.
    pub fn to_network(&self) -> Result<UavNetwork> {
        self.params.validate()?;
        if self.uavs.len() != self.params.num_uavs {
            return Err(Error::ConfigInvalid(format!(
                "params.num_uavs = {} but {} UAVs are listed",
                self.params.num_uavs,
                self.uavs.len()
            )));
        }
        let mut uavs: Vec<&UavPlacement> = self.uavs.iter().collect();
        uavs.sort_by_key(|u| u.id);
        if uavs.iter().enumerate().any(|(i, u)| u.id != i) {
            return Err(Error::ConfigInvalid("UAV ids must be 0..num_uavs without repeats".into()));
        }
        let positions = uavs.iter().map(|u| [u.x, u.y]).collect();
        let masses = uavs.iter().map(|u| u.mass_kg).collect();
        UavNetwork::from_placement(positions, masses, &self.params)
    }

    /// Converts the stored retired set and flows into an abstract instance.
    pub fn to_instance<S: Scalar>(&self) -> Result<(ReplacementInstance<S>, IdMap)> {
        let net = self.to_network()?;
        let mut retired = Vec::with_capacity(self.retired.len());
        for &u in &self.retired {
            if u >= net.len() {
                return Err(Error::ConfigInvalid(format!("retired UAV {u} does not exist")));
            }
            let p = S::from_decimal(net.hover_powers()[u])
                .ok_or_else(|| Error::ConfigInvalid(format!("UAV {u} hover power is not finite")))?;
            retired.push((u, p));
        }
        let mut flows = Vec::with_capacity(self.flows.len());
        for f in &self.flows {
            if let Some(bad) = f.route.iter().find(|&&u| u >= net.len()) {
                return Err(Error::InvalidRoute { flow: f.id, reason: format!("UAV {bad} does not exist") });
            }
            if let Some(w) = f.route.windows(2).find(|w| !net.has_link(w[0], w[1])) {
                return Err(Error::InvalidRoute {
                    flow: f.id,
                    reason: format!("no link between UAV {} and UAV {}", w[0], w[1]),
                });
            }
            flows.push((f.id, f.route.clone()));
        }
        build_instance(&flows, &retired, self.timings.to_timings()?)
    }
}
