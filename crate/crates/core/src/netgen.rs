//! Random software-defined UAV networks.
//!
//! UAVs are dropped uniformly over a square at a common altitude. Two UAVs
//! share a line-of-sight link when the free-space SNR between them reaches
//! the threshold. Flows follow minimum-hop routes between live UAVs.

use std::collections::{BTreeSet, VecDeque};

use num_traits::{Float, FloatConst};
use rand::seq::index;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Attempts per flow before a scenario is declared unroutable.
pub const MAX_ROUTE_ATTEMPTS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioParams<F = f64> {
    /// Carrier frequency, Hz.
    pub carrier_freq: F,
    /// m/s
    pub light_speed: F,
    /// Transmit power, W.
    pub tx_power: F,
    /// Noise power, W.
    pub noise_power: F,
    /// Minimum SNR for a link, dB.
    pub snr_threshold_db: F,
}

impl<F: Float> Default for RadioParams<F> {
    fn default() -> Self {
        let c = |v: f64| F::from(v).unwrap();
        Self {
            carrier_freq: c(3e9),
            light_speed: c(3e8),
            tx_power: c(1.0),
            noise_power: c(1e-16),
            snr_threshold_db: c(85.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HoverParams<F = f64> {
    /// m/s²
    pub gravity: F,
    /// Propeller radius, m.
    pub prop_radius: F,
    pub num_props: F,
    /// kg/m³
    pub air_density: F,
}

impl<F: Float> Default for HoverParams<F> {
    fn default() -> Self {
        let c = |v: f64| F::from(v).unwrap();
        Self { gravity: c(9.8), prop_radius: c(0.2), num_props: c(4.0), air_density: c(1.225) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkParams {
    pub num_uavs: usize,
    /// Side of the square deployment area, m.
    pub area_side: f64,
    /// Shared flight altitude, m. Does not affect inter-UAV distances.
    pub altitude: f64,
    /// Masses drawn uniformly, kg.
    pub mass_choices: Vec<f64>,
    pub radio: RadioParams,
    pub hover: HoverParams,
}

impl Default for NetworkParams {
    fn default() -> Self {
        Self {
            num_uavs: 40,
            area_side: 150.0,
            altitude: 70.0,
            mass_choices: vec![1.0, 2.0, 3.0, 4.0, 5.0],
            radio: RadioParams::default(),
            hover: HoverParams::default(),
        }
    }
}

impl NetworkParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::ConfigInvalid(msg));
        if self.num_uavs < 2 {
            return bad(format!("num_uavs must be at least 2, got {}", self.num_uavs));
        }
        if !(self.area_side.is_finite() && self.area_side > 0.0) {
            return bad(format!("area_side must be positive, got {}", self.area_side));
        }
        if !self.altitude.is_finite() {
            return bad("altitude must be finite".into());
        }
        if self.mass_choices.is_empty() || self.mass_choices.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return bad("mass_choices must be a non-empty list of non-negative masses".into());
        }
        let r = &self.radio;
        for (name, v) in [
            ("carrier_freq", r.carrier_freq),
            ("light_speed", r.light_speed),
            ("tx_power", r.tx_power),
            ("noise_power", r.noise_power),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("radio.{name} must be positive, got {v}"));
            }
        }
        // An infinite threshold is allowed and simply disables every link.
        if r.snr_threshold_db.is_nan() {
            return bad("radio.snr_threshold_db is NaN".into());
        }
        let h = &self.hover;
        for (name, v) in [
            ("gravity", h.gravity),
            ("prop_radius", h.prop_radius),
            ("num_props", h.num_props),
            ("air_density", h.air_density),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("hover.{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }
}

/// Free-space path loss in dB at distance `d` metres.
pub fn path_loss<F: Float + FloatConst>(d: F, radio: &RadioParams<F>) -> Result<F> {
    if d.is_nan() || d <= F::zero() {
        return Err(Error::NonPositiveDistance(d.to_f64().unwrap_or(f64::NAN)));
    }
    let four = F::from(4.0).unwrap();
    let twenty = F::from(20.0).unwrap();
    Ok(twenty * (four * F::PI() * radio.carrier_freq * d / radio.light_speed).log10())
}

/// Received SNR in dB over a line-of-sight link of length `d`.
pub fn snr_at_distance<F: Float + FloatConst>(d: F, radio: &RadioParams<F>) -> Result<F> {
    let ten = F::from(10.0).unwrap();
    Ok(ten * radio.tx_power.log10() - path_loss(d, radio)? - ten * radio.noise_power.log10())
}

/// Largest distance at which the SNR still meets the threshold.
pub fn link_radius<F: Float + FloatConst>(radio: &RadioParams<F>) -> F {
    let ten = F::from(10.0).unwrap();
    let twenty = F::from(20.0).unwrap();
    let budget_db = ten * radio.tx_power.log10() - ten * radio.noise_power.log10() - radio.snr_threshold_db;
    let four = F::from(4.0).unwrap();
    radio.light_speed / (four * F::PI() * radio.carrier_freq) * ten.powf(budget_db / twenty)
}

/// Power needed to hover a UAV of the given mass, in watts.
pub fn hover_power<F: Float + FloatConst>(mass: F, hover: &HoverParams<F>) -> F {
    let two = F::from(2.0).unwrap();
    let weight = mass * hover.gravity;
    let disk = two * F::PI() * hover.prop_radius * hover.prop_radius * hover.num_props * hover.air_density;
    (weight * weight * weight / disk).sqrt()
}

/// A placed network with its radio link graph.
#[derive(Clone, Debug, PartialEq)]
pub struct UavNetwork {
    positions: Vec<[f64; 2]>,
    altitude: f64,
    masses: Vec<f64>,
    hover_powers: Vec<f64>,
    /// Sorted neighbour lists.
    links: Vec<Vec<usize>>,
}

impl UavNetwork {
    /// Assembles a network from placements, deriving powers and links.
    pub fn from_placement(positions: Vec<[f64; 2]>, masses: Vec<f64>, params: &NetworkParams) -> Result<Self> {
        if positions.len() != masses.len() {
            return Err(Error::DimensionMismatch { expected: positions.len(), found: masses.len() });
        }
        if positions.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::ConfigInvalid("UAV coordinates must be finite".into()));
        }
        if masses.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::ConfigInvalid("UAV masses must be non-negative".into()));
        }
        let hover_powers = masses.iter().map(|&m| hover_power(m, &params.hover)).collect();
        let n = positions.len();
        let mut links = vec![Vec::new(); n];
        for u in 0..n {
            for v in (u + 1)..n {
                let d = planar_distance(positions[u], positions[v]);
                // Co-located UAVs have no finite path loss; treat them as linked.
                let linked = d == 0.0 || snr_at_distance(d, &params.radio)? >= params.radio.snr_threshold_db;
                if linked {
                    links[u].push(v);
                    links[v].push(u);
                }
            }
        }
        Ok(Self { positions, altitude: params.altitude, masses, hover_powers, links })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[[f64; 2]] {
        &self.positions
    }

    pub fn altitude(&self) -> f64 {
        self.altitude
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn hover_powers(&self) -> &[f64] {
        &self.hover_powers
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.links[u]
    }

    pub fn has_link(&self, u: usize, v: usize) -> bool {
        self.links[u].binary_search(&v).is_ok()
    }

    pub fn link_count(&self) -> usize {
        self.links.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn distance(&self, u: usize, v: usize) -> f64 {
        planar_distance(self.positions[u], self.positions[v])
    }
}

fn planar_distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// SNR between two UAVs of `net`, in dB.
pub fn snr(u: usize, v: usize, net: &UavNetwork, radio: &RadioParams) -> Result<f64> {
    snr_at_distance(net.distance(u, v), radio)
}

/// Places `params.num_uavs` UAVs uniformly and draws their masses.
pub fn generate_network(params: &NetworkParams, seed: u64) -> Result<UavNetwork> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = params.area_side;
    let positions = (0..params.num_uavs).map(|_| [rng.gen_range(0.0..side), rng.gen_range(0.0..side)]).collect();
    let masses =
        (0..params.num_uavs).map(|_| params.mass_choices[rng.gen_range(0..params.mass_choices.len())]).collect();
    UavNetwork::from_placement(positions, masses, params)
}

/// Minimum-hop route from `src` to `dst`.
///
/// When several shortest routes exist, each node's predecessor is the
/// lowest-id neighbour one hop closer to `src`.
pub fn shortest_route(net: &UavNetwork, src: usize, dst: usize) -> Result<Vec<usize>> {
    let n = net.len();
    if src >= n || dst >= n || src == dst {
        return Err(Error::InvalidRoute {
            flow: 0,
            reason: format!("endpoints {src} and {dst} must be distinct UAVs of a {n}-UAV network"),
        });
    }
    let mut dist = vec![usize::MAX; n];
    dist[src] = 0;
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        if u == dst {
            break;
        }
        for &v in net.neighbors(u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    if dist[dst] == usize::MAX {
        return Err(Error::Unreachable { src, dst });
    }
    let mut route = vec![dst];
    let mut cur = dst;
    while cur != src {
        // neighbour lists are sorted, so the first match has the lowest id
        cur = *net
            .neighbors(cur)
            .iter()
            .find(|&&v| dist[v] < dist[cur] && dist[v] + 1 == dist[cur])
            .expect("a BFS layer always has a predecessor");
        route.push(cur);
    }
    route.reverse();
    Ok(route)
}

/// Retired UAVs and routed flows for one Monte Carlo draw.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    /// Sorted.
    pub retired: Vec<usize>,
    pub flows: Vec<(usize, Vec<usize>)>,
}

/// Picks `m` UAVs to retire, uniformly without replacement. Sorted.
pub fn sample_retired<R: Rng>(net: &UavNetwork, m: usize, rng: &mut R) -> Result<Vec<usize>> {
    if m >= net.len() {
        return Err(Error::ConfigInvalid(format!("cannot retire {m} of {} UAVs", net.len())));
    }
    let mut picked = index::sample(rng, net.len(), m).into_vec();
    picked.sort_unstable();
    Ok(picked)
}

/// Draws `n_flows` flows between distinct live UAVs, resampling pairs that
/// have no route.
pub fn sample_flows<R: Rng>(
    net: &UavNetwork,
    retired: &[usize],
    n_flows: usize,
    rng: &mut R,
) -> Result<Vec<(usize, Vec<usize>)>> {
    let retired: BTreeSet<usize> = retired.iter().copied().collect();
    let live: Vec<usize> = (0..net.len()).filter(|u| !retired.contains(u)).collect();
    if n_flows > 0 && live.len() < 2 {
        return Err(Error::SamplingExhausted { attempts: 0 });
    }
    let mut flows = Vec::with_capacity(n_flows);
    for id in 0..n_flows {
        let mut route = None;
        for _ in 0..MAX_ROUTE_ATTEMPTS {
            let pair = index::sample(rng, live.len(), 2);
            let (src, dst) = (live[pair.index(0)], live[pair.index(1)]);
            match shortest_route(net, src, dst) {
                Ok(r) => {
                    route = Some(r);
                    break;
                }
                Err(Error::Unreachable { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        let route = route.ok_or(Error::SamplingExhausted { attempts: MAX_ROUTE_ATTEMPTS })?;
        flows.push((id, route));
    }
    Ok(flows)
}

/// Retired set first, then flows among the remaining UAVs.
pub fn sample_scenario(net: &UavNetwork, n_flows: usize, n_retired: usize, seed: u64) -> Result<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let retired = sample_retired(net, n_retired, &mut rng)?;
    let flows = sample_flows(net, &retired, n_flows, &mut rng)?;
    Ok(Scenario { retired, flows })
}
