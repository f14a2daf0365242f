//! Generative process and the agents' generative model.
//!
//! The process is deterministic: kinematics advance by the bicycle model and
//! signals/controls are overwritten by the executed actions. The model used
//! inside each agent's belief adds Gaussian transition noise, a continuous
//! signal-belief transition and a norm-conditioned importance weight.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, LN_2, PI};
use std::fmt;
use std::ops::{Index, IndexMut};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{
    advance, to_road_frame, ControlInput, KinematicBounds, KinematicsError, RoadFrame,
    VehicleGeometry, VehicleState,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AgentId {
    #[default]
    A,
    B,
}

impl AgentId {
    pub const ALL: [AgentId; 2] = [AgentId::A, AgentId::B];

    #[inline]
    pub fn index(self) -> usize {
        match self {
            AgentId::A => 0,
            AgentId::B => 1,
        }
    }

    #[inline]
    pub fn other(self) -> AgentId {
        match self {
            AgentId::A => AgentId::B,
            AgentId::B => AgentId::A,
        }
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentId::A => write!(f, "A"),
            AgentId::B => write!(f, "B"),
        }
    }
}

/// Executed or observed communicative acts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignalPairBinary {
    pub prompting: bool,
    pub yielding: bool,
}

impl SignalPairBinary {
    pub const NONE: SignalPairBinary = SignalPairBinary { prompting: false, yielding: false };

    pub fn new(prompting: bool, yielding: bool) -> Self {
        Self { prompting, yielding }
    }
}

/// Signal state inside a belief; each component lies in `[0, 1]`.
///
/// The process and observations only ever hold the values 0 and 1.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SignalPairBelief {
    pub prompting: f64,
    pub yielding: f64,
}

impl SignalPairBelief {
    pub fn new(prompting: f64, yielding: f64) -> Self {
        Self { prompting, yielding }
    }

    pub fn to_binary(self) -> SignalPairBinary {
        SignalPairBinary { prompting: self.prompting >= 0.5, yielding: self.yielding >= 0.5 }
    }
}

impl From<SignalPairBinary> for SignalPairBelief {
    fn from(b: SignalPairBinary) -> Self {
        Self {
            prompting: if b.prompting { 1.0 } else { 0.0 },
            yielding: if b.yielding { 1.0 } else { 0.0 },
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AgentWorldState {
    pub kin: VehicleState,
    pub signal: SignalPairBelief,
    pub control: ControlInput,
    /// Has completed a stop in front of the stop line.
    pub has_stopped: bool,
    /// Believes it holds priority over the other agent.
    pub has_priority: bool,
}

/// Joint state of both agents. Used for the true world, observations and particles.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FullState {
    pub agents: [AgentWorldState; 2],
}

impl Index<AgentId> for FullState {
    type Output = AgentWorldState;
    #[inline]
    fn index(&self, id: AgentId) -> &AgentWorldState {
        &self.agents[id.index()]
    }
}

impl IndexMut<AgentId> for FullState {
    #[inline]
    fn index_mut(&mut self, id: AgentId) -> &mut AgentWorldState {
        &mut self.agents[id.index()]
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AgentAction {
    pub control: ControlInput,
    pub signal: SignalPairBinary,
}

impl AgentAction {
    pub fn new(control: ControlInput, signal: SignalPairBinary) -> Self {
        Self { control, signal }
    }
}

/// Static layout shared by the process and all agents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scene {
    pub dt: f64,
    pub geometry: VehicleGeometry,
    pub bounds: KinematicBounds,
    pub lane_width: f64,
    /// Lane axis per agent, indexed by [`AgentId::index`].
    pub lane_headings: [f64; 2],
}

impl Default for Scene {
    fn default() -> Self {
        Self {
            dt: 0.2,
            geometry: VehicleGeometry::default(),
            bounds: KinematicBounds::default(),
            lane_width: 3.0,
            lane_headings: [0.0, FRAC_PI_2],
        }
    }
}

impl Scene {
    #[inline]
    pub fn frame(&self, id: AgentId) -> RoadFrame {
        RoadFrame::new(self.lane_headings[id.index()])
    }

    /// Longitudinal coordinate of agent `id` along its own lane.
    #[inline]
    pub fn d_long(&self, s: &FullState, id: AgentId) -> f64 {
        to_road_frame(&s[id].kin, &self.frame(id)).0
    }

    #[inline]
    pub fn d_lat(&self, s: &FullState, id: AgentId) -> f64 {
        to_road_frame(&s[id].kin, &self.frame(id)).1
    }
}

/// Diagonal standard deviations of the model's transition and observation noise.
///
/// Kinematic vectors are ordered `[x, y, theta, delta, v]`, control vectors `[a, omega]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub sigma_x_ego: [f64; 5],
    pub sigma_x_ov: [f64; 5],
    pub sigma_u_ov: [f64; 2],
    pub sigma_x_o: [f64; 5],
    pub sigma_u_o: [f64; 2],
    /// Signal noise during behaviour prediction.
    pub sigma_gamma: f64,
    /// Signal noise during belief updating.
    pub sigma_gamma_0: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            sigma_x_ego: [0.05, 0.05, 0.005, 0.005, 0.05],
            sigma_x_ov: [0.05, 0.05, 0.005, 0.005, 0.05],
            sigma_u_ov: [0.3, 0.01],
            sigma_x_o: [0.1, 0.1, 0.01, 0.01, 0.1],
            sigma_u_o: [0.2, 0.01],
            sigma_gamma: 0.001,
            sigma_gamma_0: 0.005,
        }
    }
}

impl NoiseConfig {
    /// All standard deviations zero.
    pub fn zero() -> Self {
        Self {
            sigma_x_ego: [0.0; 5],
            sigma_x_ov: [0.0; 5],
            sigma_u_ov: [0.0; 2],
            sigma_x_o: [0.0; 5],
            sigma_u_o: [0.0; 2],
            sigma_gamma: 0.0,
            sigma_gamma_0: 0.0,
        }
    }

    pub fn all_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.sigma_x_ego
            .iter()
            .chain(&self.sigma_x_ov)
            .chain(&self.sigma_u_ov)
            .chain(&self.sigma_x_o)
            .chain(&self.sigma_u_o)
            .chain([&self.sigma_gamma, &self.sigma_gamma_0])
            .copied()
    }
}

/// Norms an agent expects others to follow, plus the shared rule geometry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormConfig {
    pub stop_signs_enabled: bool,
    pub priority_enabled: bool,
    pub communication_enabled: bool,
    pub lane_norms_enabled: bool,
    pub speed_norm_enabled: bool,
    /// Speed above which another agent is considered speeding [m/s].
    pub speed_limit_norm: f64,
    /// Longitudinal interval in which a stop counts [m].
    pub stop_region: [f64; 2],
    /// Speed below which an agent has stopped [m/s].
    pub stop_speed: f64,
    pub intersection_entry: f64,
    pub trail_margin: f64,
    /// Crossing point of the no-stop-sign priority handover [m].
    pub priority_handover_distance: f64,
    pub norm_violation_prob: f64,
    pub coop_slope: f64,
    pub coop_offset: f64,
    pub coop_floor: f64,
    /// Heading deviation from the lane axis treated as leaving the lane [rad].
    pub lane_heading_tolerance: f64,
    /// Projection horizon for the normative rollout [s].
    pub rollout_horizon: f64,
}

impl Default for NormConfig {
    fn default() -> Self {
        Self {
            stop_signs_enabled: false,
            priority_enabled: false,
            communication_enabled: false,
            lane_norms_enabled: true,
            speed_norm_enabled: true,
            speed_limit_norm: 11.5,
            stop_region: [-19.425, -3.925],
            stop_speed: 0.278,
            intersection_entry: -3.925,
            trail_margin: 4.425,
            priority_handover_distance: -20.0,
            norm_violation_prob: 0.02,
            coop_slope: 1.4,
            coop_offset: 0.3,
            coop_floor: 0.001,
            lane_heading_tolerance: 0.35,
            rollout_horizon: 4.0,
        }
    }
}

impl NormConfig {
    /// Number of rollout steps `H_n` for a given time step.
    pub fn rollout_steps(&self, dt: f64) -> usize {
        ((self.rollout_horizon / dt).round() as usize).max(1)
    }

    /// Rollout indices at which the normative probability is evaluated.
    pub fn rollout_indices(&self, dt: f64) -> [usize; 3] {
        let hn = self.rollout_steps(dt);
        [1, ((1 + hn) / 2).max(1), hn]
    }

    fn any_enabled(&self) -> bool {
        self.stop_signs_enabled
            || self.priority_enabled
            || self.communication_enabled
            || self.lane_norms_enabled
            || self.speed_norm_enabled
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("no action supplied for agent {0}")]
    MissingAction(AgentId),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
}

/// Everything the model transition needs besides the state.
#[derive(Clone, Copy, Debug)]
pub struct TransitionCtx<'a> {
    pub scene: &'a Scene,
    pub noise: &'a NoiseConfig,
    pub norms: &'a NormConfig,
    /// Signal noise: `sigma_gamma_0` while filtering, `sigma_gamma` while predicting.
    pub sigma_gamma: f64,
}

// ---------------------------------------------------------------------------
// generative process
// ---------------------------------------------------------------------------

/// One deterministic step of the true environment.
pub fn process_step(
    eta: &FullState,
    actions: &HashMap<AgentId, AgentAction>,
    scene: &Scene,
    norms: &NormConfig,
) -> Result<FullState, ModelError> {
    let mut next = *eta;
    for id in AgentId::ALL {
        let act = actions.get(&id).ok_or(ModelError::MissingAction(id))?;
        let st = &eta[id];
        let kin = crate::kinematics::step_bicycle_bounded(
            &st.kin,
            act.control,
            scene.dt,
            &scene.geometry,
            &scene.bounds,
        )?;
        next[id].signal = act.signal.into();
        // the realized control: braking at standstill has no effect
        let mut control = act.control;
        if kin.v <= 0.0 && control.a < 0.0 {
            control.a = (kin.v - st.kin.v) / scene.dt;
        }
        next[id].control = control;
        next[id].kin = kin;
    }
    update_flags(&mut next, eta, scene, norms);
    Ok(next)
}

/// The process is observed without noise.
pub fn process_observe(eta: &FullState) -> FullState {
    *eta
}

fn update_flags(next: &mut FullState, prev: &FullState, scene: &Scene, norms: &NormConfig) {
    for id in AgentId::ALL {
        next[id].has_stopped =
            update_h(&next[id].kin, prev[id].has_stopped, &scene.frame(id), norms);
    }
    for id in AgentId::ALL {
        next[id].has_priority =
            update_priority(next, prev, prev[id].has_priority, id, id.other(), scene, norms);
    }
}

/// Stop-sign flag: set once the agent is inside the stop region below the stop speed.
pub fn update_h(kin_next: &VehicleState, h: bool, frame: &RoadFrame, norms: &NormConfig) -> bool {
    if h {
        return true;
    }
    let d = to_road_frame(kin_next, frame).0;
    norms.stop_region[0] <= d && d <= norms.stop_region[1] && kin_next.v < norms.stop_speed
}

#[inline]
fn arrival_ratio(d: f64, v: f64) -> f64 {
    if v > 0.0 {
        d / v
    } else {
        f64::NEG_INFINITY
    }
}

/// Priority flag of `ego` over `other`. Fixed once set.
pub fn update_priority(
    s_next: &FullState,
    s: &FullState,
    p: bool,
    ego: AgentId,
    other: AgentId,
    scene: &Scene,
    norms: &NormConfig,
) -> bool {
    if p {
        return true;
    }
    if !norms.priority_enabled {
        return false;
    }
    let d_ego_next = scene.d_long(s_next, ego);
    let d_other_next = scene.d_long(s_next, other);
    if norms.stop_signs_enabled {
        s_next[ego].has_stopped && !s[ego].has_stopped && d_ego_next > d_other_next
    } else {
        let d_ego = scene.d_long(s, ego);
        let crossed =
            d_ego < norms.priority_handover_distance && norms.priority_handover_distance <= d_ego_next;
        crossed
            && arrival_ratio(d_ego_next, s[ego].kin.v) > arrival_ratio(d_other_next, s[other].kin.v)
    }
}

// ---------------------------------------------------------------------------
// generative model
// ---------------------------------------------------------------------------

/// Draws from a normal truncated to the open unit interval.
pub fn sample_truncated_unit<R: Rng + ?Sized>(mean: f64, sd: f64, rng: &mut R) -> f64 {
    if sd <= 0.0 {
        return mean.clamp(0.0, 1.0);
    }
    for _ in 0..64 {
        let z: f64 = rng.sample(StandardNormal);
        let x = mean + sd * z;
        if x > 0.0 && x < 1.0 {
            return x;
        }
    }
    mean.clamp(1e-9, 1.0 - 1e-9)
}

/// Transition of another agent's signal belief given whether the ego prompts.
pub fn signal_transition<R: Rng + ?Sized>(
    gamma: SignalPairBelief,
    prompting: bool,
    sigma_gamma: f64,
    rng: &mut R,
) -> SignalPairBelief {
    let prompting_next = sample_truncated_unit(gamma.prompting, sigma_gamma, rng);
    let yielding_next = if prompting {
        if rng.random::<f64>() < gamma.yielding {
            1.0
        } else {
            0.0
        }
    } else {
        sample_truncated_unit(gamma.yielding, sigma_gamma, rng)
    };
    SignalPairBelief::new(prompting_next, yielding_next)
}

#[inline]
fn perturb_kin<R: Rng + ?Sized>(
    k: &mut VehicleState,
    sd: &[f64; 5],
    bounds: &KinematicBounds,
    rng: &mut R,
) {
    let mut z = |s: f64| if s > 0.0 { s * rng.sample::<f64, _>(StandardNormal) } else { 0.0 };
    k.x += z(sd[0]);
    k.y += z(sd[1]);
    k.theta += z(sd[2]);
    k.delta = (k.delta + z(sd[3])).clamp(-bounds.delta_max, bounds.delta_max);
    k.v = (k.v + z(sd[4])).max(0.0);
}

/// Samples `s'` from the norm-free transition and returns it with its normative
/// importance weight (the projected normative probability).
///
/// `ego_tail` holds the ego controls planned after `ego_action`; the normative
/// rollout holds the last of them once exhausted.
pub fn model_transition_sample<R: Rng + ?Sized>(
    s: &FullState,
    ego_action: &AgentAction,
    ego: AgentId,
    ctx: &TransitionCtx<'_>,
    ego_tail: &[ControlInput],
    rng: &mut R,
) -> (FullState, f64) {
    let next = sample_base_transition(s, ego_action, ego, ctx, rng);
    let weight = projected_normative(&next, ego, ego_action.control, ego_tail, ctx.scene, ctx.norms);
    (next, weight)
}

/// Draw from `p_0` only, without the normative factor.
pub fn sample_base_transition<R: Rng + ?Sized>(
    s: &FullState,
    ego_action: &AgentAction,
    ego: AgentId,
    ctx: &TransitionCtx<'_>,
    rng: &mut R,
) -> FullState {
    let scene = ctx.scene;
    let noise = ctx.noise;
    let mut next = *s;
    let bounds = &scene.bounds;
    let wb = scene.geometry.wheelbase;

    let e = &mut next[ego];
    e.kin = advance(&s[ego].kin, ego_action.control, scene.dt, wb, bounds);
    perturb_kin(&mut e.kin, &noise.sigma_x_ego, bounds, rng);
    e.control = bounds.clamp_control(ego_action.control);
    e.signal = ego_action.signal.into();

    let w = ego.other();
    let sw = &s[w];
    let o = &mut next[w];
    o.kin = advance(&sw.kin, sw.control, scene.dt, wb, bounds);
    perturb_kin(&mut o.kin, &noise.sigma_x_ov, bounds, rng);
    let mut u = sw.control;
    if noise.sigma_u_ov[0] > 0.0 {
        u.a += noise.sigma_u_ov[0] * rng.sample::<f64, _>(StandardNormal);
    }
    if noise.sigma_u_ov[1] > 0.0 {
        u.omega += noise.sigma_u_ov[1] * rng.sample::<f64, _>(StandardNormal);
    }
    o.control = bounds.clamp_control(u);
    o.signal = signal_transition(sw.signal, ego_action.signal.prompting, ctx.sigma_gamma, rng);

    update_flags(&mut next, s, scene, ctx.norms);
    next
}

#[inline]
fn wrap_angle(a: f64) -> f64 {
    let mut x = (a + PI) % (2.0 * PI);
    if x < 0.0 {
        x += 2.0 * PI;
    }
    x - PI
}

/// Normative probability the ego assigns to the other agent's state.
pub fn normative_prob(s: &FullState, ego: AgentId, scene: &Scene, norms: &NormConfig) -> f64 {
    let w = ego.other();
    let low = norms.norm_violation_prob;
    let kin_w = &s[w].kin;
    let frame_w = scene.frame(w);
    let (d_w, lat_w) = to_road_frame(kin_w, &frame_w);
    let mut p = 1.0;
    if norms.lane_norms_enabled {
        let half = 0.5 * scene.lane_width + 0.5 * scene.geometry.width;
        if lat_w.abs() > half {
            p *= low;
        }
        if wrap_angle(kin_w.theta - frame_w.theta_road).abs() > norms.lane_heading_tolerance {
            p *= low;
        }
    }
    if norms.speed_norm_enabled && kin_w.v > norms.speed_limit_norm {
        p *= low;
    }
    if norms.stop_signs_enabled && d_w >= norms.intersection_entry && !s[w].has_stopped {
        p *= low;
    }
    if norms.priority_enabled || norms.communication_enabled {
        let d_ego = scene.d_long(s, ego);
        let ahead = d_w > norms.intersection_entry.max(d_ego - norms.trail_margin);
        if ahead {
            if norms.priority_enabled && s[ego].has_priority {
                p *= low;
            }
            if norms.communication_enabled {
                let excess = (s[w].signal.yielding - norms.coop_offset).max(0.0);
                p *= (1.0 - norms.coop_slope * excess).max(norms.coop_floor);
            }
        }
    }
    p
}

/// Harmonic mean of normative values; zero if any value is zero.
pub fn harmonic_mean(values: &[f64]) -> f64 {
    if values.iter().any(|&v| v <= 0.0) {
        return 0.0;
    }
    values.len() as f64 / values.iter().map(|v| 1.0 / v).sum::<f64>()
}

/// `min{p_n(s'), harmonic mean of p_n over the rollout}`.
///
/// The rollout starts from `s_next` (rollout index 1) and advances without
/// noise: the other agent holds its sampled control, the ego follows
/// `ego_tail` after `ego_control`.
pub fn projected_normative(
    s_next: &FullState,
    ego: AgentId,
    ego_control: ControlInput,
    ego_tail: &[ControlInput],
    scene: &Scene,
    norms: &NormConfig,
) -> f64 {
    if !norms.any_enabled() {
        return 1.0;
    }
    let p1 = normative_prob(s_next, ego, scene, norms);
    let idx = norms.rollout_indices(scene.dt);
    let hn = idx[2];
    let mut vals = [p1, 1.0, 1.0];
    let mut r = *s_next;
    let w = ego.other();
    let wb = scene.geometry.wheelbase;
    for i in 2..=hn {
        let prev = r;
        let u_ego = match ego_tail.len() {
            0 => ego_control,
            n => ego_tail[(i - 2).min(n - 1)],
        };
        r[ego].kin = advance(&prev[ego].kin, u_ego, scene.dt, wb, &scene.bounds);
        r[w].kin = advance(&prev[w].kin, prev[w].control, scene.dt, wb, &scene.bounds);
        update_flags(&mut r, &prev, scene, norms);
        if i == idx[1] {
            vals[1] = normative_prob(&r, ego, scene, norms);
        }
        if i == hn {
            vals[2] = normative_prob(&r, ego, scene, norms);
        }
    }
    if hn == 1 {
        return p1;
    }
    let rollout = if idx[1] == 1 || idx[1] == hn {
        harmonic_mean(&[vals[0], vals[2]])
    } else {
        harmonic_mean(&vals)
    };
    p1.min(rollout)
}

// ---------------------------------------------------------------------------
// observation model
// ---------------------------------------------------------------------------

pub const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// `ln N(x; mean, sd)`; a zero deviation acts as a point mass.
#[inline]
pub fn gaussian_logpdf(x: f64, mean: f64, sd: f64) -> f64 {
    if sd <= 0.0 {
        return if x == mean { 0.0 } else { f64::NEG_INFINITY };
    }
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - 0.5 * LN_2PI
}

/// `ln B_p(obs)`; impossible observations give `-inf`.
#[inline]
pub fn bernoulli_logpmf(obs: bool, p: f64) -> f64 {
    let q = if obs { p } else { 1.0 - p };
    if q <= 0.0 {
        f64::NEG_INFINITY
    } else {
        q.ln()
    }
}

/// Shannon entropy of a Bernoulli variable in nats.
pub fn bernoulli_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -(p * p.ln() + (1.0 - p) * (1.0 - p).ln())
}

#[inline]
pub fn gaussian_entropy(sd: f64) -> f64 {
    if sd <= 0.0 {
        return 0.0;
    }
    0.5 * (1.0 + LN_2PI) + sd.ln()
}

/// Probability that the ego observes another agent's signal as active.
#[inline]
pub fn other_signal_obs_prob(gamma: f64) -> f64 {
    gamma.clamp(0.0, 1.0).powi(10)
}

pub fn kin_array(k: &VehicleState) -> [f64; 5] {
    [k.x, k.y, k.theta, k.delta, k.v]
}

/// `ln p(o | s)` from the ego's perspective.
pub fn observation_loglik(o: &FullState, s: &FullState, ego: AgentId, noise: &NoiseConfig) -> f64 {
    let mut ll = 0.0;
    for id in AgentId::ALL {
        let (ko, ks) = (kin_array(&o[id].kin), kin_array(&s[id].kin));
        for d in 0..5 {
            ll += gaussian_logpdf(ko[d], ks[d], noise.sigma_x_o[d]);
        }
        ll += gaussian_logpdf(o[id].control.a, s[id].control.a, noise.sigma_u_o[0]);
        ll += gaussian_logpdf(o[id].control.omega, s[id].control.omega, noise.sigma_u_o[1]);
        let obs = o[id].signal.to_binary();
        let g = s[id].signal;
        let (pa, py) = if id == ego {
            (g.prompting, g.yielding)
        } else {
            (other_signal_obs_prob(g.prompting), other_signal_obs_prob(g.yielding))
        };
        ll += bernoulli_logpmf(obs.prompting, pa);
        ll += bernoulli_logpmf(obs.yielding, py);
    }
    ll
}

/// Entropy of the Bernoulli signal observation of an agent's belief value.
pub fn signal_obs_entropy(gamma: f64, is_ego: bool) -> f64 {
    let p = if is_ego { gamma } else { other_signal_obs_prob(gamma) };
    bernoulli_entropy(p)
}

#[allow(dead_code)]
pub(crate) const MAX_BERNOULLI_ENTROPY: f64 = LN_2;
