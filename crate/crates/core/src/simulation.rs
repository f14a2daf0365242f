//! Two-agent interaction loop and outcome classification.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::{BeliefError, ParticleSet};
use crate::config::Config;
use crate::kinematics::{rect_clearance, rect_overlap, ControlInput, VehicleState};
use crate::model::{
    process_observe, process_step, AgentAction, AgentId, FullState, ModelError, SignalPairBinary,
};
use crate::policy::{
    accumulate_and_select, select_signals, signal_context, PlanEnv, SurpriseState,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Baseline,
    Norms,
    Communication,
    NormsCommunication,
    Adversarial,
    /// Norm flags are taken from the configuration as given.
    Custom,
}

impl Regime {
    pub const COOPERATIVE: [Regime; 4] =
        [Regime::Baseline, Regime::Norms, Regime::Communication, Regime::NormsCommunication];

    pub fn name(self) -> &'static str {
        match self {
            Regime::Baseline => "baseline",
            Regime::Norms => "norms",
            Regime::Communication => "communication",
            Regime::NormsCommunication => "norms_communication",
            Regime::Adversarial => "adversarial",
            Regime::Custom => "custom",
        }
    }

    /// `(stop_signs, priority_rule, communication)`, or `None` for custom.
    pub fn flags(self) -> Option<(bool, bool, bool)> {
        match self {
            Regime::Baseline => Some((false, false, false)),
            Regime::Norms => Some((true, true, false)),
            Regime::Communication => Some((false, false, true)),
            Regime::NormsCommunication => Some((true, true, true)),
            Regime::Adversarial => Some((false, false, true)),
            Regime::Custom => None,
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regime {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', '+', ' '], "_");
        Ok(match norm.as_str() {
            "baseline" => Regime::Baseline,
            "norms" => Regime::Norms,
            "communication" | "comm" => Regime::Communication,
            "norms_communication" | "norms_comm" => Regime::NormsCommunication,
            "adversarial" => Regime::Adversarial,
            "custom" => Regime::Custom,
            _ => {
                return Err(format!(
                    "unknown regime '{s}' (expected baseline, norms, communication, norms_communication, adversarial, custom)"
                ))
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Initial longitudinal position of A [m].
    pub d_a0: f64,
    /// `D_B(0) - D_A(0)` [m].
    pub delta_d0: f64,
    pub v0: f64,
    pub max_time: f64,
    pub seed: u64,
    pub regime: Regime,
    pub particles: usize,
    pub deadlock_speed: f64,
    pub deadlock_time: f64,
    /// End the run as soon as the first agent has crossed.
    pub stop_after_first_cross: bool,
    /// Dump every particle into the trajectory log.
    pub debug_particles: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            d_a0: -65.0,
            delta_d0: 0.0,
            v0: 10.0,
            max_time: 40.0,
            seed: 0,
            regime: Regime::Baseline,
            particles: 100,
            deadlock_speed: 0.1,
            deadlock_time: 5.0,
            stop_after_first_cross: true,
            debug_particles: false,
        }
    }
}

impl ScenarioConfig {
    pub fn d_b0(&self) -> f64 {
        self.d_a0 + self.delta_d0
    }

    pub fn adversarial_b(&self) -> bool {
        self.regime == Regime::Adversarial
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("agent {agent} at t={t:.1}s: {source}")]
    Belief { agent: AgentId, t: f64, source: BeliefError },
    #[error("t={t:.1}s: {source}")]
    Model { t: f64, source: ModelError },
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OutcomeKind {
    AFirst,
    BFirst,
    Deadlock,
    Collision,
}

impl OutcomeKind {
    pub const ALL: [OutcomeKind; 4] =
        [OutcomeKind::AFirst, OutcomeKind::BFirst, OutcomeKind::Deadlock, OutcomeKind::Collision];

    pub fn name(self) -> &'static str {
        match self {
            OutcomeKind::AFirst => "a_first",
            OutcomeKind::BFirst => "b_first",
            OutcomeKind::Deadlock => "deadlock",
            OutcomeKind::Collision => "collision",
        }
    }
}

impl fmt::Display for OutcomeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OutcomeKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        OutcomeKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown outcome kind '{s}'"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub kind: OutcomeKind,
    pub t_cross_a: Option<f64>,
    pub t_cross_b: Option<f64>,
    pub min_gap: f64,
    pub impact_speed: Option<f64>,
    pub t_end: f64,
}

/// Incremental outcome classification over world states sampled every `dt`.
#[derive(Clone, Debug)]
pub struct OutcomeTracker {
    dt: f64,
    deadlock_speed: f64,
    deadlock_time: f64,
    cross_threshold: f64,
    geometry: crate::kinematics::VehicleGeometry,
    frames: [crate::kinematics::RoadFrame; 2],
    collision: Option<f64>,
    t_cross: [Option<f64>; 2],
    still_time: f64,
    deadlocked: bool,
    min_gap: f64,
    t: f64,
}

impl OutcomeTracker {
    pub fn new(cfg: &Config) -> Self {
        let g = cfg.scene.geometry.clone();
        let cross_threshold = 0.5 * g.length + 0.5 * cfg.scene.lane_width + 0.5 * g.width;
        Self {
            dt: cfg.scene.dt,
            deadlock_speed: cfg.scenario.deadlock_speed,
            deadlock_time: cfg.scenario.deadlock_time,
            cross_threshold,
            frames: [cfg.scene.frame(AgentId::A), cfg.scene.frame(AgentId::B)],
            geometry: g,
            collision: None,
            t_cross: [None, None],
            still_time: 0.0,
            deadlocked: false,
            min_gap: f64::INFINITY,
            t: 0.0,
        }
    }

    /// Longitudinal position the center must exceed for an agent to have crossed.
    pub fn cross_threshold(&self) -> f64 {
        self.cross_threshold
    }

    /// Records the world at time `t`.
    pub fn observe(&mut self, t: f64, s: &FullState) {
        self.t = t;
        let (ka, kb) = (&s[AgentId::A].kin, &s[AgentId::B].kin);
        if self.collision.is_none() && rect_overlap(ka, kb, &self.geometry, &self.geometry) {
            let rel = (ka.v * ka.theta.cos() - kb.v * kb.theta.cos())
                .hypot(ka.v * ka.theta.sin() - kb.v * kb.theta.sin());
            self.collision = Some(rel);
            self.min_gap = 0.0;
        } else if self.collision.is_none() {
            let reach = self.geometry.length.hypot(self.geometry.width) + 10.0;
            let d = (ka.x - kb.x).hypot(ka.y - kb.y);
            let gap = if d > reach {
                d - self.geometry.length.hypot(self.geometry.width)
            } else {
                rect_clearance(ka, kb, &self.geometry, &self.geometry)
            };
            self.min_gap = self.min_gap.min(gap);
        }
        for id in AgentId::ALL {
            let d = crate::kinematics::to_road_frame(&s[id].kin, &self.frames[id.index()]).0;
            if self.t_cross[id.index()].is_none() && d > self.cross_threshold {
                self.t_cross[id.index()] = Some(t);
            }
        }
        if ka.v < self.deadlock_speed && kb.v < self.deadlock_speed {
            self.still_time += self.dt;
        } else {
            self.still_time = 0.0;
        }
        if self.t_cross.iter().all(Option::is_none) && self.still_time >= self.deadlock_time - 1e-9 {
            self.deadlocked = true;
        }
    }

    pub fn any_crossed(&self) -> bool {
        self.t_cross.iter().any(Option::is_some)
    }

    /// Whether the run can stop.
    pub fn finished(&self, stop_after_first_cross: bool) -> bool {
        self.collision.is_some()
            || self.deadlocked
            || self.t_cross.iter().all(Option::is_some)
            || (stop_after_first_cross && self.any_crossed())
    }

    pub fn outcome(&self) -> Outcome {
        let kind = if self.collision.is_some() {
            OutcomeKind::Collision
        } else {
            match self.t_cross {
                [Some(a), Some(b)] if b < a => OutcomeKind::BFirst,
                [Some(_), _] => OutcomeKind::AFirst,
                [None, Some(_)] => OutcomeKind::BFirst,
                [None, None] => OutcomeKind::Deadlock,
            }
        };
        Outcome {
            kind,
            t_cross_a: self.t_cross[0],
            t_cross_b: self.t_cross[1],
            min_gap: self.min_gap,
            impact_speed: self.collision,
            t_end: self.t,
        }
    }
}

/// Classifies a complete trajectory sampled every `dt` starting at `t = 0`.
pub fn classify_outcome(trajectory: &[FullState], cfg: &Config) -> Outcome {
    let mut tr = OutcomeTracker::new(cfg);
    for (k, s) in trajectory.iter().enumerate() {
        tr.observe(k as f64 * cfg.scene.dt, s);
    }
    tr.outcome()
}

/// Constant speed while signalling yield.
pub fn adversarial_action() -> AgentAction {
    AgentAction::new(ControlInput::ZERO, SignalPairBinary::new(false, true))
}

/// Per-agent planning state.
#[derive(Clone, Debug)]
pub struct AgentRuntime {
    pub id: AgentId,
    pub belief: ParticleSet,
    /// Unexecuted controls of the current policy.
    pub remaining: Vec<ControlInput>,
    pub surprise: SurpriseState,
    pub signals_out: SignalPairBinary,
    pub last_action: AgentAction,
    pub standstill_time: f64,
    pub prev_yield_mean: f64,
    pub replan_times: Vec<f64>,
    rng: ChaCha8Rng,
}

impl AgentRuntime {
    pub fn new(id: AgentId, world: &FullState, cfg: &Config, seed: u64) -> Result<Self, SimError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let o = process_observe(world);
        let belief = ParticleSet::from_observation(&o, id, cfg.scenario.particles, &cfg.noise, &mut rng)
            .map_err(|source| SimError::Belief { agent: id, t: 0.0, source })?;
        let prev_yield_mean = belief.other_signal_mean()[1];
        Ok(Self {
            id,
            belief,
            remaining: vec![ControlInput::ZERO; cfg.policy.horizon.saturating_sub(1)],
            surprise: SurpriseState::new(cfg.policy.lambda(), cfg.policy.threshold),
            signals_out: SignalPairBinary::NONE,
            last_action: AgentAction::default(),
            standstill_time: 0.0,
            prev_yield_mean,
            replan_times: Vec::new(),
            rng,
        })
    }
}

/// One log line per agent per tick.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub t: f64,
    pub agent: AgentId,
    pub x: f64,
    pub y: f64,
    pub d_long: f64,
    pub v: f64,
    pub a: f64,
    pub omega: f64,
    pub gamma_a: u8,
    pub gamma_y: u8,
    pub e: f64,
    pub epsilon: f64,
    pub replanned: bool,
    pub forced: bool,
    /// Believed other-agent longitudinal position, speed and signals.
    pub other_d_mean: Option<f64>,
    pub other_v_mean: Option<f64>,
    pub other_prompt_mean: Option<f64>,
    pub other_yield_mean: Option<f64>,
    pub ess: Option<f64>,
    /// Pragmatic components of the carried policy, scaled by `lambda`.
    pub prag_speed: Option<f64>,
    pub prag_comfort: Option<f64>,
    pub prag_collision: Option<f64>,
    pub prag_norms: Option<f64>,
    pub prag_comm: Option<f64>,
    pub prag_coop: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub particles: Option<Vec<FullState>>,
}

fn base_record(t: f64, id: AgentId, world: &FullState, cfg: &Config, action: &AgentAction) -> TickRecord {
    let k = &world[id].kin;
    TickRecord {
        t,
        agent: id,
        x: k.x,
        y: k.y,
        d_long: cfg.scene.d_long(world, id),
        v: k.v,
        a: action.control.a,
        omega: action.control.omega,
        gamma_a: action.signal.prompting as u8,
        gamma_y: action.signal.yielding as u8,
        e: 0.0,
        epsilon: 0.0,
        replanned: false,
        forced: false,
        other_d_mean: None,
        other_v_mean: None,
        other_prompt_mean: None,
        other_yield_mean: None,
        ess: None,
        prag_speed: None,
        prag_comfort: None,
        prag_collision: None,
        prag_norms: None,
        prag_comm: None,
        prag_coop: None,
        particles: None,
    }
}

fn agent_decide(
    rt: &mut AgentRuntime,
    world: &FullState,
    t: f64,
    cfg: &Config,
) -> Result<(AgentAction, TickRecord), SimError> {
    let env = PlanEnv {
        scene: &cfg.scene,
        noise: &cfg.noise,
        norms: &cfg.norms,
        pref: &cfg.preference,
        policy: &cfg.policy,
    };
    let id = rt.id;
    let o = process_observe(world);
    let mut ess = rt.belief.len() as f64;
    if t > 0.0 {
        let ctx = crate::model::TransitionCtx {
            scene: &cfg.scene,
            noise: &cfg.noise,
            norms: &cfg.norms,
            sigma_gamma: cfg.noise.sigma_gamma_0,
        };
        let last = rt.last_action;
        let tail = rt.remaining.clone();
        if let Err(e) = rt.belief.predict(&last, &ctx, &tail, &mut rt.rng) {
            debug!("agent {id} predict failed at t={t:.1}: {e}; reinitializing");
            rt.belief = ParticleSet::from_observation(&o, id, cfg.scenario.particles, &cfg.noise, &mut rt.rng)
                .map_err(|source| SimError::Belief { agent: id, t, source })?;
        }
        let info = rt
            .belief
            .update(&o, &cfg.noise, &mut rt.rng)
            .map_err(|source| SimError::Belief { agent: id, t, source })?;
        ess = info.ess;
    }

    let sctx = signal_context(&rt.belief, &env);
    let signals = select_signals(&sctx, &cfg.preference, &cfg.norms);

    if world[id].kin.v < cfg.policy.standstill_speed {
        rt.standstill_time += cfg.scene.dt;
    } else {
        rt.standstill_time = 0.0;
    }
    let yield_mean = sctx.yield_mean;
    let yield_trigger =
        rt.prev_yield_mean < cfg.policy.yield_replan_threshold && yield_mean >= cfg.policy.yield_replan_threshold;
    rt.prev_yield_mean = yield_mean;
    let standstill_trigger = rt.standstill_time >= cfg.policy.standstill_replan_time - 1e-9;
    let force = t > 0.0 && (yield_trigger || standstill_trigger);

    let seed: u64 = rt.rng.random();
    let out = accumulate_and_select(&mut rt.surprise, &rt.belief, &rt.remaining, signals, &env, force, seed);
    if out.replanned {
        rt.replan_times.push(t);
        rt.standstill_time = 0.0;
    }
    let mut controls = out.controls;
    let first = controls.remove(0);
    rt.remaining = controls;
    let action = AgentAction::new(first, signals);
    rt.last_action = action;
    rt.signals_out = signals;

    let lam = cfg.policy.lambda();
    let c = &out.efe.components;
    let other = id.other();
    let mut rec = base_record(t, id, world, cfg, &action);
    rec.e = rt.surprise.e;
    rec.epsilon = out.epsilon;
    rec.replanned = out.replanned;
    rec.forced = out.replanned && force;
    rec.other_d_mean = Some(rt.belief.estimate(|s| cfg.scene.d_long(s, other)));
    rec.other_v_mean = Some(rt.belief.estimate(|s| s[other].kin.v));
    rec.other_prompt_mean = Some(sctx.other_prompt_mean);
    rec.other_yield_mean = Some(yield_mean);
    rec.ess = Some(ess);
    let hmax = cfg.policy.horizon as f64 * crate::preference::max_log_preference(&cfg.preference);
    rec.prag_speed = Some(lam * c.speed);
    rec.prag_comfort = Some(lam * (c.comfort() - hmax));
    rec.prag_collision = Some(lam * (c.collision + c.safety));
    rec.prag_norms = Some(lam * c.norms());
    rec.prag_comm = Some(lam * c.comm);
    rec.prag_coop = Some(lam * c.coop);
    if cfg.scenario.debug_particles {
        rec.particles = Some(rt.belief.particles.iter().map(|p| p.state).collect());
    }
    Ok((action, rec))
}

/// Runtime of a single agent slot: a modeled agent or the scripted adversary.
#[derive(Clone, Debug)]
pub enum AgentSlot {
    Modeled(Box<AgentRuntime>),
    Adversarial,
}

/// Observe, update, select and then execute both actions simultaneously.
pub fn run_step(
    world: &FullState,
    agents: &mut [AgentSlot; 2],
    t: f64,
    cfg: &Config,
) -> Result<(FullState, Vec<TickRecord>), SimError> {
    let mut actions = HashMap::with_capacity(2);
    let mut records = Vec::with_capacity(2);
    for (i, slot) in agents.iter_mut().enumerate() {
        let id = AgentId::ALL[i];
        match slot {
            AgentSlot::Modeled(rt) => {
                let (action, rec) = agent_decide(rt, world, t, cfg)?;
                actions.insert(id, action);
                records.push(rec);
            }
            AgentSlot::Adversarial => {
                let action = adversarial_action();
                actions.insert(id, action);
                records.push(base_record(t, id, world, cfg, &action));
            }
        }
    }
    let next = process_step(world, &actions, &cfg.scene, &cfg.norms)
        .map_err(|source| SimError::Model { t, source })?;
    Ok((next, records))
}

/// Output of a full run.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub outcome: Outcome,
    pub log: Vec<TickRecord>,
    pub world: Vec<FullState>,
    /// Times of full re-plans per agent.
    pub replan_times: [Vec<f64>; 2],
}

impl RunResult {
    pub fn first_replan(&self, id: AgentId) -> Option<f64> {
        self.replan_times[id.index()].first().copied()
    }
}

/// Initial world with both agents at their start distances.
pub fn initial_world(cfg: &Config) -> FullState {
    let sc = &cfg.scenario;
    let mut s = FullState::default();
    for (id, d) in [(AgentId::A, sc.d_a0), (AgentId::B, sc.d_b0())] {
        let th = cfg.scene.lane_headings[id.index()];
        let (sin, cos) = th.sin_cos();
        s[id].kin = VehicleState::new(d * cos, d * sin, th, 0.0, sc.v0);
    }
    s
}

/// Per-agent seeds derived from the scenario seed.
pub fn agent_seeds(seed: u64) -> [u64; 2] {
    [crate::stats::stable_hash(&[seed, 0xA]), crate::stats::stable_hash(&[seed, 0xB])]
}

pub fn run_simulation(cfg: &Config) -> Result<RunResult, SimError> {
    run_simulation_with_seeds(cfg, agent_seeds(cfg.scenario.seed))
}

pub fn run_simulation_with_seeds(cfg: &Config, seeds: [u64; 2]) -> Result<RunResult, SimError> {
    cfg.validate().map_err(|e| SimError::Config(e.to_string()))?;
    let mut world = initial_world(cfg);
    let mut agents: [AgentSlot; 2] = [
        AgentSlot::Modeled(Box::new(AgentRuntime::new(AgentId::A, &world, cfg, seeds[0])?)),
        if cfg.scenario.adversarial_b() {
            AgentSlot::Adversarial
        } else {
            AgentSlot::Modeled(Box::new(AgentRuntime::new(AgentId::B, &world, cfg, seeds[1])?))
        },
    ];
    let dt = cfg.scene.dt;
    let steps = (cfg.scenario.max_time / dt).round() as usize;
    let mut tracker = OutcomeTracker::new(cfg);
    tracker.observe(0.0, &world);
    let mut log = Vec::new();
    let mut traj = vec![world];
    for k in 0..steps {
        if tracker.finished(cfg.scenario.stop_after_first_cross) {
            break;
        }
        let t = k as f64 * dt;
        let (next, recs) = run_step(&world, &mut agents, t, cfg)?;
        log.extend(recs);
        world = next;
        traj.push(world);
        tracker.observe((k + 1) as f64 * dt, &world);
    }
    let replan_times = agents.clone().map(|a| match a {
        AgentSlot::Modeled(rt) => rt.replan_times,
        AgentSlot::Adversarial => Vec::new(),
    });
    Ok(RunResult { outcome: tracker.outcome(), log, world: traj, replan_times })
}

/// Writes one JSON object per tick record, followed by the outcome record.
pub fn write_trajectory_jsonl<W: Write>(mut w: W, res: &RunResult) -> std::io::Result<()> {
    for r in &res.log {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    let outcome = serde_json::json!({ "outcome": res.outcome });
    serde_json::to_writer(&mut w, &outcome)?;
    w.write_all(b"\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    fn fast_config() -> Config {
        let mut c = Config::default();
        c.scenario.particles = 30;
        c.policy.plan_particles = 20;
        c.policy.cem_samples = 16;
        c.policy.cem_iterations = 2;
        c
    }

    fn world(xa: f64, va: f64, yb: f64, vb: f64) -> FullState {
        let mut s = FullState::default();
        s[AgentId::A].kin = VehicleState::new(xa, 0.0, 0.0, 0.0, va);
        s[AgentId::B].kin = VehicleState::new(0.0, yb, FRAC_PI_2, 0.0, vb);
        s
    }

    #[test]
    fn adversarial_action_is_fixed() {
        let a = adversarial_action();
        assert_eq!(a.control, ControlInput::ZERO);
        assert_eq!(a.signal, SignalPairBinary::new(false, true));
    }

    #[test]
    fn classify_crossing_order() {
        let cfg = Config::default();
        // A crosses first; B far behind
        let traj: Vec<FullState> = (0..80)
            .map(|k| world(-30.0 + 2.0 * k as f64, 10.0, -60.0 + 1.0 * k as f64, 5.0))
            .collect();
        let out = classify_outcome(&traj, &cfg);
        assert_eq!(out.kind, OutcomeKind::AFirst);
        assert!(out.t_cross_a.unwrap() < out.t_cross_b.unwrap());
        assert!(out.impact_speed.is_none());
    }

    #[test]
    fn collision_dominates() {
        let cfg = Config::default();
        let mut traj = vec![world(-10.0, 10.0, -10.0, 10.0), world(0.0, 10.0, 0.0, 10.0)];
        // afterwards A clears the zone and both stand still for a long time
        traj.push(world(30.0, 0.0, -20.0, 0.0));
        for _ in 0..40 {
            traj.push(world(30.0, 0.0, -20.0, 0.0));
        }
        let out = classify_outcome(&traj, &cfg);
        assert_eq!(out.kind, OutcomeKind::Collision);
        assert_eq!(out.min_gap, 0.0);
        assert_abs_diff_eq!(out.impact_speed.unwrap(), 200f64.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn five_second_standstill_is_deadlock() {
        let cfg = Config::default();
        let mut traj = Vec::new();
        for k in 0..=70 {
            let t = k as f64 * 0.2;
            let v = if t < 9.0 { 5.0 } else { 0.0 };
            traj.push(world(-20.0, v, -20.0, v));
        }
        let mut tr = OutcomeTracker::new(&cfg);
        let mut t_dead = None;
        for (k, s) in traj.iter().enumerate() {
            tr.observe(k as f64 * 0.2, s);
            if t_dead.is_none() && tr.finished(true) {
                t_dead = Some(k as f64 * 0.2);
            }
        }
        assert_eq!(tr.outcome().kind, OutcomeKind::Deadlock);
        // standstill starts at the 9.0 s sample; 5 s of still samples
        assert_abs_diff_eq!(t_dead.unwrap(), 13.8, epsilon = 1e-9);
    }

    #[test]
    fn timeout_without_crossing_is_deadlock() {
        let cfg = Config::default();
        let traj: Vec<FullState> = (0..10).map(|k| world(-50.0 + k as f64, 5.0, -50.0, 5.0)).collect();
        assert_eq!(classify_outcome(&traj, &cfg).kind, OutcomeKind::Deadlock);
    }

    #[test]
    fn one_tick_advances_clock_and_world() {
        let cfg = fast_config();
        let w = initial_world(&cfg);
        let mut agents = [
            AgentSlot::Modeled(Box::new(AgentRuntime::new(AgentId::A, &w, &cfg, 1).unwrap())),
            AgentSlot::Adversarial,
        ];
        let (next, recs) = run_step(&w, &mut agents, 0.0, &cfg).unwrap();
        assert_eq!(recs.len(), 2);
        assert_abs_diff_eq!(next[AgentId::B].kin.y, w[AgentId::B].kin.y + 2.0, epsilon = 1e-9);
        assert_eq!(next[AgentId::B].signal.yielding, 1.0);
    }

    #[test]
    fn regime_names_round_trip() {
        for r in [Regime::Baseline, Regime::Norms, Regime::Communication, Regime::NormsCommunication, Regime::Adversarial, Regime::Custom] {
            assert_eq!(r.name().parse::<Regime>().unwrap(), r);
        }
        assert_eq!("norms+communication".parse::<Regime>().unwrap(), Regime::NormsCommunication);
        assert!("chaos".parse::<Regime>().is_err());
    }
}
