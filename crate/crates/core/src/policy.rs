//! Expected free energy, cross-entropy policy search, surprise-gated
//! re-planning and signal selection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::belief::{systematic_indices, ParticleSet};
use crate::kinematics::ControlInput;
use crate::model::{
    bernoulli_entropy, model_transition_sample, other_signal_obs_prob, AgentAction, AgentId,
    FullState, NoiseConfig, NormConfig, Scene, SignalPairBinary, TransitionCtx,
};
use crate::preference::{
    arrival_priority_prob, max_log_preference, preference_breakdown, PrefCtx, PreferenceBreakdown,
    PreferenceConfig,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyConfig {
    pub horizon: usize,
    pub cem_samples: usize,
    pub cem_iterations: usize,
    pub elite_fraction: f64,
    pub init_accel_std: f64,
    pub init_omega_std: f64,
    pub min_accel_std: f64,
    pub min_omega_std: f64,
    /// Particles drawn from the belief for each policy evaluation.
    pub plan_particles: usize,
    /// Candidate final accelerations for the extension step.
    pub extension_accels: Vec<f64>,
    /// Surprise scaling, stored as log10.
    pub lambda_log10: f64,
    pub threshold: f64,
    pub standstill_speed: f64,
    pub standstill_replan_time: f64,
    pub yield_replan_threshold: f64,
}

impl PolicyConfig {
    pub fn lambda(&self) -> f64 {
        10f64.powf(self.lambda_log10)
    }
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            horizon: 20,
            cem_samples: 64,
            cem_iterations: 4,
            elite_fraction: 0.125,
            init_accel_std: 1.5,
            init_omega_std: 1e-5,
            min_accel_std: 0.1,
            min_omega_std: 1e-6,
            plan_particles: 100,
            extension_accels: vec![-4.0, -3.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0],
            lambda_log10: -5.9,
            threshold: 1.0,
            standstill_speed: 0.1,
            standstill_replan_time: 2.0,
            yield_replan_threshold: 0.5,
        }
    }
}

/// Everything the planner reads besides the belief.
#[derive(Clone, Copy, Debug)]
pub struct PlanEnv<'a> {
    pub scene: &'a Scene,
    pub noise: &'a NoiseConfig,
    pub norms: &'a NormConfig,
    pub pref: &'a PreferenceConfig,
    pub policy: &'a PolicyConfig,
}

impl<'a> PlanEnv<'a> {
    fn transition(&self) -> TransitionCtx<'a> {
        TransitionCtx {
            scene: self.scene,
            noise: self.noise,
            norms: self.norms,
            sigma_gamma: self.noise.sigma_gamma,
        }
    }

    fn pref_ctx(&self) -> PrefCtx<'a> {
        PrefCtx { scene: self.scene, cfg: self.pref, norms: self.norms }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EfeBreakdown {
    pub g_prag: f64,
    pub g_epist: f64,
    /// Part of `g_epist` from signal dimensions.
    pub g_epist_signal: f64,
    pub components: PreferenceBreakdown,
    pub step_prag: Vec<f64>,
}

impl EfeBreakdown {
    /// Expected free energy `G = -g_prag - g_epist`.
    pub fn g(&self) -> f64 {
        -self.g_prag - self.g_epist
    }
}

#[derive(Clone, Copy, Debug)]
struct PlanParticle {
    s: FullState,
    w: f64,
}

/// Equal-weight particles drawn from the belief by systematic resampling.
fn plan_particles<R: Rng + ?Sized>(bel: &ParticleSet, n: usize, rng: &mut R) -> Vec<PlanParticle> {
    let n = if n == 0 { bel.len() } else { n };
    let weights: Vec<f64> = bel.particles.iter().map(|p| p.weight).collect();
    let w = 1.0 / n as f64;
    systematic_indices(&weights, n, rng.random::<f64>())
        .into_iter()
        .map(|i| PlanParticle { s: bel.particles[i].state, w })
        .collect()
}

fn normalize_and_maybe_resample<R: Rng + ?Sized>(parts: &mut Vec<PlanParticle>, rng: &mut R) {
    let total: f64 = parts.iter().map(|p| p.w).sum();
    let n = parts.len();
    if !(total > 0.0) || !total.is_finite() {
        for p in parts.iter_mut() {
            p.w = 1.0 / n as f64;
        }
        return;
    }
    let mut s2 = 0.0;
    for p in parts.iter_mut() {
        p.w /= total;
        s2 += p.w * p.w;
    }
    if 1.0 / s2 < 0.5 * n as f64 {
        let weights: Vec<f64> = parts.iter().map(|p| p.w).collect();
        let idx = systematic_indices(&weights, n, rng.random::<f64>());
        let w = 1.0 / n as f64;
        *parts = idx.into_iter().map(|i| PlanParticle { s: parts[i].s, w }).collect();
    }
}

fn predict_step<R: Rng + ?Sized>(
    parts: &mut Vec<PlanParticle>,
    action: &AgentAction,
    tail: &[ControlInput],
    ego: AgentId,
    env: &PlanEnv<'_>,
    rng: &mut R,
) {
    let ctx = env.transition();
    for p in parts.iter_mut() {
        let (s, w) = model_transition_sample(&p.s, action, ego, &ctx, tail, rng);
        p.s = s;
        p.w *= w;
    }
    normalize_and_maybe_resample(parts, rng);
}

#[derive(Clone, Copy, Debug, Default)]
struct StepScore {
    prag: f64,
    epist_kin: f64,
    epist_sig: f64,
    comps: PreferenceBreakdown,
}

fn observe_sample<R: Rng + ?Sized>(s: &FullState, ego: AgentId, noise: &NoiseConfig, rng: &mut R) -> FullState {
    let mut o = *s;
    for id in AgentId::ALL {
        let a = &mut o[id];
        let mut z = |sd: f64| if sd > 0.0 { sd * rng.sample::<f64, _>(StandardNormal) } else { 0.0 };
        let sx = &noise.sigma_x_o;
        a.kin.x += z(sx[0]);
        a.kin.y += z(sx[1]);
        a.kin.theta += z(sx[2]);
        a.kin.delta += z(sx[3]);
        a.kin.v += z(sx[4]);
        a.control.a += z(noise.sigma_u_o[0]);
        a.control.omega += z(noise.sigma_u_o[1]);
        if id != ego {
            let g = a.signal;
            let pa = other_signal_obs_prob(g.prompting);
            let py = other_signal_obs_prob(g.yielding);
            a.signal.prompting = if rng.random::<f64>() < pa { 1.0 } else { 0.0 };
            a.signal.yielding = if rng.random::<f64>() < py { 1.0 } else { 0.0 };
        }
    }
    o
}

fn obs_dims(s: &FullState, id: AgentId) -> [f64; 7] {
    let a = &s[id];
    [a.kin.x, a.kin.y, a.kin.theta, a.kin.delta, a.kin.v, a.control.a, a.control.omega]
}

fn score_step<R: Rng + ?Sized>(
    parts: &[PlanParticle],
    ego: AgentId,
    env: &PlanEnv<'_>,
    rng: &mut R,
) -> StepScore {
    let pctx = env.pref_ctx();
    let mut out = StepScore::default();
    for p in parts {
        let o = observe_sample(&p.s, ego, env.noise, rng);
        let b = preference_breakdown(&o, ego, &pctx, rng.random::<f64>());
        out.prag += p.w * b.total();
        out.comps.add_scaled(&b, p.w);
    }
    // Gaussian approximation of the kinematic information gain
    let sd_o: [f64; 7] = [
        env.noise.sigma_x_o[0],
        env.noise.sigma_x_o[1],
        env.noise.sigma_x_o[2],
        env.noise.sigma_x_o[3],
        env.noise.sigma_x_o[4],
        env.noise.sigma_u_o[0],
        env.noise.sigma_u_o[1],
    ];
    for id in AgentId::ALL {
        let mut m = [0.0; 7];
        for p in parts {
            let d = obs_dims(&p.s, id);
            for k in 0..7 {
                m[k] += p.w * d[k];
            }
        }
        let mut v = [0.0; 7];
        for p in parts {
            let d = obs_dims(&p.s, id);
            for k in 0..7 {
                v[k] += p.w * (d[k] - m[k]).powi(2);
            }
        }
        for k in 0..7 {
            if sd_o[k] > 0.0 {
                out.epist_kin += 0.5 * (1.0 + v[k] / (sd_o[k] * sd_o[k])).ln();
            }
        }
    }
    let other = ego.other();
    for dim in 0..2 {
        let mut mean_p = 0.0;
        let mut amb = 0.0;
        for p in parts {
            let g = p.s[other].signal;
            let q = other_signal_obs_prob(if dim == 0 { g.prompting } else { g.yielding });
            mean_p += p.w * q;
            amb += p.w * bernoulli_entropy(q);
        }
        out.epist_sig += bernoulli_entropy(mean_p) - amb;
    }
    out
}

fn accumulate(efe: &mut EfeBreakdown, s: &StepScore) {
    efe.g_prag += s.prag;
    efe.g_epist += s.epist_kin + s.epist_sig;
    efe.g_epist_signal += s.epist_sig;
    efe.components.add_scaled(&s.comps, 1.0);
    efe.step_prag.push(s.prag);
}

/// Rolls `parts` through `controls`; optionally returns the particles before the last step.
fn rollout<R: Rng + ?Sized>(
    mut parts: Vec<PlanParticle>,
    controls: &[ControlInput],
    signals: SignalPairBinary,
    ego: AgentId,
    env: &PlanEnv<'_>,
    keep_before_last: bool,
    rng: &mut R,
) -> (EfeBreakdown, Option<Vec<PlanParticle>>) {
    let mut efe = EfeBreakdown::default();
    let mut before = None;
    for (tau, u) in controls.iter().enumerate() {
        if keep_before_last && tau + 1 == controls.len() {
            before = Some(parts.clone());
        }
        let action = AgentAction::new(*u, signals);
        predict_step(&mut parts, &action, &controls[tau + 1..], ego, env, rng);
        let sc = score_step(&parts, ego, env, rng);
        accumulate(&mut efe, &sc);
    }
    (efe, before)
}

/// Expected free energy of holding `signals` while executing `controls`.
pub fn evaluate_efe<R: Rng + ?Sized>(
    bel: &ParticleSet,
    controls: &[ControlInput],
    signals: SignalPairBinary,
    env: &PlanEnv<'_>,
    rng: &mut R,
) -> EfeBreakdown {
    let parts = plan_particles(bel, env.policy.plan_particles, rng);
    rollout(parts, controls, signals, bel.ego, env, false, rng).0
}

/// Net epistemic benefit of prompting given the mean belief that the other yields.
pub fn g_prompt(p: f64, g_gamma: f64) -> f64 {
    bernoulli_entropy(p.clamp(0.0, 1.0)) - g_gamma.abs()
}

/// Result of a cross-entropy search.
#[derive(Clone, Debug)]
pub struct CemResult {
    pub controls: Vec<ControlInput>,
    pub value: f64,
    /// Best objective after each iteration.
    pub history: Vec<f64>,
}

/// Cross-entropy minimization of `objective` over control sequences of length `h`.
///
/// Iteration 0 draws one constant acceleration per candidate; `carried` joins
/// the first population unchanged.
pub fn cem_minimize<F: FnMut(&[ControlInput]) -> f64>(
    h: usize,
    cfg: &PolicyConfig,
    bounds: &crate::kinematics::KinematicBounds,
    carried: Option<&[ControlInput]>,
    seed: u64,
    mut objective: F,
) -> CemResult {
    let m = cfg.cem_samples.max(1);
    let n_elite = ((cfg.elite_fraction * m as f64).round() as usize).clamp(1, m);
    let mut mean_a = vec![0.0; h];
    let mut std_a = vec![cfg.init_accel_std; h];
    let mut mean_w = vec![0.0; h];
    let mut std_w = vec![cfg.init_omega_std; h];
    let mut best: Option<(Vec<ControlInput>, f64)> = None;
    let mut history = Vec::with_capacity(cfg.cem_iterations);
    for it in 0..cfg.cem_iterations.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (it as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut pop: Vec<(Vec<ControlInput>, f64)> = Vec::with_capacity(m);
        for k in 0..m {
            let cand: Vec<ControlInput> = match carried {
                Some(c) if it == 0 && k == 0 && c.len() == h => c.to_vec(),
                _ if it == 0 => {
                    let a = std_a[0] * rng.sample::<f64, _>(StandardNormal);
                    (0..h)
                        .map(|t| {
                            let w = mean_w[t] + std_w[t] * rng.sample::<f64, _>(StandardNormal);
                            bounds.clamp_control(ControlInput::new(a, w))
                        })
                        .collect()
                }
                _ => (0..h)
                    .map(|t| {
                        let a = mean_a[t] + std_a[t] * rng.sample::<f64, _>(StandardNormal);
                        let w = mean_w[t] + std_w[t] * rng.sample::<f64, _>(StandardNormal);
                        bounds.clamp_control(ControlInput::new(a, w))
                    })
                    .collect(),
            };
            let v = objective(&cand);
            let v = if v.is_nan() { f64::INFINITY } else { v };
            pop.push((cand, v));
        }
        pop.sort_by(|a, b| a.1.total_cmp(&b.1));
        if best.as_ref().is_none_or(|b| pop[0].1 < b.1) {
            best = Some(pop[0].clone());
        }
        history.push(best.as_ref().map(|b| b.1).unwrap_or(f64::INFINITY));
        let elites = &pop[..n_elite];
        for t in 0..h {
            let ma = elites.iter().map(|e| e.0[t].a).sum::<f64>() / n_elite as f64;
            let mw = elites.iter().map(|e| e.0[t].omega).sum::<f64>() / n_elite as f64;
            let va = elites.iter().map(|e| (e.0[t].a - ma).powi(2)).sum::<f64>() / n_elite as f64;
            let vw = elites.iter().map(|e| (e.0[t].omega - mw).powi(2)).sum::<f64>() / n_elite as f64;
            mean_a[t] = ma;
            mean_w[t] = mw;
            std_a[t] = va.sqrt().max(cfg.min_accel_std);
            std_w[t] = vw.sqrt().max(cfg.min_omega_std);
        }
    }
    let (controls, value) = best.unwrap_or_else(|| (vec![ControlInput::ZERO; h], f64::INFINITY));
    CemResult { controls, value, history }
}

/// Full policy search on the belief with common random numbers across candidates.
pub fn cem_optimize(
    bel: &ParticleSet,
    signals: SignalPairBinary,
    carried: Option<&[ControlInput]>,
    env: &PlanEnv<'_>,
    seed: u64,
) -> (Vec<ControlInput>, EfeBreakdown) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let parts = plan_particles(bel, env.policy.plan_particles, &mut rng);
    let eval_seed: u64 = rng.random();
    let h = env.policy.horizon;
    let mut best_efe = EfeBreakdown::default();
    let mut best_g = f64::INFINITY;
    let res = cem_minimize(h, env.policy, &env.scene.bounds, carried, seed.rotate_left(17), |c| {
        let mut r = ChaCha8Rng::seed_from_u64(eval_seed);
        let (efe, _) = rollout(parts.clone(), c, signals, bel.ego, env, false, &mut r);
        let g = efe.g();
        if g < best_g {
            best_g = g;
            best_efe = efe;
        }
        g
    });
    (res.controls, best_efe)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurpriseState {
    pub e: f64,
    pub lambda: f64,
    pub threshold: f64,
}

impl SurpriseState {
    pub fn new(lambda: f64, threshold: f64) -> Self {
        Self { e: 0.0, lambda, threshold }
    }

    /// Adds `lambda * epsilon`; returns whether the threshold is reached.
    pub fn accumulate(&mut self, epsilon: f64) -> bool {
        self.e += self.lambda * epsilon.max(0.0);
        self.e >= self.threshold
    }

    pub fn reset(&mut self) {
        self.e = 0.0;
    }
}

#[derive(Clone, Debug)]
pub struct SelectOutcome {
    pub controls: Vec<ControlInput>,
    pub replanned: bool,
    pub epsilon: f64,
    /// Breakdown of the carried policy used for the surprise update.
    pub efe: EfeBreakdown,
    /// Breakdown of the newly optimized policy after a replan.
    pub replan_efe: Option<EfeBreakdown>,
}

/// Surprise accumulation followed by either a full re-plan or a one-step extension.
///
/// `remaining` holds the `H-1` unexecuted controls of the current policy.
pub fn accumulate_and_select(
    sur: &mut SurpriseState,
    bel: &ParticleSet,
    remaining: &[ControlInput],
    signals: SignalPairBinary,
    env: &PlanEnv<'_>,
    force_replan: bool,
    seed: u64,
) -> SelectOutcome {
    let h = env.policy.horizon;
    let held = remaining.last().copied().unwrap_or(ControlInput::ZERO);
    let mut shifted: Vec<ControlInput> = remaining.iter().copied().take(h.saturating_sub(1)).collect();
    while shifted.len() < h {
        shifted.push(held);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let parts = plan_particles(bel, env.policy.plan_particles, &mut rng);
    let step_seed: u64 = rng.random();
    let (efe, before) = rollout(parts, &shifted, signals, bel.ego, env, true, &mut rng);
    let epsilon = (h as f64 * max_log_preference(env.pref) - efe.g_prag).max(0.0);
    let crossed = sur.accumulate(epsilon);
    if crossed || force_replan {
        sur.reset();
        let (controls, replan_efe) = cem_optimize(bel, signals, Some(&shifted), env, seed.rotate_left(29));
        return SelectOutcome { controls, replanned: true, epsilon, efe, replan_efe: Some(replan_efe) };
    }
    let before = before.unwrap_or_default();
    let mut best_u = held;
    let mut best_g = f64::INFINITY;
    let candidates = std::iter::once(held)
        .chain(env.policy.extension_accels.iter().map(|&a| ControlInput::new(a, 0.0)));
    for u in candidates {
        let u = env.scene.bounds.clamp_control(u);
        let mut r = ChaCha8Rng::seed_from_u64(step_seed);
        let mut parts = before.clone();
        let action = AgentAction::new(u, signals);
        predict_step(&mut parts, &action, &[], bel.ego, env, &mut r);
        let sc = score_step(&parts, bel.ego, env, &mut r);
        let g = -sc.prag - sc.epist_kin - sc.epist_sig;
        if g < best_g {
            best_g = g;
            best_u = u;
        }
    }
    let mut controls = shifted;
    if let Some(last) = controls.last_mut() {
        *last = best_u;
    }
    SelectOutcome { controls, replanned: false, epsilon, efe, replan_efe: None }
}

/// Inputs to signal selection derived from the belief.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalContext {
    /// Mean belief that the other agent would yield.
    pub yield_mean: f64,
    /// Mean belief that the other agent is prompting.
    pub other_prompt_mean: f64,
    /// Probability that the ego holds priority (or arrives first).
    pub priority_prob: f64,
    /// Probability that the ego has completed its stop.
    pub stopped_prob: f64,
}

pub fn signal_context(bel: &ParticleSet, env: &PlanEnv<'_>) -> SignalContext {
    let ego = bel.ego;
    let [prompt, yield_mean] = bel.other_signal_mean();
    let priority_prob = if env.norms.priority_enabled {
        bel.estimate(|s| s[ego].has_priority as u8 as f64)
    } else {
        bel.estimate(|s| arrival_priority_prob(s, ego, env.scene, env.pref.arrival_sigmoid_slope))
    };
    SignalContext {
        yield_mean,
        other_prompt_mean: prompt,
        priority_prob,
        stopped_prob: bel.estimate(|s| s[ego].has_stopped as u8 as f64),
    }
}

/// Value of each signal pair over one step; larger is better.
pub fn signal_values(c: &SignalContext, pref: &PreferenceConfig, norms: &NormConfig) -> [(SignalPairBinary, f64); 4] {
    let mult = if norms.stop_signs_enabled && c.stopped_prob < 0.5 {
        pref.prestop_signal_factor
    } else {
        1.0
    };
    let cost = pref.g_gamma.abs() * mult;
    let other_prompts = c.other_prompt_mean > 0.5;
    let value = |pa: bool, py: bool| {
        let mut v = 0.0;
        if pa {
            v += bernoulli_entropy(c.yield_mean.clamp(0.0, 1.0)) - cost;
        }
        if py {
            v -= cost;
            v += pref.g_w * c.priority_prob;
        } else if other_prompts {
            v += pref.g_w * (1.0 - c.priority_prob);
        }
        v
    };
    [(false, false), (true, false), (false, true), (true, true)]
        .map(|(a, y)| (SignalPairBinary::new(a, y), value(a, y)))
}

/// Chooses the signal pair for this tick; ties go to no signal.
pub fn select_signals(c: &SignalContext, pref: &PreferenceConfig, norms: &NormConfig) -> SignalPairBinary {
    if !norms.communication_enabled {
        return SignalPairBinary::NONE;
    }
    let vals = signal_values(c, pref, norms);
    let mut best = vals[0];
    for v in &vals[1..] {
        if v.1 > best.1 + 1e-12 {
            best = *v;
        }
    }
    best.0
}
