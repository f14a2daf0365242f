//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero if any fails.
//!
//! Batch criteria use 20 seeds per condition with the default configuration.
//! Set `AIF_ACCEPTANCE_REPS` to change the count and `AIF_ACCEPTANCE_JOBS` to limit threads.

use std::f64::consts::{FRAC_PI_2, LN_2};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use aif_traffic::belief::{
    kernel_update_dim, signal_posterior_update, systematic_indices, ParticleSet, SignalBelief, NEGATIVE_PSEUDO_COUNT,
};
use aif_traffic::config::Config;
use aif_traffic::kinematics::{ControlInput, RoadFrame, VehicleState};
use aif_traffic::model::{
    bernoulli_entropy, harmonic_mean, process_observe, process_step, update_h, update_priority, AgentAction, AgentId,
    FullState, NoiseConfig, NormConfig, Scene, SignalPairBelief, SignalPairBinary, TransitionCtx, LN_2PI,
};
use aif_traffic::policy::g_prompt;
use aif_traffic::preference::{
    log_comm_components, log_norm_components, log_preference, max_log_preference, PrefCtx, PreferenceConfig,
};
use aif_traffic::simulation::{
    agent_seeds, initial_world, run_simulation, run_simulation_with_seeds, OutcomeKind, Regime, RunResult,
};
use aif_traffic::stats::{
    mean_first_replan, run_batch_with, wilson_interval, BatchOptions, ConditionGrid, OutcomeTable, RunRecord,
    COOPERATIVE_DELTAS,
};

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

/// Collects failed checks of a criterion.
#[derive(Default)]
struct Checks {
    total: usize,
    failed: Vec<String>,
}

impl Checks {
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        self.total += 1;
        if !ok {
            self.failed.push(what.into());
        }
    }

    fn close(&mut self, a: f64, b: f64, tol: f64, what: &str) {
        self.check((a - b).abs() <= tol, format!("{what}: {a} vs {b}"));
    }

    fn verdict(self) -> Verdict {
        if self.failed.is_empty() {
            Verdict::new(true, format!("{} checks", self.total))
        } else {
            Verdict::new(false, format!("{}/{} failed: {}", self.failed.len(), self.total, self.failed.join("; ")))
        }
    }
}

/// Per-run quantities kept from a batch.
struct Probe {
    ticks: usize,
    epsilon_ok: bool,
    flags_monotone: bool,
    /// `(t, collision component)` of agent A's carried policy.
    collision_a: Vec<(f64, f64)>,
    replans_a: Vec<f64>,
}

fn probe(res: &RunResult, adversarial: bool) -> Probe {
    let modeled = |id: AgentId| !(adversarial && id == AgentId::B);
    let mut epsilon_ok = true;
    let mut ticks = 0;
    for r in res.log.iter().filter(|r| modeled(r.agent)) {
        ticks += 1;
        epsilon_ok &= r.epsilon.is_finite() && r.epsilon >= 0.0;
    }
    let flags_monotone = res.world.windows(2).all(|w| {
        AgentId::ALL.into_iter().all(|id| {
            (!w[0][id].has_stopped || w[1][id].has_stopped) && (!w[0][id].has_priority || w[1][id].has_priority)
        })
    });
    let collision_a = res
        .log
        .iter()
        .filter(|r| r.agent == AgentId::A)
        .filter_map(|r| r.prag_collision.map(|c| (r.t, c)))
        .collect();
    Probe { ticks, epsilon_ok, flags_monotone, collision_a, replans_a: res.replan_times[0].clone() }
}

struct Batch {
    table: OutcomeTable,
    records: Vec<RunRecord>,
    probes: Vec<Option<Probe>>,
}

impl Batch {
    fn prop(&self, regime: Regime, d: f64, kind: OutcomeKind) -> f64 {
        self.table.get(regime, d).map_or(f64::NAN, |r| r.proportion(kind))
    }

    fn runs(&self, regime: Regime, d: f64) -> impl Iterator<Item = (&RunRecord, Option<&Probe>)> {
        self.records
            .iter()
            .zip(&self.probes)
            .filter(move |(r, _)| r.regime == regime && r.delta_d0 == d)
            .map(|(r, p)| (r, p.as_ref()))
    }
}

fn env_usize(name: &str) -> Option<usize> {
    std::env::var(name).ok().and_then(|v| v.parse().ok())
}

fn run_grids(reps: usize, jobs: usize) -> Batch {
    let base = Config::default();
    let grids = [
        ConditionGrid { regimes: vec![Regime::Baseline], delta_d0: vec![-25.0, -15.0, -5.0, 0.0], reps },
        ConditionGrid::cooperative(&[Regime::Norms, Regime::Communication], reps),
        ConditionGrid { regimes: vec![Regime::NormsCommunication], delta_d0: vec![0.0], reps },
        ConditionGrid { regimes: vec![Regime::Adversarial], delta_d0: vec![-8.0, -4.5, -4.0, -1.0], reps },
    ];
    let mut all = Batch { table: OutcomeTable::default(), records: Vec::new(), probes: Vec::new() };
    for grid in &grids {
        let started = Instant::now();
        let adversarial = grid.regimes.contains(&Regime::Adversarial);
        let opts = BatchOptions { base_seed: 0, jobs, stop: None };
        let (batch, probes) =
            run_batch_with(&base, grid, opts, |r| probe(r, adversarial), |_, _| {}).expect("grid is not empty");
        eprintln!(
            "  ran {} runs of {:?} in {:.0} s",
            batch.records.len(),
            grid.regimes,
            started.elapsed().as_secs_f64()
        );
        all.table.rows.extend(batch.table.rows);
        all.records.extend(batch.records);
        all.probes.extend(probes);
    }
    all
}

// ---------------------------------------------------------------------------
// criterion 1
// ---------------------------------------------------------------------------

fn ideal_state() -> FullState {
    let mut s = FullState::default();
    s[AgentId::A].kin = VehicleState::new(-65.0, 0.0, 0.0, 0.0, 10.0);
    s[AgentId::B].kin = VehicleState::new(0.0, -90.0, FRAC_PI_2, 0.0, 10.0);
    s
}

fn world_at(d_a: f64, d_b: f64) -> FullState {
    let mut cfg = Config::default();
    cfg.scenario.d_a0 = d_a;
    cfg.scenario.delta_d0 = d_b - d_a;
    initial_world(&cfg)
}

fn kalman_deviation() -> f64 {
    let (q, r) = (0.3f64, 0.5f64);
    let n = 400;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut truth = 0.0f64;
    let (mut km, mut kp) = (0.0f64, 1.0f64);
    let mut xs: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let mut w = vec![1.0 / n as f64; n];
    let mut worst = 0.0f64;
    for _ in 0..50 {
        truth += q * rng.sample::<f64, _>(StandardNormal);
        let obs = truth + r * rng.sample::<f64, _>(StandardNormal);
        kp += q * q;
        let k = kp / (kp + r * r);
        km += k * (obs - km);
        kp *= 1.0 - k;
        for x in &mut xs {
            *x += q * rng.sample::<f64, _>(StandardNormal);
        }
        let mut logw: Vec<f64> = w.iter().map(|x: &f64| x.ln()).collect();
        kernel_update_dim(&mut xs, &mut logw, &w, obs, r, q, &mut rng);
        let mx = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let tot: f64 = logw.iter().map(|l| (l - mx).exp()).sum();
        w = logw.iter().map(|l| (l - mx).exp() / tot).collect();
        let pm: f64 = xs.iter().zip(&w).map(|(x, w)| x * w).sum();
        let ess = 1.0 / w.iter().map(|w| w * w).sum::<f64>();
        worst = worst.max((pm - km).abs() / (kp / ess).sqrt());
        if ess < 0.5 * n as f64 {
            let idx = systematic_indices(&w, n, rng.random());
            xs = idx.iter().map(|&i| xs[i]).collect();
            w = vec![1.0 / n as f64; n];
        }
    }
    worst
}

fn criterion_1() -> Verdict {
    let mut c = Checks::default();

    c.close(bernoulli_entropy(0.5), LN_2, 1e-12, "H_B(0.5)");
    c.close(bernoulli_entropy(1.0), 0.0, 1e-12, "H_B(1)");
    c.close(bernoulli_entropy(0.0), 0.0, 1e-12, "H_B(0)");
    c.close(bernoulli_entropy(0.2), -(0.2f64 * 0.2f64.ln() + 0.8 * 0.8f64.ln()), 1e-12, "H_B(0.2)");

    let (lo, hi) = wilson_interval(25, 50, 1.96).unwrap();
    c.close(lo, 0.3664, 5e-4, "wilson lo 25/50");
    c.close(hi, 0.6336, 5e-4, "wilson hi 25/50");
    c.check(wilson_interval(0, 50, 1.96).unwrap().0 == 0.0, "wilson lo 0/50");
    c.check(wilson_interval(50, 50, 1.96).unwrap().1 == 1.0, "wilson hi 50/50");
    c.check(wilson_interval(0, 0, 1.96).is_err(), "wilson n=0 rejected");

    c.close(harmonic_mean(&[1.0, 1.0, 1.0]), 1.0, 1e-15, "harmonic of ones");
    c.close(0.02f64.min(harmonic_mean(&[1.0, 1.0, 1.0])), 0.02, 1e-15, "projected 0.02");
    c.close(1f64.min(harmonic_mean(&[1.0, 0.02, 0.02])), 0.0297, 1e-4, "projected 0.0297");

    let b = signal_posterior_update(SignalBelief::default(), true);
    c.close(b.mean(), 0.9, 1e-12, "Beta(1,1) observe 1");
    c.close(signal_posterior_update(SignalBelief::default(), false).mean(), 0.4651, 1e-4, "Beta(1,1) observe 0");
    c.close(signal_posterior_update(SignalBelief::new(9.0, 1.0), false).mean(), 0.8867, 1e-4, "Beta(9,1) observe 0");

    let norms = NormConfig::default();
    let f = RoadFrame::new(0.0);
    c.check(update_h(&VehicleState::new(-10.0, 0.0, 0.0, 0.0, 0.2), false, &f, &norms), "f_h slow near line");
    c.check(!update_h(&VehicleState::new(-2.0, 0.0, 0.0, 0.0, 0.0), false, &f, &norms), "f_h outside region");
    c.check(update_h(&VehicleState::new(50.0, 0.0, 0.0, 0.0, 9.0), true, &f, &norms), "f_h monotone");
    let scene = Scene::default();
    let stop = NormConfig { stop_signs_enabled: true, priority_enabled: true, ..NormConfig::default() };
    let mut s = world_at(-4.5, -6.0);
    s[AgentId::A].kin.v = 0.3;
    let mut n = s;
    n[AgentId::A].kin.v = 0.1;
    n[AgentId::A].has_stopped = true;
    c.check(update_priority(&n, &s, false, AgentId::A, AgentId::B, &scene, &stop), "f_lead stop sign");
    let no_stop = NormConfig { priority_enabled: true, ..NormConfig::default() };
    let s = world_at(-21.8, -32.0);
    let mut n = s;
    n[AgentId::A].kin.x = -19.8;
    n[AgentId::B].kin.y = -30.0;
    c.check(update_priority(&n, &s, false, AgentId::A, AgentId::B, &scene, &no_stop), "f_lead arrival ratio");
    c.check(update_priority(&world_at(-30.0, -30.0), &world_at(-30.0, -30.0), true, AgentId::A, AgentId::B, &scene, &no_stop), "f_lead monotone");

    let cfg = PreferenceConfig::default();
    let plain = NormConfig::default();
    let ctx = PrefCtx { scene: &scene, cfg: &cfg, norms: &plain };
    let ideal = log_preference(&ideal_state(), AgentId::A, &ctx, 0.5);
    let by_hand = -(0.2f64.ln() * 2.0 + 0.02f64.ln() + 0.3f64.ln()) - 2.0 * LN_2PI;
    c.close(ideal, by_hand, 1e-12, "ideal log preference");
    c.close(ideal, max_log_preference(&cfg), 1e-12, "ideal is the maximum");
    let mut o = ideal_state();
    o[AgentId::A].signal = SignalPairBelief::new(1.0, 1.0);
    c.close(log_preference(&o, AgentId::A, &ctx, 0.5) - ideal, -0.25, 1e-12, "both signals cost");
    let stop_only = NormConfig { stop_signs_enabled: true, ..NormConfig::default() };
    let sctx = PrefCtx { scene: &scene, cfg: &cfg, norms: &stop_only };
    let mut o = ideal_state();
    o[AgentId::A].kin.x = -3.0;
    c.close(log_preference(&o, AgentId::A, &sctx, 0.5) - ideal, -10000.0, 1e-9, "stop violation");
    let mut o = ideal_state();
    o[AgentId::A].signal.prompting = 1.0;
    c.close(log_comm_components(&o, AgentId::A, &sctx, 0.5), -1.25, 1e-12, "prompt before stopping");
    o[AgentId::A].has_stopped = true;
    c.close(log_comm_components(&o, AgentId::A, &sctx, 0.5), -0.125, 1e-12, "prompt after stopping");
    let prio = NormConfig { priority_enabled: true, ..NormConfig::default() };
    let pctx = PrefCtx { scene: &scene, cfg: &cfg, norms: &prio };
    let mut o = ideal_state();
    o[AgentId::A].kin.v = 11.0;
    c.close(log_norm_components(&o, AgentId::A, &pctx), -2381.0, 0.05, "speeding v=11");
    o[AgentId::A].kin.v = 10.2;
    c.close(log_norm_components(&o, AgentId::A, &pctx), 0.0, 0.0, "v=10.2 within limit");
    let mut o = ideal_state();
    o[AgentId::A].kin.x = -3.5;
    o[AgentId::B].kin.y = -10.0;
    c.close(log_norm_components(&o, AgentId::A, &pctx), -5000.0, 1e-9, "priority violation");
    let all = NormConfig {
        stop_signs_enabled: true,
        priority_enabled: true,
        communication_enabled: true,
        ..NormConfig::default()
    };
    let actx = PrefCtx { scene: &scene, cfg: &cfg, norms: &all };
    let mut o = ideal_state();
    o[AgentId::A].has_stopped = true;
    o[AgentId::A].has_priority = true;
    o[AgentId::A].signal.yielding = 1.0;
    c.close(log_comm_components(&o, AgentId::A, &actx, 0.5), -10000.125, 1e-9, "yield with priority");

    let worst = kalman_deviation();
    c.check(worst < 3.0, format!("particle vs Kalman {worst:.2} standard errors"));

    let (mut lo, mut hi) = (1e-9, 0.5);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let h = -(mid * f64::ln(mid) + (1.0 - mid) * f64::ln(1.0 - mid));
        if h < 0.125 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    c.check((lo - 0.027).abs() <= 0.003, format!("prompt crossing {lo:.4}"));
    c.check(g_prompt(lo - 1e-4, -0.125) < 0.0 && g_prompt(lo + 1e-4, -0.125) > 0.0, "g_prompt changes sign at crossing");
    c.close(g_prompt(0.5, -0.125), 0.5681, 1e-4, "g_prompt(0.5)");

    let loss = |m: f64| {
        let k = 4000;
        (0..k)
            .map(|i| {
                let g = (i as f64 + 0.5) / k as f64;
                ((1.0 - g).powf(m) - (1.0 - g.powi(10))).powi(2)
            })
            .sum::<f64>()
    };
    let (mut lo, mut hi) = (0.0f64, 2.0f64);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let a = hi - r * (hi - lo);
        let b = lo + r * (hi - lo);
        if loss(a) < loss(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let m = 0.5 * (lo + hi);
    c.check((m - 0.15).abs() <= 0.02, format!("least-squares pseudo-count {m:.3}"));
    c.check((m - NEGATIVE_PSEUDO_COUNT).abs() <= 0.02, "configured pseudo-count matches fit");

    c.verdict()
}

// ---------------------------------------------------------------------------
// criterion 2
// ---------------------------------------------------------------------------

fn weight_sum_deviation() -> f64 {
    let cfg = Config::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut world = initial_world(&cfg);
    let mut worst = 0.0f64;
    for ego in AgentId::ALL {
        let mut set = ParticleSet::from_observation(&world, ego, 100, &cfg.noise, &mut rng).unwrap();
        let ctx = TransitionCtx {
            scene: &cfg.scene,
            noise: &cfg.noise,
            norms: &cfg.norms,
            sigma_gamma: cfg.noise.sigma_gamma_0,
        };
        for _ in 0..40 {
            let actions: std::collections::HashMap<_, _> = AgentId::ALL
                .into_iter()
                .map(|id| {
                    let u = ControlInput::new(rng.random_range(-3.0..1.0), 0.0);
                    let sig = SignalPairBinary::new(rng.random_bool(0.2), rng.random_bool(0.2));
                    (id, AgentAction::new(u, sig))
                })
                .collect();
            set.predict(&actions[&ego], &ctx, &[], &mut rng).unwrap();
            worst = worst.max((set.weight_sum() - 1.0).abs());
            world = process_step(&world, &actions, &cfg.scene, &cfg.norms).unwrap();
            set.update(&process_observe(&world), &cfg.noise, &mut rng).unwrap();
            worst = worst.max((set.weight_sum() - 1.0).abs());
        }
    }
    worst
}

fn mirrored_run_deviation() -> (bool, f64) {
    // noise is drawn in global coordinates, so only a noise-free run mirrors path by path
    let mut cfg = Config::default();
    cfg.scenario.delta_d0 = 0.0;
    cfg.noise = NoiseConfig { sigma_gamma: cfg.noise.sigma_gamma, sigma_gamma_0: cfg.noise.sigma_gamma_0, ..NoiseConfig::zero() };
    cfg.policy.init_omega_std = 0.0;
    cfg.policy.min_omega_std = 0.0;
    let [sa, sb] = agent_seeds(0);
    let r1 = run_simulation_with_seeds(&cfg, [sa, sb]).unwrap();
    let r2 = run_simulation_with_seeds(&cfg, [sb, sa]).unwrap();
    let swapped = |k: OutcomeKind| match k {
        OutcomeKind::AFirst => OutcomeKind::BFirst,
        OutcomeKind::BFirst => OutcomeKind::AFirst,
        k => k,
    };
    let mut dev = 0.0f64;
    for (w1, w2) in r1.world.iter().zip(&r2.world) {
        for id in AgentId::ALL {
            dev = dev.max((cfg.scene.d_long(w1, id) - cfg.scene.d_long(w2, id.other())).abs());
            dev = dev.max((w1[id].kin.v - w2[id.other()].kin.v).abs());
        }
    }
    let same = r1.world.len() == r2.world.len()
        && r2.outcome.kind == swapped(r1.outcome.kind)
        && r1.replan_times[0] == r2.replan_times[1]
        && r1.replan_times[1] == r2.replan_times[0];
    (same, dev)
}

fn criterion_2(b: &Batch) -> Verdict {
    let mut c = Checks::default();
    let probes: Vec<&Probe> = b.probes.iter().flatten().collect();
    let ticks: usize = probes.iter().map(|p| p.ticks).sum();
    c.check(probes.len() >= 100, format!("only {} runs", probes.len()));
    c.check(b.records.iter().all(|r| r.error.is_none()), "some runs failed");
    let bad = probes.iter().filter(|p| !p.epsilon_ok).count();
    c.check(bad == 0, format!("epsilon negative or not finite in {bad} runs"));
    let bad = probes.iter().filter(|p| !p.flags_monotone).count();
    c.check(bad == 0, format!("stop/priority flags reverted in {bad} runs"));

    let w = weight_sum_deviation();
    c.check(w <= 1e-9, format!("weight sum off by {w:e}"));

    let mut cfg = Config::default();
    cfg.scenario.delta_d0 = -3.0;
    cfg.scenario.seed = 17;
    cfg.apply_regime();
    let a = run_simulation(&cfg).unwrap();
    let again = run_simulation(&cfg).unwrap();
    let bitwise = serde_json::to_string(&a.log).unwrap() == serde_json::to_string(&again.log).unwrap()
        && a.outcome == again.outcome;
    c.check(bitwise, "seeded runs differ");

    let (mirrored, dev) = mirrored_run_deviation();
    c.check(mirrored && dev <= 1e-6, format!("mirror run deviates by {dev:e}"));

    let v = c.verdict();
    Verdict::new(v.pass, format!("{}; {} runs, {} agent ticks, weight error {:.1e}, mirror error {:.1e}", v.detail, probes.len(), ticks, w, dev))
}

// ---------------------------------------------------------------------------
// criteria 3-8
// ---------------------------------------------------------------------------

fn criterion_3(b: &Batch) -> Verdict {
    let a25 = b.prop(Regime::Baseline, -25.0, OutcomeKind::AFirst);
    let a15 = b.prop(Regime::Baseline, -15.0, OutcomeKind::AFirst);
    let d0 = b.prop(Regime::Baseline, 0.0, OutcomeKind::Deadlock);
    let d25 = b.prop(Regime::Baseline, -25.0, OutcomeKind::Deadlock);
    let pass = a25 >= 0.9 && a15 >= 0.9 && (0.2..=0.8).contains(&d0) && d0 > d25 && d25 <= 0.05;
    Verdict::new(
        pass,
        format!("A first {a25:.2} at -25, {a15:.2} at -15; deadlock {d0:.2} at 0 (need 0.2-0.8), {d25:.2} at -25"),
    )
}

fn criterion_4(b: &Batch) -> Verdict {
    let base = b.prop(Regime::Baseline, 0.0, OutcomeKind::Deadlock);
    let norms = b.prop(Regime::Norms, 0.0, OutcomeKind::Deadlock);
    let (mut col, mut n) = (0, 0);
    for &d in &COOPERATIVE_DELTAS {
        let row = b.table.get(Regime::Norms, d).expect("norms row");
        col += row.count(OutcomeKind::Collision);
        n += row.n;
    }
    let col_p = col as f64 / n.max(1) as f64;
    let pass = norms < base && norms <= 0.45 && col_p <= 0.05;
    Verdict::new(
        pass,
        format!("deadlock at 0: norms {norms:.2} vs baseline {base:.2}; collisions over grid {col}/{n} = {col_p:.3}"),
    )
}

fn criterion_5(b: &Batch) -> Verdict {
    let mut worst = (0.0f64, 0.0f64);
    for &d in &COOPERATIVE_DELTAS {
        let p = b.prop(Regime::Communication, d, OutcomeKind::Deadlock)
            + b.prop(Regime::Communication, d, OutcomeKind::Collision);
        if p >= worst.0 {
            worst = (p, d);
        }
    }
    let pattern = b.records.iter().filter(|r| r.regime == Regime::Communication && r.prompt_then_yield).count();
    let pass = worst.0 <= 0.05 && pattern >= 1;
    Verdict::new(
        pass,
        format!("max deadlock+collision {:.2} (at {}); prompt then yield in {pattern} runs", worst.0, worst.1),
    )
}

fn criterion_6(b: &Batch) -> Verdict {
    let nc = b.prop(Regime::NormsCommunication, 0.0, OutcomeKind::Deadlock);
    let norms = b.prop(Regime::Norms, 0.0, OutcomeKind::Deadlock);
    Verdict::new(nc <= 0.1 && nc <= norms, format!("deadlock at 0: norms+communication {nc:.2}, norms {norms:.2}"))
}

fn criterion_7(b: &Batch) -> Verdict {
    let col = |d| b.prop(Regime::Adversarial, d, OutcomeKind::Collision);
    let (c8, c45, c1) = (col(-8.0), col(-4.5), col(-1.0));
    let rp = |d| mean_first_replan(&b.records, Regime::Adversarial, d, AgentId::A).map(|m| m.0);
    let (r45, r1) = (rp(-4.5), rp(-1.0));
    let later = matches!((r45, r1), (Some(x), Some(y)) if x > y);
    let pass = c45 > c8 && c45 > c1 && later;
    Verdict::new(
        pass,
        format!(
            "collision {c8:.2} at -8, {c45:.2} at -4.5, {c1:.2} at -1; mean first replan {} at -4.5 vs {} at -1",
            r45.map_or("-".into(), |t| format!("{t:.2}s")),
            r1.map_or("-".into(), |t| format!("{t:.2}s"))
        ),
    )
}

fn criterion_8(b: &Batch, dt: f64) -> Verdict {
    // trailing agent B replans first at a 5 m lead of A
    let runs: Vec<&RunRecord> = b.runs(Regime::Baseline, -5.0).map(|(r, _)| r).collect();
    let trailing_first = runs
        .iter()
        .filter(|r| match (r.first_replan_b, r.first_replan_a) {
            (Some(tb), Some(ta)) => tb < ta,
            (Some(_), None) => true,
            _ => false,
        })
        .count();
    let sig_a = 2 * trailing_first > runs.len();

    // collision component over the second before the second replan, averaged over collision runs
    let window = (1.0 / dt).round() as usize;
    let mut sums = vec![0.0; window + 1];
    let mut count = 0usize;
    let mut single = 0usize;
    for (r, p) in b.runs(Regime::Adversarial, -4.0) {
        let Some(p) = p else { continue };
        if r.kind != Some(OutcomeKind::Collision) || p.replans_a.len() < 2 {
            continue;
        }
        let t2 = p.replans_a[1];
        let Some(end) = p.collision_a.iter().position(|(t, _)| (t - t2).abs() < 1e-6) else { continue };
        if end < window {
            continue;
        }
        let seg: Vec<f64> = p.collision_a[end - window..=end].iter().map(|x| x.1).collect();
        for (s, v) in sums.iter_mut().zip(&seg) {
            *s += v;
        }
        single += seg.windows(2).all(|w| w[1] <= w[0]) as usize;
        count += 1;
    }
    let means: Vec<f64> = sums.iter().map(|s| s / count.max(1) as f64).collect();
    let sig_b = count > 0 && means.windows(2).all(|w| w[1] <= w[0]);
    Verdict::new(
        sig_a && sig_b,
        format!(
            "trailing agent replans first in {trailing_first}/{} runs at -5; mean collision component before 2nd replan over {count} runs [{}] ({single} individually monotone)",
            runs.len(),
            means.iter().map(|m| format!("{m:.4}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn main() {
    let reps = env_usize("AIF_ACCEPTANCE_REPS").unwrap_or(20);
    let jobs = env_usize("AIF_ACCEPTANCE_JOBS")
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let started = Instant::now();
    let mut verdicts = vec![(1, criterion_1())];
    eprintln!("running batches with {reps} seeds per condition on {jobs} threads");
    let batch = run_grids(reps, jobs);
    let dt = Config::default().scene.dt;
    verdicts.push((2, criterion_2(&batch)));
    verdicts.push((3, criterion_3(&batch)));
    verdicts.push((4, criterion_4(&batch)));
    verdicts.push((5, criterion_5(&batch)));
    verdicts.push((6, criterion_6(&batch)));
    verdicts.push((7, criterion_7(&batch)));
    verdicts.push((8, criterion_8(&batch, dt)));
    for (n, v) in &verdicts {
        println!("criterion {n}: {} - {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    let failed = verdicts.iter().filter(|(_, v)| !v.pass).count();
    println!("acceptance: {}/{} passed in {:.0} s", verdicts.len() - failed, verdicts.len(), started.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
