//! Log preference prior over observations.

use serde::{Deserialize, Serialize};

use crate::kinematics::{rect_clearance, rect_overlap};
use crate::model::{gaussian_logpdf, AgentId, FullState, NormConfig, Scene};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreferenceConfig {
    pub mu_v: f64,
    pub sigma_v: f64,
    pub sigma_a: f64,
    pub sigma_omega: f64,
    pub sigma_lat: f64,
    /// Lower bound of the lateral log term.
    pub lat_log_floor: f64,
    /// Log value of an observed overlap between the two vehicles.
    pub g_collision: f64,
    /// Log value of zero clearance in the graded near-miss term.
    pub g_safety: f64,
    /// Clearance at which the near-miss term vanishes [m].
    pub safety_distance: f64,
    pub g_s: f64,
    pub g_gamma: f64,
    pub g_w: f64,
    pub speed_limit_soft: f64,
    pub speed_limit_scale: f64,
    /// Multiplier on signalling cost before stopping at a stop sign.
    pub prestop_signal_factor: f64,
    /// Slope of the arrival-order sigmoid used without a priority rule.
    pub arrival_sigmoid_slope: f64,
}

impl Default for PreferenceConfig {
    fn default() -> Self {
        Self {
            mu_v: 10.0,
            sigma_v: 0.2,
            sigma_a: 0.2,
            sigma_omega: 0.02,
            sigma_lat: 0.3,
            lat_log_floor: -50.0,
            g_collision: -1.0e5,
            g_safety: -1.0e4,
            safety_distance: 2.0,
            g_s: -10000.0,
            g_gamma: -0.125,
            g_w: -10000.0,
            speed_limit_soft: 10.278,
            speed_limit_scale: 4.2,
            prestop_signal_factor: 10.0,
            arrival_sigmoid_slope: 3.0,
        }
    }
}

/// Additive components of `ln p(o)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PreferenceBreakdown {
    pub speed: f64,
    pub accel: f64,
    pub steer: f64,
    pub lateral: f64,
    pub collision: f64,
    pub safety: f64,
    pub speed_limit: f64,
    pub stop: f64,
    pub priority: f64,
    pub comm: f64,
    pub coop: f64,
}

impl PreferenceBreakdown {
    pub fn total(&self) -> f64 {
        self.comfort() + self.collision + self.safety + self.norms() + self.comm + self.coop
    }

    pub fn comfort(&self) -> f64 {
        self.speed + self.accel + self.steer + self.lateral
    }

    pub fn norms(&self) -> f64 {
        self.speed_limit + self.stop + self.priority
    }

    pub fn add_scaled(&mut self, o: &PreferenceBreakdown, k: f64) {
        self.speed += k * o.speed;
        self.accel += k * o.accel;
        self.steer += k * o.steer;
        self.lateral += k * o.lateral;
        self.collision += k * o.collision;
        self.safety += k * o.safety;
        self.speed_limit += k * o.speed_limit;
        self.stop += k * o.stop;
        self.priority += k * o.priority;
        self.comm += k * o.comm;
        self.coop += k * o.coop;
    }
}

#[derive(Clone, Copy, Debug)]
pub struct PrefCtx<'a> {
    pub scene: &'a Scene,
    pub cfg: &'a PreferenceConfig,
    pub norms: &'a NormConfig,
}

/// `ln p(o)` for agent `ego`.
///
/// `coop_draw` is a uniform number used to sample the arrival-order priority
/// when no priority rule is active.
pub fn log_preference(o: &FullState, ego: AgentId, ctx: &PrefCtx<'_>, coop_draw: f64) -> f64 {
    preference_breakdown(o, ego, ctx, coop_draw).total()
}

pub fn preference_breakdown(
    o: &FullState,
    ego: AgentId,
    ctx: &PrefCtx<'_>,
    coop_draw: f64,
) -> PreferenceBreakdown {
    let cfg = ctx.cfg;
    let me = &o[ego];
    let lat = ctx.scene.d_lat(o, ego);
    let (collision, safety) = log_collision_components(o, ctx);
    let (speed_limit, stop, priority) = log_norm_parts(o, ego, ctx);
    let (comm, coop) = log_comm_parts(o, ego, ctx, coop_draw);
    PreferenceBreakdown {
        speed: gaussian_logpdf(me.kin.v, cfg.mu_v, cfg.sigma_v),
        accel: gaussian_logpdf(me.control.a, 0.0, cfg.sigma_a),
        steer: gaussian_logpdf(me.control.omega, 0.0, cfg.sigma_omega),
        lateral: gaussian_logpdf(lat, 0.0, cfg.sigma_lat).max(cfg.lat_log_floor),
        collision,
        safety,
        speed_limit,
        stop,
        priority,
        comm,
        coop,
    }
}

/// Value of `ln p(o)` at the ideal observation.
pub fn max_log_preference(cfg: &PreferenceConfig) -> f64 {
    gaussian_logpdf(0.0, 0.0, cfg.sigma_v)
        + gaussian_logpdf(0.0, 0.0, cfg.sigma_a)
        + gaussian_logpdf(0.0, 0.0, cfg.sigma_omega)
        + gaussian_logpdf(0.0, 0.0, cfg.sigma_lat).max(cfg.lat_log_floor)
}

/// Overlap penalty and graded near-miss penalty.
pub fn log_collision_components(o: &FullState, ctx: &PrefCtx<'_>) -> (f64, f64) {
    let cfg = ctx.cfg;
    let g = &ctx.scene.geometry;
    let (ka, kb) = (&o[AgentId::A].kin, &o[AgentId::B].kin);
    let reach = g.length.hypot(g.width) + cfg.safety_distance;
    let (dx, dy) = (ka.x - kb.x, ka.y - kb.y);
    if dx * dx + dy * dy > reach * reach {
        return (0.0, 0.0);
    }
    if rect_overlap(ka, kb, g, g) {
        return (cfg.g_collision, cfg.g_safety);
    }
    if cfg.safety_distance <= 0.0 {
        return (0.0, 0.0);
    }
    let gap = rect_clearance(ka, kb, g, g);
    (0.0, cfg.g_safety * (1.0 - gap / cfg.safety_distance).max(0.0))
}

/// Speed-limit, stop-sign and priority components summed.
pub fn log_norm_components(o: &FullState, ego: AgentId, ctx: &PrefCtx<'_>) -> f64 {
    let (a, b, c) = log_norm_parts(o, ego, ctx);
    a + b + c
}

fn log_norm_parts(o: &FullState, ego: AgentId, ctx: &PrefCtx<'_>) -> (f64, f64, f64) {
    let cfg = ctx.cfg;
    let norms = ctx.norms;
    let me = &o[ego];
    let v = me.kin.v;
    let speed = if v > cfg.speed_limit_soft {
        cfg.g_s * (v - cfg.mu_v) / cfg.speed_limit_scale
    } else {
        0.0
    };
    let d = ctx.scene.d_long(o, ego);
    let stop = if norms.stop_signs_enabled && d >= norms.intersection_entry && !me.has_stopped {
        cfg.g_s
    } else {
        0.0
    };
    let mut priority = 0.0;
    if norms.priority_enabled && !me.has_priority {
        let d_other = ctx.scene.d_long(o, ego.other());
        let ahead = d > norms.intersection_entry.max(d_other - norms.trail_margin);
        let released = norms.communication_enabled && o[ego.other()].signal.yielding >= 0.5;
        if ahead && !released {
            priority = 0.5 * cfg.g_s;
        }
    }
    (speed, stop, priority)
}

/// Signalling cost plus cooperation penalty.
pub fn log_comm_components(o: &FullState, ego: AgentId, ctx: &PrefCtx<'_>, coop_draw: f64) -> f64 {
    let (a, b) = log_comm_parts(o, ego, ctx, coop_draw);
    a + b
}

/// Probability that `ego` arrives first, from time-to-arrival estimates.
pub fn arrival_priority_prob(o: &FullState, ego: AgentId, scene: &Scene, slope: f64) -> f64 {
    let other = ego.other();
    let r = |id: AgentId| {
        let d = scene.d_long(o, id);
        let v = o[id].kin.v.max(0.0);
        if v > 0.0 {
            d / v
        } else if d < 0.0 {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    };
    let x = slope * (r(ego) - r(other));
    if x.is_nan() {
        0.5
    } else {
        1.0 / (1.0 + (-x).exp())
    }
}

fn log_comm_parts(o: &FullState, ego: AgentId, ctx: &PrefCtx<'_>, coop_draw: f64) -> (f64, f64) {
    let cfg = ctx.cfg;
    let norms = ctx.norms;
    let me = &o[ego];
    let sig = me.signal.to_binary();
    let active = sig.prompting as u8 + sig.yielding as u8;
    let mut comm = cfg.g_gamma * active as f64;
    if norms.stop_signs_enabled && !me.has_stopped {
        comm *= cfg.prestop_signal_factor;
    }
    if !norms.communication_enabled {
        return (comm, 0.0);
    }
    let p = if norms.priority_enabled {
        me.has_priority
    } else {
        coop_draw < arrival_priority_prob(o, ego, ctx.scene, cfg.arrival_sigmoid_slope)
    };
    let other_prompts = o[ego.other()].signal.prompting >= 0.5;
    let uncoop = (sig.yielding && p) || (other_prompts && !p && !sig.yielding);
    (comm, if uncoop { cfg.g_w } else { 0.0 })
}
