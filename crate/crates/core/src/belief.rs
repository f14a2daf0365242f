//! Particle belief over the joint state with conjugate kernel updates.
//!
//! Kinematic and control dimensions use Gaussian kernels; the other agent's
//! signal dimensions use Beta kernels stored as a mean and a concentration.

use libm::lgamma;
use log::warn;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::ControlInput;
use crate::model::{
    gaussian_logpdf, model_transition_sample, AgentAction, AgentId, FullState, NoiseConfig,
    SignalPairBelief, TransitionCtx,
};

/// Pseudo-count added to `alpha` for an observed active signal.
pub const POSITIVE_PSEUDO_COUNT: f64 = 8.0;
/// Pseudo-count added to `beta` for an observed inactive signal.
pub const NEGATIVE_PSEUDO_COUNT: f64 = 0.15;

const GAMMA_EPS: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum BeliefError {
    #[error("all particle weights vanished")]
    Degenerate,
    #[error("belief needs at least one particle")]
    Empty,
}

/// Beta pseudo-counts of one signal dimension.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalBelief {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for SignalBelief {
    fn default() -> Self {
        Self { alpha: 1.0, beta: 1.0 }
    }
}

impl SignalBelief {
    pub fn new(alpha: f64, beta: f64) -> Self {
        Self { alpha, beta }
    }

    pub fn from_mean(mean: f64, concentration: f64) -> Self {
        let m = mean.clamp(GAMMA_EPS, 1.0 - GAMMA_EPS);
        Self { alpha: concentration * m, beta: concentration * (1.0 - m) }
    }

    #[inline]
    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    #[inline]
    pub fn concentration(&self) -> f64 {
        self.alpha + self.beta
    }

    /// Log marginal probability of `observed` under the pseudo-count likelihood.
    pub fn log_evidence(&self, observed: bool) -> f64 {
        let post = signal_posterior_update(*self, observed);
        ln_beta_fn(post.alpha, post.beta) - ln_beta_fn(self.alpha, self.beta)
    }
}

#[inline]
fn ln_beta_fn(a: f64, b: f64) -> f64 {
    lgamma(a) + lgamma(b) - lgamma(a + b)
}

pub fn signal_posterior_update(sb: SignalBelief, observed: bool) -> SignalBelief {
    if observed {
        SignalBelief { alpha: sb.alpha + POSITIVE_PSEUDO_COUNT, beta: sb.beta }
    } else {
        SignalBelief { alpha: sb.alpha, beta: sb.beta + NEGATIVE_PSEUDO_COUNT }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub state: FullState,
    /// Beta-kernel concentration of the other agent's `[prompting, yielding]`.
    pub signal_kappa: [f64; 2],
    pub weight: f64,
}

impl Particle {
    pub fn signal_belief(&self, other: AgentId, dim: usize) -> SignalBelief {
        let g = self.state[other].signal;
        let m = if dim == 0 { g.prompting } else { g.yielding };
        SignalBelief::from_mean(m, self.signal_kappa[dim])
    }
}

/// Summary of a filter update.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct UpdateInfo {
    pub ess: f64,
    pub resampled: bool,
    pub recovered: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticleSet {
    pub ego: AgentId,
    pub particles: Vec<Particle>,
}

/// Initial Beta(1,1) signal kernel.
pub const INITIAL_KAPPA: f64 = 2.0;

impl ParticleSet {
    /// Particles spread around `o` with observation-noise standard deviations.
    pub fn from_observation<R: Rng + ?Sized>(
        o: &FullState,
        ego: AgentId,
        n: usize,
        noise: &NoiseConfig,
        rng: &mut R,
    ) -> Result<Self, BeliefError> {
        if n == 0 {
            return Err(BeliefError::Empty);
        }
        let w = 1.0 / n as f64;
        let other = ego.other();
        let particles = (0..n)
            .map(|_| {
                let mut s = *o;
                for id in [ego, other] {
                    let a = &mut s[id];
                    let sx = &noise.sigma_x_o;
                    let mut z = |sd: f64| sd * rng.sample::<f64, _>(StandardNormal);
                    a.kin.x += z(sx[0]);
                    a.kin.y += z(sx[1]);
                    a.kin.theta += z(sx[2]);
                    a.kin.delta += z(sx[3]);
                    a.kin.v = (a.kin.v + z(sx[4])).max(0.0);
                    if id == other {
                        a.control.a += z(noise.sigma_u_o[0]);
                        a.control.omega += z(noise.sigma_u_o[1]);
                    }
                }
                s[other].signal = SignalPairBelief::new(0.5, 0.5);
                for id in AgentId::ALL {
                    s[id].has_stopped = false;
                    s[id].has_priority = false;
                }
                Particle { state: s, signal_kappa: [INITIAL_KAPPA; 2], weight: w }
            })
            .collect();
        Ok(Self { ego, particles })
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn weight_sum(&self) -> f64 {
        self.particles.iter().map(|p| p.weight).sum()
    }

    pub fn normalize(&mut self) -> Result<(), BeliefError> {
        let total = self.weight_sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(BeliefError::Degenerate);
        }
        for p in &mut self.particles {
            p.weight /= total;
        }
        Ok(())
    }

    pub fn ess(&self) -> f64 {
        let s2: f64 = self.particles.iter().map(|p| p.weight * p.weight).sum();
        if s2 > 0.0 {
            1.0 / s2
        } else {
            0.0
        }
    }

    /// `Σ w_i f(s_i)`.
    pub fn estimate<F: Fn(&FullState) -> f64>(&self, f: F) -> f64 {
        self.particles.iter().map(|p| p.weight * f(&p.state)).sum()
    }

    pub fn weighted_std<F: Fn(&FullState) -> f64>(&self, f: F) -> f64 {
        let m = self.estimate(&f);
        self.estimate(|s| (f(s) - m).powi(2)).max(0.0).sqrt()
    }

    /// Advance every particle through the model transition and weight it normatively.
    pub fn predict<R: Rng + ?Sized>(
        &mut self,
        action: &AgentAction,
        ctx: &TransitionCtx<'_>,
        ego_tail: &[ControlInput],
        rng: &mut R,
    ) -> Result<(), BeliefError> {
        let ego = self.ego;
        for p in &mut self.particles {
            let (next, w) = model_transition_sample(&p.state, action, ego, ctx, ego_tail, rng);
            p.state = next;
            p.weight *= w;
        }
        self.normalize()
    }

    /// Bayesian update with observation `o`; resamples when the ESS drops below `N/2`.
    ///
    /// If every weight vanishes the belief is reinitialized around `o`.
    pub fn update<R: Rng + ?Sized>(
        &mut self,
        o: &FullState,
        noise: &NoiseConfig,
        rng: &mut R,
    ) -> Result<UpdateInfo, BeliefError> {
        if self.particles.is_empty() {
            return Err(BeliefError::Empty);
        }
        let n = self.particles.len();
        let ego = self.ego;
        let other = ego.other();
        let mut logw: Vec<f64> = self
            .particles
            .iter()
            .map(|p| if p.weight > 0.0 { p.weight.ln() } else { f64::NEG_INFINITY })
            .collect();
        let weights: Vec<f64> = self.particles.iter().map(|p| p.weight).collect();
        let mut col = vec![0.0; n];

        for id in [ego, other] {
            let trans = if id == ego { &noise.sigma_x_ego } else { &noise.sigma_x_ov };
            for d in 0..7 {
                let (floor, sigma_o, obs) = if d < 5 {
                    (trans[d], noise.sigma_x_o[d], kin_dim(o, id, d))
                } else if id == ego {
                    (0.0, noise.sigma_u_o[d - 5], kin_dim(o, id, d))
                } else {
                    (noise.sigma_u_ov[d - 5], noise.sigma_u_o[d - 5], kin_dim(o, id, d))
                };
                for (c, p) in col.iter_mut().zip(&self.particles) {
                    *c = kin_dim(&p.state, id, d);
                }
                kernel_update_dim(&mut col, &mut logw, &weights, obs, sigma_o, floor, rng);
                for (c, p) in col.iter().zip(&mut self.particles) {
                    set_kin_dim(&mut p.state, id, d, *c);
                }
            }
        }

        let obs_sig = o[other].signal.to_binary();
        for (p, lw) in self.particles.iter_mut().zip(&mut logw) {
            for (dim, bit) in [obs_sig.prompting, obs_sig.yielding].into_iter().enumerate() {
                let sb = p.signal_belief(other, dim);
                *lw += sb.log_evidence(bit);
                let post = signal_posterior_update(sb, bit);
                let g = &mut p.state[other].signal;
                if dim == 0 {
                    g.prompting = post.mean();
                } else {
                    g.yielding = post.mean();
                }
                p.signal_kappa[dim] = post.concentration();
            }
            p.state[ego].signal = o[ego].signal;
        }

        let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            warn!("belief of agent {ego} degenerated; reinitializing from observation");
            *self = Self::from_observation(o, ego, n, noise, rng)?;
            return Ok(UpdateInfo { ess: n as f64, resampled: false, recovered: true });
        }
        for (p, lw) in self.particles.iter_mut().zip(&logw) {
            p.weight = (lw - max).exp();
        }
        self.normalize()?;
        let ess = self.ess();
        let resampled = ess < 0.5 * n as f64;
        if resampled {
            self.resample(rng);
        }
        Ok(UpdateInfo { ess, resampled, recovered: false })
    }

    /// Systematic resampling to uniform weights.
    pub fn resample<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let n = self.particles.len();
        if n == 0 {
            return;
        }
        let weights: Vec<f64> = self.particles.iter().map(|p| p.weight).collect();
        let idx = systematic_indices(&weights, n, rng.random::<f64>());
        let w = 1.0 / n as f64;
        self.particles = idx
            .into_iter()
            .map(|i| Particle { weight: w, ..self.particles[i] })
            .collect();
    }

    /// Weighted mean of the other agent's signal belief `[prompting, yielding]`.
    pub fn other_signal_mean(&self) -> [f64; 2] {
        let other = self.ego.other();
        [
            self.estimate(|s| s[other].signal.prompting),
            self.estimate(|s| s[other].signal.yielding),
        ]
    }
}

/// Indices selected by systematic resampling with offset `u0 ∈ [0,1)`.
pub fn systematic_indices(weights: &[f64], n: usize, u0: f64) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let step = total / n as f64;
    let mut out = Vec::with_capacity(n);
    let mut cum = weights[0];
    let mut i = 0;
    for k in 0..n {
        let u = (u0 + k as f64) * step;
        while u > cum && i + 1 < weights.len() {
            i += 1;
            cum += weights[i];
        }
        out.push(i);
    }
    out
}

/// Gaussian-kernel conjugate update of one dimension.
///
/// Kernel centers are shrunk toward the weighted mean so the kernel mixture
/// keeps the particle variance; bandwidth follows Silverman's rule with a floor.
/// Each kernel is then updated with the Gaussian observation: centers move by
/// the gain `B²/(B²+σ_o²)`, `logw` gains the marginal likelihood, and the
/// new value is drawn from the posterior kernel.
pub fn kernel_update_dim<R: Rng + ?Sized>(
    values: &mut [f64],
    logw: &mut [f64],
    weights: &[f64],
    obs: f64,
    sigma_o: f64,
    floor: f64,
    rng: &mut R,
) {
    let n = values.len();
    if n == 0 {
        return;
    }
    let wsum: f64 = weights.iter().sum();
    let (mean, var) = if wsum > 0.0 {
        let m = values.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / wsum;
        let v = values.iter().zip(weights).map(|(x, w)| w * (x - m) * (x - m)).sum::<f64>() / wsum;
        (m, v.max(0.0))
    } else {
        (values.iter().sum::<f64>() / n as f64, 0.0)
    };
    let sd = var.sqrt();
    let b = (1.06 * sd * (n as f64).powf(-0.2)).max(floor);
    let shrink = if var > 0.0 { (1.0 - (b * b / var).min(1.0)).sqrt() } else { 1.0 };
    let b2 = b * b;
    let s2 = sigma_o * sigma_o;
    let tot = b2 + s2;
    let gain = if tot > 0.0 { b2 / tot } else { 0.0 };
    let tot_sd = tot.sqrt();
    let post_sd = if tot > 0.0 { (b2 * s2 / tot).sqrt() } else { 0.0 };
    for (x, lw) in values.iter_mut().zip(logw.iter_mut()) {
        let c = mean + shrink * (*x - mean);
        *lw += gaussian_logpdf(obs, c, tot_sd);
        *x = c + gain * (obs - c);
        if post_sd > 0.0 {
            *x += post_sd * rng.sample::<f64, _>(StandardNormal);
        }
    }
}

#[inline]
fn kin_dim(s: &FullState, id: AgentId, d: usize) -> f64 {
    let a = &s[id];
    match d {
        0 => a.kin.x,
        1 => a.kin.y,
        2 => a.kin.theta,
        3 => a.kin.delta,
        4 => a.kin.v,
        5 => a.control.a,
        _ => a.control.omega,
    }
}

#[inline]
fn set_kin_dim(s: &mut FullState, id: AgentId, d: usize, v: f64) {
    let a = &mut s[id];
    match d {
        0 => a.kin.x = v,
        1 => a.kin.y = v,
        2 => a.kin.theta = v,
        3 => a.kin.delta = v,
        4 => a.kin.v = v.max(0.0),
        5 => a.control.a = v,
        _ => a.control.omega = v,
    }
}
