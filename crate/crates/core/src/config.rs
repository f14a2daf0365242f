//! Run configuration: TOML file, `key=value` overrides and validation.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use toml::{Table, Value};

use crate::model::{NoiseConfig, NormConfig, Scene};
use crate::policy::PolicyConfig;
use crate::preference::PreferenceConfig;
use crate::simulation::{Regime, ScenarioConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("bad override '{0}': expected KEY=VALUE")]
    OverrideSyntax(String),
    #[error("unknown key '{key}'; valid keys: {valid}")]
    UnknownKey { key: String, valid: String },
    #[error("ambiguous key '{key}', matches: {matches}")]
    AmbiguousKey { key: String, matches: String },
    #[error("invalid value: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub scenario: ScenarioConfig,
    pub scene: Scene,
    pub noise: NoiseConfig,
    pub norms: NormConfig,
    pub preference: PreferenceConfig,
    pub policy: PolicyConfig,
}

impl Config {
    /// Default configuration for a regime and initial distance difference.
    pub fn for_condition(regime: Regime, delta_d0: f64) -> Self {
        let mut c = Config::default();
        c.scenario.regime = regime;
        c.scenario.delta_d0 = delta_d0;
        c.apply_regime();
        c
    }

    /// Sets the norm flags implied by the scenario regime.
    pub fn apply_regime(&mut self) {
        if let Some((stop, prio, comm)) = self.scenario.regime.flags() {
            self.norms.stop_signs_enabled = stop;
            self.norms.priority_enabled = prio;
            self.norms.communication_enabled = comm;
        }
    }

    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let user: Table = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        // first pass finds the regime, whose flags then act as defaults for the second
        let build = |base: Table| -> Result<Config, ConfigError> {
            let mut table = base;
            merge(&mut table, user.clone(), "")?;
            for ov in overrides {
                apply_override(&mut table, ov)?;
            }
            Value::Table(table).try_into().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))
        };
        let mut seeded = Config { scenario: build(defaults_table())?.scenario, ..Config::default() };
        seeded.apply_regime();
        let cfg = build(to_table(&seeded))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = match path {
            Some(p) => fs::read_to_string(p)
                .map_err(|source| ConfigError::Io { path: p.display().to_string(), source })?,
            None => String::new(),
        };
        Self::from_toml_str(&text, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        let s = &self.scene;
        if !(s.dt > 0.0) || !s.dt.is_finite() {
            return bad("scene.dt must be positive");
        }
        let g = &s.geometry;
        if !(g.length > 0.0 && g.width > 0.0 && g.wheelbase > 0.0) {
            return bad("vehicle geometry must be positive");
        }
        let b = &s.bounds;
        if !(b.delta_max > 0.0 && b.a_max > 0.0 && b.omega_max > 0.0) {
            return bad("kinematic bounds must be positive");
        }
        if !(s.lane_width > 0.0) {
            return bad("scene.lane_width must be positive");
        }
        let sc = &self.scenario;
        if !(sc.d_a0 < 0.0 && sc.d_b0() < 0.0) {
            return bad("initial distances must be negative (before the intersection)");
        }
        if !(sc.v0 >= 0.0 && sc.max_time > 0.0) {
            return bad("scenario.v0 must be >= 0 and scenario.max_time > 0");
        }
        if sc.particles == 0 {
            return bad("scenario.particles must be >= 1");
        }
        if !(sc.deadlock_time > 0.0 && sc.deadlock_speed >= 0.0) {
            return bad("deadlock thresholds must be positive");
        }
        if self.noise.all_values().any(|v| !(v >= 0.0) || !v.is_finite()) {
            return bad("noise standard deviations must be finite and >= 0");
        }
        let n = &self.norms;
        if n.stop_region[0] > n.stop_region[1] {
            return bad("norms.stop_region must be ordered");
        }
        if !(n.norm_violation_prob > 0.0 && n.norm_violation_prob <= 1.0) {
            return bad("norms.norm_violation_prob must lie in (0, 1]");
        }
        if !(n.coop_floor > 0.0 && n.coop_floor <= 1.0) {
            return bad("norms.coop_floor must lie in (0, 1]");
        }
        if !(n.rollout_horizon > 0.0) {
            return bad("norms.rollout_horizon must be positive");
        }
        if n.priority_enabled && !n.stop_signs_enabled && !n.priority_handover_distance.is_finite() {
            return bad("priority without stop signs needs a finite norms.priority_handover_distance");
        }
        if let Some((stop, prio, comm)) = sc.regime.flags() {
            if (n.stop_signs_enabled, n.priority_enabled, n.communication_enabled) != (stop, prio, comm) {
                return bad("norm flags contradict scenario.regime (use regime = \"custom\" to set them freely)");
            }
        }
        let p = &self.preference;
        if !(p.sigma_v > 0.0 && p.sigma_a > 0.0 && p.sigma_omega > 0.0 && p.sigma_lat > 0.0) {
            return bad("preference standard deviations must be positive");
        }
        if p.g_s > 0.0 || p.g_gamma > 0.0 || p.g_w > 0.0 || p.g_collision > 0.0 || p.g_safety > 0.0 {
            return bad("preference log values must be <= 0");
        }
        if !(p.speed_limit_scale > 0.0) {
            return bad("preference.speed_limit_scale must be positive");
        }
        let q = &self.policy;
        if q.horizon == 0 || q.cem_samples == 0 || q.cem_iterations == 0 {
            return bad("policy horizon, cem_samples and cem_iterations must be >= 1");
        }
        if !(q.elite_fraction > 0.0 && q.elite_fraction <= 1.0) {
            return bad("policy.elite_fraction must lie in (0, 1]");
        }
        if !(q.lambda_log10.is_finite() && q.threshold > 0.0) {
            return bad("policy.lambda_log10 must be finite and policy.threshold positive");
        }
        if !(q.init_accel_std >= 0.0 && q.init_omega_std >= 0.0) {
            return bad("policy initial standard deviations must be >= 0");
        }
        Ok(())
    }
}

fn defaults_table() -> Table {
    to_table(&Config::default())
}

fn to_table(cfg: &Config) -> Table {
    match Value::try_from(cfg).expect("config serializes") {
        Value::Table(t) => t,
        _ => unreachable!("config serializes to a table"),
    }
}

/// Every dotted leaf key of the default configuration.
pub fn valid_keys() -> Vec<String> {
    fn walk(t: &Table, prefix: &str, out: &mut Vec<String>) {
        for (k, v) in t {
            let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
            match v {
                Value::Table(sub) => walk(sub, &key, out),
                _ => out.push(key),
            }
        }
    }
    let mut out = Vec::new();
    walk(&defaults_table(), "", &mut out);
    out
}

fn unknown(key: &str) -> ConfigError {
    ConfigError::UnknownKey { key: key.to_string(), valid: valid_keys().join(", ") }
}

fn merge(base: &mut Table, user: Table, prefix: &str) -> Result<(), ConfigError> {
    for (k, v) in user {
        let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(u)) => merge(b, u, &path)?,
            (Some(slot), v) => *slot = v,
            (None, _) => return Err(unknown(&path)),
        }
    }
    Ok(())
}

fn parse_value(raw: &str) -> Value {
    let doc = format!("v = {raw}");
    match toml::from_str::<Table>(&doc) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.to_string())),
        Err(_) => Value::String(raw.to_string()),
    }
}

fn resolve_key(key: &str) -> Result<String, ConfigError> {
    let keys = valid_keys();
    if keys.iter().any(|k| k == key) {
        return Ok(key.to_string());
    }
    let suffix = format!(".{key}");
    let matches: Vec<&String> = keys.iter().filter(|k| k.ends_with(&suffix)).collect();
    match matches.len() {
        0 => Err(unknown(key)),
        1 => Ok(matches[0].clone()),
        _ => Err(ConfigError::AmbiguousKey {
            key: key.to_string(),
            matches: matches.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", "),
        }),
    }
}

/// Applies `KEY=VALUE`; `KEY` is a dotted path or an unambiguous leaf name.
pub fn apply_override(table: &mut Table, ov: &str) -> Result<(), ConfigError> {
    let (k, v) = ov.split_once('=').ok_or_else(|| ConfigError::OverrideSyntax(ov.to_string()))?;
    let key = resolve_key(k.trim())?;
    let mut value = parse_value(v.trim());
    let parts: Vec<&str> = key.split('.').collect();
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        cur = match cur.get_mut(*p) {
            Some(Value::Table(t)) => t,
            _ => return Err(unknown(&key)),
        };
    }
    let leaf = parts[parts.len() - 1];
    let slot = cur.get_mut(leaf).ok_or_else(|| unknown(&key))?;
    // integers given for float fields
    if let (Value::Float(_), Value::Integer(i)) = (&*slot, &value) {
        value = Value::Float(*i as f64);
    }
    *slot = value;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        Config::default().validate().unwrap();
        let c = Config::from_toml_str("", &[]).unwrap();
        assert_eq!(c, Config::default());
    }

    #[test]
    fn reference_defaults_in_printout() {
        let text = Config::default().to_toml();
        for (key, val) in [
            ("g_s", "-10000.0"),
            ("g_gamma", "-0.125"),
            ("g_w", "-10000.0"),
            ("sigma_gamma", "0.001"),
            ("sigma_gamma_0", "0.005"),
            ("sigma_v", "0.2"),
            ("sigma_a", "0.2"),
            ("init_omega_std", "0.00001"),
            ("lambda_log10", "-5.9"),
        ] {
            let line = format!("{key} = {val}");
            assert_eq!(text.lines().filter(|l| l.trim() == line).count(), 1, "{line}\n{text}");
        }
    }

    #[test]
    fn round_trip_is_stable() {
        let c = Config::from_toml_str("", &["seed=7".into(), "policy.cem_samples=32".into()]).unwrap();
        let again = Config::from_toml_str(&c.to_toml(), &[]).unwrap();
        assert_eq!(c, again);
        assert_eq!(again.scenario.seed, 7);
        assert_eq!(again.policy.cem_samples, 32);
    }

    #[test]
    fn overrides_parse_types() {
        let c = Config::from_toml_str("", &["scenario.delta_d0=-5".into(), "regime=norms".into()]).unwrap();
        assert_eq!(c.scenario.delta_d0, -5.0);
        assert_eq!(c.scenario.regime, Regime::Norms);
        assert!(c.norms.stop_signs_enabled && c.norms.priority_enabled);
    }

    #[test]
    fn unknown_override_lists_keys() {
        let err = Config::from_toml_str("", &["bogus=1".into()]).unwrap_err();
        match err {
            ConfigError::UnknownKey { valid, .. } => assert!(valid.contains("scenario.seed")),
            e => panic!("unexpected {e}"),
        }
        assert!(matches!(Config::from_toml_str("", &["noseparator".into()]), Err(ConfigError::OverrideSyntax(_))));
    }

    #[test]
    fn bare_leaf_names_resolve() {
        assert_eq!(resolve_key("sigma_gamma").unwrap(), "noise.sigma_gamma");
        assert_eq!(resolve_key("threshold").unwrap(), "policy.threshold");
        assert_eq!(resolve_key("geometry.length").unwrap(), "scene.geometry.length");
        let c = Config::from_toml_str("", &["length=4".into()]).unwrap();
        assert_eq!(c.scene.geometry.length, 4.0);
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(matches!(Config::from_toml_str("", &["scene.dt=0".into()]), Err(ConfigError::Invalid(_))));
        assert!(matches!(Config::from_toml_str("", &["scene.dt=-0.2".into()]), Err(ConfigError::Invalid(_))));
        assert!(matches!(Config::from_toml_str("[scenario]\nfoo = 1\n", &[]), Err(ConfigError::UnknownKey { .. })));
        assert!(Config::from_toml_str("", &["norms.stop_signs_enabled=true".into()]).is_err());
        assert!(Config::from_toml_str("", &["regime=custom".into(), "norms.stop_signs_enabled=true".into()]).is_ok());
    }
}
