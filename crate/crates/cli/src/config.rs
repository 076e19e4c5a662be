//! Plain-text `key=value` scenario files.
//!
//! Pairs are separated by newlines or whitespace; `#` starts a comment.
//! A `preset` key loads a reference parameter set whose table values can
//! only be changed with `force`.

use std::collections::BTreeMap;
use std::str::FromStr;
use thiserror::Error;
use vesicle_core::fem::{BoundaryProfile, QuadratureRule};
use vesicle_core::{ScenarioConfig, ScenarioKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected key=value, got '{text}'")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key '{key}' given twice")]
    Duplicate { line: usize, key: String },
    #[error("invalid value '{value}' for '{key}': {reason}")]
    Value { key: String, value: String, reason: String },
    #[error("missing required keys: {}", .0.join(", "))]
    Missing(Vec<String>),
    #[error(
        "preset '{preset}' fixes {}; pass --force to override",
        .keys.join(", ")
    )]
    PresetConflict { preset: String, keys: Vec<String> },
    #[error("preset 'custom' has no parameter table; list every key instead")]
    CustomPreset,
    #[error("{0}")]
    Invalid(String),
}

/// Every accepted key, in serialization order.
pub const KEYS: [&str; 27] = [
    "scenario",
    "N",
    "k_a",
    "k_rp",
    "ell0",
    "r",
    "L",
    "l",
    "mu_in",
    "mu_out",
    "epsilon",
    "dt",
    "gamma_dot",
    "boundary",
    "t_final",
    "nx",
    "ny",
    "alpha",
    "init_angle",
    "output_every",
    "quadrature",
    "contact_cutoff",
    "uzawa_max_iter",
    "uzawa_tol",
    "preset",
    "lambda",
    "steps",
];

/// Keys that must be present when no preset is given.
pub const REQUIRED: [&str; 15] = [
    "N", "k_a", "k_rp", "r", "L", "l", "mu_out", "epsilon", "dt", "gamma_dot", "boundary", "t_final", "nx", "ny",
    "alpha",
];

/// Keys fixed by a preset's parameter table.
pub const PINNED: [&str; 7] = ["N", "k_a", "k_rp", "L", "l", "mu_in", "mu_out"];

/// Raw pairs in file order.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, (usize, String)>, ConfigError> {
    let mut out = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        for token in content.split_whitespace() {
            let Some((k, v)) = token.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line,
                    text: token.to_string(),
                });
            };
            if k.is_empty() || v.is_empty() {
                return Err(ConfigError::Syntax {
                    line,
                    text: token.to_string(),
                });
            }
            if !KEYS.contains(&k) {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: k.to_string(),
                });
            }
            if out.insert(k.to_string(), (line, v.to_string())).is_some() {
                return Err(ConfigError::Duplicate {
                    line,
                    key: k.to_string(),
                });
            }
        }
    }
    Ok(out)
}

fn value<T: FromStr>(key: &str, raw: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    raw.parse::<T>().map_err(|e| ConfigError::Value {
        key: key.to_string(),
        value: raw.to_string(),
        reason: e.to_string(),
    })
}

fn apply(cfg: &mut ScenarioConfig, key: &str, raw: &str) -> Result<(), ConfigError> {
    match key {
        "scenario" => cfg.kind = value(key, raw)?,
        "N" => cfg.n_particles = value(key, raw)?,
        "k_a" => cfg.k_a = value(key, raw)?,
        "k_rp" => cfg.k_rp = value(key, raw)?,
        "ell0" => cfg.ell0 = value(key, raw)?,
        "r" => cfg.radius = value(key, raw)?,
        "L" => cfg.length = value(key, raw)?,
        "l" => cfg.height = value(key, raw)?,
        "mu_in" => cfg.mu_in = value(key, raw)?,
        "mu_out" => cfg.mu_out = value(key, raw)?,
        "epsilon" => cfg.epsilon = value(key, raw)?,
        "dt" => cfg.dt = value(key, raw)?,
        "gamma_dot" => cfg.gamma_dot = value(key, raw)?,
        "boundary" => cfg.boundary = value::<BoundaryProfile>(key, raw)?,
        "t_final" => cfg.t_final = value(key, raw)?,
        "nx" => cfg.nx = value(key, raw)?,
        "ny" => cfg.ny = value(key, raw)?,
        "alpha" => cfg.alpha = value(key, raw)?,
        "init_angle" => cfg.init_angle = value(key, raw)?,
        "output_every" => cfg.output_every = value(key, raw)?,
        "quadrature" => cfg.quadrature = value::<QuadratureRule>(key, raw)?,
        "contact_cutoff" => cfg.contact_cutoff = value(key, raw)?,
        "uzawa_max_iter" => cfg.uzawa_max_iter = value(key, raw)?,
        "uzawa_tol" => cfg.uzawa_tol = value(key, raw)?,
        _ => unreachable!("key list checked by the parser"),
    }
    Ok(())
}

/// Parses a scenario file. `preset_override` acts like a `preset` key and
/// takes precedence over one in the file.
pub fn parse_config(text: &str, preset_override: Option<ScenarioKind>, force: bool) -> Result<ScenarioConfig, ConfigError> {
    let mut pairs = parse_pairs(text)?;
    let file_preset = match pairs.remove("preset") {
        Some((_, raw)) => Some(value::<ScenarioKind>("preset", &raw)?),
        None => None,
    };
    if let (Some(a), Some(b)) = (file_preset, preset_override) {
        if a != b && !force {
            return Err(ConfigError::PresetConflict {
                preset: b.name().to_string(),
                keys: vec![format!("preset (file says {})", a.name())],
            });
        }
    }
    let preset = preset_override.or(file_preset);
    let lambda = match pairs.remove("lambda") {
        Some((_, raw)) => Some(value::<f64>("lambda", &raw)?),
        None => None,
    };
    let steps = match pairs.remove("steps") {
        Some((_, raw)) => Some(value::<usize>("steps", &raw)?),
        None => None,
    };

    let mut cfg = match preset {
        Some(ScenarioKind::Custom) => return Err(ConfigError::CustomPreset),
        Some(kind) => {
            let base = ScenarioConfig::preset(kind);
            let mut conflicts = Vec::new();
            for key in PINNED {
                if let Some((_, raw)) = pairs.get(key) {
                    let mut probe = base.clone();
                    apply(&mut probe, key, raw)?;
                    if probe != base {
                        conflicts.push(key.to_string());
                    }
                }
            }
            if !conflicts.is_empty() && !force {
                return Err(ConfigError::PresetConflict {
                    preset: kind.name().to_string(),
                    keys: conflicts,
                });
            }
            base
        }
        None => {
            let mut missing: Vec<String> = REQUIRED
                .iter()
                .filter(|k| !pairs.contains_key(**k))
                .map(|k| k.to_string())
                .collect();
            if !pairs.contains_key("mu_in") && lambda.is_none() {
                missing.insert(6, "mu_in (or lambda)".into());
            }
            if steps.is_some() {
                missing.retain(|k| k != "t_final");
            }
            if !missing.is_empty() {
                return Err(ConfigError::Missing(missing));
            }
            ScenarioConfig {
                kind: ScenarioKind::Custom,
                ..ScenarioConfig::default()
            }
        }
    };

    if preset.is_none() && !pairs.contains_key("ell0") {
        let (_, raw) = &pairs["r"];
        cfg.ell0 = 2.0 * value::<f64>("r", raw)?;
    }
    for (key, (_, raw)) in &pairs {
        apply(&mut cfg, key, raw)?;
    }
    if preset.is_some() && pairs.contains_key("r") && !pairs.contains_key("ell0") {
        cfg.ell0 = 2.0 * cfg.radius;
    }
    if let Some(l) = lambda {
        if pairs.contains_key("mu_in") && !force {
            return Err(ConfigError::Invalid("give either mu_in or lambda, not both".into()));
        }
        cfg.set_lambda(l);
    }
    if let Some(s) = steps {
        if pairs.contains_key("t_final") && !force {
            return Err(ConfigError::Invalid("give either t_final or steps, not both".into()));
        }
        cfg.set_steps(s);
    }
    cfg.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(cfg)
}

/// Writes every field so that [`parse_config`] reproduces `cfg` exactly.
pub fn serialize_config(cfg: &ScenarioConfig) -> String {
    // Display for f64 prints the shortest string that parses back to the same value
    let lines = [
        ("scenario", cfg.kind.name().to_string()),
        ("N", cfg.n_particles.to_string()),
        ("k_a", cfg.k_a.to_string()),
        ("k_rp", cfg.k_rp.to_string()),
        ("ell0", cfg.ell0.to_string()),
        ("r", cfg.radius.to_string()),
        ("L", cfg.length.to_string()),
        ("l", cfg.height.to_string()),
        ("mu_in", cfg.mu_in.to_string()),
        ("mu_out", cfg.mu_out.to_string()),
        ("epsilon", cfg.epsilon.to_string()),
        ("dt", cfg.dt.to_string()),
        ("gamma_dot", cfg.gamma_dot.to_string()),
        ("boundary", cfg.boundary.name().to_string()),
        ("t_final", cfg.t_final.to_string()),
        ("nx", cfg.nx.to_string()),
        ("ny", cfg.ny.to_string()),
        ("alpha", cfg.alpha.to_string()),
        ("init_angle", cfg.init_angle.to_string()),
        ("output_every", cfg.output_every.to_string()),
        ("quadrature", cfg.quadrature.name().to_string()),
        ("contact_cutoff", cfg.contact_cutoff.to_string()),
        ("uzawa_max_iter", cfg.uzawa_max_iter.to_string()),
        ("uzawa_tol", cfg.uzawa_tol.to_string()),
    ];
    let mut out = String::new();
    for (k, v) in lines {
        out.push_str(k);
        out.push('=');
        out.push_str(&v);
        out.push('\n');
    }
    out
}
