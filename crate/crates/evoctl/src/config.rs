use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

pub const PRESETS: [&str; 5] = ["port-hamiltonian", "wave-wt", "wave-mixed", "maxwell-lift-1d", "identity"];

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputSpec {
    Zero,
    /// `amplitude * sin(2 pi freq t)` on one control component.
    Sinusoid {
        #[serde(default = "one")]
        freq: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        component: usize,
    },
    /// CSV with columns `t, u0, u1, ...`, interpolated linearly.
    Table { path: PathBuf },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Zero,
    /// `amplitude * sin(pi (x - a) / (b - a))^2` in the first field.
    Bump {
        #[serde(default = "one")]
        amplitude: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub preset: String,
    pub a: f64,
    pub b: f64,
    pub n_cells: usize,
    pub t_end: f64,
    pub n_steps: usize,
    pub nu: f64,
    pub scheme: String,
    pub input: InputSpec,
    pub initial: InitialSpec,
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Threshold for ledger, IO and coupling defects.
    pub defect_tol: f64,
    /// Threshold for boundary data space defects.
    pub bd_tol: f64,
    /// Region boundaries for `wave-mixed` (elliptic | parabolic | hyperbolic).
    pub mixed_split: [f64; 2],
    /// `algebraic` or `lumped`, for `port-hamiltonian`.
    pub closure: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            preset: "wave-wt".into(),
            a: 0.0,
            b: 1.0,
            n_cells: 32,
            t_end: 1.0,
            n_steps: 40,
            nu: 1.0,
            scheme: "implicit_midpoint".into(),
            input: InputSpec::Zero,
            initial: InitialSpec::Zero,
            output_dir: PathBuf::from("."),
            seed: 0,
            defect_tol: 1e-9,
            bd_tol: 1e-10,
            mixed_split: [1.0 / 3.0, 2.0 / 3.0],
            closure: "lumped".into(),
        }
    }
}

/// Sets `path` (dotted) in a JSON object. The value is parsed as JSON when
/// possible and kept as a string otherwise.
fn set_path(root: &mut Value, path: &str, raw: &str) -> CliResult<()> {
    let value = serde_json::from_str::<Value>(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(CliError::Config(format!("bad key '{path}'")));
        }
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("'{path}': '{part}' is not inside an object")))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

impl RunConfig {
    /// Defaults, then the JSON file, then `key=value` overrides, then
    /// `EVOCTL_SEED`.
    pub fn load(path: Option<&Path>, overrides: &[String], env_seed: Option<String>) -> CliResult<Self> {
        let mut value = serde_json::to_value(RunConfig::default()).expect("serializable");
        if let Some(p) = path {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            let file: Value =
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            let obj = file.as_object().ok_or_else(|| CliError::Config("config must be a JSON object".into()))?;
            for (k, v) in obj {
                value[k] = v.clone();
            }
        }
        for ov in overrides {
            let (k, v) = ov
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("override '{ov}' is not key=value")))?;
            set_path(&mut value, k.trim(), v.trim())?;
        }
        let mut cfg: RunConfig = serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(s) = env_seed {
            cfg.seed = s
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("EVOCTL_SEED must be an unsigned integer, got '{s}'")))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        let finite = [
            ("a", self.a),
            ("b", self.b),
            ("t_end", self.t_end),
            ("nu", self.nu),
            ("defect_tol", self.defect_tol),
            ("bd_tol", self.bd_tol),
            ("mixed_split[0]", self.mixed_split[0]),
            ("mixed_split[1]", self.mixed_split[1]),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(CliError::Config(format!("{name} must be finite")));
            }
        }
        if let InputSpec::Sinusoid { freq, amplitude, .. } = &self.input {
            if !(freq.is_finite() && amplitude.is_finite()) {
                return Err(CliError::Config("sinusoid parameters must be finite".into()));
            }
        }
        if let InitialSpec::Bump { amplitude } = &self.initial {
            if !amplitude.is_finite() {
                return Err(CliError::Config("bump amplitude must be finite".into()));
            }
        }
        if self.n_steps < 1 {
            return Err(CliError::Config("n_steps must be at least 1".into()));
        }
        if !PRESETS.contains(&self.preset.as_str()) {
            return Err(CliError::Config(format!("unknown preset '{}'; expected one of {:?}", self.preset, PRESETS)));
        }
        if !["algebraic", "lumped"].contains(&self.closure.as_str()) {
            return Err(CliError::Config(format!("closure must be 'algebraic' or 'lumped', got '{}'", self.closure)));
        }
        evolve::evolution::Scheme::parse(&self.scheme)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_apply_in_order() {
        let cfg = RunConfig::load(
            None,
            &["n_cells=8".into(), "input.kind=sinusoid".into(), "input.freq=2.5".into(), "scheme=be".into()],
            Some("7".into()),
        )
        .unwrap();
        assert_eq!(cfg.n_cells, 8);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.input, InputSpec::Sinusoid { freq: 2.5, amplitude: 1.0, component: 0 });
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::load(None, &["n_steps=0".into()], None).is_err());
        assert!(RunConfig::load(None, &["preset=heat".into()], None).is_err());
        assert!(RunConfig::load(None, &["bogus=1".into()], None).is_err());
        assert!(RunConfig::load(None, &["nocolon".into()], None).is_err());
        assert!(RunConfig::load(None, &[], Some("x".into())).is_err());
    }
}
