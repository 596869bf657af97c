//! Flat `key = value` run configuration.
//!
//! Values are resolved in order: built-in defaults, config file,
//! `HETASYM_<KEY>` environment variables, then command-line flags.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const ENV_PREFIX: &str = "HETASYM_";

/// Where the tomography pipeline takes each pulse's reference phase from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseSource {
    /// The `phase_true` column.
    True,
    /// Block estimates from the quadratures themselves.
    Estimated,
}

impl FromStr for PhaseSource {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "true" => Ok(Self::True),
            "estimated" => Ok(Self::Estimated),
            _ => Err(format!("expected `true` or `estimated`, got `{s}`")),
        }
    }
}

impl fmt::Display for PhaseSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::True => "true",
            Self::Estimated => "estimated",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MiModel(pub hetasym_core::MutualInfoModel);

impl FromStr for MiModel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        use hetasym_core::MutualInfoModel::*;
        match s {
            "line" => Ok(Self(LineOnly)),
            "trusted" => Ok(Self(TrustedDetector)),
            _ => Err(format!("expected `line` or `trusted`, got `{s}`")),
        }
    }
}

impl fmt::Display for MiModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use hetasym_core::MutualInfoModel::*;
        f.write_str(match self.0 {
            LineOnly => "line",
            TrustedDetector => "trusted",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Convention(pub hetasym_core::FidelityConvention);

impl FromStr for Convention {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        use hetasym_core::FidelityConvention::*;
        match s {
            "sqrt" => Ok(Self(Sqrt)),
            "squared" => Ok(Self(Squared)),
            _ => Err(format!("expected `sqrt` or `squared`, got `{s}`")),
        }
    }
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use hetasym_core::FidelityConvention::*;
        f.write_str(match self.0 {
            Sqrt => "sqrt",
            Squared => "squared",
        })
    }
}

/// Comma-separated list of numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatList(pub Vec<f64>);

impl FromStr for FloatList {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let v = s
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{}`: {e}", t.trim())))
            .collect::<Result<Vec<_>, _>>()?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err("list entries must be finite".into());
        }
        Ok(Self(v))
    }
}

impl fmt::Display for FloatList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

/// A number or `none`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaybeFloat(pub Option<f64>);

impl FromStr for MaybeFloat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s == "none" {
            return Ok(Self(None));
        }
        s.parse::<f64>().map(|v| Self(Some(v))).map_err(|e| e.to_string())
    }
}

impl fmt::Display for MaybeFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(v) => write!(f, "{v}"),
            None => f.write_str("none"),
        }
    }
}

macro_rules! run_config {
    ($($(#[$doc:meta])* $key:ident : $ty:ty = $default:expr,)*) => {
        /// Every tunable of a run. Field names are the config keys.
        #[derive(Debug, Clone, PartialEq)]
        pub struct RunConfig {
            $($(#[$doc])* pub $key: $ty,)*
        }

        impl Default for RunConfig {
            fn default() -> Self {
                Self { $($key: $default,)* }
            }
        }

        impl RunConfig {
            pub const KEYS: &'static [&'static str] = &[$(stringify!($key),)*];

            /// Parses `value` into the field named `key`.
            pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
                match key {
                    $(stringify!($key) => {
                        self.$key = value.parse::<$ty>().map_err(|e| {
                            CliError::Invalid(format!("config key `{key}`: cannot parse `{value}`: {e}"))
                        })?;
                    })*
                    _ => return Err(CliError::Invalid(format!("unknown config key `{key}`"))),
                }
                Ok(())
            }

            /// Resolved `(key, value)` pairs in declaration order.
            pub fn entries(&self) -> Vec<(&'static str, String)> {
                vec![$((stringify!($key), self.$key.to_string()),)*]
            }
        }
    };
}

run_config! {
    seed: u64 = 0,
    /// Input CSV for commands that read a trace or density matrix.
    input: String = String::new(),
    /// Second density matrix for `fidelity`; empty compares to the fitted coherent state.
    reference: String = String::new(),
    out: String = String::new(),

    amplitude_sq: f64 = 552.0,
    phase_points: usize = 360,
    phase_start: f64 = 0.0,
    phase_stop: f64 = std::f64::consts::TAU,
    pulses_per_phase: usize = 1,
    /// Overrides `gain_x`/`gain_p` when set.
    asymmetry_percent: MaybeFloat = MaybeFloat(None),
    gain_x: f64 = 1.0,
    gain_p: f64 = 1.0,
    hybrid_phase_error: f64 = 0.0,
    shot_noise_var: f64 = 1.0,
    elec_noise_var: f64 = 0.0,
    responsivity: f64 = 1.0,
    p_lo: f64 = 1.0,
    noiseless: bool = false,

    block: usize = 1,
    linewidth_a: f64 = 0.0,
    linewidth_b: f64 = 0.0,
    pulse_separation: f64 = 0.0,
    v_path: f64 = 0.0,

    v_a: f64 = 10.0,
    beta: f64 = 0.93,
    xi_line: f64 = 0.02,
    eta: f64 = 0.68,
    v_elec: f64 = 0.1,
    alpha_db_per_km: f64 = 0.2,
    baud: f64 = 1.0,
    frame_ratio: f64 = 1.0,
    mi_model: MiModel = MiModel(hetasym_core::MutualInfoModel::LineOnly),
    xi_det_values: FloatList = FloatList(vec![0.1091, 0.0318, 0.0140, 0.0032, 0.0016, 0.0]),
    distance_max_km: f64 = 60.0,
    distance_step_km: f64 = 1.0,
    distance_resolution_km: f64 = 1e-3,

    dim: usize = 25,
    max_iter: usize = 2000,
    tol: f64 = 1e-8,
    phase_source: PhaseSource = PhaseSource::True,
    wigner_min: f64 = -6.0,
    wigner_max: f64 = 6.0,
    wigner_points: usize = 121,
    convention: Convention = Convention(hetasym_core::FidelityConvention::Sqrt),
}

impl RunConfig {
    /// Applies a config file body on top of the current values.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        let mut seen = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = || format!("config line {}", lineno + 1);
            if line.starts_with('[') {
                return Err(CliError::Invalid(format!("{}: sections are not supported", at())));
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Invalid(format!("{}: expected `key = value`", at())))?;
            let (key, value) = (key.trim(), value.trim());
            if let Some(prev) = seen.insert(key.to_string(), lineno + 1) {
                return Err(CliError::Invalid(format!("{}: `{key}` already set on line {prev}", at())));
            }
            self.set(key, value).map_err(|e| CliError::Invalid(format!("{}: {}", at(), e.message())))?;
        }
        Ok(())
    }

    /// Applies `HETASYM_<KEY>` variables. Unknown keys under the prefix are errors.
    pub fn apply_env<I>(&mut self, vars: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut vars: Vec<(String, String)> =
            vars.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
        vars.sort();
        for (name, value) in vars {
            let key = name[ENV_PREFIX.len()..].to_ascii_lowercase();
            self.set(&key, value.trim())
                .map_err(|e| CliError::Invalid(format!("environment {name}: {}", e.message())))?;
        }
        Ok(())
    }

    /// The resolved configuration, one `key = value` per line.
    pub fn render(&self) -> String {
        self.entries().iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.render().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
