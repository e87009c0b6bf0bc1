//! Declarative JSON run configuration shared by the CLI subcommands.

use crate::error::{Error, Result};
use crate::fixed_point::SolverOptions;
use crate::gamp::GampOptions;
use crate::quadrature::Quadrature;
use crate::quantizer::{QuantizerSpec, Resolution};
use crate::rate::RateOptions;
use crate::replica::{Numerics, SystemConfig, Training};
use crate::sim::TrialConfig;
use serde::{Deserialize, Serialize};

/// Training load used by `ser` and `simulate` when none is configured.
pub const DEFAULT_TAU_PRIME: f64 = 2.0;

/// Either a number or one of the strings "inf" / "-inf" (JSON has no infinity).
pub mod extended_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Str(s) => match s.as_str() {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got \"{other}\""))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureKind {
    /// Composite Gauss-Legendre refined around quantizer transitions.
    #[default]
    Composite,
    /// Plain Gauss-Hermite with `hermite_nodes` nodes.
    Hermite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsConfig {
    pub quadrature: QuadratureKind,
    pub hermite_nodes: usize,
    pub solver: SolverOptions,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self { quadrature: QuadratureKind::Composite, hermite_nodes: 200, solver: SolverOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    /// Transmit antennas; K and T follow from α and τ′.
    pub m: usize,
    pub n_trials: usize,
    pub seed: u64,
    pub gamp: GampOptions,
    pub empirical_norms: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self { m: 50, n_trials: 10_000, seed: 0, gamp: GampOptions::default(), empirical_norms: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// SNR in dB; "inf" selects the noiseless limit.
    #[serde(with = "extended_f64")]
    pub rho_db: f64,
    pub sigma2: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Training fraction of the coherence block.
    pub tau: Option<f64>,
    /// Training length over the transmitter count, used instead of `tau`.
    pub tau_prime: Option<f64>,
    /// DAC resolution (bits per real component, or "inf").
    pub a: Resolution,
    /// ADC resolution.
    pub b: Resolution,
    /// Quantizer step; the calibrated step is used when absent.
    pub step: Option<f64>,
    /// Skips the training fixed point and uses this channel mse.
    pub mse_g: Option<f64>,
    pub numerics: NumericsConfig,
    pub rate: RateOptions,
    pub simulation: SimulationConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            rho_db: 10.0,
            sigma2: 1.0,
            alpha: 4.0,
            beta: 40.0,
            tau: None,
            tau_prime: None,
            a: Resolution::Bits(1),
            b: Resolution::Bits(1),
            step: None,
            mse_g: None,
            numerics: NumericsConfig::default(),
            rate: RateOptions::default(),
            simulation: SimulationConfig::default(),
        }
    }
}

impl RunConfig {
    /// Parses JSON, reporting the path of the offending key on failure.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |path: &str, message: String| Err(Error::Config { path: path.into(), message });
        if self.rho_db.is_nan() || self.rho_db == f64::NEG_INFINITY {
            return cfg_err("rho_db", "must be a number or \"inf\"".into());
        }
        if self.tau.is_some() && self.tau_prime.is_some() {
            return cfg_err("tau_prime", "give either tau or tau_prime, not both".into());
        }
        if let Some(t) = self.tau {
            if !(t > 0.0 && t < 1.0) {
                return cfg_err("tau", format!("must lie in (0, 1), got {t}"));
            }
        }
        if let Some(t) = self.tau_prime {
            if !(t > 0.0) || !t.is_finite() {
                return cfg_err("tau_prime", format!("must be positive, got {t}"));
            }
        }
        if let Some(s) = self.step {
            if self.b.is_infinite() {
                return cfg_err("step", "a step needs a finite b".into());
            }
            if !(s > 0.0) || !s.is_finite() {
                return cfg_err("step", format!("must be positive, got {s}"));
            }
        }
        if let Some(m) = self.mse_g {
            if !(0.0..=1.0).contains(&m) {
                return cfg_err("mse_g", format!("must lie in [0, 1], got {m}"));
            }
        }
        if self.numerics.hermite_nodes < 2 || self.numerics.hermite_nodes > 1000 {
            return cfg_err("numerics.hermite_nodes", format!("must be in 2..=1000, got {}", self.numerics.hermite_nodes));
        }
        self.numerics.solver.validate().map_err(|e| Error::Config { path: "numerics.solver".into(), message: e.to_string() })?;
        Ok(())
    }

    /// Linear SNR.
    pub fn rho(&self) -> f64 {
        if self.rho_db.is_infinite() {
            f64::INFINITY
        } else {
            10f64.powf(self.rho_db / 10.0)
        }
    }

    pub fn training(&self) -> Result<Training> {
        match (self.tau, self.tau_prime) {
            (Some(t), None) => Ok(Training::Fraction(t)),
            (None, Some(t)) => Ok(Training::Load(t)),
            _ => Err(Error::Config { path: "tau".into(), message: "this command needs tau or tau_prime".into() }),
        }
    }

    pub fn numerics(&self) -> Numerics {
        let quadrature = match self.numerics.quadrature {
            QuadratureKind::Composite => Quadrature::composite(),
            QuadratureKind::Hermite => Quadrature::hermite(self.numerics.hermite_nodes),
        };
        Numerics { quadrature, solver: self.numerics.solver }
    }

    /// System with the given training; applies the step override.
    pub fn system_with(&self, training: Training) -> Result<SystemConfig> {
        let mut cfg = SystemConfig::new(self.rho(), self.alpha, self.beta, training, self.b, self.a)?;
        cfg.sigma2 = self.sigma2;
        if let (Some(step), Resolution::Bits(b)) = (self.step, self.b) {
            cfg.quantizer = QuantizerSpec::uniform(b, step)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn system(&self) -> Result<SystemConfig> {
        self.system_with(self.training()?)
    }

    /// Training load for SER and simulation: τ′ if given, else τβ, else 2.
    pub fn load_tau_prime(&self) -> f64 {
        match (self.tau, self.tau_prime) {
            (_, Some(tp)) => tp,
            (Some(t), None) => t * self.beta,
            (None, None) => DEFAULT_TAU_PRIME,
        }
    }

    pub fn trial(&self) -> Result<TrialConfig> {
        let tp = self.load_tau_prime();
        let mut t = TrialConfig::from_ratios(self.simulation.m, self.alpha, tp, self.rho(), self.b)?;
        t.gamp = self.simulation.gamp;
        t.empirical_norms = self.simulation.empirical_norms;
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        let text = cfg.to_json_pretty().unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), cfg);
        assert!(text.contains("\"hermite_nodes\": 200"));
    }

    #[test]
    fn unknown_key_is_reported_with_its_path() {
        match RunConfig::from_json(r#"{"numerics": {"solver": {"dampng": 0.3}}}"#) {
            Err(Error::Config { path, message }) => {
                assert_eq!(path, "numerics.solver.dampng");
                assert!(message.contains("dampng"), "{message}");
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn infinite_snr_is_spelled_out() {
        let cfg = RunConfig::from_json(r#"{"rho_db": "inf", "tau": 0.1}"#).unwrap();
        assert!(cfg.rho().is_infinite());
        assert!(cfg.to_json_pretty().unwrap().contains("\"rho_db\": \"inf\""));
        assert!(RunConfig::from_json(r#"{"tau": 0.1, "tau_prime": 2}"#).is_err());
    }
}
