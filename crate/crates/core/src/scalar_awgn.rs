//! Mutual information and MMSE of the scalar complex channel y = √λ·x + n,
//! n ~ CN(0,1).
//!
//! Real and imaginary parts decouple, so every quantity is computed for one
//! real component (noise variance 1/2, signal variance 1/2) and doubled.
//! Internals use nats; the public mutual information is in bits.

use crate::error::{Error, Result};
use crate::quadrature::{hermite_200, GaussHermite};
use crate::quantizer::Resolution;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::f64::consts::LN_2;

/// Largest supported DAC resolution for a discrete prior.
pub const MAX_PRIOR_BITS: u32 = 6;

/// Per-component symbol distribution with total complex variance one.
#[derive(Debug, Clone, PartialEq)]
pub enum InputPrior {
    /// 2^a equiprobable, uniformly spaced, symmetric levels per component.
    Discrete { bits: u32, points: Vec<f64> },
    /// Zero-mean Gaussian with per-component variance 1/2.
    Gaussian,
}

/// Channel entries use the same family; Rayleigh fading is the Gaussian case.
pub type ChannelPrior = InputPrior;

impl InputPrior {
    pub fn discrete(bits: u32) -> Result<Self> {
        if bits == 0 || bits > MAX_PRIOR_BITS {
            return Err(Error::invalid(format!(
                "input resolution a must be in 1..={MAX_PRIOR_BITS}, got {bits}"
            )));
        }
        let m = 1usize << bits;
        let mf = m as f64;
        // spacing d gives variance d²(m²-1)/12 = 1/2
        let d = (6.0 / (mf * mf - 1.0)).sqrt();
        let points = (0..m)
            .map(|j| (2.0 * j as f64 - (mf - 1.0)) * d / 2.0)
            .collect();
        Ok(InputPrior::Discrete { bits, points })
    }

    pub fn qpsk() -> Self {
        Self::discrete(1).expect("a = 1 is always valid")
    }

    pub fn from_resolution(a: Resolution) -> Result<Self> {
        match a {
            Resolution::Infinite => Ok(InputPrior::Gaussian),
            Resolution::Bits(b) => Self::discrete(b),
        }
    }

    pub fn resolution(&self) -> Resolution {
        match self {
            InputPrior::Discrete { bits, .. } => Resolution::Bits(*bits),
            InputPrior::Gaussian => Resolution::Infinite,
        }
    }

    /// Per-component support (empty for the Gaussian prior).
    pub fn points(&self) -> &[f64] {
        match self {
            InputPrior::Discrete { points, .. } => points,
            InputPrior::Gaussian => &[],
        }
    }

    /// Entropy of one complex symbol in bits; infinite for the Gaussian prior.
    pub fn entropy_bits(&self) -> f64 {
        match self {
            InputPrior::Discrete { bits, .. } => 2.0 * *bits as f64,
            InputPrior::Gaussian => f64::INFINITY,
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, InputPrior::Gaussian)
    }
}

impl Serialize for InputPrior {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.resolution().serialize(s)
    }
}

impl<'de> Deserialize<'de> for InputPrior {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let a = Resolution::deserialize(d)?;
        InputPrior::from_resolution(a).map_err(serde::de::Error::custom)
    }
}

/// How the Gaussian prior is evaluated. Discrete priors always use quadrature.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum GaussianMethod {
    #[default]
    ClosedForm,
    /// Nested Gauss-Hermite evaluation, kept as a self-test of the quadrature path.
    Quadrature,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::invalid(format!("lambda must be >= 0, got {lambda}")));
    }
    Ok(())
}

/// I(x; y) in bits.
pub fn mutual_info_awgn(lambda: f64, prior: &InputPrior) -> Result<f64> {
    mutual_info_awgn_with(lambda, prior, GaussianMethod::ClosedForm)
}

pub fn mutual_info_awgn_with(lambda: f64, prior: &InputPrior, method: GaussianMethod) -> Result<f64> {
    check_lambda(lambda)?;
    if lambda == 0.0 {
        return Ok(0.0);
    }
    if lambda.is_infinite() {
        return Ok(prior.entropy_bits());
    }
    let nats = match (prior, method) {
        (InputPrior::Gaussian, GaussianMethod::ClosedForm) => lambda.ln_1p(),
        (InputPrior::Gaussian, GaussianMethod::Quadrature) => 2.0 * gaussian_real_quadrature(lambda).0,
        (InputPrior::Discrete { points, .. }, _) => 2.0 * discrete_real(lambda, points, hermite_200()).0,
    };
    Ok((nats / LN_2).max(0.0))
}

/// E|x - E[x|y]|², in [0, 1].
pub fn mmse_awgn(lambda: f64, prior: &InputPrior) -> Result<f64> {
    mmse_awgn_with(lambda, prior, GaussianMethod::ClosedForm)
}

pub fn mmse_awgn_with(lambda: f64, prior: &InputPrior, method: GaussianMethod) -> Result<f64> {
    check_lambda(lambda)?;
    if lambda == 0.0 {
        return Ok(1.0);
    }
    if lambda.is_infinite() {
        return Ok(0.0);
    }
    let mse = match (prior, method) {
        (InputPrior::Gaussian, GaussianMethod::ClosedForm) => 1.0 / (1.0 + lambda),
        (InputPrior::Gaussian, GaussianMethod::Quadrature) => 2.0 * gaussian_real_quadrature(lambda).1,
        (InputPrior::Discrete { points, .. }, _) => 2.0 * discrete_real(lambda, points, hermite_200()).1,
    };
    Ok(mse.clamp(0.0, 1.0))
}

/// Real-component (mutual information in nats, MMSE) for a discrete prior.
///
/// With d_j = x - c_j and n ~ N(0, 1/2):
///   I = -E_x E_n ln[(1/m) Σ_j exp(-λ d_j² - 2√λ d_j n)]
/// and the posterior weights over c_j carry the same exponents.
pub(crate) fn discrete_real(lambda: f64, points: &[f64], gh: &GaussHermite) -> (f64, f64) {
    let m = points.len();
    let sl = lambda.sqrt();
    let ln_m = (m as f64).ln();
    let mut expo = vec![0.0; m];
    let mut info = 0.0;
    let mut mse = 0.0;
    // the support is symmetric, so the upper half of the points suffices
    let half = &points[m / 2..];
    for &x in half {
        for (z, w) in gh.standard_normal() {
            let n = z * std::f64::consts::FRAC_1_SQRT_2;
            let mut top = f64::NEG_INFINITY;
            for (e, &c) in expo.iter_mut().zip(points) {
                let d = x - c;
                *e = -lambda * d * d - 2.0 * sl * d * n;
                top = top.max(*e);
            }
            let mut norm = 0.0;
            let mut mean = 0.0;
            for (&e, &c) in expo.iter().zip(points) {
                let p = (e - top).exp();
                norm += p;
                mean += p * c;
            }
            let lse = top + norm.ln() - ln_m;
            info -= w * lse;
            let err = x - mean / norm;
            mse += w * err * err;
        }
    }
    let k = half.len() as f64;
    (info / k, mse / k)
}

// Nested Hermite evaluation for a N(0, 1/2) input: the outer rule samples
// (x, n), the inner rule computes p(y) and E[x|y].
fn gaussian_real_quadrature(lambda: f64) -> (f64, f64) {
    let gh = hermite_200();
    let sl = lambda.sqrt();
    let inner: Vec<(f64, f64)> = gh
        .standard_normal()
        .map(|(z, w)| (z * std::f64::consts::FRAC_1_SQRT_2, w))
        .collect();
    let mut info = 0.0;
    let mut mse = 0.0;
    for &(x, wx) in &inner {
        for &(n, wn) in &inner {
            let y = sl * x + n;
            // ln p(y|x) - ln p(y) with the common Gaussian constant removed
            let mut top = f64::NEG_INFINITY;
            for &(c, _) in &inner {
                let r = y - sl * c;
                top = top.max(-r * r);
            }
            let mut norm = 0.0;
            let mut mean = 0.0;
            for &(c, wc) in &inner {
                let r = y - sl * c;
                let p = wc * (-r * r - top).exp();
                norm += p;
                mean += p * c;
            }
            let log_ratio = -n * n - (top + norm.ln());
            info += wx * wn * log_ratio;
            let err = x - mean / norm;
            mse += wx * wn * err * err;
        }
    }
    (info, mse)
}
