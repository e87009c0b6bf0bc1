//! b-bit uniform quantizer, step calibration, and the Ψ kernels.
//!
//! Thresholds follow r_k = (k - 2^{b-1})·Δ for k = 1..2^b - 1 with sentinels
//! r_0 = -∞ and r_{2^b} = +∞; level k covers the half-open interval
//! (r_{k-1}, r_k]. Real and imaginary parts are quantized independently.

use crate::error::{Error, Result};
use crate::special::{normal_interval, normal_quantile, INV_SQRT_2PI};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::f64::consts::SQRT_2;
use std::fmt;

/// Largest finite resolution accepted. Kernel sums are O(2^b) per node.
pub const MAX_BITS: u32 = 16;

/// Receiver (or transmitter) resolution: a finite bit count or unquantized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Resolution {
    Bits(u32),
    Infinite,
}

impl Resolution {
    pub fn is_infinite(self) -> bool {
        matches!(self, Resolution::Infinite)
    }

    pub fn bits(self) -> Option<u32> {
        match self {
            Resolution::Bits(b) => Some(b),
            Resolution::Infinite => None,
        }
    }
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Resolution::Bits(b) => write!(f, "{b}"),
            Resolution::Infinite => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for Resolution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinite" | "infinity" => Ok(Resolution::Infinite),
            other => other
                .parse::<u32>()
                .map_err(|_| Error::invalid(format!("resolution must be a bit count or `inf`, got `{s}`")))
                .and_then(|b| {
                    if b == 0 {
                        Err(Error::invalid("resolution must be at least 1 bit"))
                    } else {
                        Ok(Resolution::Bits(b))
                    }
                }),
        }
    }
}

// JSON form: a positive integer or the string "inf".
impl Serialize for Resolution {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Resolution::Bits(b) => s.serialize_u32(*b),
            Resolution::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Resolution {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u32),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(0) => Err(serde::de::Error::custom("resolution must be at least 1 bit")),
            Raw::Int(b) => Ok(Resolution::Bits(b)),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Step Δ that makes each extreme level occur with probability 2^{-b} for a
/// real Gaussian input of variance (1+ρ)/2.
///
/// For b = 1 the only threshold is zero and any Δ works; 1.0 is returned.
pub fn calibrate_step(bits: Resolution, rho: f64) -> Result<f64> {
    let b = bits
        .bits()
        .ok_or_else(|| Error::invalid("an unquantized receiver has no step size"))?;
    if b == 0 || b > MAX_BITS {
        return Err(Error::invalid(format!("bits must be in 1..={MAX_BITS}, got {b}")));
    }
    if !(rho >= 0.0) || rho.is_infinite() {
        return Err(Error::invalid(format!("rho must be finite and >= 0, got {rho}")));
    }
    if b == 1 {
        return Ok(1.0);
    }
    let levels_half = (1u64 << (b - 1)) as f64;
    let tail = normal_quantile(1.0 - 0.5f64.powi(b as i32));
    Ok(((1.0 + rho) / 2.0).sqrt() * tail / (levels_half - 1.0))
}

/// Output of [`QuantizerSpec::quantize`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quantized {
    /// 1-based level index.
    Level(usize),
    /// Unquantized receiver passes the input through.
    Identity(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizerSpec {
    bits: Resolution,
    step: Option<f64>,
    thresholds: Vec<f64>,
}

impl QuantizerSpec {
    pub fn uniform(bits: u32, step: f64) -> Result<Self> {
        if bits == 0 || bits > MAX_BITS {
            return Err(Error::invalid(format!("bits must be in 1..={MAX_BITS}, got {bits}")));
        }
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::invalid(format!("step must be positive and finite, got {step}")));
        }
        let half = 1i64 << (bits - 1);
        let thresholds = (1..(2 * half))
            .map(|k| (k - half) as f64 * step)
            .collect();
        Ok(Self {
            bits: Resolution::Bits(bits),
            step: Some(step),
            thresholds,
        })
    }

    /// The unquantized receiver f(w) = w.
    pub fn linear() -> Self {
        Self {
            bits: Resolution::Infinite,
            step: None,
            thresholds: Vec::new(),
        }
    }

    /// Uniform quantizer with the calibrated step for SNR `rho`.
    pub fn calibrated(bits: Resolution, rho: f64) -> Result<Self> {
        match bits {
            Resolution::Infinite => Ok(Self::linear()),
            Resolution::Bits(b) => Self::uniform(b, calibrate_step(bits, rho)?),
        }
    }

    pub fn bits(&self) -> Resolution {
        self.bits
    }

    pub fn step(&self) -> Option<f64> {
        self.step
    }

    pub fn is_linear(&self) -> bool {
        self.bits.is_infinite()
    }

    /// Finite thresholds r_1..r_{2^b-1}.
    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    /// Number of output levels 2^b (0 for the linear receiver).
    pub fn levels(&self) -> usize {
        match self.bits {
            Resolution::Bits(_) => self.thresholds.len() + 1,
            Resolution::Infinite => 0,
        }
    }

    /// r_k with sentinels r_0 = -∞ and r_{2^b} = +∞.
    pub fn threshold(&self, k: usize) -> f64 {
        if k == 0 {
            f64::NEG_INFINITY
        } else if k > self.thresholds.len() {
            f64::INFINITY
        } else {
            self.thresholds[k - 1]
        }
    }

    /// Same quantizer with every threshold multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Self {
        Self {
            bits: self.bits,
            step: self.step.map(|d| d * factor),
            thresholds: self.thresholds.iter().map(|t| t * factor).collect(),
        }
    }

    pub fn quantize(&self, w: f64) -> Quantized {
        if self.is_linear() {
            Quantized::Identity(w)
        } else {
            Quantized::Level(self.level_of(w))
        }
    }

    /// 1-based level of `w`; ties go to the lower interval.
    pub fn level_of(&self, w: f64) -> usize {
        // number of thresholds strictly below w, plus one
        self.thresholds.partition_point(|&r| r < w) + 1
    }

    fn check_kernel_args(&self, k: usize, s: f64) -> Result<()> {
        if self.is_linear() {
            return Err(Error::invalid("Ψ kernels are undefined for an unquantized receiver"));
        }
        if k == 0 || k > self.levels() {
            return Err(Error::invalid(format!(
                "level index {k} outside 1..={}",
                self.levels()
            )));
        }
        if !(s > 0.0) {
            return Err(Error::invalid(format!("s must be positive, got {s}")));
        }
        Ok(())
    }

    /// Ψ_k(w, s) = Φ((√2 r_k − w)/√s) − Φ((√2 r_{k−1} − w)/√s).
    pub fn psi(&self, k: usize, w: f64, s: f64) -> Result<f64> {
        self.check_kernel_args(k, s)?;
        let sd = s.sqrt();
        let lo = (SQRT_2 * self.threshold(k - 1) - w) / sd;
        let hi = (SQRT_2 * self.threshold(k) - w) / sd;
        Ok(normal_interval(lo, hi))
    }

    /// Ψ'_k(w, s) as printed:
    /// [e^{-(√2 r_k − w)²/2s} − e^{-(√2 r_{k−1} − w)²/2s}] / √(2πs).
    ///
    /// This equals −∂Ψ_k/∂w. Only its square enters χ; message-passing code
    /// that needs the true derivative negates it.
    pub fn psi_prime(&self, k: usize, w: f64, s: f64) -> Result<f64> {
        self.check_kernel_args(k, s)?;
        Ok(kernel_edge(self.threshold(k), w, s) - kernel_edge(self.threshold(k - 1), w, s))
    }

    /// Evaluates Ψ_k and Ψ'_k for every level at once into the given buffers.
    /// Each threshold costs a single erfc.
    pub(crate) fn kernels_into(&self, w: f64, s: f64, psi: &mut Vec<f64>, dpsi: &mut Vec<f64>) {
        let n = self.levels();
        psi.clear();
        dpsi.clear();
        let sd = s.sqrt();
        let norm = INV_SQRT_2PI / sd;
        // (lower tail mass, upper tail mass, density term) at each edge
        let mut prev = (0.0, 1.0, 0.0);
        for k in 1..=n {
            let cur = if k == n {
                (1.0, 0.0, 0.0)
            } else {
                let t = (SQRT_2 * self.thresholds[k - 1] - w) / sd;
                let small = crate::special::normal_sf(t.abs());
                let (below, above) = if t >= 0.0 { (1.0 - small, small) } else { (small, 1.0 - small) };
                (below, above, norm * (-0.5 * t * t).exp())
            };
            // pick the subtraction that avoids cancellation
            let p = if cur.0 <= 0.5 {
                cur.0 - prev.0
            } else if prev.1 <= 0.5 {
                prev.1 - cur.1
            } else {
                1.0 - prev.0 - cur.1
            };
            psi.push(p.max(0.0));
            dpsi.push(cur.2 - prev.2);
            prev = cur;
        }
    }
}

// e^{-(√2 r − w)²/(2s)} / √(2πs), zero at infinite sentinels
fn kernel_edge(r: f64, w: f64, s: f64) -> f64 {
    if r.is_infinite() {
        return 0.0;
    }
    let d = SQRT_2 * r - w;
    (-(d * d) / (2.0 * s)).exp() * INV_SQRT_2PI / s.sqrt()
}
