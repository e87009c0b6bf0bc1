//! Monte Carlo check of the SER predictions: QPSK pilots and data, GAMP
//! channel estimation from quantized pilots, then GAMP detection with the
//! estimated channel.

use crate::error::{Error, Result};
use crate::gamp::{gamp_solve, real_embedding, stack_rows, Denoiser, GampOptions, MatrixNorms, Observation};
use crate::quantizer::{QuantizerSpec, Resolution};
use crate::replica::{default_numerics, solve_training, system_quantizer};
use crate::scalar_awgn::InputPrior;
use ndarray::{Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialConfig {
    /// Transmit antennas.
    pub m: usize,
    /// Receive antennas.
    pub k: usize,
    /// Pilot length.
    pub t: usize,
    pub rho: f64,
    pub bits: Resolution,
    #[serde(default)]
    pub gamp: GampOptions,
    /// Use the empirical row and column energies of the estimated channel
    /// in the detector instead of their large-system values.
    #[serde(default)]
    pub empirical_norms: bool,
}

impl TrialConfig {
    /// K = round(αM), T = round(τ′M).
    pub fn from_ratios(m: usize, alpha: f64, tau_prime: f64, rho: f64, bits: Resolution) -> Result<Self> {
        let cfg = Self {
            m,
            k: (alpha * m as f64).round() as usize,
            t: (tau_prime * m as f64).round() as usize,
            rho,
            bits,
            gamp: GampOptions::default(),
            empirical_norms: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.k == 0 || self.t == 0 {
            return Err(Error::invalid("M, K and T must all be positive"));
        }
        if !(self.rho > 0.0) {
            return Err(Error::invalid(format!("rho must be positive, got {}", self.rho)));
        }
        Ok(())
    }

    /// (signal, noise) per complex entry; ρ = ∞ is simulated noiselessly
    /// with unit signal power and a unit-power calibrated quantizer.
    fn working(&self) -> (f64, f64) {
        if self.rho.is_infinite() {
            (1.0, 0.0)
        } else {
            (self.rho, 1.0)
        }
    }

    fn quantizer(&self) -> Result<QuantizerSpec> {
        system_quantizer(self.bits, self.rho)
    }

    /// Large-system channel-estimation MSE at load T/M.
    pub fn theory_channel_mse(&self) -> Result<f64> {
        let (r, s) = self.working();
        let load = self.t as f64 / self.m as f64;
        Ok(solve_training(r, s, load, &self.quantizer()?, &InputPrior::Gaussian, default_numerics())?.mse)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub symbol_errors: u64,
    pub symbols: u64,
    /// Mean |ĝ − g|² over channel entries.
    pub channel_mse: f64,
}

struct Complex2 {
    re: Array2<f64>,
    im: Array2<f64>,
}

impl Complex2 {
    fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize, var: f64) -> Self {
        let sd = (var / 2.0).sqrt();
        let mut draw = |_| rng.sample::<f64, _>(StandardNormal) * sd;
        let re = Array2::from_shape_fn((rows, cols), &mut draw);
        let im = Array2::from_shape_fn((rows, cols), &mut draw);
        Self { re, im }
    }

    fn qpsk(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Self {
        let mut draw = |_| if rng.random::<bool>() { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
        let re = Array2::from_shape_fn((rows, cols), &mut draw);
        let im = Array2::from_shape_fn((rows, cols), &mut draw);
        Self { re, im }
    }

    fn dot(&self, other: &Complex2) -> Complex2 {
        Complex2 {
            re: self.re.dot(&other.re) - self.im.dot(&other.im),
            im: self.re.dot(&other.im) + self.im.dot(&other.re),
        }
    }

    fn scale(mut self, c: f64) -> Self {
        self.re *= c;
        self.im *= c;
        self
    }

    fn add(mut self, other: &Complex2) -> Self {
        self.re += &other.re;
        self.im += &other.im;
        self
    }

    fn transpose(&self) -> Self {
        Self { re: self.re.t().to_owned(), im: self.im.t().to_owned() }
    }
}

enum Measured {
    Intervals(Array2<f64>, Array2<f64>),
    Linear(Array2<f64>),
}

impl Measured {
    fn observation(&self) -> Observation<'_> {
        match self {
            Measured::Intervals(lo, hi) => Observation::Intervals { lo, hi },
            Measured::Linear(y) => Observation::Linear(y),
        }
    }
}

/// Quantizes a real matrix into (lo, hi] cells.
fn measure(q: &QuantizerSpec, z: Array2<f64>) -> Measured {
    if q.is_linear() {
        return Measured::Linear(z);
    }
    let lo = z.mapv(|v| q.threshold(q.level_of(v) - 1));
    let hi = z.mapv(|v| q.threshold(q.level_of(v)));
    Measured::Intervals(lo, hi)
}

/// One channel realization, T pilots and one data vector.
pub fn gamp2_trial(cfg: &TrialConfig, mse_g: f64, rng: &mut ChaCha8Rng) -> Result<TrialOutcome> {
    let (m, k, t) = (cfg.m, cfg.k, cfg.t);
    let (rho, sigma2) = cfg.working();
    let quant = cfg.quantizer()?;
    let gain = (rho / m as f64).sqrt();
    let qpsk = [-FRAC_1_SQRT_2, FRAC_1_SQRT_2];

    let g = Complex2::gaussian(rng, k, m, 1.0);
    let pilots = Complex2::qpsk(rng, m, t);
    let noise = Complex2::gaussian(rng, k, t, sigma2);
    let z = g.dot(&pilots).scale(gain).add(&noise);

    // receiver k observes (pilotsᵀ) gₖᵀ, so the rows of G are the unknown columns
    let a_train = pilots.transpose().scale(gain);
    let a = real_embedding(&a_train.re, &a_train.im);
    let zt = z.transpose();
    let obs = measure(&quant, stack_rows(&zt.re, &zt.im));
    let est = gamp_solve(&a, obs.observation(), sigma2 / 2.0, Denoiser::Gaussian { var: 0.5 }, None, &cfg.gamp)?;
    let g_hat = Complex2 {
        re: est.mean.slice(ndarray::s![..m, ..]).t().to_owned(),
        im: est.mean.slice(ndarray::s![m.., ..]).t().to_owned(),
    };
    let err = (&g_hat.re - &g.re).mapv(|v| v * v).sum() + (&g_hat.im - &g.im).mapv(|v| v * v).sum();
    let channel_mse = err / (k * m) as f64;

    let x = Complex2::qpsk(rng, m, 1);
    let n = Complex2::gaussian(rng, k, 1, sigma2);
    let y = g.dot(&x).scale(gain).add(&n);
    let obs = measure(&quant, stack_rows(&y.re, &y.im));
    let a_hat = g_hat.scale(gain);
    let a = real_embedding(&a_hat.re, &a_hat.im);
    let norms = if cfg.empirical_norms {
        None
    } else {
        let row = rho * (1.0 - mse_g);
        Some(MatrixNorms { row, col: row * k as f64 / m as f64 })
    };
    let noise_var = (sigma2 + rho * mse_g) / 2.0;
    let det = gamp_solve(&a, obs.observation(), noise_var, Denoiser::Discrete { points: &qpsk }, norms, &cfg.gamp)?;
    let (xr, xi) = det.mean.view().split_at(Axis(0), m);
    let symbol_errors = xr
        .iter()
        .zip(xi.iter())
        .zip(x.re.iter().zip(x.im.iter()))
        .filter(|((er, ei), (tr, ti))| er.is_sign_negative() != tr.is_sign_negative() || ei.is_sign_negative() != ti.is_sign_negative())
        .count() as u64;
    Ok(TrialOutcome { symbol_errors, symbols: m as u64, channel_mse })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McResult {
    pub mean_ser: f64,
    pub binomial_std_error: f64,
    pub n_trials: usize,
    pub n_symbol_decisions: u64,
    pub symbol_errors: u64,
    pub diverged_trials: usize,
    pub mean_channel_mse: f64,
    pub theory_channel_mse: f64,
}

/// Runs `n_trials` independent trials. Trial i draws from ChaCha8 seeded with
/// `seed` on stream i, so results do not depend on the thread count.
pub fn monte_carlo_ser(cfg: &TrialConfig, n_trials: usize, seed: u64) -> Result<McResult> {
    cfg.validate()?;
    if n_trials == 0 {
        return Err(Error::invalid("n_trials must be positive"));
    }
    let mse_g = cfg.theory_channel_mse()?;
    let outcomes: Vec<Result<TrialOutcome>> = (0..n_trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            gamp2_trial(cfg, mse_g, &mut rng)
        })
        .collect();
    let mut errors = 0u64;
    let mut symbols = 0u64;
    let mut mse_sum = 0.0;
    let mut diverged = 0usize;
    for o in outcomes {
        match o {
            Ok(o) => {
                errors += o.symbol_errors;
                symbols += o.symbols;
                mse_sum += o.channel_mse;
            }
            Err(Error::Diverged { .. }) => diverged += 1,
            Err(e) => return Err(e),
        }
    }
    if diverged * 100 > n_trials {
        return Err(Error::TooManyDivergences { failed: diverged, total: n_trials });
    }
    let ok = n_trials - diverged;
    let p = errors as f64 / symbols as f64;
    Ok(McResult {
        mean_ser: p,
        binomial_std_error: (p * (1.0 - p) / symbols as f64).sqrt(),
        n_trials,
        n_symbol_decisions: symbols,
        symbol_errors: errors,
        diverged_trials: diverged,
        mean_channel_mse: mse_sum / ok as f64,
        theory_channel_mse: mse_g,
    })
}
