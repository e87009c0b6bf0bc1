//! Rates per transmitter, training optimisation, the linearised (Bussgang)
//! baseline, and the small- and large-α approximations.

use crate::error::{Error, Result};
use crate::quantizer::{calibrate_step, QuantizerSpec, Resolution};
use crate::replica::{
    analyze_with_training, default_numerics, mutual_info_known, solve_training, system_quantizer, Numerics,
    SystemConfig, Training,
};
use crate::scalar_awgn::InputPrior;
use crate::search::{bisect, golden_max, log_grid};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RateOptions {
    /// Log-spaced τ grid used to bracket the optimum.
    pub grid_points: usize,
    pub tau_min: f64,
    /// Golden-section stopping width in τ.
    pub tau_tol: f64,
    /// Largest tolerated fraction of grid points whose solve failed.
    pub max_failed_fraction: f64,
}

impl Default for RateOptions {
    fn default() -> Self {
        Self {
            grid_points: 256,
            tau_min: 1e-4,
            tau_tol: 1e-6,
            max_failed_fraction: 0.1,
        }
    }
}

/// Maximiser of a τ-objective plus the sampled curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauOptimum {
    pub tau_opt: f64,
    pub value: f64,
    /// (τ, objective) at every grid point that evaluated.
    pub curve: Vec<(f64, f64)>,
}

/// Grid search on [τ_min, 1] followed by golden-section refinement of the best
/// bracket. Grid points are evaluated in parallel and reduced in grid order.
pub fn maximize_over_tau<F>(objective: F, opts: &RateOptions) -> Result<TauOptimum>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if opts.grid_points < 3 || !(opts.tau_min > 0.0 && opts.tau_min < 1.0) {
        return Err(Error::invalid("tau grid needs >= 3 points and 0 < tau_min < 1"));
    }
    let grid = log_grid(opts.tau_min, 1.0, opts.grid_points);
    let values: Vec<Result<f64>> = grid.par_iter().map(|&t| objective(t)).collect();
    let total = grid.len();
    let mut curve = Vec::with_capacity(total);
    let mut failed = 0;
    let mut first_err = None;
    for (&t, v) in grid.iter().zip(values) {
        match v {
            Ok(v) if !v.is_nan() => curve.push((t, v)),
            Ok(_) => failed += 1,
            Err(e) => {
                failed += 1;
                first_err.get_or_insert(e);
            }
        }
    }
    if curve.is_empty() {
        return Err(first_err.unwrap_or(Error::TooManyFailures { failed, total }));
    }
    if failed as f64 > opts.max_failed_fraction * total as f64 {
        return Err(Error::TooManyFailures { failed, total });
    }
    // first maximum in grid order breaks ties deterministically
    let mut best = 0;
    for (i, &(_, v)) in curve.iter().enumerate() {
        if v > curve[best].1 {
            best = i;
        }
    }
    let (t_best, v_best) = curve[best];
    if !v_best.is_finite() {
        return Ok(TauOptimum { tau_opt: t_best, value: v_best, curve });
    }
    let lo = if best == 0 { opts.tau_min } else { curve[best - 1].0 };
    let hi = if best + 1 == curve.len() { 1.0 } else { curve[best + 1].0 };
    let (t, v) = golden_max(&objective, lo, hi, opts.tau_tol)?;
    let (tau_opt, value) = if v >= v_best { (t, v) } else { (t_best, v_best) };
    Ok(TauOptimum { tau_opt, value, curve })
}

/// (1 − τ)·α·𝕀 at training fraction τ.
pub fn rate_at_tau(cfg: &SystemConfig, tau: f64, num: &Numerics) -> Result<f64> {
    let mut c = cfg.clone();
    c.training = Training::Fraction(tau);
    let (r, s) = c.working();
    let g = solve_training(r, s, c.load(), &c.quantizer, &c.channel_prior, num)?;
    let a = analyze_with_training(&c, &g, num)?;
    Ok((1.0 - tau) * c.alpha * a.terms.info)
}

/// R_opt = max_τ (1 − τ)α𝕀 with its maximiser. `cfg.training` is ignored.
pub fn optimize_training(cfg: &SystemConfig, num: &Numerics, opts: &RateOptions) -> Result<TauOptimum> {
    cfg.validate()?;
    if cfg.rho == 0.0 {
        return Ok(TauOptimum { tau_opt: opts.tau_min, value: 0.0, curve: Vec::new() });
    }
    maximize_over_tau(|t| rate_at_tau(cfg, t, num), opts)
}

/// R_known = α·𝕀 of the system with a genie-known channel.
pub fn rate_known(
    rho: f64,
    sigma2: f64,
    alpha: f64,
    quantizer: &QuantizerSpec,
    prior: &InputPrior,
    num: &Numerics,
) -> Result<f64> {
    if !(rho >= 0.0) {
        return Err(Error::invalid(format!("rho must be >= 0, got {rho}")));
    }
    let (r, s) = if rho.is_infinite() { (1.0, 0.0) } else { (rho, sigma2) };
    Ok(alpha * mutual_info_known(r, s, alpha, quantizer, prior, num)?.0.info)
}

/// Linear gain η of the Bussgang decomposition for b ∈ {1, 2}.
pub fn bussgang_eta(bits: u32, rho: f64, step: f64) -> Result<f64> {
    match bits {
        1 => Ok(2.0 / PI),
        2 => {
            let t = 1.0 + 2.0 * (-step * step / (rho + 1.0)).exp();
            Ok(2.0 / (5.0 * PI) * t * t)
        }
        _ => Err(Error::invalid(format!("the linearised model is defined for b = 1 or 2, got {bits}"))),
    }
}

/// ρ_L = ηρ / ((1 − η)ρ + 1).
pub fn linearized_snr(eta: f64, rho: f64) -> f64 {
    eta * rho / ((1.0 - eta) * rho + 1.0)
}

/// ρ_eff = τβρ_L² / (1 + (1 + τβ)ρ_L).
pub fn effective_snr(load: f64, rho_l: f64) -> f64 {
    load * rho_l * rho_l / (1.0 + (1.0 + load) * rho_l)
}

/// R_L = max_τ (1 − τ)·α·𝕀_linear(ρ_eff(τ), 1), returned with its maximiser.
pub fn bussgang_rate(
    rho: f64,
    alpha: f64,
    beta: f64,
    bits: u32,
    prior: &InputPrior,
    num: &Numerics,
    opts: &RateOptions,
) -> Result<TauOptimum> {
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(Error::invalid("the linearised rate needs a finite rho"));
    }
    let step = if bits == 2 { calibrate_step(Resolution::Bits(2), rho)? } else { 1.0 };
    let rho_l = linearized_snr(bussgang_eta(bits, rho, step)?, rho);
    let lin = QuantizerSpec::linear();
    maximize_over_tau(
        |t| {
            let r_eff = effective_snr(t * beta, rho_l);
            Ok((1.0 - t) * alpha * mutual_info_known(r_eff, 1.0, alpha, &lin, prior, num)?.0.info)
        },
        opts,
    )
}

/// (1 − τ)[H̄(0, σ̄² + ρ̄) − H̄(ρ̄, σ̄²)] in bits per receiver. Depends on
/// neither α nor the input prior.
pub fn small_alpha_rate(
    tau: f64,
    rho: f64,
    sigma2: f64,
    beta: f64,
    quantizer: &QuantizerSpec,
    num: &Numerics,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::invalid(format!("tau must lie in [0, 1], got {tau}")));
    }
    let (r, s) = if rho.is_infinite() { (1.0, 0.0) } else { (rho, sigma2) };
    let g = solve_training(r, s, tau * beta, quantizer, &InputPrior::Gaussian, num)?;
    let rb = r * (1.0 - g.mse);
    let sb = s + r * g.mse;
    let diff = if quantizer.is_linear() {
        if sb == 0.0 {
            f64::INFINITY
        } else {
            (rb / sb).ln_1p() / LN_2
        }
    } else {
        let quad = &num.quadrature;
        crate::replica::hbar_chi_with(0.0, sb + rb, quantizer, quad)?.0 - hbar_or_zero(rb, sb, quantizer, num)?
    };
    Ok(if rb == 0.0 { 0.0 } else { (1.0 - tau) * diff })
}

fn hbar_or_zero(gamma: f64, s: f64, q: &QuantizerSpec, num: &Numerics) -> Result<f64> {
    if s == 0.0 {
        // deterministic quantized output
        return Ok(0.0);
    }
    Ok(crate::replica::hbar_chi_with(gamma, s, q, &num.quadrature)?.0)
}

pub fn small_alpha_tau_opt(
    rho: f64,
    sigma2: f64,
    beta: f64,
    quantizer: &QuantizerSpec,
    num: &Numerics,
    opts: &RateOptions,
) -> Result<TauOptimum> {
    maximize_over_tau(|t| small_alpha_rate(t, rho, sigma2, beta, quantizer, num), opts)
}

/// Large-α training fraction 2((ρ+1)/ρ)² ln α / (βα), times (π/2)² for b = 1.
pub fn large_alpha_tau_opt(rho: f64, beta: f64, alpha: f64, bits: Resolution) -> Result<f64> {
    let base = 2.0 * ((rho + 1.0) / rho).powi(2) * alpha.ln() / (beta * alpha);
    match bits {
        Resolution::Infinite => Ok(base),
        Resolution::Bits(1) => Ok(base * (PI / 2.0).powi(2)),
        Resolution::Bits(b) => Err(Error::invalid(format!(
            "the large-alpha training formula covers b = 1 and b = inf, got b = {b}"
        ))),
    }
}

/// Outcome of an inverse search over α.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "alpha", rename_all = "snake_case")]
pub enum RequiredAlpha {
    Finite(f64),
    /// The target is already met at the lower end of the bracket, so the
    /// required α tends to zero.
    Vanishing,
}

impl RequiredAlpha {
    pub fn value(self) -> f64 {
        match self {
            RequiredAlpha::Finite(a) => a,
            RequiredAlpha::Vanishing => 0.0,
        }
    }
}

pub const ALPHA_BRACKET: (f64, f64) = (1e-3, 1e4);
pub const ALPHA_REL_TOL: f64 = 1e-3;

/// Parameters shared by the rate inverse solvers.
#[derive(Debug, Clone)]
pub struct RateTarget {
    pub rho: f64,
    pub sigma2: f64,
    pub beta: f64,
    pub a: Resolution,
    pub b: Resolution,
    /// Genie channel knowledge (R_known) instead of trained (R_opt).
    pub known: bool,
}

impl RateTarget {
    pub fn rate(&self, alpha: f64, num: &Numerics, opts: &RateOptions) -> Result<f64> {
        let q = system_quantizer(self.b, self.rho)?;
        let prior = InputPrior::from_resolution(self.a)?;
        if self.known {
            rate_known(self.rho, self.sigma2, alpha, &q, &prior, num)
        } else {
            let mut cfg = SystemConfig::new(self.rho, alpha, self.beta, Training::Fraction(0.1), self.b, self.a)?;
            cfg.sigma2 = self.sigma2;
            Ok(optimize_training(&cfg, num, opts)?.value)
        }
    }
}

/// Smallest α with rate ≥ target, by log-space bisection on [1e-3, 1e4].
pub fn required_alpha_for_rate(
    target: f64,
    spec: &RateTarget,
    num: &Numerics,
    opts: &RateOptions,
) -> Result<RequiredAlpha> {
    if !(target > 0.0) {
        return Err(Error::invalid(format!("target rate must be positive, got {target}")));
    }
    if let Resolution::Bits(a) = spec.a {
        if target >= 2.0 * a as f64 {
            return Err(Error::Unreachable {
                target,
                reason: format!("the saturation rate 2a = {} is never exceeded", 2 * a),
            });
        }
    }
    let (lo, hi) = ALPHA_BRACKET;
    let top = spec.rate(hi, num, opts)?;
    if top < target {
        return Err(Error::Unreachable {
            target,
            reason: format!("rate at alpha = {hi:e} is only {top:.6} bits; the ceiling lies below the target"),
        });
    }
    if spec.rate(lo, num, opts)? >= target {
        return Ok(RequiredAlpha::Vanishing);
    }
    let a = bisect(|al| Ok(spec.rate(al, num, opts)? < target), lo, hi, ALPHA_REL_TOL, true)?;
    Ok(RequiredAlpha::Finite(a))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SaturationReport {
    pub alphas: Vec<f64>,
    /// α·𝕀 at each α
    pub values: Vec<f64>,
    /// 2a, or ∞ for a Gaussian input
    pub limit: f64,
    pub monotone: bool,
}

/// α·𝕀 at α ∈ {10², 10³, 10⁴} for a fixed training fraction.
pub fn saturation_check(a: Resolution, b: Resolution, rho: f64, beta: f64, tau: f64, num: &Numerics) -> Result<SaturationReport> {
    let alphas = vec![1e2, 1e3, 1e4];
    let mut values = Vec::with_capacity(3);
    for &al in &alphas {
        let cfg = SystemConfig::new(rho, al, beta, Training::Fraction(tau), b, a)?;
        let res = crate::replica::mutual_info_per_rx(&cfg, num)?;
        values.push(al * res.terms.info);
    }
    let limit = InputPrior::from_resolution(a)?.entropy_bits();
    let monotone = values.windows(2).all(|w| w[1] >= w[0] - 1e-9);
    Ok(SaturationReport { alphas, values, limit, monotone })
}

/// Convenience wrapper with default numerics and options.
pub fn r_opt(cfg: &SystemConfig) -> Result<TauOptimum> {
    optimize_training(cfg, default_numerics(), &RateOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bussgang_constants() {
        assert!((bussgang_eta(1, 5.0, 1.0).unwrap() - std::f64::consts::FRAC_2_PI).abs() < 1e-15);
        let rl = linearized_snr(2.0 / PI, 1.0);
        assert!((rl - 0.4669).abs() < 1e-4);
        assert!(bussgang_eta(3, 1.0, 1.0).is_err());
    }

    #[test]
    fn large_alpha_formula() {
        let t = large_alpha_tau_opt(10.0, 40.0, 100.0, Resolution::Infinite).unwrap();
        assert!((t - 2.0 * 1.21 * 100f64.ln() / 4000.0).abs() < 1e-15);
        let t1 = large_alpha_tau_opt(10.0, 40.0, 100.0, Resolution::Bits(1)).unwrap();
        assert!((t1 / t - (PI / 2.0).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn golden_refines_grid_optimum() {
        let opts = RateOptions { grid_points: 32, ..Default::default() };
        let r = maximize_over_tau(|t| Ok(-(t - 0.07f64).powi(2)), &opts).unwrap();
        assert!((r.tau_opt - 0.07).abs() < 1e-6);
        assert_eq!(r.curve.len(), 32);
    }

    #[test]
    fn zero_snr_has_zero_rate() {
        let cfg = SystemConfig::new(0.0, 2.0, 40.0, Training::Fraction(0.1), Resolution::Bits(1), Resolution::Bits(1)).unwrap();
        assert_eq!(r_opt(&cfg).unwrap().value, 0.0);
        let q = QuantizerSpec::uniform(1, 1.0).unwrap();
        assert_eq!(rate_known(0.0, 1.0, 2.0, &q, &InputPrior::qpsk(), default_numerics()).unwrap(), 0.0);
        assert_eq!(small_alpha_rate(0.3, 0.0, 1.0, 40.0, &q, default_numerics()).unwrap(), 0.0);
    }
}
