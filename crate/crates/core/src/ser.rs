//! QPSK symbol-error rate of the decoupled channel and its inverse problems.
//! Noise variance is fixed to σ² = 1 and training is given as a load τ′.

use crate::error::{Error, Result};
use crate::quantizer::Resolution;
use crate::rate::{RequiredAlpha, ALPHA_BRACKET, ALPHA_REL_TOL};
use crate::replica::{
    analyze_with_training, hbar_chi_with, solve_training, FixedPointSolution, Numerics, SystemConfig, Training,
};
use crate::search::bisect;
use crate::special::normal_sf;
use serde::Serialize;

/// 2Q(√q̃) − Q(√q̃)².
pub fn ser_qpsk_theory(qtilde: f64) -> Result<f64> {
    if qtilde.is_nan() || qtilde < 0.0 {
        return Err(Error::invalid(format!("qtilde must be >= 0, got {qtilde}")));
    }
    if qtilde.is_infinite() {
        return Ok(0.0);
    }
    let q = normal_sf(qtilde.sqrt());
    Ok(2.0 * q - q * q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SerRegime {
    Exact,
    LargeAlphaApprox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SerReport {
    pub ser: f64,
    pub qtilde_x: f64,
    pub fixed_point: FixedPointSolution,
    pub regime: SerRegime,
}

/// QPSK system with σ² = 1 and training load τ′.
pub fn ser_config(rho: f64, alpha: f64, tau_prime: f64, bits: Resolution) -> Result<SystemConfig> {
    if !(tau_prime > 0.0) {
        return Err(Error::invalid(format!("tau_prime must be positive, got {tau_prime}")));
    }
    SystemConfig::new(rho, alpha, 1.0, Training::Load(tau_prime), bits, Resolution::Bits(1))
}

fn check_qpsk(cfg: &SystemConfig) -> Result<()> {
    if cfg.input_prior.resolution() != Resolution::Bits(1) {
        return Err(Error::invalid("the closed-form SER is available for QPSK inputs (a = 1) only"));
    }
    Ok(())
}

/// Training fixed point at load τ′, equivalence transform, data fixed point,
/// then the QPSK error formula.
pub fn ser_pipeline(cfg: &SystemConfig, num: &Numerics) -> Result<SerReport> {
    check_qpsk(cfg)?;
    cfg.validate()?;
    let (r, s) = cfg.working();
    let g = solve_training(r, s, cfg.load(), &cfg.quantizer, &cfg.channel_prior, num)?;
    let an = analyze_with_training(cfg, &g, num)?;
    let qt = an.solution.qtilde_x;
    Ok(SerReport { ser: ser_qpsk_theory(qt)?, qtilde_x: qt, fixed_point: an.solution, regime: SerRegime::Exact })
}

/// 2Q(√(α ρ̄ χ(ρ̄, σ̄²))); (ρ̄, σ̄²) do not depend on α.
pub fn ser_large_alpha(cfg: &SystemConfig, num: &Numerics) -> Result<f64> {
    check_qpsk(cfg)?;
    cfg.validate()?;
    let (r, s) = cfg.working();
    let g = solve_training(r, s, cfg.load(), &cfg.quantizer, &cfg.channel_prior, num)?;
    let rb = r * (1.0 - g.mse);
    let sb = s + r * g.mse;
    if rb == 0.0 {
        return Ok(1.0);
    }
    if sb == 0.0 {
        return Ok(0.0);
    }
    let chi = hbar_chi_with(rb, sb, &cfg.quantizer, &num.quadrature)?.1;
    Ok(2.0 * normal_sf((cfg.alpha * rb * chi).sqrt()))
}

pub const TAU_PRIME_BRACKET: (f64, f64) = (1e-3, 1e3);

/// Smallest τ′ in [1e-3, 1e3] whose SER is at most `target`. Returns the
/// lower bracket end when even that meets the target.
pub fn required_tau_prime_for_ser(
    target: f64,
    rho: f64,
    alpha: f64,
    bits: Resolution,
    num: &Numerics,
) -> Result<f64> {
    check_target(target)?;
    let ser_at = |tp: f64| -> Result<f64> { Ok(ser_pipeline(&ser_config(rho, alpha, tp, bits)?, num)?.ser) };
    let (lo, hi) = TAU_PRIME_BRACKET;
    let worst = ser_at(hi)?;
    if worst > target {
        return Err(Error::Unreachable {
            target,
            reason: format!("SER stays at {worst:.4e} even with tau' = {hi:e}; the quantization floor lies above the target"),
        });
    }
    if ser_at(lo)? <= target {
        return Ok(lo);
    }
    bisect(|tp| Ok(ser_at(tp)? > target), lo, hi, 1e-4, true)
}

/// SNR in dB at which τ′ = 2 achieves 1% SER.
pub fn critical_snr_db(alpha: f64, bits: Resolution, num: &Numerics) -> Result<f64> {
    let target = 0.01;
    let ser_at = |rho: f64| -> Result<f64> { Ok(ser_pipeline(&ser_config(rho, alpha, 2.0, bits)?, num)?.ser) };
    let floor = ser_at(f64::INFINITY)?;
    if floor > target {
        return Err(Error::Unreachable {
            target,
            reason: format!("with tau' = 2 the noiseless SER is {floor:.4e}"),
        });
    }
    let (lo, hi) = (-30.0, 80.0);
    if ser_at(db_to_linear(hi))? > target {
        return Err(Error::Unreachable { target, reason: format!("SER above target at {hi} dB") });
    }
    if ser_at(db_to_linear(lo))? <= target {
        return Ok(lo);
    }
    bisect(|db| Ok(ser_at(db_to_linear(db))? > target), lo, hi, 1e-6, false)
}

/// Smallest α in [1e-3, 1e4] achieving SER ≤ target.
pub fn required_alpha_for_ser(
    target: f64,
    rho: f64,
    tau_prime: f64,
    bits: Resolution,
    num: &Numerics,
) -> Result<RequiredAlpha> {
    check_target(target)?;
    let ser_at = |al: f64| -> Result<f64> { Ok(ser_pipeline(&ser_config(rho, al, tau_prime, bits)?, num)?.ser) };
    let (lo, hi) = ALPHA_BRACKET;
    let worst = ser_at(hi)?;
    if worst > target {
        return Err(Error::Unreachable {
            target,
            reason: format!("SER is {worst:.4e} at alpha = {hi:e}"),
        });
    }
    if ser_at(lo)? <= target {
        return Ok(RequiredAlpha::Vanishing);
    }
    Ok(RequiredAlpha::Finite(bisect(|al| Ok(ser_at(al)? > target), lo, hi, ALPHA_REL_TOL, true)?))
}

fn check_target(target: f64) -> Result<()> {
    if !(target > 0.0 && target < 0.75) {
        return Err(Error::invalid(format!("target SER must lie in (0, 0.75), got {target}")));
    }
    Ok(())
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::replica::default_numerics;
    use crate::special::normal_quantile;

    #[test]
    fn formula_endpoints() {
        assert_eq!(ser_qpsk_theory(0.0).unwrap(), 0.75);
        assert_eq!(ser_qpsk_theory(f64::INFINITY).unwrap(), 0.0);
        let qt = normal_quantile(0.99).powi(2);
        assert!((ser_qpsk_theory(qt).unwrap() - 0.0199).abs() < 1e-12);
        assert!(ser_qpsk_theory(-1.0).is_err());
    }

    #[test]
    fn pipeline_rejects_higher_order_inputs() {
        let cfg = SystemConfig::new(10.0, 5.0, 1.0, Training::Load(2.0), Resolution::Bits(1), Resolution::Bits(2)).unwrap();
        assert!(ser_pipeline(&cfg, default_numerics()).is_err());
    }

    #[test]
    fn linear_noiseless_detection_is_error_free() {
        let cfg = ser_config(f64::INFINITY, 5.0, 2.0, Resolution::Infinite).unwrap();
        assert_eq!(ser_pipeline(&cfg, default_numerics()).unwrap().ser, 0.0);
        assert_eq!(ser_large_alpha(&cfg, default_numerics()).unwrap(), 0.0);
    }
}
