//! Quantized-output functionals H̄ and χ, the training and data fixed points,
//! the equivalent-system transform and the per-receiver mutual information.
//!
//! Units: every solver works on a (signal power, noise power, quantizer)
//! triple. For finite ρ that triple is (ρ, σ², Q). For ρ = ∞ the system is
//! rescaled by 1/ρ to (1, 0, Q/√ρ); H̄ of a finite-resolution output is
//! invariant under that rescaling and ρ·χ(ργ, ρs) maps to χ(γ, s) with
//! normalised thresholds, so the fixed points are unchanged.

use crate::error::{Error, Result};
use crate::fixed_point::{solve_two_sided, FixedPoint, SolverOptions};
use crate::quadrature::Quadrature;
use crate::quantizer::{QuantizerSpec, Resolution};
use crate::scalar_awgn::{mmse_awgn, mutual_info_awgn, ChannelPrior, InputPrior};
use serde::{Deserialize, Serialize};
use std::f64::consts::{E, LN_2, PI, SQRT_2};
use std::sync::OnceLock;

/// Ψ values below this are dropped from the χ sum; their contribution is
/// bounded by the same tail mass.
const PSI_FLOOR: f64 = 1e-300;

/// Quadrature and solver settings shared by the replica computations.
#[derive(Debug, Clone, Default)]
pub struct Numerics {
    pub quadrature: Quadrature,
    pub solver: SolverOptions,
}

pub fn default_numerics() -> &'static Numerics {
    static N: OnceLock<Numerics> = OnceLock::new();
    N.get_or_init(Numerics::default)
}

fn check_gamma_s(gamma: f64, s: f64) -> Result<()> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::invalid(format!("s must be positive and finite, got {s}")));
    }
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::invalid(format!("gamma must be finite and >= 0, got {gamma}")));
    }
    Ok(())
}

/// H̄(γ, s) in bits.
pub fn hbar(gamma: f64, s: f64, quantizer: &QuantizerSpec) -> Result<f64> {
    Ok(hbar_chi_with(gamma, s, quantizer, &default_numerics().quadrature)?.0)
}

/// χ(γ, s).
pub fn chi(gamma: f64, s: f64, quantizer: &QuantizerSpec) -> Result<f64> {
    Ok(hbar_chi_with(gamma, s, quantizer, &default_numerics().quadrature)?.1)
}

/// (H̄, χ) from one pass over a shared node set.
pub fn hbar_chi_with(gamma: f64, s: f64, quantizer: &QuantizerSpec, quad: &Quadrature) -> Result<(f64, f64)> {
    check_gamma_s(gamma, s)?;
    Ok(functionals(gamma, s, quantizer, quad))
}

// No argument checks; s = 0 is allowed for finite resolution and gives the
// deterministic-output limit H̄ = 0, χ = ∞.
fn functionals(gamma: f64, s: f64, quantizer: &QuantizerSpec, quad: &Quadrature) -> (f64, f64) {
    if quantizer.is_linear() {
        return ((PI * E * s).log2(), 1.0 / s);
    }
    if s <= 0.0 {
        return (0.0, f64::INFINITY);
    }
    let mut psi = Vec::with_capacity(quantizer.levels());
    let mut dpsi = Vec::with_capacity(quantizer.levels());
    let mut ent = 0.0;
    let mut fisher = 0.0;
    let mut eval = |w: f64, weight: f64| {
        quantizer.kernels_into(w, s, &mut psi, &mut dpsi);
        let mut e = 0.0;
        let mut f = 0.0;
        for (&p, &d) in psi.iter().zip(&dpsi) {
            if p > 0.0 {
                e -= p * p.log2();
            }
            if p >= PSI_FLOOR {
                f += d * d / p;
            }
        }
        ent += weight * e;
        fisher += weight * f;
    };
    if gamma == 0.0 {
        eval(0.0, 1.0);
    } else {
        let sg = gamma.sqrt();
        let centers: Vec<f64> = quantizer.thresholds().iter().map(|r| SQRT_2 * r / sg).collect();
        for (z, w) in quad.nodes(&centers, (s / gamma).sqrt()) {
            eval(sg * z, w);
        }
    }
    (2.0 * ent, fisher)
}

/// ρ̄ = ρ(1 − mse_G), σ̄² = σ² + ρ·mse_G.
pub fn equivalent_system(rho: f64, sigma2: f64, mse_g: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&mse_g) {
        return Err(Error::invalid(format!("mse_G must lie in [0, 1], got {mse_g}")));
    }
    Ok(equivalent_unchecked(rho, sigma2, mse_g))
}

// 0·∞ is taken as 0 so that ρ = ∞ with mse_G ∈ {0, 1} stays meaningful.
fn equivalent_unchecked(rho: f64, sigma2: f64, mse_g: f64) -> (f64, f64) {
    let times = |a: f64, b: f64| if a == 0.0 || b == 0.0 { 0.0 } else { a * b };
    (times(rho, 1.0 - mse_g), sigma2 + times(rho, mse_g))
}

/// How training length is specified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Training {
    /// Fraction τ of the coherence block; the load is τβ.
    Fraction(f64),
    /// Training symbols per transmitter τ′, used directly as the load.
    Load(f64),
}

/// Full description of one large-system operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Pre-quantization SNR; `f64::INFINITY` selects the noiseless limit.
    pub rho: f64,
    pub sigma2: f64,
    pub alpha: f64,
    pub beta: f64,
    pub training: Training,
    /// For ρ = ∞ the thresholds are expressed in units of √ρ.
    pub quantizer: QuantizerSpec,
    pub input_prior: InputPrior,
    pub channel_prior: ChannelPrior,
}

/// Calibrated quantizer in solver units (normalised by √ρ when ρ = ∞).
pub fn system_quantizer(bits: Resolution, rho: f64) -> Result<QuantizerSpec> {
    if rho.is_infinite() {
        QuantizerSpec::calibrated(bits, 0.0)
    } else {
        QuantizerSpec::calibrated(bits, rho)
    }
}

impl SystemConfig {
    /// σ² = 1, Rayleigh channel, calibrated step.
    pub fn new(rho: f64, alpha: f64, beta: f64, training: Training, bits: Resolution, a: Resolution) -> Result<Self> {
        let cfg = Self {
            rho,
            sigma2: 1.0,
            alpha,
            beta,
            training,
            quantizer: system_quantizer(bits, rho.max(0.0))?,
            input_prior: InputPrior::from_resolution(a)?,
            channel_prior: InputPrior::Gaussian,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho >= 0.0) {
            return Err(Error::invalid(format!("rho must be >= 0, got {}", self.rho)));
        }
        if !(self.sigma2 > 0.0) || !self.sigma2.is_finite() {
            return Err(Error::invalid(format!("sigma2 must be positive, got {}", self.sigma2)));
        }
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::invalid(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::invalid(format!("beta must be positive, got {}", self.beta)));
        }
        match self.training {
            Training::Fraction(t) if !(0.0..=1.0).contains(&t) => {
                Err(Error::invalid(format!("tau must lie in [0, 1], got {t}")))
            }
            Training::Load(l) if !(l >= 0.0) || !l.is_finite() => {
                Err(Error::invalid(format!("tau_prime must be >= 0, got {l}")))
            }
            _ => Ok(()),
        }
    }

    /// Effective training load τβ (or τ′).
    pub fn load(&self) -> f64 {
        match self.training {
            Training::Fraction(t) => t * self.beta,
            Training::Load(l) => l,
        }
    }

    /// Fraction of the block spent on training (zero for a τ′ specification).
    pub fn tau(&self) -> f64 {
        match self.training {
            Training::Fraction(t) => t,
            Training::Load(_) => 0.0,
        }
    }

    /// (signal, noise) in solver units.
    pub fn working(&self) -> (f64, f64) {
        if self.rho.is_infinite() {
            (1.0, 0.0)
        } else {
            (self.rho, self.sigma2)
        }
    }
}

/// One solved scalar fixed point: overlap q, conjugate q̃, and mse = 1 − q.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalarSolution {
    pub q: f64,
    pub qtilde: f64,
    pub mse: f64,
    pub iterations: usize,
    pub residual: f64,
    pub multistable: bool,
}

impl ScalarSolution {
    fn trivial() -> Self {
        Self { q: 0.0, qtilde: 0.0, mse: 1.0, iterations: 0, residual: 0.0, multistable: false }
    }

    /// Gaussian-prior solution with a prescribed mse (q̃ = q / (1 − q)).
    pub fn gaussian_from_mse(mse: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&mse) {
            return Err(Error::invalid(format!("mse_g must lie in [0, 1], got {mse}")));
        }
        let q = 1.0 - mse;
        Ok(Self::exact(q, if mse == 0.0 { f64::INFINITY } else { q / mse }))
    }

    fn exact(q: f64, qtilde: f64) -> Self {
        Self { q, qtilde, mse: (1.0 - q).clamp(0.0, 1.0), iterations: 0, residual: 0.0, multistable: false }
    }

    fn from_fixed_point(fp: FixedPoint, qtilde: f64) -> Self {
        let mse = (1.0 - fp.q).clamp(0.0, 1.0);
        Self {
            q: 1.0 - mse,
            qtilde,
            mse,
            iterations: fp.iterations,
            residual: fp.residual,
            multistable: fp.multistable,
        }
    }
}

/// Shared form of both fixed points:
///   q̃ = gain·χ(signal·q, noise + signal·(1 − q)),  q = 1 − ℰ(q̃, prior).
fn solve_overlap(
    gain: f64,
    signal: f64,
    noise: f64,
    quantizer: &QuantizerSpec,
    prior: &InputPrior,
    num: &Numerics,
) -> Result<ScalarSolution> {
    let qtilde_at = |q: f64| -> f64 {
        let s = noise + signal * (1.0 - q);
        if s <= 0.0 {
            return f64::INFINITY;
        }
        gain * functionals(signal * q, s, quantizer, &num.quadrature).1
    };
    let map = |q: f64| -> Result<f64> {
        let qt = qtilde_at(q);
        Ok(1.0 - mmse_awgn(qt, prior)?)
    };
    let fp = solve_two_sided(map, &num.solver)?;
    Ok(ScalarSolution::from_fixed_point(fp, qtilde_at(fp.q)))
}

/// Training fixed point in solver units for a load τβ.
pub fn solve_training(
    rho: f64,
    sigma2: f64,
    load: f64,
    quantizer: &QuantizerSpec,
    prior: &ChannelPrior,
    num: &Numerics,
) -> Result<ScalarSolution> {
    if !rho.is_finite() {
        return Err(Error::invalid("solve_training expects solver units; use solve_training_fixed_point for rho = inf"));
    }
    if load == 0.0 || rho == 0.0 {
        return Ok(ScalarSolution::trivial());
    }
    if sigma2 == 0.0 && quantizer.is_linear() && prior.is_gaussian() {
        // noiseless linear training: q = min(1, τβ)
        let q = load.min(1.0);
        let qt = if load >= 1.0 { f64::INFINITY } else { load / (1.0 - load) };
        return Ok(ScalarSolution::exact(q, qt));
    }
    solve_overlap(load * rho, rho, sigma2, quantizer, prior, num)
}

pub fn solve_training_fixed_point(cfg: &SystemConfig, num: &Numerics) -> Result<ScalarSolution> {
    cfg.validate()?;
    let (r, s) = cfg.working();
    solve_training(r, s, cfg.load(), &cfg.quantizer, &cfg.channel_prior, num)
}

/// Data fixed point of the known-channel system (ρ̄, σ̄²).
pub fn solve_data_fixed_point(
    rho_bar: f64,
    sigma2_bar: f64,
    alpha: f64,
    quantizer: &QuantizerSpec,
    prior: &InputPrior,
    num: &Numerics,
) -> Result<ScalarSolution> {
    if !(alpha > 0.0) {
        return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
    }
    if !rho_bar.is_finite() || !(rho_bar >= 0.0) || !(sigma2_bar >= 0.0) {
        return Err(Error::invalid("data fixed point expects finite solver-unit powers"));
    }
    if rho_bar == 0.0 {
        return Ok(ScalarSolution::trivial());
    }
    if sigma2_bar == 0.0 && quantizer.is_linear() {
        // q̃ = α/(1 − q): the data are recovered exactly unless a Gaussian
        // input is underdetermined (α < 1)
        return Ok(if prior.is_gaussian() && alpha < 1.0 {
            ScalarSolution::exact(alpha, alpha / (1.0 - alpha))
        } else {
            ScalarSolution::exact(1.0, f64::INFINITY)
        });
    }
    solve_overlap(alpha * rho_bar, rho_bar, sigma2_bar, quantizer, prior, num)
}

/// Per-receiver mutual information and the two output entropies, in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InfoTerms {
    /// 𝕀(X;Y)
    pub info: f64,
    /// ℋ⁺, the conditional output entropy
    pub h_cond: f64,
    /// ℋ, the output entropy
    pub h_out: f64,
}

// (1/α)(I_AWGN(q̃) + (q q̃ − q̃)/ln 2)
fn decoupled_term(data: &ScalarSolution, alpha: f64, prior: &InputPrior) -> Result<f64> {
    let i = mutual_info_awgn(data.qtilde, prior)?;
    let penalty = if data.mse == 0.0 || data.qtilde == 0.0 { 0.0 } else { data.qtilde * data.mse };
    Ok((i - penalty / LN_2) / alpha)
}

/// Known-channel route evaluated at the equivalent system (ρ̄, σ̄²).
pub fn mutual_info_known(
    rho_bar: f64,
    sigma2_bar: f64,
    alpha: f64,
    quantizer: &QuantizerSpec,
    prior: &InputPrior,
    num: &Numerics,
) -> Result<(InfoTerms, ScalarSolution)> {
    let data = solve_data_fixed_point(rho_bar, sigma2_bar, alpha, quantizer, prior, num)?;
    let term = decoupled_term(&data, alpha, prior)?;
    let quad = &num.quadrature;
    let a_noise = sigma2_bar + rho_bar * data.mse;
    let h_cond = functionals(rho_bar, sigma2_bar, quantizer, quad).0;
    let h_first = functionals(rho_bar * data.q, a_noise, quantizer, quad).0;
    let diff = if quantizer.is_linear() {
        // log₂(a_noise/σ̄²) without cancellation
        if sigma2_bar == 0.0 {
            if data.mse == 0.0 { 0.0 } else { f64::INFINITY }
        } else {
            (rho_bar * data.mse / sigma2_bar).ln_1p() / LN_2
        }
    } else {
        h_first - h_cond
    };
    let info = if rho_bar == 0.0 { 0.0 } else { diff + term };
    Ok((InfoTerms { info, h_cond, h_out: h_first + term }, data))
}

/// Trained-system route with (ρ, σ², q_G): the data fixed point
///   q̃ = αρq_G·χ(ρq_G q, σ² + ρ − ρq_G q)
/// and 𝕀 = H̄(ρq_G q_x, σ² + ρ − ρq_G q_x) − H̄(ρq_G, σ² + ρ − ρq_G) + (1/α)(…).
pub fn mutual_info_trained(
    rho: f64,
    sigma2: f64,
    q_g: f64,
    alpha: f64,
    quantizer: &QuantizerSpec,
    prior: &InputPrior,
    num: &Numerics,
) -> Result<(InfoTerms, ScalarSolution)> {
    if !(alpha > 0.0) {
        return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
    }
    let quad = &num.quadrature;
    let total = sigma2 + rho;
    let data = if rho * q_g == 0.0 {
        ScalarSolution::trivial()
    } else {
        let qtilde_at = |q: f64| {
            let s = total - rho * q_g * q;
            if s <= 0.0 {
                f64::INFINITY
            } else {
                alpha * rho * q_g * functionals(rho * q_g * q, s, quantizer, quad).1
            }
        };
        let map = |q: f64| -> Result<f64> { Ok(1.0 - mmse_awgn(qtilde_at(q), prior)?) };
        let fp = solve_two_sided(map, &num.solver)?;
        ScalarSolution::from_fixed_point(fp, qtilde_at(fp.q))
    };
    let term = decoupled_term(&data, alpha, prior)?;
    let s_first = total - rho * q_g * data.q;
    let s_cond = total - rho * q_g;
    let h_first = functionals(rho * q_g * data.q, s_first, quantizer, quad).0;
    let h_cond = functionals(rho * q_g, s_cond, quantizer, quad).0;
    let info = if rho * q_g == 0.0 { 0.0 } else { h_first - h_cond + term };
    Ok((InfoTerms { info, h_cond, h_out: h_first + term }, data))
}

/// Both fixed points plus the equivalent system, in natural units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedPointSolution {
    pub q_g: f64,
    pub qtilde_g: f64,
    pub mse_g: f64,
    pub rho_bar: f64,
    pub sigma2_bar: f64,
    pub q_x: f64,
    pub qtilde_x: f64,
    pub mse_x: f64,
    pub iterations: usize,
    pub residual: f64,
    pub multistable: bool,
}

impl FixedPointSolution {
    fn assemble(cfg: &SystemConfig, g: &ScalarSolution, x: &ScalarSolution) -> Self {
        let (rho_bar, sigma2_bar) = equivalent_unchecked(cfg.rho, cfg.sigma2, g.mse);
        Self {
            q_g: g.q,
            qtilde_g: g.qtilde,
            mse_g: g.mse,
            rho_bar,
            sigma2_bar,
            q_x: x.q,
            qtilde_x: x.qtilde,
            mse_x: x.mse,
            iterations: g.iterations + x.iterations,
            residual: g.residual.max(x.residual),
            multistable: g.multistable || x.multistable,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Analysis {
    pub solution: FixedPointSolution,
    #[serde(flatten)]
    pub terms: InfoTerms,
}

/// Solves the training fixed point, applies the equivalence transform and
/// evaluates the known-channel expressions at (ρ̄, σ̄²).
pub fn mutual_info_per_rx(cfg: &SystemConfig, num: &Numerics) -> Result<Analysis> {
    let g = solve_training_fixed_point(cfg, num)?;
    analyze_with_training(cfg, &g, num)
}

/// Same as [`mutual_info_per_rx`] with a given training solution.
pub fn analyze_with_training(cfg: &SystemConfig, g: &ScalarSolution, num: &Numerics) -> Result<Analysis> {
    cfg.validate()?;
    let (r, s) = cfg.working();
    let (rb, sb) = equivalent_unchecked(r, s, g.mse);
    let (mut terms, x) = mutual_info_known(rb, sb, cfg.alpha, &cfg.quantizer, &cfg.input_prior, num)?;
    if cfg.rho.is_infinite() && cfg.quantizer.is_linear() {
        terms.h_cond = f64::INFINITY;
        terms.h_out = f64::INFINITY;
    }
    Ok(Analysis { solution: FixedPointSolution::assemble(cfg, g, &x), terms })
}

/// The trained-system route, kept separate as a check on the equivalence.
pub fn mutual_info_unknown_route(cfg: &SystemConfig, num: &Numerics) -> Result<Analysis> {
    let g = solve_training_fixed_point(cfg, num)?;
    let (r, s) = cfg.working();
    let (mut terms, x) = mutual_info_trained(r, s, g.q, cfg.alpha, &cfg.quantizer, &cfg.input_prior, num)?;
    if cfg.rho.is_infinite() && cfg.quantizer.is_linear() {
        terms.h_cond = f64::INFINITY;
        terms.h_out = f64::INFINITY;
    }
    Ok(Analysis { solution: FixedPointSolution::assemble(cfg, &g, &x), terms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn q1() -> QuantizerSpec {
        QuantizerSpec::uniform(1, 1.0).unwrap()
    }

    #[test]
    fn one_bit_zero_gamma_values() {
        assert_relative_eq!(hbar(0.0, 1.0, &q1()).unwrap(), 2.0, max_relative = 1e-15);
        for s in [0.5, 1.0, 3.0] {
            assert_relative_eq!(chi(0.0, s, &q1()).unwrap(), 2.0 / (PI * s), max_relative = 1e-14);
        }
    }

    #[test]
    fn linear_branch_closed_forms() {
        let lin = QuantizerSpec::linear();
        assert_eq!(hbar(3.0, 2.0, &lin).unwrap(), (PI * E * 2.0).log2());
        assert_eq!(chi(3.0, 2.0, &lin).unwrap(), 0.5);
        assert!(hbar(1.0, 0.0, &lin).is_err());
        assert!(chi(1.0, -1.0, &q1()).is_err());
    }

    #[test]
    fn hermite_and_composite_agree_when_smooth() {
        let q = QuantizerSpec::uniform(2, 0.5).unwrap();
        let gh = Quadrature::hermite(200);
        let cp = Quadrature::composite();
        let a = hbar_chi_with(1.0, 1.0, &q, &gh).unwrap();
        let b = hbar_chi_with(1.0, 1.0, &q, &cp).unwrap();
        assert!((a.0 - b.0).abs() < 1e-10 && (a.1 - b.1).abs() < 1e-10);
    }

    #[test]
    fn conservation_of_equivalent_system() {
        let (rb, sb) = equivalent_system(10.0, 1.0, 0.37).unwrap();
        assert_eq!(rb + sb, 11.0);
        assert_eq!(equivalent_system(4.0, 2.0, 0.0).unwrap(), (4.0, 2.0));
        assert_eq!(equivalent_system(4.0, 2.0, 1.0).unwrap(), (0.0, 6.0));
        assert!(equivalent_system(4.0, 2.0, 1.5).is_err());
    }

    #[test]
    fn zero_load_training_is_trivial() {
        let num = default_numerics();
        let s = solve_training(10.0, 1.0, 0.0, &q1(), &InputPrior::Gaussian, num).unwrap();
        assert_eq!((s.q, s.qtilde, s.mse), (0.0, 0.0, 1.0));
    }

    #[test]
    fn linear_training_matches_quadratic() {
        // q̃ = Lρ/(σ² + ρ m), m = 1/(1 + q̃)  ⇒  ρ m² + (σ² + Lρ − ρ) m − σ² = 0
        let (rho, s2, l) = (10.0, 1.0, 0.8);
        let sol = solve_training(rho, s2, l, &QuantizerSpec::linear(), &InputPrior::Gaussian, default_numerics()).unwrap();
        let b = s2 + l * rho - rho;
        let m = (-b + (b * b + 4.0 * rho * s2).sqrt()) / (2.0 * rho);
        assert!((sol.mse - m).abs() < 1e-9);
        assert!(sol.residual <= 1e-10);
    }
}
