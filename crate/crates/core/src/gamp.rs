//! Sum-product GAMP with scalar variances for real-valued generalized linear
//! models y = f(A u + w), w ~ N(0, v_w), solved for several columns of u at
//! once (every column shares A and runs its own variance recursion).

use crate::error::{Error, Result};
use crate::special::truncated_normal_moments;
use ndarray::{Array1, Array2, Axis, Zip};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GampOptions {
    pub max_iter: usize,
    /// Weight on the new value in every damped update.
    pub damping: f64,
    pub var_floor: f64,
    /// Stop when the mean squared change of the estimate falls below this.
    pub tol: f64,
}

impl Default for GampOptions {
    fn default() -> Self {
        Self { max_iter: 50, damping: 0.7, var_floor: 1e-12, tol: 1e-8 }
    }
}

/// Measurements, one column per unknown vector.
#[derive(Debug, Clone, Copy)]
pub enum Observation<'a> {
    /// Pre-quantization value known to lie in (lo, hi].
    Intervals { lo: &'a Array2<f64>, hi: &'a Array2<f64> },
    /// Unquantized outputs.
    Linear(&'a Array2<f64>),
}

impl Observation<'_> {
    fn shape(&self) -> (usize, usize) {
        match self {
            Observation::Intervals { lo, .. } => lo.dim(),
            Observation::Linear(y) => y.dim(),
        }
    }
}

/// Componentwise prior on the unknowns.
#[derive(Debug, Clone, Copy)]
pub enum Denoiser<'a> {
    /// Zero-mean Gaussian with the given variance.
    Gaussian { var: f64 },
    /// Equiprobable symmetric points.
    Discrete { points: &'a [f64] },
}

impl Denoiser<'_> {
    fn prior_var(&self) -> f64 {
        match self {
            Denoiser::Gaussian { var } => *var,
            Denoiser::Discrete { points } => points.iter().map(|c| c * c).sum::<f64>() / points.len() as f64,
        }
    }

    /// Posterior (mean, variance) for r̂ = u + N(0, τ_r).
    #[inline]
    fn apply(&self, r: f64, tau_r: f64) -> (f64, f64) {
        match self {
            Denoiser::Gaussian { var } => {
                let g = var / (var + tau_r);
                (g * r, g * tau_r)
            }
            Denoiser::Discrete { points } => {
                let mut top = f64::NEG_INFINITY;
                for &c in points.iter() {
                    top = top.max(-(c - r) * (c - r) / (2.0 * tau_r));
                }
                let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
                for &c in points.iter() {
                    let p = (-(c - r) * (c - r) / (2.0 * tau_r) - top).exp();
                    z += p;
                    m1 += p * c;
                    m2 += p * c * c;
                }
                let mean = m1 / z;
                (mean, (m2 / z - mean * mean).max(0.0))
            }
        }
    }
}

/// Row and column energy statistics of A used by the scalar-variance steps:
/// the mean over rows of Σ_j A_ij² and the mean over columns of Σ_i A_ij².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixNorms {
    pub row: f64,
    pub col: f64,
}

impl MatrixNorms {
    pub fn empirical(a: &Array2<f64>) -> Self {
        let total: f64 = a.iter().map(|v| v * v).sum();
        Self { row: total / a.nrows() as f64, col: total / a.ncols() as f64 }
    }
}

#[derive(Debug, Clone)]
pub struct GampOutput {
    /// Posterior means, one column per problem.
    pub mean: Array2<f64>,
    /// Average posterior variance per column.
    pub var: Array1<f64>,
    pub iterations: usize,
}

/// Runs GAMP on y = f(A u + w) for every column of the observation.
pub fn gamp_solve(
    a: &Array2<f64>,
    obs: Observation<'_>,
    noise_var: f64,
    prior: Denoiser<'_>,
    norms: Option<MatrixNorms>,
    opts: &GampOptions,
) -> Result<GampOutput> {
    let (m, n) = a.dim();
    let (my, cols) = obs.shape();
    if my != m {
        return Err(Error::invalid(format!("observation has {my} rows but A has {m}")));
    }
    if let Observation::Intervals { lo, hi } = obs {
        if lo.dim() != hi.dim() {
            return Err(Error::invalid("interval bounds differ in shape"));
        }
    }
    if !(noise_var >= 0.0) {
        return Err(Error::invalid("noise variance must be >= 0"));
    }
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::invalid("GAMP damping must lie in (0, 1]"));
    }
    let norms = norms.unwrap_or_else(|| MatrixNorms::empirical(a));
    let d = opts.damping;
    let floor = opts.var_floor;
    let mut x = Array2::<f64>::zeros((n, cols));
    let mut tau_x = Array1::<f64>::from_elem(cols, prior.prior_var());
    let mut s = Array2::<f64>::zeros((m, cols));
    let mut tau_s = Array1::<f64>::zeros(cols);
    let mut zhat = Array2::<f64>::zeros((m, cols));
    let mut iterations = 0;
    for it in 1..=opts.max_iter {
        iterations = it;
        let tau_p = tau_x.mapv(|t| (norms.row * t).max(floor));
        let mut p = a.dot(&x);
        Zip::from(&mut p).and_broadcast(&s).and_broadcast(&tau_p).for_each(|p, &s, &tp| *p -= tp * s);

        // output step
        let mut tz_sum = Array1::<f64>::zeros(cols);
        match obs {
            Observation::Linear(y) => {
                for ((mut zc, pc), (yc, (&tp, tz))) in zhat
                    .columns_mut()
                    .into_iter()
                    .zip(p.columns())
                    .zip(y.columns().into_iter().zip(tau_p.iter().zip(tz_sum.iter_mut())))
                {
                    let g = tp / (tp + noise_var);
                    Zip::from(&mut zc).and(&pc).and(&yc).for_each(|z, &p, &y| *z = p + g * (y - p));
                    *tz = m as f64 * g * noise_var;
                }
            }
            Observation::Intervals { lo, hi } => {
                for ((mut zc, pc), ((lc, hc), (&tp, tz))) in zhat
                    .columns_mut()
                    .into_iter()
                    .zip(p.columns())
                    .zip(lo.columns().into_iter().zip(hi.columns()).zip(tau_p.iter().zip(tz_sum.iter_mut())))
                {
                    let v = tp + noise_var;
                    let sv = v.sqrt();
                    let mut acc = 0.0;
                    Zip::from(&mut zc).and(&pc).and(&lc).and(&hc).for_each(|z, &p, &l, &h| {
                        let (mu, var) = truncated_normal_moments((l - p) / sv, (h - p) / sv);
                        *z = p + tp / sv * mu;
                        acc += tp - tp * tp / v * (1.0 - var);
                    });
                    *tz = acc;
                }
            }
        }
        let mut s_new = zhat.clone();
        Zip::from(&mut s_new).and(&p).and_broadcast(&tau_p).for_each(|s, &p, &tp| *s = (*s - p) / tp);
        let tau_s_new = Zip::from(&tz_sum)
            .and(&tau_p)
            .map_collect(|&tz, &tp| ((1.0 - tz / m as f64 / tp) / tp).max(floor));
        if it == 1 {
            s = s_new;
            tau_s = tau_s_new;
        } else {
            s = &s * (1.0 - d) + &s_new * d;
            tau_s = &tau_s * (1.0 - d) + &tau_s_new * d;
        }

        // input step
        let tau_r = tau_s.mapv(|t| 1.0 / (norms.col * t).max(floor));
        let mut r = a.t().dot(&s);
        Zip::from(&mut r).and(&x).and_broadcast(&tau_r).for_each(|r, &x, &tr| *r = x + tr * *r);
        let mut x_new = Array2::<f64>::zeros((n, cols));
        let mut tx_new = Array1::<f64>::zeros(cols);
        for ((mut xc, rc), (&tr, tx)) in x_new
            .columns_mut()
            .into_iter()
            .zip(r.columns())
            .zip(tau_r.iter().zip(tx_new.iter_mut()))
        {
            let mut acc = 0.0;
            Zip::from(&mut xc).and(&rc).for_each(|xv, &rv| {
                let (mu, var) = prior.apply(rv, tr);
                *xv = mu;
                acc += var;
            });
            *tx = (acc / n as f64).max(floor);
        }
        let x_next = &x * (1.0 - d) + &x_new * d;
        let change = (&x_next - &x).mapv(|v| v * v).mean().unwrap_or(0.0);
        x = x_next;
        tau_x = &tau_x * (1.0 - d) + &tx_new * d;

        let finite = x.iter().all(|v| v.is_finite())
            && s.iter().all(|v| v.is_finite())
            && tau_x.iter().chain(tau_s.iter()).all(|v| v.is_finite());
        if !finite {
            return Err(Error::Diverged { iteration: it });
        }
        if change < opts.tol {
            break;
        }
    }
    Ok(GampOutput { mean: x, var: tau_x, iterations })
}

/// Real embedding [[Re A, -Im A], [Im A, Re A]] of a complex matrix given as
/// separate real and imaginary parts.
pub fn real_embedding(re: &Array2<f64>, im: &Array2<f64>) -> Array2<f64> {
    let (m, n) = re.dim();
    let mut out = Array2::<f64>::zeros((2 * m, 2 * n));
    out.slice_mut(ndarray::s![..m, ..n]).assign(re);
    out.slice_mut(ndarray::s![..m, n..]).assign(&im.mapv(|v| -v));
    out.slice_mut(ndarray::s![m.., ..n]).assign(im);
    out.slice_mut(ndarray::s![m.., n..]).assign(re);
    out
}

/// Stacks real over imaginary parts row-wise.
pub fn stack_rows(re: &Array2<f64>, im: &Array2<f64>) -> Array2<f64> {
    ndarray::concatenate(Axis(0), &[re.view(), im.view()]).expect("matching shapes")
}
