//! Damped Picard iteration for scalar maps F: [0,1] → [0,1].

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    /// Initial weight d in q ← (1-d)q + d·F(q); halved whenever the
    /// iteration overshoots.
    pub damping: f64,
    /// Stop when |F(q) - q| ≤ tol.
    pub tol: f64,
    pub max_iter: usize,
    /// Safeguarded Aitken extrapolation every third step.
    pub accelerate: bool,
    /// Threshold on |q_high - q_low| above which the map is flagged multistable.
    pub multistable_gap: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            damping: 0.5,
            tol: 1e-10,
            max_iter: 10_000,
            accelerate: true,
            multistable_gap: 1e-6,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::invalid(format!("damping must be in (0, 1], got {}", self.damping)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid("solver tolerance must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub q: f64,
    pub iterations: usize,
    pub residual: f64,
    pub multistable: bool,
}

const MIN_DAMPING: f64 = 1e-3;

pub const HIGH_START: f64 = 1.0 - 1e-6;
pub const LOW_START: f64 = 1e-6;

/// Runs the iteration from both ends of [0,1] and returns the high branch.
/// Differing limits set `multistable`.
pub fn solve_two_sided<F>(mut f: F, opts: &SolverOptions) -> Result<FixedPoint>
where
    F: FnMut(f64) -> Result<f64>,
{
    let hi = iterate(&mut f, HIGH_START, opts)?;
    let lo = iterate(&mut f, LOW_START, opts)?;
    Ok(FixedPoint {
        q: hi.q,
        iterations: hi.iterations + lo.iterations,
        residual: hi.residual,
        multistable: (hi.q - lo.q).abs() > opts.multistable_gap,
    })
}

/// Single damped run from `start`.
pub fn iterate<F>(f: &mut F, start: f64, opts: &SolverOptions) -> Result<FixedPoint>
where
    F: FnMut(f64) -> Result<f64>,
{
    opts.validate()?;
    let mut d = opts.damping;
    let mut prev_step = 0.0;
    let mut q = start.clamp(0.0, 1.0);
    let mut cached: Option<f64> = None;
    let mut hist: Vec<f64> = Vec::with_capacity(3);
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let fq = match cached.take() {
            Some(v) => v,
            None => f(q)?,
        };
        if !fq.is_finite() {
            return Err(Error::SolverFailure { iterations: it, last: q, residual });
        }
        residual = (fq - q).abs();
        if residual <= opts.tol {
            return Ok(FixedPoint { q, iterations: it, residual, multistable: false });
        }
        // a sign flip without a clear reduction signals overshoot; shrink the step
        let step = fq - q;
        if step * prev_step < 0.0 && step.abs() > 0.9 * prev_step.abs() {
            d = (0.5 * d).max(MIN_DAMPING);
        }
        prev_step = step;
        let next = ((1.0 - d) * q + d * fq).clamp(0.0, 1.0);
        hist.push(next);
        if opts.accelerate && hist.len() == 3 {
            let (a, b, c) = (hist[0], hist[1], hist[2]);
            hist.clear();
            let denom = c - 2.0 * b + a;
            // extrapolate only a contracting sequence; growing steps point away from the limit
            let contracting = (b - a).abs() > 0.0 && ((c - b) / (b - a)).abs() < 1.0;
            if contracting && denom.abs() > 1e-300 {
                let cand = c - (c - b) * (c - b) / denom;
                if (0.0..=1.0).contains(&cand) && cand.is_finite() {
                    let fc = f(cand)?;
                    if fc.is_finite() && (fc - cand).abs() < residual {
                        q = cand;
                        cached = Some(fc);
                        continue;
                    }
                }
            }
            hist.push(next);
        }
        q = next;
    }
    // critical slowing down near a bifurcation: bracket the root of F(q) - q
    // next to the last iterate and bisect
    match bracket_and_bisect(f, q, opts)? {
        Some((root, r, n)) => Ok(FixedPoint { q: root, iterations: opts.max_iter + n, residual: r, multistable: false }),
        None => Err(Error::SolverFailure { iterations: opts.max_iter, last: q, residual }),
    }
}

const BISECT_MAX: usize = 200;

/// Expands a bracket from `q` towards the sign change of g = F(q) - q (one
/// exists because g(0) ≥ 0 ≥ g(1)), then bisects until |g| ≤ tol.
fn bracket_and_bisect<F>(f: &mut F, q: f64, opts: &SolverOptions) -> Result<Option<(f64, f64, usize)>>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut evals = 0;
    let mut g = |x: f64, evals: &mut usize| -> Result<f64> {
        *evals += 1;
        Ok(f(x)? - x)
    };
    let gq = g(q, &mut evals)?;
    if !gq.is_finite() {
        return Ok(None);
    }
    let up = gq > 0.0;
    let (mut a, mut ga) = (q, gq);
    let mut h = 1e-9;
    let (mut b, mut gb) = loop {
        let x = if up { (q + h).min(1.0) } else { (q - h).max(0.0) };
        let gx = g(x, &mut evals)?;
        if !gx.is_finite() {
            return Ok(None);
        }
        if (gx > 0.0) != up || gx == 0.0 || x == 0.0 || x == 1.0 {
            break (x, gx);
        }
        a = x;
        ga = gx;
        h *= 4.0;
    };
    for _ in 0..BISECT_MAX {
        if ga.abs() <= opts.tol {
            return Ok(Some((a, ga.abs(), evals)));
        }
        if gb.abs() <= opts.tol {
            return Ok(Some((b, gb.abs(), evals)));
        }
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let gm = g(m, &mut evals)?;
        if !gm.is_finite() {
            return Ok(None);
        }
        if (gm > 0.0) == (ga > 0.0) {
            a = m;
            ga = gm;
        } else {
            b = m;
            gb = gm;
        }
    }
    Ok(None)
}
