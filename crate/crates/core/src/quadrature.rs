//! Quadrature rules for expectations over a standard normal variable.

use crate::special::normal_pdf;
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Gauss-Hermite rule for the weight e^{-x²} on the real line.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// Nodes are bracketed by a sign scan of the orthonormal Hermite
    /// recurrence and polished by safeguarded Newton steps, which stays
    /// reliable for several hundred nodes.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Hermite rule needs at least one node");
        let mut pos = Vec::with_capacity(n / 2);
        let top = (2.0 * n as f64 + 1.0).sqrt() + 1.0;
        let h = 0.1 / (2.0 * n as f64 + 1.0).sqrt();
        let mut a = if n % 2 == 1 { h * 0.5 } else { 0.0 };
        let mut fa = hermite_eval(n, a).0;
        while a < top && pos.len() < n / 2 {
            let b = a + h;
            let fb = hermite_eval(n, b).0;
            if fa == 0.0 || fa.signum() != fb.signum() {
                pos.push(polish_root(n, a, b));
            }
            a = b;
            fa = fb;
        }
        assert_eq!(pos.len(), n / 2, "Gauss-Hermite root scan missed nodes");
        let mut nodes = Vec::with_capacity(n);
        nodes.extend(pos.iter().rev().map(|z| -z));
        if n % 2 == 1 {
            nodes.push(0.0);
        }
        nodes.extend(pos.iter().copied());
        let weights = nodes
            .iter()
            .map(|&z| {
                let d = hermite_eval(n, z).1;
                2.0 / (d * d)
            })
            .collect();
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Raw nodes and weights for ∫ e^{-x²} f(x) dx.
    pub fn raw(&self) -> (&[f64], &[f64]) {
        (&self.nodes, &self.weights)
    }

    /// (z, weight) pairs such that Σ weight·f(z) ≈ E f(Z), Z ~ N(0,1).
    pub fn standard_normal(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let scale = 1.0 / PI.sqrt();
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (std::f64::consts::SQRT_2 * x, w * scale))
    }
}

const PIM4: f64 = 0.751_125_544_464_942_5; // π^{-1/4}

// (p_n(z), √(2n)·p_{n-1}(z)) for the orthonormal Hermite polynomials; the
// second entry is the derivative at a root.
fn hermite_eval(n: usize, z: f64) -> (f64, f64) {
    let mut p1 = PIM4;
    let mut p2 = 0.0;
    for j in 1..=n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
    }
    (p1, (2.0 * n as f64).sqrt() * p2)
}

fn polish_root(n: usize, mut lo: f64, mut hi: f64) -> f64 {
    let flo = hermite_eval(n, lo).0;
    let mut z = 0.5 * (lo + hi);
    for _ in 0..100 {
        let (p, dp) = hermite_eval(n, z);
        if p == 0.0 {
            return z;
        }
        if p.signum() == flo.signum() {
            lo = z;
        } else {
            hi = z;
        }
        let step = z - p / dp;
        let next = if step > lo && step < hi { step } else { 0.5 * (lo + hi) };
        if (next - z).abs() <= 1e-15 * next.abs().max(1.0) {
            return next;
        }
        z = next;
    }
    z
}

/// Shared 200-node table used by the scalar-channel functionals.
pub fn hermite_200() -> &'static GaussHermite {
    static TABLE: OnceLock<GaussHermite> = OnceLock::new();
    TABLE.get_or_init(|| GaussHermite::new(200))
}

/// Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = 1.0;
                let mut p2 = 0.0;
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = ((2.0 * jf - 1.0) * z * p2 - (jf - 1.0) * p3) / jf;
                }
                pp = nf * (z * p1 - p2) / (z * z - 1.0);
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 {
                    break;
                }
            }
            x[i] = -z;
            x[n - 1 - i] = z;
            w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
            w[n - 1 - i] = w[i];
        }
        Self { nodes: x, weights: w }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// How E_z[F(√γ·z)] is discretised for the quantized-output functionals.
#[derive(Debug, Clone)]
pub enum Quadrature {
    /// Plain Gauss-Hermite with a fixed node count.
    Hermite(GaussHermite),
    /// Composite Gauss-Legendre on [-z_max, z_max] with panels refined
    /// around each quantizer transition. Needed when the transition width
    /// √(s/γ) falls below the Hermite node spacing.
    Composite {
        rule: GaussLegendre,
        z_max: f64,
        base_step: f64,
    },
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature::composite()
    }
}

impl Quadrature {
    pub fn hermite(n: usize) -> Self {
        Quadrature::Hermite(GaussHermite::new(n))
    }

    pub fn composite() -> Self {
        Quadrature::Composite {
            rule: GaussLegendre::new(8),
            z_max: 10.0,
            base_step: 0.5,
        }
    }

    /// Nodes for a standard-normal expectation of an integrand with smooth
    /// steps at `centers` (in z units) of width `width`.
    pub fn nodes(&self, centers: &[f64], width: f64) -> Vec<(f64, f64)> {
        match self {
            Quadrature::Hermite(gh) => gh.standard_normal().collect(),
            Quadrature::Composite {
                rule,
                z_max,
                base_step,
            } => composite_nodes(rule, *z_max, *base_step, centers, width),
        }
    }
}

const REFINE_OFFSETS: [f64; 13] = [
    -8.0, -4.0, -2.0, -1.0, -0.5, -0.25, 0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0,
];

fn composite_nodes(
    rule: &GaussLegendre,
    z_max: f64,
    base_step: f64,
    centers: &[f64],
    width: f64,
) -> Vec<(f64, f64)> {
    let panels = (2.0 * z_max / base_step).round() as usize;
    let mut breaks: Vec<f64> = (0..=panels)
        .map(|i| -z_max + i as f64 * 2.0 * z_max / panels as f64)
        .collect();
    // Refinement only pays off for sharp transitions and a modest number of them.
    if width < base_step && centers.len() <= 64 {
        for &c in centers {
            if c.abs() > z_max + 8.0 * width {
                continue;
            }
            for off in REFINE_OFFSETS {
                let b = c + off * width;
                if b > -z_max && b < z_max {
                    breaks.push(b);
                }
            }
            // Geometric fill between the refined core and the base grid.
            let mut reach = 16.0 * width;
            while reach < base_step {
                for b in [c - reach, c + reach] {
                    if b > -z_max && b < z_max {
                        breaks.push(b);
                    }
                }
                reach *= 2.0;
            }
        }
        breaks.sort_by(|a, b| a.total_cmp(b));
        breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    }
    let mut out = Vec::with_capacity(breaks.len() * rule.nodes().len());
    for pair in breaks.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (&x, &w) in rule.nodes().iter().zip(rule.weights()) {
            let z = mid + half * x;
            out.push((z, half * w * normal_pdf(z)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hermite_moments() {
        for n in [5, 40, 200] {
            let gh = GaussHermite::new(n);
            let (m0, m2, m4): (f64, f64, f64) = gh
                .standard_normal()
                .fold((0.0, 0.0, 0.0), |(a, b, c), (z, w)| {
                    (a + w, b + w * z * z, c + w * z.powi(4))
                });
            assert_relative_eq!(m0, 1.0, max_relative = 1e-13);
            assert_relative_eq!(m2, 1.0, max_relative = 1e-12);
            assert_relative_eq!(m4, 3.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn legendre_integrates_polynomials() {
        let gl = GaussLegendre::new(8);
        let s: f64 = gl
            .nodes()
            .iter()
            .zip(gl.weights())
            .map(|(x, w)| w * x.powi(14))
            .sum();
        assert_relative_eq!(s, 2.0 / 15.0, max_relative = 1e-13);
    }

    #[test]
    fn composite_handles_sharp_step() {
        // E[1{Z > c}] with a near-discontinuity of width 1e-4 at c = 0.3
        let q = Quadrature::composite();
        let width = 1e-4;
        let c = 0.3;
        let est: f64 = q
            .nodes(&[c], width)
            .iter()
            .map(|&(z, w)| w * crate::special::normal_cdf((z - c) / width))
            .sum();
        let exact = crate::special::normal_sf(c / (1.0 + width * width).sqrt());
        assert_relative_eq!(est, exact, max_relative = 1e-9);
    }
}
