//! Library values against independent Monte Carlo oracles that share none of
//! the quadrature or special-function code.

use qlst::replica::hbar;
use qlst::scalar_awgn::{mmse_awgn, mutual_info_awgn};
use qlst::{InputPrior, QuantizerSpec, Resolution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};

const SAMPLES: usize = 200_000;

/// H̄(γ, s) = 2·E[H(Ψ(√γ z, s))], sampling z and using statrs for Φ.
fn hbar_mc(gamma: f64, s: f64, q: &QuantizerSpec, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let phi = Normal::standard();
    let edges: Vec<f64> = (0..=q.levels()).map(|k| std::f64::consts::SQRT_2 * q.threshold(k)).collect();
    let (mut sum, mut sq) = (0.0, 0.0);
    for _ in 0..SAMPLES {
        let w = gamma.sqrt() * rng.sample::<f64, _>(StandardNormal);
        let cdf: Vec<f64> = edges.iter().map(|e| phi.cdf((e - w) / s.sqrt())).collect();
        let h: f64 = cdf.windows(2).map(|c| c[1] - c[0]).filter(|&p| p > 0.0).map(|p| -p * p.log2()).sum();
        sum += 2.0 * h;
        sq += 4.0 * h * h;
    }
    let n = SAMPLES as f64;
    let mean = sum / n;
    (mean, ((sq / n - mean * mean) / n).sqrt())
}

#[test]
fn hbar_matches_sampled_entropy() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (bits, gamma, s) in [(1, 1.0, 0.5), (2, 5.0, 1.0), (3, 0.3, 2.0), (2, 40.0, 0.1)] {
        let q = QuantizerSpec::calibrated(Resolution::Bits(bits), gamma + s - 1.0).unwrap();
        let exact = hbar(gamma, s, &q).unwrap();
        let (mc, se) = hbar_mc(gamma, s, &q, &mut rng);
        assert!((exact - mc).abs() < 4.0 * se + 1e-3, "b={bits} γ={gamma} s={s}: {exact} vs {mc} ± {se}");
    }
}

/// Per-component Monte Carlo of I(X; √λX + N) and the MMSE, N ~ N(0, 1/2);
/// both are doubled to the complex symbol.
fn awgn_mc(lambda: f64, points: &[f64], rng: &mut ChaCha8Rng) -> (f64, f64) {
    let sl = lambda.sqrt();
    let sd = 0.5f64.sqrt();
    let log_lik = |y: f64, x: f64| -(y - sl * x).powi(2); // up to a constant, variance 1/2
    let (mut info, mut err) = (0.0, 0.0);
    for _ in 0..SAMPLES {
        let x = points[rng.random_range(0..points.len())];
        let y = sl * x + sd * rng.sample::<f64, _>(StandardNormal);
        let lx = log_lik(y, x);
        let ws: Vec<f64> = points.iter().map(|&p| (log_lik(y, p) - lx).exp()).collect();
        let total: f64 = ws.iter().sum();
        info += (points.len() as f64 / total).log2();
        let post: f64 = ws.iter().zip(points).map(|(w, p)| w * p).sum::<f64>() / total;
        // posterior variance: lower variance than the squared error itself
        let second: f64 = ws.iter().zip(points).map(|(w, p)| w * p * p).sum::<f64>() / total;
        err += second - post * post;
    }
    let n = SAMPLES as f64;
    (2.0 * info / n, 2.0 * err / n)
}

#[test]
fn awgn_functionals_match_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for a in [1, 2] {
        let prior = InputPrior::discrete(a).unwrap();
        for lambda in [0.5, 3.0, 10.0] {
            let (info, mmse) = awgn_mc(lambda, prior.points(), &mut rng);
            let i = mutual_info_awgn(lambda, &prior).unwrap();
            let m = mmse_awgn(lambda, &prior).unwrap();
            assert!((i - info).abs() < 0.01, "a={a} λ={lambda}: I {i} vs {info}");
            // sampling error is about 5e-4
            assert!((m - mmse).abs() < 0.004, "a={a} λ={lambda}: mmse {m} vs {mmse}");
        }
    }
}
