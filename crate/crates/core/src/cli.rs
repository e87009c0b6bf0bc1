//! Command-line front end. Reports go to stdout as JSON; failures go to
//! stderr as a JSON object with a stable exit code (1 config, 2 numeric,
//! 3 unreachable target).

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::presets::{run_preset, PresetId, PresetOptions};
use crate::quantizer::Resolution;
use crate::rate::{optimize_training, rate_known, required_alpha_for_rate, RateTarget, RequiredAlpha};
use crate::replica::{analyze_with_training, solve_training_fixed_point, ScalarSolution, Training};
use crate::ser::{critical_snr_db, required_alpha_for_ser, required_tau_prime_for_ser, ser_large_alpha, ser_pipeline};
use crate::sim::monte_carlo_ser;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "qlst", version, about = "Large-system rates, training and SER of quantized MIMO")]
pub struct Cli {
    /// Worker threads; affects wall-clock time only.
    #[arg(long, global = true, env = "QLST_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fixed points, equivalent system, mutual information and rate.
    #[command(allow_negative_numbers = true)]
    Analyze(SystemArgs),
    /// Optimal training fraction, or the α needed for a target rate.
    #[command(allow_negative_numbers = true)]
    Optimize {
        #[command(flatten)]
        system: SystemArgs,
        /// Target rate in bits per transmitter.
        #[arg(long, visible_alias = "target-rate")]
        target: Option<f64>,
        /// Genie channel knowledge instead of training.
        #[arg(long)]
        known: bool,
    },
    /// QPSK symbol-error rate, or an inverse solve for a target SER.
    #[command(allow_negative_numbers = true)]
    Ser {
        #[command(flatten)]
        system: SystemArgs,
        /// Target SER for the inverse solves.
        #[arg(long)]
        target: Option<f64>,
        /// Quantity solved for when a target is given.
        #[arg(long, value_enum, default_value_t = SolveFor::Alpha)]
        solve: SolveFor,
    },
    /// Monte Carlo GAMP2 simulation.
    #[command(allow_negative_numbers = true)]
    Simulate {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long)]
        n_trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Transmit antennas.
        #[arg(long)]
        m: Option<usize>,
    },
    /// Runs a figure preset (fig1..fig11, or `all`) and writes CSV/JSONL.
    #[command(allow_negative_numbers = true)]
    Preset {
        id: String,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Coarse grids.
        #[arg(long)]
        quick: bool,
        #[arg(long, default_value_t = 10_000)]
        n_trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated SNR grid (dB) for fig8.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        fig8_snr_db: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolveFor {
    Alpha,
    TauPrime,
    /// SNR at which τ′ = 2 reaches 1% SER (the target must be 0.01).
    CriticalSnr,
}

/// Options shared by the system-level subcommands; flags override the config file.
#[derive(Debug, Clone, Args)]
pub struct SystemArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Print the effective configuration, defaults included, and exit.
    #[arg(long)]
    pub explain: bool,
    /// SNR in dB, or `inf`.
    #[arg(long, allow_hyphen_values = true)]
    pub rho_db: Option<String>,
    #[arg(long)]
    pub sigma2: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub tau_prime: Option<f64>,
    /// DAC bits per real component, or `inf`.
    #[arg(long)]
    pub a: Option<Resolution>,
    /// ADC bits per real component, or `inf`.
    #[arg(long, visible_alias = "b")]
    pub bits: Option<Resolution>,
    #[arg(long)]
    pub step: Option<f64>,
    /// Channel mse override; skips the training fixed point.
    #[arg(long)]
    pub mse_g: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl SystemArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        if let Some(r) = &self.rho_db {
            cfg.rho_db = match r.trim() {
                "inf" | "+inf" => f64::INFINITY,
                s => s.parse().map_err(|_| Error::Config { path: "rho_db".into(), message: format!("not a number: `{s}`") })?,
            };
        }
        macro_rules! set {
            ($($f:ident => $g:ident),*) => {$( if let Some(v) = self.$f { cfg.$g = v; } )*};
        }
        set!(sigma2 => sigma2, alpha => alpha, beta => beta, a => a, bits => b);
        if self.tau.is_some() {
            cfg.tau = self.tau;
            cfg.tau_prime = None;
        }
        if self.tau_prime.is_some() {
            cfg.tau_prime = self.tau_prime;
            cfg.tau = None;
        }
        if self.step.is_some() {
            cfg.step = self.step;
        }
        if self.mse_g.is_some() {
            cfg.mse_g = self.mse_g;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// What the process should print and return.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Self { stdout, stderr: String::new(), code: 0 }
    }
}

pub fn error_json(e: &Error) -> String {
    let mut v = json!({ "error": e.kind(), "message": e.to_string(), "exit_code": e.exit_code() });
    if let Error::Config { path, .. } = e {
        v["path"] = json!(path);
    }
    v.to_string()
}

/// Parses arguments and runs, never panicking on user input.
pub fn main_with_args<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    Outcome::ok(e.to_string())
                }
                _ => {
                    let err = Error::Config { path: "<command line>".into(), message: e.to_string().trim().to_owned() };
                    Outcome { stdout: String::new(), stderr: error_json(&err), code: 1 }
                }
            };
        }
    };
    let result = match cli.threads {
        Some(0) => Err(Error::Config { path: "threads".into(), message: "must be at least 1".into() }),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config { path: "threads".into(), message: e.to_string() })
            .and_then(|pool| pool.install(|| run(&cli.command))),
        None => run(&cli.command),
    };
    match result {
        Ok(o) => o,
        Err(e) => Outcome { stdout: String::new(), stderr: error_json(&e), code: e.exit_code() },
    }
}

fn emit(value: Value, out: &Option<PathBuf>) -> Result<Outcome> {
    let text = serde_json::to_string_pretty(&value)? + "\n";
    match out {
        Some(p) => {
            std::fs::write(p, &text)?;
            Ok(Outcome::ok(String::new()))
        }
        None => Ok(Outcome::ok(text)),
    }
}

fn explain(cfg: &RunConfig) -> Result<Outcome> {
    Ok(Outcome::ok(cfg.to_json_pretty()? + "\n"))
}

pub fn run(cmd: &Command) -> Result<Outcome> {
    match cmd {
        Command::Analyze(args) => {
            let cfg = args.resolve()?;
            if args.explain {
                return explain(&cfg);
            }
            emit(analyze(&cfg)?, &args.out)
        }
        Command::Optimize { system, target, known } => {
            let cfg = system.resolve()?;
            if system.explain {
                return explain(&cfg);
            }
            emit(optimize(&cfg, *target, *known)?, &system.out)
        }
        Command::Ser { system, target, solve } => {
            let cfg = system.resolve()?;
            if system.explain {
                return explain(&cfg);
            }
            emit(ser(&cfg, *target, *solve)?, &system.out)
        }
        Command::Simulate { system, n_trials, seed, m } => {
            let mut cfg = system.resolve()?;
            if let Some(n) = n_trials {
                cfg.simulation.n_trials = *n;
            }
            if let Some(s) = seed {
                cfg.simulation.seed = *s;
            }
            if let Some(m) = m {
                cfg.simulation.m = *m;
            }
            if system.explain {
                return explain(&cfg);
            }
            emit(simulate(&cfg)?, &system.out)
        }
        Command::Preset { id, out, quick, n_trials, seed, fig8_snr_db } => {
            let ids: Vec<PresetId> = if id == "all" { PresetId::ALL.to_vec() } else { vec![id.parse()?] };
            let opts = PresetOptions {
                quick: *quick,
                n_trials: *n_trials,
                seed: *seed,
                fig8_snr_db: fig8_snr_db.clone(),
                ..Default::default()
            };
            let mut reports = Vec::new();
            let mut all_passed = true;
            for id in ids {
                let data = run_preset(id, &opts)?;
                let (csv, jsonl) = data.write_to_dir(out)?;
                all_passed &= data.passed();
                let mut r = serde_json::to_value(data.report())?;
                r["csv"] = json!(csv.display().to_string());
                r["jsonl"] = json!(jsonl.display().to_string());
                reports.push(r);
            }
            let stdout = serde_json::to_string_pretty(&reports)? + "\n";
            if all_passed {
                Ok(Outcome::ok(stdout))
            } else {
                let err = json!({ "error": "assertion_failed", "message": "one or more preset checks failed", "exit_code": 2 });
                Ok(Outcome { stdout, stderr: err.to_string(), code: 2 })
            }
        }
    }
}

/// The `analyze` report.
pub fn analyze(cfg: &RunConfig) -> Result<Value> {
    let system = cfg.system()?;
    let num = cfg.numerics();
    let g = match cfg.mse_g {
        Some(m) => ScalarSolution::gaussian_from_mse(m)?,
        None => solve_training_fixed_point(&system, &num)?,
    };
    let an = analyze_with_training(&system, &g, &num)?;
    let mut v = serde_json::to_value(an)?;
    let tau = system.tau();
    v["rho"] = ext(system.rho);
    v["sigma2"] = json!(system.sigma2);
    v["load"] = json!(system.load());
    if let Training::Fraction(t) = system.training {
        v["rate_per_rx"] = json!((1.0 - t) * an.terms.info);
        v["rate_per_tx"] = json!((1.0 - t) * system.alpha * an.terms.info);
    }
    v["tau"] = json!(tau);
    // the equivalent powers are infinite in the noiseless limit
    v["solution"]["rho_bar"] = ext(an.solution.rho_bar);
    v["solution"]["sigma2_bar"] = ext(an.solution.sigma2_bar);
    v["solution"]["qtilde_g"] = ext(an.solution.qtilde_g);
    v["solution"]["qtilde_x"] = ext(an.solution.qtilde_x);
    v["h_cond"] = ext(an.terms.h_cond);
    v["h_out"] = ext(an.terms.h_out);
    Ok(v)
}

/// Numbers as JSON numbers, infinities as "inf".
fn ext(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        Value::Null
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

/// The `optimize` report: τ_opt and R_opt, or the α needed for `target`.
pub fn optimize(cfg: &RunConfig, target: Option<f64>, known: bool) -> Result<Value> {
    let num = cfg.numerics();
    match target {
        None => {
            let system = cfg.system_with(Training::Fraction(0.1))?;
            let opt = optimize_training(&system, &num, &cfg.rate)?;
            let rk = rate_known(system.rho, system.sigma2, system.alpha, &system.quantizer, &system.input_prior, &num)?;
            Ok(json!({
                "alpha": system.alpha,
                "beta": system.beta,
                "tau_opt": opt.tau_opt,
                "tau_opt_beta": opt.tau_opt * system.beta,
                "r_opt": opt.value,
                "r_known": rk,
            }))
        }
        Some(t) => {
            let spec = RateTarget { rho: cfg.rho(), sigma2: cfg.sigma2, beta: cfg.beta, a: cfg.a, b: cfg.b, known };
            let r = required_alpha_for_rate(t, &spec, &num, &cfg.rate)?;
            Ok(json!({
                "target_rate": t,
                "known_channel": known,
                "alpha": r.value(),
                "vanishing": matches!(r, RequiredAlpha::Vanishing),
            }))
        }
    }
}

/// The `ser` report, or an inverse solve when `target` is set.
pub fn ser(cfg: &RunConfig, target: Option<f64>, solve: SolveFor) -> Result<Value> {
    let num = cfg.numerics();
    let tp = cfg.load_tau_prime();
    match target {
        None => {
            let system = cfg.system_with(Training::Load(tp))?;
            let rep = ser_pipeline(&system, &num)?;
            let approx = ser_large_alpha(&system, &num)?;
            let mut v = serde_json::to_value(rep)?;
            v["ser_large_alpha"] = json!(approx);
            v["qtilde_x"] = ext(rep.qtilde_x);
            v["fixed_point"]["rho_bar"] = ext(rep.fixed_point.rho_bar);
            v["fixed_point"]["sigma2_bar"] = ext(rep.fixed_point.sigma2_bar);
            v["fixed_point"]["qtilde_g"] = ext(rep.fixed_point.qtilde_g);
            v["fixed_point"]["qtilde_x"] = ext(rep.fixed_point.qtilde_x);
            Ok(v)
        }
        Some(t) => match solve {
            SolveFor::Alpha => {
                let r = required_alpha_for_ser(t, cfg.rho(), tp, cfg.b, &num)?;
                Ok(json!({ "target_ser": t, "alpha": r.value(), "vanishing": matches!(r, RequiredAlpha::Vanishing) }))
            }
            SolveFor::TauPrime => {
                let tp = required_tau_prime_for_ser(t, cfg.rho(), cfg.alpha, cfg.b, &num)?;
                Ok(json!({ "target_ser": t, "tau_prime": tp }))
            }
            SolveFor::CriticalSnr => {
                if t != 0.01 {
                    return Err(Error::invalid("the critical SNR is defined for a 1% SER target"));
                }
                Ok(json!({ "target_ser": t, "critical_snr_db": critical_snr_db(cfg.alpha, cfg.b, &num)? }))
            }
        },
    }
}

/// Monte Carlo SER next to the theory value.
pub fn simulate(cfg: &RunConfig) -> Result<Value> {
    let trial = cfg.trial()?;
    let mc = monte_carlo_ser(&trial, cfg.simulation.n_trials, cfg.simulation.seed)?;
    let theory = ser_pipeline(&cfg.system_with(Training::Load(trial.t as f64 / trial.m as f64))?, &cfg.numerics())?;
    let mut v = serde_json::to_value(mc)?;
    v["m"] = json!(trial.m);
    v["k"] = json!(trial.k);
    v["t"] = json!(trial.t);
    v["seed"] = json!(cfg.simulation.seed);
    v["ser_theory"] = json!(theory.ser);
    Ok(v)
}
