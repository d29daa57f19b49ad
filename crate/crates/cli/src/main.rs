use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use locc_spectrum::linalg::c;
use locc_spectrum::locc::{apply_protocol, apply_protocol_dense, to_normal_form, MixedState, Protocol};
use locc_spectrum::majorization::{
    default_v_star, exact_multi_copy_check, majorizes, max_extractable_copies, optimal_conversion_probability,
    truncate,
};
use locc_spectrum::random;
use locc_spectrum::rate::{concentration_rate, converse_rate, deterministic_rate, rate_curve, RateQuery, RateResult};
use locc_spectrum::spectral::{check_general_split, check_projection_split, check_trace_inequality};
use locc_spectrum::{ConditionallyPure, Error, PureState, WeightVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// Asymptotic LOCC conversion rates, majorization oracles and protocol simulation.
///
/// JSON arguments are given inline or as a path to a file. Distributions are
/// a JSON array of weights or an object `{"weights": [...]}`.
#[derive(Parser)]
#[command(name = "locc-spectrum", version, about)]
struct Cli {
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Cap on worker threads (also read from LOCC_SPECTRUM_THREADS).
    #[arg(long, global = true, env = "LOCC_SPECTRUM_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Pair {
    /// Source Schmidt coefficients P.
    #[arg(long)]
    p: String,
    /// Target Schmidt coefficients Q.
    #[arg(long)]
    q: String,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal rate E*(r, P, Q) under converse error exponent r.
    Rate {
        #[command(flatten)]
        pair: Pair,
        /// Converse error exponent (≥ 0).
        #[arg(long, default_value_t = 0.0)]
        r: f64,
    },
    /// CSV `r,value,argmin_alpha` over a range or list of exponents.
    RateCurve {
        #[command(flatten)]
        pair: Pair,
        /// Explicit exponents as a JSON array; overrides the range flags.
        #[arg(long)]
        r_values: Option<String>,
        #[arg(long, default_value_t = 0.0)]
        r_start: f64,
        #[arg(long, default_value_t = 1.0)]
        r_stop: f64,
        #[arg(long, default_value_t = 0.05)]
        r_step: f64,
    },
    /// Deterministic rate E(P, Q) = min over α of H_α(P)/H_α(Q).
    DetRate {
        #[command(flatten)]
        pair: Pair,
    },
    /// Entanglement concentration rate (target a single EPR pair).
    Concentrate {
        #[arg(long)]
        p: String,
        #[arg(long, default_value_t = 0.0)]
        r: f64,
    },
    /// Single-copy conversion: Nielsen test and optimal success probability.
    Convert {
        #[command(flatten)]
        pair: Pair,
    },
    /// Finite-copy majorization oracle at success probability s = 2^(-rn).
    /// Without --m, reports the largest m with P^n → Q^m.
    Oracle {
        #[command(flatten)]
        pair: Pair,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.0)]
        r: f64,
        /// Check this number of target copies only.
        #[arg(long)]
        m: Option<usize>,
    },
    /// Truncated distribution x_n · min(P^n, 2^(n v*)).
    Truncate {
        #[arg(long)]
        p: String,
        #[arg(long)]
        n: usize,
        /// Threshold exponent; defaults to −0.9·H(P).
        #[arg(long, allow_hyphen_values = true)]
        v_star: Option<f64>,
    },
    /// Random sweep of the split and trace inequalities.
    SpectrumVerify {
        #[arg(long, default_value_t = 10_000)]
        instances: u64,
        /// Seed for the ChaCha8 generator.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Largest local dimension drawn.
        #[arg(long, default_value_t = 6)]
        max_dim: usize,
    },
    /// Apply a protocol to a conditionally pure (or pure) state.
    Simulate {
        #[arg(long)]
        protocol: String,
        #[arg(long)]
        state: String,
        /// Use the dense channel semantics instead of branch tracking.
        #[arg(long)]
        dense: bool,
    },
    /// Rewrite a protocol so that only its final register is traced out.
    NormalForm {
        #[arg(long)]
        protocol: String,
    },
}

enum Failure {
    Validation(String),
    Resource(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_resource() {
            Failure::Resource(e.to_string())
        } else {
            Failure::Validation(e.to_string())
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Validation(msg.into())
}

/// Inline JSON when the text looks like JSON, otherwise a file path.
fn load_json<T: DeserializeOwned>(arg: &str, what: &str) -> CliResult<T> {
    let t = arg.trim_start();
    let text = if t.starts_with('[') || t.starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).map_err(|e| invalid(format!("cannot read {what} from {arg}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| {
        invalid(format!("malformed {what} JSON at line {}, column {}: {e}", e.line(), e.column()))
    })
}

#[derive(Deserialize)]
#[serde(untagged)]
enum DistributionArg {
    List(Vec<f64>),
    Object(WeightVector),
}

fn distribution(arg: &str, what: &str) -> CliResult<WeightVector> {
    match load_json::<DistributionArg>(arg, what)? {
        DistributionArg::List(v) => Ok(WeightVector::new(v)?),
        DistributionArg::Object(w) => Ok(w),
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum StateArg {
    Conditional(ConditionallyPure),
    Pure(PureState),
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string(v).expect("serializable");
    s.push('\n');
    s
}

/// `%.17g`: 17 significant digits, trailing zeros dropped.
fn fmt_g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.16e}");
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-5..17).contains(&exp) {
        format!("{}e{}{:02}", trim(mant), if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        trim(&format!("{:.*}", (16 - exp).max(0) as usize, x))
    }
}

fn r_grid(start: f64, stop: f64, step: f64) -> CliResult<Vec<f64>> {
    if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
        return Err(invalid(format!("bad r range: start {start}, stop {stop}, step {step}")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if count > 1_000_000 {
        return Err(Failure::Resource(format!("r range has {count} points")));
    }
    Ok((0..count)
        .map(|i| {
            let r = start + i as f64 * step;
            if (r - stop).abs() <= 1e-9 * step { stop } else { r }
        })
        .collect())
}

fn curve_csv(rows: &[(f64, RateResult)]) -> String {
    let mut out = String::from("r,value,argmin_alpha\n");
    for (r, res) in rows {
        let alpha = res.argmin_alpha.map(fmt_g17).unwrap_or_default();
        writeln!(out, "{},{},{}", fmt_g17(*r), fmt_g17(res.value), alpha).expect("string write");
    }
    out
}

#[derive(Serialize)]
struct ConvertReport {
    nielsen: bool,
    probability: f64,
}

#[derive(Serialize)]
struct ExactReport {
    m: usize,
    n: usize,
    ok: bool,
    s: f64,
}

#[derive(Serialize, Default, Clone, Copy)]
struct CheckTally {
    instances: u64,
    violations: u64,
    worst_relative_excess: f64,
}

#[derive(Serialize)]
struct VerifyReport {
    general_split: CheckTally,
    instances: u64,
    max_dim: usize,
    projection_split: CheckTally,
    prng: &'static str,
    seed: u64,
    trace_inequality: CheckTally,
    violations: u64,
}

fn spectrum_verify(instances: u64, seed: u64, max_dim: usize) -> CliResult<VerifyReport> {
    if max_dim == 0 {
        return Err(invalid("--max-dim must be at least 1"));
    }
    if max_dim > 64 {
        return Err(Failure::Resource(format!("--max-dim {max_dim} exceeds 64")));
    }
    let rows: Vec<(usize, f64)> = (0..instances)
        .into_par_iter()
        .map(|i| -> locc_spectrum::Result<(usize, f64)> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            let alpha = rng.random_range(1..=10) as f64 / 10.0;
            let kind = (i % 3) as usize;
            let check = match kind {
                0 | 1 => {
                    let dims = [rng.random_range(1..=max_dim), rng.random_range(1..=max_dim)];
                    let s = random::state(&mut rng, &dims).scaled(c(rng.random_range(0.1..=3.0), 0.0));
                    let party = rng.random_range(0..2);
                    if kind == 0 {
                        let p = random::projector(&mut rng, dims[party]);
                        check_projection_split(&s, party, &p, alpha)?
                    } else {
                        let (a, b) = random::contraction_pair(&mut rng, dims[party]);
                        check_general_split(&s, party, &a, &b, alpha)?
                    }
                }
                _ => {
                    let n = rng.random_range(1..=max_dim);
                    let x = random::gaussian_matrix(&mut rng, n, n);
                    let p = random::projector(&mut rng, n);
                    check_trace_inequality(&x, &p, alpha)?
                }
            };
            Ok((kind, if check.holds { f64::NEG_INFINITY } else { check.relative_excess() }))
        })
        .collect::<locc_spectrum::Result<_>>()?;
    let mut tallies = [CheckTally::default(); 3];
    for (kind, excess) in rows {
        let t = &mut tallies[kind];
        t.instances += 1;
        if excess > f64::NEG_INFINITY {
            t.violations += 1;
            t.worst_relative_excess = t.worst_relative_excess.max(excess);
        }
    }
    Ok(VerifyReport {
        general_split: tallies[1],
        instances,
        max_dim,
        projection_split: tallies[0],
        prng: "ChaCha8",
        seed,
        trace_inequality: tallies[2],
        violations: tallies.iter().map(|t| t.violations).sum(),
    })
}

fn run(cmd: Command) -> CliResult<String> {
    Ok(match cmd {
        Command::Rate { pair, r } => {
            let q = RateQuery::new(distribution(&pair.p, "p")?, distribution(&pair.q, "q")?, r)?;
            to_json(&converse_rate(&q))
        }
        Command::RateCurve { pair, r_values, r_start, r_stop, r_step } => {
            let rs = match r_values {
                Some(v) => load_json::<Vec<f64>>(&v, "r-values")?,
                None => r_grid(r_start, r_stop, r_step)?,
            };
            let (p, q) = (distribution(&pair.p, "p")?, distribution(&pair.q, "q")?);
            curve_csv(&rate_curve(&p, &q, &rs)?)
        }
        Command::DetRate { pair } => {
            to_json(&deterministic_rate(&distribution(&pair.p, "p")?, &distribution(&pair.q, "q")?)?)
        }
        Command::Concentrate { p, r } => to_json(&concentration_rate(&distribution(&p, "p")?, r)?),
        Command::Convert { pair } => {
            let (p, q) = (distribution(&pair.p, "p")?, distribution(&pair.q, "q")?);
            to_json(&ConvertReport {
                nielsen: majorizes(&p, &q)?,
                probability: optimal_conversion_probability(&p, &q)?,
            })
        }
        Command::Oracle { pair, n, r, m } => {
            let (p, q) = (distribution(&pair.p, "p")?, distribution(&pair.q, "q")?);
            if !(r >= 0.0) || !r.is_finite() {
                return Err(invalid(format!("r = {r} must be finite and ≥ 0")));
            }
            let s = (-r * n as f64).exp2();
            match m {
                Some(m) => {
                    to_json(&ExactReport { m, n, ok: exact_multi_copy_check(&p, &q, n, m, s)?, s })
                }
                None => {
                    let m = max_extractable_copies(&p, &q, n, r)?;
                    to_json(&ExactReport { m, n, ok: true, s })
                }
            }
        }
        Command::Truncate { p, n, v_star } => {
            let p = distribution(&p, "p")?;
            let v = match v_star {
                Some(v) => v,
                None => default_v_star(&p)?,
            };
            to_json(&truncate(&p, n, v)?)
        }
        Command::SpectrumVerify { instances, seed, max_dim } => to_json(&spectrum_verify(instances, seed, max_dim)?),
        Command::Simulate { protocol, state, dense } => {
            let protocol: Protocol = load_json(&protocol, "protocol")?;
            let input = match load_json::<StateArg>(&state, "state")? {
                StateArg::Conditional(s) => s,
                StateArg::Pure(s) => ConditionallyPure::pure(s),
            };
            if dense {
                let out = apply_protocol_dense(&MixedState::from_conditionally_pure(&input)?, &protocol)?;
                to_json(&if protocol.trace_final_register() { out.trace_register() } else { out })
            } else {
                to_json(&apply_protocol(&input, &protocol)?)
            }
        }
        Command::NormalForm { protocol } => {
            let protocol: Protocol = load_json(&protocol, "protocol")?;
            to_json(&to_normal_form(&protocol)?)
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: thread cap must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    }
    let result = run(cli.command).and_then(|text| match &cli.out {
        Some(path) => std::fs::write(path, text)
            .map(|_| String::new())
            .map_err(|e| invalid(format!("cannot write {}: {e}", path.display()))),
        None => Ok(text),
    });
    match result {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Resource(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
