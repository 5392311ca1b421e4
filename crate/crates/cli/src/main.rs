mod split;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use smoothent_core::entropy::{conditional_vn, h0, hmin, renyi_alpha, shannon, von_neumann};
use smoothent_core::harness::{
    default_suite, parse_suite_config, run_suite, traceability_table, write_outputs, CheckSpec,
};
use smoothent_core::linalg::io::{matrix_to_json, read_state, state_to_json};
use smoothent_core::linalg::random_density;
use smoothent_core::metrics::{fidelity, generalized_fidelity, purified_distance, trace_distance};
use smoothent_core::sdp::hmin_conditional;
use smoothent_core::smoothing::{
    brute_force_smooth, smooth_entropy_iid, smooth_h0, smooth_hmin_conditional_bounds, smooth_hmin_unconditional,
    SmoothMeasure, Spectrum,
};
use smoothent_core::{Error, MultipartiteState};

use split::{parse_dims, parse_split};

#[derive(Parser)]
#[command(
    name = "smoothent",
    version,
    about = "Entropies, smooth min-entropy and entropy-inequality checks (all logs base 2)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum MeasureArg {
    Vn,
    Renyi,
    H0,
    Hmin,
}

#[derive(Clone, Copy, ValueEnum)]
enum DistanceArg {
    Fidelity,
    GeneralizedFidelity,
    Purified,
    Trace,
}

#[derive(Clone, Copy, ValueEnum)]
enum SmoothArg {
    Hmin,
    H0,
}

#[derive(Subcommand)]
enum Command {
    /// Entropy of a state, optionally conditional on part of it.
    Compute {
        #[arg(long)]
        state: PathBuf,
        #[arg(long, value_enum)]
        measure: MeasureArg,
        /// Order of the Rényi entropy.
        #[arg(long)]
        alpha: Option<f64>,
        /// Subsystem groups such as A:B or A:BC; the last group is conditioned on.
        #[arg(long)]
        split: Option<String>,
        #[arg(long, requires = "split")]
        conditional: bool,
        /// Reinterpret the subsystem dimensions, e.g. 2x2x2.
        #[arg(long)]
        dims: Option<String>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Distance or fidelity between two states.
    Distance {
        #[arg(long)]
        rho: PathBuf,
        #[arg(long)]
        sigma: PathBuf,
        #[arg(long, value_enum, default_value = "purified")]
        kind: DistanceArg,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Conditional min-entropy via semidefinite programming.
    Hmin {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        split: String,
        #[arg(long)]
        dims: Option<String>,
        /// Write σ_B, the dual certificate and solver diagnostics here.
        #[arg(long)]
        witness: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Smooth min-entropy or smoothed rank of a state or spectrum.
    Smooth {
        #[arg(long, conflicts_with = "spectrum", required_unless_present = "spectrum")]
        state: Option<PathBuf>,
        /// Comma-separated eigenvalues.
        #[arg(long, value_delimiter = ',')]
        spectrum: Option<Vec<f64>>,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, value_enum, default_value = "hmin")]
        measure: SmoothArg,
        /// Also run the exhaustive search with this many grid points per coordinate.
        #[arg(long)]
        brute_force: Option<usize>,
        /// Report conditional bounds for this split (state input only).
        #[arg(long, requires = "state")]
        split: Option<String>,
        #[arg(long)]
        dims: Option<String>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Per-copy smooth entropy rates of i.i.d. copies, as CSV.
    Qaep {
        #[arg(long, value_delimiter = ',', required = true)]
        spectrum: Vec<f64>,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        n_max: usize,
        #[arg(long, default_value_t = 50)]
        step: usize,
        /// First copy count; defaults to the step.
        #[arg(long)]
        n_min: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the property checks and write report.csv and summary.json.
    Verify {
        /// JSON config {check_id: {trials, dims, epsilons, alphas, seed, tolerance}}.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Run only these checks with default settings.
        #[arg(long = "check")]
        checks: Vec<String>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        tolerance: Option<f64>,
        /// Debug: swap both sides of every inequality.
        #[arg(long)]
        negate: bool,
        #[arg(long, default_value = "verify-out")]
        out: PathBuf,
        /// Print the registered checks and exit.
        #[arg(long)]
        list: bool,
    },
    /// Random density matrix from the Ginibre ensemble.
    Random {
        #[arg(long)]
        dims: String,
        #[arg(long)]
        rank: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Twelve significant digits, trailing zeros dropped.
fn fmt12(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    if rounded != 0.0 && !(1e-5..1e15).contains(&rounded.abs()) {
        format!("{rounded:e}")
    } else {
        format!("{rounded}")
    }
}

fn emit(format: Format, fields: &[(&str, f64)]) -> String {
    match format {
        Format::Text => fields.iter().map(|(_, v)| fmt12(*v)).collect::<Vec<_>>().join("\n") + "\n",
        Format::Csv => {
            let head: Vec<&str> = fields.iter().map(|f| f.0).collect();
            let vals: Vec<String> = fields.iter().map(|f| fmt12(f.1)).collect();
            format!("{}\n{}\n", head.join(","), vals.join(","))
        }
        Format::Json => {
            let mut m = serde_json::Map::new();
            for (k, v) in fields {
                m.insert(k.to_string(), number(*v));
            }
            format!("{}\n", Value::Object(m))
        }
    }
}

fn number(x: f64) -> Value {
    let r: f64 = fmt12(x).parse().unwrap_or(x);
    serde_json::Number::from_f64(r)
        .map(Value::Number)
        .unwrap_or_else(|| Value::String(x.to_string()))
}

fn load(path: &Path, dims: Option<&str>) -> Result<MultipartiteState> {
    let s = read_state(path).with_context(|| format!("reading state {}", path.display()))?;
    match dims {
        Some(d) => Ok(s.regroup(parse_dims(d)?)?),
        None => Ok(s),
    }
}

/// Reorders to `A ⊗ B` for a split whose first group is A and last is B; middle
/// groups are traced out. Returns the state and the indices of B.
fn arrange(state: &MultipartiteState, split: &str) -> Result<(MultipartiteState, Vec<usize>)> {
    let groups = parse_split(split, state.num_subsystems())?;
    let a = &groups[0];
    let b = &groups[groups.len() - 1];
    let middle: Vec<usize> = groups[1..groups.len() - 1].iter().flatten().copied().collect();
    let order: Vec<usize> = a.iter().chain(&middle).chain(b).copied().collect();
    let permuted = state.permute(&order)?;
    let keep: Vec<usize> = (0..a.len()).chain(a.len() + middle.len()..order.len()).collect();
    let reduced = if middle.is_empty() {
        permuted
    } else {
        permuted.partial_trace(&keep)?
    };
    let cond: Vec<usize> = (a.len()..a.len() + b.len()).collect();
    Ok((reduced, cond))
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Compute {
            state,
            measure,
            alpha,
            split,
            conditional,
            dims,
            format,
        } => {
            let s = load(&state, dims.as_deref())?;
            let value = if conditional {
                let (ab, cond) = arrange(&s, split.as_deref().unwrap())?;
                match measure {
                    MeasureArg::Vn => conditional_vn(&ab, &cond)?.value,
                    MeasureArg::Hmin => hmin_conditional(&ab, &cond)?.0,
                    _ => bail!("--conditional supports the vn and hmin measures"),
                }
            } else {
                let rho = s.state();
                match measure {
                    MeasureArg::Vn => von_neumann(rho).value,
                    MeasureArg::Renyi => {
                        let a = alpha.context("--measure renyi needs --alpha")?;
                        renyi_alpha(rho, a)?.value
                    }
                    MeasureArg::H0 => h0(rho)?.value,
                    MeasureArg::Hmin => hmin(rho)?.value,
                }
            };
            print!("{}", emit(format, &[("value", value)]));
        }
        Command::Distance {
            rho,
            sigma,
            kind,
            format,
        } => {
            let (r, s) = (load(&rho, None)?, load(&sigma, None)?);
            let (r, s) = (r.state(), s.state());
            let v = match kind {
                DistanceArg::Fidelity => fidelity(r, s)?,
                DistanceArg::GeneralizedFidelity => generalized_fidelity(r, s)?,
                DistanceArg::Purified => purified_distance(r, s)?,
                DistanceArg::Trace => trace_distance(r, s)?,
            };
            print!("{}", emit(format, &[("value", v.value)]));
        }
        Command::Hmin {
            state,
            split,
            dims,
            witness,
            format,
        } => {
            let s = load(&state, dims.as_deref())?;
            let (ab, cond) = arrange(&s, &split)?;
            let (value, sol) = hmin_conditional(&ab, &cond)?;
            if let Some(path) = witness {
                let d_b: usize = cond.iter().map(|&k| ab.dims()[k]).product();
                let d_a = ab.dim() / d_b;
                let parse = |t: String| serde_json::from_str::<Value>(&t);
                let w = json!({
                    "value": value,
                    "status": sol.status,
                    "iterations": sol.iterations,
                    "optimal_value": sol.optimal_value,
                    "dual_value": sol.dual_value,
                    "gap": sol.gap,
                    "residual": sol.residual,
                    "sigma_b": parse(matrix_to_json(&[d_b], &sol.sigma_b))?,
                    "dual_certificate": parse(matrix_to_json(&[d_a, d_b], &sol.dual_certificate))?,
                });
                std::fs::write(&path, serde_json::to_string_pretty(&w)?)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            print!("{}", emit(format, &[("value", value)]));
        }
        Command::Smooth {
            state,
            spectrum,
            epsilon,
            measure,
            brute_force,
            split,
            dims,
            format,
        } => {
            if let Some(split) = split {
                let s = load(state.as_deref().unwrap(), dims.as_deref())?;
                let (ab, cond) = arrange(&s, &split)?;
                let b = smooth_hmin_conditional_bounds(&ab, &cond, epsilon)?;
                print!(
                    "{}",
                    emit(
                        format,
                        &[
                            ("lower_3eps", b.lower),
                            ("upper", b.upper),
                            ("exact_hmin", b.exact_hmin)
                        ]
                    )
                );
                return Ok(ExitCode::SUCCESS);
            }
            let spec = match (state, spectrum) {
                (Some(p), _) => Spectrum::from_density(load(&p, dims.as_deref())?.state())?,
                (None, Some(v)) => Spectrum::new(&v)?,
                (None, None) => unreachable!("clap requires one input"),
            };
            let (m, value) = match measure {
                SmoothArg::Hmin => (SmoothMeasure::Hmin, smooth_hmin_unconditional(&spec, epsilon)?),
                SmoothArg::H0 => (SmoothMeasure::H0, smooth_h0(&spec, epsilon)?),
            };
            let mut fields = vec![("value", value)];
            if let Some(grid) = brute_force {
                fields.push(("brute_force", brute_force_smooth(&spec, epsilon, m, grid)?));
            }
            print!("{}", emit(format, &fields));
        }
        Command::Qaep {
            spectrum,
            epsilon,
            n_max,
            step,
            n_min,
            out,
        } => {
            if step == 0 {
                bail!("--step must be positive");
            }
            let base = Spectrum::new(&spectrum)?;
            let target = shannon(&base.values());
            let mut csv = String::from("n,epsilon,hmin_rate,h0_rate,vn_target,gap\n");
            let start = n_min.unwrap_or(step).max(1);
            for n in (start..=n_max).step_by(step) {
                let lo = smooth_entropy_iid(&base, n, epsilon, SmoothMeasure::Hmin)? / n as f64;
                let hi = smooth_entropy_iid(&base, n, epsilon, SmoothMeasure::H0)? / n as f64;
                writeln!(
                    csv,
                    "{n},{},{},{},{},{}",
                    fmt12(epsilon),
                    fmt12(lo),
                    fmt12(hi),
                    fmt12(target),
                    fmt12(hi - lo)
                )
                .unwrap();
            }
            write_or_print(out.as_deref(), &csv)?;
        }
        Command::Verify {
            config,
            checks,
            trials,
            seed,
            tolerance,
            negate,
            out,
            list,
        } => {
            if list {
                print!("{}", traceability_table());
                return Ok(ExitCode::SUCCESS);
            }
            let mut specs = match config {
                Some(p) => {
                    let text =
                        std::fs::read_to_string(&p).with_context(|| format!("reading config {}", p.display()))?;
                    parse_suite_config(&text)?
                }
                None if checks.is_empty() => default_suite(),
                None => checks
                    .iter()
                    .map(|c| CheckSpec::default_for(c))
                    .collect::<Result<_, _>>()?,
            };
            for s in &mut specs {
                s.trials = trials.unwrap_or(s.trials);
                s.seed = seed.unwrap_or(s.seed);
                s.tolerance = tolerance.unwrap_or(s.tolerance);
                s.negate |= negate;
            }
            let outcome = run_suite(&specs)?;
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            for r in &outcome.reports {
                let a = &r.aggregate;
                println!(
                    "{:<26} {:>6} records {:>6} failures  min slack {}",
                    r.check_id,
                    a.records,
                    a.failures,
                    fmt12(a.min_slack)
                );
            }
            write_outputs(&outcome, &out)?;
            return Ok(ExitCode::from(outcome.exit_code as u8));
        }
        Command::Random { dims, rank, seed, out } => {
            let dims = parse_dims(&dims)?;
            let d: usize = dims.iter().product();
            let s = random_density(&dims, rank.unwrap_or(d), seed)?;
            write_or_print(out.as_deref(), &state_to_json(&s))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Input problems exit with 2, numerical failures with 1.
fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Solver(_)) | Some(Error::ZeroOperator) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
