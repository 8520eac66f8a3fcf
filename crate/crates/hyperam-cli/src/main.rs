//! Command-line front end: classify curves, synthesize admissible ones,
//! compute periods, evaluate am functions, reconstruct shapes, measure
//! winding numbers and check the MKdV residuals.
//!
//! Exit codes: 0 success, 1 numeric/internal failure, 2 reality-condition
//! rejection (the report is still written), 64 usage error.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use hyperam::amfun::{am_genus1_oracle_series, AmTable};
use hyperam::contour::AdmissibleChart;
use hyperam::curve::{Curve, PhiChart};
use hyperam::error::Error as HyperamError;
use hyperam::flow::{trajectory, DivisorState, FlowSpec, FlowTarget};
use hyperam::reality::{check_reality, predicted_winding, synthesize_curve, PairSign};
use hyperam::soliton::{mkdv_residual_auto, shape, smkdv_residual, winding_number};

#[derive(Parser)]
#[command(
    name = "hyperam",
    about = "Hyperelliptic am functions and loop-soliton reconstruction",
    version
)]
struct Cli {
    /// Read the whole job from a JSON config file instead of flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Clone)]
enum Command {
    /// Check the reality condition and classify the admissible case.
    Classify(CurveArgs),
    /// Synthesize a curve satisfying the reality condition.
    Synth(SynthArgs),
    /// Genus-1 period lattice (omega, omega', tau).
    Periods(CurveArgs),
    /// Evaluate the am function phi(u) on a grid (genus 1).
    Am(AmArgs),
    /// Reconstruct the planar shape Z(t1).
    Shape(ShapeArgs),
    /// Measured winding number of the tangent map.
    Winding(CurveArgs),
    /// MKdV residuals: stationary (genus 1) or evolution (genus 2).
    Residual(ResidualArgs),
}

#[derive(Args, Clone)]
struct CurveArgs {
    /// Branch points as comma-separated reals, e.g. "0,1,4".
    #[arg(long, allow_hyphen_values = true)]
    curve: Option<String>,
    /// Curve file (JSON) as written by `synth`.
    #[arg(long)]
    curve_file: Option<PathBuf>,
    /// Distinguished branch point, 1-based index.
    #[arg(long, default_value_t = 1)]
    a: usize,
    /// Pairing order sigma as 1-based indices, e.g. "2,3".
    #[arg(long)]
    sigma: Option<String>,
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct SynthArgs {
    /// Genus of the synthesized curve.
    #[arg(long)]
    g: usize,
    /// Distinguished point e_a (negative real).
    #[arg(long, allow_hyphen_values = true)]
    ea: f64,
    /// Pair ratios r_j > 0, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    ratios: String,
    /// Per-pair offset signs, e.g. "+,-" (default all +).
    #[arg(long)]
    signs: Option<String>,
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct AmArgs {
    #[command(flatten)]
    curve: CurveArgs,
    /// u range "from:to".
    #[arg(long, default_value = "0:10", allow_hyphen_values = true)]
    u_span: String,
    #[arg(long, default_value_t = 500)]
    samples: usize,
    /// Also tabulate the independent pendulum oracle column.
    #[arg(long, default_value_t = false)]
    oracle: bool,
}

#[derive(Args, Clone)]
struct ShapeArgs {
    #[command(flatten)]
    curve: CurveArgs,
    /// t1 range "from:to" (from must be 0).
    #[arg(long, default_value = "0:20", allow_hyphen_values = true)]
    t1_span: String,
    #[arg(long, default_value_t = 2000)]
    samples: usize,
    /// Initial divisor angles, comma separated (defaults chosen per case).
    #[arg(long, allow_hyphen_values = true)]
    phis: Option<String>,
    /// Evolution time shift applied to the initial divisor before the run.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    t2: f64,
}

#[derive(Args, Clone)]
struct ResidualArgs {
    #[command(flatten)]
    curve: CurveArgs,
    /// "smkdv" (genus 1, stationary) or "mkdv" (genus 2, evolution).
    #[arg(long, default_value = "smkdv")]
    kind: String,
    /// t1 grid points.
    #[arg(long, default_value_t = 2000)]
    samples: usize,
    /// t1 span for the grid (mkdv: per trial window).
    #[arg(long, default_value_t = 0.0)]
    t1_span: f64,
    /// Evolution levels (mkdv).
    #[arg(long, default_value_t = 20)]
    t2_samples: usize,
    /// Evolution step (mkdv).
    #[arg(long, default_value_t = 0.0015)]
    t2_step: f64,
}

/// Job description accepted via `--config`.
#[derive(Deserialize)]
struct JobConfig {
    command: String,
    #[serde(default)]
    curve: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    curve_list: Option<String>,
    #[serde(default)]
    curve_file: Option<String>,
    #[serde(default)]
    a: Option<usize>,
    #[serde(default)]
    sigma: Option<Vec<usize>>,
    #[serde(default)]
    g: Option<usize>,
    #[serde(default)]
    ea: Option<f64>,
    #[serde(default)]
    ratios: Option<Vec<f64>>,
    #[serde(default)]
    signs: Option<Vec<String>>,
    #[serde(default)]
    u_span: Option<String>,
    #[serde(default)]
    t1_span: Option<String>,
    #[serde(default)]
    samples: Option<usize>,
    #[serde(default)]
    kind: Option<String>,
    #[serde(default)]
    out: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct CurveFile {
    /// Complex branch points as [re, im] pairs.
    branch_points: Vec<[f64; 2]>,
    /// 1-based distinguished index.
    #[serde(default)]
    a: Option<usize>,
    /// 1-based pairing order.
    #[serde(default)]
    sigma: Option<Vec<usize>>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(64);
        }
    };
    let command = if let Some(path) = &cli.config {
        match read_config(path) {
            Ok(c) => c,
            Err(msg) => {
                eprintln!("ERROR cli.config: {msg}");
                return ExitCode::from(64);
            }
        }
    } else {
        match cli.command {
            Some(c) => c,
            None => {
                eprintln!("ERROR cli.run: no command; see --help");
                return ExitCode::from(64);
            }
        }
    };
    match run(command) {
        Ok(code) => code,
        Err(e) => {
            let (module, code) = match &e {
                HyperamError::NonRealBranchPoint { .. } => ("reality.check_reality", 2),
                HyperamError::EmptyAdmissibleRange(_) | HyperamError::UnclassifiableSigns(..) => {
                    ("reality.classify_case", 2)
                }
                HyperamError::InvalidArgument(_) => ("cli.parse", 64),
                _ => ("hyperam", 1),
            };
            eprintln!("ERROR {module}: {e}");
            ExitCode::from(code)
        }
    }
}

fn read_config(path: &PathBuf) -> Result<Command, String> {
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    let job: JobConfig = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let curve_args = CurveArgs {
        curve: job.curve_list.clone().or_else(|| {
            job.curve.as_ref().map(|pts| {
                pts.iter()
                    .map(|p| format!("{}", p[0]))
                    .collect::<Vec<_>>()
                    .join(",")
            })
        }),
        curve_file: job.curve_file.clone().map(PathBuf::from),
        a: job.a.unwrap_or(1),
        sigma: job.sigma.clone().map(|s| {
            s.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        }),
        out: job.out.clone().map(PathBuf::from),
    };
    match job.command.as_str() {
        "classify" => Ok(Command::Classify(curve_args)),
        "periods" => Ok(Command::Periods(curve_args)),
        "winding" => Ok(Command::Winding(curve_args)),
        "am" => Ok(Command::Am(AmArgs {
            curve: curve_args,
            u_span: job.u_span.unwrap_or_else(|| "0:10".into()),
            samples: job.samples.unwrap_or(500),
            oracle: false,
        })),
        "shape" => Ok(Command::Shape(ShapeArgs {
            curve: curve_args,
            t1_span: job.t1_span.unwrap_or_else(|| "0:20".into()),
            samples: job.samples.unwrap_or(2000),
            phis: None,
            t2: 0.0,
        })),
        "residual" => Ok(Command::Residual(ResidualArgs {
            curve: curve_args,
            kind: job.kind.unwrap_or_else(|| "smkdv".into()),
            samples: job.samples.unwrap_or(2000),
            t1_span: 0.0,
            t2_samples: 20,
            t2_step: 0.0015,
        })),
        "synth" => Ok(Command::Synth(SynthArgs {
            g: job.g.ok_or("synth needs g")?,
            ea: job.ea.ok_or("synth needs ea")?,
            ratios: job
                .ratios
                .ok_or("synth needs ratios")?
                .iter()
                .map(|r| r.to_string())
                .collect::<Vec<_>>()
                .join(","),
            signs: job.signs.map(|s| s.join(",")),
            out: job.out.map(PathBuf::from),
        })),
        other => Err(format!("unknown command {other:?}")),
    }
}

fn threads_from_env() -> usize {
    std::env::var("HYPERAM_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get().min(8))
                .unwrap_or(1)
        })
}

fn parse_reals(text: &str) -> Result<Vec<f64>, HyperamError> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| HyperamError::InvalidArgument(format!("bad number {t:?}: {e}")))
        })
        .collect()
}

fn parse_span(text: &str) -> Result<(f64, f64), HyperamError> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 2 {
        return Err(HyperamError::InvalidArgument(format!(
            "span must be \"from:to\", got {text:?}"
        )));
    }
    let from = parts[0]
        .trim()
        .parse::<f64>()
        .map_err(|e| HyperamError::InvalidArgument(e.to_string()))?;
    let to = parts[1]
        .trim()
        .parse::<f64>()
        .map_err(|e| HyperamError::InvalidArgument(e.to_string()))?;
    Ok((from, to))
}

/// Loads the curve plus distinguished index and pairing from the CLI args.
fn load_curve(args: &CurveArgs) -> Result<(Curve, usize, Option<Vec<usize>>), HyperamError> {
    if let Some(path) = &args.curve_file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HyperamError::InvalidArgument(format!("{}: {e}", path.display())))?;
        let file: CurveFile = serde_json::from_str(&text)
            .map_err(|e| HyperamError::InvalidArgument(format!("bad curve file: {e}")))?;
        let pts: Vec<Complex64> = file
            .branch_points
            .iter()
            .map(|p| Complex64::new(p[0], p[1]))
            .collect();
        let curve = Curve::new(&pts)?;
        let a = file.a.unwrap_or(args.a);
        let sigma = file
            .sigma
            .map(|s| s.iter().map(|&i| i - 1).collect::<Vec<usize>>());
        Ok((curve, a - 1, sigma))
    } else if let Some(list) = &args.curve {
        let reals = parse_reals(list)?;
        let curve = Curve::from_reals(&reals)?;
        let sigma = match &args.sigma {
            Some(text) => Some(
                parse_reals(text)?
                    .iter()
                    .map(|&x| x as usize - 1)
                    .collect::<Vec<usize>>(),
            ),
            None => None,
        };
        Ok((curve, args.a - 1, sigma))
    } else {
        Err(HyperamError::InvalidArgument(
            "need --curve or --curve-file".into(),
        ))
    }
}

/// Builds the admissible chart, using the checker's pairing when no sigma
/// is given.  A failing reality check prints the report and exits with 2.
fn admissible(args: &CurveArgs) -> Result<(AdmissibleChart, i32), HyperamError> {
    let (curve, a, sigma) = load_curve(args)?;
    let report = check_reality(&curve, a)?;
    if !report.passed {
        let doc = serde_json::json!({
            "passed": false,
            "e_a": report.e_a,
            "violations": report.violations,
        });
        write_output(args.out.as_ref(), &format!("{doc}\n"))?;
        return Err(HyperamError::EmptyAdmissibleRange(
            report.violations.join("; "),
        ));
    }
    let sigma = sigma.unwrap_or_else(|| report.sigma());
    let chart = PhiChart::new(&curve, a, &sigma)?;
    Ok((AdmissibleChart::new(chart)?, 0))
}

fn write_output(out: Option<&PathBuf>, text: &str) -> Result<(), HyperamError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| HyperamError::InvalidArgument(format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| HyperamError::InvalidArgument(e.to_string())),
    }
}

fn run(command: Command) -> Result<ExitCode, HyperamError> {
    match command {
        Command::Classify(args) => {
            let (chart, _) = admissible(&args)?;
            let case = chart.case();
            let k_sq = if chart.genus() == 1 {
                serde_json::json!(case.k_squares[0])
            } else {
                serde_json::json!(case.k_squares)
            };
            let doc = serde_json::json!({
                "case": case.label.to_string(),
                "k_sq": k_sq,
                "winding_pred": predicted_winding(case),
            });
            write_output(args.out.as_ref(), &format!("{doc}\n"))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Synth(args) => {
            let ratios = parse_reals(&args.ratios)?;
            let signs = match &args.signs {
                Some(text) => text
                    .split(',')
                    .map(|s| match s.trim() {
                        "+" | "pos" | "positive" => Ok(PairSign::Positive),
                        "-" | "neg" | "negative" => Ok(PairSign::Negative),
                        other => Err(HyperamError::InvalidArgument(format!("bad sign {other:?}"))),
                    })
                    .collect::<Result<Vec<_>, _>>()?,
                None => vec![PairSign::Positive; ratios.len()],
            };
            let (curve, chart) = synthesize_curve(args.g, args.ea, &ratios, &signs)?;
            let file = CurveFile {
                branch_points: curve.branch_points().iter().map(|e| [e.re, e.im]).collect(),
                a: Some(1),
                sigma: Some(chart.sigma().iter().map(|&i| i + 1).collect()),
            };
            let doc = serde_json::to_string(&file)
                .map_err(|e| HyperamError::InvalidArgument(e.to_string()))?;
            write_output(args.out.as_ref(), &format!("{doc}\n"))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Periods(args) => {
            let (chart, _) = admissible(&args)?;
            let lattice = chart.periods()?;
            let mut text = String::from("omega,re_omega_prime,im_omega_prime,re_tau,im_tau,case\n");
            text.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
                lattice.omega,
                lattice.omega_prime.re,
                lattice.omega_prime.im,
                lattice.tau.re,
                lattice.tau.im,
                lattice.label
            ));
            write_output(args.out.as_ref(), &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Am(args) => {
            let (chart, _) = admissible(&args.curve)?;
            if chart.genus() != 1 {
                return Err(HyperamError::WrongGenus {
                    expected: 1,
                    got: chart.genus(),
                });
            }
            let (from, to) = parse_span(&args.u_span)?;
            if args.samples < 2 || to <= from {
                return Err(HyperamError::InvalidArgument("bad u grid".into()));
            }
            let seed = chart.reference_phi(chart.case().phi_ranges()[0].0.max(0.0))?;
            let table = AmTable::new(&chart, seed)?;
            let us: Vec<f64> = (0..args.samples)
                .map(|i| from + (to - from) * i as f64 / (args.samples - 1) as f64)
                .collect();
            let mut text = String::from(if args.oracle {
                "u,phi,oracle_phi\n"
            } else {
                "u,phi\n"
            });
            let oracle = if args.oracle && from >= 0.0 {
                let h = chart.h_pairs()[0];
                let root_a = h.a.abs().sqrt();
                let scaled: Vec<f64> = us.iter().map(|u| u * root_a).collect();
                Some(am_genus1_oracle_series(h.k_squared(), &scaled))
            } else {
                None
            };
            for (i, &u) in us.iter().enumerate() {
                let phi = table.am(&chart, u)?;
                match &oracle {
                    Some(vals) => {
                        text.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", u, phi, vals[i]))
                    }
                    None => text.push_str(&format!("{:.16e},{:.16e}\n", u, phi)),
                }
            }
            write_output(args.curve.out.as_ref(), &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Shape(args) => {
            let (chart, _) = admissible(&args.curve)?;
            let (from, to) = parse_span(&args.t1_span)?;
            if from != 0.0 || to <= 0.0 || args.samples < 2 {
                return Err(HyperamError::InvalidArgument(
                    "shape needs --t1-span 0:<positive> and >= 2 samples".into(),
                ));
            }
            let init = initial_state(&chart, args.phis.as_deref())?;
            let init = if args.t2 != 0.0 {
                let evo = FlowSpec::new(
                    chart.clone(),
                    FlowTarget::Custom {
                        u_g_rate: 0.0,
                        im_u_rates: vec![1.0; chart.genus() - 1],
                    },
                );
                hyperam::flow::step(&evo, &init, args.t2)?
            } else {
                init
            };
            let spec = FlowSpec::new(
                chart.clone(),
                FlowTarget::Tangent {
                    rate: 1.0 / chart.r_const(),
                },
            );
            let traj = trajectory(&spec, &init, to, args.samples - 1)?;
            let samples = shape(&chart, &traj)?;
            let mut text = String::from("t1,phi,re_z,im_z,abs_tangent\n");
            for s in &samples {
                text.push_str(&format!(
                    "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                    s.t1,
                    s.phi_total,
                    s.z.re,
                    s.z.im,
                    s.tangent.norm()
                ));
            }
            write_output(args.curve.out.as_ref(), &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Winding(args) => {
            let (chart, _) = admissible(&args)?;
            let measured = winding_number(&chart)?;
            let doc = serde_json::json!({
                "winding": measured,
                "predicted": predicted_winding(chart.case()),
            });
            write_output(args.out.as_ref(), &format!("{doc}\n"))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Residual(args) => {
            let (chart, _) = admissible(&args.curve)?;
            match args.kind.as_str() {
                "smkdv" => {
                    if chart.genus() != 1 {
                        return Err(HyperamError::WrongGenus {
                            expected: 1,
                            got: chart.genus(),
                        });
                    }
                    let init = initial_state(&chart, None)?;
                    let c = chart.c();
                    let spec = FlowSpec::new(chart.clone(), FlowTarget::Tangent { rate: 1.0 / c });
                    let seed = init.phis[0];
                    let table = AmTable::new(&chart, seed)?;
                    let span = if args.t1_span > 0.0 {
                        args.t1_span
                    } else {
                        2.0 * c * table.cycle_arc()
                    };
                    let traj = trajectory(&spec, &init, span, args.samples - 1)?;
                    let samples = shape(&chart, &traj)?;
                    let fit = smkdv_residual(&samples)?;
                    let doc = serde_json::json!({
                        "kind": "smkdv",
                        "a_est": fit.a_est,
                        "residual": fit.residual,
                        "relative_residual": fit.relative_residual(),
                    });
                    write_output(args.curve.out.as_ref(), &format!("{doc}\n"))?;
                    Ok(ExitCode::SUCCESS)
                }
                "mkdv" => {
                    let span = if args.t1_span > 0.0 {
                        args.t1_span
                    } else {
                        1.6
                    };
                    let fit = mkdv_residual_auto(
                        &chart,
                        span,
                        args.samples.clamp(40, 400),
                        args.t2_samples,
                        args.t2_step,
                        threads_from_env(),
                    )?;
                    let doc = serde_json::json!({
                        "kind": "mkdv",
                        "alpha": fit.alpha,
                        "beta": fit.beta,
                        "c_a": fit.c_a,
                        "c_b": fit.c_b,
                        "relative_residual": fit.relative_residual(),
                    });
                    write_output(args.curve.out.as_ref(), &format!("{doc}\n"))?;
                    Ok(ExitCode::SUCCESS)
                }
                other => Err(HyperamError::InvalidArgument(format!(
                    "unknown residual kind {other:?}"
                ))),
            }
        }
    }
}

/// Default divisor placement: librating points at interior offsets of the
/// first admissible component, rotating points spread over the circle.
fn initial_state(
    chart: &AdmissibleChart,
    phis: Option<&str>,
) -> Result<DivisorState, HyperamError> {
    let g = chart.genus();
    let phis = match phis {
        Some(text) => parse_reals(text)?,
        None => {
            let ranges = chart.case().phi_ranges();
            let (lo, hi) = ranges[0];
            let width = hi - lo;
            (0..g)
                .map(|i| {
                    if chart.case().rotating {
                        lo + width * (0.55 + 0.22 * i as f64).fract()
                    } else {
                        lo + width * (0.25 + 0.41 * i as f64).fract()
                    }
                })
                .collect()
        }
    };
    DivisorState::new(chart, &phis, &vec![1i8; g])
}
