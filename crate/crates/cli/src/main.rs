//! `chm`: generate, verify and search complex Hadamard matrices.
//!
//! Exit codes are shared by every subcommand: 0 when the claim is verified or
//! the object is found, 1 when it is violated or not found, 2 on usage or
//! input errors.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chm::eigen::{self, CLUSTER_TOL};
use chm::families::{FamilySpec, OmegaBranch};
use chm::gadgets::{self, GadgetReport, Thm5Input};
use chm::hadamard::{self, VALIDATION_TOL};
use chm::matrix::cis;
use chm::parallel::Execution;
use chm::search::{self, SearchTask, Target};
use chm::spectral;
use chm::{io, mub, CMatrix, ChmError};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

const CONSTANT_PAIR_TOL: f64 = 1e-9;
const FIRST_COORD_TOL: f64 = 1e-8;

#[derive(Parser)]
#[command(name = "chm", version, about = "Complex Hadamard matrix toolkit")]
struct Cli {
    /// Validation tolerance for CHM and unitarity checks.
    #[arg(long, global = true, env = "CHM_TOL", default_value_t = VALIDATION_TOL)]
    tol: f64,

    /// Write output here instead of stdout.
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a member of a CHM family as matrix JSON.
    Gen(GenArgs),
    /// Check a matrix file against the CHM and eigenstructure invariants.
    Verify { input: PathBuf },
    /// Dump the spectrum of a matrix file.
    Eigen(EigenArgs),
    /// Multi-start search for a dephased CHM with a given spectrum or pattern.
    Search(SearchArgs),
    /// Run one of the proof constructions and report its certificate.
    #[command(subcommand)]
    Gadget(GadgetCommand),
    /// Unbiasedness of H/√n against the identity, or of a trio of CHMs.
    Mub { inputs: Vec<PathBuf> },
    /// Bring a matrix file into dephased form.
    Dephase {
        input: PathBuf,
        /// Also report the diagonal factors.
        #[arg(long)]
        factors: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Fourier,
    Tao,
    Haagerup,
    Hermitian,
}

#[derive(Clone, Copy, ValueEnum)]
enum Branch {
    First,
    Second,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    family: Family,
    /// Dimension of the Fourier matrix.
    #[arg(long, default_value_t = 6)]
    n: usize,
    /// Which primitive cube root of unity the Tao matrix uses.
    #[arg(long, value_enum, default_value_t = Branch::First)]
    omega: Branch,
    /// Argument of the unimodular Haagerup parameter q, in radians.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    q_arg: f64,
    /// Parameter of the Hermitian family, in radians.
    #[arg(long, default_value_t = std::f64::consts::PI, allow_hyphen_values = true)]
    theta: f64,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct EigenArgs {
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Include eigenvectors (JSON only).
    #[arg(long)]
    vectors: bool,
}

#[derive(Args)]
struct SearchArgs {
    /// Multiplicity pattern such as `4,1,1`, `3,1,1,1-non-hermitian` or `3,1-pinned`.
    #[arg(long, conflicts_with = "spectrum")]
    pattern: Option<String>,
    /// Target spectrum as a `re,im` CSV file.
    #[arg(long)]
    spectrum: Option<PathBuf>,
    #[arg(long, default_value_t = 6)]
    n: usize,
    #[arg(long, default_value_t = 50)]
    restarts: usize,
    #[arg(long, default_value_t = 5000)]
    max_iters: usize,
    /// PRNG seed; mandatory when the CI environment variable is set.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1e-8)]
    tol_success: f64,
    #[arg(long, default_value_t = 1.0)]
    w_chm: f64,
    #[arg(long, default_value_t = 1.0)]
    w_spec: f64,
    /// Stream per-iteration residuals as `restart,iter,residual` CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Run restarts on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Subcommand)]
enum GadgetCommand {
    /// The matrix built when n − 2 eigenvalues coincide.
    Lemma4iii {
        #[arg(long, default_value_t = 6)]
        n: usize,
        /// λ = √n·e^{i·arg}.
        #[arg(long, allow_hyphen_values = true)]
        lambda_arg: f64,
    },
    /// The f/h construction for three equal eigenvalues. Without explicit
    /// inputs the aligned fixture is used; `--seed` draws a random input.
    Thm5 {
        #[arg(long, allow_hyphen_values = true, requires_all = ["lambda6_arg", "a", "t"])]
        lambda_arg: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        lambda6_arg: Option<f64>,
        /// Five nonnegative moduli a0..a4.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        a: Option<Vec<f64>>,
        /// Four angles t1..t4.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        t: Option<Vec<f64>>,
        #[arg(long, conflicts_with = "lambda_arg")]
        seed: Option<u64>,
    },
    /// Rank of the equiangular Gram matrix.
    Gram,
    /// Constants forced when both non-trivial eigenvalues agree.
    Case2,
    /// Rank of the matrix D built from real eigenvector data.
    Case3 {
        /// Six values in (0, 1); defaults to the uniform fixture.
        #[arg(long, value_delimiter = ',', requires = "f")]
        d: Option<Vec<f64>>,
        /// Six nonzero values in (−1, 1).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        f: Option<Vec<f64>>,
        /// Eigenvalue angles `a,b`; reconstructs and scans the matrix.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        angles: Option<Vec<f64>>,
    },
}

/// A failure that maps to exit code 2.
struct UsageError(String);

impl From<ChmError> for UsageError {
    fn from(e: ChmError) -> Self {
        UsageError(e.to_string())
    }
}

impl From<std::io::Error> for UsageError {
    fn from(e: std::io::Error) -> Self {
        UsageError(e.to_string())
    }
}

type CliResult = std::result::Result<bool, UsageError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if !(cli.tol > 0.0 && cli.tol.is_finite()) {
        eprintln!("error: tolerance must be a positive number, got {}", cli.tol);
        return ExitCode::from(2);
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(UsageError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::Gen(args) => cmd_gen(cli, args),
        Command::Verify { input } => cmd_verify(cli, input),
        Command::Eigen(args) => cmd_eigen(cli, args),
        Command::Search(args) => cmd_search(cli, args),
        Command::Gadget(g) => cmd_gadget(cli, g),
        Command::Mub { inputs } => cmd_mub(cli, inputs),
        Command::Dephase { input, factors } => cmd_dephase(cli, input, *factors),
    }
}

fn emit(cli: &Cli, text: &str) -> std::result::Result<(), UsageError> {
    match &cli.out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

fn emit_json(cli: &Cli, value: &impl serde::Serialize) -> std::result::Result<(), UsageError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| UsageError(e.to_string()))?;
    emit(cli, &(text + "\n"))
}

fn read(path: &Path) -> std::result::Result<CMatrix, UsageError> {
    io::read_matrix(path).map_err(|e| UsageError(format!("{}: {e}", path.display())))
}

fn cmd_gen(cli: &Cli, args: &GenArgs) -> CliResult {
    let spec = match args.family {
        Family::Fourier => FamilySpec::Fourier { n: args.n },
        Family::Tao => FamilySpec::Tao {
            omega_branch: match args.omega {
                Branch::First => OmegaBranch::First,
                Branch::Second => OmegaBranch::Second,
            },
        },
        Family::Haagerup => FamilySpec::haagerup_arg(args.q_arg),
        Family::Hermitian => FamilySpec::Hermitian { theta: args.theta },
    };
    let h = spec.generate()?;
    emit(cli, &(io::matrix_to_json(&h)? + "\n"))?;
    Ok(true)
}

fn cmd_verify(cli: &Cli, input: &Path) -> CliResult {
    let h = read(input)?;
    let n = h.ensure_square()?;
    let chm = hadamard::chm_residuals(&h, cli.tol)?;
    let mut report = json!({ "n": n, "chm": chm });
    let mut ok = chm.is_chm;

    if chm.is_chm {
        let was_dephased = hadamard::is_dephased(&h, cli.tol);
        let dephased = if was_dephased { h.clone() } else { hadamard::dephase(&h)?.0 };
        report["input_dephased"] = json!(was_dephased);

        let constant = spectral::verify_constant_eigenpairs_with(&dephased, cli.tol)?;
        ok &= constant.residual_plus < CONSTANT_PAIR_TOL
            && constant.residual_minus < CONSTANT_PAIR_TOL
            && constant.max_first_coord < FIRST_COORD_TOL;
        report["constant_eigenpairs"] = json!(constant);

        let spectrum = eigen::eigenvalues(&dephased)?;
        report["profile"] = json!(spectral::multiplicity_profile(&spectrum, CLUSTER_TOL));
        report["spectrum"] = json!(spectrum);
        if n == 6 {
            let bounds = spectral::profile_respects_multiplicity_bounds(&spectrum, CLUSTER_TOL);
            let thm5 = spectral::verify_thm5_i(&dephased)?;
            ok &= bounds && thm5.equivalence_holds;
            report["multiplicity_bounds_hold"] = json!(bounds);
            report["hermitian_equivalence"] = json!(thm5);
        }
    }
    report["verified"] = json!(ok);
    emit_json(cli, &report)?;
    Ok(ok)
}

fn cmd_eigen(cli: &Cli, args: &EigenArgs) -> CliResult {
    let h = read(&args.input)?;
    h.ensure_square()?;
    let spectrum = match eigen::eigenvalues(&h) {
        Ok(s) => s,
        Err(e @ ChmError::Convergence { .. }) => {
            eprintln!("error: {e}");
            return Ok(false);
        }
        Err(e) => return Err(e.into()),
    };
    if args.format == Format::Csv {
        emit(cli, &io::spectrum_to_csv(&spectrum))?;
        return Ok(true);
    }
    let mut report = json!({ "values": spectrum.values() });
    let mut ok = true;
    if args.vectors {
        let pairs: Vec<Value> = eigen::eigenpairs_detailed(&h)?
            .into_iter()
            .map(|p| match p {
                Ok(pair) => json!({ "value": pair.value, "vector": pair.vector, "residual": pair.residual(&h) }),
                Err(e) => {
                    ok = false;
                    json!({ "error": e.to_string() })
                }
            })
            .collect();
        report["pairs"] = json!(pairs);
    }
    emit_json(cli, &report)?;
    Ok(ok)
}

fn cmd_search(cli: &Cli, args: &SearchArgs) -> CliResult {
    let seed = match args.seed {
        Some(s) => s,
        None if std::env::var_os("CI").is_some() => {
            return Err(UsageError("--seed is required when CI is set".into()));
        }
        None => 0,
    };
    let mut task = match (&args.pattern, &args.spectrum) {
        (Some(p), None) => SearchTask::for_pattern(p, args.restarts, args.max_iters, seed)?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)?;
            SearchTask::new(Target::Spectrum(io::spectrum_from_csv(&text)?), args.restarts, args.max_iters, seed)
        }
        _ => return Err(UsageError("exactly one of --pattern or --spectrum is required".into())),
    };
    task.n = args.n;
    task.tol_success = args.tol_success;
    task.weights.w_chm = args.w_chm;
    task.weights.w_spec = args.w_spec;
    task.record_history = args.trace.is_some();
    task.validate()?;

    let exec = if args.sequential { Execution::Sequential } else { Execution::default() };
    let report = search::minimize_with(&task, exec)?;
    if let Some(path) = &args.trace {
        let file = std::fs::File::create(path)?;
        report.write_trace_csv(std::io::BufWriter::new(file))?;
    }
    emit_json(cli, &json!({ "task": task, "report": report }))?;
    Ok(report.found())
}

fn six(name: &str, values: &[f64]) -> std::result::Result<[f64; 6], UsageError> {
    values.try_into().map_err(|_| UsageError(format!("--{name} needs exactly 6 values, got {}", values.len())))
}

fn cmd_gadget(cli: &Cli, g: &GadgetCommand) -> CliResult {
    let report: GadgetReport = match g {
        GadgetCommand::Lemma4iii { n, lambda_arg } => {
            gadgets::gadget_lemma4_iii(*n, cis(*lambda_arg) * (*n as f64).sqrt())?
        }
        GadgetCommand::Thm5 { lambda_arg, lambda6_arg, a, t, seed } => {
            let input = match (lambda_arg, seed) {
                (Some(l), _) => {
                    let s6 = 6f64.sqrt();
                    let a = a.as_deref().unwrap_or_default();
                    let t = t.as_deref().unwrap_or_default();
                    Thm5Input {
                        lambda: cis(*l) * s6,
                        lambda6: cis(lambda6_arg.unwrap_or_default()) * s6,
                        a: a.try_into().map_err(|_| UsageError(format!("--a needs 5 values, got {}", a.len())))?,
                        t: t.try_into().map_err(|_| UsageError(format!("--t needs 4 values, got {}", t.len())))?,
                    }
                }
                (None, Some(s)) => Thm5Input::seeded(*s),
                (None, None) => Thm5Input::aligned_fixture(),
            };
            gadgets::gadget_thm5_construction(&input)?.1
        }
        GadgetCommand::Gram => gadgets::gadget_gram_rank()?,
        GadgetCommand::Case2 => gadgets::gadget_case2_constants()?,
        GadgetCommand::Case3 { d, f, angles } => {
            let (d, f) = match (d, f) {
                (Some(d), Some(f)) => (six("d", d)?, six("f", f)?),
                (None, None) => gadgets::case3_uniform_fixture(),
                _ => return Err(UsageError("--d and --f must be given together".into())),
            };
            let angles = match angles.as_deref() {
                None => None,
                Some([a, b]) => Some((*a, *b)),
                Some(other) => return Err(UsageError(format!("--angles needs 2 values, got {}", other.len()))),
            };
            gadgets::gadget_case3_rank(&d, &f, angles)?
        }
    };
    emit_json(cli, &report)?;
    Ok(report.passed())
}

fn cmd_mub(cli: &Cli, inputs: &[PathBuf]) -> CliResult {
    let mats = inputs.iter().map(|p| read(p)).collect::<std::result::Result<Vec<_>, _>>()?;
    match mats.as_slice() {
        [h] => {
            let n = h.ensure_square()?;
            let u = h.scale(chm::C64::new(1.0 / (n as f64).sqrt(), 0.0));
            let residual = mub::unbiasedness_residual(&CMatrix::identity(n), &u)?;
            let ok = residual <= cli.tol;
            emit_json(cli, &json!({ "pair": ["I", "H/sqrt(n)"], "residual": residual, "unbiased": ok }))?;
            Ok(ok)
        }
        [h1, h2, h3] => {
            let report = mub::trio_check(h1, h2, h3)?;
            let ok = report.max_residual <= cli.tol;
            emit_json(cli, &json!({ "trio": report, "is_mub_trio": ok }))?;
            Ok(ok)
        }
        _ => Err(UsageError(format!("mub takes 1 or 3 matrix files, got {}", inputs.len()))),
    }
}

fn cmd_dephase(cli: &Cli, input: &Path, factors: bool) -> CliResult {
    let h = read(input)?;
    h.ensure_square()?;
    let (dephased, d1, d2) = match hadamard::dephase(&h) {
        Ok(r) => r,
        Err(e @ ChmError::Degenerate(_)) => {
            eprintln!("error: {e}");
            return Ok(false);
        }
        Err(e) => return Err(e.into()),
    };
    if factors {
        let matrix: Value =
            serde_json::from_str(&io::matrix_to_json(&dephased)?).map_err(|e| UsageError(e.to_string()))?;
        emit_json(cli, &json!({ "matrix": matrix, "left": d1.phases(), "right": d2.phases() }))?;
    } else {
        emit(cli, &(io::matrix_to_json(&dephased)? + "\n"))?;
    }
    Ok(true)
}
