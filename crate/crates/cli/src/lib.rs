//! `ncl` command surface. [`run_command`] parses an argv, runs one command and
//! returns its exit code with the text destined for stdout and stderr.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use ncl_core::bounds::{
    bound_choi_general, bound_general, bound_multiphase_exact, bound_spin, choi_1to2_exact,
    constructed_spin_design_size, BoundReport,
};
use ncl_core::cloners::{
    depolarizing_cloner, fidelity_estimate, identity_cloner, measure_prepare_spin_cloner,
    nonlinear_bestguess_cloner, werner_projection_cloner, CloningMap, FidelityOptions, StateFamily,
};
use ncl_core::ensembles::{
    computational_design, design_residual, gauss_chebyshev_rule, general_design, mub_design_dim, multiphase_design,
    pauli_choi_design, perturbed_design, spin_coherent_design, weyl_choi_design, Family, Spin, WeightedEnsemble,
};
use ncl_core::numerics::{
    haar_state, pinching_check, random_density, rank_inequality_check, rng_for, Operator, PureState,
};
use ncl_core::protocol::{
    build_protocol, build_protocol_with_reference, family_sampler, no_signalling_check,
    no_signalling_check_approximate, run_approximate, run_exact, v_independence, ProtocolRunReport,
};
use ncl_core::schurweyl::{
    choi_rho0, choi_state, hook_dims, mc_twirl, partitions, syt_count_bruteforce, ChoiOutSampler, HaarSampler,
    MAX_SYT_SIZE,
};
use ncl_core::NclError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_GUARD: i32 = 3;

/// Outcome of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommandResult {
    pub exit_code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Parser, Debug)]
#[command(name = "ncl", version, about = "No-cloning bounds, designs and protocol checks")]
struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Tolerance for PASS/FAIL checks; each command has its own default.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// JSON output for commands whose default format is not JSON (sweep).
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-form fidelity bounds.
    Bound {
        #[command(subcommand)]
        which: BoundCmd,
    },
    /// Build or verify an exact design.
    Design {
        #[command(subcommand)]
        which: DesignCmd,
    },
    /// Remote identical state preparation.
    Protocol {
        #[command(subcommand)]
        which: ProtocolCmd,
    },
    /// No-signalling check of a cloning map.
    Nosig {
        #[command(subcommand)]
        which: NosigCmd,
    },
    /// Numerical oracles for the supporting inequalities.
    Oracle {
        #[command(subcommand)]
        which: OracleCmd,
    },
    /// Bound table over a range of one parameter, CSV by default.
    Sweep(SweepArgs),
    /// Cloning fidelity estimates.
    Cloner {
        #[command(subcommand)]
        which: ClonerCmd,
    },
}

#[derive(Args, Debug, Clone)]
struct CopyArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
}

#[derive(Subcommand, Debug)]
enum BoundCmd {
    General {
        #[arg(long)]
        d: usize,
        #[command(flatten)]
        copies: CopyArgs,
        /// Design size |W|; defaults to the built-in design for `n`.
        #[arg(long)]
        size: Option<usize>,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
    },
    Multiphase {
        #[arg(long)]
        d: usize,
        #[command(flatten)]
        copies: CopyArgs,
    },
    Choi {
        #[arg(long)]
        d: usize,
        #[command(flatten)]
        copies: CopyArgs,
        /// Defaults to `d²` (Pauli or Weyl design).
        #[arg(long)]
        size: Option<usize>,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
    },
    Choi12 {
        #[arg(long)]
        r: usize,
    },
    Spin {
        #[arg(long)]
        s: f64,
        #[command(flatten)]
        copies: CopyArgs,
        /// Defaults to the size of the built-in spin design of order `n`.
        #[arg(long)]
        size: Option<usize>,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum FamilyName {
    General,
    Computational,
    Multiphase,
    Spin,
    Mub,
    PauliChoi,
    WeylChoi,
}

#[derive(Args, Debug, Clone)]
struct FamilyArgs {
    #[arg(long, value_enum)]
    family: FamilyName,
    /// Local dimension (general, computational, multiphase, mub, weyl-choi).
    #[arg(long)]
    d: Option<usize>,
    /// Spin quantum number (spin).
    #[arg(long)]
    s: Option<f64>,
    /// Number of qubits (pauli-choi).
    #[arg(long)]
    r: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum DesignCmd {
    Build {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 1)]
        n: usize,
        /// Relative weight perturbation δ in [0, 1).
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        /// Write the ensemble here and print a summary instead.
        #[arg(long)]
        out: Option<String>,
    },
    Verify {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        /// Verify an ensemble read from this file; the family flags then only set `n`.
        #[arg(long)]
        input: Option<String>,
    },
}

#[derive(Subcommand, Debug)]
enum ProtocolCmd {
    Run {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 1)]
        n: usize,
        /// Perturb the design by δ and run the approximate protocol.
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        /// Number of sampled `V`.
        #[arg(long, default_value_t = 10)]
        samples: usize,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ClonerName {
    Werner,
    Depolarizing,
    Identity,
    MeasurePrepare,
    Bestguess,
}

#[derive(Args, Debug, Clone)]
struct ClonerArgs {
    #[arg(long = "cloner", alias = "name", value_enum)]
    cloner: ClonerName,
    /// Depolarizing probability.
    #[arg(long, default_value_t = 0.1)]
    p: f64,
    /// Grid order multiplier of the measure-prepare POVM.
    #[arg(long, default_value_t = 1)]
    resolution: usize,
}

#[derive(Subcommand, Debug)]
enum NosigCmd {
    Check {
        #[command(flatten)]
        cloner: ClonerArgs,
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        copies: CopyArgs,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        /// Perturb the design by δ and include the residue outcome.
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
    },
}

#[derive(Subcommand, Debug)]
enum OracleCmd {
    /// `ρ_AB ≤ dim(A) I ⊗ ρ_B` on random densities.
    Pinching {
        #[arg(long, default_value_t = 2)]
        da: usize,
        #[arg(long, default_value_t = 2)]
        db: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
    /// `F(ρ, Σ p_i ψ_i) ≤ N max_i F(ρ, ψ_i)` on random instances.
    Rank {
        #[arg(long, default_value_t = 4)]
        d: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
    /// Monte Carlo Haar average of two Choi copies against the exact moment.
    HaarChoi {
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
    },
    /// Hook-length dimensions against standard-tableau counts.
    Syt {
        #[arg(long, default_value_t = 6)]
        max_m: usize,
    },
    /// Polynomial exactness of the Gauss–Chebyshev rule.
    Quadrature {
        #[arg(long, default_value_t = 6)]
        max_l: usize,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SweepFamily {
    General,
    Multiphase,
    Choi,
    Spin,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SweepVar {
    M,
    N,
    Eps,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, value_enum)]
    family: SweepFamily,
    #[arg(long, value_enum, default_value = "m")]
    vary: SweepVar,
    #[arg(long)]
    from: f64,
    #[arg(long)]
    to: f64,
    #[arg(long, default_value_t = 1.0)]
    step: f64,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long)]
    size: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    /// Write the table here instead of stdout.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Subcommand, Debug)]
enum ClonerCmd {
    Eval {
        #[command(flatten)]
        cloner: ClonerArgs,
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        copies: CopyArgs,
        #[arg(long, default_value_t = 1000)]
        refinements: usize,
        /// Monte Carlo samples for the average.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
}

enum CliError {
    Usage(String),
    Core(NclError),
}

impl From<NclError> for CliError {
    fn from(e: NclError) -> Self {
        CliError::Core(e)
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

/// JSON payload and whether its PASS/FAIL check (if any) passed.
struct Output {
    body: String,
    pass: bool,
}

impl Output {
    fn json<T: Serialize>(value: &T, pass: bool) -> CliResult<Self> {
        let mut body = serde_json::to_string_pretty(value).map_err(|e| NclError::Serialization(e.to_string()))?;
        body.push('\n');
        Ok(Self { body, pass })
    }
}

/// Parses `argv` (program name first) and runs the command.
pub fn run_command<I, T>(argv: I) -> CommandResult
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => CommandResult {
                    exit_code: EXIT_OK,
                    stdout: text,
                    stderr: String::new(),
                },
                _ => CommandResult {
                    exit_code: EXIT_USAGE,
                    stdout: String::new(),
                    stderr: text,
                },
            };
        }
    };
    match dispatch(&cli) {
        Ok(out) => CommandResult {
            exit_code: if out.pass { EXIT_OK } else { EXIT_CHECK_FAILED },
            stdout: out.body,
            stderr: if out.pass { String::new() } else { "check failed\n".to_string() },
        },
        Err(CliError::Usage(msg)) => CommandResult {
            exit_code: EXIT_USAGE,
            stdout: String::new(),
            stderr: format!("error: {msg}\n"),
        },
        Err(CliError::Core(e)) => CommandResult {
            exit_code: exit_code_for(&e),
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        },
    }
}

fn exit_code_for(e: &NclError) -> i32 {
    match e {
        NclError::SizeGuard { .. } => EXIT_GUARD,
        NclError::NotPsd { .. } | NclError::NotUnitary { .. } | NclError::NotDensity(_) | NclError::CheckFailed(_) => {
            EXIT_CHECK_FAILED
        }
        NclError::DimMismatch(_)
        | NclError::IndexOutOfRange { .. }
        | NclError::InvalidPermutation(_)
        | NclError::InvalidArgument(_)
        | NclError::Unsupported(_)
        | NclError::Serialization(_) => EXIT_USAGE,
    }
}

fn dispatch(cli: &Cli) -> CliResult<Output> {
    match &cli.command {
        Command::Bound { which } => cmd_bound(which),
        Command::Design { which } => cmd_design(cli, which),
        Command::Protocol { which } => cmd_protocol(cli, which),
        Command::Nosig { which } => cmd_nosig(cli, which),
        Command::Oracle { which } => cmd_oracle(cli, which),
        Command::Sweep(args) => cmd_sweep(cli, args),
        Command::Cloner { which } => cmd_cloner(cli, which),
    }
}

fn check_eps(eps: f64) -> CliResult<()> {
    if !(0.0..1.0).contains(&eps) {
        return usage(format!("--eps must lie in [0, 1), got {eps}"));
    }
    Ok(())
}

fn spin_of(s: f64) -> CliResult<Spin> {
    let spin = Spin::new(s)?;
    if spin.twice == 0 {
        return usage("--s must be positive");
    }
    Ok(spin)
}

/// Size of the built-in general-state design of order `n`.
fn general_design_size(d: usize, n: usize) -> CliResult<usize> {
    Ok(general_design(d, n)?.len())
}

fn cmd_bound(which: &BoundCmd) -> CliResult<Output> {
    let report = match which {
        BoundCmd::General { d, copies, size, eps } => {
            check_eps(*eps)?;
            let size = match size {
                Some(s) => *s,
                None => general_design_size(*d, copies.n)?,
            };
            bound_general(*d, copies.n, copies.m, size, *eps)?
        }
        BoundCmd::Multiphase { d, copies } => bound_multiphase_exact(*d, copies.n, copies.m)?,
        BoundCmd::Choi { d, copies, size, eps } => {
            check_eps(*eps)?;
            bound_choi_general(*d, copies.n, copies.m, size.unwrap_or(d * d), *eps)?
        }
        BoundCmd::Choi12 { r } => choi_1to2_exact(*r)?,
        BoundCmd::Spin { s, copies, size, eps } => {
            check_eps(*eps)?;
            let spin = spin_of(*s)?;
            let size = size.unwrap_or_else(|| constructed_spin_design_size(spin, copies.n));
            bound_spin(spin, copies.n, copies.m, size, *eps)?
        }
    };
    let pass = report.pass.unwrap_or(true);
    Output::json(&report, pass)
}

fn require<T: Copy>(v: Option<T>, flag: &str, family: FamilyName) -> CliResult<T> {
    match v {
        Some(x) => Ok(x),
        None => usage(format!("--{flag} is required for --family {}", family_label(family))),
    }
}

fn family_label(f: FamilyName) -> &'static str {
    match f {
        FamilyName::General => "general",
        FamilyName::Computational => "computational",
        FamilyName::Multiphase => "multiphase",
        FamilyName::Spin => "spin",
        FamilyName::Mub => "mub",
        FamilyName::PauliChoi => "pauli-choi",
        FamilyName::WeylChoi => "weyl-choi",
    }
}

/// Design of the requested family reproducing `n`-th moments.
fn build_design(args: &FamilyArgs, n: usize) -> CliResult<WeightedEnsemble> {
    if n == 0 {
        return usage("--n must be positive");
    }
    let f = args.family;
    let w = match f {
        FamilyName::General => general_design(require(args.d, "d", f)?, n)?,
        FamilyName::Computational => {
            if n != 1 {
                return usage("the computational basis is a 1-design only");
            }
            computational_design(require(args.d, "d", f)?)?
        }
        FamilyName::Multiphase => multiphase_design(require(args.d, "d", f)?, n)?,
        FamilyName::Spin => spin_coherent_design(spin_of(require(args.s, "s", f)?)?, n)?,
        FamilyName::Mub => {
            if n > 2 {
                return usage("MUB ensembles are 2-designs");
            }
            mub_design_dim(require(args.d, "d", f)?)?
        }
        FamilyName::PauliChoi => {
            if n != 1 {
                return usage("the Pauli Choi design reproduces first moments only");
            }
            pauli_choi_design(require(args.r, "r", f)?)?
        }
        FamilyName::WeylChoi => {
            if n != 1 {
                return usage("the Weyl Choi design reproduces first moments only");
            }
            weyl_choi_design(require(args.d, "d", f)?)?
        }
    };
    Ok(w)
}

fn perturb(w: WeightedEnsemble, delta: f64, seed: u64) -> CliResult<WeightedEnsemble> {
    if !(0.0..1.0).contains(&delta) {
        return usage(format!("--delta must lie in [0, 1), got {delta}"));
    }
    Ok(perturbed_design(&w, delta, seed)?)
}

fn read_file(path: &str) -> CliResult<String> {
    std::fs::read_to_string(path).or_else(|e| usage(format!("cannot read {path}: {e}")))
}

fn write_file(path: &str, text: &str) -> CliResult<()> {
    std::fs::write(path, text).or_else(|e| usage(format!("cannot write {path}: {e}")))
}

fn cmd_design(cli: &Cli, which: &DesignCmd) -> CliResult<Output> {
    match which {
        DesignCmd::Build { family, n, delta, out } => {
            let w = perturb(build_design(family, *n)?, *delta, cli.seed)?;
            match out {
                Some(path) => {
                    let text = serde_json::to_string_pretty(&w).map_err(|e| NclError::Serialization(e.to_string()))?;
                    write_file(path, &text)?;
                    Output::json(
                        &json!({
                            "family": w.family(),
                            "params": w.params(),
                            "size": w.len(),
                            "dim": w.base_dim(),
                            "out": path,
                        }),
                        true,
                    )
                }
                None => Output::json(&w, true),
            }
        }
        DesignCmd::Verify { family, n, delta, input } => {
            let w = match input {
                Some(path) => serde_json::from_str::<WeightedEnsemble>(&read_file(path)?)
                    .or_else(|e| usage(format!("invalid ensemble file: {e}")))?,
                None => perturb(build_design(family, *n)?, *delta, cli.seed)?,
            };
            let tol = cli.tol.unwrap_or(1e-10);
            let target = w.reference_moment(*n)?;
            let label = w.family().to_string();
            let check = design_residual(&w, *n, &target, &label)?;
            let pass = check.residual_frobenius < tol;
            Output::json(
                &json!({
                    "family": w.family(),
                    "params": w.params(),
                    "n": n,
                    "size": w.len(),
                    "residual": check.residual_frobenius,
                    "epsilon_estimate": check.epsilon_estimate,
                    "support_leakage": check.support_leakage,
                    "tol": tol,
                    "pass": pass,
                }),
                pass,
            )
        }
    }
}

#[derive(Serialize)]
struct ProtocolSummary {
    family: Family,
    params: BTreeMap<String, f64>,
    n: usize,
    dim: usize,
    samples: usize,
    epsilon: Option<f64>,
    p_suc: f64,
    p_suc_expected: f64,
    min_alice_fidelity: f64,
    max_correlation_mismatch: f64,
    max_povm_completeness_error: f64,
    min_povm_eigenvalue: f64,
    v_dependence: f64,
    max_p_res_given_suc: Option<f64>,
    tol: f64,
    pass: bool,
    first_run: ProtocolRunReport,
}

fn cmd_protocol(cli: &Cli, which: &ProtocolCmd) -> CliResult<Output> {
    let ProtocolCmd::Run { family, n, delta, samples } = which;
    if *samples == 0 {
        return usage("--samples must be positive");
    }
    let tol = cli.tol.unwrap_or(1e-10);
    let w = perturb(build_design(family, *n)?, *delta, cli.seed)?;
    let sampler = family_sampler(&w)?;
    let (inst, epsilon) = if *delta > 0.0 {
        let rho0 = w.reference_moment(*n)?;
        let eps = design_residual(&w, *n, &rho0, "reference")?
            .epsilon_estimate
            .ok_or_else(|| NclError::CheckFailed("perturbed design leaks outside the support of ρ_0".into()))?;
        (build_protocol_with_reference(&w, *n, &rho0, 1.0)?, Some(eps))
    } else {
        (build_protocol(&w, *n)?, None)
    };
    let mut reports = Vec::with_capacity(*samples);
    for i in 0..*samples {
        let v = sampler.sample(&mut rng_for(cli.seed, i as u64));
        reports.push(match epsilon {
            Some(eps) => run_approximate(&inst, &v, eps)?,
            None => run_exact(&inst, &v)?,
        });
    }
    let fold_max = |f: &dyn Fn(&ProtocolRunReport) -> f64| reports.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    let min_alice_fidelity = -fold_max(&|r| -r.min_alice_fidelity);
    let max_correlation_mismatch = fold_max(&|r| r.correlation_mismatch);
    let max_povm_completeness_error = fold_max(&|r| r.povm_completeness_error);
    let min_povm_eigenvalue = -fold_max(&|r| -r.povm_min_eigenvalue);
    let v_dependence = v_independence(&reports);
    let max_p_res_given_suc = epsilon.map(|_| fold_max(&|r| r.p_res_given_suc.unwrap_or(0.0)));
    let first = reports[0].clone();
    let mut pass = min_alice_fidelity >= 1.0 - tol
        && max_correlation_mismatch < tol
        && max_povm_completeness_error < tol
        && min_povm_eigenvalue > -tol
        && (first.p_suc - first.p_suc_expected).abs() < tol;
    if let (Some(eps), Some(p_res)) = (epsilon, max_p_res_given_suc) {
        pass &= p_res <= 2.0 * eps / (1.0 + eps) + tol;
    } else {
        pass &= v_dependence < tol;
    }
    Output::json(
        &ProtocolSummary {
            family: w.family(),
            params: w.params().clone(),
            n: *n,
            dim: inst.dim(),
            samples: *samples,
            epsilon,
            p_suc: first.p_suc,
            p_suc_expected: first.p_suc_expected,
            min_alice_fidelity,
            max_correlation_mismatch,
            max_povm_completeness_error,
            min_povm_eigenvalue,
            v_dependence,
            max_p_res_given_suc,
            tol,
            pass,
            first_run: first,
        },
        pass,
    )
}

fn local_dim_of(family: &FamilyArgs) -> CliResult<usize> {
    let f = family.family;
    Ok(match f {
        FamilyName::Spin => spin_of(require(family.s, "s", f)?)?.dim(),
        FamilyName::PauliChoi => {
            let r = require(family.r, "r", f)?;
            (1usize << r) * (1usize << r)
        }
        FamilyName::WeylChoi => {
            let d = require(family.d, "d", f)?;
            d * d
        }
        _ => require(family.d, "d", f)?,
    })
}

/// Reference ensemble the best-guess cloner picks from: the family's design
/// of the highest supported order up to `n + m`.
fn bestguess_reference(family: &FamilyArgs, n: usize, m: usize) -> CliResult<WeightedEnsemble> {
    let order = match family.family {
        FamilyName::Multiphase | FamilyName::Spin => n + m,
        FamilyName::General | FamilyName::Mub => 2,
        _ => 1,
    };
    build_design(family, order)
}

fn make_cloner(args: &ClonerArgs, family: &FamilyArgs, n: usize, m: usize) -> CliResult<CloningMap> {
    let d = local_dim_of(family)?;
    Ok(match args.cloner {
        ClonerName::Werner => werner_projection_cloner(d, n, m)?,
        ClonerName::Depolarizing => depolarizing_cloner(d, n, m, args.p)?,
        ClonerName::Identity => {
            if n != m {
                return usage("the identity cloner needs n = m");
            }
            identity_cloner(d, n)?
        }
        ClonerName::MeasurePrepare => {
            if family.family != FamilyName::Spin {
                return usage("the measure-prepare cloner is defined for --family spin");
            }
            measure_prepare_spin_cloner(spin_of(require(family.s, "s", FamilyName::Spin)?)?, n, m, args.resolution)?
        }
        ClonerName::Bestguess => nonlinear_bestguess_cloner(&bestguess_reference(family, n, m)?, n, m)?,
    })
}

fn cmd_nosig(cli: &Cli, which: &NosigCmd) -> CliResult<Output> {
    let NosigCmd::Check { cloner, family, copies, samples, delta } = which;
    if *samples == 0 {
        return usage("--samples must be positive");
    }
    let tol = cli.tol.unwrap_or(1e-9);
    let map = make_cloner(cloner, family, copies.n, copies.m)?;
    let base = build_design(family, copies.n)?;
    let (fam_name, fam_params) = (base.family(), base.params().clone());
    let report = if *delta > 0.0 {
        let w = perturb(base, *delta, cli.seed)?;
        let rho0 = w.reference_moment(copies.n)?;
        let eps = design_residual(&w, copies.n, &rho0, "reference")?
            .epsilon_estimate
            .ok_or_else(|| NclError::CheckFailed("perturbed design leaks outside the support of ρ_0".into()))?;
        let inst = build_protocol_with_reference(&w, copies.n, &rho0, 1.0)?;
        if map.m() != copies.m || map.n() != copies.n {
            return usage("cloner shape does not match --n/--m");
        }
        no_signalling_check_approximate(&map, &inst, eps, *samples, cli.seed)?
    } else {
        no_signalling_check(&map, &base, copies.n, copies.m, *samples, cli.seed)?
    };
    let pass = report.max_pairwise_trace_distance < tol;
    Output::json(
        &json!({
            "cloner": report.cloner,
            "linear": map.is_linear(),
            "family": fam_name,
            "params": fam_params,
            "n": copies.n,
            "m": copies.m,
            "samples": report.samples,
            "max_pairwise_trace_distance": report.max_pairwise_trace_distance,
            "max_distance_to_mean": report.max_distance_to_mean,
            "tol": tol,
            "pass": pass,
        }),
        pass,
    )
}

/// `∫_{-1}^{1} x^k √(1−x²) dx` from Wallis integrals of `cos^k t` over `[0, π]`.
fn chebyshev_moment(k: usize) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    let wallis = |j: usize| -> f64 {
        let mut v = std::f64::consts::PI;
        let mut i = 2;
        while i <= j {
            v *= (i as f64 - 1.0) / i as f64;
            i += 2;
        }
        v
    };
    wallis(k) - wallis(k + 2)
}

fn cmd_oracle(cli: &Cli, which: &OracleCmd) -> CliResult<Output> {
    match which {
        OracleCmd::Pinching { da, db, trials } => {
            if *da == 0 || *db == 0 {
                return usage("--da and --db must be positive");
            }
            let rho = random_density(&[*da, *db], &mut rng_for(cli.seed, u64::MAX));
            let rep = pinching_check(&rho, *da, *trials, cli.seed)?;
            let tol = cli.tol.unwrap_or(1e-10);
            let pass = rep.min_eigenvalue >= -tol;
            Output::json(
                &json!({
                    "oracle": "pinching",
                    "da": da,
                    "db": db,
                    "instances": rep.instances,
                    "min_eigenvalue": rep.min_eigenvalue,
                    "tol": tol,
                    "pass": pass,
                }),
                pass,
            )
        }
        OracleCmd::Rank { d, trials } => {
            if *d == 0 {
                return usage("--d must be positive");
            }
            let tol = cli.tol.unwrap_or(1e-10);
            let mut violations = 0usize;
            let mut max_ratio: f64 = 0.0;
            for i in 0..*trials {
                let mut rng = rng_for(cli.seed, i as u64);
                let rho = random_density(&[*d], &mut rng);
                let count = 1 + (i % (2 * d));
                let states: Vec<PureState> = (0..count).map(|_| haar_state(*d, &mut rng)).collect();
                let raw: Vec<f64> = (0..count).map(|k| 1.0 + ((i + k) % 3) as f64).collect();
                let total: f64 = raw.iter().sum();
                let elements = raw.iter().map(|x| x / total).zip(states).collect();
                let ens = WeightedEnsemble::new(Family::Custom, BTreeMap::new(), elements)?;
                let rep = rank_inequality_check(&rho, &ens)?;
                if rep.lhs > rep.rhs + tol {
                    violations += 1;
                }
                if rep.rhs > 0.0 {
                    max_ratio = max_ratio.max(rep.lhs / rep.rhs);
                }
            }
            let pass = violations == 0;
            Output::json(
                &json!({
                    "oracle": "rank",
                    "d": d,
                    "instances": trials,
                    "violations": violations,
                    "max_ratio": max_ratio,
                    "tol": tol,
                    "pass": pass,
                }),
                pass,
            )
        }
        OracleCmd::HaarChoi { d, samples } => {
            if *samples == 0 {
                return usage("--samples must be positive");
            }
            let sigma = choi_state(&Operator::identity(&[*d]))?.tensor_power(2)?.projector();
            let sampler = ChoiOutSampler { inner: HaarSampler { d: *d } };
            let twirled = mc_twirl(&sampler, 2, &sigma, *samples, cli.seed)?;
            let distance = twirled.frobenius_distance(&choi_rho0(*d, 2)?)?;
            let threshold = cli.tol.unwrap_or(5.0 / (*samples as f64).sqrt());
            let pass = distance < threshold;
            Output::json(
                &json!({
                    "oracle": "haar-choi",
                    "d": d,
                    "samples": samples,
                    "distance": distance,
                    "threshold": threshold,
                    "pass": pass,
                }),
                pass,
            )
        }
        OracleCmd::Syt { max_m } => {
            if *max_m > MAX_SYT_SIZE {
                return Err(NclError::SizeGuard {
                    what: "--max-m".into(),
                    size: *max_m as u128,
                    limit: MAX_SYT_SIZE as u128,
                }
                .into());
            }
            let mut checked = 0usize;
            let mut mismatches = Vec::new();
            for m in 1..=*max_m {
                for lambda in partitions(m, m) {
                    let q = hook_dims(&lambda, m)?.q_dim;
                    let count = syt_count_bruteforce(&lambda)? as u128;
                    checked += 1;
                    if q != count {
                        mismatches.push(lambda.rows().to_vec());
                    }
                }
            }
            let pass = mismatches.is_empty();
            Output::json(
                &json!({
                    "oracle": "syt",
                    "max_m": max_m,
                    "partitions_checked": checked,
                    "mismatches": mismatches,
                    "pass": pass,
                }),
                pass,
            )
        }
        OracleCmd::Quadrature { max_l } => {
            let tol = cli.tol.unwrap_or(1e-12);
            let mut max_error: f64 = 0.0;
            for l in 1..=*max_l {
                let rule = gauss_chebyshev_rule(l)?;
                for k in 0..2 * l {
                    let err = (rule.integrate(|x| x.powi(k as i32)) - chebyshev_moment(k)).abs();
                    max_error = max_error.max(err);
                }
            }
            let pass = max_error < tol;
            Output::json(
                &json!({
                    "oracle": "quadrature",
                    "max_l": max_l,
                    "max_error": max_error,
                    "tol": tol,
                    "pass": pass,
                }),
                pass,
            )
        }
    }
}

/// Shortest round-trip-safe form with 17 significant digits.
fn csv_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn sweep_points(args: &SweepArgs) -> CliResult<Vec<f64>> {
    if !(args.step > 0.0) || args.to < args.from || !args.from.is_finite() || !args.to.is_finite() {
        return usage("sweep needs --step > 0 and --from ≤ --to");
    }
    let count = ((args.to - args.from) / args.step + 1e-9).floor() as usize + 1;
    if count > 100_000 {
        return Err(NclError::SizeGuard {
            what: "sweep points".into(),
            size: count as u128,
            limit: 100_000,
        }
        .into());
    }
    Ok((0..count).map(|i| args.from + i as f64 * args.step).collect())
}

fn as_count(x: f64, name: &str) -> CliResult<usize> {
    if x < 0.0 || (x - x.round()).abs() > 1e-9 {
        return usage(format!("--vary {name} needs integer points, got {x}"));
    }
    Ok(x.round() as usize)
}

fn sweep_row(args: &SweepArgs, n: usize, m: usize, eps: f64) -> CliResult<(usize, usize, BoundReport)> {
    check_eps(eps)?;
    Ok(match args.family {
        SweepFamily::General => {
            let d = require(args.d, "d", FamilyName::General)?;
            let size = match args.size {
                Some(s) => s,
                None => general_design_size(d, n)?,
            };
            (d, size, bound_general(d, n, m, size, eps)?)
        }
        SweepFamily::Multiphase => {
            let d = require(args.d, "d", FamilyName::Multiphase)?;
            let size = multiphase_design(d, n).map(|w| w.len()).unwrap_or(0);
            (d, size, bound_multiphase_exact(d, n, m)?)
        }
        SweepFamily::Choi => {
            let d = require(args.d, "d", FamilyName::WeylChoi)?;
            let size = args.size.unwrap_or(d * d);
            (d, size, bound_choi_general(d, n, m, size, eps)?)
        }
        SweepFamily::Spin => {
            let spin = spin_of(require(args.s, "s", FamilyName::Spin)?)?;
            let size = args.size.unwrap_or_else(|| constructed_spin_design_size(spin, n));
            (spin.dim(), size, bound_spin(spin, n, m, size, eps)?)
        }
    })
}

fn cmd_sweep(cli: &Cli, args: &SweepArgs) -> CliResult<Output> {
    let family = match args.family {
        SweepFamily::General => "general",
        SweepFamily::Multiphase => "multiphase",
        SweepFamily::Choi => "choi",
        SweepFamily::Spin => "spin",
    };
    let mut rows = Vec::new();
    for x in sweep_points(args)? {
        let (n, m, eps) = match args.vary {
            SweepVar::M => (args.n, as_count(x, "m")?, args.eps),
            SweepVar::N => (as_count(x, "n")?, args.m, args.eps),
            SweepVar::Eps => (args.n, args.m, x),
        };
        let (d, size, report) = sweep_row(args, n, m, eps)?;
        rows.push((d, n, m, eps, size, report));
    }
    let extra: Vec<String> = rows
        .first()
        .map(|r| r.5.comparisons.keys().filter(|k| *k != "qm_bound").cloned().collect())
        .unwrap_or_default();
    let text = if cli.json {
        let items: Vec<Value> = rows
            .iter()
            .map(|(d, n, m, eps, size, r)| {
                json!({
                    "family": family,
                    "d": d,
                    "n": n,
                    "m": m,
                    "eps": eps,
                    "size": size,
                    "bound": r.value,
                    "qm_bound": r.comparisons.get("qm_bound"),
                    "comparisons": r.comparisons,
                })
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&items).map_err(|e| NclError::Serialization(e.to_string()))?;
        s.push('\n');
        s
    } else {
        let mut s = String::from("family,d,n,m,eps,size,bound,qm_bound");
        for k in &extra {
            s.push(',');
            s.push_str(k);
        }
        s.push('\n');
        for (d, n, m, eps, size, r) in &rows {
            let qm = r.comparisons.get("qm_bound").copied().unwrap_or(f64::NAN);
            let _ = write!(s, "{family},{d},{n},{m},{},{size},{},{}", csv_float(*eps), csv_float(r.value), csv_float(qm));
            for k in &extra {
                s.push(',');
                s.push_str(&csv_float(r.comparisons.get(k).copied().unwrap_or(f64::NAN)));
            }
            s.push('\n');
        }
        s
    };
    match &args.out {
        Some(path) => {
            write_file(path, &text)?;
            Output::json(&json!({ "rows": rows.len(), "out": path }), true)
        }
        None => Ok(Output { body: text, pass: true }),
    }
}

fn state_family(args: &FamilyArgs) -> CliResult<StateFamily> {
    let f = args.family;
    Ok(match f {
        FamilyName::General => StateFamily::General { d: require(args.d, "d", f)? },
        FamilyName::Multiphase => StateFamily::Multiphase { d: require(args.d, "d", f)? },
        FamilyName::Spin => StateFamily::Spin { s: spin_of(require(args.s, "s", f)?)? },
        _ => return usage("cloner eval supports --family general, multiphase or spin"),
    })
}

/// Bound the estimate is compared against, for the family's built-in design.
fn family_bound(args: &FamilyArgs, n: usize, m: usize) -> CliResult<BoundReport> {
    let f = args.family;
    Ok(match f {
        FamilyName::General => {
            let d = require(args.d, "d", f)?;
            bound_general(d, n, m, general_design_size(d, n.min(2))?, 0.0)?
        }
        FamilyName::Multiphase => bound_multiphase_exact(require(args.d, "d", f)?, n, m)?,
        FamilyName::Spin => {
            let s = spin_of(require(args.s, "s", f)?)?;
            bound_spin(s, n, m, constructed_spin_design_size(s, n), 0.0)?
        }
        _ => return usage("cloner eval supports --family general, multiphase or spin"),
    })
}

fn cmd_cloner(cli: &Cli, which: &ClonerCmd) -> CliResult<Output> {
    let ClonerCmd::Eval { cloner, family, copies, refinements, samples } = which;
    let fam = state_family(family)?;
    let map = make_cloner(cloner, family, copies.n, copies.m)?;
    let est = fidelity_estimate(
        &map,
        fam,
        FidelityOptions {
            refinements: *refinements,
            average_samples: *samples,
            seed: cli.seed,
        },
    )?;
    let bound = if copies.n <= 2 || family.family != FamilyName::General {
        Some(family_bound(family, copies.n, copies.m)?)
    } else {
        None
    };
    let tol = cli.tol.unwrap_or(1e-6);
    let pass = bound.as_ref().is_none_or(|b| est.worst_case <= b.value + tol);
    Output::json(
        &json!({
            "cloner": map.name(),
            "kind": map.kind(),
            "family": fam,
            "n": copies.n,
            "m": copies.m,
            "estimate": est,
            "bound": bound.as_ref().map(|b| b.value),
            "tol": tol,
            "pass": pass,
        }),
        pass,
    )
}
