//! `wax` command line.
//!
//! Exit codes: 0 success, 1 invalid arguments, 2 I/O failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wax_core::model::{self, SystemConfig};
use wax_core::optim::{self, Init, OptimOptions};
use wax_core::wax::{self as framework, CombiningModule, WaxSolution};
use wax_core::{baseline, linalg};

use crate::error::SimError;
use crate::harness::{self, ExperimentSpec, Method};
use crate::output::{self, Format};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "wax", version, about = "Decentralized receive processing with unitary constraints", arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte Carlo sweep of capacity ratio versus T.
    Sweep(SweepArgs),
    /// Minimum T for lossless unconstrained processing.
    Tmin(TminArgs),
    /// Run the optimizer and all methods on one seeded instance.
    Decompose(DecomposeArgs),
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, default_value_t = 12)]
    m: usize,
    #[arg(long, default_value_t = 4)]
    k: usize,
    /// Block sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 3])]
    l: Vec<usize>,
    /// Smallest T (default K).
    #[arg(long)]
    t_min: Option<usize>,
    /// Largest T (default M).
    #[arg(long)]
    t_max: Option<usize>,
    /// SNR values in dB, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [0.0, 20.0])]
    snr_db: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Methods, comma separated: proposed, baseline, unconstrained, random.
    #[arg(long, value_delimiter = ',', default_value = "proposed,baseline,unconstrained,random")]
    methods: Vec<String>,
    /// Draw the combining module once per (L, T) cell.
    #[arg(long)]
    fix_a: bool,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    #[arg(long, default_value_t = 3)]
    restarts: usize,
    /// Worker threads (overrides WAX_WORKERS).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Debug)]
struct TminArgs {
    #[arg(long, default_value_t = 12)]
    m: usize,
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long)]
    l: usize,
    /// Channel draws per candidate T for the empirical threshold.
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum InitArg {
    Identity,
    Haar,
}

#[derive(Args, Debug)]
struct DecomposeArgs {
    #[arg(long, default_value_t = 12)]
    m: usize,
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long, default_value_t = 2)]
    l: usize,
    #[arg(long, default_value_t = 10)]
    t: usize,
    #[arg(long, allow_hyphen_values = true, default_value_t = 20.0)]
    snr_db: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    #[arg(long, default_value_t = 3)]
    restarts: usize,
    #[arg(long, value_enum, default_value_t = InitArg::Haar)]
    init: InitArg,
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{rendered}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{rendered}");
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match cli.command {
        Command::Sweep(a) => sweep(a, out),
        Command::Tmin(a) => tmin(a, out),
        Command::Decompose(a) => decompose(a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_io() {
                EXIT_IO
            } else {
                EXIT_USAGE
            }
        }
    }
}

fn stdout_err(source: std::io::Error) -> SimError {
    SimError::Io { path: PathBuf::from("<stdout>"), source }
}

fn sweep(a: SweepArgs, out: &mut dyn Write) -> Result<(), SimError> {
    let methods = a.methods.iter().map(|s| s.parse()).collect::<Result<Vec<Method>, _>>()?;
    let spec = ExperimentSpec {
        m: a.m,
        k: a.k,
        l_values: a.l,
        t_min: a.t_min.unwrap_or(a.k),
        t_max: a.t_max.unwrap_or(a.m),
        snr_db_values: a.snr_db,
        trials: a.trials,
        master_seed: a.seed,
        methods,
        fix_a_across_trials: a.fix_a,
        optim: OptimOptions { max_iters: a.max_iters, restarts: a.restarts, ..OptimOptions::default() },
    };
    let result = harness::run_sweep(&spec, a.workers)?;
    match (&a.out, a.format) {
        (Some(path), format) => output::emit(&spec, &result, format, path),
        (None, Format::Csv) => output::write_csv(&result.rows, out)
            .map_err(|source| SimError::Csv { path: PathBuf::from("<stdout>"), source }),
        (None, Format::Json) => output::write_json(&spec, &result, out)
            .map_err(|source| SimError::Json { path: PathBuf::from("<stdout>"), source }),
    }
}

fn tmin(a: TminArgs, out: &mut dyn Write) -> Result<(), SimError> {
    model::validate_dims(a.m, a.k, a.l)?;
    if a.trials == 0 {
        return Err(SimError::InvalidSpec("trials must be at least 1".into()));
    }
    let tradeoff = framework::tradeoff_min_t(a.m, a.k, a.l);
    let closed_form = framework::t_min(a.m, a.k, a.l);
    let mut rng = ChaCha8Rng::seed_from_u64(harness::splitmix64(a.seed));
    let empirical = framework::empirical_t_min(a.m, a.k, a.l, a.trials, &mut rng)?;
    (|| -> std::io::Result<()> {
        writeln!(out, "M={} K={} L={}", a.m, a.k, a.l)?;
        writeln!(out, "tradeoff_threshold {tradeoff}  smallest T with T > max(M(K-L)/K, K-1)")?;
        writeln!(out, "t_min_formula {closed_form}  max(K, floor(M(K-L)/(K+1)))")?;
        writeln!(
            out,
            "empirical {empirical}  smallest T with unconstrained residual < {:e} on {} draws",
            framework::EXACT_RESIDUAL,
            a.trials
        )
    })()
    .map_err(stdout_err)
}

fn decompose(a: DecomposeArgs, out: &mut dyn Write) -> Result<(), SimError> {
    let snr = model::db_to_linear(a.snr_db);
    let cfg = SystemConfig::new(a.m, a.k, a.l, a.t, snr)?;
    let opts = OptimOptions {
        max_iters: a.max_iters,
        restarts: a.restarts,
        init: match a.init {
            InitArg::Identity => Init::Identity,
            InitArg::Haar => Init::HaarRandom,
        },
        ..OptimOptions::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(harness::splitmix64(a.seed));
    let ch = model::sample_channel(&cfg, &mut rng);
    let comb = CombiningModule::random(cfg.m, cfg.t, &mut rng)?;
    let r = optim::optimize(&ch, &comb, &cfg, &opts, &mut rng)?;
    let proposed = model::capacity_ratio(&ch, &r.w.apply(comb.matrix()), snr)?;
    let fit = WaxSolution::fit(r.w.clone(), &comb, &ch);

    let unc = baseline::solve_unconstrained(&ch, &comb, &cfg)?;
    let unconstrained = unc.processing_matrix(&comb).ok().map(|g| model::capacity_ratio(&ch, &g, snr)).transpose()?;
    let proj = baseline::project_to_unitary_blocks(&unc)?;
    let base = model::capacity_ratio(&ch, &proj.filter.apply(comb.matrix()), snr)?;
    let random = baseline::random_isotropic_filter(&cfg, &mut rng);
    let rand_ratio = model::capacity_ratio(&ch, &random.apply(comb.matrix()), snr)?;

    (|| -> std::io::Result<()> {
        writeln!(out, "M={} K={} L={} T={} snr_db={} seed={}", a.m, a.k, a.l, a.t, a.snr_db, a.seed)?;
        writeln!(out, "sweep,J")?;
        for (i, j) in r.j_history.iter().enumerate() {
            writeln!(out, "{},{:.12}", i + 1, j)?;
        }
        writeln!(out, "restart {} of {}, converged {}", r.restart + 1, opts.restarts, r.converged)?;
        writeln!(out, "final_J {:.12}", r.final_j())?;
        writeln!(out, "distance {:.6e}", r.distance)?;
        writeln!(out, "lossless {}", r.lossless)?;
        writeln!(out, "max_unitarity_error {:.3e}", r.w.max_unitarity_error().max(linalg::unitarity_error(&r.params.q)))?;
        writeln!(out, "wax_residual {:.6e}", fit.residual)?;
        writeln!(out, "capacity_ratio proposed {proposed:.12}")?;
        writeln!(out, "capacity_ratio baseline {base:.12}")?;
        match unconstrained {
            Some(u) => writeln!(out, "capacity_ratio unconstrained {u:.12}")?,
            None => writeln!(out, "capacity_ratio unconstrained singular-block")?,
        }
        writeln!(out, "capacity_ratio random {rand_ratio:.12}")?;
        writeln!(out, "unconstrained_residual {:.6e}", unc.residual)
    })()
    .map_err(stdout_err)
}
