//! Command-line front end.
//!
//! Every subcommand writes JSON (default) or CSV to stdout or `--out`.
//! Exit status: 0 on success, 1 when a check fails, 2 on usage or domain
//! errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::channel::{
    make_channel, noise_limit_params, validate_params, ChannelParams, ChannelSpec, Family, LimitRoute, NativeParams,
    ValidationReport,
};
use crate::entropy::{chain_check, to_bits};
use crate::error::Error;
use crate::experiments::{
    conjecture_scan_with, counterexample_search, ladder_verify_with, mixture_property_suite, mixture_shift_check,
    mixture_vs_lowest_fock, passive_chain, seeded_corpus, BinaryPattern, ConjectureOptions, LadderOptions,
    DEFAULT_SEED, WITNESS_TOL,
};
use crate::io::{entropy_table, format_g17, grid_table, ladder_table, write_json, Table};
use crate::majorization::{
    apply_ladder_power_len, build_ladder, check_column_stochastic, fock_compare, majorize_compare, BandDescriptor,
    MajorizationVerdict, StochasticityReport, DEFAULT_TOL, DENSE_EXPORT_MAX_DIM,
};
use crate::par::Exec;
use crate::state::FockDiagonalState;
use crate::suite::{run_criterion, CriterionOutcome, CRITERIA};
use crate::transition::{
    analytic_special, grid_recurrence, row_multinomial, series_block, Expansion, TransitionGrid, DEFAULT_TAIL_TOL,
};

/// Relative `--out` paths are resolved against this directory when set.
pub const OUT_DIR_ENV: &str = "FOCK_LADDER_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Library operation and the subcommand that exposes it.
pub const OPERATIONS: &[(&str, &str)] = &[
    ("make_channel", "params"),
    ("channel_params", "params"),
    ("validate_params", "params"),
    ("noise_limit_params", "limit"),
    ("grid_recurrence", "grid"),
    ("row_multinomial", "grid"),
    ("row_series", "grid"),
    ("analytic_special", "grid"),
    ("build_ladder", "dmat"),
    ("check_column_stochastic", "dmat"),
    ("apply_ladder_power", "dmat"),
    ("majorize_compare", "majorize"),
    ("fock_compare", "majorize"),
    ("shannon", "entropy"),
    ("renyi", "entropy"),
    ("chain_check", "entropy"),
    ("ladder_verify", "ladder"),
    ("mixture_shift_check", "mixture"),
    ("mixture_vs_lowest_fock", "mixture"),
    ("mixture_property_suite", "mixture"),
    ("counterexample_search", "mixture"),
    ("conjecture_scan", "conjecture"),
    ("passive_chain", "conjecture"),
    ("run_criterion", "suite"),
];

#[derive(Debug, Parser)]
#[command(
    name = "fock-ladder",
    version,
    about = "Photon-number statistics and majorization ladders of single-mode Gaussian channels"
)]
pub struct Cli {
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct ChannelArgs {
    /// lossy, amp, noise or conj.
    #[arg(long)]
    pub family: Family,
    /// Transmittance of the lossy channel.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Gain of the amplifier or conjugated amplifier.
    #[arg(long)]
    pub g: Option<f64>,
    /// Mean thermal photon number of the environment.
    #[arg(long = "N")]
    pub thermal_n: Option<f64>,
    /// Added noise of the additive-noise channel.
    #[arg(long = "n")]
    pub added_n: Option<f64>,
}

impl ChannelArgs {
    fn spec(&self) -> Result<ChannelSpec, Error> {
        make_channel(
            self.family,
            NativeParams {
                eta: self.eta,
                g: self.g,
                thermal_n: self.thermal_n,
                added_n: self.added_n,
            },
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GridMethod {
    Recurrence,
    Multinomial,
    Series,
    Analytic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MixtureMode {
    /// Mixture versus its k-step shift.
    Shift,
    /// Lowest Fock state versus a mixture above it.
    Lowest,
    /// Both properties on seeded random draws.
    Random,
    /// Energy- and Fock-ordered pairs from the seeded corpus.
    Counterexample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RouteArg {
    Loss,
    Amp,
}

impl From<RouteArg> for LimitRoute {
    fn from(r: RouteArg) -> Self {
        match r {
            RouteArg::Loss => LimitRoute::ViaLoss,
            RouteArg::Amp => LimitRoute::ViaAmp,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generating-function parameters of a channel.
    Params {
        #[command(flatten)]
        channel: ChannelArgs,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Transition probabilities T[i][n] for i <= imax.
    Grid {
        #[command(flatten)]
        channel: ChannelArgs,
        #[arg(long, default_value_t = 10)]
        imax: usize,
        #[arg(long, default_value_t = DEFAULT_TAIL_TOL)]
        tail_tol: f64,
        #[arg(long, value_enum, default_value_t = GridMethod::Recurrence)]
        method: GridMethod,
    },
    /// The ladder matrix D (or its k-th power) and its stochasticity report.
    Dmat {
        #[command(flatten)]
        channel: ChannelArgs,
        #[arg(long, default_value_t = 8)]
        dim: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Compare two distributions read as JSON {p, q, p_tail, q_tail} from stdin.
    Majorize {
        /// Fock order (prefix sums without sorting).
        #[arg(long)]
        fock: bool,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Verify the output ladder for Fock inputs 0..=imax.
    Ladder {
        #[command(flatten)]
        channel: ChannelArgs,
        #[arg(long, default_value_t = 30)]
        imax: usize,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_TAIL_TOL)]
        tail_tol: f64,
    },
    /// Entropy of each output row; Shannon unless --order is given.
    Entropy {
        #[command(flatten)]
        channel: ChannelArgs,
        #[arg(long, default_value_t = 30)]
        imax: usize,
        /// Rényi order; `inf` for the min-entropy.
        #[arg(long)]
        order: Option<f64>,
        /// Report entropies in bits instead of nats.
        #[arg(long)]
        bits: bool,
        #[arg(long, default_value_t = DEFAULT_TAIL_TOL)]
        tail_tol: f64,
    },
    /// Mixture properties and counterexample search.
    Mixture {
        #[command(flatten)]
        channel: ChannelArgs,
        #[arg(long, value_enum, default_value_t = MixtureMode::Shift)]
        mode: MixtureMode,
        /// Mixture weights over consecutive Fock states, summing to one.
        #[arg(long, value_delimiter = ',', default_value = "0.5,0.5")]
        weights: Vec<f64>,
        /// Shift (shift mode) or lowest Fock level (lowest mode).
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Random pairs (counterexample mode) or draws (random mode).
        #[arg(long, default_value_t = 40)]
        pairs: usize,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Binary-pattern scan, or the passive path of one --pattern.
    Conjecture {
        #[command(flatten)]
        channel: ChannelArgs,
        #[arg(long, default_value_t = 10)]
        length: usize,
        /// Follow the passive path of this pattern instead of scanning, e.g. `101001`.
        #[arg(long)]
        pattern: Option<BinaryPattern>,
        #[arg(long, default_value_t = 0)]
        nonbinary_samples: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Approach the additive-noise channel from the loss or amplifier side.
    Limit {
        /// Added noise of the target channel.
        #[arg(long = "n")]
        added_n: f64,
        #[arg(long, value_delimiter = ',', default_value = "0.01,0.005,0.0025")]
        eps: Vec<f64>,
        /// Both routes when omitted.
        #[arg(long, value_enum)]
        route: Option<RouteArg>,
    },
    /// Run the acceptance battery.
    Suite {
        /// Criterion numbers to run (all by default).
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
        /// Run without the thread pool.
        #[arg(long)]
        sequential: bool,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Params { .. } => "params",
            Command::Grid { .. } => "grid",
            Command::Dmat { .. } => "dmat",
            Command::Majorize { .. } => "majorize",
            Command::Ladder { .. } => "ladder",
            Command::Entropy { .. } => "entropy",
            Command::Mixture { .. } => "mixture",
            Command::Conjecture { .. } => "conjecture",
            Command::Limit { .. } => "limit",
            Command::Suite { .. } => "suite",
        }
    }
}

#[derive(Debug)]
enum Failure {
    Lib(Error),
    Io(io::Error),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Lib(e) => write!(f, "{e}"),
            Failure::Io(e) => write!(f, "i/o error: {e}"),
            Failure::Usage(m) => f.write_str(m),
        }
    }
}

/// Rendered command output plus whether its checks passed.
struct Output {
    body: Vec<u8>,
    ok: bool,
    notes: Vec<String>,
}

impl Output {
    fn render<T: Serialize>(
        format: Format,
        value: &T,
        table: impl FnOnce() -> Table,
        ok: bool,
    ) -> Result<Self, Failure> {
        let mut body = Vec::new();
        match format {
            Format::Json => write_json(&mut body, value)?,
            Format::Csv => table().write(&mut body)?,
        }
        Ok(Output {
            body,
            ok,
            notes: Vec::new(),
        })
    }
}

fn key_values<'a>(pairs: impl IntoIterator<Item = (&'a str, String)>) -> Table {
    let mut t = Table::new(["key", "value"]);
    for (k, v) in pairs {
        t.push(vec![k.to_string(), v]);
    }
    t
}

fn verdict_row(v: &MajorizationVerdict) -> Vec<String> {
    vec![relation_name(v), format_g17(v.worst_slack), v.at_index.to_string()]
}

fn relation_name(v: &MajorizationVerdict) -> String {
    serde_json::to_value(v.relation)
        .ok()
        .and_then(|j| j.as_str().map(str::to_string))
        .unwrap_or_default()
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit status.
pub fn run<I, T>(args: I, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(stdout, "{text}");
                EXIT_OK
            };
        }
    };
    match execute(&cli, stdin, stderr) {
        Ok(output) => {
            for note in &output.notes {
                let _ = writeln!(stderr, "note: {note}");
            }
            if let Err(e) = deliver(&cli, &output.body, stdout) {
                let _ = writeln!(stderr, "error: cannot write output: {e}");
                return EXIT_USAGE;
            }
            if output.ok {
                EXIT_OK
            } else {
                let _ = writeln!(stderr, "{}: check failed", cli.command.name());
                EXIT_CHECK_FAILED
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn output_path(out: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if out.is_relative() => Path::new(&dir).join(out),
        _ => out.to_path_buf(),
    }
}

fn deliver(cli: &Cli, body: &[u8], stdout: &mut dyn Write) -> io::Result<()> {
    match &cli.out {
        Some(path) => File::create(output_path(path))?.write_all(body),
        None => stdout.write_all(body),
    }
}

fn execute(cli: &Cli, stdin: &mut dyn Read, stderr: &mut dyn Write) -> Result<Output, Failure> {
    let format = cli.format;
    match &cli.command {
        Command::Params { channel, tol } => params(format, &channel.spec()?, *tol),
        Command::Grid {
            channel,
            imax,
            tail_tol,
            method,
        } => grid(format, &channel.spec()?, *imax, *tail_tol, *method),
        Command::Dmat { channel, dim, k, tol } => dmat(format, &channel.spec()?, *dim, *k, *tol),
        Command::Majorize { fock, tol } => majorize(format, stdin, *fock, *tol),
        Command::Ladder {
            channel,
            imax,
            tol,
            tail_tol,
        } => {
            let opts = LadderOptions {
                tol: *tol,
                tail_tol: *tail_tol,
            };
            let report = ladder_verify_with(&channel.spec()?, *imax, &opts)?;
            Output::render(
                format,
                &report,
                || {
                    let mut t = Table::new(["i", "relation", "worst_slack", "at_index", "witness_error"]);
                    for s in &report.steps {
                        let mut row = vec![s.i.to_string()];
                        row.extend(verdict_row(&s.verdict));
                        row.push(format_g17(s.witness_error));
                        t.push(row);
                    }
                    t
                },
                report.pass && report.witness_ok,
            )
        }
        Command::Entropy {
            channel,
            imax,
            order,
            bits,
            tail_tol,
        } => {
            let grid = grid_recurrence(&channel.spec()?.params(), *imax, *tail_tol)?;
            let mut report = chain_check(&grid, *order)?;
            let scale = if *bits { to_bits(1.0) } else { 1.0 };
            let table = entropy_table(&report, scale);
            if *bits {
                report.values.iter_mut().for_each(|v| *v *= scale);
                report.worst_violation *= scale;
            }
            let ok = report.monotone;
            Output::render(format, &report, || table, ok)
        }
        Command::Mixture {
            channel,
            mode,
            weights,
            k,
            seed,
            pairs,
            tol,
        } => mixture(format, &channel.spec()?, *mode, weights, *k, *seed, *pairs, *tol),
        Command::Conjecture {
            channel,
            length,
            pattern,
            nonbinary_samples,
            seed,
            tol,
        } => {
            let spec = channel.spec()?;
            match pattern {
                Some(p) => {
                    let chain = passive_chain(&spec, p, *tol)?;
                    Output::render(
                        format,
                        &chain,
                        || {
                            let mut t = Table::new(["step", "from", "to", "relation", "worst_slack", "at_index"]);
                            for (j, v) in chain.steps.iter().enumerate() {
                                let mut row =
                                    vec![j.to_string(), chain.path[j].to_string(), chain.path[j + 1].to_string()];
                                row.extend(verdict_row(v));
                                t.push(row);
                            }
                            t
                        },
                        chain.pass,
                    )
                }
                None => {
                    let opts = ConjectureOptions {
                        length: *length,
                        tol: *tol,
                        nonbinary_samples: *nonbinary_samples,
                        seed: *seed,
                        ..Default::default()
                    };
                    let report = conjecture_scan_with(&spec, &opts)?;
                    Output::render(
                        format,
                        &report,
                        || {
                            key_values([
                                ("patterns", report.patterns.to_string()),
                                ("swap_checks", report.swap_checks.to_string()),
                                ("swap_violations", report.swap_violation_count.to_string()),
                                ("path_checks", report.path_checks.to_string()),
                                ("path_violations", report.path_violation_count.to_string()),
                                ("path_energy_ok", report.path_energy_ok.to_string()),
                                ("worst_slack", format_g17(report.worst_slack)),
                                ("pass", report.pass.to_string()),
                            ])
                        },
                        report.pass,
                    )
                }
            }
        }
        Command::Limit { added_n, eps, route } => limit(format, *added_n, eps, *route),
        Command::Suite { only, sequential } => suite(format, only, *sequential, stderr),
    }
}

#[derive(Serialize)]
struct ParamsOutput<'a> {
    channel: ChannelSpec,
    #[serde(flatten)]
    params: ChannelParams,
    y: f64,
    identity: bool,
    validation: &'a ValidationReport,
    note: Option<&'static str>,
}

fn params(format: Format, spec: &ChannelSpec, tol: f64) -> Result<Output, Failure> {
    let p = spec.params();
    let validation = validate_params(&p, tol);
    let out = ParamsOutput {
        channel: *spec,
        params: p,
        y: spec.y(),
        identity: spec.is_identity(),
        validation: &validation,
        note: spec.boundary_note(),
    };
    let mut output = Output::render(
        format,
        &out,
        || {
            key_values([
                ("alpha", format_g17(p.alpha)),
                ("beta", format_g17(p.beta)),
                ("gamma", format_g17(p.gamma)),
                ("chi", format_g17(p.chi)),
                ("nu", format_g17(p.nu)),
                ("y", format_g17(spec.y())),
                ("valid", validation.ok.to_string()),
            ])
        },
        validation.ok,
    )?;
    output.notes.extend(spec.boundary_note().map(str::to_string));
    Ok(output)
}

#[derive(Serialize)]
struct GridOutput<'a> {
    channel: ChannelSpec,
    method: &'static str,
    i_max: usize,
    n_max: usize,
    tail_tol: f64,
    rows: &'a [Vec<f64>],
    tails: &'a [f64],
}

fn grid(
    format: Format,
    spec: &ChannelSpec,
    i_max: usize,
    tail_tol: f64,
    method: GridMethod,
) -> Result<Output, Failure> {
    let params = spec.params();
    let mut grid = grid_recurrence(&params, i_max, tail_tol)?;
    let n_max = grid.n_max;
    let method_name = match method {
        GridMethod::Recurrence => "recurrence",
        GridMethod::Multinomial => {
            grid.rows = (0..=i_max)
                .map(|i| row_multinomial(&params, i, n_max))
                .collect::<Result<_, _>>()?;
            "multinomial"
        }
        GridMethod::Series => {
            grid.rows = series_block(&params, i_max, n_max, Expansion::for_params(&params));
            "series"
        }
        GridMethod::Analytic => {
            grid.rows = (0..=i_max)
                .map(|i| {
                    analytic_special(spec, i, n_max).map(|r| r.values).ok_or_else(|| {
                        Failure::Usage(format!("no closed-form law for {spec} at input photon number {i}"))
                    })
                })
                .collect::<Result<_, _>>()?;
            "analytic"
        }
    };
    recompute_tails(&mut grid);
    let out = GridOutput {
        channel: *spec,
        method: method_name,
        i_max,
        n_max,
        tail_tol,
        rows: &grid.rows,
        tails: &grid.tails,
    };
    Output::render(format, &out, || grid_table(&grid), true)
}

fn recompute_tails(grid: &mut TransitionGrid) {
    grid.tails = grid
        .rows
        .iter()
        .map(|r| (1.0 - crate::numeric::compensated_sum(r)).max(0.0))
        .collect();
}

#[derive(Serialize)]
struct DmatOutput<'a> {
    channel: ChannelSpec,
    descriptor: BandDescriptor,
    k: usize,
    stochasticity: &'a StochasticityReport,
    /// Dense `D^k`, rows first; omitted above the dense export limit.
    matrix: Option<&'a Vec<Vec<f64>>>,
}

fn dmat(format: Format, spec: &ChannelSpec, dim: usize, k: usize, tol: f64) -> Result<Output, Failure> {
    let params = spec.params();
    let d = build_ladder(&params, dim);
    let report = check_column_stochastic(&d, tol);
    let dense = (dim <= DENSE_EXPORT_MAX_DIM).then(|| power_dense(&params, dim, k));
    let ok = report.ok;
    if format == Format::Csv && dense.is_none() {
        let mut output = Output::render(Format::Json, &d.descriptor(), Table::empty, ok)?;
        output.notes.push(format!(
            "dim {dim} exceeds {DENSE_EXPORT_MAX_DIM}; wrote the JSON band descriptor"
        ));
        return Ok(output);
    }
    let table = || match (k, ladder_table(&d)) {
        (1, Some(t)) => t,
        _ => {
            let mut t = Table::new((0..dim).map(|l| l.to_string()));
            for row in dense.as_deref().unwrap_or_default() {
                t.push(row.iter().map(|v| format_g17(*v)).collect());
            }
            t
        }
    };
    let out = DmatOutput {
        channel: *spec,
        descriptor: d.descriptor(),
        k,
        stochasticity: &report,
        matrix: dense.as_ref(),
    };
    Output::render(format, &out, table, ok)
}

/// Dense `D^k` truncated to `dim x dim`, built column by column.
fn power_dense(params: &ChannelParams, dim: usize, k: usize) -> Vec<Vec<f64>> {
    let columns: Vec<Vec<f64>> = (0..dim)
        .map(|l| {
            apply_ladder_power_len(params, k, &FockDiagonalState::fock(l), dim)
                .weights()
                .to_vec()
        })
        .collect();
    (0..dim).map(|r| columns.iter().map(|c| c[r]).collect()).collect()
}

#[derive(Debug, Deserialize)]
struct MajorizeInput {
    p: Vec<f64>,
    q: Vec<f64>,
    #[serde(default)]
    p_tail: f64,
    #[serde(default)]
    q_tail: f64,
}

#[derive(Serialize)]
struct MajorizeOutput {
    order: &'static str,
    #[serde(flatten)]
    verdict: MajorizationVerdict,
}

fn majorize(format: Format, stdin: &mut dyn Read, fock: bool, tol: f64) -> Result<Output, Failure> {
    let mut text = String::new();
    stdin.read_to_string(&mut text)?;
    let input: MajorizeInput =
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("cannot parse stdin as {{p, q}} JSON: {e}")))?;
    let p = FockDiagonalState::new(input.p, input.p_tail)?;
    let q = FockDiagonalState::new(input.q, input.q_tail)?;
    let verdict = if fock {
        fock_compare(&p, &q, tol)?
    } else {
        majorize_compare(&p, &q, tol)?
    };
    let out = MajorizeOutput {
        order: if fock { "fock" } else { "sorted" },
        verdict,
    };
    Output::render(
        format,
        &out,
        || {
            let mut t = Table::new(["relation", "worst_slack", "at_index"]);
            t.push(verdict_row(&verdict));
            t
        },
        verdict.relation.left_dominates(),
    )
}

#[derive(Serialize)]
struct SeededOutput<T: Serialize> {
    seed: u64,
    #[serde(flatten)]
    report: T,
}

#[allow(clippy::too_many_arguments)]
fn mixture(
    format: Format,
    spec: &ChannelSpec,
    mode: MixtureMode,
    weights: &[f64],
    k: usize,
    seed: u64,
    pairs: usize,
    tol: f64,
) -> Result<Output, Failure> {
    match mode {
        MixtureMode::Shift | MixtureMode::Lowest => {
            let check = if mode == MixtureMode::Shift {
                mixture_shift_check(spec, weights, k, tol)?
            } else {
                mixture_vs_lowest_fock(spec, weights, k, tol)?
            };
            let ok = check.holds(WITNESS_TOL);
            Output::render(
                format,
                &check,
                || {
                    let mut kv = vec![
                        ("k", check.k.to_string()),
                        ("relation", relation_name(&check.verdict)),
                        ("worst_slack", format_g17(check.verdict.worst_slack)),
                        ("witness_error", format_g17(check.witness_error)),
                    ];
                    if let Some(c) = check.column {
                        kv.push(("column_sum", format_g17(c.sum)));
                    }
                    key_values(kv)
                },
                ok,
            )
        }
        MixtureMode::Random => {
            let report = mixture_property_suite(spec, pairs, k, seed)?;
            let ok = report.pass;
            Output::render(
                format,
                &report,
                || {
                    key_values([
                        ("seed", report.seed.to_string()),
                        ("draws", report.shift.draws.to_string()),
                        ("shift_failures", report.shift.failures.to_string()),
                        ("lowest_fock_failures", report.lowest_fock.failures.to_string()),
                        ("pass", report.pass.to_string()),
                    ])
                },
                ok,
            )
        }
        MixtureMode::Counterexample => {
            let corpus = seeded_corpus(seed, pairs);
            let report = counterexample_search(spec, &corpus, tol)?;
            let ok = report.fock_preserved(tol);
            let table = || {
                let mut t = Table::new(["label", "kind", "relation", "worst_slack", "at_index"]);
                let groups = [
                    ("energy_order", &report.energy_witnesses),
                    ("fock_order", &report.fock_witnesses),
                    ("fock_not_preserved", &report.fock_preservation_failures),
                ];
                for (kind, findings) in groups {
                    for f in findings {
                        let mut row = vec![f.label.clone(), kind.to_string()];
                        row.extend(verdict_row(&f.output));
                        t.push(row);
                    }
                }
                t
            };
            Output::render(format, &SeededOutput { seed, report: &report }, table, ok)
        }
    }
}

#[derive(Serialize)]
struct LimitPoint {
    eps: f64,
    params: ChannelParams,
    error: f64,
}

#[derive(Serialize)]
struct LimitRouteOutput {
    route: LimitRoute,
    points: Vec<LimitPoint>,
    /// Ratio of successive errors.
    ratios: Vec<f64>,
}

#[derive(Serialize)]
struct LimitOutput {
    n: f64,
    target: ChannelParams,
    routes: Vec<LimitRouteOutput>,
}

fn limit(format: Format, n: f64, eps: &[f64], route: Option<RouteArg>) -> Result<Output, Failure> {
    let target = ChannelSpec::additive_noise(n)?.params();
    let routes: Vec<LimitRoute> = match route {
        Some(r) => vec![r.into()],
        None => vec![LimitRoute::ViaLoss, LimitRoute::ViaAmp],
    };
    let mut out = LimitOutput {
        n,
        target,
        routes: Vec::new(),
    };
    for route in routes {
        let points = eps
            .iter()
            .map(|&e| {
                let params = noise_limit_params(n, e, route)?;
                Ok(LimitPoint {
                    eps: e,
                    error: params.max_abs_diff(&target),
                    params,
                })
            })
            .collect::<Result<Vec<_>, Error>>()?;
        let ratios = points.windows(2).map(|w| w[1].error / w[0].error).collect();
        out.routes.push(LimitRouteOutput { route, points, ratios });
    }
    Output::render(
        format,
        &out,
        || {
            let mut t = Table::new(["route", "eps", "alpha", "beta", "gamma", "chi", "error"]);
            for r in &out.routes {
                let name = if r.route == LimitRoute::ViaLoss { "loss" } else { "amp" };
                for p in &r.points {
                    t.push(vec![
                        name.to_string(),
                        format_g17(p.eps),
                        format_g17(p.params.alpha),
                        format_g17(p.params.beta),
                        format_g17(p.params.gamma),
                        format_g17(p.params.chi),
                        format_g17(p.error),
                    ]);
                }
            }
            t
        },
        true,
    )
}

fn suite(format: Format, only: &[u8], sequential: bool, stderr: &mut dyn Write) -> Result<Output, Failure> {
    if let Some(bad) = only.iter().find(|id| !CRITERIA.iter().any(|(n, _)| n == *id)) {
        return Err(Failure::Usage(format!("no acceptance criterion numbered {bad}")));
    }
    let exec = if sequential { Exec::Sequential } else { Exec::default() };
    let mut outcomes: Vec<CriterionOutcome> = Vec::new();
    for (id, _) in CRITERIA {
        if only.is_empty() || only.contains(&id) {
            let outcome = run_criterion(id, exec);
            writeln!(stderr, "{outcome}")?;
            outcomes.push(outcome);
        }
    }
    let ok = outcomes.iter().all(|o| o.pass);
    Output::render(
        format,
        &outcomes,
        || {
            let mut t = Table::new(["id", "pass", "seconds", "title", "detail"]);
            for o in &outcomes {
                t.push(vec![
                    o.id.to_string(),
                    o.pass.to_string(),
                    format_g17(o.seconds),
                    o.title.clone(),
                    o.detail.clone(),
                ]);
            }
            t
        },
        ok,
    )
}

/// Subcommand names as clap sees them.
pub fn subcommand_names() -> Vec<String> {
    Cli::command()
        .get_subcommands()
        .map(|c| c.get_name().to_string())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn run_str(args: &[&str], stdin: &str) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("fock-ladder").chain(args.iter().copied());
        let code = run(argv, &mut stdin.as_bytes(), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn every_operation_has_exactly_one_subcommand() {
        let names: BTreeSet<String> = subcommand_names().into_iter().collect();
        let mut seen = BTreeSet::new();
        for (op, cmd) in OPERATIONS {
            assert!(seen.insert(*op), "{op} listed twice");
            assert!(names.contains(*cmd), "{op} maps to unknown subcommand {cmd}");
        }
        let used: BTreeSet<String> = OPERATIONS.iter().map(|(_, c)| c.to_string()).collect();
        assert_eq!(used, names, "every subcommand exposes some operation");
    }

    #[test]
    fn params_example() {
        let (code, out, _) = run_str(&["params", "--family", "lossy", "--eta", "0.5", "--N", "1"], "");
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!((v["alpha"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((v["beta"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(v["gamma"].as_f64().unwrap().abs() < 1e-15);
        assert!((v["nu"].as_f64().unwrap() - 2.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn usage_and_domain_errors_exit_2() {
        assert_eq!(run_str(&["params", "--family", "lossy", "--eta", "1.5"], "").0, 2);
        assert_eq!(run_str(&["params", "--family", "warp", "--eta", "0.5"], "").0, 2);
        assert_eq!(run_str(&["frobnicate"], "").0, 2);
        assert_eq!(run_str(&["majorize"], "not json").0, 2);
        assert_eq!(run_str(&["--help"], "").0, 0);
    }

    #[test]
    fn majorize_identical_is_equivalent() {
        let (code, out, _) = run_str(&["majorize"], r#"{"p":[0.5,0.25,0.25],"q":[0.25,0.5,0.25]}"#);
        assert_eq!(code, 0);
        assert!(out.contains("\"relation\":\"equivalent\""), "{out}");
        let (code, _, _) = run_str(&["majorize"], r#"{"p":[0.5,0.5],"q":[1.0]}"#);
        assert_eq!(code, 1);
    }
}
