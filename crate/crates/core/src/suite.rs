//! The acceptance battery, shared by the `suite` subcommand and the
//! acceptance test target.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::channel::{noise_limit_params, ChannelSpec, LimitRoute};
use crate::entropy::chain_check;
use crate::error::Result;
use crate::experiments::{
    conjecture_scan_with, counterexample_search, ladder_verify_with, mixture_property_suite, passive_chain,
    seeded_corpus, standard_grid, BinaryPattern, ConjectureOptions, LadderOptions, DEFAULT_SEED,
};
use crate::majorization::{apply_ladder_power_len, build_ladder, check_column_stochastic, DEFAULT_TOL};
use crate::numeric::max_abs_diff;
use crate::par::Exec;
use crate::transition::{analytic_special, grid_recurrence, row_multinomial, series_block, Expansion, SpecialLaw};

pub const CRITERIA: [(u8, &str); 10] = [
    (1, "majorization ladder on the standard grid"),
    (2, "recurrence, closed form and series agree"),
    (3, "binomial, negative-binomial and vacuum rows"),
    (4, "ladder matrix is a column-stochastic witness"),
    (5, "rows preserve the trace"),
    (6, "entropy chains are non-decreasing"),
    (7, "additive-noise limit converges linearly"),
    (8, "mixture properties on seeded draws"),
    (9, "binary-pattern conjecture scan"),
    (10, "failed generalizations and Fock-order preservation"),
];

const LADDER_I_MAX: usize = 30;
const ORACLE_I_MAX: usize = 40;
const TAIL_TOL: f64 = 1e-10;
const ORACLE_TOL: f64 = 1e-12;
const WITNESS_DIM: usize = 200;
const POWER_TOL: f64 = 1e-11;
const MIXTURE_DRAWS: usize = 100;
const MAX_SHIFT: usize = 5;
const PATTERN_LENGTH: usize = 10;
const CORPUS_RANDOM_PAIRS: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub title: String,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

impl std::fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "criterion {:>2} {} {:<52} {:>7.2}s  {}",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.title,
            self.seconds,
            self.detail
        )
    }
}

/// Runs one criterion by number (1 to 10).
pub fn run_criterion(id: u8, exec: Exec) -> CriterionOutcome {
    let title = CRITERIA
        .iter()
        .find(|(n, _)| *n == id)
        .map_or("unknown criterion", |(_, t)| t)
        .to_string();
    let start = Instant::now();
    let result = match id {
        1 => ladder(exec),
        2 => oracles(exec),
        3 => special_rows(exec),
        4 => stochastic_witness(exec),
        5 => trace(exec),
        6 => entropy_chains(exec),
        7 => noise_limit(),
        8 => mixtures(exec),
        9 => conjecture(exec),
        10 => counterexamples(exec),
        _ => Ok((false, format!("no criterion numbered {id}"))),
    };
    let (pass, detail) = result.unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionOutcome {
        id,
        title,
        pass,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

pub fn run_all(exec: Exec) -> Vec<CriterionOutcome> {
    CRITERIA.iter().map(|(id, _)| run_criterion(*id, exec)).collect()
}

type Check = Result<(bool, String)>;

fn per_channel<R: Send>(exec: Exec, f: impl Fn(&ChannelSpec) -> Result<R> + Sync + Send) -> Result<Vec<R>> {
    exec.map(&standard_grid(), f).into_iter().collect()
}

fn worst(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

fn ladder(exec: Exec) -> Check {
    let opts = LadderOptions {
        tol: DEFAULT_TOL,
        tail_tol: TAIL_TOL,
    };
    let reports = per_channel(exec, |s| ladder_verify_with(s, LADDER_I_MAX, &opts))?;
    let failing: Vec<String> = reports
        .iter()
        .filter(|r| !r.pass || r.worst_slack < -DEFAULT_TOL)
        .map(|r| r.channel.to_string())
        .collect();
    let slack = reports.iter().map(|r| r.worst_slack).fold(f64::INFINITY, f64::min);
    Ok((
        failing.is_empty(),
        format!(
            "{} channels, worst slack {slack:.3e}, failing {failing:?}",
            reports.len()
        ),
    ))
}

fn oracles(exec: Exec) -> Check {
    let errors = per_channel(exec, |s| {
        let p = s.params();
        let grid = grid_recurrence(&p, ORACLE_I_MAX, TAIL_TOL)?;
        let series = series_block(&p, ORACLE_I_MAX, grid.n_max, Expansion::for_params(&p));
        let mut err: f64 = 0.0;
        for (i, ser) in series.iter().enumerate() {
            let closed = row_multinomial(&p, i, grid.n_max)?;
            err = err
                .max(max_abs_diff(grid.row(i), &closed))
                .max(max_abs_diff(grid.row(i), ser))
                .max(max_abs_diff(&closed, ser));
        }
        Ok(err)
    })?;
    let e = worst(errors);
    Ok((e <= ORACLE_TOL, format!("max pairwise difference {e:.3e}")))
}

fn special_rows(exec: Exec) -> Check {
    let found = per_channel(exec, |s| {
        let grid = grid_recurrence(&s.params(), LADDER_I_MAX, TAIL_TOL)?;
        let mut out = Vec::new();
        for i in 0..=LADDER_I_MAX {
            if let Some(row) = analytic_special(s, i, grid.n_max) {
                out.push((row.law, max_abs_diff(grid.row(i), &row.values)));
            }
        }
        Ok(out)
    })?;
    let all: Vec<(SpecialLaw, f64)> = found.into_iter().flatten().collect();
    let count = |law| all.iter().filter(|(l, _)| *l == law).count();
    let covered = [
        SpecialLaw::Binomial,
        SpecialLaw::NegativeBinomial,
        SpecialLaw::Geometric,
    ]
    .iter()
    .all(|&l| count(l) > 0);
    let e = worst(all.iter().map(|(_, e)| *e));
    Ok((
        covered && e <= ORACLE_TOL,
        format!(
            "{} binomial, {} negative-binomial, {} geometric rows; max error {e:.3e}",
            count(SpecialLaw::Binomial),
            count(SpecialLaw::NegativeBinomial),
            count(SpecialLaw::Geometric)
        ),
    ))
}

struct WitnessStats {
    report_ok: bool,
    interior: usize,
    step_error: f64,
    power_error: f64,
}

fn stochastic_witness(exec: Exec) -> Check {
    let stats = per_channel(exec, |s| {
        let p = s.params();
        let d = build_ladder(&p, WITNESS_DIM);
        let report = check_column_stochastic(&d, ORACLE_TOL);
        let grid = grid_recurrence(&p, LADDER_I_MAX, TAIL_TOL)?;
        let len = WITNESS_DIM.min(grid.n_max + 1);
        let step_error =
            worst((0..LADDER_I_MAX).map(|i| max_abs_diff(&d.apply(&grid.row(i)[..len], len), &grid.row(i + 1)[..len])));
        let vacuum = grid.state(0);
        let power_error = worst((0..=LADDER_I_MAX).map(|i| {
            let image = apply_ladder_power_len(&p, i, &vacuum, len);
            max_abs_diff(&image.weights()[..len], &grid.row(i)[..len])
        }));
        Ok(WitnessStats {
            report_ok: report.ok,
            interior: report.interior_columns,
            step_error,
            power_error,
        })
    })?;
    let reports_ok = stats.iter().all(|s| s.report_ok);
    let step = worst(stats.iter().map(|s| s.step_error));
    let power = worst(stats.iter().map(|s| s.power_error));
    let min_interior = stats.iter().map(|s| s.interior).min().unwrap_or(0);
    Ok((
        reports_ok && step <= ORACLE_TOL && power <= POWER_TOL,
        format!(
            "entries/columns/rows ok: {reports_ok}, fewest interior columns {min_interior}, \
             step error {step:.3e}, power error {power:.3e}"
        ),
    ))
}

fn trace(exec: Exec) -> Check {
    let sums = per_channel(exec, |s| {
        let grid = grid_recurrence(&s.params(), ORACLE_I_MAX, TAIL_TOL)?;
        let excess = worst(grid.rows.iter().map(|r| r.iter().sum::<f64>() - 1.0));
        Ok((grid.worst_tail(), excess))
    })?;
    let tail = worst(sums.iter().map(|s| s.0));
    let excess = worst(sums.iter().map(|s| s.1));
    Ok((
        tail <= TAIL_TOL && excess <= ORACLE_TOL,
        format!("worst tail {tail:.3e}, worst excess over one {excess:.3e}"),
    ))
}

fn entropy_chains(exec: Exec) -> Check {
    let orders = [None, Some(0.5), Some(2.0), Some(f64::INFINITY)];
    let reports = per_channel(exec, |s| {
        let grid = grid_recurrence(&s.params(), LADDER_I_MAX, TAIL_TOL)?;
        orders
            .iter()
            .map(|&o| chain_check(&grid, o))
            .collect::<Result<Vec<_>>>()
    })?;
    let all: Vec<_> = reports.into_iter().flatten().collect();
    let bad = all.iter().filter(|r| !r.monotone).count();
    let violation = all.iter().map(|r| r.worst_violation).fold(f64::NEG_INFINITY, f64::max);
    Ok((
        bad == 0,
        format!(
            "{} chains, {bad} non-monotone, largest decrease {violation:.3e}",
            all.len()
        ),
    ))
}

fn noise_limit() -> Check {
    let epsilons = [1e-2, 5e-3, 2.5e-3];
    let mut ratios = Vec::new();
    for n in [0.5, 1.0, 2.0] {
        let target = ChannelSpec::additive_noise(n)?.params();
        for route in [LimitRoute::ViaLoss, LimitRoute::ViaAmp] {
            let errors = epsilons
                .iter()
                .map(|&eps| Ok(noise_limit_params(n, eps, route)?.max_abs_diff(&target)))
                .collect::<Result<Vec<f64>>>()?;
            ratios.extend(errors.windows(2).map(|w| w[1] / w[0]));
        }
    }
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((
        lo >= 0.4 && hi <= 0.6,
        format!("{} error ratios in [{lo:.4}, {hi:.4}]", ratios.len()),
    ))
}

fn mixtures(exec: Exec) -> Check {
    let reports = per_channel(exec, |s| {
        mixture_property_suite(s, MIXTURE_DRAWS, MAX_SHIFT, DEFAULT_SEED)
    })?;
    let failures: usize = reports.iter().map(|r| r.shift.failures + r.lowest_fock.failures).sum();
    let witness = worst(
        reports
            .iter()
            .flat_map(|r| [r.shift.max_witness_error, r.lowest_fock.max_witness_error]),
    );
    let column = worst(reports.iter().map(|r| r.lowest_fock.max_column_deviation));
    Ok((
        failures == 0,
        format!(
            "{} draws per property per channel (seed {DEFAULT_SEED}), {failures} failures, \
             witness error {witness:.3e}, column deviation {column:.3e}",
            MIXTURE_DRAWS
        ),
    ))
}

fn conjecture(exec: Exec) -> Check {
    // the parallelism lives inside each scan
    let opts = ConjectureOptions {
        length: PATTERN_LENGTH,
        exec,
        ..Default::default()
    };
    let reports = standard_grid()
        .iter()
        .map(|s| conjecture_scan_with(s, &opts))
        .collect::<Result<Vec<_>>>()?;
    let swaps: usize = reports.iter().map(|r| r.swap_checks).sum();
    let swap_bad: usize = reports.iter().map(|r| r.swap_violation_count).sum();
    let path_bad: usize = reports.iter().map(|r| r.path_violation_count).sum();
    let energy_ok = reports.iter().all(|r| r.path_energy_ok);

    let reference: BinaryPattern = "101001".parse()?;
    let chain = passive_chain(&ChannelSpec::lossy(0.5, 1.0)?, &reference, DEFAULT_TOL)?;
    let path: Vec<String> = chain.path.iter().map(ToString::to_string).collect();
    let reference_ok = chain.pass && path == ["101001", "101010", "101100", "111000"];
    Ok((
        swap_bad == 0 && path_bad == 0 && energy_ok && reference_ok,
        format!(
            "{swaps} swap comparisons, {swap_bad} swap and {path_bad} path violations; \
             reference chain {} ok: {reference_ok}",
            path.join(" -> ")
        ),
    ))
}

fn counterexamples(exec: Exec) -> Check {
    let corpus = seeded_corpus(DEFAULT_SEED, CORPUS_RANDOM_PAIRS);
    let reports = per_channel(exec, |s| counterexample_search(s, &corpus, DEFAULT_TOL))?;
    let with_witness = reports.iter().filter(|r| !r.energy_witnesses.is_empty()).count();
    let incomparable = reports
        .iter()
        .flat_map(|r| &r.energy_witnesses)
        .filter(|f| f.output.relation == crate::majorization::Relation::Incomparable)
        .count();
    let preserved = reports.iter().all(|r| r.fock_preserved(DEFAULT_TOL));
    let fock_slack = reports.iter().map(|r| r.worst_fock_slack).fold(f64::INFINITY, f64::min);
    let fock_witnesses: usize = reports.iter().map(|r| r.fock_witnesses.len()).sum();
    Ok((
        incomparable > 0 && preserved,
        format!(
            "{incomparable} incomparable energy-ordered pairs on {with_witness} channels; \
             Fock order preserved: {preserved} (worst slack {fock_slack:.3e}); \
             {fock_witnesses} Fock-ordered pairs whose outputs are not majorization-ordered"
        ),
    ))
}
