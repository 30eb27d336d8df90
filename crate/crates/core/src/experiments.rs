//! Numerical checks of the majorization ladder and its consequences.
//!
//! * [`ladder_verify`]: consecutive Fock inputs give majorization-ordered
//!   outputs, with the ladder matrix as witness.
//! * [`mixture_shift_check`] and [`mixture_vs_lowest_fock`]: the two
//!   mixture properties implied by the ladder.
//! * [`conjecture_scan`]: exhaustive scan of uniform binary mixtures against
//!   their partially passive rearrangements.
//! * [`counterexample_search`]: input orderings that do *not* carry over to
//!   output majorization, plus the Fock order, which does.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelSpec;
use crate::error::{Error, Result};
use crate::majorization::{
    apply_ladder_power_len, apply_power_combination, build_ladder, combination_column, compare_prefixes, fock_compare,
    majorize_compare, sorted_desc, CombinationColumn, MajorizationVerdict, Relation, DEFAULT_TOL,
};
use crate::numeric::{max_abs_diff, prefix_sums};
use crate::par::Exec;
use crate::state::FockDiagonalState;
use crate::transition::{grid_recurrence, TransitionGrid, DEFAULT_TAIL_TOL};

/// Witness identities must hold to this accuracy.
pub const WITNESS_TOL: f64 = 1e-12;
pub const DEFAULT_SEED: u64 = 20_240_601;
/// Longest binary pattern accepted by the conjecture scan.
pub const MAX_PATTERN_LENGTH: usize = 16;
/// Violations kept verbatim in a report; the rest are only counted.
const MAX_LISTED: usize = 64;
/// Sorted prefix sums are cached for all patterns below this many floats.
const CACHE_BUDGET: usize = 1 << 24;

/// The 36 channels used by every sweep: loss, amplifier and conjugate
/// amplifier over noisy and noiseless environments, plus additive noise.
pub fn standard_grid() -> Vec<ChannelSpec> {
    let ns = [0.0, 0.5, 2.0];
    let mut specs = Vec::with_capacity(36);
    for eta in [0.1, 0.3, 0.5, 0.7, 0.9] {
        for n in ns {
            specs.push(ChannelSpec::Lossy { eta, thermal_n: n });
        }
    }
    for gain in [1.2, 2.0, 5.0] {
        for n in ns {
            specs.push(ChannelSpec::Amplifier { gain, thermal_n: n });
        }
    }
    for gain in [1.2, 2.0, 5.0] {
        for n in ns {
            specs.push(ChannelSpec::ConjugateAmplifier { gain, thermal_n: n });
        }
    }
    for added_n in [0.5, 1.0, 2.0] {
        specs.push(ChannelSpec::AdditiveNoise { added_n });
    }
    specs
}

/// Output of a Fock-diagonal input: `sum_j rho_j t^(j)`.
pub fn channel_output(grid: &TransitionGrid, input: &FockDiagonalState) -> Result<FockDiagonalState> {
    if input.tail() > 0.0 {
        return Err(Error::Invalid("channel inputs must carry no truncated mass".into()));
    }
    grid.mixture_output(input.weights(), 0)
}

// ---------------------------------------------------------------------------
// Ladder

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderOptions {
    pub tol: f64,
    pub tail_tol: f64,
}

impl Default for LadderOptions {
    fn default() -> Self {
        LadderOptions {
            tol: DEFAULT_TOL,
            tail_tol: DEFAULT_TAIL_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderStep {
    /// Compares `t^(i)` with `t^(i+1)`.
    pub i: usize,
    pub verdict: MajorizationVerdict,
    /// `max |D t^(i) - t^(i+1)|`.
    pub witness_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderReport {
    pub channel: ChannelSpec,
    pub i_max: usize,
    pub n_max: usize,
    pub worst_tail: f64,
    pub steps: Vec<LadderStep>,
    pub worst_slack: f64,
    pub max_witness_error: f64,
    pub witness_ok: bool,
    /// Every step is `LeftMajorizes` or `Equivalent`.
    pub pass: bool,
}

/// Checks `M(|i><i|) ≻ M(|i+1><i+1|)` for `i < i_max`.
pub fn ladder_verify(spec: &ChannelSpec, i_max: usize, tol: f64) -> Result<LadderReport> {
    ladder_verify_with(
        spec,
        i_max,
        &LadderOptions {
            tol,
            ..Default::default()
        },
    )
}

pub fn ladder_verify_with(spec: &ChannelSpec, i_max: usize, opts: &LadderOptions) -> Result<LadderReport> {
    let grid = grid_recurrence(&spec.params(), i_max, opts.tail_tol)?;
    ladder_on_grid(spec, &grid, opts.tol)
}

fn ladder_on_grid(spec: &ChannelSpec, grid: &TransitionGrid, tol: f64) -> Result<LadderReport> {
    let d = build_ladder(&grid.params, grid.n_max + 1);
    let mut steps = Vec::with_capacity(grid.i_max);
    for i in 0..grid.i_max {
        let verdict = majorize_compare(&grid.state(i), &grid.state(i + 1), tol)?;
        let witness_error = max_abs_diff(&d.apply(grid.row(i), grid.n_max + 1), grid.row(i + 1));
        steps.push(LadderStep {
            i,
            verdict,
            witness_error,
        });
    }
    let worst_slack = steps
        .iter()
        .map(|s| s.verdict.worst_slack)
        .fold(f64::INFINITY, f64::min);
    let max_witness_error = steps.iter().map(|s| s.witness_error).fold(0.0, f64::max);
    Ok(LadderReport {
        channel: *spec,
        i_max: grid.i_max,
        n_max: grid.n_max,
        worst_tail: grid.worst_tail(),
        pass: steps.iter().all(|s| s.verdict.relation.left_dominates()),
        worst_slack: if steps.is_empty() { 0.0 } else { worst_slack },
        witness_ok: max_witness_error <= WITNESS_TOL,
        max_witness_error,
        steps,
    })
}

// ---------------------------------------------------------------------------
// Mixtures

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureCheck {
    pub weights: Vec<f64>,
    pub k: usize,
    pub verdict: MajorizationVerdict,
    /// Deviation between the operator image and the directly computed output.
    pub witness_error: f64,
    /// Column mass of `sum_i c_i D^i` (lowest-Fock comparison only).
    pub column: Option<CombinationColumn>,
}

impl MixtureCheck {
    pub fn holds(&self, tol: f64) -> bool {
        self.verdict.relation.left_dominates()
            && self.witness_error <= tol
            && self
                .column
                .is_none_or(|c| (c.sum - 1.0).abs() <= tol + c.remainder_bound)
    }
}

fn mixture_grid(spec: &ChannelSpec, levels: usize) -> Result<TransitionGrid> {
    grid_recurrence(&spec.params(), levels.saturating_sub(1), DEFAULT_TAIL_TOL)
}

/// Compares the outputs of `sum_i c_i |i><i|` and of its `k`-step shift
/// `sum_i c_i |i+k><i+k|`, with `q = D^k p` as witness.
pub fn mixture_shift_check(spec: &ChannelSpec, c: &[f64], k: usize, tol: f64) -> Result<MixtureCheck> {
    let grid = mixture_grid(spec, c.len() + k)?;
    mixture_shift_on_grid(&grid, c, k, tol)
}

pub fn mixture_shift_on_grid(grid: &TransitionGrid, c: &[f64], k: usize, tol: f64) -> Result<MixtureCheck> {
    let p = grid.mixture_output(c, 0)?;
    let q = grid.mixture_output(c, k)?;
    let image = apply_ladder_power_len(&grid.params, k, &p, q.len());
    Ok(MixtureCheck {
        weights: c.to_vec(),
        k,
        verdict: majorize_compare(&p, &q, tol)?,
        witness_error: max_abs_diff(image.weights(), q.weights()),
        column: None,
    })
}

/// Compares the output of `|k><k|` with that of `sum_i c_i |i+k><i+k|`,
/// with `q = (sum_i c_i D^i) t^(k)` as witness.
pub fn mixture_vs_lowest_fock(spec: &ChannelSpec, c: &[f64], k: usize, tol: f64) -> Result<MixtureCheck> {
    let grid = mixture_grid(spec, c.len() + k)?;
    mixture_lowest_on_grid(&grid, c, k, tol)
}

pub fn mixture_lowest_on_grid(grid: &TransitionGrid, c: &[f64], k: usize, tol: f64) -> Result<MixtureCheck> {
    let q = grid.mixture_output(c, k)?;
    if k > grid.i_max {
        return Err(Error::Invalid(format!("Fock level {k} is beyond the grid")));
    }
    let p = grid.state(k);
    let image = apply_power_combination(&grid.params, c, &p, q.len())?;
    Ok(MixtureCheck {
        weights: c.to_vec(),
        k,
        verdict: majorize_compare(&p, &q, tol)?,
        witness_error: max_abs_diff(image.weights(), q.weights()),
        column: Some(combination_column(&grid.params, c, 1e-15)?),
    })
}

/// Random probability vector of length `1..=max_len`.
pub fn random_weights<R: Rng>(rng: &mut R, max_len: usize) -> Vec<f64> {
    let len = rng.random_range(1..=max_len.max(1));
    let raw: Vec<f64> = (0..len).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropertyStats {
    pub draws: usize,
    pub failures: usize,
    pub worst_slack: f64,
    pub max_witness_error: f64,
    pub max_column_deviation: f64,
}

impl PropertyStats {
    fn new() -> Self {
        PropertyStats {
            draws: 0,
            failures: 0,
            worst_slack: f64::INFINITY,
            max_witness_error: 0.0,
            max_column_deviation: 0.0,
        }
    }

    fn record(&mut self, check: &MixtureCheck, tol: f64) {
        self.draws += 1;
        if !check.holds(tol) {
            self.failures += 1;
        }
        if check.verdict.relation == Relation::LeftMajorizes {
            self.worst_slack = self.worst_slack.min(check.verdict.worst_slack);
        }
        self.max_witness_error = self.max_witness_error.max(check.witness_error);
        if let Some(c) = check.column {
            self.max_column_deviation = self.max_column_deviation.max((c.sum - 1.0).abs());
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub channel: ChannelSpec,
    pub seed: u64,
    pub max_shift: usize,
    pub shift: PropertyStats,
    pub lowest_fock: PropertyStats,
    pub pass: bool,
}

/// Both mixture properties on `draws` seeded random `(c, k)` draws with
/// `len(c) <= 6` and `k <= max_shift`.
pub fn mixture_property_suite(spec: &ChannelSpec, draws: usize, max_shift: usize, seed: u64) -> Result<PropertyReport> {
    const MAX_COMPONENTS: usize = 6;
    let grid = mixture_grid(spec, MAX_COMPONENTS + max_shift)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shift = PropertyStats::new();
    let mut lowest_fock = PropertyStats::new();
    for _ in 0..draws {
        let c = random_weights(&mut rng, MAX_COMPONENTS);
        let k = rng.random_range(0..=max_shift);
        shift.record(&mixture_shift_on_grid(&grid, &c, k, DEFAULT_TOL)?, WITNESS_TOL);
        lowest_fock.record(&mixture_lowest_on_grid(&grid, &c, k, DEFAULT_TOL)?, WITNESS_TOL);
    }
    Ok(PropertyReport {
        channel: *spec,
        seed,
        max_shift,
        pass: shift.failures == 0 && lowest_fock.failures == 0,
        shift,
        lowest_fock,
    })
}

// ---------------------------------------------------------------------------
// Binary patterns

/// Uniform mixture over the Fock levels marked by ones; level 0 first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct BinaryPattern {
    bits: Vec<bool>,
}

impl BinaryPattern {
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        if !bits.iter().any(|b| *b) {
            return Err(Error::Invalid("a binary pattern needs at least one 1".into()));
        }
        Ok(BinaryPattern { bits })
    }

    /// Bit `j` of `mask` marks level `j`.
    pub fn from_mask(mask: u32, length: usize) -> Result<Self> {
        Self::new((0..length).map(|j| mask >> j & 1 == 1).collect())
    }

    pub fn mask(&self) -> u32 {
        self.bits
            .iter()
            .enumerate()
            .fold(0, |m, (j, &b)| m | (u32::from(b) << j))
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// Mean photon number of the mixture.
    pub fn energy(&self) -> f64 {
        let total: usize = self.bits.iter().enumerate().filter(|(_, b)| **b).map(|(j, _)| j).sum();
        total as f64 / self.ones() as f64
    }

    pub fn state(&self) -> FockDiagonalState {
        let w = 1.0 / self.ones() as f64;
        let weights = self.bits.iter().map(|&b| if b { w } else { 0.0 }).collect();
        FockDiagonalState::from_parts(weights, 0.0)
    }

    /// All ones of `bits[from..]` come before its zeros.
    pub fn suffix_is_passive(&self, from: usize) -> bool {
        let suffix = &self.bits[from..];
        let ones = suffix.iter().filter(|b| **b).count();
        suffix[..ones].iter().all(|b| *b)
    }

    pub fn is_passive(&self) -> bool {
        self.suffix_is_passive(0)
    }

    /// Copy with `bits[from..]` rearranged so its ones come first.
    pub fn with_passive_suffix(&self, from: usize) -> Self {
        let mut bits = self.bits.clone();
        let ones = bits[from..].iter().filter(|b| **b).count();
        for (j, b) in bits[from..].iter_mut().enumerate() {
            *b = j < ones;
        }
        BinaryPattern { bits }
    }

    pub fn passive(&self) -> Self {
        self.with_passive_suffix(0)
    }

    /// From this pattern to its passive rearrangement, each step making the
    /// shortest non-passive suffix passive.
    pub fn passive_path(&self) -> Vec<BinaryPattern> {
        let mut path = vec![self.clone()];
        loop {
            let cur = path.last().expect("path starts non-empty");
            let Some(from) = (0..cur.len()).rev().find(|&s| !cur.suffix_is_passive(s)) else {
                return path;
            };
            let next = cur.with_passive_suffix(from);
            path.push(next);
        }
    }
}

impl fmt::Display for BinaryPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BinaryPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Invalid(format!("`{s}` is not a binary pattern"))),
            })
            .collect::<Result<Vec<bool>>>()?;
        Self::new(bits)
    }
}

impl TryFrom<String> for BinaryPattern {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<BinaryPattern> for String {
    fn from(p: BinaryPattern) -> String {
        p.to_string()
    }
}

// ---------------------------------------------------------------------------
// Conjecture scan

#[derive(Debug, Clone, PartialEq)]
pub struct ConjectureOptions {
    pub length: usize,
    pub tol: f64,
    pub tail_tol: f64,
    pub exec: Exec,
    /// Non-binary patterns drawn for the exploratory sub-scan.
    pub nonbinary_samples: usize,
    pub seed: u64,
}

impl Default for ConjectureOptions {
    fn default() -> Self {
        ConjectureOptions {
            length: 10,
            tol: DEFAULT_TOL,
            tail_tol: DEFAULT_TAIL_TOL,
            exec: Exec::default(),
            nonbinary_samples: 0,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjectureViolation {
    /// The pattern with the non-passive suffix.
    pub pattern: BinaryPattern,
    /// Index where the suffix starts.
    pub split: usize,
    /// Its partially passive counterpart, expected to majorize at the output.
    pub candidate: BinaryPattern,
    pub verdict: MajorizationVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjectureReport {
    pub channel: ChannelSpec,
    pub length: usize,
    pub patterns: usize,
    pub swap_checks: usize,
    pub swap_violation_count: usize,
    pub swap_violations: Vec<ConjectureViolation>,
    pub path_checks: usize,
    pub path_violation_count: usize,
    pub path_violations: Vec<ConjectureViolation>,
    /// Input energies strictly decrease along every passive path.
    pub path_energy_ok: bool,
    /// Smallest slack over all swap comparisons.
    pub worst_slack: f64,
    pub nonbinary: Option<NonBinaryReport>,
    pub pass: bool,
}

/// Descending-order prefix sums of one output, with its tail.
type SortedOutput = (Vec<f64>, f64);

/// Output prefix sums (descending order) and tail for each pattern.
struct OutputTable<'a> {
    grid: &'a TransitionGrid,
    length: usize,
    cache: Option<Vec<Option<SortedOutput>>>,
}

impl<'a> OutputTable<'a> {
    fn new(grid: &'a TransitionGrid, length: usize, exec: Exec) -> Self {
        let count = 1usize << length;
        let cache = (count * (grid.n_max + 1) <= CACHE_BUDGET).then(|| {
            exec.map_range(0..count, |mask| {
                (mask.count_ones() >= 2).then(|| Self::compute(grid, mask as u32, length))
            })
        });
        OutputTable { grid, length, cache }
    }

    fn compute(grid: &TransitionGrid, mask: u32, length: usize) -> SortedOutput {
        let ones: Vec<usize> = (0..length).filter(|j| mask >> j & 1 == 1).collect();
        let w = 1.0 / ones.len() as f64;
        let mut out = vec![0.0; grid.n_max + 1];
        let mut tail = 0.0;
        for &j in &ones {
            for (o, v) in out.iter_mut().zip(grid.row(j)) {
                *o += w * v;
            }
            tail += w * grid.tails[j];
        }
        (prefix_sums(&sorted_desc(out)), tail)
    }

    fn with<R>(&self, mask: u32, f: impl FnOnce(&[f64], f64) -> R) -> R {
        match self.cache.as_ref().and_then(|c| c[mask as usize].as_ref()) {
            Some((ps, tail)) => f(ps, *tail),
            None => {
                let (ps, tail) = Self::compute(self.grid, mask, self.length);
                f(&ps, tail)
            }
        }
    }

    /// Verdict of `out(left) ≻ out(right)`.
    fn compare(&self, left: u32, right: u32, tol: f64) -> MajorizationVerdict {
        self.with(left, |pl, tl| {
            self.with(right, |pr, tr| compare_prefixes(pl, pr, tol + tl + tr))
        })
    }
}

struct PatternOutcome {
    swap_checks: usize,
    swap_violations: Vec<ConjectureViolation>,
    path_checks: usize,
    path_violations: Vec<ConjectureViolation>,
    path_energy_ok: bool,
    worst_slack: f64,
}

fn scan_pattern(table: &OutputTable<'_>, pattern: &BinaryPattern, tol: f64) -> PatternOutcome {
    let mut out = PatternOutcome {
        swap_checks: 0,
        swap_violations: Vec::new(),
        path_checks: 0,
        path_violations: Vec::new(),
        path_energy_ok: true,
        worst_slack: f64::INFINITY,
    };
    let mask = pattern.mask();
    for split in 0..pattern.len() {
        if pattern.suffix_is_passive(split) {
            continue;
        }
        let candidate = pattern.with_passive_suffix(split);
        let verdict = table.compare(candidate.mask(), mask, tol);
        out.swap_checks += 1;
        out.worst_slack = out.worst_slack.min(verdict.worst_slack);
        if !verdict.relation.left_dominates() {
            out.swap_violations.push(ConjectureViolation {
                pattern: pattern.clone(),
                split,
                candidate,
                verdict,
            });
        }
    }
    let path = pattern.passive_path();
    for pair in path.windows(2) {
        let (from, to) = (&pair[0], &pair[1]);
        out.path_energy_ok &= to.energy() < from.energy();
        let verdict = table.compare(to.mask(), from.mask(), tol);
        out.path_checks += 1;
        if !verdict.relation.left_dominates() {
            let split = (0..from.len()).find(|&j| from.bits()[j] != to.bits()[j]).unwrap_or(0);
            out.path_violations.push(ConjectureViolation {
                pattern: from.clone(),
                split,
                candidate: to.clone(),
                verdict,
            });
        }
    }
    out
}

/// Scans every binary pattern of the given length with at least two ones.
pub fn conjecture_scan(spec: &ChannelSpec, length: usize, tol: f64) -> Result<ConjectureReport> {
    conjecture_scan_with(
        spec,
        &ConjectureOptions {
            length,
            tol,
            ..Default::default()
        },
    )
}

pub fn conjecture_scan_with(spec: &ChannelSpec, opts: &ConjectureOptions) -> Result<ConjectureReport> {
    if !(2..=MAX_PATTERN_LENGTH).contains(&opts.length) {
        return Err(Error::Invalid(format!(
            "pattern length must lie in 2..={MAX_PATTERN_LENGTH}, got {}",
            opts.length
        )));
    }
    let grid = grid_recurrence(&spec.params(), opts.length - 1, opts.tail_tol)?;
    let table = OutputTable::new(&grid, opts.length, opts.exec);
    let masks: Vec<u32> = (0..1u32 << opts.length).filter(|m| m.count_ones() >= 2).collect();
    let outcomes = opts.exec.map(&masks, |&mask| {
        let pattern = BinaryPattern::from_mask(mask, opts.length).expect("mask has ones");
        scan_pattern(&table, &pattern, opts.tol)
    });

    let mut swap_violations = Vec::new();
    let mut path_violations = Vec::new();
    let (mut swap_checks, mut path_checks, mut swap_count, mut path_count) = (0, 0, 0, 0);
    let mut path_energy_ok = true;
    let mut worst_slack = f64::INFINITY;
    for o in outcomes {
        swap_checks += o.swap_checks;
        path_checks += o.path_checks;
        swap_count += o.swap_violations.len();
        path_count += o.path_violations.len();
        path_energy_ok &= o.path_energy_ok;
        worst_slack = worst_slack.min(o.worst_slack);
        let room = MAX_LISTED.saturating_sub(swap_violations.len());
        swap_violations.extend(o.swap_violations.into_iter().take(room));
        let room = MAX_LISTED.saturating_sub(path_violations.len());
        path_violations.extend(o.path_violations.into_iter().take(room));
    }
    let nonbinary = (opts.nonbinary_samples > 0)
        .then(|| nonbinary_scan(&grid, opts.length, opts.nonbinary_samples, opts.seed, opts.tol))
        .transpose()?;
    Ok(ConjectureReport {
        channel: *spec,
        length: opts.length,
        patterns: masks.len(),
        swap_checks,
        swap_violation_count: swap_count,
        swap_violations,
        path_checks,
        path_violation_count: path_count,
        path_violations,
        path_energy_ok,
        worst_slack,
        nonbinary,
        pass: swap_count == 0 && path_count == 0 && path_energy_ok,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassiveChainReport {
    pub channel: ChannelSpec,
    pub path: Vec<BinaryPattern>,
    pub energies: Vec<f64>,
    /// `steps[j]` compares the output of `path[j + 1]` (left) with that of `path[j]`.
    pub steps: Vec<MajorizationVerdict>,
    pub pass: bool,
}

/// Output majorization along the passive path of one pattern.
pub fn passive_chain(spec: &ChannelSpec, pattern: &BinaryPattern, tol: f64) -> Result<PassiveChainReport> {
    let grid = grid_recurrence(&spec.params(), pattern.len().saturating_sub(1), DEFAULT_TAIL_TOL)?;
    let path = pattern.passive_path();
    let outputs = path
        .iter()
        .map(|p| channel_output(&grid, &p.state()))
        .collect::<Result<Vec<_>>>()?;
    let steps = outputs
        .windows(2)
        .map(|w| majorize_compare(&w[1], &w[0], tol))
        .collect::<Result<Vec<_>>>()?;
    let energies: Vec<f64> = path.iter().map(BinaryPattern::energy).collect();
    let pass = steps.iter().all(|v| v.relation.left_dominates()) && energies.windows(2).all(|e| e[1] < e[0]);
    Ok(PassiveChainReport {
        channel: *spec,
        path,
        energies,
        steps,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonBinaryWitness {
    /// Unnormalized occupation weights per Fock level.
    pub counts: Vec<u32>,
    pub split: usize,
    pub verdict: MajorizationVerdict,
}

/// Exploratory: the swap relation with weights in `0..=3` instead of `0..=1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonBinaryReport {
    pub seed: u64,
    pub samples: usize,
    pub comparisons: usize,
    pub violation_count: usize,
    pub violations: Vec<NonBinaryWitness>,
}

fn counts_state(counts: &[u32]) -> FockDiagonalState {
    let total: u32 = counts.iter().sum();
    FockDiagonalState::from_parts(counts.iter().map(|&c| f64::from(c) / f64::from(total)).collect(), 0.0)
}

fn nonbinary_scan(
    grid: &TransitionGrid,
    length: usize,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<NonBinaryReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = NonBinaryReport {
        seed,
        samples,
        comparisons: 0,
        violation_count: 0,
        violations: Vec::new(),
    };
    for _ in 0..samples {
        let counts: Vec<u32> = loop {
            let c: Vec<u32> = (0..length).map(|_| rng.random_range(0..=3)).collect();
            if c.iter().filter(|v| **v > 0).count() >= 2 {
                break c;
            }
        };
        let original = channel_output(grid, &counts_state(&counts))?;
        for split in 0..length {
            let mut rearranged = counts.clone();
            rearranged[split..].sort_by(|a, b| b.cmp(a));
            if rearranged == counts {
                continue;
            }
            let candidate = channel_output(grid, &counts_state(&rearranged))?;
            let verdict = majorize_compare(&candidate, &original, tol)?;
            report.comparisons += 1;
            if !verdict.relation.left_dominates() {
                report.violation_count += 1;
                if report.violations.len() < MAX_LISTED {
                    report.violations.push(NonBinaryWitness {
                        counts: counts.clone(),
                        split,
                        verdict,
                    });
                }
            }
        }
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Counterexamples

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputPair {
    pub label: String,
    pub left: FockDiagonalState,
    pub right: FockDiagonalState,
}

impl InputPair {
    fn new(label: impl Into<String>, left: FockDiagonalState, right: FockDiagonalState) -> Self {
        InputPair {
            label: label.into(),
            left,
            right,
        }
    }
}

/// Highest Fock level used by [`seeded_corpus`].
pub const CORPUS_MAX_LEVEL: usize = 8;

fn two_level(a: usize, b: usize) -> FockDiagonalState {
    let mut w = vec![0.0; a.max(b) + 1];
    w[a] += 0.5;
    w[b] += 0.5;
    FockDiagonalState::from_parts(w, 0.0)
}

fn random_state<R: Rng>(rng: &mut R, levels: usize) -> FockDiagonalState {
    let mut w: Vec<f64> = (0..levels)
        .map(|_| if rng.random_bool(0.6) { rng.random::<f64>() } else { 0.0 })
        .collect();
    if w.iter().all(|v| *v == 0.0) {
        w[rng.random_range(0..levels)] = 1.0;
    }
    let total: f64 = w.iter().sum();
    FockDiagonalState::from_parts(w.into_iter().map(|v| v / total).collect(), 0.0)
}

/// Moves mass from lower to higher levels; the result is Fock-majorized by
/// the input.
fn push_up<R: Rng>(rng: &mut R, state: &FockDiagonalState, moves: usize) -> FockDiagonalState {
    let mut w = state.weights().to_vec();
    let levels = w.len();
    for _ in 0..moves {
        let from = rng.random_range(0..levels - 1);
        let to = rng.random_range(from + 1..levels);
        let amount = w[from] * rng.random::<f64>();
        w[from] -= amount;
        w[to] += amount;
    }
    FockDiagonalState::from_parts(w, 0.0)
}

/// Deterministic corpus of input pairs: the canonical `(|1>, (|0> + |3>)/2)`
/// pair, single-Fock versus two-level pairs, a reflexive pair, random
/// pairs, and Fock-ordered pairs built by upward mass transfers.
pub fn seeded_corpus(seed: u64, random_pairs: usize) -> Vec<InputPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let levels = CORPUS_MAX_LEVEL + 1;
    let mut corpus = vec![InputPair::new(
        "fock1_vs_0+3",
        FockDiagonalState::fock(1),
        two_level(0, 3),
    )];
    for j in 1..=4 {
        for a in 0..j {
            for b in (j + 1)..=CORPUS_MAX_LEVEL {
                if a + b >= 2 * j && !(j == 1 && a == 0 && b == 3) {
                    corpus.push(InputPair::new(
                        format!("fock{j}_vs_{a}+{b}"),
                        FockDiagonalState::fock(j),
                        two_level(a, b),
                    ));
                }
            }
        }
    }
    let same = random_state(&mut rng, levels);
    corpus.push(InputPair::new("reflexive", same.clone(), same));
    for r in 0..random_pairs {
        let left = random_state(&mut rng, levels);
        let right = random_state(&mut rng, levels);
        corpus.push(InputPair::new(format!("random{r}"), left, right));
    }
    for r in 0..random_pairs {
        let left = random_state(&mut rng, levels);
        let moves = rng.random_range(1..=4);
        let right = push_up(&mut rng, &left, moves);
        corpus.push(InputPair::new(format!("fock_ordered{r}"), left, right));
    }
    corpus
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFinding {
    pub label: String,
    pub left_energy: f64,
    pub right_energy: f64,
    /// Output comparison that contradicts (or, for the Fock order, confirms)
    /// the expected direction.
    pub output: MajorizationVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FindingsReport {
    pub channel: ChannelSpec,
    pub pairs: usize,
    pub energy_ordered: usize,
    pub skipped_ambiguous: usize,
    /// Energy-ordered pairs whose outputs are not majorization-ordered.
    pub energy_witnesses: Vec<PairFinding>,
    pub fock_ordered: usize,
    /// Fock-ordered pairs whose outputs are not majorization-ordered.
    pub fock_witnesses: Vec<PairFinding>,
    /// Fock-ordered pairs whose outputs lose the Fock order.
    pub fock_preservation_failures: Vec<PairFinding>,
    /// Smallest Fock-order slack at the output over Fock-ordered pairs.
    pub worst_fock_slack: f64,
}

impl FindingsReport {
    /// The Fock order is preserved for every Fock-ordered pair.
    pub fn fock_preserved(&self, tol: f64) -> bool {
        self.fock_preservation_failures.is_empty() && self.worst_fock_slack >= -tol
    }
}

fn is_witness(v: &MajorizationVerdict) -> bool {
    matches!(v.relation, Relation::Incomparable | Relation::RightMajorizes)
}

/// Looks for energy-ordered and Fock-ordered input pairs whose outputs are
/// not majorization-ordered, and checks that the Fock order survives the
/// channel. Pairs whose energy order depends on truncated mass are skipped.
pub fn counterexample_search(spec: &ChannelSpec, corpus: &[InputPair], tol: f64) -> Result<FindingsReport> {
    let levels = corpus
        .iter()
        .map(|p| p.left.len().max(p.right.len()))
        .max()
        .unwrap_or(1);
    let grid = grid_recurrence(&spec.params(), levels.saturating_sub(1), DEFAULT_TAIL_TOL)?;
    let mut report = FindingsReport {
        channel: *spec,
        pairs: corpus.len(),
        energy_ordered: 0,
        skipped_ambiguous: 0,
        energy_witnesses: Vec::new(),
        fock_ordered: 0,
        fock_witnesses: Vec::new(),
        fock_preservation_failures: Vec::new(),
        worst_fock_slack: f64::INFINITY,
    };
    for pair in corpus {
        let (l_lo, l_hi) = pair.left.energy_bounds(levels);
        let (r_lo, r_hi) = pair.right.energy_bounds(levels);
        let out_l = channel_output(&grid, &pair.left)?;
        let out_r = channel_output(&grid, &pair.right)?;
        let finding = |output| PairFinding {
            label: pair.label.clone(),
            left_energy: l_lo,
            right_energy: r_lo,
            output,
        };

        let oriented = if l_hi <= r_lo {
            Some((&out_l, &out_r))
        } else if r_hi <= l_lo {
            Some((&out_r, &out_l))
        } else {
            None
        };
        match oriented {
            Some((low, high)) => {
                report.energy_ordered += 1;
                let v = majorize_compare(low, high, tol)?;
                if is_witness(&v) {
                    report.energy_witnesses.push(finding(v));
                }
            }
            None => report.skipped_ambiguous += 1,
        }

        if fock_compare(&pair.left, &pair.right, tol)?.relation.left_dominates() {
            report.fock_ordered += 1;
            let f = fock_compare(&out_l, &out_r, tol)?;
            report.worst_fock_slack = report.worst_fock_slack.min(f.worst_slack);
            if !f.relation.left_dominates() {
                report.fock_preservation_failures.push(finding(f));
            }
            let v = majorize_compare(&out_l, &out_r, tol)?;
            if is_witness(&v) {
                report.fock_witnesses.push(finding(v));
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pat(s: &str) -> BinaryPattern {
        s.parse().unwrap()
    }

    #[test]
    fn standard_grid_is_the_full_product() {
        let grid = standard_grid();
        assert_eq!(grid.len(), 15 + 9 + 9 + 3);
        for spec in &grid {
            let back = ChannelSpec::try_from(spec.record()).unwrap();
            assert_eq!(&back, spec);
        }
    }

    #[test]
    fn identity_ladder_is_equivalent_everywhere() {
        let r = ladder_verify(&ChannelSpec::lossy(1.0, 0.0).unwrap(), 10, DEFAULT_TOL).unwrap();
        assert!(r.pass && r.witness_ok);
        assert!(r.steps.iter().all(|s| s.verdict.relation == Relation::Equivalent));
    }

    #[test]
    fn ladder_examples_pass() {
        let loss = ladder_verify(&ChannelSpec::lossy(0.5, 0.0).unwrap(), 30, DEFAULT_TOL).unwrap();
        assert!(loss.pass && loss.witness_ok);
        assert!(loss.steps.iter().all(|s| s.verdict.relation == Relation::LeftMajorizes));
        let conj = ladder_verify(&ChannelSpec::conjugate_amplifier(2.0, 1.0).unwrap(), 30, DEFAULT_TOL).unwrap();
        assert!(conj.pass && conj.witness_ok, "{:?}", conj.worst_slack);
    }

    #[test]
    fn mixture_examples() {
        let loss = ChannelSpec::lossy(0.5, 0.0).unwrap();
        let none = mixture_shift_check(&loss, &[0.5, 0.5], 0, DEFAULT_TOL).unwrap();
        assert_eq!(none.verdict.relation, Relation::Equivalent);
        let two = mixture_shift_check(&loss, &[0.5, 0.5], 2, DEFAULT_TOL).unwrap();
        assert_eq!(two.verdict.relation, Relation::LeftMajorizes);
        assert!(two.witness_error <= 1e-12);

        let amp = ChannelSpec::amplifier(2.0, 0.0).unwrap();
        let low = mixture_vs_lowest_fock(&amp, &[0.3, 0.7], 1, DEFAULT_TOL).unwrap();
        assert_eq!(low.verdict.relation, Relation::LeftMajorizes);
        assert!(low.holds(WITNESS_TOL));
        let point = mixture_vs_lowest_fock(&amp, &[1.0], 3, DEFAULT_TOL).unwrap();
        assert_eq!(point.verdict.relation, Relation::Equivalent);
    }

    #[test]
    fn point_mass_mixture_is_a_ladder_step() {
        let spec = ChannelSpec::amplifier(2.0, 0.5).unwrap();
        let grid = mixture_grid(&spec, 8).unwrap();
        let c = [0.0, 0.0, 1.0];
        let m = mixture_shift_on_grid(&grid, &c, 3, DEFAULT_TOL).unwrap();
        let direct = majorize_compare(&grid.state(2), &grid.state(5), DEFAULT_TOL).unwrap();
        assert_eq!(m.verdict, direct);
    }

    #[test]
    fn pattern_parsing_and_energy() {
        let p = pat("101001");
        assert_eq!(p.to_string(), "101001");
        assert_eq!(p.ones(), 3);
        assert!((p.energy() - 7.0 / 3.0).abs() < 1e-15);
        assert_eq!(BinaryPattern::from_mask(p.mask(), 6).unwrap(), p);
        assert!("10a".parse::<BinaryPattern>().is_err());
        assert!("000".parse::<BinaryPattern>().is_err());
    }

    #[test]
    fn passive_path_of_reference_pattern() {
        let path: Vec<String> = pat("101001").passive_path().iter().map(|p| p.to_string()).collect();
        assert_eq!(path, ["101001", "101010", "101100", "111000"]);
        assert_eq!(pat("111000").passive_path().len(), 1);
    }

    #[test]
    fn reference_chain_holds() {
        let spec = ChannelSpec::lossy(0.5, 1.0).unwrap();
        let r = passive_chain(&spec, &pat("101001"), DEFAULT_TOL).unwrap();
        assert!(r.pass);
        assert_eq!(r.steps.len(), 3);
    }

    #[test]
    fn small_scan_is_clean_and_thread_independent() {
        let spec = ChannelSpec::amplifier(2.0, 0.5).unwrap();
        let base = ConjectureOptions {
            length: 6,
            ..Default::default()
        };
        let seq = conjecture_scan_with(
            &spec,
            &ConjectureOptions {
                exec: Exec::Sequential,
                ..base.clone()
            },
        )
        .unwrap();
        let par = conjecture_scan_with(
            &spec,
            &ConjectureOptions {
                exec: Exec::Parallel,
                ..base
            },
        )
        .unwrap();
        assert!(seq.pass);
        assert_eq!(seq, par);
        assert_eq!(seq.patterns, 64 - 7);
    }

    #[test]
    fn canonical_pair_is_a_counterexample_under_loss() {
        let corpus = seeded_corpus(DEFAULT_SEED, 4);
        let spec = ChannelSpec::lossy(0.5, 0.0).unwrap();
        let r = counterexample_search(&spec, &corpus, DEFAULT_TOL).unwrap();
        assert!(r.energy_witnesses.iter().any(|f| f.label == "fock1_vs_0+3"));
        assert!(r.fock_preserved(1e-12));
        assert!(r.energy_witnesses.iter().all(|f| f.label != "reflexive"));
        assert!(r.fock_witnesses.iter().all(|f| f.label != "reflexive"));
    }

    #[test]
    fn corpus_is_deterministic() {
        assert_eq!(seeded_corpus(7, 5), seeded_corpus(7, 5));
        assert_ne!(seeded_corpus(7, 5), seeded_corpus(8, 5));
    }
}
