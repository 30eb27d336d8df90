//! Photon-number transition probabilities `T[i][n]`: the probability of
//! detecting `n` photons at the output when the Fock state `|i>` is sent in.
//!
//! The production path is the four-term recurrence
//!
//! ```text
//! T[i][n] = alpha T[i-1][n] + beta T[i][n-1] + gamma T[i-1][n-1] + chi [i = n = 0]
//! ```
//!
//! filled row by row with zero padding at negative indices. Two independent
//! routes reproduce the same numbers from the generating function: a
//! closed-form binomial sum ([`row_multinomial`]) and an explicit truncated
//! power-series expansion ([`row_series`]).
//!
//! # Conditioning of the closed forms
//!
//! Expanding `chi / (1 - u)` with `u = alpha x + beta z + gamma x z` gives the
//! trinomial sum
//!
//! ```text
//! T[i][n] = chi sum_c (i+n-c)! / ((i-c)! (n-c)! c!) alpha^(i-c) beta^(n-c) gamma^c
//! ```
//!
//! which alternates in sign when `gamma < 0` and loses every significant
//! digit long before `i = 40` (term magnitudes exceed the result by up to
//! fifty orders of magnitude for strong conjugated amplifiers). Rewriting the
//! denominator as `(1 - alpha x)(1 - beta z) - nu x z` gives
//!
//! ```text
//! T[i][n] = chi sum_k C(i,k) C(n,k) alpha^(i-k) beta^(n-k) nu^k
//! ```
//!
//! whose terms are all nonnegative because `alpha, beta, nu >= 0` for every
//! channel. [`Expansion::for_params`] picks the direct form when `gamma >= 0`
//! and the factored one otherwise.

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelParams, ChannelSpec};
use crate::error::{Error, Result};
use crate::numeric::{binomial, compensated_sum};
use crate::state::FockDiagonalState;

pub const DEFAULT_TAIL_TOL: f64 = 1e-10;
pub const DEFAULT_CUTOFF_CAP: usize = 20_000;
/// Guard added to `beta` when guessing the first cutoff.
const CUTOFF_GUARD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptions {
    pub tail_tol: f64,
    /// Hard cap on the photon-number cutoff.
    pub cap: usize,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions {
            tail_tol: DEFAULT_TAIL_TOL,
            cap: DEFAULT_CUTOFF_CAP,
        }
    }
}

impl GridOptions {
    pub fn with_tail_tol(tail_tol: f64) -> Self {
        GridOptions {
            tail_tol,
            ..Default::default()
        }
    }
}

/// Output distributions `t^(0) ... t^(i_max)` truncated at `n_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionGrid {
    pub params: ChannelParams,
    pub i_max: usize,
    pub n_max: usize,
    pub rows: Vec<Vec<f64>>,
    /// `1 - sum_n T[i][n]`, clamped at zero.
    pub tails: Vec<f64>,
    /// Smallest entry before negative round-off was clamped to zero.
    pub min_raw: f64,
}

/// Builds the grid with the adaptive cutoff and default cap.
pub fn grid_recurrence(params: &ChannelParams, i_max: usize, tail_tol: f64) -> Result<TransitionGrid> {
    TransitionGrid::build(params, i_max, &GridOptions::with_tail_tol(tail_tol))
}

impl TransitionGrid {
    /// Chooses `n_max` so that every row's tail is at most `opts.tail_tol`.
    ///
    /// The first guess is `i_max + ceil(ln(tol) / ln(beta + 0.05))`; the
    /// cutoff doubles until the tails fit or the cap is exceeded.
    pub fn build(params: &ChannelParams, i_max: usize, opts: &GridOptions) -> Result<Self> {
        if !(opts.tail_tol > 0.0) {
            return Err(Error::domain("tail_tol", opts.tail_tol, "must be positive"));
        }
        let ratio = (params.beta + CUTOFF_GUARD).min(0.999);
        let guess = (opts.tail_tol.ln() / ratio.ln()).ceil().max(1.0) as usize;
        let mut n_max = (i_max + guess).min(opts.cap);
        loop {
            let grid = Self::with_cutoff(params, i_max, n_max);
            let worst = grid.worst_tail();
            if worst <= opts.tail_tol {
                return Ok(grid);
            }
            if n_max >= opts.cap {
                return Err(Error::Truncation {
                    cap: opts.cap,
                    tail_tol: opts.tail_tol,
                    worst_tail: worst,
                });
            }
            n_max = (2 * n_max).min(opts.cap);
        }
    }

    /// Runs the recurrence at a fixed cutoff without checking the tails.
    pub fn with_cutoff(params: &ChannelParams, i_max: usize, n_max: usize) -> Self {
        let width = n_max + 1;
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(i_max + 1);
        let mut min_raw = f64::INFINITY;
        for i in 0..=i_max {
            let mut row = vec![0.0; width];
            for n in 0..width {
                let mut v = if i == 0 && n == 0 { params.chi } else { 0.0 };
                if i > 0 {
                    let prev = &rows[i - 1];
                    v += params.alpha * prev[n];
                    if n > 0 {
                        v += params.gamma * prev[n - 1];
                    }
                }
                if n > 0 {
                    v += params.beta * row[n - 1];
                }
                row[n] = v;
            }
            min_raw = row.iter().copied().fold(min_raw, f64::min);
            rows.push(row);
        }
        for row in &mut rows {
            for v in row.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
        }
        let tails = rows.iter().map(|r| (1.0 - compensated_sum(r)).max(0.0)).collect();
        TransitionGrid {
            params: *params,
            i_max,
            n_max,
            rows,
            tails,
            min_raw,
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn state(&self, i: usize) -> FockDiagonalState {
        FockDiagonalState::from_parts(self.rows[i].clone(), self.tails[i])
    }

    pub fn worst_tail(&self) -> f64 {
        self.tails.iter().copied().fold(0.0, f64::max)
    }

    /// Output of the Fock mixture `sum_j c_j |j + shift><j + shift|`.
    pub fn mixture_output(&self, c: &[f64], shift: usize) -> Result<FockDiagonalState> {
        if c.len() + shift > self.i_max + 1 {
            return Err(Error::Invalid(format!(
                "mixture reaches Fock level {} but the grid stops at {}",
                c.len() + shift - 1,
                self.i_max
            )));
        }
        let states: Vec<FockDiagonalState> = (0..c.len()).map(|j| self.state(j + shift)).collect();
        let refs: Vec<&FockDiagonalState> = states.iter().collect();
        FockDiagonalState::mixture(c, &refs)
    }
}

/// Which closed-form expansion of the generating function to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expansion {
    /// Powers of `alpha x + beta z + gamma x z`; signed when `gamma < 0`.
    Direct,
    /// Powers of `nu x z / ((1 - alpha x)(1 - beta z))`; never signed.
    Factored,
}

impl Expansion {
    pub fn for_params(params: &ChannelParams) -> Self {
        if params.gamma >= 0.0 {
            Expansion::Direct
        } else {
            Expansion::Factored
        }
    }
}

/// Closed-form row `t^(i)` over `n = 0..=n_max`.
pub fn row_multinomial(params: &ChannelParams, i: usize, n_max: usize) -> Result<Vec<f64>> {
    row_multinomial_with(params, i, n_max, Expansion::for_params(params))
}

/// Closed-form row with an explicit expansion.
///
/// Both forms read `T[i][n] = chi sum_k w_k a_k(n)` with `w_k` independent
/// of `n`. The `a_k(n)` factors are accumulated along `n` through their
/// ratio `a_k(n) / a_k(n-1)`, which keeps every intermediate within range
/// without log-domain factorials.
pub fn row_multinomial_with(params: &ChannelParams, i: usize, n_max: usize, expansion: Expansion) -> Result<Vec<f64>> {
    let (middle, direct) = match expansion {
        Expansion::Direct => (params.gamma, true),
        Expansion::Factored => (params.nu, false),
    };
    let weights: Vec<f64> = (0..=i)
        .map(|k| binomial(i, k) * params.alpha.powi((i - k) as i32) * middle.powi(k as i32))
        .collect();
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Overflow { i });
    }

    let mut acc = vec![0.0_f64; i + 1];
    let mut row = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let top = i.min(n);
        let mut sum = 0.0;
        for k in 0..=top {
            if n == k {
                acc[k] = 1.0;
            } else {
                // direct: C(i+n-k, i) beta^(n-k); factored: C(n, k) beta^(n-k)
                let shift = if direct { i - k } else { 0 };
                acc[k] *= params.beta * (n + shift) as f64 / (n - k) as f64;
            }
            sum += weights[k] * acc[k];
        }
        let value = params.chi * sum;
        if !value.is_finite() {
            return Err(Error::Overflow { i });
        }
        row.push(value);
    }
    Ok(row)
}

/// Dense truncated bivariate polynomial `sum p[a][b] x^a z^b`, `a <= dx`, `b <= dz`.
#[derive(Debug, Clone, PartialEq)]
struct BiPoly {
    dx: usize,
    dz: usize,
    coef: Vec<f64>,
}

impl BiPoly {
    fn zeros(dx: usize, dz: usize) -> Self {
        BiPoly {
            dx,
            dz,
            coef: vec![0.0; (dx + 1) * (dz + 1)],
        }
    }

    fn at(&self, a: usize, b: usize) -> f64 {
        self.coef[a * (self.dz + 1) + b]
    }

    fn add_at(&mut self, a: usize, b: usize, v: f64) {
        self.coef[a * (self.dz + 1) + b] += v;
    }

    fn terms(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let w = self.dz + 1;
        self.coef
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(move |(idx, &v)| (idx / w, idx % w, v))
    }

    fn is_zero(&self) -> bool {
        self.coef.iter().all(|v| *v == 0.0)
    }

    /// Product truncated to this polynomial's degrees.
    fn mul_truncated(&self, other: &BiPoly) -> BiPoly {
        let mut out = BiPoly::zeros(self.dx, self.dz);
        let small: Vec<(usize, usize, f64)> = other.terms().collect();
        for (a, b, v) in self.terms() {
            for &(da, db, w) in &small {
                if a + da <= self.dx && b + db <= self.dz {
                    out.add_at(a + da, b + db, v * w);
                }
            }
        }
        out
    }

    fn add_assign(&mut self, other: &BiPoly) {
        for (s, o) in self.coef.iter_mut().zip(&other.coef) {
            *s += o;
        }
    }
}

/// Univariate product truncated to degree `deg`.
fn mul_truncated_1d(a: &[f64], b: &[f64], deg: usize) -> Vec<f64> {
    let mut out = vec![0.0; deg + 1];
    for (p, &av) in a.iter().enumerate().take(deg + 1) {
        if av == 0.0 {
            continue;
        }
        for (q, &bv) in b.iter().enumerate().take(deg + 1 - p) {
            out[p + q] += av * bv;
        }
    }
    out
}

fn truncated_geometric(ratio: f64, deg: usize) -> Vec<f64> {
    let mut g = Vec::with_capacity(deg + 1);
    let mut v = 1.0;
    for _ in 0..=deg {
        g.push(v);
        v *= ratio;
    }
    g
}

/// Coefficients `[x^i z^n] h(x, z)` for `i <= i_max`, `n <= n_max`, by
/// expanding the geometric series of the generating function with truncated
/// polynomial products.
pub fn series_block(params: &ChannelParams, i_max: usize, n_max: usize, expansion: Expansion) -> Vec<Vec<f64>> {
    let block = match expansion {
        Expansion::Direct => series_direct(params, i_max, n_max),
        Expansion::Factored => series_factored(params, i_max, n_max),
    };
    (0..=i_max)
        .map(|i| (0..=n_max).map(|n| block.at(i, n)).collect())
        .collect()
}

/// Row `t^(i)` from the series expansion.
pub fn row_series(params: &ChannelParams, i: usize, n_max: usize) -> Vec<f64> {
    series_block(params, i, n_max, Expansion::for_params(params)).swap_remove(i)
}

/// `chi * sum_k u^k` with `u = alpha x + beta z + gamma x z`.
fn series_direct(params: &ChannelParams, dx: usize, dz: usize) -> BiPoly {
    let mut u = BiPoly::zeros(dx.max(1), dz.max(1));
    u.add_at(1, 0, params.alpha);
    u.add_at(0, 1, params.beta);
    u.add_at(1, 1, params.gamma);

    let mut power = BiPoly::zeros(dx, dz);
    power.add_at(0, 0, params.chi);
    let mut sum = power.clone();
    // u^k only reaches total degree >= k.
    for _ in 1..=(dx + dz) {
        power = power.mul_truncated(&u);
        if power.is_zero() {
            break;
        }
        sum.add_assign(&power);
    }
    sum
}

/// `chi * sum_k (nu x z)^k A(x)^(k+1) B(z)^(k+1)` with `A = 1/(1 - alpha x)`
/// and `B = 1/(1 - beta z)`; every product involved is nonnegative.
fn series_factored(params: &ChannelParams, dx: usize, dz: usize) -> BiPoly {
    let geo_x = truncated_geometric(params.alpha, dx);
    let geo_z = truncated_geometric(params.beta, dz);
    let mut a_pow = geo_x.clone();
    let mut b_pow = geo_z.clone();
    let mut sum = BiPoly::zeros(dx, dz);
    let mut scale = params.chi;
    for k in 0..=dx.min(dz) {
        if scale == 0.0 {
            break;
        }
        for (p, &av) in a_pow.iter().enumerate().take(dx - k + 1) {
            let row_scale = scale * av;
            if row_scale == 0.0 {
                continue;
            }
            for (q, &bv) in b_pow.iter().enumerate().take(dz - k + 1) {
                sum.add_at(k + p, k + q, row_scale * bv);
            }
        }
        if k == dx.min(dz) {
            break;
        }
        a_pow = mul_truncated_1d(&a_pow, &geo_x, dx - k - 1);
        b_pow = mul_truncated_1d(&b_pow, &geo_z, dz - k - 1);
        scale *= params.nu;
    }
    sum
}

/// Named textbook laws for special channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecialLaw {
    /// Identity channel: `T[i][n] = [n = i]`.
    Delta,
    /// Pure loss: `Binomial(i, eta)`.
    Binomial,
    /// Quantum-limited amplifier: negative binomial from `n = i`, success `1/g`.
    NegativeBinomial,
    /// Any channel, vacuum input: `chi * beta^n`.
    Geometric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecialRow {
    pub law: SpecialLaw,
    pub values: Vec<f64>,
}

/// Closed-form row for channels with a known photon-statistics law, or
/// `None` when no special case applies.
pub fn analytic_special(spec: &ChannelSpec, i: usize, n_max: usize) -> Option<SpecialRow> {
    let mut values = vec![0.0; n_max + 1];
    let law = if spec.is_identity() {
        if i <= n_max {
            values[i] = 1.0;
        }
        SpecialLaw::Delta
    } else {
        match *spec {
            ChannelSpec::Lossy { eta, thermal_n: 0.0 } => {
                for (n, v) in values.iter_mut().enumerate().take(i.min(n_max) + 1) {
                    *v = binomial(i, n) * eta.powi(n as i32) * (1.0 - eta).powi((i - n) as i32);
                }
                SpecialLaw::Binomial
            }
            ChannelSpec::Amplifier { gain, thermal_n: 0.0 } => {
                let success = 1.0 / gain;
                let fail = 1.0 - success;
                if i <= n_max {
                    let mut v = success.powi(i as i32 + 1);
                    values[i] = v;
                    for (n, slot) in values.iter_mut().enumerate().skip(i + 1) {
                        v *= n as f64 / (n - i) as f64 * fail;
                        *slot = v;
                    }
                }
                SpecialLaw::NegativeBinomial
            }
            _ if i == 0 => {
                let p = spec.params();
                for (n, v) in values.iter_mut().enumerate() {
                    *v = p.chi * p.beta.powi(n as i32);
                }
                SpecialLaw::Geometric
            }
            _ => return None,
        }
    };
    Some(SpecialRow { law, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::max_abs_diff;
    use approx::assert_abs_diff_eq;

    fn lossy(eta: f64, n: f64) -> ChannelParams {
        ChannelSpec::lossy(eta, n).unwrap().params()
    }

    #[test]
    fn identity_grid_is_delta() {
        let g = TransitionGrid::build(&ChannelParams::identity(), 6, &GridOptions::default()).unwrap();
        for i in 0..=6 {
            for n in 0..=g.n_max {
                assert_eq!(g.rows[i][n], if i == n { 1.0 } else { 0.0 });
            }
            assert_eq!(g.tails[i], 0.0);
        }
    }

    #[test]
    fn pure_loss_half_second_row() {
        let g = grid_recurrence(&lossy(0.5, 0.0), 2, 1e-10).unwrap();
        assert_abs_diff_eq!(g.rows[2][0], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(g.rows[2][1], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(g.rows[2][2], 0.25, epsilon = 1e-15);
        assert!(g.rows[2][3..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn vacuum_row_is_geometric() {
        // alpha=2/3, beta=1/3, chi=2/3
        let g = grid_recurrence(&lossy(0.5, 1.0), 0, 1e-10).unwrap();
        for n in 0..=g.n_max {
            assert_abs_diff_eq!(
                g.rows[0][n],
                (2.0 / 3.0) * (1.0_f64 / 3.0).powi(n as i32),
                epsilon = 1e-15
            );
        }
        assert_abs_diff_eq!(g.rows[0][0], g.params.chi, epsilon = 0.0);
    }

    #[test]
    fn adaptive_cutoff_meets_tail_tolerance() {
        let p = ChannelSpec::conjugate_amplifier(5.0, 2.0).unwrap().params();
        let g = grid_recurrence(&p, 30, 1e-10).unwrap();
        assert!(g.worst_tail() <= 1e-10);
        assert!(g.min_raw >= -1e-15);
        for (row, tail) in g.rows.iter().zip(&g.tails) {
            assert_abs_diff_eq!(compensated_sum(row) + tail, 1.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn cutoff_cap_raises_truncation_error() {
        let p = ChannelSpec::amplifier(5.0, 2.0).unwrap().params();
        let opts = GridOptions {
            tail_tol: 1e-10,
            cap: 50,
        };
        assert!(matches!(
            TransitionGrid::build(&p, 20, &opts),
            Err(Error::Truncation { cap: 50, .. })
        ));
    }

    #[test]
    fn multinomial_small_cases() {
        let p = lossy(0.3, 0.5);
        let r0 = row_multinomial(&p, 0, 5).unwrap();
        for (n, v) in r0.iter().enumerate() {
            assert_abs_diff_eq!(*v, p.chi * p.beta.powi(n as i32), epsilon = 1e-16);
        }
        for exp in [Expansion::Direct, Expansion::Factored] {
            let r1 = row_multinomial_with(&p, 1, 1, exp).unwrap();
            let expected = p.chi * (2.0 * p.alpha * p.beta + p.gamma);
            assert_abs_diff_eq!(r1[1], expected, epsilon = 1e-15);
        }
    }

    #[test]
    fn expansions_agree_when_gamma_nonnegative() {
        let p = ChannelSpec::amplifier(2.0, 0.5).unwrap().params();
        assert!(p.gamma >= 0.0);
        for i in [0, 3, 17] {
            let d = row_multinomial_with(&p, i, 200, Expansion::Direct).unwrap();
            let f = row_multinomial_with(&p, i, 200, Expansion::Factored).unwrap();
            assert!(max_abs_diff(&d, &f) < 1e-14);
        }
    }

    #[test]
    fn signed_direct_sum_is_ill_conditioned() {
        let p = ChannelSpec::conjugate_amplifier(2.0, 2.0).unwrap().params();
        assert_eq!(Expansion::for_params(&p), Expansion::Factored);
        let g = grid_recurrence(&p, 40, 1e-10).unwrap();
        let signed = row_multinomial_with(&p, 40, g.n_max, Expansion::Direct).unwrap();
        let stable = row_multinomial(&p, 40, g.n_max).unwrap();
        assert!(max_abs_diff(&stable, &g.rows[40]) < 1e-13);
        assert!(max_abs_diff(&signed, &g.rows[40]) > 1e-6);
    }

    #[test]
    fn series_constant_term_and_normalization() {
        let p = ChannelSpec::additive_noise(1.0).unwrap().params();
        let g = grid_recurrence(&p, 5, 1e-12).unwrap();
        for exp in [Expansion::Direct, Expansion::Factored] {
            let block = series_block(&p, 5, g.n_max, exp);
            assert_abs_diff_eq!(block[0][0], p.chi, epsilon = 1e-16);
            for row in &block {
                assert_abs_diff_eq!(compensated_sum(row), 1.0, epsilon = 1e-11);
            }
        }
    }

    #[test]
    fn series_matches_recurrence() {
        for p in [
            lossy(0.7, 0.5),
            ChannelSpec::conjugate_amplifier(1.2, 0.5).unwrap().params(),
        ] {
            let g = grid_recurrence(&p, 12, 1e-10).unwrap();
            let block = series_block(&p, 12, g.n_max, Expansion::for_params(&p));
            for (row, expected) in block.iter().zip(&g.rows) {
                assert!(max_abs_diff(row, expected) < 1e-14);
            }
            assert!(max_abs_diff(&row_series(&p, 7, g.n_max), &g.rows[7]) < 1e-14);
        }
    }

    #[test]
    fn special_laws() {
        let spec = ChannelSpec::lossy(0.3, 0.0).unwrap();
        let row = analytic_special(&spec, 3, 6).unwrap();
        assert_eq!(row.law, SpecialLaw::Binomial);
        let expected = [0.343, 0.441, 0.189, 0.027, 0.0, 0.0, 0.0];
        assert!(max_abs_diff(&row.values, &expected) < 1e-15);

        let spec = ChannelSpec::amplifier(2.0, 0.0).unwrap();
        let row = analytic_special(&spec, 0, 30).unwrap();
        assert_eq!(row.law, SpecialLaw::NegativeBinomial);
        for (n, v) in row.values.iter().enumerate() {
            assert_abs_diff_eq!(*v, 0.5_f64.powi(n as i32 + 1), epsilon = 1e-16);
        }
        let mean: f64 = row.values.iter().enumerate().map(|(n, v)| n as f64 * v).sum();
        assert_abs_diff_eq!(mean, 1.0, epsilon = 1e-6);

        let spec = ChannelSpec::lossy(0.5, 1.0).unwrap();
        assert!(analytic_special(&spec, 5, 10).is_none());
        assert_eq!(analytic_special(&spec, 0, 10).unwrap().law, SpecialLaw::Geometric);
        let id = ChannelSpec::additive_noise(0.0).unwrap();
        assert_eq!(analytic_special(&id, 4, 10).unwrap().values[4], 1.0);
    }
}
