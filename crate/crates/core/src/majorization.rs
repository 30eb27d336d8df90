//! Majorization of truncated distributions and the ladder matrix `D`.
//!
//! `D` is the lower-triangular Toeplitz matrix
//!
//! ```text
//! D[k][l] = alpha [k = l] + nu beta^(k-l-1) [k > l]
//! ```
//!
//! which maps each output distribution `t^(i)` to the next one, `t^(i+1)`.
//! Its columns are shifted copies of the probability distribution
//! `d = (alpha, nu, nu beta, nu beta^2, ...)`, so applying `D` is a causal
//! convolution with `d`.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::error::Result;
use crate::numeric::{compensated_sum, prefix_sums};
use crate::state::{check_probability_vector, FockDiagonalState};

pub use crate::state::NORMALIZATION_TOL;

pub const DEFAULT_TOL: f64 = 1e-12;
/// Dense export is limited to this dimension; larger matrices are written as
/// band descriptors.
pub const DENSE_EXPORT_MAX_DIM: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    LeftMajorizes,
    RightMajorizes,
    Equivalent,
    Incomparable,
}

impl Relation {
    /// The left operand majorizes the right one (possibly both ways).
    pub fn left_dominates(self) -> bool {
        matches!(self, Relation::LeftMajorizes | Relation::Equivalent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MajorizationVerdict {
    pub relation: Relation,
    /// Most negative partial-sum margin of the reported direction
    /// (`p - q` for left/incomparable, `q - p` for right, both for
    /// equivalent).
    pub worst_slack: f64,
    pub at_index: usize,
}

/// Decides `p ≻ q` on descending-sorted vectors.
pub fn majorize_compare(p: &FockDiagonalState, q: &FockDiagonalState, tol: f64) -> Result<MajorizationVerdict> {
    p.check_normalized("left state")?;
    q.check_normalized("right state")?;
    let len = p.len().max(q.len());
    let ps = prefix_sums(&sorted_desc(p.padded(len)));
    let qs = prefix_sums(&sorted_desc(q.padded(len)));
    Ok(compare_prefixes(&ps, &qs, tol + p.tail() + q.tail()))
}

/// Fock majorization: prefix sums in Fock order, no sorting.
pub fn fock_compare(p: &FockDiagonalState, q: &FockDiagonalState, tol: f64) -> Result<MajorizationVerdict> {
    p.check_normalized("left state")?;
    q.check_normalized("right state")?;
    let len = p.len().max(q.len());
    let ps = prefix_sums(&p.padded(len));
    let qs = prefix_sums(&q.padded(len));
    Ok(compare_prefixes(&ps, &qs, tol + p.tail() + q.tail()))
}

/// Stable descending sort.
pub fn sorted_desc(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Classifies two prefix-sum sequences of equal length. A direction holds
/// when none of its margins drops below `-allowance`.
pub fn compare_prefixes(ps: &[f64], qs: &[f64], allowance: f64) -> MajorizationVerdict {
    debug_assert_eq!(ps.len(), qs.len());
    let (mut fwd, mut fwd_at) = (f64::INFINITY, 0);
    let (mut bwd, mut bwd_at) = (f64::INFINITY, 0);
    for (k, (a, b)) in ps.iter().zip(qs).enumerate() {
        let m = a - b;
        if m < fwd {
            fwd = m;
            fwd_at = k;
        }
        if -m < bwd {
            bwd = -m;
            bwd_at = k;
        }
    }
    if ps.is_empty() {
        fwd = 0.0;
        bwd = 0.0;
    }
    let left = fwd >= -allowance;
    let right = bwd >= -allowance;
    let (relation, worst_slack, at_index) = match (left, right) {
        (true, true) if fwd <= bwd => (Relation::Equivalent, fwd, fwd_at),
        (true, true) => (Relation::Equivalent, bwd, bwd_at),
        (true, false) => (Relation::LeftMajorizes, fwd, fwd_at),
        (false, true) => (Relation::RightMajorizes, bwd, bwd_at),
        (false, false) => (Relation::Incomparable, fwd, fwd_at),
    };
    MajorizationVerdict {
        relation,
        worst_slack,
        at_index,
    }
}

/// Implicit `dim x dim` ladder matrix, described by `(alpha, beta, nu)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderMatrix {
    pub params: ChannelParams,
    pub dim: usize,
}

/// JSON form of a ladder matrix too large for dense export.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandDescriptor {
    pub alpha: f64,
    pub beta: f64,
    pub nu: f64,
    pub dim: usize,
}

pub fn build_ladder(params: &ChannelParams, dim: usize) -> LadderMatrix {
    LadderMatrix { params: *params, dim }
}

impl LadderMatrix {
    /// Entry of the band at offset `m = k - l`.
    pub fn band(&self, m: usize) -> f64 {
        match m {
            0 => self.params.alpha,
            _ => self.params.nu * self.params.beta.powi(m as i32 - 1),
        }
    }

    pub fn entry(&self, k: usize, l: usize) -> f64 {
        if k < l {
            0.0
        } else {
            self.band(k - l)
        }
    }

    pub fn descriptor(&self) -> BandDescriptor {
        BandDescriptor {
            alpha: self.params.alpha,
            beta: self.params.beta,
            nu: self.params.nu,
            dim: self.dim,
        }
    }

    pub fn dense(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|k| (0..self.dim).map(|l| self.entry(k, l)).collect())
            .collect()
    }

    /// Mass a column leaves below row `l + m`: `nu beta^m / (1 - beta)`.
    pub fn column_remainder(&self, m: usize) -> f64 {
        let p = &self.params;
        if p.nu == 0.0 {
            return 0.0;
        }
        if p.beta == 0.0 {
            return if m == 0 { p.nu } else { 0.0 };
        }
        p.nu * p.beta.powi(m as i32) / (1.0 - p.beta)
    }

    /// Smallest offset beyond which a column carries less than `eps` mass.
    pub fn band_width(&self, eps: f64) -> usize {
        let mut m = 0;
        while self.column_remainder(m) > eps {
            m += 1;
        }
        m
    }

    /// `D v` truncated to `out_len` entries, in `O(out_len)`.
    pub fn apply(&self, v: &[f64], out_len: usize) -> Vec<f64> {
        let p = &self.params;
        let mut out = Vec::with_capacity(out_len);
        // s_k = sum_{m>=1} beta^(m-1) v_{k-m}
        let mut s = 0.0;
        for k in 0..out_len {
            if k > 0 {
                s = v.get(k - 1).copied().unwrap_or(0.0) + p.beta * s;
            }
            out.push(p.alpha * v.get(k).copied().unwrap_or(0.0) + p.nu * s);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticityReport {
    pub dim: usize,
    pub min_entry: f64,
    /// `alpha + nu / (1 - beta)`, the untruncated column sum.
    pub limit_column_sum: f64,
    /// Columns whose band, up to 1e-16 mass, fits inside the matrix.
    pub interior_columns: usize,
    pub max_interior_column_deviation: f64,
    /// Largest truncated column sum over all columns.
    pub max_column_sum: f64,
    pub max_row_sum: f64,
    pub ok: bool,
}

/// Nonnegativity, unit column sums and sub-unit row sums of `D`.
///
/// Row `k` holds the band offsets `0..=k` and column `l` the offsets
/// `0..dim-l`, so both kinds of sums are partial sums of the band.
pub fn check_column_stochastic(d: &LadderMatrix, tol: f64) -> StochasticityReport {
    let band: Vec<f64> = (0..d.dim).map(|m| d.band(m)).collect();
    let partial = prefix_sums(&band);
    let mut min_entry = band.iter().copied().fold(f64::INFINITY, f64::min);
    if d.dim > 1 {
        // strictly upper triangle
        min_entry = min_entry.min(0.0);
    }
    let max_row_sum = partial.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = d.band_width(1e-16);
    let interior = d.dim.saturating_sub(width);
    let max_interior_column_deviation = (0..interior)
        .map(|l| (partial[d.dim - 1 - l] - 1.0).abs())
        .fold(0.0, f64::max);
    let p = &d.params;
    let limit_column_sum = if p.beta < 1.0 {
        p.alpha + p.nu / (1.0 - p.beta)
    } else {
        f64::INFINITY
    };
    let ok = min_entry >= -1e-15
        && max_interior_column_deviation <= tol
        && (limit_column_sum - 1.0).abs() <= tol
        && max_row_sum <= 1.0 + tol;
    StochasticityReport {
        dim: d.dim,
        min_entry,
        limit_column_sum,
        interior_columns: interior,
        max_interior_column_deviation,
        max_column_sum: max_row_sum,
        max_row_sum,
        ok,
    }
}

/// `D^k v` by `k` banded applications. The output grows by `k` levels; mass
/// pushed past the last level joins the tail.
pub fn apply_ladder_power(params: &ChannelParams, k: usize, v: &FockDiagonalState) -> FockDiagonalState {
    apply_ladder_power_len(params, k, v, v.len() + k)
}

/// As [`apply_ladder_power`] with an explicit output length.
pub fn apply_ladder_power_len(
    params: &ChannelParams,
    k: usize,
    v: &FockDiagonalState,
    out_len: usize,
) -> FockDiagonalState {
    if k == 0 {
        return v.clone();
    }
    let d = build_ladder(params, out_len);
    let mut cur = v.weights().to_vec();
    let mut tail = v.tail();
    for _ in 0..k {
        let before = compensated_sum(&cur);
        let next = d.apply(&cur, out_len);
        tail += (before - compensated_sum(&next)).max(0.0);
        cur = next;
    }
    FockDiagonalState::from_parts(cur, tail)
}

/// `(sum_i c_i D^i) v` truncated to `out_len` levels.
pub fn apply_power_combination(
    params: &ChannelParams,
    coeffs: &[f64],
    v: &FockDiagonalState,
    out_len: usize,
) -> Result<FockDiagonalState> {
    check_probability_vector(coeffs)?;
    let d = build_ladder(params, out_len);
    let mut power = v.padded(out_len);
    power.truncate(out_len.max(v.len()));
    let mut acc = vec![0.0; power.len()];
    for (i, &c) in coeffs.iter().enumerate() {
        if i > 0 {
            power = d.apply(&power, out_len);
        }
        for (a, p) in acc.iter_mut().zip(&power) {
            *a += c * p;
        }
    }
    let tail = (1.0 - compensated_sum(&acc)).max(0.0);
    Ok(FockDiagonalState::from_parts(acc, tail))
}

/// Column sum of `W = sum_i c_i D^i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombinationColumn {
    pub sum: f64,
    /// Rows evaluated.
    pub len: usize,
    /// Rigorous bound on the column mass below `len`.
    pub remainder_bound: f64,
}

/// Evaluates the first column of `sum_i c_i D^i` (every column is a shifted
/// copy) down to a depth where the neglected mass is provably below
/// `remainder_eps`.
///
/// `D^i e_0` is the `i`-fold convolution of the band distribution `d`; a sum
/// of `i` band offsets reaches `len` only if one of them reaches `len / i`,
/// hence the union bound `i * P(X >= ceil(len / i))`.
pub fn combination_column(params: &ChannelParams, coeffs: &[f64], remainder_eps: f64) -> Result<CombinationColumn> {
    check_probability_vector(coeffs)?;
    let degree = coeffs.len().saturating_sub(1).max(1);
    let d = build_ladder(params, 0);
    // P(X >= m) = column_remainder(m - 1)
    let per_step = remainder_eps / degree as f64;
    let mut m = 1;
    while d.column_remainder(m - 1) > per_step {
        m += 1;
    }
    let len = degree * m;
    let remainder_bound = degree as f64 * d.column_remainder(m - 1);
    let e0 = FockDiagonalState::fock(0);
    let col = apply_power_combination(params, coeffs, &e0, len)?;
    Ok(CombinationColumn {
        sum: compensated_sum(col.weights()),
        len,
        remainder_bound,
    })
}
