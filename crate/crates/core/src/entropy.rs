//! Shannon and Rényi entropies of Fock-diagonal states, in nats.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::compensated_sum;
use crate::state::FockDiagonalState;
use crate::transition::TransitionGrid;

/// Entries at or below this are exact zeros in entropy sums.
pub const ZERO_FLOOR: f64 = 1e-300;
pub const CHAIN_TOL: f64 = 1e-12;

fn support(p: &FockDiagonalState) -> impl Iterator<Item = f64> + '_ {
    p.weights().iter().copied().filter(|&w| w > ZERO_FLOOR)
}

pub fn shannon(p: &FockDiagonalState) -> f64 {
    let terms: Vec<f64> = support(p).map(|w| -w * w.ln()).collect();
    compensated_sum(&terms)
}

/// Rényi entropy of the given order. Order 1 is Shannon, order 0 the log of
/// the support size and `f64::INFINITY` the min-entropy `-ln max p`.
pub fn renyi(p: &FockDiagonalState, order: f64) -> Result<f64> {
    if !(order >= 0.0) {
        return Err(Error::domain("order", order, "Rényi order must be >= 0"));
    }
    if order == 1.0 {
        return Ok(shannon(p));
    }
    if order == 0.0 {
        return Ok((support(p).count() as f64).ln());
    }
    if order.is_infinite() {
        let max = support(p).fold(0.0, f64::max);
        return Ok(-max.ln());
    }
    let terms: Vec<f64> = support(p).map(|w| w.powf(order)).collect();
    Ok(compensated_sum(&terms).ln() / (1.0 - order))
}

/// `None` selects Shannon.
pub fn entropy_of_order(p: &FockDiagonalState, order: Option<f64>) -> Result<f64> {
    match order {
        None => Ok(shannon(p)),
        Some(s) => renyi(p, s),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyChainReport {
    /// `shannon`, or `renyi(<order>)`.
    pub measure: String,
    pub values: Vec<f64>,
    pub monotone: bool,
    /// `max_i (S_i - S_{i+1})`; nonpositive for a non-decreasing chain.
    pub worst_violation: f64,
    pub at_index: usize,
}

/// Entropy of every row of the grid and whether it never decreases with
/// the input photon number (up to [`CHAIN_TOL`]).
pub fn chain_check(grid: &TransitionGrid, order: Option<f64>) -> Result<EntropyChainReport> {
    let values = (0..=grid.i_max)
        .map(|i| entropy_of_order(&grid.state(i), order))
        .collect::<Result<Vec<f64>>>()?;
    let (worst_violation, at_index) = values
        .windows(2)
        .enumerate()
        .map(|(i, w)| (w[0] - w[1], i))
        .fold((f64::NEG_INFINITY, 0), |acc, x| if x.0 > acc.0 { x } else { acc });
    let worst_violation = if values.len() < 2 { 0.0 } else { worst_violation };
    Ok(EntropyChainReport {
        measure: measure_label(order),
        monotone: worst_violation <= CHAIN_TOL,
        worst_violation,
        at_index,
        values,
    })
}

pub fn measure_label(order: Option<f64>) -> String {
    match order {
        None => "shannon".into(),
        Some(s) if s.is_infinite() => "renyi(inf)".into(),
        Some(s) => format!("renyi({s})"),
    }
}

/// Converts nats to bits.
pub fn to_bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}
