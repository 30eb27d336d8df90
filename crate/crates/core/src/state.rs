use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::compensated_sum;

/// Largest tolerated deviation of `sum(weights) + tail` from one.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// A state diagonal in the Fock basis, truncated to `weights.len()` levels.
///
/// `tail` is the probability mass beyond the last stored level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FockDiagonalState {
    weights: Vec<f64>,
    tail: f64,
}

impl FockDiagonalState {
    pub fn new(weights: Vec<f64>, tail: f64) -> Result<Self> {
        if !(tail >= 0.0) {
            return Err(Error::Invalid(format!("tail must be nonnegative, got {tail}")));
        }
        if let Some(&w) = weights.iter().find(|w| !(**w >= -1e-15) || !w.is_finite()) {
            return Err(Error::Invalid(format!(
                "weights must be finite and nonnegative, got {w}"
            )));
        }
        let weights: Vec<f64> = weights.into_iter().map(|w| w.max(0.0)).collect();
        let state = FockDiagonalState { weights, tail };
        state.check_normalized("state")?;
        Ok(state)
    }

    /// A probability vector with no truncated mass.
    pub fn from_probabilities(weights: Vec<f64>) -> Result<Self> {
        Self::new(weights, 0.0)
    }

    pub(crate) fn from_parts(weights: Vec<f64>, tail: f64) -> Self {
        FockDiagonalState { weights, tail }
    }

    /// The Fock state `|k><k|`.
    pub fn fock(k: usize) -> Self {
        let mut weights = vec![0.0; k + 1];
        weights[k] = 1.0;
        FockDiagonalState { weights, tail: 0.0 }
    }

    /// `sum_j coeffs[j] * components[j]`; the result is padded to the longest component.
    pub fn mixture(coeffs: &[f64], components: &[&FockDiagonalState]) -> Result<Self> {
        if coeffs.len() != components.len() {
            return Err(Error::Invalid(format!(
                "{} mixture weights for {} components",
                coeffs.len(),
                components.len()
            )));
        }
        check_probability_vector(coeffs)?;
        let len = components.iter().map(|s| s.len()).max().unwrap_or(0);
        let mut weights = vec![0.0; len];
        let mut tail = 0.0;
        for (&c, s) in coeffs.iter().zip(components) {
            if c == 0.0 {
                continue;
            }
            for (w, &v) in weights.iter_mut().zip(&s.weights) {
                *w += c * v;
            }
            tail += c * s.tail;
        }
        Ok(FockDiagonalState { weights, tail })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn tail(&self) -> f64 {
        self.tail
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn into_parts(self) -> (Vec<f64>, f64) {
        (self.weights, self.tail)
    }

    pub fn total(&self) -> f64 {
        compensated_sum(&self.weights) + self.tail
    }

    pub fn check_normalized(&self, what: &'static str) -> Result<()> {
        let total = self.total();
        let deviation = (total - 1.0).abs();
        if !(deviation <= NORMALIZATION_TOL) {
            return Err(Error::Normalization { what, total, deviation });
        }
        Ok(())
    }

    /// Mean photon number of the stored levels, `sum_n n * w_n`.
    pub fn energy(&self) -> f64 {
        let terms: Vec<f64> = self.weights.iter().enumerate().map(|(n, w)| n as f64 * w).collect();
        compensated_sum(&terms)
    }

    /// Energy interval compatible with the truncated mass: the tail sits at
    /// level `len()` at least and at `k_max` at most.
    pub fn energy_bounds(&self, k_max: usize) -> (f64, f64) {
        let base = self.energy();
        let lower = base + self.len() as f64 * self.tail;
        let upper = base + k_max.max(self.len()) as f64 * self.tail;
        (lower, upper)
    }

    /// Zero-padded copy of the weights of length `len` (never shorter than
    /// the stored levels).
    pub fn padded(&self, len: usize) -> Vec<f64> {
        let mut w = self.weights.clone();
        if w.len() < len {
            w.resize(len, 0.0);
        }
        w
    }
}

/// Nonnegative entries summing to one within [`NORMALIZATION_TOL`].
pub fn check_probability_vector(c: &[f64]) -> Result<()> {
    if c.is_empty() {
        return Err(Error::Invalid("empty probability vector".into()));
    }
    if let Some(&w) = c.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
        return Err(Error::Invalid(format!("mixture weight {w} is not a probability")));
    }
    let total = compensated_sum(c);
    let deviation = (total - 1.0).abs();
    if deviation > NORMALIZATION_TOL {
        return Err(Error::Normalization {
            what: "mixture weights",
            total,
            deviation,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unnormalized_and_negative() {
        assert!(matches!(
            FockDiagonalState::new(vec![0.5, 0.4], 0.0),
            Err(Error::Normalization { .. })
        ));
        assert!(FockDiagonalState::new(vec![1.1, -0.1], 0.0).is_err());
        assert!(FockDiagonalState::new(vec![0.5, 0.5], -1e-3).is_err());
        assert!(FockDiagonalState::new(vec![0.5, 0.4], 0.1).is_ok());
    }

    #[test]
    fn mixture_and_energy() {
        let a = FockDiagonalState::fock(1);
        let b = FockDiagonalState::fock(3);
        let m = FockDiagonalState::mixture(&[0.25, 0.75], &[&a, &b]).unwrap();
        assert_eq!(m.weights(), &[0.0, 0.25, 0.0, 0.75]);
        assert!((m.energy() - 2.5).abs() < 1e-15);
        assert!(FockDiagonalState::mixture(&[0.5, 0.6], &[&a, &b]).is_err());
    }

    #[test]
    fn energy_bounds_cover_tail() {
        let s = FockDiagonalState::new(vec![0.5, 0.4], 0.1).unwrap();
        let (lo, hi) = s.energy_bounds(10);
        assert!((lo - (0.4 + 0.2)).abs() < 1e-15);
        assert!((hi - (0.4 + 1.0)).abs() < 1e-15);
    }
}
