//! Single-mode phase-covariant and phase-contravariant Gaussian channels.
//!
//! Every channel family is summarized by four numbers `(alpha, beta, gamma, chi)`
//! that define the generating function of its photon-number transition
//! probabilities,
//!
//! ```text
//! h(x, z) = chi / (1 - alpha x - beta z - gamma x z),
//! ```
//!
//! together with the derived ladder weight `nu = gamma + beta * alpha`.
//! The environment enters only through `y = N / (N + 1)` where `N` is the
//! mean photon number of the thermal environment.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for the algebraic identities `alpha + beta + gamma = 1` and
/// `beta + chi = 1`.
pub const IDENTITY_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Thermal-noise lossy channel, beam splitter of transmittance `eta`.
    Lossy,
    /// Thermal-noise amplifier, two-mode squeezer of gain `g`.
    #[serde(rename = "amp")]
    Amplifier,
    /// Classical additive noise of `n` photons.
    #[serde(rename = "noise")]
    AdditiveNoise,
    /// Conjugated amplifier (phase-contravariant), gain `g`.
    #[serde(rename = "conj")]
    ConjugateAmplifier,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::Lossy,
        Family::Amplifier,
        Family::AdditiveNoise,
        Family::ConjugateAmplifier,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Lossy => "lossy",
            Family::Amplifier => "amp",
            Family::AdditiveNoise => "noise",
            Family::ConjugateAmplifier => "conj",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lossy" | "loss" | "e" => Ok(Family::Lossy),
            "amp" | "amplifier" | "a" => Ok(Family::Amplifier),
            "noise" | "additive" | "n" => Ok(Family::AdditiveNoise),
            "conj" | "conjugate" | "atilde" => Ok(Family::ConjugateAmplifier),
            _ => Err(Error::Invalid(format!(
                "unknown channel family `{s}` (expected lossy, amp, noise or conj)"
            ))),
        }
    }
}

/// A validated channel together with its native physical parameters.
///
/// Construct through [`make_channel`] or the per-family constructors, which
/// enforce `0 <= eta <= 1`, `g >= 1`, `N >= 0` and `n >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "ChannelRecord", try_from = "ChannelRecord")]
pub enum ChannelSpec {
    Lossy { eta: f64, thermal_n: f64 },
    Amplifier { gain: f64, thermal_n: f64 },
    AdditiveNoise { added_n: f64 },
    ConjugateAmplifier { gain: f64, thermal_n: f64 },
}

/// Native parameters as they arrive from flags or JSON. Fields that do not
/// belong to the requested family are ignored.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NativeParams {
    pub eta: Option<f64>,
    pub g: Option<f64>,
    pub thermal_n: Option<f64>,
    pub added_n: Option<f64>,
}

pub fn make_channel(family: Family, native: NativeParams) -> Result<ChannelSpec> {
    let thermal = native.thermal_n.unwrap_or(0.0);
    match family {
        Family::Lossy => {
            let eta = native
                .eta
                .ok_or_else(|| Error::Invalid("the lossy channel needs a transmittance (eta)".into()))?;
            ChannelSpec::lossy(eta, thermal)
        }
        Family::Amplifier => {
            let g = native
                .g
                .ok_or_else(|| Error::Invalid("the amplifier needs a gain (g)".into()))?;
            ChannelSpec::amplifier(g, thermal)
        }
        Family::AdditiveNoise => {
            let n = native
                .added_n
                .ok_or_else(|| Error::Invalid("the additive-noise channel needs n".into()))?;
            ChannelSpec::additive_noise(n)
        }
        Family::ConjugateAmplifier => {
            let g = native
                .g
                .ok_or_else(|| Error::Invalid("the conjugated amplifier needs a gain (g)".into()))?;
            ChannelSpec::conjugate_amplifier(g, thermal)
        }
    }
}

fn check_thermal(thermal_n: f64) -> Result<()> {
    if !(thermal_n >= 0.0 && thermal_n.is_finite()) {
        return Err(Error::domain(
            "N",
            thermal_n,
            "thermal photon number must be finite and >= 0",
        ));
    }
    Ok(())
}

fn check_gain(g: f64) -> Result<()> {
    if !(g >= 1.0 && g.is_finite()) {
        return Err(Error::domain("g", g, "gain must be finite and >= 1"));
    }
    Ok(())
}

impl ChannelSpec {
    pub fn lossy(eta: f64, thermal_n: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::domain("eta", eta, "transmittance must lie in [0, 1]"));
        }
        check_thermal(thermal_n)?;
        Ok(ChannelSpec::Lossy { eta, thermal_n })
    }

    pub fn amplifier(gain: f64, thermal_n: f64) -> Result<Self> {
        check_gain(gain)?;
        check_thermal(thermal_n)?;
        Ok(ChannelSpec::Amplifier { gain, thermal_n })
    }

    pub fn additive_noise(added_n: f64) -> Result<Self> {
        if !(added_n >= 0.0 && added_n.is_finite()) {
            return Err(Error::domain("n", added_n, "added noise must be finite and >= 0"));
        }
        Ok(ChannelSpec::AdditiveNoise { added_n })
    }

    pub fn conjugate_amplifier(gain: f64, thermal_n: f64) -> Result<Self> {
        check_gain(gain)?;
        check_thermal(thermal_n)?;
        Ok(ChannelSpec::ConjugateAmplifier { gain, thermal_n })
    }

    pub fn family(&self) -> Family {
        match self {
            ChannelSpec::Lossy { .. } => Family::Lossy,
            ChannelSpec::Amplifier { .. } => Family::Amplifier,
            ChannelSpec::AdditiveNoise { .. } => Family::AdditiveNoise,
            ChannelSpec::ConjugateAmplifier { .. } => Family::ConjugateAmplifier,
        }
    }

    /// Environment photon number `N`, zero for the additive-noise channel.
    pub fn thermal_n(&self) -> f64 {
        match *self {
            ChannelSpec::Lossy { thermal_n, .. }
            | ChannelSpec::Amplifier { thermal_n, .. }
            | ChannelSpec::ConjugateAmplifier { thermal_n, .. } => thermal_n,
            ChannelSpec::AdditiveNoise { .. } => 0.0,
        }
    }

    /// `y = N / (N + 1)`, always in `[0, 1)`.
    pub fn y(&self) -> f64 {
        let n = self.thermal_n();
        n / (n + 1.0)
    }

    /// Evaluates the family's row of the parameter table.
    pub fn params(&self) -> ChannelParams {
        let y = self.y();
        let (alpha, beta, gamma, chi) = match *self {
            ChannelSpec::Lossy { eta, .. } => {
                let d = 1.0 - eta * y;
                ((1.0 - eta) / d, y * (1.0 - eta) / d, (eta - y) / d, (1.0 - y) / d)
            }
            ChannelSpec::Amplifier { gain: g, .. } => {
                let d = g - y;
                (y * (g - 1.0) / d, (g - 1.0) / d, (1.0 - g * y) / d, (1.0 - y) / d)
            }
            ChannelSpec::AdditiveNoise { added_n: n } => {
                let d = n + 1.0;
                (n / d, n / d, (1.0 - n) / d, 1.0 / d)
            }
            ChannelSpec::ConjugateAmplifier { gain: g, .. } => {
                ((g * y - y + 1.0) / g, (g + y - 1.0) / g, -y, (1.0 - y) / g)
            }
        };
        ChannelParams::from_raw(alpha, beta, gamma, chi)
    }

    /// True when the channel acts as the identity on every input.
    pub fn is_identity(&self) -> bool {
        match *self {
            ChannelSpec::Lossy { eta, .. } => eta == 1.0,
            ChannelSpec::Amplifier { gain, .. } => gain == 1.0,
            ChannelSpec::AdditiveNoise { added_n } => added_n == 0.0,
            ChannelSpec::ConjugateAmplifier { .. } => false,
        }
    }

    /// Flags parameter points whose behavior is admitted but degenerate.
    pub fn boundary_note(&self) -> Option<&'static str> {
        match *self {
            ChannelSpec::ConjugateAmplifier { gain: 1.0, .. } => {
                Some("conjugated amplifier at unit gain: the output is the environment state for every input")
            }
            _ => None,
        }
    }

    pub fn record(&self) -> ChannelRecord {
        ChannelRecord::from(*self)
    }
}

impl fmt::Display for ChannelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ChannelSpec::Lossy { eta, thermal_n } => write!(f, "lossy(eta={eta}, N={thermal_n})"),
            ChannelSpec::Amplifier { gain, thermal_n } => write!(f, "amp(g={gain}, N={thermal_n})"),
            ChannelSpec::AdditiveNoise { added_n } => write!(f, "noise(n={added_n})"),
            ChannelSpec::ConjugateAmplifier { gain, thermal_n } => {
                write!(f, "conj(g={gain}, N={thermal_n})")
            }
        }
    }
}

/// Flat key/value form of a [`ChannelSpec`] used for JSON and CLI flags.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelRecord {
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    #[serde(default, rename = "N", skip_serializing_if = "Option::is_none")]
    pub thermal_n: Option<f64>,
    #[serde(default, rename = "n", skip_serializing_if = "Option::is_none")]
    pub added_n: Option<f64>,
}

impl From<ChannelSpec> for ChannelRecord {
    fn from(spec: ChannelSpec) -> Self {
        let mut rec = ChannelRecord {
            family: spec.family(),
            eta: None,
            g: None,
            thermal_n: None,
            added_n: None,
        };
        match spec {
            ChannelSpec::Lossy { eta, thermal_n } => {
                rec.eta = Some(eta);
                rec.thermal_n = Some(thermal_n);
            }
            ChannelSpec::Amplifier { gain, thermal_n } | ChannelSpec::ConjugateAmplifier { gain, thermal_n } => {
                rec.g = Some(gain);
                rec.thermal_n = Some(thermal_n);
            }
            ChannelSpec::AdditiveNoise { added_n } => rec.added_n = Some(added_n),
        }
        rec
    }
}

impl TryFrom<ChannelRecord> for ChannelSpec {
    type Error = Error;

    fn try_from(rec: ChannelRecord) -> Result<Self> {
        make_channel(
            rec.family,
            NativeParams {
                eta: rec.eta,
                g: rec.g,
                thermal_n: rec.thermal_n,
                added_n: rec.added_n,
            },
        )
    }
}

/// Generating-function coefficients of a channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub chi: f64,
    /// `gamma + beta * alpha`, the weight of the sub-diagonal band of the
    /// ladder matrix.
    pub nu: f64,
}

impl ChannelParams {
    /// Builds a parameter set without any validation; `nu` is derived.
    pub fn from_raw(alpha: f64, beta: f64, gamma: f64, chi: f64) -> Self {
        ChannelParams {
            alpha,
            beta,
            gamma,
            chi,
            nu: gamma + beta * alpha,
        }
    }

    pub fn identity() -> Self {
        ChannelParams::from_raw(0.0, 0.0, 1.0, 1.0)
    }

    /// Largest absolute difference over `(alpha, beta, gamma, chi)`.
    pub fn max_abs_diff(&self, other: &ChannelParams) -> f64 {
        [
            self.alpha - other.alpha,
            self.beta - other.beta,
            self.gamma - other.gamma,
            self.chi - other.chi,
        ]
        .iter()
        .fold(0.0_f64, |m, d| m.max(d.abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamCheck {
    pub name: String,
    /// Residual for identities, the checked quantity for sign conditions.
    pub value: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<ParamCheck>,
    pub ok: bool,
}

impl ValidationReport {
    pub fn failures(&self) -> impl Iterator<Item = &ParamCheck> {
        self.checks.iter().filter(|c| !c.ok)
    }
}

/// Checks the trace-preservation identities and the sign conditions that
/// make the ladder matrix nonnegative.
pub fn validate_params(p: &ChannelParams, tol: f64) -> ValidationReport {
    let mut checks = Vec::with_capacity(7);
    let mut push = |name: &str, value: f64, ok: bool| {
        checks.push(ParamCheck {
            name: name.to_string(),
            value,
            ok,
        })
    };
    let sum = p.alpha + p.beta + p.gamma - 1.0;
    push("alpha+beta+gamma=1", sum, sum.abs() <= tol);
    let sum = p.beta + p.chi - 1.0;
    push("beta+chi=1", sum, sum.abs() <= tol);
    let nu_resid = p.nu - (p.gamma + p.beta * p.alpha);
    push("nu=gamma+beta*alpha", nu_resid, nu_resid.abs() <= tol);
    push("alpha>=0", p.alpha, p.alpha >= -tol);
    push("0<=beta<1", p.beta, p.beta >= -tol && p.beta < 1.0);
    push("nu>=0", p.nu, p.nu >= -tol);
    push("0<chi<=1", p.chi, p.chi > 0.0 && p.chi <= 1.0 + tol);
    let ok = checks.iter().all(|c| c.ok);
    ValidationReport { checks, ok }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LimitRoute {
    /// `eta = 1 - eps`, `N = n / eps`.
    #[serde(rename = "loss")]
    ViaLoss,
    /// `g = 1 + eps`, `N = n / eps`.
    #[serde(rename = "amp")]
    ViaAmp,
}

impl FromStr for LimitRoute {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "loss" | "lossy" | "vialoss" => Ok(LimitRoute::ViaLoss),
            "amp" | "amplifier" | "viaamp" => Ok(LimitRoute::ViaAmp),
            _ => Err(Error::Invalid(format!(
                "unknown limit route `{s}` (expected loss or amp)"
            ))),
        }
    }
}

/// Approaches the additive-noise channel from the lossy or amplifier family
/// keeping `(1 - eta) N = n` or `(g - 1) N = n` fixed.
pub fn noise_limit_params(n: f64, eps: f64, route: LimitRoute) -> Result<ChannelParams> {
    if !(n >= 0.0 && n.is_finite()) {
        return Err(Error::domain("n", n, "added noise must be finite and >= 0"));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::domain("eps", eps, "limit parameter must lie in (0, 1)"));
    }
    let spec = match route {
        LimitRoute::ViaLoss => ChannelSpec::lossy(1.0 - eps, n / eps)?,
        LimitRoute::ViaAmp => ChannelSpec::amplifier(1.0 + eps, n / eps)?,
    };
    Ok(spec.params())
}
