//! Moderate-sequence bookkeeping, regime classification, the reversing
//! transforms on tabulated function pairs, and error-exponent predictions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModDevError {
    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("unclassifiable rate specification: {0}")]
    UnclassifiableSpec(String),

    #[error("dispersion is zero")]
    ZeroDispersion,
}

/// The sequence a_n = c n^{-t} with t strictly inside (0, 1/2), paired with
/// the error level eps_n = exp(-n a_n^2). Boundary exponents belong to the
/// large- and small-deviation analyses and are rejected.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ModerateSequence {
    c: f64,
    t: f64,
}

impl ModerateSequence {
    pub fn new(c: f64, t: f64) -> Result<Self, ModDevError> {
        if !(c > 0.0) {
            return Err(ModDevError::OutOfRange(format!("scale c = {c} must be > 0")));
        }
        if !(t > 0.0 && t < 0.5) {
            return Err(ModDevError::OutOfRange(format!(
                "exponent t = {t} must lie strictly inside (0, 1/2)"
            )));
        }
        Ok(ModerateSequence { c, t })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn a(&self, n: u64) -> f64 {
        self.c * (n as f64).powf(-self.t)
    }

    /// ln eps_n = -n a_n^2; the level itself may underflow linear doubles.
    pub fn ln_eps(&self, n: u64) -> f64 {
        let a = self.a(n);
        -(n as f64) * a * a
    }

    pub fn eps(&self, n: u64) -> f64 {
        self.ln_eps(n).exp()
    }

    /// Smallest n with a(n) <= threshold; the "valid from" index of bounds
    /// whose preconditions need the deviation small enough.
    pub fn first_valid_n(&self, threshold: f64) -> Option<u64> {
        if !(threshold > 0.0) {
            return None;
        }
        if self.a(1) <= threshold {
            return Some(1);
        }
        let raw = (self.c / threshold).powf(1.0 / self.t);
        if raw > 1e18 {
            return None;
        }
        let mut n = raw.ceil() as u64;
        while n > 1 && self.a(n - 1) <= threshold {
            n -= 1;
        }
        while self.a(n) > threshold {
            n += 1;
        }
        Some(n)
    }
}

/// Scaling of the gap between code rate and capacity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RateOffset {
    /// rate = C - Theta(1)
    ConstantBelow,
    /// rate = C - Theta(n^{-t}), t in (0, 1/2)
    PowerBelow(f64),
    /// rate = C -/+ Theta(n^{-1/2}) (sign immaterial at this scaling)
    SqrtScaling,
    /// rate = C + Theta(n^{-t}), t in (0, 1/2)
    PowerAbove(f64),
    /// rate = C + Theta(1)
    ConstantAbove,
}

/// The five asymptotic regimes of the error/rate tradeoff.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// I: error exponent, error prob exp(-Theta(n))
    ErrorExponent,
    /// II: moderate deviation below capacity
    ModerateBelow,
    /// III: constant error (second order)
    SecondOrder,
    /// IV: moderate deviation above capacity
    ModerateAbove,
    /// V: strong converse exponent
    StrongConverse,
}

impl Regime {
    /// The canonical error-probability column of the regime table.
    pub fn error_behavior(&self) -> &'static str {
        match self {
            Regime::ErrorExponent => "exp(-Theta(n))",
            Regime::ModerateBelow => "exp(-o(n)) and omega(1)",
            Regime::SecondOrder => "Theta(1)",
            Regime::ModerateAbove => "1 - exp(-o(n)) and 1 - omega(1)",
            Regime::StrongConverse => "1 - exp(-Theta(n))",
        }
    }

    pub fn numeral(&self) -> &'static str {
        match self {
            Regime::ErrorExponent => "I",
            Regime::ModerateBelow => "II",
            Regime::SecondOrder => "III",
            Regime::ModerateAbove => "IV",
            Regime::StrongConverse => "V",
        }
    }
}

/// Classify a declared rate-offset scaling into one of the five regimes.
///
/// An optional declared error behaviour is cross-checked against the
/// regime's canonical row; a mismatch is unclassifiable rather than
/// silently reinterpreted. Theta(n^{-1/2}) offsets classify as the
/// second-order regime regardless of sign.
pub fn regime_classify(
    offset: RateOffset,
    declared_error_behavior: Option<&str>,
) -> Result<Regime, ModDevError> {
    let regime = match offset {
        RateOffset::ConstantBelow => Regime::ErrorExponent,
        RateOffset::PowerBelow(t) => {
            if !(t > 0.0 && t < 0.5) {
                return Err(ModDevError::UnclassifiableSpec(format!(
                    "below-capacity power offset needs t in (0, 1/2), got {t}"
                )));
            }
            Regime::ModerateBelow
        }
        RateOffset::SqrtScaling => Regime::SecondOrder,
        RateOffset::PowerAbove(t) => {
            if !(t > 0.0 && t < 0.5) {
                return Err(ModDevError::UnclassifiableSpec(format!(
                    "above-capacity power offset needs t in (0, 1/2), got {t}"
                )));
            }
            Regime::ModerateAbove
        }
        RateOffset::ConstantAbove => Regime::StrongConverse,
    };
    if let Some(declared) = declared_error_behavior {
        if declared != regime.error_behavior() {
            return Err(ModDevError::UnclassifiableSpec(format!(
                "declared error behaviour {declared:?} does not match the \
                 {} row {:?}",
                regime.numeral(),
                regime.error_behavior()
            )));
        }
    }
    Ok(regime)
}

/// Two real functions tabulated on a common finite grid, the setting in
/// which the reversing transforms are exactly computable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TabulatedFunctionPair {
    pub domain: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl TabulatedFunctionPair {
    /// Requires matching lengths and inf A <= 0, inf B <= 0 (the transform
    /// hypotheses made checkable).
    pub fn new(domain: Vec<f64>, a: Vec<f64>, b: Vec<f64>) -> Result<Self, ModDevError> {
        if domain.is_empty() || domain.len() != a.len() || domain.len() != b.len() {
            return Err(ModDevError::OutOfRange(
                "domain, A and B must share a nonempty length".into(),
            ));
        }
        let inf_a = a.iter().cloned().fold(f64::INFINITY, f64::min);
        let inf_b = b.iter().cloned().fold(f64::INFINITY, f64::min);
        if inf_a > 0.0 || inf_b > 0.0 {
            return Err(ModDevError::OutOfRange(format!(
                "need inf A <= 0 and inf B <= 0, got {inf_a} and {inf_b}"
            )));
        }
        Ok(TabulatedFunctionPair { domain, a, b })
    }

    pub fn inf_a(&self) -> f64 {
        self.a.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Which of the two hat transforms to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HatWhich {
    /// A^(b) = inf { A(t) : B(t) <= b }
    AHat,
    /// B^(a) = inf { B(t) : A(t) <= a }
    BHat,
}

/// Exact constrained infimum over the grid; +inf sentinel when the
/// constraint set is empty.
pub fn hat_transform(pair: &TabulatedFunctionPair, which: HatWhich, level: f64) -> f64 {
    let (objective, constraint) = match which {
        HatWhich::AHat => (&pair.a, &pair.b),
        HatWhich::BHat => (&pair.b, &pair.a),
    };
    let mut best = f64::INFINITY;
    for (o, c) in objective.iter().zip(constraint) {
        if *c <= level && *o < best {
            best = *o;
        }
    }
    best
}

/// Evaluate the two reversing inequalities
/// A^(B^(a) + delta) <= a  and  A^(B^(a) - delta) >= a
/// on a tabulated pair; requires a >= inf A and delta > 0.
pub fn reversal_check(
    pair: &TabulatedFunctionPair,
    a: f64,
    delta: f64,
) -> Result<(bool, bool), ModDevError> {
    if !(delta > 0.0) {
        return Err(ModDevError::OutOfRange(format!("delta = {delta} must be > 0")));
    }
    if a < pair.inf_a() {
        return Err(ModDevError::OutOfRange(format!(
            "level a = {a} below inf A = {}",
            pair.inf_a()
        )));
    }
    let b_hat = hat_transform(pair, HatWhich::BHat, a);
    let upper = hat_transform(pair, HatWhich::AHat, b_hat + delta) <= a;
    let lower = hat_transform(pair, HatWhich::AHat, b_hat - delta) >= a;
    Ok((upper, lower))
}

/// Predicted normalised log error -1/(2V): the limit of
/// ln(eps)/(n s_n^2) for codes backing off capacity by a moderate s_n.
pub fn error_exponent_prediction(v: f64) -> Result<f64, ModDevError> {
    if !(v > 0.0) {
        return Err(ModDevError::ZeroDispersion);
    }
    Ok(-1.0 / (2.0 * v))
}

/// Ratio report A^(b)/b over a grid of levels, for inspecting how close a
/// tabulated pair sits to the reversing fixed point. Infeasible levels
/// yield the +inf sentinel in the value column.
pub fn hat_ratio_report(
    pair: &TabulatedFunctionPair,
    levels: &[f64],
) -> Vec<(f64, f64, f64)> {
    levels
        .iter()
        .map(|&b| {
            let a_hat = hat_transform(pair, HatWhich::AHat, b);
            (b, a_hat, a_hat / b)
        })
        .collect()
}
