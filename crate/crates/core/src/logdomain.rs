//! Log-domain probability arithmetic.
//!
//! Tail masses in the moderate deviation regime scale like `exp(-n a_n^2)`
//! and underflow linear doubles once `n a_n^2` passes ~745, so every
//! probability in this crate is carried as a natural logarithm.

/// log(exp(a) + exp(b)) without leaving the log domain.
pub fn logaddexp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// log(sum_i exp(x_i)) over a slice; -inf for an empty slice.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let mut max = f64::NEG_INFINITY;
    for &x in xs {
        if x > max {
            max = x;
        }
    }
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let mut acc = 0.0;
    for &x in xs {
        acc += (x - max).exp();
    }
    max + acc.ln()
}

/// Streaming logsumexp for cases where materialising a slice is wasteful.
#[derive(Debug, Clone, Copy)]
pub struct LogSum {
    max: f64,
    acc: f64,
}

impl LogSum {
    pub fn new() -> Self {
        LogSum {
            max: f64::NEG_INFINITY,
            acc: 0.0,
        }
    }

    pub fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x <= self.max {
            self.acc += (x - self.max).exp();
        } else {
            if self.max != f64::NEG_INFINITY {
                self.acc = self.acc * (self.max - x).exp() + 1.0;
            } else {
                self.acc = 1.0;
            }
            self.max = x;
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.acc.ln()
        }
    }
}

impl Default for LogSum {
    fn default() -> Self {
        Self::new()
    }
}

/// log(1 - exp(x)) for x <= 0, stable for x near 0 and for very negative x.
pub fn ln_1m_exp(x: f64) -> f64 {
    debug_assert!(x <= 0.0);
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    if x > -std::f64::consts::LN_2 {
        // 1 - e^x is small: use expm1 for accuracy.
        (-x.exp_m1()).ln()
    } else {
        (-x).exp_m1().ln() + x
    }
}

/// An error-probability level that stays exact at both ends of (0, 1).
///
/// `Low` keeps `ln eps`, `High` keeps `ln(1 - eps)`; either side may be far
/// below the smallest positive double.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Epsilon {
    /// eps = exp(ln_eps)
    Low { ln_eps: f64 },
    /// eps = 1 - exp(ln_complement)
    High { ln_complement: f64 },
}

impl Epsilon {
    /// Build from a plain probability in (0, 1).
    pub fn from_prob(eps: f64) -> Option<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return None;
        }
        if eps <= 0.5 {
            Some(Epsilon::Low { ln_eps: eps.ln() })
        } else {
            Some(Epsilon::High {
                ln_complement: (1.0 - eps).ln(),
            })
        }
    }

    pub fn low(ln_eps: f64) -> Self {
        Epsilon::Low { ln_eps }
    }

    pub fn high(ln_complement: f64) -> Self {
        Epsilon::High { ln_complement }
    }

    /// ln(eps).
    pub fn ln_eps(&self) -> f64 {
        match *self {
            Epsilon::Low { ln_eps } => ln_eps,
            Epsilon::High { ln_complement } => ln_1m_exp(ln_complement),
        }
    }

    /// ln(1 - eps).
    pub fn ln_complement(&self) -> f64 {
        match *self {
            Epsilon::Low { ln_eps } => ln_1m_exp(ln_eps),
            Epsilon::High { ln_complement } => ln_complement,
        }
    }

    /// The probability as a double (may round to 0 or 1 at extreme levels).
    pub fn as_f64(&self) -> f64 {
        match *self {
            Epsilon::Low { ln_eps } => ln_eps.exp(),
            Epsilon::High { ln_complement } => 1.0 - ln_complement.exp(),
        }
    }

    /// eps scaled by a positive factor (e.g. eps/2 or 2*eps), staying in log form.
    pub fn scale(&self, factor: f64) -> Option<Self> {
        debug_assert!(factor > 0.0);
        let ln_eps = self.ln_eps() + factor.ln();
        if ln_eps < 0.0 {
            Some(Epsilon::Low { ln_eps })
        } else {
            None
        }
    }

    /// The complementary level 1 - eps.
    pub fn complement(&self) -> Self {
        match *self {
            Epsilon::Low { ln_eps } => Epsilon::High {
                ln_complement: ln_eps,
            },
            Epsilon::High { ln_complement } => Epsilon::Low {
                ln_eps: ln_complement,
            },
        }
    }

    pub fn is_below_half(&self) -> bool {
        self.ln_eps() < -std::f64::consts::LN_2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logaddexp_matches_naive() {
        let a: f64 = -3.0;
        let b: f64 = -4.5;
        let naive = (a.exp() + b.exp()).ln();
        assert!((logaddexp(a, b) - naive).abs() < 1e-14);
    }

    #[test]
    fn logsumexp_handles_extreme_spread() {
        let v = [-1000.0, -1000.5, -2500.0];
        let got = logsumexp(&v);
        let expected = -1000.0 + (1.0 + (-0.5f64).exp() + 0.0f64).ln();
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn streaming_matches_batch() {
        let v = [-0.3, -700.0, -2.0, -0.001, -50.0];
        let mut ls = LogSum::new();
        for &x in &v {
            ls.add(x);
        }
        assert!((ls.value() - logsumexp(&v)).abs() < 1e-13);
    }

    #[test]
    fn ln_1m_exp_both_branches() {
        let x: f64 = -1e-9;
        assert!((ln_1m_exp(x) - (1e-9f64).ln()).abs() < 1e-6);
        let y: f64 = -50.0;
        assert!((ln_1m_exp(y) - (-(-50.0f64).exp()).ln_1p()).abs() < 1e-15);
    }

    #[test]
    fn epsilon_round_trips() {
        let e = Epsilon::from_prob(0.25).unwrap();
        assert!((e.as_f64() - 0.25).abs() < 1e-15);
        assert!((e.ln_complement() - 0.75f64.ln()).abs() < 1e-15);
        let h = Epsilon::high(-300.0);
        assert!((h.ln_eps() - ln_1m_exp(-300.0)).abs() < 1e-15);
        assert!(!h.is_below_half());
        assert!(h.complement().is_below_half());
    }
}
