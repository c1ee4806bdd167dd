//! Nussbaum-Szkola reduction, quantum and classical relative entropy and
//! variance, the cumulant generating function of the log-likelihood ratio
//! with its derivative bounds, and the Petz Renyi divergence.

use crate::config::Tolerances;
use crate::linalg::{self, CMatrix};
use crate::qstate::{spectral_decompose, DensityMatrix, QStateError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Presentation log base for divergences carried by a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LogBase {
    Two,
    E,
}

impl LogBase {
    /// Natural log of the base: divide nats by this to land in the base.
    pub fn ln(&self) -> f64 {
        match self {
            LogBase::Two => std::f64::consts::LN_2,
            LogBase::E => 1.0,
        }
    }
}

#[derive(Debug, Error)]
pub enum NsDistError {
    #[error("distribution does not normalise: sum {which} = {sum}")]
    NotNormalized { which: &'static str, sum: f64 },

    #[error("invalid atom (p={p}, q={q}): {reason}")]
    InvalidAtom { p: f64, q: f64, reason: &'static str },

    #[error("unsupported pair: {0}")]
    UnsupportedPair(String),

    #[error("infinite log-likelihood ratio (an atom has p > 0, q = 0)")]
    InfiniteLLR,

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error(transparent)]
    State(#[from] QStateError),
}

/// One classical outcome: probabilities under both hypotheses and the
/// log-likelihood ratio in the pair's base.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Atom {
    pub p: f64,
    pub q: f64,
    /// log_base(p/q); +inf when q = 0 < p, -inf when p = 0 < q.
    pub z: f64,
}

/// A pair of classical distributions on a common alphabet, with per-atom
/// log-likelihood ratios. Houses the Nussbaum-Szkola reduction of a pair of
/// quantum states.
#[derive(Debug, Clone)]
pub struct ClassicalPair {
    atoms: Vec<Atom>,
    base: LogBase,
    /// Smallest eigenvalue of the sigma that generated the pair (or supplied
    /// directly for synthetic pairs); 0 only for unsupported pairs.
    lambda_min_sigma: f64,
    allow_infinite_llr: bool,
}

/// Wire format: {"atoms": [[p, q], ...], "lambda_min_sigma": x}. The
/// log-likelihood ratios are always recomputed on load, never trusted.
#[derive(Serialize, Deserialize)]
struct ClassicalPairWire {
    atoms: Vec<[f64; 2]>,
    lambda_min_sigma: f64,
    #[serde(default)]
    base: Option<LogBase>,
    #[serde(default)]
    allow_infinite_llr: bool,
}

impl Serialize for ClassicalPair {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ClassicalPairWire {
            atoms: self.atoms.iter().map(|a| [a.p, a.q]).collect(),
            lambda_min_sigma: self.lambda_min_sigma,
            base: Some(self.base),
            allow_infinite_llr: self.allow_infinite_llr,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ClassicalPair {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let wire = ClassicalPairWire::deserialize(deserializer)?;
        let atoms: Vec<(f64, f64)> = wire.atoms.iter().map(|&[p, q]| (p, q)).collect();
        ClassicalPair::new(
            &atoms,
            wire.base.unwrap_or(LogBase::E),
            wire.lambda_min_sigma,
            wire.allow_infinite_llr,
        )
        .map_err(serde::de::Error::custom)
    }
}

/// Atoms with both probabilities below this threshold are dropped; they
/// contribute nothing to any implemented expectation.
pub const ATOM_PRUNE_TOL: f64 = 1e-15;

impl ClassicalPair {
    /// Build and validate a pair from (p, q) atoms.
    pub fn new(
        atoms_pq: &[(f64, f64)],
        base: LogBase,
        lambda_min_sigma: f64,
        allow_infinite_llr: bool,
    ) -> Result<Self, NsDistError> {
        let mut atoms = Vec::with_capacity(atoms_pq.len());
        let (mut sum_p, mut sum_q) = (0.0, 0.0);
        for &(p, q) in atoms_pq {
            if p < 0.0 || q < 0.0 {
                return Err(NsDistError::InvalidAtom {
                    p,
                    q,
                    reason: "negative probability",
                });
            }
            sum_p += p;
            sum_q += q;
            if p < ATOM_PRUNE_TOL && q < ATOM_PRUNE_TOL {
                continue;
            }
            if p > 0.0 && q == 0.0 && !allow_infinite_llr {
                return Err(NsDistError::InfiniteLLR);
            }
            let z = if p > 0.0 && q > 0.0 {
                (p / q).ln() / base.ln()
            } else if p > 0.0 {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            };
            atoms.push(Atom { p, q, z });
        }
        if (sum_p - 1.0).abs() > 1e-10 {
            return Err(NsDistError::NotNormalized {
                which: "p",
                sum: sum_p,
            });
        }
        if (sum_q - 1.0).abs() > 1e-10 {
            return Err(NsDistError::NotNormalized {
                which: "q",
                sum: sum_q,
            });
        }
        if atoms.is_empty() {
            return Err(NsDistError::InvalidAtom {
                p: 0.0,
                q: 0.0,
                reason: "no surviving atoms",
            });
        }
        Ok(ClassicalPair {
            atoms,
            base,
            lambda_min_sigma,
            allow_infinite_llr,
        })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn base(&self) -> LogBase {
        self.base
    }

    pub fn lambda_min_sigma(&self) -> f64 {
        self.lambda_min_sigma
    }

    /// True when some atom has p > 0 and q = 0 (rho not dominated by sigma).
    pub fn has_infinite_llr(&self) -> bool {
        self.atoms.iter().any(|a| a.p > 0.0 && a.q == 0.0)
    }

    /// Atoms restricted to the P-support, with LLR in nats.
    pub(crate) fn p_support_nats(&self) -> Result<Vec<(f64, f64)>, NsDistError> {
        if self.has_infinite_llr() {
            return Err(NsDistError::InfiniteLLR);
        }
        Ok(self
            .atoms
            .iter()
            .filter(|a| a.p > 0.0)
            .map(|a| ((a.p / a.q).ln(), a.p))
            .collect())
    }
}

/// The Nussbaum-Szkola distributions of a pair of states:
/// P(a,b) = r_a |<phi_a|psi_b>|^2, Q(a,b) = s_b |<phi_a|psi_b>|^2.
pub fn nussbaum_szkola(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    base: LogBase,
    allow_infinite_llr: bool,
    tol: &Tolerances,
) -> Result<ClassicalPair, NsDistError> {
    if rho.dim() != sigma.dim() {
        return Err(QStateError::DimensionMismatch(rho.dim(), sigma.dim()).into());
    }
    let sr = spectral_decompose(rho, tol)?;
    let ss = spectral_decompose(sigma, tol)?;
    let d = rho.dim();
    let mut atoms = Vec::with_capacity(d * d);
    for a in 0..d {
        let ra = sr.eigenvalues[a];
        for b in 0..d {
            let sb = ss.eigenvalues[b];
            let mut ov = num_complex::Complex64::new(0.0, 0.0);
            for i in 0..d {
                ov += sr.eigenvectors[(i, a)].conj() * ss.eigenvectors[(i, b)];
            }
            let overlap = ov.norm_sqr();
            atoms.push((ra * overlap, sb * overlap));
        }
    }
    let lambda = ss.eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
    ClassicalPair::new(&atoms, base, lambda, allow_infinite_llr)
}

fn sigma_support_defect(rho: &DensityMatrix, sigma_spec: &crate::qstate::Spectrum, tol: &Tolerances) -> f64 {
    let d = rho.dim();
    let mut mass = 0.0;
    for b in 0..d {
        if sigma_spec.eigenvalues[b] <= tol.psd_tol {
            let v = sigma_spec.eigenvectors.column(b).clone_owned();
            mass += linalg::expectation(rho.matrix(), &v);
        }
    }
    mass
}

const LOG_ZERO_TOL: f64 = 1e-14;

fn log_matrix(spec: &crate::qstate::Spectrum) -> CMatrix {
    linalg::spectral_map(
        &spec.eigenvalues,
        &spec.eigenvectors,
        LOG_ZERO_TOL,
        |x| x.ln(),
        0.0,
    )
}

/// Umegaki relative entropy D(rho||sigma) = Tr rho (log rho - log sigma),
/// in the chosen base; +inf when supp(rho) is not contained in supp(sigma).
pub fn quantum_relative_entropy(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    base: LogBase,
    tol: &Tolerances,
) -> Result<f64, NsDistError> {
    Ok(quantum_d_and_v(rho, sigma, tol)?.0 / base.ln())
}

/// Relative entropy variance V(rho||sigma) = Tr rho (log rho - log sigma - D)^2,
/// in squared units of the chosen base; +inf when unsupported.
pub fn quantum_relative_entropy_variance(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    base: LogBase,
    tol: &Tolerances,
) -> Result<f64, NsDistError> {
    let v = quantum_d_and_v(rho, sigma, tol)?.1;
    Ok(v / (base.ln() * base.ln()))
}

/// (D, V) in nats via dense functional calculus; the route is independent of
/// the Nussbaum-Szkola atom sums it is checked against.
pub fn quantum_d_and_v(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    tol: &Tolerances,
) -> Result<(f64, f64), NsDistError> {
    if rho.dim() != sigma.dim() {
        return Err(QStateError::DimensionMismatch(rho.dim(), sigma.dim()).into());
    }
    let ss = spectral_decompose(sigma, tol)?;
    if ss.eigenvalues.last().copied().unwrap_or(0.0) <= tol.psd_tol
        && sigma_support_defect(rho, &ss, tol) > tol.psd_tol
    {
        return Ok((f64::INFINITY, f64::INFINITY));
    }
    let sr = spectral_decompose(rho, tol)?;
    let delta = log_matrix(&sr) - log_matrix(&ss);
    let d = linalg::trace_product_re(rho.matrix(), &delta);
    let delta_sq = &delta * &delta;
    let second = linalg::trace_product_re(rho.matrix(), &delta_sq);
    Ok((d, (second - d * d).max(0.0)))
}

/// Mean, variance and third absolute central moment of the LLR under P,
/// in the pair's base.
pub fn classical_divergence_stats(pair: &ClassicalPair) -> Result<(f64, f64, f64), NsDistError> {
    let atoms = pair.p_support_nats()?;
    let bf = pair.base().ln();
    let mut d = 0.0;
    for &(z, p) in &atoms {
        d += p * z;
    }
    let (mut v, mut t) = (0.0, 0.0);
    for &(z, p) in &atoms {
        let c = z - d;
        v += p * c * c;
        t += p * c.abs().powi(3);
    }
    Ok((d / bf, v / (bf * bf), t / (bf * bf * bf)))
}

/// k-th derivative (k = 0..3) of the cumulant generating function
/// h(s) = ln E_P[e^{sZ}] of the log-likelihood ratio, evaluated at s.
///
/// Z is taken in nats regardless of the pair's presentation base.
pub fn cgf(pair: &ClassicalPair, s: f64, k: u8) -> Result<f64, NsDistError> {
    if !(0..=3).contains(&k) {
        return Err(NsDistError::OutOfRange(format!("cgf derivative order {k}")));
    }
    if s.abs() > 1.0 {
        return Err(NsDistError::OutOfRange(format!("cgf tilt |{s}| > 1")));
    }
    let atoms = pair.p_support_nats()?;
    // Shifted moments m~_j = sum p z^j e^{s z - M}; the shift cancels in the
    // quotient cascade below.
    let shift = atoms
        .iter()
        .map(|&(z, _)| s * z)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut m = [0.0f64; 4];
    for &(z, p) in &atoms {
        let w = p * (s * z - shift).exp();
        let mut zj = 1.0;
        for slot in m.iter_mut() {
            *slot += w * zj;
            zj *= z;
        }
    }
    let value = match k {
        0 => m[0].ln() + shift,
        1 => m[1] / m[0],
        2 => (m[2] * m[0] - m[1] * m[1]) / (m[0] * m[0]),
        _ => {
            (m[3] * m[0] * m[0] - 3.0 * m[2] * m[1] * m[0] + 2.0 * m[1] * m[1] * m[1])
                / (m[0] * m[0] * m[0])
        }
    };
    Ok(value)
}

/// Raw moment-generating-function derivative sum_a p_a z_a^k e^{s z_a}
/// (k = 0 gives m itself); used by the derivative-bound checks.
pub fn mgf_derivative(pair: &ClassicalPair, s: f64, k: u8) -> Result<f64, NsDistError> {
    let atoms = pair.p_support_nats()?;
    let mut acc = 0.0;
    for &(z, p) in &atoms {
        acc += p * z.powi(k as i32) * (s * z).exp();
    }
    Ok(acc)
}

/// Closed-form bound on |m^{(k)}(t)| for |t| <= 1/2 when lambda_min(sigma)
/// >= lambda, together with the companion floor on m itself.
#[derive(Debug, Clone, Copy)]
pub struct CumulantBound {
    /// C_k(lambda) = (1/sqrt(lambda)) [ln^k(1/lambda) + (2k/e)^k].
    pub c_k: f64,
    /// The floor 1/(d*lambda) quoted for m on [0, 1]; tight only at
    /// lambda = 1/d (see `mgf_floor_pointwise` for the pointwise form).
    pub mgf_floor: f64,
}

/// Derivative bound C_k(lambda) and the m-floor for a d-dimensional pair.
pub fn cumulant_bound(lambda: f64, k: u8, d: usize) -> Result<CumulantBound, NsDistError> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(NsDistError::OutOfRange(format!("lambda {lambda}")));
    }
    if !(1..=3).contains(&k) {
        return Err(NsDistError::OutOfRange(format!("cumulant order {k}")));
    }
    let lk = (1.0 / lambda).ln().powi(k as i32);
    let ek = (2.0 * k as f64 / std::f64::consts::E).powi(k as i32);
    Ok(CumulantBound {
        c_k: (lk + ek) / lambda.sqrt(),
        mgf_floor: 1.0 / (d as f64 * lambda),
    })
}

/// Pointwise Jensen floor e^{tD} on m(t) for t >= 0 (D in nats); this is
/// the bound that actually keeps the cumulant quotients away from zero.
/// The quoted 1/(d*lambda) floor is tight only for lambda = 1/d, where both
/// expressions equal 1.
pub fn mgf_floor_pointwise(d_nats: f64, t: f64) -> f64 {
    (t * d_nats).exp()
}

/// Petz quantum Renyi relative entropy
/// D_alpha = (1/(alpha-1)) log Tr(rho^alpha sigma^{1-alpha}) for alpha in [0, 1).
pub fn petz_renyi(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    alpha: f64,
    base: LogBase,
    tol: &Tolerances,
) -> Result<f64, NsDistError> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(NsDistError::OutOfRange(format!("alpha {alpha}")));
    }
    if rho.dim() != sigma.dim() {
        return Err(QStateError::DimensionMismatch(rho.dim(), sigma.dim()).into());
    }
    let sr = spectral_decompose(rho, tol)?;
    let ss = spectral_decompose(sigma, tol)?;
    // rho^alpha with 0^alpha = 0 (0^0 -> support projector for alpha = 0).
    let r_pow = linalg::spectral_map(
        &sr.eigenvalues,
        &sr.eigenvectors,
        LOG_ZERO_TOL,
        |x| x.powf(alpha),
        0.0,
    );
    let s_pow = linalg::spectral_map(
        &ss.eigenvalues,
        &ss.eigenvectors,
        LOG_ZERO_TOL,
        |x| x.powf(1.0 - alpha),
        0.0,
    );
    let trace = linalg::trace_product_re(&r_pow, &s_pow);
    if trace <= 0.0 {
        return Err(NsDistError::UnsupportedPair(format!(
            "Tr(rho^a sigma^(1-a)) = {trace} at alpha = {alpha}"
        )));
    }
    Ok(trace.ln() / (alpha - 1.0) / base.ln())
}

/// Result of the Hoeffding-exponent maximisation.
#[derive(Debug, Clone, Copy)]
pub struct HoeffdingExponent {
    pub exponent: f64,
    pub argmax_alpha: f64,
}

/// sup over alpha in [0,1) of ((alpha-1)/alpha) [D - r - D_alpha(rho||sigma)],
/// the exponent at which the type-I error drops when the rate is backed off
/// from D by r. Coarse grid then golden-section refinement.
pub fn hoeffding_exponent(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    r: f64,
    grid: usize,
    base: LogBase,
    tol: &Tolerances,
) -> Result<HoeffdingExponent, NsDistError> {
    let d = quantum_relative_entropy(rho, sigma, base, tol)?;
    if !(r > 0.0 && r < d) {
        return Err(NsDistError::OutOfRange(format!(
            "need 0 < r < D = {d}, got r = {r}"
        )));
    }
    let grid = grid.max(8);
    let objective = |alpha: f64| -> f64 {
        match petz_renyi(rho, sigma, alpha, base, tol) {
            Ok(da) => (alpha - 1.0) / alpha * (d - r - da),
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let lo = 1e-6;
    let hi = 1.0 - 1e-9;
    let mut best_i = 0usize;
    let mut best = f64::NEG_INFINITY;
    let alphas: Vec<f64> = (0..grid)
        .map(|i| lo + (hi - lo) * i as f64 / (grid - 1) as f64)
        .collect();
    for (i, &a) in alphas.iter().enumerate() {
        let v = objective(a);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    // Golden-section refinement between the grid neighbours of the best point.
    let mut a = alphas[best_i.saturating_sub(1)];
    let mut b = alphas[(best_i + 1).min(grid - 1)];
    let inv_phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = objective(x1);
    let mut f2 = objective(x2);
    while b - a > 1e-8 {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = objective(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = objective(x2);
        }
    }
    let argmax_alpha = 0.5 * (a + b);
    Ok(HoeffdingExponent {
        exponent: objective(argmax_alpha).max(best),
        argmax_alpha,
    })
}
