//! Classical-quantum channel model: capacity and divergence centre,
//! min/max dispersion, finite-blocklength achievability and converse rate
//! bounds, and the moderate-deviation rate predictions.

use crate::config::Tolerances;
use crate::htd::{self, ErrorBranch, HtdError};
use crate::linalg::{self, CMatrix};
use crate::logdomain::{ln_1m_exp, Epsilon};
use crate::nsdist::NsDistError;
use crate::qstate::{
    matrix_from_json, spectral_decompose, ComplexMatrixJson, DensityMatrix, QStateError,
};
use crate::tails::{self, SumAtoms, TailsError};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("channel needs at least one input")]
    EmptyAlphabet,

    #[error("labels and outputs differ in length: {0} vs {1}")]
    LabelMismatch(usize, usize),

    #[error("capacity iteration did not converge: gap {gap:e} after {iterations} iterations")]
    NonConvergence { gap: f64, iterations: usize },

    #[error("dispersion LP infeasible beyond tolerance (residual {residual:e})")]
    LPInfeasible { residual: f64 },

    #[error("mode infeasible: {0}")]
    ModeInfeasible(String),

    #[error("epsilon out of range: {0}")]
    EpsilonOutOfRange(String),

    #[error("malformed channel file: {0}")]
    Parse(String),

    #[error(transparent)]
    State(#[from] QStateError),

    #[error(transparent)]
    Pair(#[from] NsDistError),

    #[error(transparent)]
    Htd(#[from] HtdError),

    #[error(transparent)]
    Tails(#[from] TailsError),
}

/// A finite labelled input alphabet, each label mapped to a state on a
/// common space. The space is truncated to the span of the output supports
/// at construction.
#[derive(Debug, Clone)]
pub struct CqChannel {
    labels: Vec<String>,
    outputs: Vec<DensityMatrix>,
    original_dim: usize,
}

impl CqChannel {
    pub fn new(
        labels: Vec<String>,
        outputs: Vec<DensityMatrix>,
        tol: &Tolerances,
    ) -> Result<Self, ChannelError> {
        if outputs.is_empty() {
            return Err(ChannelError::EmptyAlphabet);
        }
        if labels.len() != outputs.len() {
            return Err(ChannelError::LabelMismatch(labels.len(), outputs.len()));
        }
        let d = outputs[0].dim();
        for o in &outputs {
            if o.dim() != d {
                return Err(QStateError::DimensionMismatch(d, o.dim()).into());
            }
        }
        // Restrict to the span of the output supports.
        let mut avg = CMatrix::zeros(d, d);
        for o in &outputs {
            avg += o
                .matrix()
                .map(|z| z / Complex64::new(outputs.len() as f64, 0.0));
        }
        let avg_state = DensityMatrix::trusted(avg);
        let spec = spectral_decompose(&avg_state, tol)?;
        let keep: Vec<usize> = (0..d)
            .filter(|&i| spec.eigenvalues[i] > tol.psd_tol)
            .collect();
        let outputs = if keep.len() == d {
            outputs
        } else {
            let mut basis = CMatrix::zeros(d, keep.len());
            for (col, &i) in keep.iter().enumerate() {
                basis
                    .column_mut(col)
                    .copy_from(&spec.eigenvectors.column(i));
            }
            outputs
                .iter()
                .map(|o| DensityMatrix::trusted(basis.adjoint() * o.matrix() * &basis))
                .collect()
        };
        Ok(CqChannel {
            labels,
            outputs,
            original_dim: d,
        })
    }

    pub fn from_json(text: &str, tol: &Tolerances) -> Result<Self, ChannelError> {
        #[derive(Deserialize)]
        struct Wire {
            labels: Vec<String>,
            outputs: Vec<ComplexMatrixJson>,
        }
        let wire: Wire =
            serde_json::from_str(text).map_err(|e| ChannelError::Parse(e.to_string()))?;
        let outputs: Result<Vec<DensityMatrix>, ChannelError> = wire
            .outputs
            .iter()
            .map(|m| {
                let mat = matrix_from_json(m)?;
                DensityMatrix::validate(mat, tol).map_err(ChannelError::from)
            })
            .collect();
        CqChannel::new(wire.labels, outputs?, tol)
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.outputs[0].dim()
    }

    pub fn original_dim(&self) -> usize {
        self.original_dim
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn outputs(&self) -> &[DensityMatrix] {
        &self.outputs
    }

    /// Common eigenbasis of all outputs, when the channel is classical
    /// (mutually commuting outputs).
    pub fn common_basis(&self, tol: f64) -> Option<CMatrix> {
        let mats: Vec<&CMatrix> = self.outputs.iter().map(|o| o.matrix()).collect();
        linalg::common_eigenbasis(&mats, tol)
    }

    fn average(&self, p: &[f64]) -> CMatrix {
        let d = self.dim();
        let mut avg = CMatrix::zeros(d, d);
        for (o, &w) in self.outputs.iter().zip(p) {
            if w > 0.0 {
                avg += o.matrix().map(|z| z * Complex64::new(w, 0.0));
            }
        }
        avg
    }
}

/// Capacity, divergence centre and dispersions of a channel, with solver
/// metadata. All information quantities in nats.
#[derive(Debug, Clone, Serialize)]
pub struct ChannelAnalysis {
    pub capacity: f64,
    pub optimal_input: Vec<f64>,
    #[serde(skip)]
    pub centre: DensityMatrix,
    pub per_input_d: Vec<f64>,
    pub v_min: f64,
    pub v_max: f64,
    pub certificate_gap: f64,
    pub iterations: usize,
    /// Set when the dispersion LP degraded to the singleton input.
    pub lp_degraded: bool,
}

/// Holevo quantity sum_x P(x) D(W(x) || avg) in nats.
pub fn holevo_information(p: &[f64], w: &CqChannel, tol: &Tolerances) -> Result<f64, ChannelError> {
    if p.len() != w.len() {
        return Err(ChannelError::LabelMismatch(p.len(), w.len()));
    }
    let avg = DensityMatrix::trusted(w.average(p));
    let mut acc = 0.0;
    for (o, &weight) in w.outputs().iter().zip(p) {
        if weight > 0.0 {
            let (d, _) = crate::nsdist::quantum_d_and_v(o, &avg, tol)?;
            acc += weight * d;
        }
    }
    Ok(acc)
}

fn per_input_stats(
    w: &CqChannel,
    sigma: &DensityMatrix,
    tol: &Tolerances,
) -> Result<Vec<(f64, f64)>, ChannelError> {
    w.outputs()
        .iter()
        .map(|o| crate::nsdist::quantum_d_and_v(o, sigma, tol).map_err(ChannelError::from))
        .collect()
}

/// Capacity by multiplicative alternating maximisation with a certificate:
/// at termination max_x D(W(x)||avg_P) - I(P) <= capacity_tol, and the
/// capacity is reported as the midpoint of that bracket.
pub fn capacity(w: &CqChannel, tol: &Tolerances) -> Result<ChannelAnalysis, ChannelError> {
    let k = w.len();
    let d = w.dim();
    // Tr W(x) log W(x) is iteration-independent.
    let mut self_entropy = Vec::with_capacity(k);
    for o in w.outputs() {
        let spec = spectral_decompose(o, tol)?;
        let mut tr = 0.0;
        for &lam in &spec.eigenvalues {
            if lam > 1e-14 {
                tr += lam * lam.ln();
            }
        }
        self_entropy.push(tr);
    }
    // One evaluation: per-input divergences against the averaged output,
    // the information value and the certificate gap.
    let evaluate = |ln_p: &[f64]| -> Result<(Vec<f64>, f64, f64), ChannelError> {
        let p: Vec<f64> = ln_p.iter().map(|&l| l.exp()).collect();
        let avg = DensityMatrix::trusted(w.average(&p));
        let spec = spectral_decompose(&avg, tol)?;
        let log_avg = linalg::spectral_map(
            &spec.eigenvalues,
            &spec.eigenvectors,
            1e-14,
            |x| x.ln(),
            0.0,
        );
        let mut d_vec = vec![0.0; k];
        let mut info = 0.0;
        let mut dmax = f64::NEG_INFINITY;
        for x in 0..k {
            let dx = self_entropy[x] - linalg::trace_product_re(w.outputs()[x].matrix(), &log_avg);
            d_vec[x] = dx;
            info += p[x] * dx;
            dmax = dmax.max(dx);
        }
        Ok((d_vec, info, dmax - info))
    };
    let propose = |ln_p: &[f64], d_vec: &[f64], step: f64| -> Vec<f64> {
        let mut next: Vec<f64> = ln_p
            .iter()
            .zip(d_vec)
            .map(|(&l, &dx)| l + step * dx)
            .collect();
        let norm = crate::logdomain::logsumexp(&next);
        for l in next.iter_mut() {
            *l -= norm;
        }
        next
    };

    let mut ln_p = vec![-(k as f64).ln(); k];
    let (mut d_vec, mut info, mut gap) = evaluate(&ln_p)?;
    let mut iterations = 1;
    // The unit-step multiplicative update never decreases the information
    // value, so larger steps can be tried freely and rolled back whenever
    // they fail the monotonicity check; the certificate gap at the final
    // iterate is what validates the answer.
    let mut step = 1.0f64;
    while gap > tol.capacity_tol && iterations < tol.capacity_max_iter {
        let candidate = propose(&ln_p, &d_vec, step);
        iterations += 1;
        let (cd, cinfo, cgap) = evaluate(&candidate)?;
        if cinfo >= info || step <= 1.0 {
            ln_p = candidate;
            d_vec = cd;
            info = cinfo;
            gap = cgap;
            step = (step * 1.3).min(64.0);
        } else {
            step = (step * 0.5).max(1.0);
        }
    }
    if gap > tol.capacity_tol {
        return Err(ChannelError::NonConvergence { gap, iterations });
    }
    let p: Vec<f64> = ln_p.iter().map(|&l| l.exp()).collect();
    let dmax = d_vec.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let cap = 0.5 * (info + dmax);

    // Capacity-achieving support and the centre built from it.
    let threshold = cap - tol.cap_tol.max(10.0 * gap);
    let active: Vec<usize> = (0..k).filter(|&x| d_vec[x] >= threshold).collect();
    let active_mass: f64 = active.iter().map(|&x| p[x]).sum();
    let mut p_opt = vec![0.0; k];
    for &x in &active {
        p_opt[x] = p[x] / active_mass;
    }
    let centre = DensityMatrix::trusted(w.average(&p_opt));
    let stats = per_input_stats(w, &centre, tol)?;
    let per_input_d: Vec<f64> = stats.iter().map(|&(dx, _)| dx).collect();

    let (v_min, v_max, lp_degraded) =
        dispersions_over_polytope(w, &active, &p_opt, &centre, &stats, tol, d)?;

    Ok(ChannelAnalysis {
        capacity: cap,
        optimal_input: p_opt,
        centre,
        per_input_d,
        v_min,
        v_max,
        certificate_gap: gap,
        iterations,
        lp_degraded,
    })
}

/// Recompute (v_min, v_max) for a finished analysis: the optima of the
/// linear objective sum_x P(x) V(W(x)||centre) over capacity-achieving
/// input distributions. Requires the capacity certificate to hold.
pub fn dispersions(
    w: &CqChannel,
    analysis: &ChannelAnalysis,
    tol: &Tolerances,
) -> Result<(f64, f64), ChannelError> {
    if analysis.certificate_gap > tol.cap_tol {
        return Err(ChannelError::NonConvergence {
            gap: analysis.certificate_gap,
            iterations: analysis.iterations,
        });
    }
    let threshold = analysis.capacity - tol.cap_tol.max(10.0 * analysis.certificate_gap);
    let active: Vec<usize> = (0..w.len())
        .filter(|&x| analysis.per_input_d[x] >= threshold)
        .collect();
    let stats = per_input_stats(w, &analysis.centre, tol)?;
    let (v_min, v_max, _) = dispersions_over_polytope(
        w,
        &active,
        &analysis.optimal_input,
        &analysis.centre,
        &stats,
        tol,
        w.dim(),
    )?;
    Ok((v_min, v_max))
}

/// Real parametrisation of a Hermitian matrix: d diagonal entries, then the
/// real and imaginary parts of the strict upper triangle (d^2 reals).
fn hermitian_coords(m: &CMatrix) -> Vec<f64> {
    let d = m.nrows();
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        out.push(m[(i, i)].re);
    }
    for i in 0..d {
        for j in (i + 1)..d {
            out.push(m[(i, j)].re);
            out.push(m[(i, j)].im);
        }
    }
    out
}

/// v_min / v_max as the optima of the linear objective sum P(x) V(W(x)||centre)
/// over capacity-achieving inputs: P >= 0 supported on the active set with
/// sum_x P(x) W(x) = centre (the normalisation row is the trace part).
fn dispersions_over_polytope(
    w: &CqChannel,
    active: &[usize],
    p_opt: &[f64],
    centre: &DensityMatrix,
    stats: &[(f64, f64)],
    tol: &Tolerances,
    d: usize,
) -> Result<(f64, f64, bool), ChannelError> {
    let singleton: f64 = active.iter().map(|&x| p_opt[x] * stats[x].1).sum();
    if active.len() <= 1 {
        return Ok((singleton, singleton, false));
    }
    let coords: Vec<Vec<f64>> = active
        .iter()
        .map(|&x| hermitian_coords(w.outputs()[x].matrix()))
        .collect();
    let b = hermitian_coords(centre.matrix());
    let nrows = d * d;
    let a_rows: Vec<Vec<f64>> = (0..nrows)
        .map(|r| coords.iter().map(|c| c[r]).collect())
        .collect();
    let objective: Vec<f64> = active.iter().map(|&x| stats[x].1).collect();
    let min = crate::simplex::solve_min(&objective, &a_rows, &b, tol.lp_feas_tol);
    let max = crate::simplex::solve_max(&objective, &a_rows, &b, tol.lp_feas_tol);
    match (min, max) {
        (Ok(lo), Ok(hi)) => Ok((lo.objective, hi.objective, false)),
        (Err(crate::simplex::LpError::Infeasible { residual }), _)
        | (_, Err(crate::simplex::LpError::Infeasible { residual })) => {
            if residual <= 1e-6 {
                Ok((singleton, singleton, true))
            } else {
                Err(ChannelError::LPInfeasible { residual })
            }
        }
        (Err(crate::simplex::LpError::Unbounded), _)
        | (_, Err(crate::simplex::LpError::Unbounded)) => Err(ChannelError::LPInfeasible {
            residual: f64::INFINITY,
        }),
    }
}

/// A finite-blocklength rate bound in nats per channel use.
#[derive(Debug, Clone, Serialize)]
pub struct RateBound {
    pub rate: f64,
    /// True when the converse search was restricted to a type subset.
    pub restricted_search: bool,
}

/// How product-state hypothesis tests are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// Exact quantum tests on the block-diagonal joint states.
    QuantumExact,
    /// Exact classical tests; requires mutually commuting outputs.
    ClassicalExact,
}

/// Joint input-output LLR atoms for a given input distribution, in the
/// common eigenbasis; only valid for commuting channels.
fn classical_joint_atoms(
    w: &CqChannel,
    p: &[f64],
    _tol: &Tolerances,
) -> Result<SumAtoms, ChannelError> {
    let basis = w
        .common_basis(1e-11)
        .ok_or_else(|| ChannelError::ModeInfeasible("outputs do not commute".into()))?;
    let d = w.dim();
    let avg = w.average(p);
    let mut values = Vec::new();
    let mut probs = Vec::new();
    for (x, o) in w.outputs().iter().enumerate() {
        if p[x] == 0.0 {
            continue;
        }
        for b in 0..d {
            let col = basis.column(b).clone_owned();
            let wxb = linalg::expectation(o.matrix(), &col).max(0.0);
            let sb = linalg::expectation(&avg, &col).max(0.0);
            if wxb <= 0.0 {
                continue;
            }
            if sb <= 0.0 {
                return Err(ChannelError::ModeInfeasible(
                    "averaged output is singular on the joint support".into(),
                ));
            }
            values.push((wxb / sb).ln());
            probs.push(p[x] * wxb);
        }
    }
    SumAtoms::from_probs(&values, &probs).map_err(ChannelError::from)
}

/// Lower bound on the maximum rate at error eps (Low branch) or 1 - eps
/// (High branch), from the one-shot joint-state bound applied to product
/// inputs:
///   Low:  (1/n) D_h^{eps/2}(rho || sigma) - (1/n) ln(8(2-eps)/eps)
///   High: (1/n) D_h^{1-2eps}(rho || sigma) - (1/n) ln(8(1-eps)/eps)
pub fn achievability_bound(
    w: &CqChannel,
    p: &[f64],
    n: u64,
    eps: Epsilon,
    mode: EvalMode,
    branch: ErrorBranch,
    tol: &Tolerances,
) -> Result<RateBound, ChannelError> {
    if p.len() != w.len() {
        return Err(ChannelError::LabelMismatch(p.len(), w.len()));
    }
    let ln_eps = eps.ln_eps();
    let (test_eps, penalty) = match branch {
        ErrorBranch::Low => (
            Epsilon::low(ln_eps - std::f64::consts::LN_2),
            (8.0f64).ln() + (2.0 - eps.as_f64()).ln() - ln_eps,
        ),
        ErrorBranch::High => {
            let two_eps = ln_eps + std::f64::consts::LN_2;
            if two_eps >= 0.0 {
                return Err(ChannelError::EpsilonOutOfRange(
                    "high branch needs eps < 1/2".into(),
                ));
            }
            (
                Epsilon::high(two_eps),
                (8.0f64).ln() + eps.ln_complement() - ln_eps,
            )
        }
    };
    let dh_sum = match mode {
        EvalMode::ClassicalExact => {
            let atoms = classical_joint_atoms(w, p, tol)?;
            let dist = tails::nfold_from_atoms(&atoms, n, tol)?;
            htd::classical_htd_from_dist(&dist, test_eps)
        }
        EvalMode::QuantumExact => quantum_joint_htd(w, p, n, test_eps, tol)?,
    };
    Ok(RateBound {
        rate: (dh_sum - penalty) / n as f64,
        restricted_search: false,
    })
}

/// D_h^eps of the n-fold joint state against the product reference, using
/// the block-diagonal structure over classical input sequences: the test
/// decomposes per type class, with a shared threshold.
fn quantum_joint_htd(
    w: &CqChannel,
    p: &[f64],
    n: u64,
    eps: Epsilon,
    tol: &Tolerances,
) -> Result<f64, ChannelError> {
    let d = w.dim();
    let dim = (d as u128).checked_pow(n as u32);
    if !matches!(dim, Some(dd) if dd <= tol.dim_cap as u128) {
        return Err(ChannelError::ModeInfeasible(format!(
            "quantum-exact joint test needs d^n <= {}, got d = {d}, n = {n}",
            tol.dim_cap
        )));
    }
    let support: Vec<usize> = (0..w.len()).filter(|&x| p[x] > 0.0).collect();
    let k = support.len();
    let types = tails::composition_count(n, k);
    if types > 20_000 {
        return Err(ChannelError::ModeInfeasible(format!(
            "quantum-exact joint test would enumerate {types} type classes"
        )));
    }
    let sigma = w.average(p);
    let mut sigma_n = sigma.clone();
    for _ in 1..n {
        sigma_n = linalg::kron(&sigma_n, &sigma);
    }
    let mut lnf = vec![0.0f64; n as usize + 1];
    for i in 1..=n as usize {
        lnf[i] = lnf[i - 1] + (i as f64).ln();
    }
    let mut blocks = Vec::new();
    let mut counts = vec![0u64; k];
    build_type_blocks(w, &support, &sigma_n, &lnf, &mut counts, 0, n, n, p, &mut blocks);
    let result = htd::neyman_pearson_weighted_blocks(&blocks, eps, tol)?;
    Ok(-(result.beta_log - eps.ln_complement()))
}

#[allow(clippy::too_many_arguments)]
fn build_type_blocks(
    w: &CqChannel,
    support: &[usize],
    sigma_n: &CMatrix,
    lnf: &[f64],
    counts: &mut Vec<u64>,
    slot: usize,
    left: u64,
    n: u64,
    p: &[f64],
    blocks: &mut Vec<crate::symblock::SymBlock>,
) {
    if slot + 1 == counts.len() {
        counts[slot] = left;
        let mut ln_weight = lnf[n as usize];
        for (i, &c) in counts.iter().enumerate() {
            if c > 0 {
                ln_weight += c as f64 * p[support[i]].ln() - lnf[c as usize];
            }
        }
        let mut rho: Option<CMatrix> = None;
        for (i, &c) in counts.iter().enumerate() {
            for _ in 0..c {
                let m = w.outputs()[support[i]].matrix();
                rho = Some(match rho {
                    None => m.clone(),
                    Some(acc) => linalg::kron(&acc, m),
                });
            }
        }
        blocks.push(crate::symblock::SymBlock {
            rho_part: rho.expect("n >= 1"),
            sigma_part: sigma_n.clone(),
            multiplicity: ln_weight.exp(),
        });
        return;
    }
    for c in 0..=left {
        counts[slot] = c;
        build_type_blocks(
            w, support, sigma_n, lnf, counts, slot + 1, left - c, n, p, blocks,
        );
    }
}

/// Which reference state the converse uses.
#[derive(Debug, Clone)]
pub enum SigmaChoice {
    /// The iid power of the divergence centre.
    CentreIid(DensityMatrix),
    Custom(DensityMatrix),
}

/// Type-class search policy of the converse maximisation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TypeSearch {
    /// Full enumeration when it fits the search cap, else restricted.
    #[default]
    Auto,
    /// Force full enumeration; infeasible when the count exceeds the cap.
    Full,
    /// Single-letter repetitions plus the rounded capacity-achieving type.
    Restricted,
}

/// Upper bound on the maximum rate at error eps (Low) or 1 - eps (High),
/// maximised over input type classes against a fixed reference state:
///   Low:  max_types (1/n) D_h^{2 eps}(prod W(x_i) || sigma^n) + (1/n) ln(2/(1-2 eps))
///   High: max_types (1/n) D_h^{1-eps/2}(...) + (1/n) ln(2(2-eps)/eps^2)
///
/// Any fixed sigma yields a valid bound (the inf over reference states is
/// relaxed to the given choice, which may be loose). When the full type
/// enumeration exceeds the search cap, the maximisation is restricted to
/// single-letter repetitions plus the rounded capacity-achieving type, and
/// the result is flagged as a restricted-search bound.
pub fn converse_bound(
    w: &CqChannel,
    n: u64,
    eps: Epsilon,
    sigma: &SigmaChoice,
    analysis: Option<&ChannelAnalysis>,
    branch: ErrorBranch,
    tol: &Tolerances,
) -> Result<RateBound, ChannelError> {
    converse_bound_searched(w, n, eps, sigma, analysis, branch, TypeSearch::Auto, tol)
}

/// `converse_bound` with an explicit type-search policy.
#[allow(clippy::too_many_arguments)]
pub fn converse_bound_searched(
    w: &CqChannel,
    n: u64,
    eps: Epsilon,
    sigma: &SigmaChoice,
    analysis: Option<&ChannelAnalysis>,
    branch: ErrorBranch,
    search: TypeSearch,
    tol: &Tolerances,
) -> Result<RateBound, ChannelError> {
    let ln_eps = eps.ln_eps();
    let (test_eps, penalty) = match branch {
        ErrorBranch::Low => {
            let two_eps = ln_eps + std::f64::consts::LN_2;
            if two_eps >= 0.0 {
                return Err(ChannelError::EpsilonOutOfRange(
                    "converse low branch needs eps < 1/2".into(),
                ));
            }
            (
                Epsilon::low(two_eps),
                std::f64::consts::LN_2 - ln_1m_exp(two_eps),
            )
        }
        ErrorBranch::High => (
            Epsilon::high(ln_eps - std::f64::consts::LN_2),
            std::f64::consts::LN_2 + (2.0 - eps.as_f64()).ln() - 2.0 * ln_eps,
        ),
    };
    let sigma_ref = match sigma {
        SigmaChoice::CentreIid(s) | SigmaChoice::Custom(s) => s,
    };
    let k = w.len();
    let type_count = tails::composition_count(n, k);
    let full_search = match search {
        TypeSearch::Auto => type_count <= 100_000,
        TypeSearch::Full => {
            if type_count > 100_000 {
                return Err(ChannelError::ModeInfeasible(format!(
                    "full type search needs at most 100000 classes, got {type_count}"
                )));
            }
            true
        }
        TypeSearch::Restricted => false,
    };
    let mut types: Vec<Vec<u64>> = Vec::new();
    if full_search {
        let mut counts = vec![0u64; k];
        enumerate_types(&mut counts, 0, n, &mut types);
    } else {
        for x in 0..k {
            let mut t = vec![0u64; k];
            t[x] = n;
            types.push(t);
        }
        if let Some(an) = analysis {
            let mut t: Vec<u64> = an
                .optimal_input
                .iter()
                .map(|&px| (px * n as f64).round() as u64)
                .collect();
            let total: u64 = t.iter().sum();
            let imax = (0..k).max_by_key(|&x| t[x]).unwrap_or(0);
            if total > n {
                t[imax] -= (total - n).min(t[imax]);
            } else {
                t[imax] += n - total;
            }
            if t.iter().sum::<u64>() == n {
                types.push(t);
            }
        }
    }

    let classical_basis = {
        let mut mats: Vec<&CMatrix> = w.outputs().iter().map(|o| o.matrix()).collect();
        mats.push(sigma_ref.matrix());
        linalg::common_eigenbasis(&mats, 1e-11)
    };
    let mut best = f64::NEG_INFINITY;
    match classical_basis {
        Some(basis) => {
            let d = w.dim();
            let mut per_input: Vec<SumAtoms> = Vec::with_capacity(k);
            for o in w.outputs() {
                let mut values = Vec::new();
                let mut probs = Vec::new();
                for b in 0..d {
                    let col = basis.column(b).clone_owned();
                    let wxb = linalg::expectation(o.matrix(), &col).max(0.0);
                    let sb = linalg::expectation(sigma_ref.matrix(), &col).max(0.0);
                    if wxb <= 0.0 {
                        continue;
                    }
                    if sb <= 0.0 {
                        return Err(ChannelError::ModeInfeasible(
                            "reference state singular on an output support".into(),
                        ));
                    }
                    values.push((wxb / sb).ln());
                    probs.push(wxb);
                }
                per_input.push(SumAtoms::from_probs(&values, &probs)?);
            }
            // Deduplicate types that induce the same sum distribution
            // (symmetric channels collapse the whole enumeration).
            let mut seen: std::collections::BTreeSet<Vec<(u64, u64, u64)>> =
                std::collections::BTreeSet::new();
            for t in &types {
                let parts: Vec<(SumAtoms, u64)> = (0..k)
                    .filter(|&x| t[x] > 0)
                    .map(|x| (per_input[x].clone(), t[x]))
                    .collect();
                let mut key: Vec<(u64, u64, u64)> = Vec::new();
                for (atoms, cnt) in &parts {
                    let m = atoms.merged(tol.merge_tol);
                    for (v, lp) in m.values.iter().zip(&m.log_probs) {
                        key.push((*cnt, v.to_bits(), lp.to_bits()));
                    }
                }
                key.sort_unstable();
                if !seen.insert(key) {
                    continue;
                }
                let dist = tails::heterogeneous_from_atoms(&parts, tol)?;
                let dh = htd::classical_htd_from_dist(&dist, test_eps);
                best = best.max(dh);
            }
        }
        None => {
            let d = w.dim();
            let dim = (d as u128).checked_pow(n as u32);
            if !matches!(dim, Some(dd) if dd <= tol.dim_cap as u128) {
                return Err(ChannelError::ModeInfeasible(format!(
                    "non-commuting converse needs d^n <= {}",
                    tol.dim_cap
                )));
            }
            let mut sigma_n = sigma_ref.matrix().clone();
            for _ in 1..n {
                sigma_n = linalg::kron(&sigma_n, sigma_ref.matrix());
            }
            for t in &types {
                let mut rho: Option<CMatrix> = None;
                for x in 0..k {
                    for _ in 0..t[x] {
                        let m = w.outputs()[x].matrix();
                        rho = Some(match rho {
                            None => m.clone(),
                            Some(acc) => linalg::kron(&acc, m),
                        });
                    }
                }
                let blocks = [crate::symblock::SymBlock {
                    rho_part: rho.expect("n >= 1"),
                    sigma_part: sigma_n.clone(),
                    multiplicity: 1.0,
                }];
                let res = htd::neyman_pearson_weighted_blocks(&blocks, test_eps, tol)?;
                best = best.max(-(res.beta_log - test_eps.ln_complement()));
            }
        }
    }
    Ok(RateBound {
        rate: (best + penalty) / n as f64,
        restricted_search: !full_search,
    })
}

fn enumerate_types(counts: &mut Vec<u64>, slot: usize, left: u64, out: &mut Vec<Vec<u64>>) {
    if slot + 1 == counts.len() {
        counts[slot] = left;
        out.push(counts.clone());
        return;
    }
    for c in 0..=left {
        counts[slot] = c;
        enumerate_types(counts, slot + 1, left - c, out);
    }
}

/// Two-term rate prediction: C - sqrt(2 v_min) a_n below capacity,
/// C + sqrt(2 v_max) a_n above (o(a_n) terms omitted).
pub fn rate_prediction(analysis: &ChannelAnalysis, a_n: f64, branch: ErrorBranch) -> f64 {
    match branch {
        ErrorBranch::Low => analysis.capacity - (2.0 * analysis.v_min).sqrt() * a_n,
        ErrorBranch::High => analysis.capacity + (2.0 * analysis.v_max).sqrt() * a_n,
    }
}

/// Size bound of a delta-net over states and the eigenvalue floor of its
/// elements: |net| <= (90 d / delta^2)^(2 d^2), floor delta/(25 d^2).
/// Returns (ln of the size bound, eigenvalue floor).
pub fn covering_net_size(d: usize, delta: f64) -> Result<(f64, f64), ChannelError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(ChannelError::EpsilonOutOfRange(format!(
            "net parameter delta = {delta}"
        )));
    }
    let df = d as f64;
    Ok((
        2.0 * df * df * (90.0 * df / (delta * delta)).ln(),
        delta / (25.0 * df * df),
    ))
}
