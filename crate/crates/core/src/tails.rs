//! Exact n-fold log-likelihood-ratio distributions via type-class
//! enumeration, exact tail probabilities in the log domain, the
//! information-spectrum divergence, and moderate-deviation tail bounds.

use crate::config::Tolerances;
use crate::logdomain::{logsumexp, Epsilon, LogSum};
use crate::normal::ln_phi;
use crate::nsdist::{ClassicalPair, NsDistError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TailsError {
    #[error("support cap exceeded: construction needs {needed} > cap {cap}")]
    SupportCapExceeded { needed: u128, cap: usize },

    #[error("infinite log-likelihood ratio atoms cannot be summed")]
    InfiniteLLR,

    #[error("sum distribution does not normalise (log total {log_total:e})")]
    NotNormalized { log_total: f64 },

    #[error("bound not yet valid: alpha*t = {alpha_t} > 1/2 (needs t <= {max_t})")]
    NotYetValid { alpha_t: f64, max_t: f64 },

    #[error("outside validity window: need sqrt(V/n) = {lo:e} <= t = {t:e} <= V^2/T = {hi:e} with positive log argument")]
    OutsideValidityWindow { lo: f64, t: f64, hi: f64 },

    #[error("variance is zero")]
    ZeroVariance,

    #[error("argument out of range: {0}")]
    OutOfRange(String),
}

impl From<NsDistError> for TailsError {
    fn from(e: NsDistError) -> Self {
        match e {
            NsDistError::InfiniteLLR => TailsError::InfiniteLLR,
            other => TailsError::OutOfRange(other.to_string()),
        }
    }
}

/// Raw weighted atoms of a single-copy variable (values in nats).
///
/// `ClassicalPair` converts into this, but synthetic laws like the fair
/// +/-1 variable that are not likelihood ratios of any pair are accepted
/// directly.
#[derive(Debug, Clone)]
pub struct SumAtoms {
    pub values: Vec<f64>,
    pub log_probs: Vec<f64>,
}

impl SumAtoms {
    pub fn from_probs(values: &[f64], probs: &[f64]) -> Result<Self, TailsError> {
        if values.len() != probs.len() || values.is_empty() {
            return Err(TailsError::OutOfRange("mismatched or empty atoms".into()));
        }
        let mut total = 0.0;
        for (&v, &p) in values.iter().zip(probs) {
            if !v.is_finite() {
                return Err(TailsError::InfiniteLLR);
            }
            if !(p >= 0.0) {
                return Err(TailsError::OutOfRange(format!("probability {p}")));
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(TailsError::NotNormalized {
                log_total: total.ln(),
            });
        }
        let mut vals = Vec::new();
        let mut lps = Vec::new();
        for (&v, &p) in values.iter().zip(probs) {
            if p > 0.0 {
                vals.push(v);
                lps.push(p.ln());
            }
        }
        Ok(SumAtoms {
            values: vals,
            log_probs: lps,
        })
    }

    pub fn from_pair(pair: &ClassicalPair) -> Result<Self, TailsError> {
        let atoms = pair.p_support_nats()?;
        Ok(SumAtoms {
            values: atoms.iter().map(|&(z, _)| z).collect(),
            log_probs: atoms.iter().map(|&(_, p)| p.ln()).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.log_probs)
            .map(|(&v, &lp)| v * lp.exp())
            .sum()
    }

    /// (mean, variance, third absolute central moment) in nats.
    pub fn moments(&self) -> (f64, f64, f64) {
        let m = self.mean();
        let (mut v, mut t) = (0.0, 0.0);
        for (&z, &lp) in self.values.iter().zip(&self.log_probs) {
            let p = lp.exp();
            let c = z - m;
            v += p * c * c;
            t += p * c.abs().powi(3);
        }
        (m, v, t)
    }

    /// Merge atoms whose values coincide within merge_tol; the law of the
    /// sum only sees distinct values, and composition enumeration scales
    /// with the distinct-atom count.
    pub fn merged(&self, merge_tol: f64) -> SumAtoms {
        let mut pairs: Vec<(f64, f64)> = self
            .values
            .iter()
            .cloned()
            .zip(self.log_probs.iter().cloned())
            .collect();
        pairs.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).expect("finite values"));
        let mut values = Vec::new();
        let mut log_probs = Vec::new();
        let mut i = 0;
        while i < pairs.len() {
            let v0 = pairs[i].0;
            let mut acc = LogSum::new();
            let mut prev = v0;
            while i < pairs.len() && pairs[i].0 - prev <= merge_tol {
                acc.add(pairs[i].1);
                prev = pairs[i].0;
                i += 1;
            }
            values.push(v0);
            log_probs.push(acc.value());
        }
        SumAtoms { values, log_probs }
    }

    /// k-th derivative (k = 0..3) of h(s) = ln E[e^{sX}] for the centered
    /// variable X = Z - E[Z].
    pub fn centered_cgf(&self, s: f64, k: u8) -> f64 {
        let mean = self.mean();
        let shift = self
            .values
            .iter()
            .map(|&z| s * (z - mean))
            .fold(f64::NEG_INFINITY, f64::max);
        let mut m = [0.0f64; 4];
        for (&z, &lp) in self.values.iter().zip(&self.log_probs) {
            let x = z - mean;
            let w = lp.exp() * (s * x - shift).exp();
            let mut xj = 1.0;
            for slot in m.iter_mut() {
                *slot += w * xj;
                xj *= x;
            }
        }
        match k {
            0 => m[0].ln() + shift,
            1 => m[1] / m[0],
            2 => (m[2] * m[0] - m[1] * m[1]) / (m[0] * m[0]),
            _ => {
                (m[3] * m[0] * m[0] - 3.0 * m[2] * m[1] * m[0] + 2.0 * m[1] * m[1] * m[1])
                    / (m[0] * m[0] * m[0])
            }
        }
    }
}

/// How an exact sum distribution was assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Construction {
    Iid,
    Heterogeneous,
}

/// Exact distribution of a sum of independent per-copy variables, stored as
/// (value, log-probability) pairs sorted ascending by value.
#[derive(Debug, Clone)]
pub struct IidSumDistribution {
    pub n: u64,
    /// Number of distinct base atoms the construction started from.
    pub atoms_src: usize,
    /// (value, log_prob), strictly increasing values.
    pub support: Vec<(f64, f64)>,
    pub construction: Construction,
}

impl IidSumDistribution {
    /// log of the total mass; 0 for a perfectly normalised distribution.
    pub fn log_total_mass(&self) -> f64 {
        let lps: Vec<f64> = self.support.iter().map(|&(_, lp)| lp).collect();
        logsumexp(&lps)
    }

    /// CSV export with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("value,log_prob\n");
        for &(v, lp) in &self.support {
            out.push_str(&format!("{},{}\n", fmt17(v), fmt17(lp)));
        }
        out
    }
}

/// 17-significant-digit formatting used by every emitted table.
pub fn fmt17(x: f64) -> String {
    if x == f64::NEG_INFINITY {
        return "-inf".to_string();
    }
    if x == f64::INFINITY {
        return "inf".to_string();
    }
    format!("{:.16e}", x)
}

fn ln_factorial_table(n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n + 1];
    let mut acc = 0.0;
    for k in 1..=n {
        acc += (k as f64).ln();
        t[k] = acc;
    }
    t
}

/// C(n+k-1, k-1) as u128 with saturation, the iid composition count.
pub fn composition_count(n: u64, k: usize) -> u128 {
    if k == 0 {
        return 0;
    }
    let mut acc: u128 = 1;
    for j in 1..k as u128 {
        acc = acc.saturating_mul(n as u128 + j);
        acc /= j;
        if acc > u128::MAX / 2 {
            return u128::MAX;
        }
    }
    acc
}

/// Sort raw (value, log_weight) points and merge values within merge_tol.
fn sort_and_merge(mut pts: Vec<(f64, f64)>, merge_tol: f64) -> Vec<(f64, f64)> {
    pts.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).expect("finite values"));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(pts.len() / 2 + 1);
    let mut i = 0;
    while i < pts.len() {
        let v0 = pts[i].0;
        let mut acc = LogSum::new();
        let mut prev = v0;
        while i < pts.len() && pts[i].0 - prev <= merge_tol {
            acc.add(pts[i].1);
            prev = pts[i].0;
            i += 1;
        }
        out.push((v0, acc.value()));
    }
    out
}

/// Lattice structure of a set of values: value_j = offset + step * index_j.
struct Lattice {
    offset: f64,
    step: f64,
    indices: Vec<u64>,
}

fn detect_lattice(values: &[f64]) -> Option<Lattice> {
    let offset = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let diffs: Vec<f64> = values.iter().map(|&v| v - offset).collect();
    let scale = diffs.iter().cloned().fold(0.0f64, f64::max);
    if scale == 0.0 {
        // Degenerate: a single repeated value.
        return Some(Lattice {
            offset,
            step: 1.0,
            indices: vec![0; values.len()],
        });
    }
    let tol = 1e-9 * scale;
    let mut g = 0.0f64;
    for &d in &diffs {
        if d <= tol {
            continue;
        }
        if g == 0.0 {
            g = d;
            continue;
        }
        let (mut a, mut b) = (g.max(d), g.min(d));
        while b > tol {
            let mut r = a % b;
            if r > b - tol {
                r = 0.0;
            }
            a = b;
            b = r;
        }
        g = a;
    }
    if g <= tol {
        return None;
    }
    let mut indices = Vec::with_capacity(values.len());
    for &d in &diffs {
        let q = d / g;
        let idx = q.round();
        if (q - idx).abs() > 1e-6 {
            return None;
        }
        indices.push(idx as u64);
    }
    Some(Lattice {
        offset,
        step: g,
        indices,
    })
}

/// Log-domain convolution on a shared integer lattice.
fn conv_lattice(a: &[f64], b: &[f64]) -> Vec<f64> {
    let out_len = a.len() + b.len() - 1;
    let mut max = vec![f64::NEG_INFINITY; out_len];
    for (i, &la) in a.iter().enumerate() {
        if la == f64::NEG_INFINITY {
            continue;
        }
        for (j, &lb) in b.iter().enumerate() {
            if lb == f64::NEG_INFINITY {
                continue;
            }
            let s = la + lb;
            if s > max[i + j] {
                max[i + j] = s;
            }
        }
    }
    let mut acc = vec![0.0f64; out_len];
    for (i, &la) in a.iter().enumerate() {
        if la == f64::NEG_INFINITY {
            continue;
        }
        for (j, &lb) in b.iter().enumerate() {
            if lb == f64::NEG_INFINITY {
                continue;
            }
            acc[i + j] += (la + lb - max[i + j]).exp();
        }
    }
    max.iter()
        .zip(&acc)
        .map(|(&m, &a)| if m == f64::NEG_INFINITY { m } else { m + a.ln() })
        .collect()
}

/// n-fold self-convolution on a lattice by binary exponentiation.
fn lattice_power(base: &[f64], n: u64) -> Vec<f64> {
    let mut result: Option<Vec<f64>> = None;
    let mut sq = base.to_vec();
    let mut rem = n;
    loop {
        if rem & 1 == 1 {
            result = Some(match result {
                None => sq.clone(),
                Some(r) => conv_lattice(&r, &sq),
            });
        }
        rem >>= 1;
        if rem == 0 {
            break;
        }
        sq = conv_lattice(&sq, &sq);
    }
    result.expect("n >= 1")
}

/// Exact distribution of the sum of n iid copies of the given atoms.
///
/// Uses full composition enumeration when C(n+k-1, k-1) fits under the
/// support cap; otherwise, if the atom values lie on a common lattice (so
/// that the merged support stays small), an exact log-domain convolution by
/// binary exponentiation is used instead.
pub fn nfold_from_atoms(
    atoms: &SumAtoms,
    n: u64,
    tol: &Tolerances,
) -> Result<IidSumDistribution, TailsError> {
    if n == 0 {
        return Err(TailsError::OutOfRange("need n >= 1".into()));
    }
    let atoms = &atoms.merged(tol.merge_tol);
    let k = atoms.len();
    let comps = composition_count(n, k);
    if comps <= tol.support_cap as u128 {
        return nfold_by_compositions(atoms, n, tol);
    }
    if let Some(lat) = detect_lattice(&atoms.values) {
        let span = lat.indices.iter().max().copied().unwrap_or(0) as u128 * n as u128 + 1;
        if span <= tol.support_cap as u128 {
            return nfold_by_lattice(atoms, &lat, n);
        }
        return Err(TailsError::SupportCapExceeded {
            needed: span,
            cap: tol.support_cap,
        });
    }
    Err(TailsError::SupportCapExceeded {
        needed: comps,
        cap: tol.support_cap,
    })
}

fn nfold_by_compositions(
    atoms: &SumAtoms,
    n: u64,
    tol: &Tolerances,
) -> Result<IidSumDistribution, TailsError> {
    let k = atoms.len();
    let lnf = ln_factorial_table(n as usize);
    let mut pts: Vec<(f64, f64)> = Vec::new();

    // Lexicographic recursion over compositions (n_1, ..., n_k) of n.
    fn rec(
        atoms: &SumAtoms,
        lnf: &[f64],
        counts: &mut Vec<u64>,
        slot: usize,
        left: u64,
        pts: &mut Vec<(f64, f64)>,
        n: u64,
    ) {
        if slot + 1 == counts.len() {
            counts[slot] = left;
            let mut value = 0.0;
            let mut logw = lnf[n as usize];
            for (j, &c) in counts.iter().enumerate() {
                if c > 0 {
                    value += c as f64 * atoms.values[j];
                    logw += c as f64 * atoms.log_probs[j] - lnf[c as usize];
                }
            }
            pts.push((value, logw));
            return;
        }
        for c in 0..=left {
            counts[slot] = c;
            rec(atoms, lnf, counts, slot + 1, left - c, pts, n);
        }
    }
    let mut counts = vec![0u64; k];
    rec(atoms, &lnf, &mut counts, 0, n, &mut pts, n);
    let support = sort_and_merge(pts, tol.merge_tol);
    Ok(IidSumDistribution {
        n,
        atoms_src: k,
        support,
        construction: Construction::Iid,
    })
}

fn nfold_by_lattice(
    atoms: &SumAtoms,
    lat: &Lattice,
    n: u64,
) -> Result<IidSumDistribution, TailsError> {
    let max_idx = lat.indices.iter().max().copied().unwrap_or(0) as usize;
    let mut base = vec![f64::NEG_INFINITY; max_idx + 1];
    for (j, &idx) in lat.indices.iter().enumerate() {
        base[idx as usize] = crate::logdomain::logaddexp(base[idx as usize], atoms.log_probs[j]);
    }
    let powered = lattice_power(&base, n);
    let mut support = Vec::new();
    for (i, &lp) in powered.iter().enumerate() {
        if lp != f64::NEG_INFINITY {
            support.push((n as f64 * lat.offset + lat.step * i as f64, lp));
        }
    }
    Ok(IidSumDistribution {
        n,
        atoms_src: atoms.len(),
        support,
        construction: Construction::Iid,
    })
}

/// Exact n-fold product distribution of a classical pair's LLR under P.
pub fn nfold_sum_distribution(
    pair: &ClassicalPair,
    n: u64,
    tol: &Tolerances,
) -> Result<IidSumDistribution, TailsError> {
    let atoms = SumAtoms::from_pair(pair)?;
    nfold_from_atoms(&atoms, n, tol)
}

/// Exact distribution of the sum across heterogeneous parts, each
/// contributing `count` iid copies of its own atoms.
///
/// Parts with identical atom sets are merged up front, and the fold order
/// is canonicalised, so the result does not depend on the input order.
pub fn heterogeneous_sum_distribution(
    parts: &[(ClassicalPair, u64)],
    tol: &Tolerances,
) -> Result<IidSumDistribution, TailsError> {
    if parts.is_empty() {
        return Err(TailsError::OutOfRange("no parts".into()));
    }
    let converted: Result<Vec<(SumAtoms, u64)>, TailsError> = parts
        .iter()
        .filter(|(_, c)| *c > 0)
        .map(|(pair, c)| SumAtoms::from_pair(pair).map(|a| (a, *c)))
        .collect();
    heterogeneous_from_atoms(&converted?, tol)
}

/// Heterogeneous sum over raw atom parts.
pub fn heterogeneous_from_atoms(
    parts: &[(SumAtoms, u64)],
    tol: &Tolerances,
) -> Result<IidSumDistribution, TailsError> {
    // Canonical atom signature for dedup and ordering.
    let mut keyed: Vec<(Vec<(u64, u64)>, SumAtoms, u64)> = Vec::new();
    for (atoms, count) in parts {
        if *count == 0 {
            continue;
        }
        let mut key: Vec<(u64, u64)> = atoms
            .values
            .iter()
            .zip(&atoms.log_probs)
            .map(|(&v, &lp)| (v.to_bits(), lp.to_bits()))
            .collect();
        key.sort_unstable();
        if let Some(existing) = keyed.iter_mut().find(|(k, _, _)| *k == key) {
            existing.2 += count;
        } else {
            keyed.push((key, atoms.clone(), *count));
        }
    }
    if keyed.is_empty() {
        return Err(TailsError::OutOfRange("no copies requested".into()));
    }
    keyed.sort_by(|a, b| b.2.cmp(&a.2).then_with(|| a.0.cmp(&b.0)));

    let mut total_n = 0u64;
    let mut total_atoms = 0usize;
    let mut acc: Option<IidSumDistribution> = None;
    for (_, atoms, count) in &keyed {
        let part = nfold_from_atoms(atoms, *count, tol)?;
        total_n += count;
        total_atoms += atoms.len();
        acc = Some(match acc {
            None => part,
            Some(prev) => convolve(&prev, &part, tol)?,
        });
    }
    let mut dist = acc.expect("at least one part");
    dist.n = total_n;
    dist.atoms_src = total_atoms;
    dist.construction = if keyed.len() == 1 {
        Construction::Iid
    } else {
        Construction::Heterogeneous
    };
    Ok(dist)
}

/// Exact convolution of two sum distributions.
fn convolve(
    a: &IidSumDistribution,
    b: &IidSumDistribution,
    tol: &Tolerances,
) -> Result<IidSumDistribution, TailsError> {
    let combined: Vec<f64> = a
        .support
        .iter()
        .map(|&(v, _)| v)
        .chain(b.support.iter().map(|&(v, _)| v))
        .collect();
    if let Some(lat) = detect_lattice(&combined) {
        let idx_of = |v: f64| -> u64 { ((v - lat.offset) / lat.step).round() as u64 };
        let a_base = a.support.iter().map(|&(v, _)| idx_of(v)).min().unwrap();
        let a_max = a.support.iter().map(|&(v, _)| idx_of(v)).max().unwrap();
        let b_base = b.support.iter().map(|&(v, _)| idx_of(v)).min().unwrap();
        let b_max = b.support.iter().map(|&(v, _)| idx_of(v)).max().unwrap();
        let needed = (a_max - a_base) as u128 + (b_max - b_base) as u128 + 1;
        if needed <= tol.support_cap as u128 {
            let mut va = vec![f64::NEG_INFINITY; (a_max - a_base + 1) as usize];
            for &(v, lp) in &a.support {
                va[(idx_of(v) - a_base) as usize] = lp;
            }
            let mut vb = vec![f64::NEG_INFINITY; (b_max - b_base + 1) as usize];
            for &(v, lp) in &b.support {
                vb[(idx_of(v) - b_base) as usize] = lp;
            }
            let conv = conv_lattice(&va, &vb);
            // Sums start at (offset + step a_base) + (offset + step b_base).
            let origin = 2.0 * lat.offset + lat.step * (a_base + b_base) as f64;
            let mut support = Vec::new();
            for (i, &lp) in conv.iter().enumerate() {
                if lp != f64::NEG_INFINITY {
                    support.push((origin + lat.step * i as f64, lp));
                }
            }
            return Ok(IidSumDistribution {
                n: a.n + b.n,
                atoms_src: a.atoms_src + b.atoms_src,
                support,
                construction: Construction::Heterogeneous,
            });
        }
    }
    let pairwise = a.support.len() as u128 * b.support.len() as u128;
    if pairwise > tol.support_cap as u128 {
        return Err(TailsError::SupportCapExceeded {
            needed: pairwise,
            cap: tol.support_cap,
        });
    }
    let mut pts = Vec::with_capacity(pairwise as usize);
    for &(va, la) in &a.support {
        for &(vb, lb) in &b.support {
            pts.push((va + vb, la + lb));
        }
    }
    Ok(IidSumDistribution {
        n: a.n + b.n,
        atoms_src: a.atoms_src + b.atoms_src,
        support: sort_and_merge(pts, tol.merge_tol),
        construction: Construction::Heterogeneous,
    })
}

/// Which side of the threshold a tail probability covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailMode {
    Geq,
    Gt,
    Leq,
    Lt,
}

/// Exact log tail probability on the sum scale; -inf for an empty side.
pub fn tail_log_prob(dist: &IidSumDistribution, threshold: f64, mode: TailMode) -> f64 {
    let split_geq = dist.support.partition_point(|&(v, _)| v < threshold);
    let split_gt = dist.support.partition_point(|&(v, _)| v <= threshold);
    let range = match mode {
        TailMode::Geq => split_geq..dist.support.len(),
        TailMode::Gt => split_gt..dist.support.len(),
        TailMode::Leq => 0..split_gt,
        TailMode::Lt => 0..split_geq,
    };
    let mut acc = LogSum::new();
    for &(_, lp) in &dist.support[range] {
        acc.add(lp);
    }
    acc.value()
}

/// Information spectrum divergence of the n-fold product,
/// D_s^eps = sup { R : Pr[sum of LLRs <= R] <= eps }, on the sum scale in
/// the pair's base.
///
/// With a right-continuous step CDF the sup is the first support value whose
/// CDF strictly exceeds eps; +inf sentinel if no support value does.
pub fn info_spectrum_divergence(
    pair: &ClassicalPair,
    n: u64,
    eps: Epsilon,
    tol: &Tolerances,
) -> Result<f64, TailsError> {
    let dist = nfold_sum_distribution(pair, n, tol)?;
    Ok(info_spectrum_from_dist(&dist, eps) / pair.base().ln())
}

/// D_s^eps readout on an already-built sum distribution (nats, sum scale).
pub fn info_spectrum_from_dist(dist: &IidSumDistribution, eps: Epsilon) -> f64 {
    let m = dist.support.len();
    match eps {
        Epsilon::Low { ln_eps } => {
            // prefix[j] = ln Pr[Z <= z_j]; return first z_j with prefix > ln_eps.
            let mut acc = LogSum::new();
            for j in 0..m {
                acc.add(dist.support[j].1);
                if acc.value() > ln_eps {
                    return dist.support[j].0;
                }
            }
            f64::INFINITY
        }
        Epsilon::High { ln_complement } => {
            // CDF(z_j) > eps  <=>  suffix mass after j < 1 - eps.
            let mut suffix = vec![f64::NEG_INFINITY; m + 1];
            let mut acc = LogSum::new();
            for j in (0..m).rev() {
                acc.add(dist.support[j].1);
                suffix[j] = acc.value();
            }
            for j in 0..m {
                if suffix[j + 1] < ln_complement {
                    return dist.support[j].0;
                }
            }
            f64::INFINITY
        }
    }
}

/// Both forms of the moderate-deviation Chernoff upper bound on
/// ln Pr[(1/n) sum X_i >= t_n] for centered X.
#[derive(Debug, Clone, Copy)]
pub struct ChernoffBound {
    /// -n (alpha t^2 - h(alpha t)): the Markov/Chernoff value, valid whenever
    /// the tilt is admissible.
    pub raw_log: f64,
    /// -n t^2 / (2 V_n + eta): the closed asymptotic form.
    pub closed_form_log: f64,
    pub alpha: f64,
}

/// Chernoff upper bound with the variance-stabilised tilt
/// alpha^{-1} = sqrt(V + eta/4) (sqrt(V + eta/4) + sqrt(eta/4)).
pub fn chernoff_upper_bound(
    atoms: &SumAtoms,
    n: u64,
    t_n: f64,
    eta: f64,
) -> Result<ChernoffBound, TailsError> {
    if !(t_n > 0.0) {
        return Err(TailsError::OutOfRange(format!("t_n = {t_n}")));
    }
    if !(eta > 0.0) {
        return Err(TailsError::OutOfRange(format!("eta = {eta}")));
    }
    let (_, v, _) = atoms.moments();
    let root = (v + eta / 4.0).sqrt();
    let alpha = 1.0 / (root * (root + (eta / 4.0).sqrt()));
    let alpha_t = alpha * t_n;
    if alpha_t > 0.5 {
        return Err(TailsError::NotYetValid {
            alpha_t,
            max_t: 0.5 / alpha,
        });
    }
    let h_at = atoms.centered_cgf(alpha_t, 0);
    Ok(ChernoffBound {
        raw_log: -(n as f64) * (alpha * t_n * t_n - h_at),
        closed_form_log: -(n as f64) * t_n * t_n / (2.0 * v + eta),
        alpha,
    })
}

/// Berry-Esseen-type lower bound with multiplicative error:
/// ln Pr >= ln Phi(-sqrt(n t^2/V)) - k1 T n t^3 / V^3 + ln(1 - k2 T t / V^2),
/// valid for sqrt(V/n) <= t <= V^2/T.
pub fn rozovsky_lower_bound(
    v_n: f64,
    t_moment: f64,
    n: u64,
    t_n: f64,
    kappa1: f64,
    kappa2: f64,
) -> Result<f64, TailsError> {
    if v_n <= 0.0 {
        return Err(TailsError::ZeroVariance);
    }
    let lo = (v_n / n as f64).sqrt();
    let hi = v_n * v_n / t_moment;
    let log_arg = 1.0 - kappa2 * t_moment * t_n / (v_n * v_n);
    if !(t_n >= lo && t_n <= hi) || log_arg <= 0.0 {
        return Err(TailsError::OutsideValidityWindow { lo, t: t_n, hi });
    }
    let gauss = ln_phi(-((n as f64) * t_n * t_n / v_n).sqrt());
    Ok(gauss - kappa1 * t_moment * n as f64 * t_n.powi(3) / v_n.powi(3) + log_arg.ln())
}

/// The asymptotic reference -n t_n^2 / (2 V_n) that exact tails are
/// compared against.
pub fn moddev_reference(n: u64, t_n: f64, v_n: f64) -> Result<f64, TailsError> {
    if v_n <= 0.0 {
        return Err(TailsError::ZeroVariance);
    }
    Ok(-(n as f64) * t_n * t_n / (2.0 * v_n))
}
