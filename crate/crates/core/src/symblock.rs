//! Permutation-symmetric block decomposition of qubit tensor powers.
//!
//! A pair of operators of the form rho^(x)n, sigma^(x)n on (C^2)^(x)n is
//! invariant under permutations of the factors, so both decompose as
//!
//!   X^(x)n  =  (+)_k  det(X)^k Sym^{n-2k}(X)  (x)  I_{m_k},
//!           k = 0..floor(n/2),   m_k = C(n,k) - C(n,k-1),
//!
//! where Sym^m(X) is the (m+1)-dimensional symmetric power. Spectral work
//! on the 2^n-dimensional pair reduces to blocks of size at most n+1, which
//! is what makes exact product-state Neyman-Pearson tests cheap.

use crate::linalg::CMatrix;
use num_complex::Complex64;

/// One permutation-symmetric block: the rho-side and sigma-side operators
/// and the multiplicity of the block in the full space.
#[derive(Debug, Clone)]
pub struct SymBlock {
    pub rho_part: CMatrix,
    pub sigma_part: CMatrix,
    pub multiplicity: f64,
}

fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for j in 0..k {
        acc = acc * (n - j) as f64 / (j + 1) as f64;
    }
    acc
}

/// Matrix of X^(x)m restricted to the symmetric subspace, in the orthonormal
/// occupation basis |m, r>.
///
/// Entry (r', r) is sqrt(C(m,r)/C(m,r')) times the z^{r'} coefficient of
/// (x00 + z x10)^{m-r} (x01 + z x11)^r.
pub fn sym_power(x: &CMatrix, m: usize) -> CMatrix {
    debug_assert_eq!(x.nrows(), 2);
    let dim = m + 1;
    let mut out = CMatrix::zeros(dim, dim);
    let a = x[(0, 0)];
    let b = x[(0, 1)];
    let c = x[(1, 0)];
    let d = x[(1, 1)];
    for r in 0..dim {
        // coefficients of (a + z c)^{m-r} (b + z d)^r
        let mut poly = vec![Complex64::new(0.0, 0.0); dim];
        poly[0] = Complex64::new(1.0, 0.0);
        let mut deg = 0usize;
        for _ in 0..(m - r) {
            let mut next = vec![Complex64::new(0.0, 0.0); dim];
            for t in 0..=deg {
                next[t] += poly[t] * a;
                next[t + 1] += poly[t] * c;
            }
            poly = next;
            deg += 1;
        }
        for _ in 0..r {
            let mut next = vec![Complex64::new(0.0, 0.0); dim];
            for t in 0..=deg {
                next[t] += poly[t] * b;
                next[t + 1] += poly[t] * d;
            }
            poly = next;
            deg += 1;
        }
        for rp in 0..dim {
            let scale = (binomial(m as u64, r as u64) / binomial(m as u64, rp as u64)).sqrt();
            out[(rp, r)] = poly[rp] * Complex64::new(scale, 0.0);
        }
    }
    out
}

fn det2(x: &CMatrix) -> Complex64 {
    x[(0, 0)] * x[(1, 1)] - x[(0, 1)] * x[(1, 0)]
}

/// Blocks of the pair (rho^(x)n, sigma^(x)n) for 2x2 rho, sigma.
pub fn qubit_power_blocks(rho: &CMatrix, sigma: &CMatrix, n: u64) -> Vec<SymBlock> {
    assert!(n >= 1);
    assert_eq!(rho.nrows(), 2);
    assert_eq!(sigma.nrows(), 2);
    let det_r = det2(rho);
    let det_s = det2(sigma);
    let mut blocks = Vec::new();
    let mut det_r_pow = Complex64::new(1.0, 0.0);
    let mut det_s_pow = Complex64::new(1.0, 0.0);
    for k in 0..=(n / 2) {
        let m = (n - 2 * k) as usize;
        let mult = binomial(n, k) - if k == 0 { 0.0 } else { binomial(n, k - 1) };
        let rho_part = sym_power(rho, m).map(|z| z * det_r_pow);
        let sigma_part = sym_power(sigma, m).map(|z| z * det_s_pow);
        blocks.push(SymBlock {
            rho_part,
            sigma_part,
            multiplicity: mult,
        });
        det_r_pow *= det_r;
        det_s_pow *= det_s;
    }
    blocks
}
