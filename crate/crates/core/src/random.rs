//! Seeded random states and pairs for property suites and calibration runs.

use crate::config::Tolerances;
use crate::linalg::CMatrix;
use crate::qstate::DensityMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(r: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; plenty for test-state generation.
    let u1: f64 = r.gen_range(1e-12..1.0);
    let u2: f64 = r.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Ginibre-induced random full-rank state: G G^dag normalised.
pub fn random_density_matrix(r: &mut ChaCha8Rng, dim: usize) -> DensityMatrix {
    let mut g = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            g[(i, j)] = Complex64::new(gaussian(r), gaussian(r));
        }
    }
    let m = &g * g.adjoint();
    let tr: f64 = (0..dim).map(|i| m[(i, i)].re).sum();
    let rho = m.map(|z| z / Complex64::new(tr, 0.0));
    DensityMatrix::validate(rho, &Tolerances::default()).expect("Ginibre state is valid")
}

/// Random state with smallest eigenvalue at least `floor` (mixes toward I/d).
pub fn random_state_with_floor(r: &mut ChaCha8Rng, dim: usize, floor: f64) -> DensityMatrix {
    let rho = random_density_matrix(r, dim);
    let mix = floor * dim as f64;
    assert!(mix < 1.0);
    let mut m = rho.matrix().map(|z| z * Complex64::new(1.0 - mix, 0.0));
    for i in 0..dim {
        m[(i, i)] += Complex64::new(floor, 0.0);
    }
    DensityMatrix::validate(m, &Tolerances::default()).expect("floored state is valid")
}

/// Random pure state as a rank-one projector.
pub fn random_pure_state(r: &mut ChaCha8Rng, dim: usize) -> DensityMatrix {
    let mut v = vec![Complex64::new(0.0, 0.0); dim];
    let mut norm = 0.0;
    for x in v.iter_mut() {
        *x = Complex64::new(gaussian(r), gaussian(r));
        norm += x.norm_sqr();
    }
    let norm = norm.sqrt();
    let mut m = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            m[(i, j)] = v[i] * v[j].conj() / Complex64::new(norm * norm, 0.0);
        }
    }
    DensityMatrix::validate(m, &Tolerances::default()).expect("pure state is valid")
}

/// Random commuting pair: both diagonal in a common random basis.
pub fn random_commuting_pair(
    r: &mut ChaCha8Rng,
    dim: usize,
    floor: f64,
) -> (DensityMatrix, DensityMatrix) {
    // Random unitary from the QR of a Ginibre matrix.
    let mut g = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            g[(i, j)] = Complex64::new(gaussian(r), gaussian(r));
        }
    }
    let qr = g.qr();
    let q = qr.q();

    let spec = |r: &mut ChaCha8Rng| -> Vec<f64> {
        let mut v: Vec<f64> = (0..dim).map(|_| r.gen_range(floor..1.0)).collect();
        let s: f64 = v.iter().sum();
        for x in v.iter_mut() {
            *x /= s;
        }
        v
    };
    let build = |vals: &[f64], q: &CMatrix| -> DensityMatrix {
        let mut d = CMatrix::zeros(dim, dim);
        for (i, &v) in vals.iter().enumerate() {
            d[(i, i)] = Complex64::new(v, 0.0);
        }
        let m = q * d * q.adjoint();
        DensityMatrix::validate(m, &Tolerances::default()).expect("rotated diagonal state")
    };
    let a = spec(r);
    let b = spec(r);
    (build(&a, &q), build(&b, &q))
}

/// Random tabulated pair satisfying the reversing-transform hypotheses,
/// plus an admissible (level, delta) query.
pub fn random_tabulated_pair(
    r: &mut ChaCha8Rng,
) -> (crate::moddev::TabulatedFunctionPair, f64, f64) {
    let len = r.gen_range(3..40usize);
    let domain: Vec<f64> = (0..len).map(|j| j as f64).collect();
    let mut a: Vec<f64> = (0..len).map(|_| r.gen_range(-1.0..3.0)).collect();
    let mut b: Vec<f64> = (0..len).map(|_| r.gen_range(-1.0..3.0)).collect();
    a[r.gen_range(0..len)] = -r.gen_range(0.0..1.0);
    b[r.gen_range(0..len)] = -r.gen_range(0.0..1.0);
    let pair = crate::moddev::TabulatedFunctionPair::new(domain, a, b)
        .expect("infima anchored at nonpositive values");
    let level = pair.inf_a() + r.gen_range(0.0..2.0);
    let delta = r.gen_range(1e-6..0.5);
    (pair, level, delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;

    #[test]
    fn generators_are_deterministic_per_seed() {
        let a = random_density_matrix(&mut rng(5), 3);
        let b = random_density_matrix(&mut rng(5), 3);
        assert_eq!(a.matrix(), b.matrix());
    }

    #[test]
    fn floored_state_respects_floor() {
        let mut r = rng(9);
        let rho = random_state_with_floor(&mut r, 3, 0.05);
        assert!(rho.lambda_min(&Tolerances::default()) >= 0.05 - 1e-12);
    }

    #[test]
    fn commuting_pair_commutes() {
        let mut r = rng(3);
        let (a, b) = random_commuting_pair(&mut r, 3, 0.01);
        let comm = a.matrix() * b.matrix() - b.matrix() * a.matrix();
        assert!(linalg::max_abs(&comm) < 1e-12);
    }
}
