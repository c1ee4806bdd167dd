// Calibration run for the bridge constant K: smallest power of 2 such that
// lower <= exact <= upper holds on 500 random qubit instances.
use qmoddev_core::htd::*;
use qmoddev_core::nsdist::{nussbaum_szkola, LogBase};
use qmoddev_core::random::*;
use qmoddev_core::{Epsilon, Tolerances};

fn main() {
    let tol = Tolerances::default();
    let mut r = rng(4242);
    let mut instances = Vec::new();
    for i in 0..500 {
        let rho = random_density_matrix(&mut r, 2);
        let sigma = random_density_matrix(&mut r, 2);
        let n = 1 + (i % 8) as u64;
        instances.push((rho, sigma, n));
    }
    'kloop: for pow in 0..8 {
        let k = 2.0f64.powi(pow);
        let mut worst_lo = f64::INFINITY;
        let mut worst_hi = f64::INFINITY;
        for (rho, sigma, n) in &instances {
            let pair = nussbaum_szkola(rho, sigma, LogBase::E, false, &tol).unwrap();
            for e in [0.01, 0.1, 0.3] {
                let eps = Epsilon::from_prob(e).unwrap();
                let exact = htd_product_exact(rho, sigma, *n, eps, &tol).unwrap();
                let (lo, hi) = htd_bridge_bounds(&pair, *n, eps, k, ErrorBranch::Low, &tol).unwrap();
                worst_lo = worst_lo.min(exact - lo);
                worst_hi = worst_hi.min(hi - exact);
                if lo > exact + 1e-12 || exact > hi + 1e-12 {
                    println!("K={k}: FAIL (n={n}, eps={e}, lo={lo:.6}, exact={exact:.6}, hi={hi:.6})");
                    continue 'kloop;
                }
            }
        }
        println!("K={k}: OK (min slack lower={worst_lo:.4}, upper={worst_hi:.4})");
        break;
    }
}
