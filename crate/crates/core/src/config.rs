//! Numeric tolerances and caps, overridable per run.

use serde::{Deserialize, Serialize};

/// All tunable tolerances and resource caps in one place.
///
/// Defaults are chosen for double-precision spectral routines on dense
/// matrices up to the dimension cap; every field can be overridden by name
/// (the CLI exposes `--tol NAME=VALUE`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tolerances {
    /// Max Hermitian asymmetry |M[i][j] - conj(M[j][i])|.
    pub herm_tol: f64,
    /// Max |Tr M - 1|.
    pub trace_tol: f64,
    /// Eigenvalues above -psd_tol count as nonnegative; below +psd_tol as zero rank.
    pub psd_tol: f64,
    /// Max spectral reconstruction / orthonormality residual.
    pub recon_tol: f64,
    /// Eigenvalue classification width for the positive/zero/negative split
    /// of rho - t*sigma inside the Neyman-Pearson test.
    pub eig_tol: f64,
    /// Allowed overshoot of the achieved type-I error over the target.
    pub alpha_tol: f64,
    /// Dense-operator dimension cap (d^n for tensor powers).
    pub dim_cap: usize,
    /// Cap on the support of an exact n-fold sum distribution.
    pub support_cap: usize,
    /// Absolute merge width for equal LLR sums.
    pub merge_tol: f64,
    /// Capacity certificate gap target.
    pub capacity_tol: f64,
    /// Capacity iteration limit.
    pub capacity_max_iter: usize,
    /// Slack used when collecting the capacity-achieving support
    /// (defaults to 10 * capacity_tol).
    pub cap_tol: f64,
    /// Feasibility slack accepted by the dispersion LP before degrading to
    /// the singleton input distribution.
    pub lp_feas_tol: f64,
    /// Universal constant of the hypothesis-testing / information-spectrum
    /// bridge; calibrated empirically, see `htd::DEFAULT_BRIDGE_K`.
    pub bridge_k: f64,
    /// Berry-Esseen-type constants of the moderate-deviation lower bound.
    pub kappa1: f64,
    pub kappa2: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            herm_tol: 1e-10,
            trace_tol: 1e-10,
            psd_tol: 1e-9,
            recon_tol: 1e-9,
            eig_tol: 1e-10,
            alpha_tol: 1e-9,
            dim_cap: 4096,
            support_cap: 5_000_000,
            merge_tol: 1e-12,
            capacity_tol: 1e-9,
            capacity_max_iter: 100_000,
            cap_tol: 1e-8,
            lp_feas_tol: 1e-8,
            bridge_k: crate::htd::DEFAULT_BRIDGE_K,
            kappa1: 1.0,
            kappa2: 1.0,
        }
    }
}

impl Tolerances {
    /// Override a field by name; returns false for an unknown name.
    pub fn set_by_name(&mut self, name: &str, value: f64) -> bool {
        match name {
            "herm_tol" => self.herm_tol = value,
            "trace_tol" => self.trace_tol = value,
            "psd_tol" => self.psd_tol = value,
            "recon_tol" => self.recon_tol = value,
            "eig_tol" => self.eig_tol = value,
            "alpha_tol" => self.alpha_tol = value,
            "dim_cap" => self.dim_cap = value as usize,
            "support_cap" => self.support_cap = value as usize,
            "merge_tol" => self.merge_tol = value,
            "capacity_tol" => self.capacity_tol = value,
            "capacity_max_iter" => self.capacity_max_iter = value as usize,
            "cap_tol" => self.cap_tol = value,
            "lp_feas_tol" => self.lp_feas_tol = value,
            "bridge_k" => self.bridge_k = value,
            "kappa1" => self.kappa1 = value,
            "kappa2" => self.kappa2 = value,
            _ => return false,
        }
        true
    }

    /// Deterministic (name, value) listing for report metadata.
    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("herm_tol", self.herm_tol),
            ("trace_tol", self.trace_tol),
            ("psd_tol", self.psd_tol),
            ("recon_tol", self.recon_tol),
            ("eig_tol", self.eig_tol),
            ("alpha_tol", self.alpha_tol),
            ("dim_cap", self.dim_cap as f64),
            ("support_cap", self.support_cap as f64),
            ("merge_tol", self.merge_tol),
            ("capacity_tol", self.capacity_tol),
            ("capacity_max_iter", self.capacity_max_iter as f64),
            ("cap_tol", self.cap_tol),
            ("lp_feas_tol", self.lp_feas_tol),
            ("bridge_k", self.bridge_k),
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn override_by_name() {
        let mut t = Tolerances::default();
        assert!(t.set_by_name("psd_tol", 1e-7));
        assert_eq!(t.psd_tol, 1e-7);
        assert!(!t.set_by_name("nonsense", 1.0));
    }
}
