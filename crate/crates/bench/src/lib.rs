//! Shared fixtures for the benchmark suite.

use num_complex::Complex64;
use qmoddev_core::linalg::CMatrix;
use qmoddev_core::qstate::DensityMatrix;
use qmoddev_core::Tolerances;

pub fn diag_state(entries: &[f64]) -> DensityMatrix {
    let n = entries.len();
    let mut m = CMatrix::zeros(n, n);
    for (i, &e) in entries.iter().enumerate() {
        m[(i, i)] = Complex64::new(e, 0.0);
    }
    DensityMatrix::validate(m, &Tolerances::default()).expect("valid bench state")
}

pub fn bsc011() -> qmoddev_core::CqChannel {
    qmoddev_core::CqChannel::new(
        vec!["0".into(), "1".into()],
        vec![diag_state(&[0.89, 0.11]), diag_state(&[0.11, 0.89])],
        &Tolerances::default(),
    )
    .expect("valid bench channel")
}
