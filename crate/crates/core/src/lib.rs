//! # qmoddev-core
//!
//! Exact finite-blocklength computations for binary quantum hypothesis
//! testing and classical-quantum channel coding, together with the
//! moderate-deviation rate and error predictions they converge to.
//!
//! The crate is organised around the pipeline
//!
//! ```text
//! density matrices ──► Nussbaum–Szkola pairs ──► exact n-fold LLR sums
//!        │                     │                        │
//!        ▼                     ▼                        ▼
//!  Neyman–Pearson      divergence / variance    tail bounds, D_s^eps
//!  tests, D_h^eps      cumulant bounds          Chernoff / Rozovsky
//!        │                                              │
//!        └──────────► channel capacity, dispersion, rate bounds ◄──────┘
//!                      moderate-sequence predictions (C ∓ √(2V)·a_n)
//! ```
//!
//! All probabilities are handled in the log domain (natural log) so that
//! quantities like `exp(-n a_n^2)` stay meaningful far past the range of
//! linear doubles. Rates and divergences are computed internally in nats;
//! presentation layers convert to bits.
//!
//! ## Quick start
//!
//! ```
//! use num_complex::Complex64;
//! use qmoddev_core::linalg::CMatrix;
//! use qmoddev_core::{channel, CqChannel, DensityMatrix, Tolerances, LN_2};
//!
//! let tol = Tolerances::default();
//! let diag = |a: f64, b: f64| {
//!     let mut m = CMatrix::zeros(2, 2);
//!     m[(0, 0)] = Complex64::new(a, 0.0);
//!     m[(1, 1)] = Complex64::new(b, 0.0);
//!     DensityMatrix::validate(m, &tol).unwrap()
//! };
//!
//! // a binary symmetric channel embedded as commuting qubit outputs
//! let w = CqChannel::new(
//!     vec!["0".into(), "1".into()],
//!     vec![diag(0.89, 0.11), diag(0.11, 0.89)],
//!     &tol,
//! )
//! .unwrap();
//! let analysis = channel::capacity(&w, &tol).unwrap();
//! assert!((analysis.capacity / LN_2 - 0.5000840).abs() < 1e-6);
//! assert!((analysis.v_min / (LN_2 * LN_2) - 0.8907017).abs() < 1e-6);
//!
//! // exact finite-n rate bounds bracket the two-term prediction
//! let n = 1024;
//! let a_n = (n as f64).powf(-1.0 / 3.0);
//! let eps = qmoddev_core::Epsilon::low(-(n as f64) * a_n * a_n);
//! let ach = channel::achievability_bound(
//!     &w,
//!     &analysis.optimal_input,
//!     n,
//!     eps,
//!     channel::EvalMode::ClassicalExact,
//!     qmoddev_core::htd::ErrorBranch::Low,
//!     &tol,
//! )
//! .unwrap();
//! let predicted = channel::rate_prediction(&analysis, a_n, qmoddev_core::htd::ErrorBranch::Low);
//! assert!((ach.rate - predicted).abs() < 0.1 * a_n);
//! ```

pub mod channel;
pub mod config;
pub mod htd;
pub mod linalg;
pub mod logdomain;
pub mod moddev;
pub mod normal;
pub mod nsdist;
pub mod qstate;
pub mod random;
pub mod simplex;
pub mod symblock;
pub mod tails;

pub use channel::{ChannelAnalysis, CqChannel};
pub use config::Tolerances;
pub use htd::TestResult;
pub use logdomain::Epsilon;
pub use moddev::{ModerateSequence, TabulatedFunctionPair};
pub use nsdist::ClassicalPair;
pub use qstate::{DensityMatrix, Spectrum};
pub use tails::IidSumDistribution;

/// Natural log of 2, used whenever a result is converted between bases.
pub const LN_2: f64 = std::f64::consts::LN_2;
