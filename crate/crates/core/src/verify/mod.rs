//! Sampling tests of the functional inequalities, constant fitting,
//! ground-state asymptotics and the domain-growth sharpness probe.

mod family;
mod fit;
mod inequality;
mod sharpness;

pub use family::{Bump, FamilyKind, TestFunction, TestFunctionFamily, MIN_SUPPORT_NODES};
pub use fit::{
    fit_constants, fit_rate_parameter, groundstate_asymptotics, AsymptoticFit, FitModel, FittedConstants, MIN_FIT_SAMPLES,
    MIN_WINDOW_NODES,
};
pub use inequality::{
    beta0_empirical, beta_empirical, intrinsic_terms, ss_rate_empirical, test_isp, test_ss_inequality, test_super_poincare,
    InequalityId, InequalityReport, Normalized, VIOLATION_TOLERANCE,
};
pub use sharpness::{sharpness_probe, ExampleKind, SharpnessReport, SharpnessThresholds, Verdict};
