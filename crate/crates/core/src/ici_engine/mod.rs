//! Canonical scaling, the cost `φ`, the transport map and grid certificates
//! of the pair conditions, plus a Monte Carlo tester of the inequality.

mod conditions;
mod constants;
mod mc;
mod phi;
mod pipeline;
pub(crate) mod report;
mod step6;

pub use conditions::{a_extent, a_grid, check_cond_v1, check_cond_v2, default_nu_span, jump_points, nu_grid};
pub use constants::{Constants, BETA1, B_TILDE_DIVISOR};
pub use mc::{mc_ici_test, random_convex, scaled_cost, tensorization_check, Bound, IciEstimate, McIciOptions, TensorizationReport, TestFunction};
pub use phi::{build_phi, lemma_3_1_check, quadratic_linear, Phi, PhiOptions};
pub use pipeline::{
    certify, epsilon_sensitivity, prepare, scale_to_canonical, Certification, CertifyOptions, Condition, Prepared,
    Sensitivity, DEFAULT_EPS,
};
pub use report::{CertificateReport, Detail, GridInfo};
pub use step6::{cross_check, step6_case_certificate, switchover, X0_TOL};
