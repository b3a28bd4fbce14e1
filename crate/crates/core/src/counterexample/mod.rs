//! The dyadic-tail law: regular moments, flat tail, quadratic cumulant bound,
//! maxima of i.i.d. copies, the contradiction scan and explicit violations of
//! the inequality.

mod dyadic;
mod maxiid;
mod quadratic;
mod scan;
mod violation;

pub use dyadic::{
    dyadic_atoms, dyadic_second_moment_series, dyadic_t, example_distribution, flat_tail_criterion, measure_ktilde,
    verify_3_regularity, FlatTail, FLAT_TAIL_CEILING,
};
pub use maxiid::{
    log_max_integral, log_two_pow_minus_one, max_iid_bounds, max_iid_closed_upper, max_iid_moment_lower,
    max_iid_single_term, mc_max_moment, MaxBounds,
};
pub use quadratic::{huber, quadratic_bound_scan, quadratic_sup, series_bound, QuadraticBound};
pub use scan::{contradiction_scan, scan_row, ScanRow, ScanSummary, DEFAULT_THETA_FACTOR, SCAN_THRESHOLD};
pub use violation::{exact_product, mc_product, violation_search, ExactProduct, ViolationOptions, ViolationResult};
