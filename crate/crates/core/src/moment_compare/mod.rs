//! Weak and strong moments of product vectors and the constant checks built
//! on them.

mod lemmas;
mod moments;
mod norm;
mod vector;
mod weak;

pub use lemmas::{lemma_4_1_check, lemma_4_2_check};
pub use moments::{
    central_moment, corollary_2_5_check, measured_alpha, moment_reports, norm_draws, strong_moment, theorem_2_4_check,
    MomentOptions, MomentReport, NormDraws, TailCheck,
};
pub use norm::NormSpec;
pub use vector::ProductVector;
pub use weak::{dual_ball_ascent, weak_moment, MomentSeries, WeakMoment, ASCENT_RESTARTS};
