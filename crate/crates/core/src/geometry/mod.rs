//! Localization structures and the elliptic geometry of the quadratic form
//! `R(xi) = sum lambda_j xi_j^2`.

pub mod intervals;
pub mod lemmas;
pub mod polar;
pub mod tube;

pub use intervals::{
    build_interval_sequence, check_impl, density_comparability, global_coordinates, half_width, membership_indexed,
    membership_mk, AxisIntervals, Cell, DensityRatio, ImplCheck, IntervalSequence, LocalizationGrid,
};
pub use lemmas::{verify_inequality, MarginReport, LEMMA_IDS};
pub use polar::{area_ratio, lebesgue_jacobian, polar_decompose, transversality, LebesgueJacobian, PolarPoint};
pub use tube::{tube_measure, TubeMethod, TubeSpec};
