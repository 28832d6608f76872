//! Weak type (1,1) experiments: level sets of maximal functions, the
//! large-time analysis and the forbidden-zone covering.

pub mod dyadic;
pub mod heat;
pub mod large_t;
pub mod level_set;
pub mod recursion;
pub mod test_function;

pub use dyadic::{default_decay, epsilon_bound, smm_kernel, smm_membership, smm_shell};
pub use heat::HeatOperator;
pub use large_t::{cap_overlap, large_t_levelset, salpha_solve, LargeTEstimate, ProjectedMeasure};
pub use level_set::{alpha_grid, kappa_weak_type_scan, weak_type_scan, LevelSetReport};
pub use recursion::{
    calibrate_alpha, forbidden_zone_recursion, generate_instances, tune_constant, ForbiddenZoneConfig, ForbiddenZoneRun, RecursionInstance,
};
pub use test_function::{DiscreteMeasure, Reference, Shape, TestFunction};
