pub mod catalog;
pub mod error;
pub mod geometry;
pub mod mehler;
pub mod model;
pub mod model_file;
pub mod normal_form;
pub mod quadrature;
pub mod rng;
pub mod semigroup;
pub mod verify;
pub mod weaktype;
pub mod roots;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/models.md")]
    struct Models;
    #[doc = include_str!("../../../book/src/kernels.md")]
    struct Kernels;
    #[doc = include_str!("../../../book/src/semigroup.md")]
    struct Semigroup;
    #[doc = include_str!("../../../book/src/normal-form.md")]
    struct NormalForm;
    #[doc = include_str!("../../../book/src/geometry.md")]
    struct Geometry;
    #[doc = include_str!("../../../book/src/weak-type.md")]
    struct WeakType;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
    #[doc = include_str!("../../../book/src/verification.md")]
    struct Verification;
}
