//! GMRES-based refinement on the scaled augmented systems.

mod gmres;
mod operator;
mod precond;
mod refine;
pub mod spectrum;

pub use gmres::{gmres, gmres_with, GmresReport};
pub use operator::{AugmentedOperator, AugmentedProblem};
pub use precond::{
    build_bd_precond_gls, build_bd_precond_lse, build_left_precond_gls, build_left_precond_lse, BdCase,
    Preconditioner, PreconditionerKind,
};
pub use refine::{gmres_refine_gls, gmres_refine_gls_with, gmres_refine_lse, gmres_refine_lse_with, GmresOptions, PrecondKind};
pub use spectrum::{spectrum_check, SpectrumReport};
