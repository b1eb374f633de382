//! Volterra equations: the second-kind engine and the transformations that
//! feed it.

mod engine;
mod forcing;
mod manufacture;
mod refinement;
mod transform;

pub use engine::{solve_second_kind, MemoryFn, Rhs, SecondKindProblem, SolveReport, Strategy, DEFAULT_DIAGONAL_FLOOR, SELF_PANEL};
pub use forcing::{Forcing, ScalarFn};
pub use manufacture::{manufactured_forcing, ORACLE_LEVELS, ORACLE_NODES};
pub use refinement::{least_squares_order, RefinementHistory, RefinementRow};
pub use transform::{
    associate_from_wsc2, construct_csc_associate, ensure_wsc1, residual_first_kind, rhs_K_conv, solve_first_kind,
    solve_first_kind_with, solve_nonlocal_ode, transform_first_kind_K, transform_first_kind_weighted,
    transform_nonlocal_ode, AssociateReport, FirstKindProblem, NonlocalOdeProblem, Variant,
};
