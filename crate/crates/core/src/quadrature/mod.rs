//! Quadrature for integrands with weak endpoint singularities.

mod jacobi;
mod legendre;
mod mesh;
mod product;

pub use jacobi::{graded_jacobi_rule, jacobi_rule, JacobiRule, DEFAULT_JACOBI_NODES};
pub use legendre::{graded_distance_quad, graded_panel_quad, GaussLegendre, PanelConfig, SingularEnd};
pub use mesh::{default_grading, Mesh};
pub use product::{panel_weights, power_conv_weights, power_weights_on, singular_start_weight};
