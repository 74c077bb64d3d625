//! Taylor-Hood and mini finite element spaces, dof numbering, quadrature and
//! assembly of the four bilinear forms with Dirichlet elimination.

mod assembly;
mod dofmap;
mod element;
mod interpolate;
mod quadrature;
mod quadrature_tables;

pub use assembly::{assemble, AssemblyOptions, SystemMatrices, DEFAULT_QUAD_DEGREE};
pub use dofmap::{build_dof_map, build_unconstrained_dof_map, Anchor, DofMap, CONSTRAINED};
pub use element::{BasisEval, CellGeometry, ElementFamily};
pub use interpolate::{
    cell_displacement, displacement_jet, eval_displacement, interpolate_scalar, interpolate_vector, pressure_at,
    DisplacementJet,
};
pub use quadrature::{gauss_legendre, quadrature_rule, QuadratureRule, MAX_DEGREE};
