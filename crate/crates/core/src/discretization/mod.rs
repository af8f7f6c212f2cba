//! Taylor–Hood discretization: spaces, operators, and saddle-point solves.

pub mod assembly;
pub mod element;
pub mod extension;
pub mod saddle;
pub mod sparse;
pub mod spaces;

pub use assembly::{
    assemble_convection, assemble_divergence, assemble_outlet_load, assemble_p1_stiffness_mass, assemble_viscous,
    energy_integral,
};
pub use saddle::{apply_constraints, apply_essential, solve_saddle, velocity_constraints, Constraints, SaddleSystem};
pub use sparse::{CsrMatrix, TripletBuilder};
pub use spaces::{build_spaces, FunctionSpaces};
