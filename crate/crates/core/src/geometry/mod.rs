//! Pipe profiles, meridian meshes, and volume bookkeeping.

pub mod io;
pub mod locate;
pub mod mesh;
pub mod profile;
pub mod spline;

pub use locate::PointLocator;
pub use mesh::{
    deform_mesh, graded_points, mesh_profile, mesh_profile_divisions, mesh_profile_fractions, mesh_profile_graded,
    BoundaryEdge, BoundaryTag, MeridianMesh, MeshGrading,
};
pub use profile::{
    cylinder_volume, make_cylinder_profile, make_spline_profile, renormalize_volume, volume, ShapeProfile,
    DEFAULT_FAMILY_OFFSETS,
};
pub use spline::ClampedSpline;
