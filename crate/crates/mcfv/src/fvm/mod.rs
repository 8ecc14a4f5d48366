//! Conflict-free thread-parallel finite-volume assembly (Laplacian,
//! divergence, Green-Gauss gradient) and an implicit scalar transport
//! problem driving the sparse solvers and the NN source term.

mod assemble;
mod field;
mod gradient;
mod schedule;
mod transport;

pub use assemble::{assemble_divergence, assemble_laplacian, uniform_velocity_flux, DivScheme};
pub use field::{patch_of_face, BoundaryCondition, ScalarField};
pub use gradient::compute_gradient;
pub use schedule::{build_face_schedule, probe_conflicts, ConflictReport, FaceSchedule};
pub use transport::{advance_scalar_transport, CellSource, StepReport, TransportConfig};
