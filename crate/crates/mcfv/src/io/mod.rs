//! Collated binary format with index sidecar, rank read strategies, and
//! the refinement-integrated startup path.

mod collated;
mod index;
mod startup;
mod strategy;

pub use collated::{
    read_all, read_header, write_collated, CollatedHeader, DType, COLLATED_MAGIC, COLLATED_VERSION,
};
pub use index::{build_index, index_path, read_index, write_index, IndexSidecar, INDEX_MAGIC};
pub use startup::{
    mesh_from_bytes, mesh_to_bytes, read_mesh_collated, startup_direct,
    startup_with_runtime_refinement, write_mesh_collated, Startup,
};
pub use strategy::{
    parse_read_strategy, Grouped, IoStats, MasterScatter, Parallel, ReadStrategy, READ_STRATEGIES,
};
