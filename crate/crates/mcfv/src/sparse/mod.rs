//! Sparse representations and solvers: LDU and block-CSR formats, the
//! static conversion map between them, and thread-parallel SpMV, hybrid
//! Gauss-Seidel and PCG kernels. All arithmetic is double precision.

mod block;
mod kernels;
mod ldu;
mod solver;
mod triplet;

pub use block::{
    build_block_map, refresh_values, BlockCsrMatrix, CsrBlock, LduBlockMap, LduSlot, MapEntry,
};
pub use kernels::{
    gauss_seidel_sweep, gauss_seidel_sweep_dir, gs_sweep_flops, residual_norm, spmv, spmv_flops,
    SweepDirection,
};
pub use ldu::LduMatrix;
pub use solver::{
    parse_preconditioner, pcg_solve, DiagonalPrecond, GsPrecond, IdentityPrecond, PcgResult,
    Preconditioner, PRECONDITIONERS,
};
pub use triplet::{dump_triplets, load_triplets};
