//! Linear algebra kernels: cyclic solves, sparse LU, condition numbers and the y-DFT.

pub mod cond;
pub mod cyclic;
pub mod dft;
pub mod sparse;

pub use cond::{cond2, cond2_estimate, CondEstimate};
pub use cyclic::{solve_cyclic, CyclicFactor, CyclicTridiag};
pub use dft::{dft_y, idft_y, DftPlan};
pub use sparse::{solve_sparse, SolveMethod, SolveOptions, SolveStats, SparseLu, SparseMatrix};
