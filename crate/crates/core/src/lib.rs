//! Signature kernels for sequential data.
//!
//! Sequences are lifted to piecewise-linear paths, mapped through a static
//! kernel and compared by the inner product of their signatures. The crate
//! provides the exact truncated kernel (dynamic program over the increment
//! matrix), the untruncated kernel via a Goursat PDE solver, a robust
//! normalized variant, Gram matrices with Nyström approximation and
//! permutation-calibrated MMD two-sample tests. [`tensor`] holds explicit
//! tensor-algebra reference implementations used to validate the fast paths.

pub mod dp;
pub mod error;
pub mod gram;
pub mod io;
pub mod kernel;
pub mod mmd;
pub mod pde;
pub mod preprocess;
pub mod robust;
pub mod sequence;
pub mod static_kernel;
pub mod tensor;

pub use dp::{mon_kernel_horner, sig_kernel, sig_kernel_levels, LevelValues};
pub use error::{Error, Result};
pub use gram::{gram, min_eigenvalue, nystrom, GramMatrix, LowRankFactor};
pub use kernel::{Method, SigKernelConfig};
pub use mmd::{mmd2, permutation_test, sup_mmd, Estimator, PermutationTest, SampleSet, TestResult};
pub use pde::{refine_until, sig_kernel_pde};
pub use preprocess::{Dataset, Step};
pub use robust::{normalization_root, psi, robust_sig_kernel, NormalizationParams};
pub use sequence::Sequence;
pub use static_kernel::{increment_matrix, IncrementMatrix, KernelFamily, StaticKernelSpec};
