//! Numerical toolkit for locating and probing emergent gapless (slow) modes
//! in truncated systems of attractive bosons at fixed particle number.
//!
//! The pipeline has four stages:
//!
//! 1. [`fock`]: fixed-N occupation-number bases over K modes and sparse
//!    realization of normal-ordered operators.
//! 2. [`models`]: term lists for the box (Dirichlet) gas, its 3-mode
//!    truncation, the periodic gas, the master-mode toy model, the synaptic
//!    rewriting and the two-mode external-probe model.
//! 3. [`cnumber`] + [`bogoliubov`]: condensate (c-number) energy landscape,
//!    its critical points, and symplectic diagonalization of the quadratic
//!    fluctuation Hamiltonian.
//! 4. [`dynamics`]: exact diagonalization at finite N, slow-state
//!    construction, time evolution, coherence-time spectroscopy and
//!    power-law fits.
//!
//! All energies are expressed in units of `4π²ħ²/(2mL²)` with `L = 2π`,
//! `ħ = 2m = 1`.

extern crate blas_src;
extern crate openblas_src;

pub mod bogoliubov;
pub mod cnumber;
pub mod dynamics;
pub mod fock;
pub mod models;

pub mod linalg;

pub use linalg::{lanczos_smallest, lanczos_smallest_from};

/// Map a fallible per-item computation over a slice, in parallel when the
/// `parallel` feature is enabled.
pub fn try_map_items<T, U, E, F>(items: &[T], f: F) -> Result<Vec<U>, E>
where
    T: Sync,
    U: Send,
    E: Send,
    F: Fn(&T) -> Result<U, E> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Map a per-item computation over a slice, in parallel when the `parallel`
/// feature is enabled.
pub fn map_items<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Same as [`map_items`] but always sequential, regardless of features.
/// Used by the benchmark suite to compare against the parallel path.
pub fn map_items_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}
