//! Weakly interacting pulses in the planar quintic complex Ginzburg-Landau equation
//!
//! ```text
//! u_t = α∇²u + βu + γ|u|²u + δ|u|⁴u
//! ```
//!
//! The crate computes the axisymmetric steady pulse and its neutral modes,
//! measures and fits the exponentially weak pulse interaction law, and
//! integrates the slow dynamics of pulse positions and phases, either from
//! the fitted law alone or corrected by a stationary remainder solve on a
//! Cartesian grid.

pub mod archive;
pub mod bessel;
pub mod cheb;
pub mod coherent;
pub mod dd;
pub mod dst;
pub mod equilibria;
pub mod error;
pub mod fit;
pub mod gmres;
pub mod grid;
pub mod kernel;
pub mod law;
pub mod modes;
pub mod ode;
pub mod params;
pub mod pos;
pub mod ps;
pub mod pulse;
pub mod radial;
pub mod tails;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

#[cfg(feature = "parallel")]
pub fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}
