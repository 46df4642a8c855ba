//! Size-structured dividing cell populations and nonparametric estimation
//! of their division kernel.
//!
//! The crate is organised along the pipeline it implements:
//!
//! * [`kernels`]: division kernels `h` on `[0, 1]` and the log-scale density
//!   `g(u) = e^u h(e^u)`.
//! * [`simulate`]: exact event-driven simulation of the renormalised
//!   branching population.
//! * [`stationary`]: the growth-fragmentation PDE, its stationary
//!   eigenvector `N`, and the true Mellin-type spectra of `N`.
//! * [`estimator`]: empirical characteristic functions, truncated spectral
//!   division and sinc-kernel reconstruction of `g` and `h`.
//! * [`bandwidth`]: the half-split resampling criteria and the oracle.
//! * [`bench`]: Monte Carlo risk campaigns.
//! * [`config`] and [`io`]: run configuration and file formats.

pub mod bandwidth;
pub mod bench;
pub mod config;
pub mod error;
pub mod estimator;
pub mod io;
pub mod kernels;
pub mod quadrature;
pub mod rng;
pub mod simulate;
pub mod spectrum;
pub mod stationary;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use kernels::DivisionKernel;
pub use spectrum::{SpectrumGrid, XiGrid};
