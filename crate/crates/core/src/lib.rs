//! Pathwise numerics for Young differential equations `dy = σ(y) dx`
//! driven by Hölder signals, with coefficients behaving like `|ξ|^κ`.
//!
//! The crate is organised bottom-up:
//!
//! - [`holder_paths`]: sampled driving signals, fBm generation, Hölder norms.
//! - [`coefficients`]: radial power-type coefficients and their regularizations.
//! - [`frac_calc`]: Riemann–Liouville operators and the extended integral `Λ(y)`.
//! - [`riemann`]: Riemann sums, averaged approximants, convergence tables.
//! - [`lamperti`]: exact one-dimensional solutions through the Lamperti map.
//! - [`ladder`]: the multidimensional solver and stopping-time ladder diagnostics.
//!
//! ```
//! use young_power::coefficients::Coefficient;
//! use young_power::holder_paths::GridPath;
//! use young_power::lamperti::{solve_lamperti, LampertiMap};
//!
//! let sigma = Coefficient::power(1.0, 0.5).unwrap();
//! let map = LampertiMap::new(&sigma).unwrap();
//! let x = GridPath::from_fn(1.0, 101, |t| t).unwrap();
//! let y = solve_lamperti(&x, &map, 0.0).unwrap();
//! assert!((y.value(100)[0] - 0.25).abs() < 1e-12);
//! ```

pub mod coefficients;
mod error;
pub mod frac_calc;
pub mod holder_paths;
pub mod ladder;
pub mod lamperti;
mod quad;
pub mod riemann;
pub mod rng;
mod stats;

pub use error::{Error, Result};
pub use stats::LinearFit;
