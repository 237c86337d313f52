//! Simulation and verification toolkit for small-block dynamics of the
//! Chinese restaurant process.
//!
//! The crate has five layers:
//!
//! * [`crp`] — sequential CRP generator with trackers that extract
//!   small-block atoms, block counts, first-singleton paths, and
//!   short-lived-singleton records from a single trajectory;
//! * [`oracle`] — exact, sampling-free probabilities for joint block
//!   histories (two independent algebraic routes) and exhaustive
//!   small-n partition distributions;
//! * [`intensity`] — the limiting intensity measure on the cone of
//!   ordered tuples, window masses in closed form, and the Poisson
//!   rate constants for block-count limits;
//! * [`limit`] — exact samplers for the limiting Poisson random measure
//!   and the derived processes (singleton counts, leftmost singleton,
//!   shortest-lived singleton, doubleton counting process);
//! * [`verify`] — goodness-of-fit machinery ([`gof`]) and the suites
//!   that confront finite-n simulations with the limit laws.

pub mod crp;
pub mod gof;
pub mod intensity;
pub mod limit;
pub mod oracle;
pub mod rng;
pub mod special;
pub mod verify;

pub use crp::{BlockAtom, CrpParams, PartitionState, TrackerConfig, TrajectoryObservables};
pub use gof::GofReport;
pub use intensity::ConeWindow;
pub use verify::SuiteConfig;
