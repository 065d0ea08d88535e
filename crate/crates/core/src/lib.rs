//! Perfect simulation of the last passage percolation constant on charged
//! complete directed acyclic graphs, via the Max Growth System.
//!
//! ```
//! use lppsim::{estimate_c, ChargeDistribution, RunSettings};
//!
//! let dist = ChargeDistribution::two_point_inf(1.0).unwrap();
//! let r = estimate_c(&dist, None, 10, RunSettings::new(7)).unwrap();
//! assert_eq!(r.c_hat, 1.0);
//! ```

pub mod charge;
pub mod error;
pub mod estimator;
pub mod lpp;
pub mod mgs;
pub mod par;
pub mod perfect;
pub mod report;
pub mod stats;
pub mod stream;
pub mod validate;

pub use charge::{default_ell, Charge, ChargeDistribution, DistSpec, EllParameter, Normalized};
pub use error::{Error, Result};
pub use estimator::{
    estimate_c, mcmc_estimate, parse_grid, ramanujan_psi, sweep_ell, sweep_p, EstimateResult,
    RunSettings, SweepParam, SweepRow,
};
pub use lpp::{
    coupled_mgs_check, generate_graph, longest_path_dp, longest_path_enum, ChargedGraph,
    PathProfile,
};
pub use mgs::PointMeasure;
pub use perfect::{
    find_t_star, forward_sample, sample_mbar, x_chain_simulate, ChargeTable, Fault, SampleRecord,
    SimOptions, XChainParams,
};
pub use stream::StreamKey;
