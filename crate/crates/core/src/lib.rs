//! Theoretical VVIX under the Heston model.
//!
//! Four routes to the same index: the log contract on the VIX future, a
//! discrete strip of VIX options priced by single integrals, a full
//! two-dimensional PDE that replicates both the VIX and the VVIX from SPX
//! options, and a closed-form lognormal approximation. The calibration layer
//! uses the VVIX to pin down the vol-of-vol.

pub mod analytics;
pub mod calibration;
pub mod error;
pub mod mc;
pub mod model;
pub mod numerics;
pub mod pde;
pub mod replication;

pub use analytics::{
    solve_sigma_for_vvix, vix_future, vix_option, vvix_log_contract, vvix_simple, IndexQuote, OptionKind,
    VixDistribution,
};
pub use calibration::{calibrate, CalibrationResult, CalibrationSpec, VanillaQuote, VvixMode, WeightKind, WeightScheme};
pub use error::{Error, Result};
pub use mc::{mc_vix_future, mc_vix_option, mc_vvix_log, McEstimate};
pub use model::{HestonParams, MarketConvention, ParamsDocument, VIX_TENOR};
