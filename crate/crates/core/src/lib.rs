//! Random-matrix correlation filtering and nested clustered portfolio
//! allocation.
//!
//! The pipeline runs prices → standardized return windows
//! ([`marketdata`]) → correlation estimates ([`rmt`]) → weights
//! ([`markowitz`], [`nco`]) → rolling in/out-of-sample risk
//! ([`backtest`]).

pub mod backtest;
pub mod error;
pub mod marketdata;
pub mod markowitz;
pub mod nco;
pub mod rmt;
pub mod synthetic;
pub mod verify;

pub use error::{Error, Result};
pub use rmt::{CorrelationEstimate, Estimator};
