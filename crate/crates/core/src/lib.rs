//! Receding-horizon economic and energetic control of a multi-chiller cold
//! production plant with a chilled-water storage tank.
//!
//! The crate is organised bottom-up:
//!
//! * [`plant`] static chiller curves, bypass hydraulics and the tank model;
//! * [`tariff`] time-of-use prices and the period calendar;
//! * [`ga`] the mixed continuous/binary real-coded genetic algorithm;
//! * [`mpc`] horizon objectives, soft constraints and the receding-horizon loop;
//! * [`scenario`] scenario files, synthetic profiles, reports and comparisons.
//! * [`validation`] self-checks of the model used by `validate-model`.

pub mod ga;
pub mod mpc;
pub mod plant;
pub mod scenario;
pub mod tariff;
pub mod validation;
