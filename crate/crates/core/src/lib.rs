//! Honeybee colony energetics.
//!
//! The colony is an energy and matter ledger fed by foragers. [`demography`]
//! tracks bees by age, [`thermo`] prices heating, [`flora`] turns a landscape
//! into a nectar quality field, [`foraging`] sizes and values forager
//! assignments, [`market`] prices pollen in honey, and [`sim`] couples them
//! into a daily time step.
//!
//! Batch work (per-resource distance transforms, scenario batches) runs on
//! rayon with the default `parallel` feature; every entry point that fans out
//! takes an [`Execution`] so the sequential path stays available and gives
//! identical results.

pub mod demography;
pub mod flora;
pub mod foraging;
pub mod market;
pub mod numeric;
pub mod par;
pub mod sim;
pub mod thermo;

pub use par::Execution;
