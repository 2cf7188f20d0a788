//! Independent numerical oracles for the `fptmc` test suites.
//!
//! Nothing in here calls into `fptmc`. Every routine is a direct, slow,
//! textbook computation so that the library's closed forms and samplers can
//! be checked against something that shares no code path with them.

pub mod bridge;
pub mod closed_form;
pub mod quad;
pub mod stats;
