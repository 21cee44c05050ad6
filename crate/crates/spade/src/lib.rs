//! Command-line front end, JSON records and parallel drivers for
//! [`spade_core`].

pub mod cli;
pub mod parallel;
pub mod record;
pub mod table;
