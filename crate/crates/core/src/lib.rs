//! Configuration performance impact analysis for ConfScript programs.
//!
//! The pipeline: parse a program ([`lang`]), compute related configuration
//! parameters ([`analysis`]), explore configuration- and input-dependent paths
//! symbolically ([`symexec`]), profile each path ([`trace`]), derive the impact
//! model ([`impact`]) and check concrete configurations against it ([`checker`]).

pub mod lang;
pub mod analysis;
pub mod symexec;
pub mod trace;
pub mod interp;
pub mod impact;
pub mod pipeline;
pub mod checker;
