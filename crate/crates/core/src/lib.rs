//! Detection and source-level repair for a Solidity subset.
//!
//! The pipeline has three phases: an ensemble of static detectors finds
//! vulnerabilities of four classes (reentrancy, missing input validation,
//! locked ether, unhandled exceptions), template-based fix patterns rewrite
//! the syntax tree guided by dataflow and pointer analysis, and the same
//! detectors re-verify the patched source.

pub mod analysis;
pub mod detectors;
pub mod patcher;
pub mod pipeline;
pub mod report;
pub mod verifier;
pub mod frontend;
