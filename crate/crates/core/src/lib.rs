//! Character fingerprints, trace-algebra checks and intertwiner-based
//! conjugacy tests for matrix representations of free groups.

pub mod conjugacy;
pub mod harness;
pub mod linalg;
pub mod matgroups;
pub mod outt;
pub mod reps;
pub mod seeds;
pub mod trace_algebra;
pub mod words;
