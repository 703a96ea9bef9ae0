//! Compiler, reference interpreter and auto-tuner for a small image-processing
//! kernel language that targets OpenCL C.

pub mod analysis;
pub mod autotuner;
pub mod cli;
pub mod corpus;
pub mod emit;
pub mod execsim;
pub mod frontend;
pub mod pipeline;
pub mod space;
pub mod transform;
