//! Execution: scalar evaluation, the ENUMERABLE iterator engine, the naive
//! reference interpreter and result formatting.

pub mod enumerable;
pub mod eval;
pub mod format;
pub mod naive;

pub use enumerable::{execute, ExecOptions, Executor};
pub use format::{render, Format};
