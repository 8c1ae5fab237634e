pub mod adapter;
pub mod bench;
pub mod bridge;
pub mod engine;
pub mod error;
pub mod host;
pub mod runtime;
pub mod term;
pub mod xlate;
