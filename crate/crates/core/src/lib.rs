pub mod algebra;
pub mod catalog;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod hyperfun;
pub mod integration;
mod sum;
