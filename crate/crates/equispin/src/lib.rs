//! Configuration, experiment runner, output formats and a product-basis
//! reference implementation on top of `equispin-core`.

pub mod config;
pub mod fft;
pub mod oracle;
pub mod output;
pub mod runner;
