//! File formats, multi-threaded training, configuration and the command
//! line for the `penn-core` embedding trainers.

pub mod cli;
pub mod config;
pub mod data;
pub mod ensemble;
pub mod format;
pub mod hogwild;
pub mod pipeline;
pub mod report;
