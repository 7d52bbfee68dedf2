//! File formats, service clients and the command-line front end for
//! `discourse-core`.

pub mod artifacts;
pub mod cli;
pub mod config;
pub mod reproduce;
pub mod service;
pub mod transcript;
