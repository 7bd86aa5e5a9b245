//! Configuration, persistence and experiment commands for the `taxis` tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod io;
