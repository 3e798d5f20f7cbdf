//! Support code for the `bellcomm` command-line tool.

pub mod reproduce;
