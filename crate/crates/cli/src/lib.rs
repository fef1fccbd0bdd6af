//! Batch front end for the surface-pressure laboratory.
//!
//! The library half carries everything the binary does minus argument
//! parsing: [`config`] loads and validates TOML run configurations,
//! [`report`] serializes self-describing JSON/CSV reports with atomic
//! writes, and [`verify`] holds the built-in verification suite that the
//! `verify` command and the acceptance tests both execute.

pub mod config;
pub mod report;
pub mod verify;
