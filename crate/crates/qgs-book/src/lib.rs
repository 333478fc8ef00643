//! The `qgs` user guide, compiled.
//!
//! Each module below embeds one chapter of the mdBook under `book/src/`, so
//! `cargo test` runs every code block in the guide as a doc test. If a
//! chapter drifts from the real API, the workspace stops building — the
//! book cannot lie.
//!
//! Render the human-readable version with `mdbook build book/` from the
//! workspace root; read it here if you prefer rustdoc.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/tail-models.md")]
pub mod tail_models {}

#[doc = include_str!("../../../book/src/overshoot.md")]
pub mod overshoot {}

#[doc = include_str!("../../../book/src/process.md")]
pub mod process {}

#[doc = include_str!("../../../book/src/asymptotics.md")]
pub mod asymptotics {}

#[doc = include_str!("../../../book/src/diagnostics.md")]
pub mod diagnostics {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
