//! Tooling for checking that a formal Lean statement says the same thing as
//! the informal statement it was translated from.
//!
//! The crate is organised as a pipeline:
//!
//! * [`lean_stmt`] tokenizes, parses, and re-renders Lean 4 theorem headers,
//!   and locates mutation sites inside them.
//! * [`mutgen`] derives misaligned variants of aligned pairs with six
//!   targeted mutation strategies and drives corpus augmentation.
//! * [`scorecore`] holds the numeric core: certainty / similarity / alignment
//!   scores, the cross-entropy and contrastive training losses, and the
//!   analytic contrastive gradient.
//! * [`backend`] abstracts the model server that produces token log-probs
//!   and hidden states, with a deterministic mock and an HTTP wire client.
//! * [`evalmetrics`] turns scored records into selection accuracy, detection
//!   confusion counts, threshold sweeps, and BLEU baselines.
//! * [`dataset`] reads and writes the JSONL record format shared by the CLI
//!   subcommands.
//!
//! The `lean-align` binary exposes the pipeline as subcommands; see the
//! crate README for usage.

pub mod backend;
pub mod cli;
pub mod dataset;
pub mod evalmetrics;
pub mod fixtures;
pub mod lean_stmt;
pub mod mutgen;
pub mod scorecore;

pub(crate) mod fnv;
