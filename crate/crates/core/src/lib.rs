//! Restructures French clinical practice guidelines into GEM-style XML.
//!
//! The pipeline parses text into clauses, lets expert stages post cue facts on a shared
//! blackboard, types basic segments, computes condition scopes with default rules plus
//! cohesion-based revision, and emits `(condition chain, actions)` recommendations.

pub mod config;
pub mod cues;
pub mod document;
pub mod error;
pub mod eval;
pub mod facts;
pub mod gem;
pub mod lexicon;
pub mod pipeline;
pub mod par;
pub mod rules;
pub mod scope;
pub mod segment;
pub mod sidecar;
pub mod stage;
pub mod text;
pub mod train;
