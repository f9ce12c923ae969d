//! Palisade: a layered defense engine against indirect prompt injection for
//! browser agents, plus the benchmark tooling used to evaluate it.
//!
//! The engine screens page content in three stages: a visual sentinel that
//! blocks text a human could not have seen, a semantic planner stage that
//! inspects what survives and drafts the action plan, and an origin guard
//! that deterministically vets every step of that plan before execution.

pub mod corpus;
pub mod dom;
pub mod error;
pub mod guard;
pub mod harness;
pub mod planner;
mod seeding;
pub mod sentinel;
pub mod tasks;

pub use error::{Error, Result};
