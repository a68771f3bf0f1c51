//! Closed-loop policy-code generation for implicative tabletop tasks.
//!
//! An instruction is simplified into minimal tasks, each minimal task is
//! solved into policy code with retrieved demonstrations and compiler
//! feedback, the combined program runs on a kinematic world, and successful
//! episodes are summarized into new APIs and demonstrations.

pub mod bench;
pub mod gateway;
pub mod lang;
pub mod pipeline;
pub mod store;
pub mod world;
