//! Curriculum environment engine over a byte-stream protocol, with a
//! computational-mechanics toolkit for measuring task complexity.
//!
//! The engine side samples task instances (small POMDPs over the 256-byte
//! action alphabet), runs agents against them under soft/hard step limits,
//! and strings tasks into curricula with consecutive-success advancement.
//! The toolkit side models tasks as ε-transducers, computes statistical and
//! topological complexity, reconstructs machines from observed streams, and
//! scores curricula for complexity ordering and shared structure.

pub mod agents;
pub mod analysis;
pub mod error;
pub mod harness;
pub mod mechanics;
pub mod reconstruct;
pub mod stream;
pub mod task;
