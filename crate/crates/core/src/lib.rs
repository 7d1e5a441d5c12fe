//! Multitype branching forests and their Lamperti representation.

pub mod forest;
pub mod trajectory;
pub mod coding;
pub mod distributions;
pub mod stats;
pub mod discrete;
pub mod continuous;
pub mod io;
pub mod laws;
pub mod verify;
