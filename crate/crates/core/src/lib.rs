pub mod adaptive;
pub mod cli;
pub mod error;
pub mod estimate;
pub mod fixtures;
pub mod hierarchy;
pub mod integrator;
pub mod io;
pub mod network;
pub mod nlp;
