pub mod field_model;
pub mod spectral;
pub mod ring_system;
pub mod linalg;
pub mod scenario_lab;
pub mod crosswords;
pub mod cli;
