//! Oracles and fixtures shared by the test targets.
#![allow(dead_code)]

pub mod clinical;
pub mod goldens;
pub mod humeval;
pub mod text;
