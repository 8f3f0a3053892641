#![allow(clippy::needless_range_loop)]

pub mod connections;
pub mod curvature;
pub mod expr;
pub mod field;
pub mod report;
pub mod space;
pub mod tensor;
pub mod verify;
