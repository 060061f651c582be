#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod anti_ou;
pub mod branch;
pub mod cluster;
pub mod error;
pub mod geometry;
pub mod hull;
pub mod polygon_flow;
pub mod quadrature;
pub mod render;
pub mod rng;
pub mod stats;
pub mod vertex;
