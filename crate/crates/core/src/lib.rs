//! Framed surface representations, equivariant initial maps and harmonic map
//! heat flow into hyperbolic 3-space.

pub mod fixtures;
pub mod framed_rep;
pub mod heat_flow;
pub mod hyperbolic;
pub mod initial_map;
pub mod mesh;
pub mod metric_interp;
pub mod quad_diff;
