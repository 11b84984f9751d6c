//! Planning toolkit for electrified heating: synthesises homogeneous and
//! heterogeneous heat-pump demand profiles and sizes generation, storage and
//! transmission-constrained dispatch with a linear expansion model.

pub mod demand;
pub mod expansion;
pub mod fixture;
pub mod lp;
pub mod network;
pub mod scenario;
pub mod series;
