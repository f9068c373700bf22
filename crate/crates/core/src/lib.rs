//! Moving-window statistics for spatial social networks.
//!
//! Each node of a geolocated, undirected network is scored by what happens
//! inside a window around it: how many ties have both ends inside
//! (EdgeScan), how dense the induced subgraph is (NDScan), and how many
//! closed triangles it holds. Around that core sit a spatial index, a
//! sensitivity analysis over window definitions, a Getis-Ord Gi* comparison
//! and Monte Carlo significance against rewired null networks.

pub mod config;
pub mod error;
pub mod hotspot;
pub mod index;
pub mod io;
pub mod model;
pub mod neighborhood;
pub mod null_model;
mod parallel;
pub mod scan;
pub mod sensitivity;
pub mod synth;

pub use error::{Error, Result};
pub use index::{oracle_query, Backend, PointIndex};
pub use model::{EdgeRecord, NodeRecord, SpatialSocialNetwork};
pub use neighborhood::{NeighborhoodSpec, SpecKind, WindowMembership};
pub use scan::{ScanOptions, ScanResult, ScanValue, StatKind};
