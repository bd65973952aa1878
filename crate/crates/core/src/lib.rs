//! Priority algorithms for disjoint path allocation on paths, trees and grids,
//! with exact oracles, adversaries, advice codecs and guessing reductions.

pub mod battery;
pub mod cat;
pub mod dpa_path;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod lwdpa;
pub mod model;
pub mod oracle;
pub mod report;
pub mod sgkh;
pub mod tape;

pub use error::{DpaError, Result};
