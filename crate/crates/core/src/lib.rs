//! Simulation and analysis of random self-affine carpets.
//!
//! The unit square is cut into an `n x m` grid (`m > n >= 2`) of rectangles,
//! each kept with probability `p`; kept rectangles are subdivided the same
//! way, level after level. This crate generates such carpets reproducibly,
//! finds their crossings and connected components, estimates crossing and
//! survival probabilities by Monte Carlo, and evaluates the model's closed
//! forms.

pub mod analytic;
pub mod carpet;
pub mod connectivity;
pub mod error;
pub mod estimator;
pub mod grid;
pub mod io;
pub mod render;
pub mod rng;
pub mod stats;

pub use carpet::{force_prefix, generate, BranchingCount, Generator, Realization};
pub use connectivity::{
    census, crossing, crossing_domain, label_components, Adjacency, ComponentCensus, Direction,
    Labeling, Layout,
};
pub use error::{Error, Result};
pub use estimator::{CrossingEstimate, CrossingSetup};
pub use grid::{Cell, GridParams, RectAddr};
