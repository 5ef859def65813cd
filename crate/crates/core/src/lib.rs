//! Receding-horizon task-and-motion planning over a symbolic action tree
//! with kinematic motion optimization.

pub mod geometry;
pub mod kinematics;
pub mod symbolic;
pub mod motion;
pub mod scenes;
pub mod heuristics;
pub mod search;
pub mod driver;
pub mod bench;
