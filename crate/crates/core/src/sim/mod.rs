//! Kinematic simulator: obstacle worlds, depth rendering, collision checks,
//! reference paths, scenario generation and closed-loop episodes.

pub mod collision;
pub mod dynamics;
pub mod episode;
pub mod grid;
pub mod render;
pub mod scenario;
pub mod world;

pub use collision::{check_collision, min_clearance};
pub use dynamics::{step_dynamics, RobotState};
pub use episode::{run_episode, EpisodeConfig, EpisodeResult};
pub use grid::dijkstra_path_length;
pub use render::{ground_truth_scan, ray_cast_scan, render_depth};
pub use scenario::{generate_scenario, ScenarioParams};
pub use world::{Bounds, Obstacle, Shape, World};
