use crate::geometry::{DynamicLimits, Pose2D};
use crate::planner::VelocityCommand;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RobotState {
    pub pose: Pose2D,
    pub velocity: VelocityCommand,
}

/// Applies `cmd` for one period: velocities move toward the command by at
/// most the acceleration limits, are clipped to the speed limits, and the
/// pose follows the resulting constant twist.
pub fn step_dynamics(state: &RobotState, cmd: VelocityCommand, limits: &DynamicLimits, dt: f64) -> RobotState {
    let dv = limits.a_v_max * dt;
    let dw = limits.a_omega_max * dt;
    let v = cmd
        .v
        .clamp(state.velocity.v - dv, state.velocity.v + dv)
        .clamp(-limits.v_max, limits.v_max);
    let omega = cmd
        .omega
        .clamp(state.velocity.omega - dw, state.velocity.omega + dw)
        .clamp(-limits.omega_max, limits.omega_max);
    RobotState {
        pose: state.pose.integrate(v, omega, dt),
        velocity: VelocityCommand { v, omega },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn limits() -> DynamicLimits {
        DynamicLimits::new(0.5, 1.0, 1.0, 2.0).unwrap()
    }

    #[test]
    fn acceleration_is_rate_limited() {
        let s = step_dynamics(&RobotState::default(), VelocityCommand::new(0.5, 1.0), &limits(), 0.1);
        assert_abs_diff_eq!(s.velocity.v, 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(s.velocity.omega, 0.2, epsilon = 1e-15);
    }

    #[test]
    fn speed_is_capped() {
        let mut s = RobotState::default();
        for _ in 0..20 {
            s = step_dynamics(&s, VelocityCommand::new(3.0, -9.0), &limits(), 0.1);
        }
        assert_eq!(s.velocity.v, 0.5);
        assert_eq!(s.velocity.omega, -1.0);
    }

    #[test]
    fn straight_motion_follows_heading() {
        let s = RobotState {
            pose: Pose2D::identity(),
            velocity: VelocityCommand::new(0.5, 0.0),
        };
        let n = step_dynamics(&s, VelocityCommand::new(0.5, 0.0), &limits(), 0.1);
        assert_abs_diff_eq!(n.pose.y, 0.05, epsilon = 1e-15);
        assert_eq!(n.pose.x, 0.0);
    }
}
