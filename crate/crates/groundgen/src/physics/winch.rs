use crate::physics::{Vec3, WinchParams, WinchState};

/// Angular acceleration of the drum. Positive speed pays line out, so a
/// taut tether (positive axial force) accelerates the drum toward reel-out
/// and the motor torque must oppose it to generate.
///
/// `tether_end_force` is the force of the first segment on the drum exit
/// point; only its component along the segment (the axial force) loads the
/// drum. Torque demands beyond the drum-side limit are saturated.
pub fn winch_derivatives(
    winch: &WinchState,
    motor_torque: f64,
    tether_end_force: &Vec3,
    axial_dir: &Vec3,
    p: &WinchParams,
) -> f64 {
    let limit = p.drum_torque_limit();
    let torque = if motor_torque.abs() > limit {
        log::debug!("drum torque {motor_torque:.1} N·m saturated to {limit:.1}");
        motor_torque.clamp(-limit, limit)
    } else {
        motor_torque
    };
    let axial = tether_end_force.dot(axial_dir);
    (-p.viscous_coeff * winch.speed + torque + p.drum_radius * axial) / p.inertia
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rest_with_slack_line_stays_at_rest() {
        let w = WinchState { angle: 10.0, speed: 0.0 };
        let acc = winch_derivatives(&w, 0.0, &Vec3::zeros(), &Vec3::x(), &WinchParams::default());
        assert_eq!(acc, 0.0);
    }

    #[test]
    fn torque_over_inertia_at_standstill() {
        let w = WinchState { angle: 10.0, speed: 0.0 };
        let acc = winch_derivatives(&w, 100.0, &Vec3::zeros(), &Vec3::x(), &WinchParams::default());
        assert_relative_eq!(acc, 58.82352941176471, max_relative = 1e-12);
    }

    #[test]
    fn only_axial_component_loads_the_drum() {
        let p = WinchParams::default();
        let w = WinchState { angle: 10.0, speed: 0.0 };
        let f = Vec3::new(0.0, 500.0, 0.0); // perpendicular to the line axis
        let acc = winch_derivatives(&w, 0.0, &f, &Vec3::x(), &p);
        assert_eq!(acc, 0.0);
        let acc = winch_derivatives(&w, 0.0, &Vec3::new(900.0, 0.0, 0.0), &Vec3::x(), &p);
        assert_relative_eq!(acc, 0.3 * 900.0 / 1.7, max_relative = 1e-12);
    }

    #[test]
    fn torque_saturates_at_drum_limit() {
        let p = WinchParams::default();
        let w = WinchState { angle: 10.0, speed: 0.0 };
        let limit = p.drum_torque_limit();
        let acc = winch_derivatives(&w, 2.0 * limit, &Vec3::zeros(), &Vec3::x(), &p);
        assert_relative_eq!(acc, limit / p.inertia, max_relative = 1e-12);
    }
}
