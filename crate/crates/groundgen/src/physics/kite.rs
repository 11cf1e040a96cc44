use crate::physics::{wind_at, EnvParams, KiteParams, KiteState, Vec3};

const EPS2: f64 = 1e-18;

/// Aerodynamic force on the kite point mass.
///
/// Lift is perpendicular to the apparent wind `w_a = W - v`; with zero
/// steering it lies in the plane spanned by the radial direction and `w_a`,
/// pointing away from the ground station. The steering input rolls the lift
/// vector about the apparent-wind axis, and drag pushes the kite along
/// `w_a` with magnitude lift / E.
pub fn kite_aero_force(
    kite: &KiteState,
    steering: f64,
    p: &KiteParams,
    env: &EnvParams,
) -> Vec3 {
    let wa = wind_at(&kite.position, env) - kite.velocity;
    let speed2 = wa.norm_squared();
    if speed2 < EPS2 {
        return Vec3::zeros();
    }
    let speed = speed2.sqrt();
    let ew = wa / speed;

    let r = kite.position.norm();
    let er = if r < 1e-9 { Vec3::z() } else { kite.position / r };
    // zero-steering lift direction: radial component orthogonal to the wind
    let mut b = er - ew * er.dot(&ew);
    if b.norm_squared() < 1e-12 {
        b = Vec3::z() - ew * ew.z;
    }
    if b.norm_squared() < 1e-12 {
        b = Vec3::x() - ew * ew.x;
    }
    let e1 = b.normalize();
    // sign chosen so positive steering yields a positive course-angle rate
    let e2 = e1.cross(&ew);

    let lift = 0.5 * env.air_density * p.area * p.lift_coeff * speed2;
    let lift_dir = e1 * steering.cos() + e2 * steering.sin();
    lift_dir * lift + ew * (lift / p.lift_to_drag)
}

/// Point-mass kite dynamics: returns (velocity, acceleration).
/// `tether_end_force` is the force the last tether segment exerts on the
/// kite (the reaction of the segment tension).
pub fn kite_derivatives(
    kite: &KiteState,
    steering: f64,
    tether_end_force: &Vec3,
    p: &KiteParams,
    env: &EnvParams,
) -> (Vec3, Vec3) {
    let aero = kite_aero_force(kite, steering, p, env);
    let acc = (aero + tether_end_force) / p.mass + Vec3::new(0.0, 0.0, -env.gravity);
    (kite.velocity, acc)
}
