use crate::physics::{EnvParams, Vec3};

/// Wind vector at a point. Uniform field by default; a positive shear
/// exponent applies the power law `v_w * (z / z_ref)^alpha`.
pub fn wind_at(position: &Vec3, env: &EnvParams) -> Vec3 {
    let magnitude = if env.shear_exponent == 0.0 {
        env.wind_speed
    } else {
        // clamp so a transient below-ground sample cannot produce NaN
        let z = position.z.max(0.0);
        env.wind_speed * (z / env.wind_ref_height).powf(env.shear_exponent)
    };
    env.wind_dir() * magnitude
}
