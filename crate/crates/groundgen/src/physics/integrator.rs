use crate::error::{Error, Result};
use crate::physics::kite::kite_derivatives;
use crate::physics::tether::{chain_pass, tether_discretization};
use crate::physics::winch::winch_derivatives;
use crate::physics::{PlantParams, SystemState, Vec3};

/// Actuator commands held constant across one integration step.
#[derive(Debug, Clone, Copy, Default)]
pub struct Inputs {
    pub steering: f64,
    pub drum_torque: f64,
}

/// Time derivative of every continuous state component.
#[derive(Debug, Clone)]
struct StateDot {
    kite_vel: Vec3,
    kite_acc: Vec3,
    node_vel: Vec<Vec3>,
    node_acc: Vec<Vec3>,
    winch_speed: f64,
    winch_acc: f64,
}

impl StateDot {
    fn zeros(n: usize) -> Self {
        StateDot {
            kite_vel: Vec3::zeros(),
            kite_acc: Vec3::zeros(),
            node_vel: vec![Vec3::zeros(); n],
            node_acc: vec![Vec3::zeros(); n],
            winch_speed: 0.0,
            winch_acc: 0.0,
        }
    }
}

fn derivative(
    state: &SystemState,
    u: &Inputs,
    plant: &PlantParams,
    out: &mut StateDot,
) -> Result<()> {
    let lt = state.tether_length(&plant.winch);
    let disc = tether_discretization(lt, &plant.tether).map_err(|_| Error::TetherExhausted {
        time: state.time,
        length: lt,
    })?;
    let boundary = chain_pass(state, plant, &disc, &mut out.node_acc);
    out.node_vel.copy_from_slice(&state.tether.node_vel);

    let (vel, acc) = kite_derivatives(
        &state.kite,
        u.steering,
        &boundary.kite_end_force,
        &plant.kite,
        &plant.env,
    );
    out.kite_vel = vel;
    out.kite_acc = acc;

    out.winch_speed = state.winch.speed;
    out.winch_acc = winch_derivatives(
        &state.winch,
        u.drum_torque,
        &boundary.ground_force,
        &boundary.ground_dir,
        &plant.winch,
    );
    Ok(())
}

/// `dst = base + h * d` over all continuous components; time is handled by
/// the caller.
fn offset(dst: &mut SystemState, base: &SystemState, d: &StateDot, h: f64) {
    dst.kite.position = base.kite.position + d.kite_vel * h;
    dst.kite.velocity = base.kite.velocity + d.kite_acc * h;
    for i in 0..base.tether.node_pos.len() {
        dst.tether.node_pos[i] = base.tether.node_pos[i] + d.node_vel[i] * h;
        dst.tether.node_vel[i] = base.tether.node_vel[i] + d.node_acc[i] * h;
    }
    dst.winch.angle = base.winch.angle + d.winch_speed * h;
    dst.winch.speed = base.winch.speed + d.winch_acc * h;
}

/// Classical fixed-step 4th-order Runge-Kutta stepper with preallocated
/// stage buffers, so the hot loop never allocates.
pub struct Stepper {
    k1: StateDot,
    k2: StateDot,
    k3: StateDot,
    k4: StateDot,
    tmp: Option<SystemState>,
}

impl Stepper {
    pub fn new(node_count: usize) -> Self {
        Stepper {
            k1: StateDot::zeros(node_count),
            k2: StateDot::zeros(node_count),
            k3: StateDot::zeros(node_count),
            k4: StateDot::zeros(node_count),
            tmp: None,
        }
    }

    /// Advances `state` by `dt` in place. The caller is responsible for
    /// choosing `dt` within the stiffness stability bound
    /// `0.2 * sqrt(node_mass / spring_const)`.
    pub fn step(
        &mut self,
        state: &mut SystemState,
        u: &Inputs,
        plant: &PlantParams,
        dt: f64,
    ) -> Result<()> {
        let t0 = state.time;
        if let Some(component) = state.first_non_finite() {
            return Err(Error::NonFinite {
                time: t0,
                component,
            });
        }
        if self.tmp.as_ref().map(|t| t.tether.node_pos.len()) != Some(state.tether.node_pos.len())
        {
            self.tmp = Some(state.clone());
        }
        let tmp = self.tmp.as_mut().unwrap();

        derivative(state, u, plant, &mut self.k1)?;
        offset(tmp, state, &self.k1, 0.5 * dt);
        derivative(tmp, u, plant, &mut self.k2)?;
        offset(tmp, state, &self.k2, 0.5 * dt);
        derivative(tmp, u, plant, &mut self.k3)?;
        offset(tmp, state, &self.k3, dt);
        derivative(tmp, u, plant, &mut self.k4)?;

        let w = dt / 6.0;
        let (k1, k2, k3, k4) = (&self.k1, &self.k2, &self.k3, &self.k4);
        state.kite.position += (k1.kite_vel + k2.kite_vel * 2.0 + k3.kite_vel * 2.0 + k4.kite_vel) * w;
        state.kite.velocity += (k1.kite_acc + k2.kite_acc * 2.0 + k3.kite_acc * 2.0 + k4.kite_acc) * w;
        for i in 0..state.tether.node_pos.len() {
            state.tether.node_pos[i] +=
                (k1.node_vel[i] + k2.node_vel[i] * 2.0 + k3.node_vel[i] * 2.0 + k4.node_vel[i]) * w;
            state.tether.node_vel[i] +=
                (k1.node_acc[i] + k2.node_acc[i] * 2.0 + k3.node_acc[i] * 2.0 + k4.node_acc[i]) * w;
        }
        state.winch.angle +=
            (k1.winch_speed + k2.winch_speed * 2.0 + k3.winch_speed * 2.0 + k4.winch_speed) * w;
        state.winch.speed +=
            (k1.winch_acc + k2.winch_acc * 2.0 + k3.winch_acc * 2.0 + k4.winch_acc) * w;
        state.time = t0 + dt;

        if let Some(component) = state.first_non_finite() {
            return Err(Error::NonFinite {
                time: state.time,
                component,
            });
        }
        Ok(())
    }
}

/// One-shot step returning a new state; convenience wrapper over `Stepper`.
pub fn step(
    state: &SystemState,
    u: &Inputs,
    dt: f64,
    plant: &PlantParams,
) -> Result<SystemState> {
    let mut s = state.clone();
    Stepper::new(state.tether.node_count()).step(&mut s, u, plant, dt)?;
    Ok(s)
}

/// Largest integrator step satisfying the stiffness stability bound at the
/// given deployed length.
pub fn stability_dt(length: f64, p: &crate::physics::TetherParams) -> Result<f64> {
    let d = tether_discretization(length, p)?;
    Ok(0.2 * (d.node_mass / d.spring_const).sqrt())
}
