use crate::error::{Error, Result};
use crate::physics::{wind_at, PlantParams, SystemState, TetherParams, Vec3};

/// Squared-distance threshold below which two chain points are treated as
/// coincident and segment forces are undefined.
const DEGENERATE_EPS2: f64 = 1e-18;

/// Per-segment lumped properties derived from the nominal deployed length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discretization {
    pub node_mass: f64,
    pub segment_length: f64,
    pub spring_const: f64,
}

/// Splits the deployed line into `node_count + 1` segments: each inner node
/// carries `L * rho / N` of mass and each segment has stiffness
/// `F_max / (eps_max * l)`.
pub fn tether_discretization(total_length: f64, p: &TetherParams) -> Result<Discretization> {
    if !(total_length.is_finite() && total_length > 0.0) {
        return Err(Error::TetherExhausted {
            time: f64::NAN,
            length: total_length,
        });
    }
    let n = p.node_count as f64;
    let segment_length = total_length / (n + 1.0);
    Ok(Discretization {
        node_mass: total_length * p.linear_density / n,
        segment_length,
        spring_const: p.max_elastic_load / (p.elongation_at_max * segment_length),
    })
}

/// Elastic pull on `p_self` toward `p_neighbor`. Segments only transfer
/// force when taut; a slack or exactly-nominal segment contributes nothing.
pub fn segment_elastic_force(
    p_self: &Vec3,
    p_neighbor: &Vec3,
    rest_length: f64,
    spring_const: f64,
) -> Vec3 {
    let d = p_neighbor - p_self;
    let len2 = d.norm_squared();
    if len2 < DEGENERATE_EPS2 {
        log::warn!("coincident tether nodes: elastic force degenerate, returning zero");
        return Vec3::zeros();
    }
    let len = len2.sqrt();
    let stretch = len - rest_length;
    if stretch <= 0.0 {
        Vec3::zeros()
    } else {
        d * (spring_const * stretch / len)
    }
}

/// Axial viscous force on `p_self` from the relative motion of its
/// neighbor. Transverse relative velocity produces no force.
pub fn segment_damping_force(
    p_self: &Vec3,
    p_neighbor: &Vec3,
    v_self: &Vec3,
    v_neighbor: &Vec3,
    damping: f64,
) -> Vec3 {
    let d = p_neighbor - p_self;
    let len2 = d.norm_squared();
    if len2 < DEGENERATE_EPS2 {
        log::warn!("coincident tether nodes: damping force degenerate, returning zero");
        return Vec3::zeros();
    }
    let closing_rate = (v_neighbor - v_self).dot(&d) / len2;
    d * (damping * closing_rate)
}

/// Cross-flow drag on one lumped node: half the air density times the drag
/// coefficient times the cylinder area projected perpendicular to the
/// apparent wind.
pub fn node_aero_force(
    node_vel: &Vec3,
    wind: &Vec3,
    segment_axis: &Vec3,
    diameter: f64,
    segment_length: f64,
    drag_coeff: f64,
    air_density: f64,
) -> Vec3 {
    let wa = wind - node_vel;
    let speed2 = wa.norm_squared();
    if speed2 < DEGENERATE_EPS2 {
        return Vec3::zeros();
    }
    let speed = speed2.sqrt();
    let cos_inc = (wa.dot(segment_axis) / speed).clamp(-1.0, 1.0);
    let sin_inc = (1.0 - cos_inc * cos_inc).max(0.0).sqrt();
    let area = diameter * segment_length * sin_inc;
    wa * (0.5 * air_density * drag_coeff * area * speed)
}

/// Combined elastic plus damping force exerted on the chain point `i` by the
/// segment toward point `i+1`. The reaction on `i+1` is the exact negative.
pub(crate) fn segment_force(
    p_self: &Vec3,
    p_neighbor: &Vec3,
    v_self: &Vec3,
    v_neighbor: &Vec3,
    disc: &Discretization,
    damping: f64,
) -> Vec3 {
    segment_elastic_force(p_self, p_neighbor, disc.segment_length, disc.spring_const)
        + segment_damping_force(p_self, p_neighbor, v_self, v_neighbor, damping)
}

/// Boundary forces produced by one pass over the chain.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ChainForces {
    /// Force of the first segment on the drum exit point.
    pub ground_force: Vec3,
    /// Unit vector from the drum exit toward the first chain point (zero if
    /// degenerate).
    pub ground_dir: Vec3,
    /// Force of the last segment on the kite.
    pub kite_end_force: Vec3,
}

/// Single force pass over the chain origin -> nodes -> kite. Writes the
/// inner-node accelerations (segment forces, cross-flow drag with the axis
/// approximated by the chord joining the two neighbors, gravity) and
/// returns the boundary forces for the winch and kite equations.
pub(crate) fn chain_pass(
    state: &SystemState,
    plant: &PlantParams,
    disc: &Discretization,
    acc: &mut [Vec3],
) -> ChainForces {
    let n = state.tether.node_count();
    debug_assert_eq!(acc.len(), n);

    let origin = Vec3::zeros();
    let zero_vel = Vec3::zeros();
    let pos = &state.tether.node_pos;
    let vel = &state.tether.node_vel;
    let chain_pos = |i: usize| -> &Vec3 {
        if i == 0 {
            &origin
        } else if i <= n {
            &pos[i - 1]
        } else {
            &state.kite.position
        }
    };
    let chain_vel = |i: usize| -> &Vec3 {
        if i == 0 {
            &zero_vel
        } else if i <= n {
            &vel[i - 1]
        } else {
            &state.kite.velocity
        }
    };

    // prev = force on chain point l exerted by the inboard segment's far end;
    // the force of that same segment on point l itself is -prev
    let mut prev = segment_force(
        chain_pos(0),
        chain_pos(1),
        chain_vel(0),
        chain_vel(1),
        disc,
        plant.tether.axial_damping,
    );
    let ground_force = prev;
    let first = chain_pos(1);
    let ground_dir = if first.norm_squared() < DEGENERATE_EPS2 {
        Vec3::zeros()
    } else {
        first / first.norm()
    };

    let g = Vec3::new(0.0, 0.0, -plant.env.gravity);
    for l in 1..=n {
        let outward = segment_force(
            chain_pos(l),
            chain_pos(l + 1),
            chain_vel(l),
            chain_vel(l + 1),
            disc,
            plant.tether.axial_damping,
        );
        let chord = chain_pos(l + 1) - chain_pos(l - 1);
        let axis = if chord.norm_squared() < DEGENERATE_EPS2 {
            Vec3::z()
        } else {
            chord.normalize()
        };
        let aero = node_aero_force(
            chain_vel(l),
            &wind_at(chain_pos(l), &plant.env),
            &axis,
            plant.tether.diameter,
            disc.segment_length,
            plant.tether.drag_coeff,
            plant.env.air_density,
        );
        acc[l - 1] = (outward - prev + aero) / disc.node_mass + g;
        prev = outward;
    }
    ChainForces {
        ground_force,
        ground_dir,
        kite_end_force: -prev,
    }
}

/// Accelerations of the inner nodes: neighbor segment forces, cross-flow
/// drag, and gravity.
pub fn tether_accelerations(state: &SystemState, plant: &PlantParams) -> Result<Vec<Vec3>> {
    let lt = state.tether_length(&plant.winch);
    let disc = tether_discretization(lt, &plant.tether)?;
    let mut acc = vec![Vec3::zeros(); state.tether.node_count()];
    chain_pass(state, plant, &disc, &mut acc);
    Ok(acc)
}

/// Axial line force at the drum exit [N], positive in tension. This is what
/// a ground-station load cell measures.
pub fn ground_axial_force(state: &SystemState, plant: &PlantParams) -> Result<f64> {
    let lt = state.tether_length(&plant.winch);
    let disc = tether_discretization(lt, &plant.tether)?;
    let origin = Vec3::zeros();
    let zero_vel = Vec3::zeros();
    let (first_pos, first_vel) = if state.tether.node_count() > 0 {
        (&state.tether.node_pos[0], &state.tether.node_vel[0])
    } else {
        (&state.kite.position, &state.kite.velocity)
    };
    if first_pos.norm_squared() < DEGENERATE_EPS2 {
        return Ok(0.0);
    }
    let f = segment_force(
        &origin,
        first_pos,
        &zero_vel,
        first_vel,
        &disc,
        plant.tether.axial_damping,
    );
    Ok(f.dot(&(first_pos / first_pos.norm())))
}
