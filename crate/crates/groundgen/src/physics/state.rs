use crate::physics::{Vec3, WinchParams};

/// Kite point-mass state in ground coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct KiteState {
    pub position: Vec3,
    pub velocity: Vec3,
}

impl KiteState {
    /// Elevation angle above the horizontal plane [rad].
    pub fn elevation(&self) -> f64 {
        let p = &self.position;
        p.z.atan2((p.x * p.x + p.y * p.y).sqrt())
    }

    /// Azimuth angle about the z axis, zero along +x [rad].
    pub fn azimuth(&self) -> f64 {
        self.position.y.atan2(self.position.x)
    }

    /// Distance from the ground-station origin [m].
    pub fn radius(&self) -> f64 {
        self.position.norm()
    }

    /// Builds a position/velocity pair from spherical coordinates; the
    /// velocity is left zero.
    pub fn from_spherical(elevation: f64, azimuth: f64, radius: f64) -> Self {
        let (se, ce) = elevation.sin_cos();
        let (sa, ca) = azimuth.sin_cos();
        KiteState {
            position: Vec3::new(radius * ce * ca, radius * ce * sa, radius * se),
            velocity: Vec3::zeros(),
        }
    }

    /// Speed component tangential to the sphere of constant radius [m/s].
    pub fn tangential_speed(&self) -> f64 {
        let r = self.radius();
        if r < 1e-9 {
            return self.velocity.norm();
        }
        let er = self.position / r;
        (self.velocity - er * self.velocity.dot(&er)).norm()
    }
}

/// Inner lumped-mass nodes of the tether; endpoints (drum exit, kite) are
/// not stored here.
#[derive(Debug, Clone, PartialEq)]
pub struct TetherState {
    pub node_pos: Vec<Vec3>,
    pub node_vel: Vec<Vec3>,
}

impl TetherState {
    pub fn node_count(&self) -> usize {
        self.node_pos.len()
    }
}

/// Winch drum state. `angle = 0` corresponds to the tether fully coiled, so
/// the deployed length is `drum_radius * angle`.
#[derive(Debug, Clone, PartialEq)]
pub struct WinchState {
    pub angle: f64,
    pub speed: f64,
}

/// Complete dynamic state advanced by the integrator.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub kite: KiteState,
    pub tether: TetherState,
    pub winch: WinchState,
    pub time: f64,
}

impl SystemState {
    /// Nominal (unstretched) deployed tether length [m].
    pub fn tether_length(&self, winch: &WinchParams) -> f64 {
        winch.drum_radius * self.winch.angle
    }

    /// Tether linear speed at the drum [m/s], reel-out positive.
    pub fn reel_speed(&self, winch: &WinchParams) -> f64 {
        winch.drum_radius * self.winch.speed
    }

    /// Returns the name of the first non-finite component, if any.
    pub fn first_non_finite(&self) -> Option<String> {
        let check3 = |v: &Vec3, what: &str| -> Option<String> {
            for (axis, c) in [("x", v.x), ("y", v.y), ("z", v.z)] {
                if !c.is_finite() {
                    return Some(format!("{what}.{axis}"));
                }
            }
            None
        };
        if let Some(c) = check3(&self.kite.position, "kite position") {
            return Some(c);
        }
        if let Some(c) = check3(&self.kite.velocity, "kite velocity") {
            return Some(c);
        }
        for (i, (p, v)) in self
            .tether
            .node_pos
            .iter()
            .zip(self.tether.node_vel.iter())
            .enumerate()
        {
            if let Some(c) = check3(p, &format!("node {} position", i + 1)) {
                return Some(c);
            }
            if let Some(c) = check3(v, &format!("node {} velocity", i + 1)) {
                return Some(c);
            }
        }
        if !self.winch.angle.is_finite() {
            return Some("winch angle".into());
        }
        if !self.winch.speed.is_finite() {
            return Some("winch speed".into());
        }
        None
    }
}
