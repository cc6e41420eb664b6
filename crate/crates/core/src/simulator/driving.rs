//! Car-following command shared by human drivers and by CAVs that are not
//! executing a plan: OVM against the nearest obstacle, a free-road rule, and
//! a kinematic braking cap that keeps vehicles from running into standing
//! obstacles.

use crate::models::OvmParams;
use crate::ocp::OcpBounds;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriverParams {
    /// Beyond this front-to-front headway the road counts as free and the
    /// desired velocity becomes `v_max`.
    pub free_road_headway: f64,
    /// Bumper gap the braking cap aims to keep when stopped (m).
    pub stop_gap: f64,
    /// Deceleration above which the braking cap overrides the OVM (m/s²).
    pub b_comf: f64,
    /// Extra time a green must remain when a driver reaches the line (s).
    pub red_margin: f64,
}

impl Default for DriverParams {
    fn default() -> Self {
        Self {
            free_road_headway: 100.0,
            stop_gap: 2.0,
            b_comf: 3.0,
            red_margin: 1.0,
        }
    }
}

/// The nearest thing ahead of a vehicle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obstacle {
    /// Front-to-front headway (m).
    pub headway: f64,
    pub velocity: f64,
    /// The virtual standing vehicle at the stop line.
    pub is_wall: bool,
}

impl Obstacle {
    pub fn gap(&self, l_veh: f64) -> f64 {
        self.headway - l_veh
    }
}

/// Constant deceleration needed to come down to the obstacle's speed while
/// keeping `stop_gap`; zero when not closing in.
pub fn required_braking(gap: f64, v: f64, v_obs: f64, stop_gap: f64) -> f64 {
    if v <= v_obs {
        return 0.0;
    }
    let room = gap - stop_gap;
    if room <= 1e-6 {
        return f64::INFINITY;
    }
    (v * v - v_obs * v_obs) / (2.0 * room)
}

/// Whether the braking cap would engage against this obstacle.
pub fn collision_risk(obs: &Obstacle, v: f64, ovm: &OvmParams, driver: &DriverParams) -> bool {
    required_braking(obs.gap(ovm.l_veh), v, obs.velocity, driver.stop_gap) > driver.b_comf
}

/// Applies the braking cap to a proposed acceleration.
pub fn cap_braking(accel: f64, obs: Option<&Obstacle>, v: f64, ovm: &OvmParams, driver: &DriverParams) -> f64 {
    match obs {
        Some(o) => {
            let b = required_braking(o.gap(ovm.l_veh), v, o.velocity, driver.stop_gap);
            if b > driver.b_comf {
                accel.min(-b)
            } else {
                accel
            }
        }
        None => accel,
    }
}

/// OVM command with the free-road rule and braking cap, clamped to bounds.
pub fn ovm_command(
    ovm: &OvmParams,
    driver: &DriverParams,
    bounds: &OcpBounds,
    v: f64,
    gamma: f64,
    obstacle: Option<&Obstacle>,
) -> f64 {
    let desired = match obstacle {
        Some(o) if o.headway <= driver.free_road_headway => ovm.desired_velocity(o.headway),
        _ => bounds.v_max,
    };
    let a = gamma * ovm.kappa * (desired - v);
    cap_braking(a, obstacle, v, ovm, driver).clamp(bounds.a_min, bounds.a_max)
}

/// Nearer of two optional obstacles by headway.
pub fn nearest(a: Option<Obstacle>, b: Option<Obstacle>) -> Option<Obstacle> {
    match (a, b) {
        (Some(x), Some(y)) => Some(if y.headway < x.headway { y } else { x }),
        (x, None) => x,
        (None, y) => y,
    }
}
