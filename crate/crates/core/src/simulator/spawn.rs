//! Poisson arrival stream with entrance gating.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use super::driving::required_braking;
use super::{ScenarioConfig, Vehicle, VehicleClass};
use crate::coordinator::CavFsmState;
use crate::error::{PlatoonError, Result};
use crate::models::equilibrium_spacing;

/// One drawn arrival.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrival {
    pub time: f64,
    pub class: VehicleClass,
    pub gamma: f64,
}

/// Draws arrivals in a fixed per-vehicle order: inter-arrival time, class,
/// gain. The gain is always drawn so the class sequence does not depend on
/// whether stochastic gains are enabled.
pub fn draw_arrivals(config: &ScenarioConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Arrival>> {
    let exp = Exp::new(config.volume / 3600.0)
        .map_err(|e| PlatoonError::Config(format!("invalid volume {}: {e}", config.volume)))?;
    let (lo, hi) = config.gamma_range;
    let mut t = 0.0;
    let mut out = Vec::with_capacity(config.total_vehicles);
    for k in 0..config.total_vehicles {
        let gap: f64 = exp.sample(rng);
        if k > 0 {
            t += gap;
        }
        let class = if rng.random::<f64>() < config.mpr {
            VehicleClass::Cav
        } else {
            VehicleClass::Hdv
        };
        let gamma = if hi > lo { rng.random_range(lo..=hi) } else { lo };
        out.push(Arrival { time: t, class, gamma });
    }
    Ok(out)
}

pub struct Spawner {
    arrivals: Vec<Arrival>,
    next: usize,
    /// Front-to-front headway required at the entrance.
    min_headway: f64,
}

impl Spawner {
    pub fn new(config: &ScenarioConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        let ovm = &config.ovm;
        let v_ref = config.bounds.v_max.min(ovm.v1 + 0.95 * ovm.v2);
        let spacing = equilibrium_spacing(ovm, v_ref).unwrap_or(ovm.l_veh + config.driver.stop_gap);
        Ok(Self {
            arrivals: draw_arrivals(config, rng)?,
            next: 0,
            min_headway: spacing.max(ovm.l_veh + config.bounds.d_safe),
        })
    }

    pub fn done(&self) -> bool {
        self.next >= self.arrivals.len()
    }

    /// Spawns the next due arrival if the entrance is clear.
    pub fn try_spawn(
        &mut self,
        t: f64,
        vehicles: &[Vehicle],
        config: &ScenarioConfig,
    ) -> Option<Vehicle> {
        let arrival = *self.arrivals.get(self.next)?;
        if arrival.time > t + 1e-9 {
            return None;
        }
        let x = config.geometry.entrance();
        let v = config.bounds.v_max;
        if let Some(last) = vehicles.last() {
            let headway = last.x - x;
            let gap = headway - config.ovm.l_veh;
            if headway < self.min_headway
                || required_braking(gap, v, last.v, config.driver.stop_gap) > config.driver.b_comf
            {
                return None;
            }
        }
        let id = self.next;
        self.next += 1;
        let gamma = if config.stochastic_gain && arrival.class == VehicleClass::Hdv {
            arrival.gamma
        } else {
            1.0
        };
        Some(Vehicle {
            id,
            class: arrival.class,
            x,
            v,
            a: 0.0,
            gamma,
            fsm: CavFsmState::Uncontrolled,
            fuel_accum: 0.0,
            t_spawn: t,
            t_in_cz: None,
            t_out_cz: None,
            committed: false,
        })
    }
}
