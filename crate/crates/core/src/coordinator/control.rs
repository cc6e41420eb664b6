//! Per-step CAV commands for the three controllers.

use std::collections::BTreeMap;

use super::pcc::{track, TrackerInput};
use super::{
    adjust_for_queue, partition_platoon, select_window_with, transition_allowed, CavFsmState,
    ControllerKind, CoordinatorParams, GreenWindow, WindowOptions,
};
use crate::equilibrium::{solve_vstar, EquilibriumSolution};
use crate::error::{PlatoonError, Result};
use crate::ocp::{solve_ocp, Kinematics, LeadPath, OcpProblem, TrajectoryPlan};
use crate::simulator::driving::{cap_braking, nearest, ovm_command, Obstacle};
use crate::simulator::{advance, human_view, predecessor_obstacle, EventKind, ScenarioConfig, Vehicle, VehicleClass};

/// Read-only view of the world at the start of a step.
pub struct WorldView<'a> {
    pub t: f64,
    pub dt: f64,
    /// Ordered from the front of the lane backwards.
    pub vehicles: &'a [Vehicle],
    /// What each vehicle would react to as a human driver.
    pub human_obstacles: &'a [Option<Obstacle>],
    pub config: &'a ScenarioConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Command {
    pub accel: f64,
    pub state: CavFsmState,
    pub events: Vec<(EventKind, String)>,
}

#[derive(Debug, Clone)]
struct CavControl {
    state: CavFsmState,
    plan: Option<TrajectoryPlan>,
    last_plan: f64,
    prev_gap: f64,
}

impl Default for CavControl {
    fn default() -> Self {
        Self {
            state: CavFsmState::Uncontrolled,
            plan: None,
            last_plan: f64::NEG_INFINITY,
            prev_gap: f64::INFINITY,
        }
    }
}

pub struct Coordinator {
    kind: ControllerKind,
    params: CoordinatorParams,
    eq: EquilibriumSolution,
    /// Velocity cap for mixed-platoon windows: midway between `v_max` and `v*`.
    window_cap: f64,
    /// Time headway of the optimal equilibrium, `d*/v*` (s).
    headway_time: f64,
    cavs: BTreeMap<usize, CavControl>,
}

impl Coordinator {
    pub fn new(config: &ScenarioConfig) -> Result<Self> {
        let params = config.coordinator;
        let eq = solve_vstar(&config.ovm, config.timing.green, params.vstar_grid, config.bounds.v_max)?;
        Ok(Self {
            kind: config.controller,
            params,
            eq,
            window_cap: 0.5 * (config.bounds.v_max + eq.v_star),
            headway_time: eq.d_star / eq.v_star,
            cavs: BTreeMap::new(),
        })
    }

    pub fn equilibrium(&self) -> &EquilibriumSolution {
        &self.eq
    }

    pub fn command(&mut self, world: &WorldView, i: usize) -> Command {
        match self.kind {
            ControllerKind::None => Command {
                accel: self.human_command(world, i),
                state: CavFsmState::Uncontrolled,
                events: Vec::new(),
            },
            ControllerKind::PccPlus => {
                let veh = &world.vehicles[i];
                let accel = if world.config.geometry.in_cz(veh.x) {
                    self.pcc_command(world, i).unwrap_or_else(|_| self.human_command(world, i))
                } else {
                    self.human_command(world, i)
                };
                Command {
                    accel,
                    state: CavFsmState::Uncontrolled,
                    events: Vec::new(),
                }
            }
            ControllerKind::MixedPlatoon => self.fsm_step(world, i),
        }
    }

    fn human_command(&self, world: &WorldView, i: usize) -> f64 {
        let cfg = world.config;
        ovm_command(&cfg.ovm, &cfg.driver, &cfg.bounds, world.vehicles[i].v, 1.0, world.human_obstacles[i].as_ref())
    }

    /// Distance used for window selection, shortened when a queue stands ahead.
    fn queue_adjusted_distance(&self, world: &WorldView, i: usize) -> f64 {
        let cfg = world.config;
        let veh = &world.vehicles[i];
        let distance = -veh.x;
        let tail = world.vehicles[..i]
            .iter()
            .filter(|v| cfg.geometry.in_cz(v.x) && v.v < self.params.queue_speed)
            .map(|v| v.x)
            .fold(f64::INFINITY, f64::min);
        let Some(red) = cfg.timing.last_red_start(world.t) else {
            return distance;
        };
        if !tail.is_finite() {
            return distance;
        }
        let elapsed = (world.t - red).max(world.dt);
        let v_ac = (-tail / elapsed).clamp(self.params.v_ac_min, self.params.v_ac_max);
        let v_k = veh.v.max(0.1);
        match adjust_for_queue(distance, v_k, v_ac, red, world.t) {
            Ok(d) => d.clamp(0.1 * distance, distance),
            Err(_) => distance,
        }
    }

    /// Rolls the vehicles ahead of `i` forward with their current controllers
    /// (car-following for humans, stored plans for controlled CAVs). Traffic
    /// ahead does not react to vehicles behind it, so the roll-out only
    /// misses future re-planning.
    fn predict_ahead(&self, world: &WorldView, i: usize) -> Option<Prediction> {
        if i == 0 {
            return None;
        }
        let cfg = world.config;
        let dt = world.dt;
        let steps = (self.params.prediction_horizon / dt).ceil() as usize;
        let mut ahead: Vec<Vehicle> = world.vehicles[..i].to_vec();
        let mut path = Vec::with_capacity(steps + 1);
        path.push(ahead[i - 1].x);
        let mut crossing = (ahead[i - 1].x >= 0.0).then_some(f64::NEG_INFINITY);
        let mut accels = vec![0.0; i];
        for step in 0..steps {
            let t = world.t + step as f64 * dt;
            let human = human_view(&mut ahead, t, cfg);
            for (j, veh) in ahead.iter().enumerate() {
                let plan = match self.cavs.get(&veh.id) {
                    Some(c) if veh.class == VehicleClass::Cav && c.state == CavFsmState::Controlled && veh.x < 0.0 => {
                        c.plan.as_ref().filter(|p| t < p.tf())
                    }
                    _ => None,
                };
                let a = match plan {
                    Some(p) => cap_braking(p.accel_at(t + 0.5 * dt), cav_obstacle(&ahead, j, t, cfg).as_ref(), veh.v, &cfg.ovm, &cfg.driver),
                    None => ovm_command(&cfg.ovm, &cfg.driver, &cfg.bounds, veh.v, veh.gamma, human[j].as_ref()),
                };
                accels[j] = a.clamp(cfg.bounds.a_min, cfg.bounds.a_max);
            }
            for (veh, &a) in ahead.iter_mut().zip(&accels) {
                advance(veh, a, dt, cfg.bounds.v_max);
            }
            let x_prev = *path.last().expect("path starts non-empty");
            let x_now = ahead[i - 1].x;
            if crossing.is_none() && x_now >= 0.0 {
                crossing = Some(t + dt * (0.0 - x_prev) / (x_now - x_prev));
            }
            path.push(x_now);
        }
        Some(Prediction {
            path: LeadPath {
                t0: world.t,
                dt,
                x: path,
                v_end: ahead[i - 1].v,
                min_gap: cfg.bounds.d_safe,
            },
            crossing,
        })
    }

    fn window(&self, world: &WorldView, distance: f64, cap: f64, not_before: f64) -> Result<GreenWindow> {
        let opts = WindowOptions {
            buffer: self.params.arrival_buffer,
            not_before,
            lookahead: self.params.lookahead,
        };
        select_window_with(distance, world.t, &world.config.timing, self.params.v_min, cap, &opts)
    }

    fn plan(&mut self, world: &WorldView, i: usize) -> Result<(TrajectoryPlan, GreenWindow, usize)> {
        let cfg = world.config;
        let veh = &world.vehicles[i];
        let behind: Vec<bool> = world.vehicles[i + 1..].iter().map(|v| v.class == VehicleClass::Cav).collect();
        let mut members = partition_platoon(&behind, self.eq.platoon_size());
        for k in 1..=members {
            let gap = world.vehicles[i + k - 1].x - world.vehicles[i + k].x - cfg.ovm.l_veh;
            let loose = gap + cfg.ovm.l_veh > cfg.driver.free_road_headway;
            if gap <= cfg.bounds.d_safe + 1e-6 || loose {
                members = k - 1;
                break;
            }
        }
        let prediction = self.predict_ahead(world, i);
        // cross one equilibrium headway behind the predicted predecessor
        let not_before = match &prediction {
            None => f64::NEG_INFINITY,
            Some(p) => p.crossing.map_or(world.t + self.params.prediction_horizon, |c| c + self.headway_time),
        };
        let window = self.window(world, -veh.x, self.window_cap, not_before)?;
        let tf = world.t + window.t_f;
        let initial: Vec<Kinematics> = world.vehicles[i..=i + members]
            .iter()
            .map(|v| Kinematics::new(v.x, v.v))
            .collect();
        let mut problem = OcpProblem::new(world.t, tf, initial, 0.0, self.eq.v_star);
        problem.w1 = self.params.w1;
        problem.w2 = self.params.w2;
        problem.bounds = cfg.bounds;
        problem.ovm = cfg.ovm;
        problem.fuel = cfg.fuel;
        // plans stay clear of the trigger so that only a wrong prediction re-plans
        let min_gap = match i {
            0 => cfg.bounds.d_safe,
            _ => {
                let now = world.vehicles[i - 1].x - veh.x - cfg.ovm.l_veh;
                (self.params.trigger_gap + self.params.lead_gap_margin).min(now).max(cfg.bounds.d_safe)
            }
        };
        problem.lead_path = prediction.map(|p| LeadPath { min_gap, ..p.path });
        let plan = solve_ocp(&problem, self.params.transcription_nodes)?;
        if !plan.is_converged() {
            return Err(PlatoonError::Numerical(format!(
                "trajectory solve ended {} (violation {:.2e})",
                plan.solver_status.as_str(),
                plan.max_violation
            )));
        }
        Ok((plan, window, members))
    }

    fn fsm_step(&mut self, world: &WorldView, i: usize) -> Command {
        let cfg = world.config;
        let veh = &world.vehicles[i];
        let id = veh.id;
        let mut ctl = self.cavs.remove(&id).unwrap_or_default();
        let mut events = Vec::new();
        let mut go = |ctl: &mut CavControl, to: CavFsmState, why: &str, events: &mut Vec<(EventKind, String)>| {
            debug_assert!(transition_allowed(ctl.state, to));
            events.push((
                EventKind::FsmTransition,
                format!("{}->{} {why}", ctl.state.as_str(), to.as_str()).trim_end().to_string(),
            ));
            ctl.state = to;
        };

        let gap = if i > 0 {
            world.vehicles[i - 1].x - veh.x - cfg.ovm.l_veh
        } else {
            f64::INFINITY
        };
        let mut accel = None;
        match ctl.state {
            CavFsmState::Uncontrolled if cfg.geometry.in_cz(veh.x) => {
                go(&mut ctl, CavFsmState::Computed, "", &mut events);
                accel = Some(self.install_plan(world, i, &mut ctl, &mut events, &mut go));
            }
            CavFsmState::Controlled if veh.x < 0.0 => {
                let gap_edge = gap < self.params.trigger_gap && ctl.prev_gap >= self.params.trigger_gap;
                let cooled = world.t - ctl.last_plan >= self.params.cooldown;
                if gap_edge && cooled {
                    go(&mut ctl, CavFsmState::Recomputed, &format!("gap={gap:.3}"), &mut events);
                    if -veh.x > self.params.k_c * cfg.geometry.l_ctrl {
                        accel = Some(self.install_plan(world, i, &mut ctl, &mut events, &mut go));
                    } else {
                        go(&mut ctl, CavFsmState::Fallback, "near line", &mut events);
                        ctl.plan = None;
                    }
                } else if let Some(plan) = ctl.plan.as_ref().filter(|p| world.t < p.tf()) {
                    accel = Some(plan.accel_at(world.t + 0.5 * world.dt));
                }
                // plans do not see the vehicle ahead of the leader
                if let Some(a) = accel {
                    accel = Some(cap_braking(a, cav_obstacle(world.vehicles, i, world.t, cfg).as_ref(), veh.v, &cfg.ovm, &cfg.driver));
                }
            }
            _ => {}
        }
        ctl.prev_gap = gap;
        let state = ctl.state;
        let accel = accel.unwrap_or_else(|| self.human_command(world, i));
        self.cavs.insert(id, ctl);
        Command { accel, state, events }
    }

    fn install_plan(
        &mut self,
        world: &WorldView,
        i: usize,
        ctl: &mut CavControl,
        events: &mut Vec<(EventKind, String)>,
        go: &mut impl FnMut(&mut CavControl, CavFsmState, &str, &mut Vec<(EventKind, String)>),
    ) -> f64 {
        let replanning = ctl.state == CavFsmState::Recomputed;
        match self.plan(world, i) {
            Ok((plan, window, members)) => {
                let detail = format!(
                    "members={members} phase={} v_low={:.4} v_high={:.4} tf={:.4} cost={:.4}",
                    window.phase,
                    window.v_low,
                    window.v_high,
                    plan.tf(),
                    plan.cost
                );
                if replanning {
                    events.push((EventKind::Replan, detail.clone()));
                }
                go(ctl, CavFsmState::Controlled, &detail, events);
                let a = plan.accel_at(world.t + 0.5 * world.dt);
                ctl.plan = Some(plan);
                ctl.last_plan = world.t;
                a
            }
            Err(e) => {
                go(ctl, CavFsmState::Fallback, &format!("{e}"), events);
                ctl.plan = None;
                self.human_command(world, i)
            }
        }
    }

    fn pcc_command(&self, world: &WorldView, i: usize) -> Result<f64> {
        let cfg = world.config;
        let veh = &world.vehicles[i];
        let distance = self.queue_adjusted_distance(world, i);
        let window = self.window(world, distance, cfg.bounds.v_max, f64::NEG_INFINITY)?;
        let green_at = cfg.timing.green_start(window.phase) - world.t;
        let predecessor = (i > 0).then(|| (world.vehicles[i - 1].x, world.vehicles[i - 1].v));
        let input = TrackerInput {
            x0: veh.x,
            v0: veh.v,
            v_target: window.v_target(),
            l_veh: cfg.ovm.l_veh,
            predecessor,
            wall_for: (green_at > 0.0 && !cfg.timing.always_green()).then_some(green_at),
            wall_margin: cfg.driver.stop_gap,
        };
        let u = track(&cfg.pcc, &cfg.bounds, &input)[0];
        Ok(cap_braking(u, cav_obstacle(world.vehicles, i, world.t, cfg).as_ref(), veh.v, &cfg.ovm, &cfg.driver))
    }
}


struct Prediction {
    path: LeadPath,
    /// Stop-line crossing time of the predecessor, if within the horizon.
    crossing: Option<f64>,
}

/// Obstacle for a CAV that knows the signal plan: the predecessor, and the
/// stop line only if the signal will be red on arrival at current speed.
fn cav_obstacle(vehicles: &[Vehicle], i: usize, t: f64, cfg: &ScenarioConfig) -> Option<Obstacle> {
    let veh = &vehicles[i];
    let pred = predecessor_obstacle(vehicles, i);
    let wall = if veh.x < 0.0 {
        let arrival = t + -veh.x / veh.v.max(0.1);
        (!cfg.timing.is_green(arrival)).then_some(Obstacle {
            headway: cfg.ovm.l_veh - veh.x,
            velocity: 0.0,
            is_wall: true,
        })
    } else {
        None
    };
    nearest(pred, wall)
}
