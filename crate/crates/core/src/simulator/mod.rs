//! Single-lane signalized approach: Poisson arrivals at the observation zone
//! entrance, a fixed-cycle signal at `x = 0`, OVM human drivers, and CAVs
//! steered by the selected controller. Runs are deterministic in
//! `(config, seed)`.

pub mod config;
pub mod driving;
pub mod logs;
mod spawn;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::coordinator::{CavFsmState, ControllerKind, Coordinator, CoordinatorParams, SignalTiming, WorldView};
use crate::coordinator::pcc::PccParams;
use crate::error::{PlatoonError, Result};
use crate::models::{FuelParams, OvmParams};
use crate::ocp::OcpBounds;
use driving::{nearest, ovm_command, DriverParams, Obstacle};
use spawn::Spawner;

pub use config::{parse_config, render_config};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoneGeometry {
    pub l_obs: f64,
    pub l_ctrl: f64,
    /// Vehicles are removed this far past the stop line (m).
    pub exit_length: f64,
}

impl Default for ZoneGeometry {
    fn default() -> Self {
        Self {
            l_obs: 500.0,
            l_ctrl: 300.0,
            exit_length: 100.0,
        }
    }
}

impl ZoneGeometry {
    pub fn entrance(&self) -> f64 {
        -(self.l_obs + self.l_ctrl)
    }

    pub fn in_cz(&self, x: f64) -> bool {
        x >= -self.l_ctrl && x < 0.0
    }

    pub fn in_oz(&self, x: f64) -> bool {
        x >= self.entrance() && x < -self.l_ctrl
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub geometry: ZoneGeometry,
    pub timing: SignalTiming,
    /// Arrival rate (veh/hour).
    pub volume: f64,
    /// Fraction of CAVs.
    pub mpr: f64,
    pub total_vehicles: usize,
    pub seed: u64,
    pub controller: ControllerKind,
    pub step: f64,
    /// Simulated-time cap (s).
    pub max_time: f64,
    /// Human drivers draw their OVM gain from `gamma_range`.
    pub stochastic_gain: bool,
    pub gamma_range: (f64, f64),
    pub ovm: OvmParams,
    pub fuel: FuelParams,
    pub bounds: OcpBounds,
    pub driver: DriverParams,
    pub coordinator: CoordinatorParams,
    pub pcc: PccParams,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            geometry: ZoneGeometry::default(),
            timing: SignalTiming::default(),
            volume: 750.0,
            mpr: 0.5,
            total_vehicles: 100,
            seed: 1,
            controller: ControllerKind::MixedPlatoon,
            step: 0.1,
            max_time: 3600.0,
            stochastic_gain: false,
            gamma_range: (0.9, 1.1),
            ovm: OvmParams::default(),
            fuel: FuelParams::default(),
            bounds: OcpBounds::default(),
            driver: DriverParams::default(),
            coordinator: CoordinatorParams::default(),
            pcc: PccParams::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PlatoonError::Config(m));
        let g = &self.geometry;
        if !(g.l_obs > 0.0 && g.l_ctrl > 0.0 && g.exit_length >= 0.0) {
            return bad(format!("invalid geometry {g:?}"));
        }
        self.timing.validate()?;
        if !(self.step > 0.0) {
            return bad(format!("step must be positive, got {}", self.step));
        }
        if !(self.volume > 0.0) {
            return bad(format!("volume must be positive, got {}", self.volume));
        }
        if !(0.0..=1.0).contains(&self.mpr) {
            return bad(format!("mpr must lie in [0, 1], got {}", self.mpr));
        }
        if !(self.max_time > 0.0) {
            return bad(format!("max_time must be positive, got {}", self.max_time));
        }
        let (lo, hi) = self.gamma_range;
        if !(lo > 0.0 && hi >= lo) {
            return bad(format!("gamma_range must satisfy 0 < lo <= hi, got ({lo}, {hi})"));
        }
        let b = &self.bounds;
        if !(b.a_min < 0.0 && b.a_max > 0.0 && b.v_max > 0.0 && b.d_safe > 0.0) {
            return bad(format!("invalid bounds {b:?}"));
        }
        if !(self.pcc.horizon > 0.0 && self.pcc.step > 0.0 && self.pcc.q > 0.0 && self.pcc.r > 0.0) {
            return bad(format!("invalid pcc parameters {:?}", self.pcc));
        }
        if !(0.0..=1.0).contains(&self.coordinator.k_c) {
            return bad(format!("k_c must lie in [0, 1], got {}", self.coordinator.k_c));
        }
        if !(self.coordinator.lead_gap_margin >= 0.0) {
            return bad(format!("lead_gap_margin must be non-negative, got {}", self.coordinator.lead_gap_margin));
        }
        if !(self.coordinator.prediction_horizon > 0.0) {
            return bad(format!("prediction_horizon must be positive, got {}", self.coordinator.prediction_horizon));
        }
        if self.coordinator.transcription_nodes < 10 {
            return bad("transcription_nodes must be at least 10".into());
        }
        self.ovm.validate().map_err(|e| PlatoonError::Config(e.to_string()))?;
        self.fuel.validate().map_err(|e| PlatoonError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VehicleClass {
    Cav,
    Hdv,
}

impl VehicleClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            VehicleClass::Cav => "CAV",
            VehicleClass::Hdv => "HDV",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "CAV" => Some(VehicleClass::Cav),
            "HDV" => Some(VehicleClass::Hdv),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vehicle {
    pub id: usize,
    pub class: VehicleClass,
    pub x: f64,
    pub v: f64,
    pub a: f64,
    pub gamma: f64,
    pub fsm: CavFsmState,
    pub fuel_accum: f64,
    pub t_spawn: f64,
    pub t_in_cz: Option<f64>,
    pub t_out_cz: Option<f64>,
    /// Decided to clear the line on the current green.
    pub committed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Spawn,
    EnterCz,
    ExitCz,
    FsmTransition,
    Replan,
    Fault,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Spawn => "spawn",
            EventKind::EnterCz => "enter_cz",
            EventKind::ExitCz => "exit_cz",
            EventKind::FsmTransition => "fsm_transition",
            EventKind::Replan => "replan",
            EventKind::Fault => "fault",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "spawn" => EventKind::Spawn,
            "enter_cz" => EventKind::EnterCz,
            "exit_cz" => EventKind::ExitCz,
            "fsm_transition" => EventKind::FsmTransition,
            "replan" => EventKind::Replan,
            "fault" => EventKind::Fault,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub t: f64,
    pub vehicle_id: usize,
    pub kind: EventKind,
    pub detail: String,
}

/// State of one vehicle at `t` together with the acceleration applied over
/// the following step.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub vehicle_id: usize,
    pub class: VehicleClass,
    pub fsm_state: CavFsmState,
    pub x: f64,
    pub v: f64,
    pub a: f64,
    pub fuel_rate: f64,
    /// Fuel used before `t` (ml).
    pub fuel_accum: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifact {
    pub config: ScenarioConfig,
    pub rows: Vec<TrajectoryRow>,
    pub events: Vec<EventRecord>,
    /// Every vehicle spawned and crossed the stop line before the time cap.
    pub complete: bool,
    pub end_time: f64,
}

impl RunArtifact {
    pub fn faults(&self) -> impl Iterator<Item = &EventRecord> {
        self.events.iter().filter(|e| e.kind == EventKind::Fault)
    }
}

/// Whether a human driver treats the stop line as a standing vehicle.
fn wall_visible(veh: &mut Vehicle, t: f64, timing: &SignalTiming, driver: &DriverParams, a_min: f64) -> bool {
    if veh.x >= 0.0 || timing.always_green() || veh.committed {
        return false;
    }
    let dist = -veh.x;
    if timing.is_green(t) {
        let to_red = timing.red_start(timing.cycle_index(t)) - t;
        let arrival = dist / veh.v.max(0.1);
        if arrival + driver.red_margin <= to_red {
            return false;
        }
        let stop_dist = veh.v * veh.v / (2.0 * -a_min) + driver.stop_gap;
        if stop_dist > dist {
            veh.committed = true;
            return false;
        }
        return true;
    }
    true
}

fn wall_obstacle(x: f64, l_veh: f64) -> Obstacle {
    // a standing vehicle whose rear is on the stop line
    Obstacle {
        headway: l_veh - x,
        velocity: 0.0,
        is_wall: true,
    }
}

/// Obstacle a vehicle would react to as a human driver.
pub(crate) fn predecessor_obstacle(vehicles: &[Vehicle], i: usize) -> Option<Obstacle> {
    if i == 0 {
        return None;
    }
    let p = &vehicles[i - 1];
    Some(Obstacle {
        headway: p.x - vehicles[i].x,
        velocity: p.v,
        is_wall: false,
    })
}

/// Obstacles as seen by human drivers. Updates each driver's commitment to
/// the current green.
pub(crate) fn human_view(vehicles: &mut [Vehicle], t: f64, config: &ScenarioConfig) -> Vec<Option<Obstacle>> {
    let l_veh = config.ovm.l_veh;
    let mut human = Vec::with_capacity(vehicles.len());
    for i in 0..vehicles.len() {
        let pred = predecessor_obstacle(vehicles, i);
        let wall = wall_visible(&mut vehicles[i], t, &config.timing, &config.driver, config.bounds.a_min)
            .then(|| wall_obstacle(vehicles[i].x, l_veh));
        human.push(nearest(pred, wall));
    }
    human
}

/// Semi-implicit Euler step; returns the effective acceleration.
pub(crate) fn advance(veh: &mut Vehicle, accel: f64, dt: f64, v_max: f64) -> f64 {
    let v_new = (veh.v + accel * dt).clamp(0.0, v_max);
    let a_eff = (v_new - veh.v) / dt;
    veh.v = v_new;
    veh.x += v_new * dt;
    if veh.v <= 0.0 {
        veh.committed = veh.committed && veh.x >= 0.0;
    }
    a_eff
}

/// Full simulation of one scenario.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunArtifact> {
    config.validate()?;
    let dt = config.step;
    let geo = config.geometry;
    let l_veh = config.ovm.l_veh;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut spawner = Spawner::new(config, &mut rng)?;
    let mut coordinator = Coordinator::new(config)?;

    let mut vehicles: Vec<Vehicle> = Vec::new();
    let mut rows = Vec::new();
    let mut events = Vec::new();
    let mut exited_cz = 0usize;
    let mut step_index: u64 = 0;
    let mut complete = false;
    let mut t = 0.0;

    while t <= config.max_time {
        if let Some(v) = spawner.try_spawn(t, &vehicles, config) {
            events.push(EventRecord {
                t,
                vehicle_id: v.id,
                kind: EventKind::Spawn,
                detail: format!("class={} gamma={}", v.class.as_str(), v.gamma),
            });
            vehicles.push(v);
        }

        let human = human_view(&mut vehicles, t, config);

        let mut accels = vec![0.0; vehicles.len()];
        let mut states = vec![CavFsmState::Uncontrolled; vehicles.len()];
        for i in 0..vehicles.len() {
            let veh = &vehicles[i];
            match veh.class {
                VehicleClass::Hdv => {
                    accels[i] = ovm_command(&config.ovm, &config.driver, &config.bounds, veh.v, veh.gamma, human[i].as_ref());
                }
                VehicleClass::Cav => {
                    let world = WorldView {
                        t,
                        dt,
                        vehicles: &vehicles,
                        human_obstacles: &human,
                        config,
                    };
                    let cmd = coordinator.command(&world, i);
                    for (kind, detail) in cmd.events {
                        events.push(EventRecord {
                            t,
                            vehicle_id: veh.id,
                            kind,
                            detail,
                        });
                    }
                    accels[i] = cmd.accel.clamp(config.bounds.a_min, config.bounds.a_max);
                    states[i] = cmd.state;
                }
            }
        }

        for (i, veh) in vehicles.iter_mut().enumerate() {
            let a_cmd = accels[i];
            let v_new = (veh.v + a_cmd * dt).clamp(0.0, config.bounds.v_max);
            let a_eff = (v_new - veh.v) / dt;
            let rate = config.fuel.rate(veh.v, a_eff);
            veh.a = a_eff;
            veh.fsm = states[i];
            rows.push(TrajectoryRow {
                t,
                vehicle_id: veh.id,
                class: veh.class,
                fsm_state: veh.fsm,
                x: veh.x,
                v: veh.v,
                a: a_eff,
                fuel_rate: rate,
                fuel_accum: veh.fuel_accum,
            });
            let x_new = veh.x + v_new * dt;
            let cross = |line: f64| t + dt * (line - veh.x) / (x_new - veh.x);
            if veh.x < -geo.l_ctrl && x_new >= -geo.l_ctrl {
                let tc = cross(-geo.l_ctrl);
                veh.t_in_cz = Some(tc);
                events.push(EventRecord {
                    t: tc,
                    vehicle_id: veh.id,
                    kind: EventKind::EnterCz,
                    detail: String::new(),
                });
            }
            if veh.x < 0.0 && x_new >= 0.0 {
                let tc = cross(0.0);
                veh.t_out_cz = Some(tc);
                exited_cz += 1;
                events.push(EventRecord {
                    t: tc,
                    vehicle_id: veh.id,
                    kind: EventKind::ExitCz,
                    detail: String::new(),
                });
                if !config.timing.is_green(tc) {
                    events.push(EventRecord {
                        t: tc,
                        vehicle_id: veh.id,
                        kind: EventKind::Fault,
                        detail: format!("red crossing v={v_new:.3}"),
                    });
                }
            }
            veh.fuel_accum += rate * dt;
            veh.v = v_new;
            veh.x = x_new;
            if veh.v <= 0.0 {
                veh.committed = veh.committed && veh.x >= 0.0;
            }
        }
        for i in 1..vehicles.len() {
            let gap = vehicles[i - 1].x - vehicles[i].x - l_veh;
            if gap < 0.1 {
                let dump: Vec<String> = vehicles
                    .iter()
                    .map(|v| format!("{}:{:.3}/{:.3}", v.id, v.x, v.v))
                    .collect();
                events.push(EventRecord {
                    t: t + dt,
                    vehicle_id: vehicles[i].id,
                    kind: EventKind::Fault,
                    detail: format!("overlap gap={gap:.3} state={}", dump.join(";")),
                });
            }
        }
        vehicles.retain(|v| v.x <= geo.exit_length);

        step_index += 1;
        t = step_index as f64 * dt;
        if spawner.done() && exited_cz == config.total_vehicles {
            complete = true;
            break;
        }
    }
    Ok(RunArtifact {
        config: config.clone(),
        rows,
        events,
        complete,
        end_time: t,
    })
}
