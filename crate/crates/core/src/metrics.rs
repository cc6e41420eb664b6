//! Evaluation indexes computed from a run's logs.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::error::{PlatoonError, Result};
use crate::simulator::{EventKind, EventRecord, ScenarioConfig, TrajectoryRow};

/// Speed below which a vehicle counts as idling (m/s).
pub const IDLE_SPEED: f64 = 0.1;
/// Half-width of the dead band used when counting accel/decel cycles (m/s²).
pub const CYCLE_BAND: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSummary {
    /// Average travel time delay through the control zone (s).
    pub attd: f64,
    pub fuel_per_100km: f64,
    pub accel_decel_cycles_per_vehicle: f64,
    pub idling_time_per_vehicle: f64,
    pub counted_vehicle_ids: Vec<usize>,
    /// Counted vehicles that never crossed the zone; left out of every mean.
    pub missing_vehicle_ids: Vec<usize>,
}

pub const CSV_COLUMNS: [&str; 6] = [
    "attd_s",
    "fuel_l_per_100km",
    "cycles_per_vehicle",
    "idling_s_per_vehicle",
    "counted",
    "missing",
];

impl MetricsSummary {
    pub fn to_key_value(&self) -> String {
        let ids = |v: &[usize]| v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ");
        let mut s = String::new();
        let _ = writeln!(s, "attd_s={}", self.attd);
        let _ = writeln!(s, "fuel_l_per_100km={}", self.fuel_per_100km);
        let _ = writeln!(s, "cycles_per_vehicle={}", self.accel_decel_cycles_per_vehicle);
        let _ = writeln!(s, "idling_s_per_vehicle={}", self.idling_time_per_vehicle);
        let _ = writeln!(s, "counted_vehicle_ids={}", ids(&self.counted_vehicle_ids));
        let _ = writeln!(s, "missing_vehicle_ids={}", ids(&self.missing_vehicle_ids));
        s
    }

    /// Values in [`CSV_COLUMNS`] order.
    pub fn csv_values(&self) -> Vec<String> {
        vec![
            self.attd.to_string(),
            self.fuel_per_100km.to_string(),
            self.accel_decel_cycles_per_vehicle.to_string(),
            self.idling_time_per_vehicle.to_string(),
            self.counted_vehicle_ids.len().to_string(),
            self.missing_vehicle_ids.len().to_string(),
        ]
    }

    /// Reads the output of [`MetricsSummary::to_key_value`].
    pub fn parse_key_value(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| PlatoonError::Parse {
                line: i + 1,
                key: line.to_string(),
                message: "expected key=value".into(),
            })?;
            map.insert(k.trim().to_string(), (i + 1, v.trim().to_string()));
        }
        let get = |k: &str| {
            map.get(k).ok_or_else(|| PlatoonError::Parse {
                line: 0,
                key: k.to_string(),
                message: "missing".into(),
            })
        };
        let num = |k: &str| -> Result<f64> {
            let (line, v) = get(k)?;
            v.parse().map_err(|_| PlatoonError::Parse {
                line: *line,
                key: k.to_string(),
                message: format!("cannot parse {v:?}"),
            })
        };
        let ids = |k: &str| -> Result<Vec<usize>> {
            let (line, v) = get(k)?;
            v.split_whitespace()
                .map(|x| {
                    x.parse().map_err(|_| PlatoonError::Parse {
                        line: *line,
                        key: k.to_string(),
                        message: format!("bad id {x:?}"),
                    })
                })
                .collect()
        };
        Ok(Self {
            attd: num("attd_s")?,
            fuel_per_100km: num("fuel_l_per_100km")?,
            accel_decel_cycles_per_vehicle: num("cycles_per_vehicle")?,
            idling_time_per_vehicle: num("idling_s_per_vehicle")?,
            counted_vehicle_ids: ids("counted_vehicle_ids")?,
            missing_vehicle_ids: ids("missing_vehicle_ids")?,
        })
    }
}

/// The last `⌈total/2⌉` spawned vehicles; the first half warms the road up.
pub fn counted_set(total_vehicles: usize) -> Vec<usize> {
    let counted = total_vehicles.div_ceil(2);
    (total_vehicles - counted..total_vehicles).collect()
}

/// Mean of `t_out − t_in − L_ctrl/v_max` over counted vehicles that crossed
/// the zone. Returns the mean and the ids left out.
pub fn compute_attd(events: &[EventRecord], counted: &[usize], l_ctrl: f64, v_max: f64) -> Result<(f64, Vec<usize>)> {
    let mut t_in = BTreeMap::new();
    let mut t_out = BTreeMap::new();
    for e in events {
        match e.kind {
            EventKind::EnterCz => {
                t_in.insert(e.vehicle_id, e.t);
            }
            EventKind::ExitCz => {
                t_out.insert(e.vehicle_id, e.t);
            }
            _ => {}
        }
    }
    let free = l_ctrl / v_max;
    let mut sum = 0.0;
    let mut n = 0usize;
    let mut missing = Vec::new();
    for id in counted {
        match (t_in.get(id), t_out.get(id)) {
            (Some(a), Some(b)) => {
                sum += b - a - free;
                n += 1;
            }
            _ => missing.push(*id),
        }
    }
    if n == 0 {
        return Err(PlatoonError::Metric("no counted vehicle crossed the control zone".into()));
    }
    Ok((sum / n as f64, missing))
}

/// Per-vehicle rows that lie in the control zone, in time order.
fn zone_rows<'a>(rows: &'a [TrajectoryRow], counted: &[usize], l_ctrl: f64) -> BTreeMap<usize, Vec<&'a TrajectoryRow>> {
    let mut by_id: BTreeMap<usize, Vec<&TrajectoryRow>> = counted.iter().map(|&id| (id, Vec::new())).collect();
    for r in rows {
        if r.x >= -l_ctrl && r.x < 0.0 {
            if let Some(list) = by_id.get_mut(&r.vehicle_id) {
                list.push(r);
            }
        }
    }
    by_id
}

/// Liters per 100 km over the control zone for the counted fleet.
pub fn compute_fuel_per_100km(rows: &[TrajectoryRow], counted: &[usize], l_ctrl: f64, dt: f64) -> Result<f64> {
    let mut fuel_ml = 0.0;
    let mut dist = 0.0;
    for list in zone_rows(rows, counted, l_ctrl).values() {
        for r in list {
            fuel_ml += r.fuel_rate * dt;
            dist += (r.v + r.a * dt) * dt;
        }
    }
    if !(dist > 0.0) {
        return Err(PlatoonError::Metric("zero distance travelled in the control zone".into()));
    }
    // ml/m to L/100km
    Ok(fuel_ml / dist * 100.0)
}

/// Decelerations later followed by an acceleration, with a dead band.
pub fn count_cycles(accels: impl IntoIterator<Item = f64>) -> usize {
    let mut sign = 0i8;
    let mut cycles = 0;
    for a in accels {
        if a < -CYCLE_BAND {
            sign = -1;
        } else if a > CYCLE_BAND {
            if sign == -1 {
                cycles += 1;
            }
            sign = 1;
        }
    }
    cycles
}

/// Mean cycles and idling time per counted vehicle inside the control zone.
pub fn compute_cycles_and_idling(rows: &[TrajectoryRow], counted: &[usize], l_ctrl: f64, dt: f64) -> (f64, f64) {
    let zone = zone_rows(rows, counted, l_ctrl);
    if zone.is_empty() {
        return (0.0, 0.0);
    }
    let mut cycles = 0usize;
    let mut idle = 0.0;
    for list in zone.values() {
        cycles += count_cycles(list.iter().map(|r| r.a));
        idle += list.iter().filter(|r| r.v < IDLE_SPEED).count() as f64 * dt;
    }
    let n = zone.len() as f64;
    (cycles as f64 / n, idle / n)
}

pub fn compute_metrics(config: &ScenarioConfig, rows: &[TrajectoryRow], events: &[EventRecord]) -> Result<MetricsSummary> {
    let counted = counted_set(config.total_vehicles);
    let l_ctrl = config.geometry.l_ctrl;
    let (attd, missing) = compute_attd(events, &counted, l_ctrl, config.bounds.v_max)?;
    let included: Vec<usize> = counted.iter().copied().filter(|id| !missing.contains(id)).collect();
    let fuel = compute_fuel_per_100km(rows, &included, l_ctrl, config.step)?;
    let (cycles, idling) = compute_cycles_and_idling(rows, &included, l_ctrl, config.step);
    Ok(MetricsSummary {
        attd,
        fuel_per_100km: fuel,
        accel_decel_cycles_per_vehicle: cycles,
        idling_time_per_vehicle: idling,
        counted_vehicle_ids: counted,
        missing_vehicle_ids: missing,
    })
}
