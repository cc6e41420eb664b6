//! Intersection-level decisions: which green phase a platoon aims for, how a
//! standing queue shifts that target, how vehicles are grouped behind a CAV,
//! and the per-CAV state machine that triggers (re)planning.

mod control;
pub mod pcc;
pub mod qp;

use crate::error::{PlatoonError, Result};

pub use control::{Command, Coordinator, WorldView};

/// Fixed-cycle signal. Each cycle starts with green at `offset + k·cycle`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalTiming {
    pub green: f64,
    pub red: f64,
    pub offset: f64,
}

impl Default for SignalTiming {
    fn default() -> Self {
        Self {
            green: 30.0,
            red: 30.0,
            offset: 0.0,
        }
    }
}

impl SignalTiming {
    pub fn validate(&self) -> Result<()> {
        if !(self.green > 0.0) || !(self.red >= 0.0) || !self.offset.is_finite() || !self.red.is_finite() {
            return Err(PlatoonError::Config(format!(
                "signal needs green > 0 and red >= 0, got green={} red={} offset={}",
                self.green, self.red, self.offset
            )));
        }
        Ok(())
    }

    pub fn cycle(&self) -> f64 {
        self.green + self.red
    }

    pub fn always_green(&self) -> bool {
        self.red <= 0.0
    }

    /// Index of the cycle containing `t`.
    pub fn cycle_index(&self, t: f64) -> i64 {
        ((t - self.offset) / self.cycle()).floor() as i64
    }

    pub fn green_start(&self, k: i64) -> f64 {
        self.offset + k as f64 * self.cycle()
    }

    pub fn red_start(&self, k: i64) -> f64 {
        self.green_start(k) + self.green
    }

    pub fn is_green(&self, t: f64) -> bool {
        if self.always_green() {
            return true;
        }
        t < self.red_start(self.cycle_index(t))
    }

    /// Start of the red phase in progress or most recently ended.
    pub fn last_red_start(&self, t: f64) -> Option<f64> {
        if self.always_green() {
            return None;
        }
        let k = self.cycle_index(t);
        let r = self.red_start(k);
        Some(if t >= r { r } else { self.red_start(k - 1) })
    }

    /// Start of the next green strictly after `t` (the current one if red).
    pub fn next_green_start(&self, t: f64) -> f64 {
        if self.always_green() {
            return t;
        }
        self.green_start(self.cycle_index(t) + 1)
    }
}

/// Velocity interval reaching the stop line inside one green phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenWindow {
    pub v_low: f64,
    pub v_high: f64,
    /// Cycle index of the target green.
    pub phase: i64,
    /// Travel time at `v_high` over the distance the window was built on (s).
    pub t_f: f64,
}

impl GreenWindow {
    pub fn v_target(&self) -> f64 {
        self.v_high
    }
}

/// Options that shrink the usable part of each green.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowOptions {
    /// Trimmed from both ends of every green (s).
    pub buffer: f64,
    /// Absolute time before which the line must not be reached.
    pub not_before: f64,
    /// Number of green phases examined.
    pub lookahead: usize,
}

impl Default for WindowOptions {
    fn default() -> Self {
        Self {
            buffer: 0.0,
            not_before: f64::NEG_INFINITY,
            lookahead: 5,
        }
    }
}

/// First green phase whose arrival-velocity interval intersects
/// `[v_min, v_cap]`.
pub fn select_window(
    distance: f64,
    now: f64,
    timing: &SignalTiming,
    v_min: f64,
    v_cap: f64,
) -> Result<GreenWindow> {
    select_window_with(distance, now, timing, v_min, v_cap, &WindowOptions::default())
}

pub fn select_window_with(
    distance: f64,
    now: f64,
    timing: &SignalTiming,
    v_min: f64,
    v_cap: f64,
    opts: &WindowOptions,
) -> Result<GreenWindow> {
    if !(distance > 0.0) {
        return Err(PlatoonError::Argument(format!("distance must be positive, got {distance}")));
    }
    if !(v_min >= 0.0 && v_cap > v_min) {
        return Err(PlatoonError::Argument(format!(
            "need v_cap > v_min >= 0, got [{v_min}, {v_cap}]"
        )));
    }
    if timing.always_green() {
        let start = opts.not_before;
        let hi = if start > now { (distance / (start - now)).min(v_cap) } else { v_cap };
        if hi >= v_min && hi > 0.0 {
            return Ok(GreenWindow {
                v_low: v_min,
                v_high: hi,
                phase: 0,
                t_f: distance / hi,
            });
        }
        return Err(PlatoonError::Scheduling(format!(
            "cannot arrive after {start} within [{v_min}, {v_cap}]"
        )));
    }
    let first = timing.cycle_index(now);
    for k in first..first + opts.lookahead as i64 {
        let start = (timing.green_start(k) + opts.buffer).max(opts.not_before);
        let end = timing.red_start(k) - opts.buffer;
        if end <= now || start >= end {
            continue;
        }
        let lo = (distance / (end - now)).max(v_min);
        let hi = if start <= now { v_cap } else { (distance / (start - now)).min(v_cap) };
        if lo <= hi && hi > 0.0 {
            return Ok(GreenWindow {
                v_low: lo,
                v_high: hi,
                phase: k,
                t_f: distance / hi,
            });
        }
    }
    Err(PlatoonError::Scheduling(format!(
        "no green window within {} phases for D={distance:.2} m at t={now:.2} s",
        opts.lookahead
    )))
}

/// Distance at which a vehicle at `v_k` meets the tail of a queue that grows
/// upstream at `v_ac` since `r_j`.
pub fn adjust_for_queue(distance: f64, v_k: f64, v_ac: f64, r_j: f64, t: f64) -> Result<f64> {
    if !(v_k + v_ac > 0.0) {
        return Err(PlatoonError::Argument(format!(
            "v_k + v_ac must be positive, got {v_k} + {v_ac}"
        )));
    }
    Ok(v_k / (v_k + v_ac) * (distance + v_ac * (r_j - t)))
}

/// Vehicles behind a leader: the consecutive non-leaders up to the next
/// leader, at most `cap` of them. Returns how many are taken.
pub fn partition_platoon(is_leader_behind: &[bool], cap: usize) -> usize {
    is_leader_behind.iter().take_while(|&&leader| !leader).take(cap).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CavFsmState {
    Uncontrolled,
    Computed,
    Controlled,
    Recomputed,
    /// Car-following for the rest of the approach.
    Fallback,
}

impl CavFsmState {
    pub fn as_str(&self) -> &'static str {
        match self {
            CavFsmState::Uncontrolled => "uncontrolled",
            CavFsmState::Computed => "computed",
            CavFsmState::Controlled => "controlled",
            CavFsmState::Recomputed => "recomputed",
            CavFsmState::Fallback => "fallback",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "uncontrolled" => CavFsmState::Uncontrolled,
            "computed" => CavFsmState::Computed,
            "controlled" => CavFsmState::Controlled,
            "recomputed" => CavFsmState::Recomputed,
            "fallback" => CavFsmState::Fallback,
            _ => return None,
        })
    }
}

/// The only edges the state machine may take.
pub fn transition_allowed(from: CavFsmState, to: CavFsmState) -> bool {
    use CavFsmState::*;
    matches!(
        (from, to),
        (Uncontrolled, Computed)
            | (Computed, Controlled)
            | (Computed, Fallback)
            | (Controlled, Recomputed)
            | (Recomputed, Controlled)
            | (Recomputed, Fallback)
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerKind {
    None,
    PccPlus,
    MixedPlatoon,
}

impl ControllerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ControllerKind::None => "none",
            ControllerKind::PccPlus => "pcc_plus",
            ControllerKind::MixedPlatoon => "mixed_platoon",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "none" => ControllerKind::None,
            "pcc_plus" => ControllerKind::PccPlus,
            "mixed_platoon" => ControllerKind::MixedPlatoon,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordinatorParams {
    /// Re-planning is allowed while the remaining distance exceeds
    /// `k_c·L_ctrl`.
    pub k_c: f64,
    /// Bumper gap that triggers re-planning (m).
    pub trigger_gap: f64,
    /// Planned bumper gap to the vehicle ahead, above `trigger_gap` (m).
    pub lead_gap_margin: f64,
    /// A trigger this soon after the last plan falls back to car-following (s).
    pub cooldown: f64,
    /// Trimmed from both ends of each green when planning arrivals (s).
    pub arrival_buffer: f64,
    pub v_min: f64,
    pub lookahead: usize,
    /// Speed below which a vehicle ahead counts as queued (m/s).
    pub queue_speed: f64,
    pub v_ac_min: f64,
    pub v_ac_max: f64,
    pub transcription_nodes: usize,
    pub w1: f64,
    pub w2: f64,
    /// Grid step for the optimal equilibrium velocity (m/s).
    pub vstar_grid: f64,
    /// Look-ahead of the roll-out of traffic ahead of a platoon leader (s).
    pub prediction_horizon: f64,
}

impl Default for CoordinatorParams {
    fn default() -> Self {
        Self {
            k_c: 0.5,
            trigger_gap: 6.0,
            lead_gap_margin: 1.0,
            cooldown: 1.0,
            arrival_buffer: 1.0,
            v_min: 0.0,
            lookahead: 5,
            queue_speed: 0.5,
            v_ac_min: 1.0,
            v_ac_max: 10.0,
            transcription_nodes: crate::ocp::DEFAULT_NODES,
            w1: 1e5,
            w2: 1e4,
            vstar_grid: 1e-3,
            prediction_horizon: 120.0,
        }
    }
}
