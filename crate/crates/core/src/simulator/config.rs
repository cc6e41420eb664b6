//! Scenario files: `[section]` headers followed by `key = value` lines.
//! `#` starts a comment. Unknown sections or keys are errors. Keys not given
//! keep their defaults. [`render_config`] writes every key, and parsing its
//! output reproduces the same configuration exactly.

use std::fmt::Write;

use super::ScenarioConfig;
use crate::coordinator::ControllerKind;
use crate::error::{PlatoonError, Result};

enum Slot<'a> {
    F64(&'a mut f64),
    U64(&'a mut u64),
    Usize(&'a mut usize),
    Bool(&'a mut bool),
    Controller(&'a mut ControllerKind),
}

impl Slot<'_> {
    fn render(&self) -> String {
        match self {
            Slot::F64(v) => format!("{}", **v),
            Slot::U64(v) => v.to_string(),
            Slot::Usize(v) => v.to_string(),
            Slot::Bool(v) => v.to_string(),
            Slot::Controller(v) => v.as_str().to_string(),
        }
    }

    fn set(&mut self, raw: &str) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(raw: &str) -> std::result::Result<T, String>
        where
            T::Err: std::fmt::Display,
        {
            raw.parse::<T>().map_err(|e| format!("cannot parse {raw:?}: {e}"))
        }
        match self {
            Slot::F64(v) => {
                let x: f64 = num(raw)?;
                if x.is_nan() {
                    return Err("NaN is not allowed".into());
                }
                **v = x;
            }
            Slot::U64(v) => **v = num(raw)?,
            Slot::Usize(v) => **v = num(raw)?,
            Slot::Bool(v) => **v = num(raw)?,
            Slot::Controller(v) => {
                **v = ControllerKind::parse(raw)
                    .ok_or_else(|| format!("unknown controller {raw:?} (none, pcc_plus, mixed_platoon)"))?
            }
        }
        Ok(())
    }
}

/// Every configurable key, grouped by section, in rendering order.
fn slots(c: &mut ScenarioConfig) -> Vec<(&'static str, Vec<(&'static str, Slot<'_>)>)> {
    vec![
        (
            "scenario",
            vec![
                ("controller", Slot::Controller(&mut c.controller)),
                ("volume", Slot::F64(&mut c.volume)),
                ("mpr", Slot::F64(&mut c.mpr)),
                ("total_vehicles", Slot::Usize(&mut c.total_vehicles)),
                ("seed", Slot::U64(&mut c.seed)),
                ("step", Slot::F64(&mut c.step)),
                ("max_time", Slot::F64(&mut c.max_time)),
                ("stochastic_gain", Slot::Bool(&mut c.stochastic_gain)),
                ("gamma_min", Slot::F64(&mut c.gamma_range.0)),
                ("gamma_max", Slot::F64(&mut c.gamma_range.1)),
            ],
        ),
        (
            "geometry",
            vec![
                ("l_obs", Slot::F64(&mut c.geometry.l_obs)),
                ("l_ctrl", Slot::F64(&mut c.geometry.l_ctrl)),
                ("exit_length", Slot::F64(&mut c.geometry.exit_length)),
            ],
        ),
        (
            "signal",
            vec![
                ("green", Slot::F64(&mut c.timing.green)),
                ("red", Slot::F64(&mut c.timing.red)),
                ("offset", Slot::F64(&mut c.timing.offset)),
            ],
        ),
        (
            "ovm",
            vec![
                ("kappa", Slot::F64(&mut c.ovm.kappa)),
                ("v1", Slot::F64(&mut c.ovm.v1)),
                ("v2", Slot::F64(&mut c.ovm.v2)),
                ("c1", Slot::F64(&mut c.ovm.c1)),
                ("c2", Slot::F64(&mut c.ovm.c2)),
                ("l_veh", Slot::F64(&mut c.ovm.l_veh)),
            ],
        ),
        (
            "fuel",
            vec![
                ("alpha_idle", Slot::F64(&mut c.fuel.alpha_idle)),
                ("beta1", Slot::F64(&mut c.fuel.beta1)),
                ("beta2", Slot::F64(&mut c.fuel.beta2)),
                ("mass", Slot::F64(&mut c.fuel.mass)),
                ("d1", Slot::F64(&mut c.fuel.d1)),
                ("d2", Slot::F64(&mut c.fuel.d2)),
                ("d3", Slot::F64(&mut c.fuel.d3)),
            ],
        ),
        (
            "bounds",
            vec![
                ("v_max", Slot::F64(&mut c.bounds.v_max)),
                ("a_min", Slot::F64(&mut c.bounds.a_min)),
                ("a_max", Slot::F64(&mut c.bounds.a_max)),
                ("d_safe", Slot::F64(&mut c.bounds.d_safe)),
                ("x0_max", Slot::F64(&mut c.bounds.x0_max)),
            ],
        ),
        (
            "driver",
            vec![
                ("free_road_headway", Slot::F64(&mut c.driver.free_road_headway)),
                ("stop_gap", Slot::F64(&mut c.driver.stop_gap)),
                ("b_comf", Slot::F64(&mut c.driver.b_comf)),
                ("red_margin", Slot::F64(&mut c.driver.red_margin)),
            ],
        ),
        (
            "coordinator",
            vec![
                ("k_c", Slot::F64(&mut c.coordinator.k_c)),
                ("trigger_gap", Slot::F64(&mut c.coordinator.trigger_gap)),
                ("lead_gap_margin", Slot::F64(&mut c.coordinator.lead_gap_margin)),
                ("cooldown", Slot::F64(&mut c.coordinator.cooldown)),
                ("arrival_buffer", Slot::F64(&mut c.coordinator.arrival_buffer)),
                ("v_min", Slot::F64(&mut c.coordinator.v_min)),
                ("lookahead", Slot::Usize(&mut c.coordinator.lookahead)),
                ("queue_speed", Slot::F64(&mut c.coordinator.queue_speed)),
                ("v_ac_min", Slot::F64(&mut c.coordinator.v_ac_min)),
                ("v_ac_max", Slot::F64(&mut c.coordinator.v_ac_max)),
                ("transcription_nodes", Slot::Usize(&mut c.coordinator.transcription_nodes)),
                ("w1", Slot::F64(&mut c.coordinator.w1)),
                ("w2", Slot::F64(&mut c.coordinator.w2)),
                ("vstar_grid", Slot::F64(&mut c.coordinator.vstar_grid)),
                ("prediction_horizon", Slot::F64(&mut c.coordinator.prediction_horizon)),
            ],
        ),
        (
            "pcc",
            vec![
                ("horizon", Slot::F64(&mut c.pcc.horizon)),
                ("step", Slot::F64(&mut c.pcc.step)),
                ("q", Slot::F64(&mut c.pcc.q)),
                ("r", Slot::F64(&mut c.pcc.r)),
            ],
        ),
    ]
}

/// Applies `key = value` settings from `text` on top of `base`.
pub fn apply_config(base: &ScenarioConfig, text: &str) -> Result<ScenarioConfig> {
    let mut cfg = base.clone();
    let mut section: Option<String> = None;
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |key: &str, message: String| PlatoonError::Parse {
            line: line_no,
            key: key.to_string(),
            message,
        };
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err(line, "unterminated section header".into()))?
                .trim();
            let known = slots(&mut ScenarioConfig::default()).iter().any(|(s, _)| *s == name);
            if !known {
                return Err(err(name, "unknown section".into()));
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(line, "expected `key = value`".into()))?;
        let (key, value) = (key.trim(), value.trim());
        let sec = section.as_deref().ok_or_else(|| err(key, "key outside of any section".into()))?;
        let mut table = slots(&mut cfg);
        let entries = &mut table.iter_mut().find(|(s, _)| *s == sec).expect("known section").1;
        let slot = entries
            .iter_mut()
            .find(|(k, _)| *k == key)
            .map(|(_, s)| s)
            .ok_or_else(|| err(key, format!("unknown key in [{sec}]")))?;
        slot.set(value).map_err(|m| err(key, m))?;
    }
    Ok(cfg)
}

/// Parses a scenario file over the default configuration and validates it.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let cfg = apply_config(&ScenarioConfig::default(), text)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Writes every key of `config` in file syntax.
pub fn render_config(config: &ScenarioConfig) -> String {
    let mut copy = config.clone();
    let mut out = String::new();
    for (i, (section, entries)) in slots(&mut copy).into_iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "[{section}]");
        for (key, slot) in entries {
            let _ = writeln!(out, "{key} = {}", slot.render());
        }
    }
    out
}
