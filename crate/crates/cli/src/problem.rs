//! Problem files for the `plan` subcommand.
//!
//! ```text
//! t0 = 0
//! tf = 30
//! x_tar = 0
//! v_star = 12.3        # optional, defaults to the optimal equilibrium velocity
//! w1 = 1e5             # optional
//! w2 = 1e4             # optional
//! vehicle = -250, 12   # position, velocity; leader first
//! vehicle = -275, 12
//! ```
//!
//! Bounds and model constants come from the scenario config.

use std::fmt::Write;

use anyhow::{anyhow, bail, Context, Result};
use platoon_core::equilibrium::solve_vstar;
use platoon_core::ocp::{Kinematics, OcpProblem, TrajectoryPlan};
use platoon_core::simulator::ScenarioConfig;

pub fn parse_problem(text: &str, cfg: &ScenarioConfig) -> Result<OcpProblem> {
    let (mut t0, mut tf, mut x_tar, mut v_star, mut w1, mut w2) = (None, None, None, None, None, None);
    let mut vehicles = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = || format!("line {}", i + 1);
        let (key, value) = line.split_once('=').ok_or_else(|| anyhow!("{}: expected key = value", at()))?;
        let (key, value) = (key.trim(), value.trim());
        let num = |s: &str| -> Result<f64> {
            let x: f64 = s.trim().parse().with_context(|| format!("{}, key `{key}`: cannot parse {s:?}", at()))?;
            if !x.is_finite() {
                bail!("{}, key `{key}`: value must be finite", at());
            }
            Ok(x)
        };
        match key {
            "t0" => t0 = Some(num(value)?),
            "tf" => tf = Some(num(value)?),
            "x_tar" => x_tar = Some(num(value)?),
            "v_star" => v_star = Some(num(value)?),
            "w1" => w1 = Some(num(value)?),
            "w2" => w2 = Some(num(value)?),
            "vehicle" => {
                let (x, v) = value
                    .split_once(',')
                    .ok_or_else(|| anyhow!("{}, key `vehicle`: expected `position, velocity`", at()))?;
                vehicles.push(Kinematics::new(num(x)?, num(v)?));
            }
            other => bail!("{}: unknown key `{other}`", at()),
        }
    }
    let need = |v: Option<f64>, k: &str| v.ok_or_else(|| anyhow!("missing key `{k}`"));
    if vehicles.is_empty() {
        bail!("at least one `vehicle` line is required");
    }
    let v_star = match v_star {
        Some(v) => v,
        None => solve_vstar(&cfg.ovm, cfg.timing.green, 1e-3, cfg.bounds.v_max)?.v_star,
    };
    let mut p = OcpProblem::new(need(t0, "t0")?, need(tf, "tf")?, vehicles, need(x_tar, "x_tar")?, v_star);
    p.w1 = w1.unwrap_or(p.w1);
    p.w2 = w2.unwrap_or(p.w2);
    p.bounds = cfg.bounds;
    p.ovm = cfg.ovm;
    p.fuel = cfg.fuel;
    p.validate()?;
    Ok(p)
}

/// `t, u, x0, v0, x1, v1, …` at the plan nodes.
pub fn plan_csv(plan: &TrajectoryPlan) -> String {
    let nveh = plan.states.first().map_or(0, Vec::len);
    let mut s = String::from("t,u");
    for i in 0..nveh {
        let _ = write!(s, ",x{i},v{i}");
    }
    s.push('\n');
    for ((t, u), states) in plan.times.iter().zip(&plan.u).zip(&plan.states) {
        let _ = write!(s, "{t},{u}");
        for k in states {
            let _ = write!(s, ",{},{}", k.x, k.v);
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_vehicles_and_defaults() {
        let cfg = ScenarioConfig::default();
        let p = parse_problem("t0 = 0\ntf = 30 # s\nx_tar = 0\nvehicle = -250, 12\nvehicle = -275,12\n", &cfg).unwrap();
        assert_eq!(p.initial_state, vec![Kinematics::new(-250.0, 12.0), Kinematics::new(-275.0, 12.0)]);
        assert!((p.v_star - 12.325554).abs() < 1e-5);
        assert_eq!(p.w1, 1e5);
    }

    #[test]
    fn errors_name_the_line() {
        let cfg = ScenarioConfig::default();
        let err = parse_problem("t0 = 0\ntf = abc\n", &cfg).unwrap_err();
        assert!(format!("{err:#}").contains("line 2"), "{err:#}");
        let err = parse_problem("speed = 3\n", &cfg).unwrap_err();
        assert!(format!("{err:#}").contains("unknown key `speed`"));
        assert!(parse_problem("t0 = 0\ntf = 10\nx_tar = 0\n", &cfg).is_err());
    }
}
