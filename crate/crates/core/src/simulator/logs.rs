//! CSV logs of a run. Floats use the shortest representation that parses
//! back to the same value, so logs are byte-stable and lossless.

use std::io::{Read, Write};

use super::{EventKind, EventRecord, TrajectoryRow, VehicleClass};
use crate::coordinator::CavFsmState;
use crate::error::{PlatoonError, Result};

pub const TRAJECTORY_HEADER: [&str; 9] =
    ["t", "vehicle_id", "class", "fsm_state", "x", "v", "a", "fuel_rate_ml_s", "fuel_accum_ml"];
pub const EVENTS_HEADER: [&str; 4] = ["t", "vehicle_id", "event", "detail"];

fn csv_err(e: csv::Error) -> PlatoonError {
    PlatoonError::Io(e.to_string())
}

pub fn write_trajectory<W: Write>(out: W, rows: &[TrajectoryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.t.to_string(),
            r.vehicle_id.to_string(),
            r.class.as_str().to_string(),
            r.fsm_state.as_str().to_string(),
            r.x.to_string(),
            r.v.to_string(),
            r.a.to_string(),
            r.fuel_rate.to_string(),
            r.fuel_accum.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_events<W: Write>(out: W, events: &[EventRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(EVENTS_HEADER).map_err(csv_err)?;
    for e in events {
        w.write_record([e.t.to_string(), e.vehicle_id.to_string(), e.kind.as_str().to_string(), e.detail.clone()])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, idx: usize, name: &str, line: usize) -> Result<T> {
    let raw = rec.get(idx).unwrap_or("");
    raw.parse().map_err(|_| PlatoonError::Parse {
        line,
        key: name.to_string(),
        message: format!("cannot parse {raw:?}"),
    })
}

fn check_header(r: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<()> {
    let header = r.headers().map_err(csv_err)?;
    if !header.iter().eq(expected.iter().copied()) {
        return Err(PlatoonError::Parse {
            line: 1,
            key: "header".into(),
            message: format!("expected {}", expected.join(",")),
        });
    }
    Ok(())
}

pub fn read_trajectory<R: Read>(input: R) -> Result<Vec<TrajectoryRow>> {
    let mut r = csv::Reader::from_reader(input);
    check_header(&mut r, &TRAJECTORY_HEADER)?;
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = i + 2;
        let class_raw = rec.get(2).unwrap_or("");
        let state_raw = rec.get(3).unwrap_or("");
        rows.push(TrajectoryRow {
            t: field(&rec, 0, "t", line)?,
            vehicle_id: field(&rec, 1, "vehicle_id", line)?,
            class: VehicleClass::parse(class_raw).ok_or_else(|| PlatoonError::Parse {
                line,
                key: "class".into(),
                message: format!("unknown class {class_raw:?}"),
            })?,
            fsm_state: CavFsmState::parse(state_raw).ok_or_else(|| PlatoonError::Parse {
                line,
                key: "fsm_state".into(),
                message: format!("unknown state {state_raw:?}"),
            })?,
            x: field(&rec, 4, "x", line)?,
            v: field(&rec, 5, "v", line)?,
            a: field(&rec, 6, "a", line)?,
            fuel_rate: field(&rec, 7, "fuel_rate_ml_s", line)?,
            fuel_accum: field(&rec, 8, "fuel_accum_ml", line)?,
        });
    }
    Ok(rows)
}

pub fn read_events<R: Read>(input: R) -> Result<Vec<EventRecord>> {
    let mut r = csv::Reader::from_reader(input);
    check_header(&mut r, &EVENTS_HEADER)?;
    let mut events = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = i + 2;
        let kind_raw = rec.get(2).unwrap_or("");
        events.push(EventRecord {
            t: field(&rec, 0, "t", line)?,
            vehicle_id: field(&rec, 1, "vehicle_id", line)?,
            kind: EventKind::parse(kind_raw).ok_or_else(|| PlatoonError::Parse {
                line,
                key: "event".into(),
                message: format!("unknown event {kind_raw:?}"),
            })?,
            detail: rec.get(3).unwrap_or("").to_string(),
        });
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trajectory_round_trip() {
        let rows = vec![TrajectoryRow {
            t: 0.1 + 0.2,
            vehicle_id: 7,
            class: VehicleClass::Cav,
            fsm_state: CavFsmState::Controlled,
            x: -123.456789012345,
            v: 1e-300,
            a: -6.0,
            fuel_rate: 0.3333333333333333,
            fuel_accum: 0.0,
        }];
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,vehicle_id,class,fsm_state,x,v,a,fuel_rate_ml_s,fuel_accum_ml\n"));
        assert_eq!(read_trajectory(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn event_details_with_commas_survive() {
        let events = vec![EventRecord {
            t: 3.0,
            vehicle_id: 1,
            kind: EventKind::FsmTransition,
            detail: "a,b \"quoted\"".into(),
        }];
        let mut buf = Vec::new();
        write_events(&mut buf, &events).unwrap();
        assert_eq!(read_events(buf.as_slice()).unwrap(), events);
    }

    #[test]
    fn wrong_header_is_rejected() {
        assert!(read_events("a,b\n".as_bytes()).is_err());
    }
}
