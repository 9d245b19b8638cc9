//! Run recording and CSV serialization. Floats are written with Rust's
//! shortest round-trip formatting, so identical runs serialize to identical
//! bytes.

use std::io::{self, Write};

use crate::optimizer::MergePlan;

use super::world::{Lane, Role, SimEvent, VehicleId, VehicleKind, World};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub v: f64,
    pub a: f64,
    pub lane: Lane,
    /// Destination lane while a change is in progress.
    pub lane_to: Option<Lane>,
    pub role: Role,
}

#[derive(Debug, Clone)]
pub struct VehicleTrace {
    pub id: VehicleId,
    pub kind: VehicleKind,
    /// Role held at the end of the run; roles are assigned once per merge.
    pub role: Role,
    pub length: f64,
    pub width: f64,
    pub points: Vec<TracePoint>,
}

/// Everything one simulation run produced.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub dt: f64,
    /// Simulated time actually covered (a collision ends a run early).
    pub duration: f64,
    pub traces: Vec<VehicleTrace>,
    pub events: Vec<SimEvent>,
    pub collided: bool,
    pub merge_time: Option<f64>,
    /// The merge plan the controller executed, when one was adopted.
    pub adopted_plan: Option<MergePlan>,
    /// Reported decision cost of the planning episode (optimizer comparison).
    pub plan_cost: Option<f64>,
}

impl RunRecord {
    pub fn trace(&self, id: VehicleId) -> &VehicleTrace {
        self.traces.iter().find(|t| t.id == id).expect("vehicle recorded")
    }
}

/// Collects per-step vehicle states during a run.
pub struct Recorder {
    traces: Vec<VehicleTrace>,
}

impl Recorder {
    pub fn new(world: &World) -> Self {
        let traces = world
            .vehicles
            .iter()
            .map(|v| VehicleTrace {
                id: v.id,
                kind: v.kind(),
                role: v.role,
                length: v.length,
                width: v.width,
                points: Vec::new(),
            })
            .collect();
        Self { traces }
    }

    pub fn sample(&mut self, world: &World) {
        for (trace, v) in self.traces.iter_mut().zip(&world.vehicles) {
            debug_assert_eq!(trace.id, v.id, "vehicle order is stable");
            trace.points.push(TracePoint {
                t: world.time,
                x: v.x,
                y: v.y,
                v: v.v,
                a: v.a,
                lane: v.lane,
                lane_to: v.lane_change.as_ref().map(|lc| lc.to),
                role: v.role,
            });
        }
    }

    pub fn finish(mut self, world: &World) -> RunRecord {
        for (trace, v) in self.traces.iter_mut().zip(&world.vehicles) {
            trace.role = v.role;
        }
        let merge_time = world
            .events
            .iter()
            .find_map(|e| match e {
                SimEvent::MergeCompleted { t, .. } => Some(*t),
                _ => None,
            });
        RunRecord {
            dt: world.dt,
            duration: world.time,
            traces: self.traces,
            events: world.events.clone(),
            collided: world.collided,
            merge_time,
            adopted_plan: None,
            plan_cost: None,
        }
    }
}

/// Aggregate run measurements, one value per reported column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunMetrics {
    /// Smallest leader gap any key vehicle saw (m); larger is safer.
    pub crit_dist: f64,
    /// Mean acceleration magnitude of the key vehicles (m/s^2).
    pub aver_acc: f64,
    /// Time from merge completion until the key group stays settled (s).
    pub stab_time: f64,
    /// Low-speed exposure of the key group (m^2/s).
    pub lsrv: f64,
    /// Total fuel burned by the whole flow (L).
    pub fuel: f64,
}

pub const TRAJECTORY_HEADER: &str = "t,id,role,kind,lane,x,y,v,a";
pub const METRICS_HEADER: &str =
    "condition,controller,optimizer,crit_dist,aver_acc,stab_time,lsrv,fuel";

/// Per-timestep states, time-major and id-ordered within a step.
pub fn write_trajectory_csv(out: &mut impl Write, rec: &RunRecord) -> io::Result<()> {
    writeln!(out, "{TRAJECTORY_HEADER}")?;
    let steps = rec.traces.iter().map(|t| t.points.len()).max().unwrap_or(0);
    for i in 0..steps {
        for trace in &rec.traces {
            let Some(p) = trace.points.get(i) else { continue };
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                p.t,
                trace.id,
                p.role.label(),
                trace.kind.label(),
                p.lane.label(),
                p.x,
                p.y,
                p.v,
                p.a
            )?;
        }
    }
    Ok(())
}

/// One aggregated metrics line.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub condition: String,
    pub controller: String,
    pub optimizer: String,
    pub metrics: RunMetrics,
}

pub fn write_metrics_csv(out: &mut impl Write, rows: &[MetricsRow]) -> io::Result<()> {
    writeln!(out, "{METRICS_HEADER}")?;
    for r in rows {
        let m = &r.metrics;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.condition, r.controller, r.optimizer, m.crit_dist, m.aver_acc, m.stab_time, m.lsrv,
            m.fuel
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(t: f64, x: f64) -> TracePoint {
        TracePoint {
            t,
            x,
            y: 0.0,
            v: 20.0,
            a: 0.0,
            lane: Lane::Main1,
            lane_to: None,
            role: Role::Background,
        }
    }

    fn tiny_record() -> RunRecord {
        RunRecord {
            dt: 0.1,
            duration: 0.1,
            traces: vec![VehicleTrace {
                id: 0,
                kind: VehicleKind::Cav,
                role: Role::Vr,
                length: 5.0,
                width: 2.0,
                points: vec![point(0.0, 1.0), point(0.1, 3.0)],
            }],
            events: Vec::new(),
            collided: false,
            merge_time: None,
            adopted_plan: None,
            plan_cost: None,
        }
    }

    #[test]
    fn trajectory_csv_has_fixed_header_and_one_row_per_sample() {
        let rec = tiny_record();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &rec).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], TRAJECTORY_HEADER);
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1], "0,0,bg,cav,main1,1,0,20,0");
    }

    #[test]
    fn metrics_csv_round_trips_exact_bytes() {
        let rows = vec![MetricsRow {
            condition: "1".into(),
            controller: "hcomc".into(),
            optimizer: "nsga2".into(),
            metrics: RunMetrics {
                crit_dist: 12.5,
                aver_acc: 0.25,
                stab_time: 7.5,
                lsrv: 100.0,
                fuel: 1.625,
            },
        }];
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_metrics_csv(&mut a, &rows).unwrap();
        write_metrics_csv(&mut b, &rows).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert_eq!(
            text,
            format!("{METRICS_HEADER}\n1,hcomc,nsga2,12.5,0.25,7.5,100,1.625\n")
        );
    }
}
