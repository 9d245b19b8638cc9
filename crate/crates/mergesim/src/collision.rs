//! Planar collision checks between vehicle footprints and planned paths.
//!
//! A footprint is the oriented rectangle spanned by a vehicle's length and
//! width around its center pose. Overlap is decided exactly: a cheap
//! axis-aligned reject, then segment straddle tests over the 4x4 edge pairs,
//! then mutual center containment for the fully-nested case. Touching counts
//! as collision; the checks are deliberately conservative.

use thiserror::Error;

use crate::traffic::Trajectory;

#[derive(Debug, Error, PartialEq)]
pub enum CollisionError {
    #[error("trajectories must share dt, got {0} and {1}")]
    MismatchedStep(f64, f64),
    #[error("trajectory timestamps are offset by a non-integer number of steps ({0})")]
    MisalignedTimebase(f64),
    #[error("trajectories share no common time window")]
    DisjointWindows,
}

/// Oriented rectangle around a center pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleFootprint {
    pub x: f64,
    pub y: f64,
    /// Heading relative to the road axis (rad).
    pub heading: f64,
    pub length: f64,
    pub width: f64,
}

impl VehicleFootprint {
    pub fn corners(&self) -> [(f64, f64); 4] {
        let (s, c) = self.heading.sin_cos();
        let hl = 0.5 * self.length;
        let hw = 0.5 * self.width;
        let rot = |dx: f64, dy: f64| (self.x + dx * c - dy * s, self.y + dx * s + dy * c);
        [rot(hl, hw), rot(hl, -hw), rot(-hl, -hw), rot(-hl, hw)]
    }

    fn aabb(&self) -> (f64, f64, f64, f64) {
        let corners = self.corners();
        let mut min_x = f64::INFINITY;
        let mut max_x = f64::NEG_INFINITY;
        let mut min_y = f64::INFINITY;
        let mut max_y = f64::NEG_INFINITY;
        for (x, y) in corners {
            min_x = min_x.min(x);
            max_x = max_x.max(x);
            min_y = min_y.min(y);
            max_y = max_y.max(y);
        }
        (min_x, max_x, min_y, max_y)
    }

    /// Closed-interval point containment in the rectangle's local frame.
    pub fn contains(&self, px: f64, py: f64) -> bool {
        let (s, c) = self.heading.sin_cos();
        let dx = px - self.x;
        let dy = py - self.y;
        let local_x = dx * c + dy * s;
        let local_y = -dx * s + dy * c;
        local_x.abs() <= 0.5 * self.length && local_y.abs() <= 0.5 * self.width
    }
}

/// True when the axis-aligned bounding boxes are disjoint, so the oriented
/// rectangles cannot possibly overlap. Closed intervals: boxes that merely
/// touch are not rejected.
pub fn quick_reject(a: &VehicleFootprint, b: &VehicleFootprint) -> bool {
    let (a_min_x, a_max_x, a_min_y, a_max_y) = a.aabb();
    let (b_min_x, b_max_x, b_min_y, b_max_y) = b.aabb();
    a_max_x < b_min_x || b_max_x < a_min_x || a_max_y < b_min_y || b_max_y < a_min_y
}

fn cross(ox: f64, oy: f64, ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)
}

fn on_segment(px: f64, py: f64, qx: f64, qy: f64, rx: f64, ry: f64) -> bool {
    rx >= px.min(qx) && rx <= px.max(qx) && ry >= py.min(qy) && ry <= py.max(qy)
}

/// Segment intersection by the straddle test; collinear overlap and endpoint
/// touches count as intersecting.
pub fn segments_intersect(p1: (f64, f64), p2: (f64, f64), p3: (f64, f64), p4: (f64, f64)) -> bool {
    let d1 = cross(p3.0, p3.1, p4.0, p4.1, p1.0, p1.1);
    let d2 = cross(p3.0, p3.1, p4.0, p4.1, p2.0, p2.1);
    let d3 = cross(p1.0, p1.1, p2.0, p2.1, p3.0, p3.1);
    let d4 = cross(p1.0, p1.1, p2.0, p2.1, p4.0, p4.1);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(p3.0, p3.1, p4.0, p4.1, p1.0, p1.1))
        || (d2 == 0.0 && on_segment(p3.0, p3.1, p4.0, p4.1, p2.0, p2.1))
        || (d3 == 0.0 && on_segment(p1.0, p1.1, p2.0, p2.1, p3.0, p3.1))
        || (d4 == 0.0 && on_segment(p1.0, p1.1, p2.0, p2.1, p4.0, p4.1))
}

/// Exact overlap test between two oriented rectangles.
pub fn footprints_collide(a: &VehicleFootprint, b: &VehicleFootprint) -> bool {
    if quick_reject(a, b) {
        return false;
    }
    let ca = a.corners();
    let cb = b.corners();
    for i in 0..4 {
        let a1 = ca[i];
        let a2 = ca[(i + 1) % 4];
        for j in 0..4 {
            if segments_intersect(a1, a2, cb[j], cb[(j + 1) % 4]) {
                return true;
            }
        }
    }
    // No edge crossings: either disjoint or one rectangle swallows the other.
    a.contains(b.x, b.y) || b.contains(a.x, a.y)
}

/// First collision between two sampled paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionEvent {
    pub t: f64,
}

const TIME_TOL: f64 = 1e-9;

/// Scans the common time window of two equally sampled trajectories and
/// returns the earliest timestep at which the footprints overlap.
///
/// `dims` are `(length, width)` of each vehicle. The trajectories must share
/// `dt` and their sample times must line up; anything else is an error, not a
/// silent resample.
pub fn trajectories_collide(
    a: &Trajectory,
    dims_a: (f64, f64),
    b: &Trajectory,
    dims_b: (f64, f64),
) -> Result<Option<CollisionEvent>, CollisionError> {
    if (a.dt - b.dt).abs() > TIME_TOL {
        return Err(CollisionError::MismatchedStep(a.dt, b.dt));
    }
    let (Some(a0), Some(b0)) = (a.start_time(), b.start_time()) else {
        return Err(CollisionError::DisjointWindows);
    };
    let shift = (b0 - a0) / a.dt;
    if (shift - shift.round()).abs() > 1e-6 {
        return Err(CollisionError::MisalignedTimebase(b0 - a0));
    }
    let shift = shift.round() as i64;
    // Indices of the first common sample in each trajectory.
    let (mut ia, mut ib) = if shift >= 0 { (shift as usize, 0) } else { (0, (-shift) as usize) };
    if ia >= a.points.len() || ib >= b.points.len() {
        return Err(CollisionError::DisjointWindows);
    }
    while ia < a.points.len() && ib < b.points.len() {
        let pa = &a.points[ia];
        let pb = &b.points[ib];
        let fa = VehicleFootprint {
            x: pa.x,
            y: pa.y,
            heading: pa.heading,
            length: dims_a.0,
            width: dims_a.1,
        };
        let fb = VehicleFootprint {
            x: pb.x,
            y: pb.y,
            heading: pb.heading,
            length: dims_b.0,
            width: dims_b.1,
        };
        if footprints_collide(&fa, &fb) {
            return Ok(Some(CollisionEvent { t: pa.t }));
        }
        ia += 1;
        ib += 1;
    }
    Ok(None)
}

/// Which slot a planned ramp trajectory occupies relative to the cooperating
/// mainline vehicle and its rear neighbor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MergeGapClass {
    AheadOfVmc,
    BetweenVmcAndVmr,
    Infeasible,
}

/// Classifies the merging sequence implied by the ramp vehicle's planned
/// path. A sequence is only reported when it is consistent with zero detected
/// collisions against the vehicles bounding the slot; a path that conflicts
/// with both neighbors, or that rests in a slot whose bounding vehicle it
/// clips, is `Infeasible`. Absent neighbors constrain nothing.
pub fn classify_merge_gap(
    vr: &Trajectory,
    vr_dims: (f64, f64),
    vmc: Option<(&Trajectory, (f64, f64))>,
    vmr: Option<(&Trajectory, (f64, f64))>,
) -> Result<MergeGapClass, CollisionError> {
    let Some((vmc_traj, vmc_dims)) = vmc else {
        return Ok(MergeGapClass::AheadOfVmc);
    };
    let hits_vmc = trajectories_collide(vr, vr_dims, vmc_traj, vmc_dims)?.is_some();
    let hits_vmr = match vmr {
        Some((vmr_traj, vmr_dims)) => {
            trajectories_collide(vr, vr_dims, vmr_traj, vmr_dims)?.is_some()
        }
        None => false,
    };
    if hits_vmc && hits_vmr {
        return Ok(MergeGapClass::Infeasible);
    }
    let vr_end = vr.end().expect("non-empty checked above");
    let vmc_at_end = position_at(vmc_traj, vr_end.t);
    if !hits_vmc && vr_end.x > vmc_at_end {
        return Ok(MergeGapClass::AheadOfVmc);
    }
    let behind_vmr = match vmr {
        Some((vmr_traj, _)) => vr_end.x <= position_at(vmr_traj, vr_end.t),
        None => false,
    };
    if !hits_vmc && !hits_vmr && vr_end.x <= vmc_at_end && !behind_vmr {
        return Ok(MergeGapClass::BetweenVmcAndVmr);
    }
    Ok(MergeGapClass::Infeasible)
}

/// Longitudinal position at `t`, holding the boundary states outside the
/// sampled window.
fn position_at(traj: &Trajectory, t: f64) -> f64 {
    let first = traj.points.first().expect("trajectory must be non-empty");
    let last = traj.points.last().unwrap();
    if t <= first.t {
        return first.x;
    }
    if t >= last.t {
        return last.x;
    }
    let idx = ((t - first.t) / traj.dt).floor() as usize;
    let p = &traj.points[idx.min(traj.points.len() - 1)];
    let q = &traj.points[(idx + 1).min(traj.points.len() - 1)];
    let w = if q.t > p.t { (t - p.t) / (q.t - p.t) } else { 0.0 };
    p.x + w * (q.x - p.x)
}
