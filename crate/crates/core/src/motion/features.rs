//! Residual terms of the motion NLP. Every term returns its rows and their
//! sparse Jacobian rows; the NLP decides whether rows are cost, equality or
//! inequality.

use nalgebra::{Point3, Vector3};

use crate::geometry::{Pose, Shape};
use crate::kinematics::FkResult;

/// Square root of the velocity regularizer weight.
pub const VELOCITY_WEIGHT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureKind {
    Cost,
    Eq,
    Ineq,
}

/// Axis-aligned top face of a support box in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceBox {
    pub top: f64,
    pub x: (f64, f64),
    pub y: (f64, f64),
}

/// What a touching point must coincide with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    Fixed(Vector3<f64>),
    /// Index of a 3-vector of border variables.
    Border(usize),
}

/// Steps are `-1, 0` (constants) and `1..=S` (variables).
pub type Step = isize;

#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Acceleration { t: Step },
    Velocity { t: Step },
    Smoothness { t: Step },
    JointLimit { t: Step },
    SurfaceHeight { t: Step, frame: usize, surface: SurfaceBox },
    SurfaceExtent { t: Step, frame: usize, surface: SurfaceBox },
    PointTouch { t: Step, frame: usize, target: Target },
    PointCoincide { t: Step, a: usize, b: usize },
    StancePin { t: Step, frame: usize },
    Clearance { t: Step, frame: usize, obstacle: Shape, pose: Pose, margin: f64 },
    PlaceHeight { border: usize, level: f64 },
    PlaceExtent { border: usize, surface: SurfaceBox },
    SeamPosition,
    SeamVelocity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feature {
    pub kind: FeatureKind,
    pub term: Term,
}

impl Feature {
    pub fn new(kind: FeatureKind, term: Term) -> Self {
        Self { kind, term }
    }

    pub fn dim(&self, dof: usize) -> usize {
        match self.term {
            Term::Acceleration { .. } | Term::Velocity { .. } | Term::Smoothness { .. } => dof,
            Term::JointLimit { .. } => 2 * dof,
            Term::SurfaceHeight { .. } | Term::PlaceHeight { .. } | Term::Clearance { .. } => 1,
            Term::SurfaceExtent { .. } | Term::PlaceExtent { .. } => 4,
            Term::PointTouch { .. } | Term::PointCoincide { .. } | Term::StancePin { .. } => 3,
            Term::SeamPosition | Term::SeamVelocity => dof,
        }
    }

    /// Steps whose forward kinematics the term needs.
    pub fn kinematic_steps(&self) -> Vec<Step> {
        match self.term {
            Term::SurfaceHeight { t, .. }
            | Term::SurfaceExtent { t, .. }
            | Term::PointTouch { t, .. }
            | Term::PointCoincide { t, .. }
            | Term::Clearance { t, .. } => vec![t],
            Term::StancePin { t, .. } => vec![t, t - 1],
            _ => Vec::new(),
        }
    }
}

/// Sparse row: `(column, value)` pairs.
pub type Row = Vec<(usize, f64)>;

/// Read access to the stacked variables plus the constant leading steps.
pub struct StepView<'a> {
    pub x: &'a [f64],
    pub dof: usize,
    /// `pre[0]` is step -1, `pre[1]` is step 0.
    pub pre: &'a [Vec<f64>; 2],
    pub limits: &'a [(f64, f64)],
    /// Column of the first border variable.
    pub border_offset: usize,
    pub seam: Option<&'a [Vec<f64>; 2]>,
}

impl StepView<'_> {
    pub fn q(&self, t: Step) -> &[f64] {
        if t <= 0 {
            &self.pre[(t + 1) as usize]
        } else {
            let o = (t as usize - 1) * self.dof;
            &self.x[o..o + self.dof]
        }
    }

    pub fn col(&self, t: Step, i: usize) -> Option<usize> {
        (t >= 1).then(|| (t as usize - 1) * self.dof + i)
    }

    fn border(&self, b: usize) -> Vector3<f64> {
        let o = self.border_offset + 3 * b;
        Vector3::new(self.x[o], self.x[o + 1], self.x[o + 2])
    }
}

/// Forward kinematics per step, computed on demand.
pub trait KinematicsAt {
    fn at(&self, t: Step) -> &FkResult;
    fn point_jacobian(&self, t: Step, frame: usize) -> Vec<(usize, Vector3<f64>)>;
}

fn push_vec_rows(rows: &mut Vec<Row>, jac: &[(usize, Vector3<f64>)], scale: f64, v: &StepView, t: Step) {
    for axis in 0..3 {
        let row: Row = jac
            .iter()
            .filter_map(|(j, c)| v.col(t, *j).map(|col| (col, scale * c[axis])))
            .collect();
        rows.push(row);
    }
}

fn position(fk: &FkResult, frame: usize) -> Vector3<f64> {
    fk.poses[frame].translation.vector
}

/// Appends the term's values to `out` and its Jacobian rows to `jac`.
pub fn evaluate_term(term: &Term, v: &StepView, kin: &dyn KinematicsAt, out: &mut Vec<f64>, jac: &mut Vec<Row>) {
    let n = v.dof;
    match term {
        Term::Acceleration { t } => {
            let (a, b, c) = (v.q(*t), v.q(t - 1), v.q(t - 2));
            for i in 0..n {
                out.push(a[i] - 2.0 * b[i] + c[i]);
                let mut row = Row::new();
                for (s, w) in [(*t, 1.0), (t - 1, -2.0), (t - 2, 1.0)] {
                    if let Some(col) = v.col(s, i) {
                        row.push((col, w));
                    }
                }
                jac.push(row);
            }
        }
        Term::Velocity { t } | Term::Smoothness { t } => {
            let w = if matches!(term, Term::Velocity { .. }) { VELOCITY_WEIGHT } else { 1.0 };
            let (a, b) = (v.q(*t), v.q(t - 1));
            for i in 0..n {
                out.push(w * (a[i] - b[i]));
                let mut row = Row::new();
                if let Some(col) = v.col(*t, i) {
                    row.push((col, w));
                }
                if let Some(col) = v.col(t - 1, i) {
                    row.push((col, -w));
                }
                jac.push(row);
            }
        }
        Term::JointLimit { t } => {
            let q = v.q(*t);
            for i in 0..n {
                let (lo, hi) = v.limits[i];
                out.push(lo - q[i]);
                jac.push(v.col(*t, i).map(|c| vec![(c, -1.0)]).unwrap_or_default());
                out.push(q[i] - hi);
                jac.push(v.col(*t, i).map(|c| vec![(c, 1.0)]).unwrap_or_default());
            }
        }
        Term::SurfaceHeight { t, frame, surface } => {
            let p = position(kin.at(*t), *frame);
            out.push(p.z - surface.top);
            let j = kin.point_jacobian(*t, *frame);
            jac.push(j.iter().filter_map(|(k, c)| v.col(*t, *k).map(|col| (col, c.z))).collect());
        }
        Term::SurfaceExtent { t, frame, surface } => {
            let p = position(kin.at(*t), *frame);
            let j = kin.point_jacobian(*t, *frame);
            extent_rows(p, surface, out, jac, |axis, sign| {
                j.iter().filter_map(|(k, c)| v.col(*t, *k).map(|col| (col, sign * c[axis]))).collect()
            });
        }
        Term::PointTouch { t, frame, target } => {
            let p = position(kin.at(*t), *frame);
            let j = kin.point_jacobian(*t, *frame);
            let start = jac.len();
            push_vec_rows(jac, &j, 1.0, v, *t);
            let goal = match target {
                Target::Fixed(g) => *g,
                Target::Border(b) => {
                    for axis in 0..3 {
                        jac[start + axis].push((v.border_offset + 3 * b + axis, -1.0));
                    }
                    v.border(*b)
                }
            };
            out.extend((p - goal).iter());
        }
        Term::PointCoincide { t, a, b } => {
            let fk = kin.at(*t);
            out.extend((position(fk, *a) - position(fk, *b)).iter());
            let ja = kin.point_jacobian(*t, *a);
            let jb = kin.point_jacobian(*t, *b);
            let mut merged: Vec<(usize, Vector3<f64>)> = ja;
            for (k, c) in jb {
                match merged.iter_mut().find(|(m, _)| *m == k) {
                    Some(e) => e.1 -= c,
                    None => merged.push((k, -c)),
                }
            }
            push_vec_rows(jac, &merged, 1.0, v, *t);
        }
        Term::StancePin { t, frame } => {
            let now = position(kin.at(*t), *frame);
            let before = position(kin.at(t - 1), *frame);
            out.extend((now - before).iter());
            let start = jac.len();
            push_vec_rows(jac, &kin.point_jacobian(*t, *frame), 1.0, v, *t);
            let mut prev = Vec::new();
            push_vec_rows(&mut prev, &kin.point_jacobian(t - 1, *frame), -1.0, v, t - 1);
            for (axis, row) in prev.into_iter().enumerate() {
                jac[start + axis].extend(row);
            }
        }
        Term::Clearance { t, frame, obstacle, pose, margin } => {
            let p = position(kin.at(*t), *frame);
            let (d, g) = obstacle.signed_distance_grad(pose, &Point3::from(p));
            out.push(margin - d);
            let j = kin.point_jacobian(*t, *frame);
            jac.push(j.iter().filter_map(|(k, c)| v.col(*t, *k).map(|col| (col, -g.dot(c)))).collect());
        }
        Term::PlaceHeight { border, level } => {
            let b = v.border(*border);
            out.push(b.z - level);
            jac.push(vec![(v.border_offset + 3 * border + 2, 1.0)]);
        }
        Term::PlaceExtent { border, surface } => {
            let b = v.border(*border);
            let o = v.border_offset + 3 * border;
            extent_rows(b, surface, out, jac, |axis, sign| vec![(o + axis, sign)]);
        }
        Term::SeamPosition => {
            let seam = v.seam.expect("seam term requires a prefix");
            let q0 = v.q(0);
            for i in 0..n {
                out.push(q0[i] - seam[1][i]);
                jac.push(Row::new());
            }
        }
        Term::SeamVelocity => {
            let seam = v.seam.expect("seam term requires a prefix");
            let (q0, qm) = (v.q(0), v.q(-1));
            for i in 0..n {
                out.push((q0[i] - qm[i]) - (seam[1][i] - seam[0][i]));
                jac.push(Row::new());
            }
        }
    }
}

/// `lo - p <= 0` and `p - hi <= 0` on x and y.
fn extent_rows(
    p: Vector3<f64>,
    s: &SurfaceBox,
    out: &mut Vec<f64>,
    jac: &mut Vec<Row>,
    row: impl Fn(usize, f64) -> Row,
) {
    out.push(s.x.0 - p.x);
    jac.push(row(0, -1.0));
    out.push(p.x - s.x.1);
    jac.push(row(0, 1.0));
    out.push(s.y.0 - p.y);
    jac.push(row(1, -1.0));
    out.push(p.y - s.y.1);
    jac.push(row(1, 1.0));
}
