//! Primitive shapes and the distance queries used by heuristics and NLP
//! features.

use nalgebra::{Isometry3, Point3, UnitQuaternion, Vector3};

pub type Pose = Isometry3<f64>;

/// Collision primitive. Box sizes are full edge lengths; capsules are
/// aligned with the local z axis and `length` excludes the caps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Box { size: Vector3<f64> },
    Sphere { radius: f64 },
    Capsule { radius: f64, length: f64 },
}

impl Shape {
    pub fn cuboid(x: f64, y: f64, z: f64) -> Self {
        Shape::Box { size: Vector3::new(x, y, z) }
    }

    /// Signed distance from a world point to the shape surface (negative inside).
    pub fn signed_distance(&self, pose: &Pose, p: &Point3<f64>) -> f64 {
        let local = pose.inverse_transform_point(p);
        match *self {
            Shape::Sphere { radius } => local.coords.norm() - radius,
            Shape::Capsule { radius, length } => {
                let z = local.z.clamp(-length / 2.0, length / 2.0);
                (local.coords - Vector3::new(0.0, 0.0, z)).norm() - radius
            }
            Shape::Box { size } => box_signed_distance(&(size / 2.0), &local.coords).0,
        }
    }

    /// Signed distance and its gradient w.r.t. the world point.
    pub fn signed_distance_grad(&self, pose: &Pose, p: &Point3<f64>) -> (f64, Vector3<f64>) {
        let local = pose.inverse_transform_point(p);
        let (d, g_local) = match *self {
            Shape::Sphere { radius } => {
                let n = local.coords.norm();
                let g = if n > 1e-12 { local.coords / n } else { Vector3::z() };
                (n - radius, g)
            }
            Shape::Capsule { radius, length } => {
                let z = local.z.clamp(-length / 2.0, length / 2.0);
                let v = local.coords - Vector3::new(0.0, 0.0, z);
                let n = v.norm();
                let g = if n > 1e-12 { v / n } else { Vector3::x() };
                (n - radius, g)
            }
            Shape::Box { size } => box_signed_distance(&(size / 2.0), &local.coords),
        };
        (d, pose.rotation * g_local)
    }

    /// Points spread over the surface, used by the sampled distance fallback.
    fn surface_samples(&self, pose: &Pose, per_edge: usize) -> Vec<Point3<f64>> {
        let mut pts = Vec::new();
        let n = per_edge.max(2);
        let lin = |i: usize| -1.0 + 2.0 * i as f64 / (n - 1) as f64;
        match *self {
            Shape::Box { size } => {
                let h = size / 2.0;
                for axis in 0..3 {
                    let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
                    for sign in [-1.0, 1.0] {
                        for i in 0..n {
                            for j in 0..n {
                                let mut c = Vector3::zeros();
                                c[axis] = sign * h[axis];
                                c[u] = lin(i) * h[u];
                                c[v] = lin(j) * h[v];
                                pts.push(pose * Point3::from(c));
                            }
                        }
                    }
                }
            }
            Shape::Sphere { radius } | Shape::Capsule { radius, .. } => {
                let half = if let Shape::Capsule { length, .. } = *self { length / 2.0 } else { 0.0 };
                for i in 0..n {
                    let theta = std::f64::consts::PI * i as f64 / (n - 1) as f64;
                    for j in 0..2 * n {
                        let phi = std::f64::consts::PI * j as f64 / n as f64;
                        let d = Vector3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos());
                        let off = if d.z >= 0.0 { half } else { -half };
                        pts.push(pose * Point3::from(d * radius + Vector3::new(0.0, 0.0, off)));
                    }
                }
            }
        }
        pts
    }
}

/// Signed distance of a point to an origin-centred box and its gradient.
fn box_signed_distance(half: &Vector3<f64>, p: &Vector3<f64>) -> (f64, Vector3<f64>) {
    let q = p.abs() - half;
    let outside = Vector3::new(q.x.max(0.0), q.y.max(0.0), q.z.max(0.0));
    let out_n = outside.norm();
    if out_n > 0.0 {
        let g = Vector3::new(
            outside.x * p.x.signum(),
            outside.y * p.y.signum(),
            outside.z * p.z.signum(),
        ) / out_n;
        (out_n, g)
    } else {
        // inside: distance to the nearest face
        let (mut axis, mut best) = (0, q.x);
        for k in 1..3 {
            if q[k] > best {
                best = q[k];
                axis = k;
            }
        }
        let mut g = Vector3::zeros();
        g[axis] = if p[axis] >= 0.0 { 1.0 } else { -1.0 };
        (best, g)
    }
}

fn same_rotation(a: &UnitQuaternion<f64>, b: &UnitQuaternion<f64>) -> bool {
    a.angle_to(b) < 1e-9
}

/// Closest distance between segments [p0,p1] and [q0,q1].
fn segment_segment(p0: &Point3<f64>, p1: &Point3<f64>, q0: &Point3<f64>, q1: &Point3<f64>) -> f64 {
    let d1 = p1 - p0;
    let d2 = q1 - q0;
    let r = p0 - q0;
    let a = d1.dot(&d1);
    let e = d2.dot(&d2);
    let f = d2.dot(&r);
    let (s, t);
    if a <= 1e-15 && e <= 1e-15 {
        return r.norm();
    }
    if a <= 1e-15 {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= 1e-15 {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > 1e-15 { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    ((p0 + d1 * s) - (q0 + d2 * t)).norm()
}

fn capsule_segment(pose: &Pose, length: f64) -> (Point3<f64>, Point3<f64>) {
    (
        pose * Point3::new(0.0, 0.0, -length / 2.0),
        pose * Point3::new(0.0, 0.0, length / 2.0),
    )
}

/// Separation between two posed shapes, clamped at zero when they overlap.
///
/// Sphere and capsule pairs, sphere/capsule against boxes (via the box's
/// signed distance field) and mutually aligned boxes are exact. Rotated box
/// pairs fall back to surface sampling.
pub fn shape_distance(a: &Shape, pa: &Pose, b: &Shape, pb: &Pose) -> f64 {
    use Shape::*;
    let d = match (a, b) {
        (Sphere { radius }, other) => other.signed_distance(pb, &Point3::from(pa.translation.vector)) - radius,
        (other, Sphere { radius }) => other.signed_distance(pa, &Point3::from(pb.translation.vector)) - radius,
        (Capsule { radius: ra, length: la }, Capsule { radius: rb, length: lb }) => {
            let (p0, p1) = capsule_segment(pa, *la);
            let (q0, q1) = capsule_segment(pb, *lb);
            segment_segment(&p0, &p1, &q0, &q1) - ra - rb
        }
        (Capsule { radius, length }, bx @ Box { .. }) => capsule_box(*radius, *length, pa, bx, pb),
        (bx @ Box { .. }, Capsule { radius, length }) => capsule_box(*radius, *length, pb, bx, pa),
        (Box { size: sa }, Box { size: sb }) => {
            if same_rotation(&pa.rotation, &pb.rotation) {
                let rel = pa.inverse_transform_point(&Point3::from(pb.translation.vector));
                let gap = rel.coords.abs() - (sa + sb) / 2.0;
                let g = Vector3::new(gap.x.max(0.0), gap.y.max(0.0), gap.z.max(0.0));
                g.norm()
            } else {
                sampled(a, pa, b, pb)
            }
        }
    };
    d.max(0.0)
}

fn capsule_box(radius: f64, length: f64, pc: &Pose, bx: &Shape, pb: &Pose) -> f64 {
    // the signed distance along the segment is convex for a box; golden-section search
    let (p0, p1) = capsule_segment(pc, length);
    let f = |s: f64| bx.signed_distance(pb, &(p0 + (p1 - p0) * s));
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if f(m1) < f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    f(0.5 * (lo + hi)).min(f(0.0)).min(f(1.0)) - radius
}

fn sampled(a: &Shape, pa: &Pose, b: &Shape, pb: &Pose) -> f64 {
    let from_b = b
        .surface_samples(pb, 24)
        .iter()
        .map(|p| a.signed_distance(pa, p))
        .fold(f64::INFINITY, f64::min);
    let from_a = a
        .surface_samples(pa, 24)
        .iter()
        .map(|p| b.signed_distance(pb, p))
        .fold(f64::INFINITY, f64::min);
    from_a.min(from_b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Translation3;

    fn at(x: f64, y: f64, z: f64) -> Pose {
        Pose::from_parts(Translation3::new(x, y, z), UnitQuaternion::identity())
    }

    #[test]
    fn aligned_boxes_diagonal_gap() {
        let b = Shape::cuboid(0.6, 0.6, 0.6);
        // gaps of 0.3 along x and z
        let d = shape_distance(&b, &at(0.0, 0.0, 0.0), &b, &at(0.9, 0.0, 0.9));
        assert_relative_eq!(d, (0.18f64).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn overlap_clamps_to_zero() {
        let b = Shape::cuboid(1.0, 1.0, 1.0);
        assert_eq!(shape_distance(&b, &at(0.0, 0.0, 0.0), &b, &at(0.2, 0.0, 0.0)), 0.0);
        let s = Shape::Sphere { radius: 0.1 };
        assert_eq!(shape_distance(&s, &at(0.0, 0.0, 0.0), &b, &at(0.0, 0.0, 0.0)), 0.0);
    }

    #[test]
    fn identical_frames_are_zero_apart() {
        let s = Shape::Capsule { radius: 0.1, length: 0.5 };
        assert_eq!(shape_distance(&s, &at(1.0, 2.0, 3.0), &s, &at(1.0, 2.0, 3.0)), 0.0);
    }

    #[test]
    fn sphere_to_box_corner() {
        let b = Shape::cuboid(2.0, 2.0, 2.0);
        let s = Shape::Sphere { radius: 0.5 };
        let d = shape_distance(&s, &at(2.0, 2.0, 1.0), &b, &at(0.0, 0.0, 0.0));
        assert_relative_eq!(d, 2f64.sqrt() - 0.5, epsilon = 1e-12);
    }

    #[test]
    fn capsule_pairs() {
        let c = Shape::Capsule { radius: 0.1, length: 1.0 };
        // parallel capsules 1 m apart along x
        let d = shape_distance(&c, &at(0.0, 0.0, 0.0), &c, &at(1.0, 0.0, 0.0));
        assert_relative_eq!(d, 0.8, epsilon = 1e-12);
        let b = Shape::cuboid(1.0, 1.0, 1.0);
        let d = shape_distance(&c, &at(0.0, 0.0, 0.0), &b, &at(2.0, 0.0, 0.0));
        assert_relative_eq!(d, 1.4, epsilon = 1e-6);
    }

    #[test]
    fn rotated_boxes_use_sampling() {
        let b = Shape::cuboid(1.0, 1.0, 1.0);
        let rot = Pose::from_parts(
            Translation3::new(3.0, 0.0, 0.0),
            UnitQuaternion::from_axis_angle(&Vector3::z_axis(), std::f64::consts::FRAC_PI_4),
        );
        // the rotated box's corner points at the other box: 3 - 0.5 - sqrt(2)/2
        let d = shape_distance(&b, &at(0.0, 0.0, 0.0), &b, &rot);
        assert!((d - (2.5 - 0.5f64.sqrt())).abs() < 2e-2, "{d}");
    }

    #[test]
    fn box_sdf_gradient_matches_finite_differences() {
        let b = Shape::cuboid(0.6, 0.4, 0.2);
        let pose = Pose::from_parts(
            Translation3::new(0.1, -0.2, 0.3),
            UnitQuaternion::from_euler_angles(0.3, -0.2, 0.7),
        );
        for p in [Point3::new(1.0, 0.4, 0.9), Point3::new(0.12, -0.19, 0.31), Point3::new(-0.5, 0.0, 0.3)] {
            let (_, g) = b.signed_distance_grad(&pose, &p);
            let h = 1e-6;
            for k in 0..3 {
                let mut pp = p;
                let mut pm = p;
                pp[k] += h;
                pm[k] -= h;
                let fd = (b.signed_distance(&pose, &pp) - b.signed_distance(&pose, &pm)) / (2.0 * h);
                assert_relative_eq!(g[k], fd, epsilon = 1e-6);
            }
        }
    }
}
