use crate::geometry::{Point2, Segment};
use crate::scalar::{Scalar, Vec3};

use super::ArmParams;

/// Joint origins `p_0 = (0, 0)`, `p_1`, `p_2` and the end effector `p_3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainPoints<T> {
    pub points: [Point2<T>; 4],
}

impl<T: Scalar> ChainPoints<T> {
    pub fn end_effector(&self) -> Point2<T> {
        self.points[3]
    }
}

/// Absolute link angles Θ_i = q_1 + … + q_i.
#[inline]
pub(crate) fn absolute_angles<T: Scalar>(q: &Vec3<T>) -> Vec3<T> {
    let t1 = q[0];
    let t2 = t1 + q[1];
    [t1, t2, t2 + q[2]]
}

pub fn forward_kinematics<T: Scalar>(params: &ArmParams<T>, q: &Vec3<T>) -> ChainPoints<T> {
    let theta = absolute_angles(q);
    let mut points = [[T::zero(); 2]; 4];
    for i in 0..3 {
        let (s, c) = theta[i].sin_cos();
        let l = params.link_lengths[i];
        points[i + 1] = [points[i][0] + l * c, points[i][1] + l * s];
    }
    ChainPoints { points }
}

pub fn end_effector<T: Scalar>(params: &ArmParams<T>, q: &Vec3<T>) -> Point2<T> {
    forward_kinematics(params, q).end_effector()
}

/// ∂(end effector)/∂q as a 2×3 matrix (rows x, y).
pub fn jacobian<T: Scalar>(params: &ArmParams<T>, q: &Vec3<T>) -> [[T; 3]; 2] {
    let theta = absolute_angles(q);
    let mut jac = [[T::zero(); 3]; 2];
    for i in 0..3 {
        for j in i..3 {
            let (s, c) = theta[j].sin_cos();
            let l = params.link_lengths[j];
            jac[0][i] = jac[0][i] - l * s;
            jac[1][i] = jac[1][i] + l * c;
        }
    }
    jac
}

/// The three links as segments `(p_{i−1}, p_i)`.
pub fn link_segments<T: Scalar>(params: &ArmParams<T>, q: &Vec3<T>) -> [Segment<T>; 3] {
    let p = forward_kinematics(params, q).points;
    [
        Segment::new(p[0], p[1]),
        Segment::new(p[1], p[2]),
        Segment::new(p[2], p[3]),
    ]
}

fn wrap_angle<T: Scalar>(a: T) -> T {
    let two_pi = T::two() * T::PI();
    let mut w = a % two_pi;
    if w > T::PI() {
        w = w - two_pi;
    } else if w < -T::PI() {
        w = w + two_pi;
    }
    w
}

/// Elbow-up inverse kinematics with the last link at absolute angle
/// `orientation`. The wrist point `target − L_3·(cos φ, sin φ)` is solved as a
/// two-link problem taking `q_2 = −acos(c_2)`, so the elbow sits on the
/// counter-clockwise side of the base→wrist line. Angles are wrapped to
/// [−π, π]. Returns `None` when the wrist point is out of the two-link
/// annulus.
pub fn elbow_up_ik<T: Scalar>(
    params: &ArmParams<T>,
    target: Point2<T>,
    orientation: T,
) -> Option<Vec3<T>> {
    let [l1, l2, l3] = params.link_lengths;
    let (s, c) = orientation.sin_cos();
    let wx = target[0] - l3 * c;
    let wy = target[1] - l3 * s;
    let r_sq = wx * wx + wy * wy;
    let c2 = (r_sq - l1 * l1 - l2 * l2) / (T::two() * l1 * l2);
    let slack = T::lit(1e-12);
    if !c2.is_finite() || c2 > T::one() + slack || c2 < -T::one() - slack {
        return None;
    }
    let q2 = -c2.max(-T::one()).min(T::one()).acos();
    let q1 = wy.atan2(wx) - (l2 * q2.sin()).atan2(l1 + l2 * q2.cos());
    let q3 = orientation - q1 - q2;
    Some([wrap_angle(q1), wrap_angle(q2), wrap_angle(q3)])
}
