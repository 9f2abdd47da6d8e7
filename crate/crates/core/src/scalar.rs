//! Scalar abstraction shared by the kinematics, dynamics, spline and
//! geometry code.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type the arm math is generic over (`f32` or `f64`).
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn two() -> Self {
        Self::one() + Self::one()
    }

    #[inline]
    fn half() -> Self {
        Self::lit(0.5)
    }
}

impl<T> Scalar for T where
    T: Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

/// Joint-space vector of the 3R arm.
pub type Vec3<T> = [T; 3];

/// Row-major 3×3 matrix.
pub type Mat3<T> = [[T; 3]; 3];

pub(crate) fn zeros3<T: Scalar>() -> Vec3<T> {
    [T::zero(); 3]
}

pub(crate) fn mat_vec<T: Scalar>(m: &Mat3<T>, v: &Vec3<T>) -> Vec3<T> {
    let mut out = zeros3();
    for (row, o) in m.iter().zip(out.iter_mut()) {
        *o = row[0] * v[0] + row[1] * v[1] + row[2] * v[2];
    }
    out
}

pub(crate) fn dot3<T: Scalar>(a: &Vec3<T>, b: &Vec3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Cholesky factor `L` with `m = L Lᵀ`, or `None` if `m` is not numerically
/// positive definite.
pub fn cholesky3<T: Scalar>(m: &Mat3<T>) -> Option<Mat3<T>> {
    let mut l = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..=i {
            let mut sum = m[i][j];
            for k in 0..j {
                sum = sum - l[i][k] * l[j][k];
            }
            if i == j {
                if !(sum > T::zero()) || !sum.is_finite() {
                    return None;
                }
                l[i][i] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    Some(l)
}

/// Solves `L Lᵀ x = b` given the Cholesky factor.
pub fn cholesky_solve3<T: Scalar>(l: &Mat3<T>, b: &Vec3<T>) -> Vec3<T> {
    let mut y = zeros3();
    for i in 0..3 {
        let mut s = b[i];
        for k in 0..i {
            s = s - l[i][k] * y[k];
        }
        y[i] = s / l[i][i];
    }
    let mut x = zeros3();
    for i in (0..3).rev() {
        let mut s = y[i];
        for k in (i + 1)..3 {
            s = s - l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    x
}
