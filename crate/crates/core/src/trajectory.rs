//! Clamped cubic-spline joint trajectories on a uniform knot grid, and the
//! packing of interior knots into the optimizer's decision vector.

use serde::{Deserialize, Serialize};

use crate::dynamics::JointState;
use crate::error::{Error, Result};
use crate::scalar::{Scalar, Vec3};

/// Uniform knot times `t0, t0 + Δ, …, tf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnotGrid<T> {
    pub t0: T,
    pub tf: T,
    pub knot_spacing: T,
}

impl<T: Scalar> Default for KnotGrid<T> {
    /// 30 s horizon with 1 s knot spacing.
    fn default() -> Self {
        Self {
            t0: T::zero(),
            tf: T::lit(30.0),
            knot_spacing: T::one(),
        }
    }
}

impl<T: Scalar> KnotGrid<T> {
    pub fn new(t0: T, tf: T, knot_spacing: T) -> Result<Self> {
        let grid = Self { t0, tf, knot_spacing };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t0.is_finite() && self.tf.is_finite() && self.knot_spacing.is_finite()) {
            return Err(Error::NonFinite("knot grid"));
        }
        if !(self.tf > self.t0) || !(self.knot_spacing > T::zero()) {
            return Err(Error::InvalidParameter(
                "knot grid needs tf > t0 and positive spacing".into(),
            ));
        }
        let ratio = (self.tf - self.t0) / self.knot_spacing;
        if (ratio - ratio.round()).abs() > T::lit(1e-9) * ratio.max(T::one()) {
            return Err(Error::InvalidParameter(
                "horizon is not an integer multiple of the knot spacing".into(),
            ));
        }
        Ok(())
    }

    pub fn num_segments(&self) -> usize {
        ((self.tf - self.t0) / self.knot_spacing)
            .round()
            .to_usize()
            .unwrap_or(0)
    }

    pub fn num_knots(&self) -> usize {
        self.num_segments() + 1
    }

    pub fn knot_time(&self, i: usize) -> T {
        self.t0 + T::from_usize(i).unwrap() * self.knot_spacing
    }

    pub fn knot_times(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.num_knots()).map(move |i| self.knot_time(i))
    }

    pub fn contains(&self, t: T) -> bool {
        let slack = T::lit(1e-12) * (T::one() + self.tf.abs());
        t >= self.t0 - slack && t <= self.tf + slack
    }

    pub fn midpoint(&self) -> T {
        (self.t0 + self.tf) * T::half()
    }
}

/// One-dimensional clamped cubic spline (zero end slopes) on a uniform grid,
/// stored as per-segment polynomials in the local parameter `u ∈ [0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline<T> {
    t0: T,
    spacing: T,
    /// `[a, b, c, d]` with `q(u) = a + b u + c u² + d u³`.
    segments: Vec<[T; 4]>,
}

impl<T: Scalar> CubicSpline<T> {
    /// Fits the clamped spline through `values` sampled at `t0 + i·spacing`.
    pub fn clamped(t0: T, spacing: T, values: &[T]) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: values.len(),
            });
        }
        let slopes = clamped_slopes(spacing, values);
        let h = spacing;
        let three = T::lit(3.0);
        let segments = values
            .windows(2)
            .zip(slopes.windows(2))
            .map(|(y, s)| {
                let (y0, y1, s0, s1) = (y[0], y[1], s[0], s[1]);
                [
                    y0,
                    h * s0,
                    three * (y1 - y0) - h * (T::two() * s0 + s1),
                    T::two() * (y0 - y1) + h * (s0 + s1),
                ]
            })
            .collect();
        Ok(Self {
            t0,
            spacing,
            segments,
        })
    }

    #[inline]
    fn locate(&self, t: T) -> (usize, T) {
        let x = ((t - self.t0) / self.spacing).max(T::zero());
        let last = self.segments.len() - 1;
        let idx = x.floor().to_usize().unwrap_or(0).min(last);
        (idx, x - T::from_usize(idx).unwrap())
    }

    /// Value, first and second derivative at `t` (clamped to the grid).
    #[inline]
    pub fn eval(&self, t: T) -> (T, T, T) {
        let (idx, u) = self.locate(t);
        self.eval_segment(idx, u)
    }

    #[inline]
    pub(crate) fn eval_segment(&self, idx: usize, u: T) -> (T, T, T) {
        let [a, b, c, d] = self.segments[idx];
        let h = self.spacing;
        let (two, three, six) = (T::two(), T::lit(3.0), T::lit(6.0));
        let q = a + u * (b + u * (c + u * d));
        let dq = (b + u * (two * c + three * d * u)) / h;
        let ddq = (two * c + six * d * u) / (h * h);
        (q, dq, ddq)
    }
}

/// Knot slopes of the clamped spline: `s_{i−1} + 4 s_i + s_{i+1} = 3 (y_{i+1} − y_{i−1}) / h`
/// with `s_0 = s_n = 0`, solved by the Thomas algorithm.
fn clamped_slopes<T: Scalar>(h: T, y: &[T]) -> Vec<T> {
    let n = y.len() - 1;
    let mut s = vec![T::zero(); n + 1];
    if n < 2 {
        return s;
    }
    let three = T::lit(3.0);
    let four = T::lit(4.0);
    let interior = n - 1;
    let mut c_prime = vec![T::zero(); interior];
    let mut d_prime = vec![T::zero(); interior];
    for k in 0..interior {
        let i = k + 1;
        let rhs = three * (y[i + 1] - y[i - 1]) / h;
        if k == 0 {
            c_prime[0] = T::one() / four;
            d_prime[0] = rhs / four;
        } else {
            let denom = four - c_prime[k - 1];
            c_prime[k] = T::one() / denom;
            d_prime[k] = (rhs - d_prime[k - 1]) / denom;
        }
    }
    s[interior] = d_prime[interior - 1];
    for k in (0..interior - 1).rev() {
        s[k + 1] = d_prime[k] - c_prime[k] * s[k + 2];
    }
    s
}

/// Per-joint clamped cubic splines through a matrix of knot angles.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTrajectory<T> {
    grid: KnotGrid<T>,
    knots: Vec<Vec3<T>>,
    splines: [CubicSpline<T>; 3],
}

/// Fits clamped splines through `knots` (one row per knot time).
pub fn fit_spline<T: Scalar>(grid: KnotGrid<T>, knots: Vec<Vec3<T>>) -> Result<JointTrajectory<T>> {
    grid.validate()?;
    if knots.len() != grid.num_knots() {
        return Err(Error::DimensionMismatch {
            expected: grid.num_knots(),
            found: knots.len(),
        });
    }
    if knots.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("knot angles"));
    }
    let column = |j: usize| knots.iter().map(|row| row[j]).collect::<Vec<_>>();
    let spline = |j: usize| CubicSpline::clamped(grid.t0, grid.knot_spacing, &column(j));
    let splines = [spline(0)?, spline(1)?, spline(2)?];
    Ok(JointTrajectory {
        grid,
        knots,
        splines,
    })
}

impl<T: Scalar> JointTrajectory<T> {
    pub fn grid(&self) -> &KnotGrid<T> {
        &self.grid
    }

    pub fn knots(&self) -> &[Vec3<T>] {
        &self.knots
    }

    /// State at `t`; fails outside `[t0, tf]`.
    pub fn eval(&self, t: T) -> Result<JointState<T>> {
        if !self.grid.contains(t) {
            return Err(Error::OutOfHorizon {
                t: t.to_f64().unwrap_or(f64::NAN),
                t0: self.grid.t0.to_f64().unwrap_or(f64::NAN),
                tf: self.grid.tf.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(self.eval_clamped(t))
    }

    /// State at `t` with `t` clamped into the horizon.
    #[inline]
    pub fn eval_clamped(&self, t: T) -> JointState<T> {
        let (idx, u) = self.splines[0].locate(t);
        let mut state = JointState::default();
        for (j, spline) in self.splines.iter().enumerate() {
            let (q, dq, ddq) = spline.eval_segment(idx, u);
            state.q[j] = q;
            state.qdot[j] = dq;
            state.qddot[j] = ddq;
        }
        state
    }

    pub fn positions(&self, t: T) -> Vec3<T> {
        self.eval_clamped(t).q
    }

    pub fn start(&self) -> Vec3<T> {
        self.knots[0]
    }

    pub fn end(&self) -> Vec3<T> {
        *self.knots.last().unwrap()
    }

    pub fn decision_dim(&self) -> usize {
        (self.knots.len() - 2) * 3
    }
}

/// Interior knot angles flattened row-major: entry `3·i + j` is knot `i + 1`, joint `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionVector<T>(pub Vec<T>);

impl<T: Scalar> DecisionVector<T> {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }
}

pub fn pack<T: Scalar>(traj: &JointTrajectory<T>) -> DecisionVector<T> {
    let n = traj.knots.len();
    DecisionVector(traj.knots[1..n - 1].iter().flatten().copied().collect())
}

/// Rebuilds a trajectory from interior knots, keeping the template's boundary knots.
pub fn unpack<T: Scalar>(x: &[T], template: &JointTrajectory<T>) -> Result<JointTrajectory<T>> {
    if x.len() != template.decision_dim() {
        return Err(Error::DimensionMismatch {
            expected: template.decision_dim(),
            found: x.len(),
        });
    }
    let mut knots = template.knots.clone();
    let n = knots.len();
    for (row, chunk) in knots[1..n - 1].iter_mut().zip(x.chunks_exact(3)) {
        row.copy_from_slice(chunk);
    }
    fit_spline(template.grid, knots)
}

/// Joint-space waypoint used to build the baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointWaypoint<T> {
    pub time: T,
    pub q: Vec3<T>,
}

/// Unoptimized trajectory: knots linearly interpolated in joint space
/// between consecutive waypoints (start, vias, goal) proportionally in time,
/// then spline-fitted with clamped ends.
pub fn baseline_trajectory<T: Scalar>(
    start_q: Vec3<T>,
    goal_q: Vec3<T>,
    vias: &[JointWaypoint<T>],
    grid: KnotGrid<T>,
) -> Result<JointTrajectory<T>> {
    grid.validate()?;
    let mut waypoints = Vec::with_capacity(vias.len() + 2);
    waypoints.push(JointWaypoint { time: grid.t0, q: start_q });
    waypoints.extend_from_slice(vias);
    waypoints.push(JointWaypoint { time: grid.tf, q: goal_q });
    for pair in waypoints.windows(2) {
        if !(pair[1].time >= pair[0].time) {
            return Err(Error::InvalidParameter("waypoint times must be ordered".into()));
        }
    }
    let knots = grid
        .knot_times()
        .map(|t| interpolate_waypoints(&waypoints, t))
        .collect();
    fit_spline(grid, knots)
}

fn interpolate_waypoints<T: Scalar>(waypoints: &[JointWaypoint<T>], t: T) -> Vec3<T> {
    let seg = waypoints
        .windows(2)
        .find(|w| t <= w[1].time)
        .unwrap_or(&waypoints[waypoints.len() - 2..]);
    let (a, b) = (seg[0], seg[1]);
    let span = b.time - a.time;
    if span <= T::zero() {
        return b.q;
    }
    let s = ((t - a.time) / span).max(T::zero()).min(T::one());
    if s >= T::one() {
        return b.q;
    }
    let mut q = a.q;
    for j in 0..3 {
        q[j] = a.q[j] + s * (b.q[j] - a.q[j]);
    }
    q
}
