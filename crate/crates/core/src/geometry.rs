//! Planar geometry kernels used by the obstacle clearance constraint.

use crate::scalar::Scalar;

pub type Point2<T> = [T; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment<T> {
    pub start: Point2<T>,
    pub end: Point2<T>,
}

impl<T: Scalar> Segment<T> {
    pub fn new(start: Point2<T>, end: Point2<T>) -> Self {
        Self { start, end }
    }

    pub fn length(&self) -> T {
        distance(self.start, self.end)
    }

    /// Point at parameter `s ∈ [0, 1]` along the segment.
    pub fn lerp(&self, s: T) -> Point2<T> {
        [
            self.start[0] + s * (self.end[0] - self.start[0]),
            self.start[1] + s * (self.end[1] - self.start[1]),
        ]
    }
}

pub fn distance<T: Scalar>(a: Point2<T>, b: Point2<T>) -> T {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub fn norm<T: Scalar>(p: Point2<T>) -> T {
    p[0].hypot(p[1])
}

/// Euclidean distance from `point` to the closest point of `segment`
/// (projection clamped to the segment; degenerate segments act as points).
pub fn segment_point_distance<T: Scalar>(segment: &Segment<T>, point: Point2<T>) -> T {
    let dx = segment.end[0] - segment.start[0];
    let dy = segment.end[1] - segment.start[1];
    let len_sq = dx * dx + dy * dy;
    if len_sq <= T::zero() {
        return distance(segment.start, point);
    }
    let s = ((point[0] - segment.start[0]) * dx + (point[1] - segment.start[1]) * dy) / len_sq;
    let s = s.max(T::zero()).min(T::one());
    distance(segment.lerp(s), point)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perpendicular_foot_inside() {
        let seg = Segment::new([0.0, 0.0], [2.0, 0.0]);
        assert_eq!(segment_point_distance(&seg, [1.0, 1.0]), 1.0);
    }

    #[test]
    fn beyond_endpoint() {
        let seg = Segment::new([0.0, 0.0], [2.0, 0.0]);
        assert_eq!(segment_point_distance(&seg, [3.0, 0.0]), 1.0);
        assert_eq!(segment_point_distance(&seg, [-1.0, 0.0]), 1.0);
    }

    #[test]
    fn zero_length_segment() {
        let seg = Segment::new([1.0f64, 1.0], [1.0, 1.0]);
        assert!((segment_point_distance(&seg, [4.0, 5.0]) - 5.0).abs() < 1e-15);
    }

    fn dense_sampling(seg: &Segment<f64>, p: Point2<f64>) -> f64 {
        const SAMPLES: usize = 100_000;
        (0..=SAMPLES)
            .map(|i| distance(seg.lerp(i as f64 / SAMPLES as f64), p))
            .fold(f64::INFINITY, f64::min)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn matches_dense_sampling(
            ax in -3.0..3.0f64, ay in -3.0..3.0f64,
            bx in -3.0..3.0f64, by in -3.0..3.0f64,
            px in -3.0..3.0f64, py in -3.0..3.0f64,
        ) {
            let seg = Segment::new([ax, ay], [bx, by]);
            let exact = segment_point_distance(&seg, [px, py]);
            let brute = dense_sampling(&seg, [px, py]);
            prop_assert!(exact <= brute + 1e-12);
            prop_assert!((exact - brute).abs() <= 1e-4);
        }
    }
}
