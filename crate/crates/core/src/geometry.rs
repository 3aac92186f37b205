//! Analytic description of a smooth planar boundary Γ = ∂Ω.
//!
//! A boundary is given by its signed distance function `d` (negative inside
//! Ω). Everything else derives from it inside the tubular neighborhood
//! `|d| < δ_Γ`: the orthogonal projection `b(x) = x − d(x)∇d(x)`, the unit
//! normal `∇d` and the Weingarten map `D²d`.
//!
//! Implementors must provide [`SmoothBoundary::signed_distance`] and
//! [`SmoothBoundary::distance_gradient`]. The Weingarten map falls back to
//! central differences of the gradient. Level-set boundaries whose distance
//! function is not known in closed form can compute `d` by a Newton
//! closest-point iteration inside `signed_distance` and reuse the defaults.

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};

pub type Point = Vector2<f64>;

/// Step used by the finite-difference fallbacks.
pub const FD_STEP: f64 = 1e-7;

pub trait SmoothBoundary: Send + Sync {
    /// Signed distance to Γ, negative inside Ω.
    fn signed_distance(&self, x: &Point) -> f64;

    /// Gradient of the signed distance (unit length in the tubular neighborhood).
    fn distance_gradient(&self, x: &Point) -> Point;

    /// Width δ_Γ of the tubular neighborhood where [`project`](Self::project) is defined.
    fn tubular_width(&self) -> f64;

    /// Weingarten map `D²d`.
    fn weingarten(&self, x: &Point) -> Matrix2<f64> {
        let mut h = Matrix2::zeros();
        for j in 0..2 {
            let mut e = Point::zeros();
            e[j] = FD_STEP;
            let dg = (self.distance_gradient(&(x + e)) - self.distance_gradient(&(x - e)))
                / (2.0 * FD_STEP);
            h.set_column(j, &dg);
        }
        h
    }

    fn check_tubular(&self, x: &Point) -> Result<f64> {
        let d = self.signed_distance(x);
        let width = self.tubular_width();
        if d.abs() < width {
            Ok(d)
        } else {
            Err(Error::OutsideTubularNeighborhood {
                x: x.x,
                y: x.y,
                distance: d,
                width,
            })
        }
    }

    /// Orthogonal projection onto Γ.
    fn project(&self, x: &Point) -> Result<Point> {
        let d = self.check_tubular(x)?;
        Ok(x - d * self.distance_gradient(x))
    }

    /// Differential of the projection, `Db = I − ∇d⊗∇d − d·D²d`.
    fn projection_differential(&self, x: &Point) -> Result<Matrix2<f64>> {
        let d = self.check_tubular(x)?;
        let n = self.distance_gradient(x);
        Ok(Matrix2::identity() - n * n.transpose() - d * self.weingarten(x))
    }

    /// Outward unit normal at a boundary point.
    fn normal(&self, p: &Point) -> Point {
        self.distance_gradient(p).normalize()
    }

    /// Unit tangent at a boundary point, the normal rotated counterclockwise.
    fn tangent(&self, p: &Point) -> Point {
        let n = self.normal(p);
        Point::new(-n.y, n.x)
    }
}

/// The unit circle bounding the unit disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitDisk {
    pub tubular_width: f64,
}

impl UnitDisk {
    pub const DEFAULT_TUBULAR_WIDTH: f64 = 0.5;

    pub fn new() -> Self {
        Self {
            tubular_width: Self::DEFAULT_TUBULAR_WIDTH,
        }
    }
}

impl Default for UnitDisk {
    fn default() -> Self {
        Self::new()
    }
}

impl SmoothBoundary for UnitDisk {
    fn signed_distance(&self, x: &Point) -> f64 {
        x.norm() - 1.0
    }

    fn distance_gradient(&self, x: &Point) -> Point {
        let r = x.norm();
        if r == 0.0 {
            // Any direction is a subgradient at the center.
            Point::new(1.0, 0.0)
        } else {
            x / r
        }
    }

    fn tubular_width(&self) -> f64 {
        self.tubular_width
    }

    fn weingarten(&self, x: &Point) -> Matrix2<f64> {
        let r = x.norm();
        let n = x / r;
        (Matrix2::identity() - n * n.transpose()) / r
    }

    fn project(&self, x: &Point) -> Result<Point> {
        self.check_tubular(x)?;
        Ok(x / x.norm())
    }

    fn projection_differential(&self, x: &Point) -> Result<Matrix2<f64>> {
        self.check_tubular(x)?;
        Ok(self.weingarten(x))
    }

    fn normal(&self, p: &Point) -> Point {
        p.normalize()
    }
}

/// The lower half-plane `y < offset`, boundary `y = offset`. A flat boundary
/// with an unbounded tubular neighborhood.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HalfPlane {
    pub offset: f64,
}

impl SmoothBoundary for HalfPlane {
    fn signed_distance(&self, x: &Point) -> f64 {
        x.y - self.offset
    }

    fn distance_gradient(&self, _x: &Point) -> Point {
        Point::new(0.0, 1.0)
    }

    fn tubular_width(&self) -> f64 {
        f64::INFINITY
    }

    fn weingarten(&self, _x: &Point) -> Matrix2<f64> {
        Matrix2::zeros()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn disk_projection_examples() {
        let disk = UnitDisk::new();
        let p = disk.project(&Point::new(2.0, 0.0));
        // (2,0) is at distance 1 > 0.5: outside the neighborhood.
        assert!(p.is_err());
        let wide = UnitDisk { tubular_width: 1.5 };
        let p = wide.project(&Point::new(2.0, 0.0)).unwrap();
        assert!((p - Point::new(1.0, 0.0)).norm() < 1e-15);
        let p = disk.project(&Point::new(0.45, 0.6)).unwrap();
        assert!((p - Point::new(0.6, 0.8)).norm() < 1e-15);
    }

    #[test]
    fn disk_projection_rejects_center() {
        let err = UnitDisk::new().project(&Point::zeros()).unwrap_err();
        match err {
            Error::OutsideTubularNeighborhood { distance, .. } => assert_eq!(distance, -1.0),
            e => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn disk_signed_distance_examples() {
        let disk = UnitDisk::new();
        assert_eq!(disk.signed_distance(&Point::new(0.5, 0.0)), -0.5);
        assert_eq!(disk.signed_distance(&Point::new(1.0, 0.0)), 0.0);
        assert_eq!(disk.signed_distance(&Point::new(3.0, 4.0)), 4.0);
    }

    #[test]
    fn disk_weingarten_curvature() {
        let disk = UnitDisk::new();
        for k in 0..16 {
            let t = k as f64 * 0.4;
            let p = Point::new(t.cos(), t.sin());
            let h = disk.weingarten(&p);
            let tau = disk.tangent(&p);
            assert!((h * tau - tau).norm() < 1e-10);
            assert!((h * disk.normal(&p)).norm() < 1e-10);
        }
    }

    #[test]
    fn generic_defaults_match_disk() {
        // Strip the disk overrides to exercise the trait defaults.
        struct Plain;
        impl SmoothBoundary for Plain {
            fn signed_distance(&self, x: &Point) -> f64 {
                x.norm() - 1.0
            }
            fn distance_gradient(&self, x: &Point) -> Point {
                x / x.norm()
            }
            fn tubular_width(&self) -> f64 {
                0.5
            }
        }
        let disk = UnitDisk::new();
        let x = Point::new(0.7, -0.5);
        assert!((Plain.project(&x).unwrap() - disk.project(&x).unwrap()).norm() < 1e-15);
        let fd = Plain.projection_differential(&x).unwrap();
        let exact = disk.projection_differential(&x).unwrap();
        assert!((fd - exact).norm() < 1e-7);
    }

    #[test]
    fn half_plane_projection_is_vertical() {
        let hp = HalfPlane { offset: 0.25 };
        let p = hp.project(&Point::new(3.0, -2.0)).unwrap();
        assert_eq!(p, Point::new(3.0, 0.25));
        assert_eq!(hp.projection_differential(&p).unwrap(), Matrix2::new(1.0, 0.0, 0.0, 0.0));
    }

    fn tubular_point() -> impl Strategy<Value = Point> {
        (0.0..std::f64::consts::TAU, 0.51..1.49f64)
            .prop_map(|(t, r)| Point::new(r * t.cos(), r * t.sin()))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn projection_lands_on_boundary(x in tubular_point()) {
            let disk = UnitDisk::new();
            let p = disk.project(&x).unwrap();
            prop_assert!(disk.signed_distance(&p).abs() < 1e-12);
            prop_assert!((disk.normal(&p).norm() - 1.0).abs() < 1e-12);
            prop_assert!(((p - x).norm() - disk.signed_distance(&x).abs()).abs() < 1e-12);
            let formula = x - disk.signed_distance(&x) * disk.distance_gradient(&x);
            prop_assert!((formula - p).norm() < 1e-12);
            prop_assert!((disk.project(&p).unwrap() - p).norm() < 1e-12);
        }

        #[test]
        fn gradient_matches_finite_differences(x in tubular_point()) {
            let disk = UnitDisk::new();
            let h = 1e-6;
            let fd = Point::new(
                (disk.signed_distance(&(x + Point::new(h, 0.0))) - disk.signed_distance(&(x - Point::new(h, 0.0)))) / (2.0 * h),
                (disk.signed_distance(&(x + Point::new(0.0, h))) - disk.signed_distance(&(x - Point::new(0.0, h)))) / (2.0 * h),
            );
            let d = disk.signed_distance(&x);
            prop_assume!(d.abs() > 1e-3);
            let dir = (x - disk.project(&x).unwrap()) / d;
            prop_assert!((fd - dir).norm() < 1e-6);
        }
    }
}
