//! The exact element transformation built from boundary flags.
//!
//! For a reference point with barycentric coordinates `λ` and boundary
//! flags `ε`, `λ* = Σ ε_i λ_i` measures how close the point is to the
//! boundary face, and `ŷ = Σ ε_i λ_i v̂_i / λ*` is its image on that face.
//! Given any base map `F` (affine or curved) the exact image is
//!
//! ```text
//!   F(x̂) + (λ*)^s (b(y) − y),   y = F(ŷ)
//! ```
//!
//! and `F(x̂)` on the internal face where `λ* = 0`.

use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::geometry::{Point, SmoothBoundary};
use crate::reference::{barycentric, BARYCENTRIC_GRADIENTS, REFERENCE_VERTICES};

/// Tolerance under which `λ*` is treated as exactly 1 (point on the boundary face).
const ON_BOUNDARY_FACE: f64 = 1e-14;

pub fn lambda_star(bary: [f64; 3], epsilon: [bool; 3]) -> f64 {
    (0..3).filter(|&i| epsilon[i]).map(|i| bary[i]).sum()
}

pub fn y_hat(bary: [f64; 3], epsilon: [bool; 3]) -> Result<[f64; 2]> {
    let ls = lambda_star(bary, epsilon);
    if ls <= 0.0 {
        return Err(Error::SingularPoint);
    }
    let mut y = [0.0; 2];
    for i in (0..3).filter(|&i| epsilon[i]) {
        y[0] += bary[i] * REFERENCE_VERTICES[i][0];
        y[1] += bary[i] * REFERENCE_VERTICES[i][1];
    }
    Ok([y[0] / ls, y[1] / ls])
}

fn outer(a: &Point, b: [f64; 2]) -> Matrix2<f64> {
    Matrix2::new(a.x * b[0], a.x * b[1], a.y * b[0], a.y * b[1])
}

/// Exact image of `x̂` and its reference Jacobian for base map `base`,
/// which returns `(F(x̂), DF(x̂))`.
///
/// With `s = 1` the differential is singular on the internal face and
/// evaluating it there is an error. For `s ≥ 2` it reduces to `DF`.
pub fn exact_image<F>(
    base: F,
    boundary: &dyn SmoothBoundary,
    epsilon: [bool; 3],
    x_hat: [f64; 2],
    s: u32,
) -> Result<(Point, Matrix2<f64>)>
where
    F: Fn([f64; 2]) -> (Point, Matrix2<f64>),
{
    let (x, dx) = base(x_hat);
    let bary = barycentric(x_hat);
    let ls = lambda_star(bary, epsilon);
    if !epsilon.iter().any(|&e| e) {
        return Ok((x, dx));
    }
    if ls <= 0.0 {
        return if s >= 2 { Ok((x, dx)) } else { Err(Error::SingularPoint) };
    }
    let yh = y_hat(bary, epsilon)?;
    let (y, dy) = base(yh);
    let by = boundary.project(&y)?;
    let dby = boundary.projection_differential(&y)?;
    let disp = by - y;

    let mut grad_ls = [0.0; 2];
    let mut sum_v_grad = Matrix2::zeros();
    for i in (0..3).filter(|&i| epsilon[i]) {
        let g = BARYCENTRIC_GRADIENTS[i];
        grad_ls[0] += g[0];
        grad_ls[1] += g[1];
        let v = Point::new(REFERENCE_VERTICES[i][0], REFERENCE_VERTICES[i][1]);
        sum_v_grad += outer(&v, g);
    }
    // Dŷ = (Σ ε_i v̂_i ⊗ ∇λ_i − ŷ ⊗ ∇λ*) / λ*
    let d_yhat = (sum_v_grad - outer(&Point::new(yh[0], yh[1]), grad_ls)) / ls;

    let w = ls.powi(s as i32);
    let dw = s as f64 * ls.powi(s as i32 - 1);
    let jac = dx + outer(&disp, grad_ls) * dw + (dby - Matrix2::identity()) * dy * d_yhat * w;

    let point = if 1.0 - ls < ON_BOUNDARY_FACE {
        // On the boundary face ŷ = x̂, so the image is b(x).
        boundary.project(&x)?
    } else {
        x + w * disp
    };
    Ok((point, jac))
}
