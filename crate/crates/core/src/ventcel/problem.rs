use std::fmt;
use std::sync::Arc;

use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::geometry::{Point, SmoothBoundary};

/// A smooth function on a neighborhood of the closed domain together with
/// its first and second derivatives.
pub trait ExactSolution: Send + Sync {
    fn value(&self, x: &Point) -> f64;
    fn gradient(&self, x: &Point) -> Point;
    fn hessian(&self, x: &Point) -> Matrix2<f64>;

    fn laplacian(&self, x: &Point) -> f64 {
        self.hessian(x).trace()
    }
}

/// `u(x, y) = y eˣ`.
#[derive(Debug, Clone, Copy, Default)]
pub struct YExpX;

impl ExactSolution for YExpX {
    fn value(&self, p: &Point) -> f64 {
        p.y * p.x.exp()
    }

    fn gradient(&self, p: &Point) -> Point {
        let e = p.x.exp();
        Point::new(p.y * e, e)
    }

    fn hessian(&self, p: &Point) -> Matrix2<f64> {
        let e = p.x.exp();
        Matrix2::new(p.y * e, e, e, 0.0)
    }
}

/// `u(x, y) = a + b·x + c·y`.
#[derive(Debug, Clone, Copy)]
pub struct Affine {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Affine {
    pub fn constant(a: f64) -> Self {
        Self { a, b: 0.0, c: 0.0 }
    }
}

impl ExactSolution for Affine {
    fn value(&self, p: &Point) -> f64 {
        self.a + self.b * p.x + self.c * p.y
    }

    fn gradient(&self, _: &Point) -> Point {
        Point::new(self.b, self.c)
    }

    fn hessian(&self, _: &Point) -> Matrix2<f64> {
        Matrix2::zeros()
    }
}

/// Named manufactured solutions selectable from configuration.
pub fn named_solution(name: &str) -> Result<Arc<dyn ExactSolution>> {
    match name {
        "y_exp_x" => Ok(Arc::new(YExpX)),
        "one" => Ok(Arc::new(Affine::constant(1.0))),
        _ => Err(Error::Config(format!("unknown solution '{name}' (y_exp_x|one)"))),
    }
}

pub type Source = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;

/// Data of `−Δu + κu = f` in Ω, `−βΔ_Γu + ∂_n u + αu = g` on Γ.
#[derive(Clone)]
pub struct ProblemSpec {
    pub kappa: f64,
    pub alpha: f64,
    pub beta: f64,
    pub f: Source,
    pub g: Source,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("kappa", &self.kappa)
            .field("alpha", &self.alpha)
            .field("beta", &self.beta)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    pub fn new(kappa: f64, alpha: f64, beta: f64, f: Source, g: Source) -> Result<Self> {
        let spec = Self {
            kappa,
            alpha,
            beta,
            f,
            g,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Homogeneous data.
    pub fn zero(kappa: f64, alpha: f64, beta: f64) -> Result<Self> {
        Self::new(kappa, alpha, beta, Arc::new(|_| 0.0), Arc::new(|_| 0.0))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return Err(Error::Config(format!(
                "alpha and beta must be positive (alpha={}, beta={})",
                self.alpha, self.beta
            )));
        }
        if !(self.kappa >= 0.0) {
            return Err(Error::Config(format!("kappa must be non-negative (kappa={})", self.kappa)));
        }
        Ok(())
    }
}

/// Laplace–Beltrami of `u` at a boundary point `p`:
/// `τᵀ D²u τ − (tr D²d) ∂_n u`.
pub fn laplace_beltrami(u: &dyn ExactSolution, boundary: &dyn SmoothBoundary, p: &Point) -> f64 {
    let n = boundary.normal(p);
    let t = boundary.tangent(p);
    let curvature = boundary.weingarten(p).trace();
    (t.transpose() * u.hessian(p) * t)[(0, 0)] - curvature * u.gradient(p).dot(&n)
}

/// Source terms making `u` the exact solution. `g` projects its argument
/// onto Γ before evaluating.
pub fn derive_manufactured(
    u: Arc<dyn ExactSolution>,
    kappa: f64,
    alpha: f64,
    beta: f64,
    boundary: Arc<dyn SmoothBoundary>,
) -> Result<ProblemSpec> {
    let uf = u.clone();
    let f: Source = Arc::new(move |x| -uf.laplacian(x) + kappa * uf.value(x));
    let g: Source = Arc::new(move |x| {
        let p = boundary.project(x).unwrap_or(*x);
        let dn = u.gradient(&p).dot(&boundary.normal(&p));
        -beta * laplace_beltrami(u.as_ref(), boundary.as_ref(), &p) + dn + alpha * u.value(&p)
    });
    ProblemSpec::new(kappa, alpha, beta, f, g)
}
