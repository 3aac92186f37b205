//! Volume lift `G: Ω_h^(r) → Ω` and surface lift through the orthogonal
//! projection `b`.
//!
//! On every curved element `G = F^(e) ∘ (F_T^(r))^{-1}`. The two variants
//! differ in the base map of `F^(e)`:
//!
//! * [`LiftVariant::New`] builds it on the curved map itself,
//!   `F^(e)(x̂) = x + (λ*)^s (b(y) − y)` with `x = F_T^(r)(x̂)` and
//!   `y = F_T^(r)(ŷ)`. Its trace on `Γ_h^(r)` is exactly `b`.
//! * [`LiftVariant::Former`] uses the affine map, `x = F_T(x̂)`,
//!   `y = F_T(ŷ)`. On `Γ_h^(r)` it equals `b ∘ F_T ∘ (F_T^(r))^{-1}`,
//!   which in general differs from `b`.
//!
//! Internal elements are lifted by the identity in both cases.
//!
//! All evaluation entry points take reference coordinates; physical point
//! queries go through a Newton inversion of `F_T^(r)`.

use std::fmt;
use std::io::Write;

use nalgebra::Matrix2;
use rayon::prelude::*;

use crate::analysis::eoc_fit;
use crate::error::{Error, Result};
use crate::geometry::{Point, SmoothBoundary};
use crate::mesh::{exact_image, lambda_star, CurvedMesh};
use crate::reference::{self, barycentric, edge_point, edge_tangent, LagrangeBasis};

const NEWTON_MAX_ITERATIONS: usize = 50;
const NEWTON_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LiftVariant {
    New,
    Former,
}

impl fmt::Display for LiftVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LiftVariant::New => "new",
            LiftVariant::Former => "former",
        })
    }
}

impl std::str::FromStr for LiftVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "new" => Ok(LiftVariant::New),
            "former" => Ok(LiftVariant::Former),
            _ => Err(Error::Config(format!("unknown lift variant '{s}' (new|former)"))),
        }
    }
}

/// Exponent `s` of the `(λ*)^s` weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Exponent {
    /// `s = r + 2`.
    Auto,
    Fixed(u32),
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Auto => f.write_str("auto"),
            Exponent::Fixed(s) => write!(f, "{s}"),
        }
    }
}

impl std::str::FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Exponent::Auto),
            _ => match s.parse::<u32>() {
                Ok(v) if v >= 1 => Ok(Exponent::Fixed(v)),
                _ => Err(Error::Config(format!("invalid exponent '{s}' (auto or integer >= 1)"))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LiftConfig {
    pub variant: LiftVariant,
    pub exponent: Exponent,
}

impl Default for LiftConfig {
    fn default() -> Self {
        Self {
            variant: LiftVariant::New,
            exponent: Exponent::Auto,
        }
    }
}

impl LiftConfig {
    pub fn new(variant: LiftVariant, exponent: Exponent) -> Self {
        Self { variant, exponent }
    }

    pub fn exponent_for(&self, r: usize) -> u32 {
        match self.exponent {
            Exponent::Auto => r as u32 + 2,
            Exponent::Fixed(s) => s,
        }
    }
}

/// Lift data at one reference point of one element.
#[derive(Debug, Clone, Copy)]
pub struct LiftSample {
    pub reference: [f64; 2],
    /// `x = F_T^(r)(x̂)`.
    pub point: Point,
    /// `G(x) = F^(e)(x̂)`.
    pub lifted: Point,
    /// `DF_T^(r)(x̂)`.
    pub mesh_jacobian: Matrix2<f64>,
    /// `DF^(e)(x̂)`.
    pub exact_jacobian: Matrix2<f64>,
}

impl LiftSample {
    /// `DG(x) = DF^(e) (DF^(r))^{-1}`.
    pub fn differential(&self) -> Matrix2<f64> {
        self.exact_jacobian * self.mesh_jacobian.try_inverse().expect("positive mesh Jacobian")
    }

    /// `J_h = det DG`.
    pub fn jh(&self) -> f64 {
        self.exact_jacobian.determinant() / self.mesh_jacobian.determinant()
    }
}

/// Lift data at one parameter of a boundary edge.
#[derive(Debug, Clone, Copy)]
pub struct EdgeSample {
    pub reference: [f64; 2],
    /// `γ(t)`, on `Γ_h^(r)`.
    pub point: Point,
    /// `γ'(t)`.
    pub velocity: Point,
    /// Lifted point on Γ.
    pub lifted: Point,
    /// Derivative of the lifted curve.
    pub lifted_velocity: Point,
}

impl EdgeSample {
    /// Ratio of arc-length elements, lifted over discrete.
    pub fn jacobian(&self) -> f64 {
        self.lifted_velocity.norm() / self.velocity.norm()
    }
}

/// Lift restricted to one element of a curved mesh.
#[derive(Clone, Copy)]
pub struct LiftMap<'a> {
    pub mesh: &'a CurvedMesh,
    pub boundary: &'a dyn SmoothBoundary,
    pub config: LiftConfig,
    pub element: usize,
}

impl<'a> LiftMap<'a> {
    pub fn new(
        mesh: &'a CurvedMesh,
        boundary: &'a dyn SmoothBoundary,
        config: LiftConfig,
        element: usize,
    ) -> Self {
        Self {
            mesh,
            boundary,
            config,
            element,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.mesh.elements[self.element].is_internal()
    }

    fn exponent(&self) -> u32 {
        self.config.exponent_for(self.mesh.order)
    }

    /// Exact-element map `F^(e)` and its Jacobian at `x̂`.
    pub fn exact_map(&self, x: [f64; 2]) -> Result<(Point, Matrix2<f64>)> {
        let el = &self.mesh.elements[self.element];
        let flags = el.lift_flags();
        let s = self.exponent();
        match self.config.variant {
            LiftVariant::New => exact_image(|p| self.mesh.map(self.element, p), self.boundary, flags, x, s),
            LiftVariant::Former => exact_image(|p| el.affine_map(p), self.boundary, flags, x, s),
        }
    }

    pub fn sample(&self, x: [f64; 2]) -> Result<LiftSample> {
        let (point, mesh_jacobian) = self.mesh.map(self.element, x);
        let (lifted, exact_jacobian) = if self.is_identity() {
            (point, mesh_jacobian)
        } else {
            self.exact_map(x)?
        };
        Ok(LiftSample {
            reference: x,
            point,
            lifted,
            mesh_jacobian,
            exact_jacobian,
        })
    }

    /// Sample at parameter `t` of local edge `edge`, running from its start
    /// vertex to its end vertex.
    pub fn edge_sample(&self, edge: usize, t: f64) -> Result<EdgeSample> {
        let x = edge_point(edge, t);
        let tau = edge_tangent(edge);
        let tau = Point::new(tau[0], tau[1]);
        let s = self.sample(x)?;
        Ok(EdgeSample {
            reference: x,
            point: s.point,
            velocity: s.mesh_jacobian * tau,
            lifted: s.lifted,
            lifted_velocity: s.exact_jacobian * tau,
        })
    }

    /// Reference preimage of a physical point under `F_T^(r)`.
    pub fn locate(&self, x: &Point) -> Result<[f64; 2]> {
        let mut xh = [1.0 / 3.0, 1.0 / 3.0];
        let scale = self.mesh.elements[self.element].diameter().max(1.0);
        let mut residual = f64::INFINITY;
        for _ in 0..NEWTON_MAX_ITERATIONS {
            let (p, j) = self.mesh.map(self.element, xh);
            let r = p - x;
            residual = r.norm();
            let step = j.try_inverse().ok_or(Error::NonPositiveJacobian {
                element: self.element,
                det: j.determinant(),
            })? * r;
            xh = [xh[0] - step.x, xh[1] - step.y];
            if step.norm() < NEWTON_TOLERANCE || residual < NEWTON_TOLERANCE * 1e-3 * scale {
                return Ok(xh);
            }
        }
        Err(Error::InversionFailed {
            element: self.element,
            iterations: NEWTON_MAX_ITERATIONS,
            residual,
        })
    }

    /// `G(x)` for a physical point `x` of the curved element.
    pub fn lift_eval(&self, x: &Point) -> Result<Point> {
        if self.is_identity() {
            return Ok(*x);
        }
        Ok(self.sample(self.locate(x)?)?.lifted)
    }

    /// `(DG(x), J_h(x))`.
    pub fn lift_differential(&self, x: &Point) -> Result<(Matrix2<f64>, f64)> {
        if self.is_identity() {
            return Ok((Matrix2::identity(), 1.0));
        }
        let s = self.sample(self.locate(x)?)?;
        let jh = s.jh();
        if jh <= 0.0 {
            return Err(Error::DegenerateLift {
                element: self.element,
                det: jh,
            });
        }
        Ok((s.differential(), jh))
    }

    /// Jacobian `J_b` of the orthogonal projection along the element's
    /// boundary edge `γ(t) = F_T^(r)(x̂(t))`, with the projected point `b(γ(t))`.
    pub fn boundary_jacobian(&self, t: f64) -> Result<(f64, Point)> {
        let edge = self.mesh.elements[self.element]
            .boundary_edge()
            .ok_or(Error::NotABoundaryElement { element: self.element })?;
        let tau = edge_tangent(edge);
        let (gamma, j) = self.mesh.map(self.element, edge_point(edge, t));
        let velocity = j * Point::new(tau[0], tau[1]);
        let speed = velocity.norm();
        if speed < 1e-14 {
            return Err(Error::DegenerateEdge {
                element: self.element,
                speed,
            });
        }
        let lifted = self.boundary.project(&gamma)?;
        let db = self.boundary.projection_differential(&gamma)?;
        Ok(((db * velocity).norm() / speed, lifted))
    }
}

/// Spectral norm of a 2×2 matrix.
pub fn spectral_norm(m: &Matrix2<f64>) -> f64 {
    let a = m.transpose() * m;
    let tr = a.trace();
    let det = a.determinant();
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    (0.5 * tr + disc).max(0.0).sqrt()
}

/// Suprema of `‖DG − Id‖` and `|J_h − 1|` over one mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftDeviation {
    pub h: f64,
    pub sup_dg_minus_id: f64,
    pub sup_jh_minus_1: f64,
}

/// Reference points used to sample sup norms on an element: volume
/// quadrature points and the P^{r+3} lattice.
pub fn sampling_points(r: usize) -> Result<Vec<[f64; 2]>> {
    let mut pts = reference::triangle_rule(2 * r + 4)?.points;
    let k = r + 3;
    for j in 0..=k {
        for i in 0..=k - j {
            pts.push([i as f64 / k as f64, j as f64 / k as f64]);
        }
    }
    Ok(pts)
}

pub fn lift_deviation(
    mesh: &CurvedMesh,
    boundary: &dyn SmoothBoundary,
    config: LiftConfig,
) -> Result<LiftDeviation> {
    let points = sampling_points(mesh.order)?;
    let singular = config.exponent_for(mesh.order) < 2;
    let (dg, jh) = (0..mesh.len())
        .into_par_iter()
        .filter(|&e| !mesh.elements[e].is_internal())
        .map(|e| {
            let map = LiftMap::new(mesh, boundary, config, e);
            let flags = mesh.elements[e].epsilon;
            let mut worst = (0.0f64, 0.0f64);
            for &x in &points {
                if singular && lambda_star(barycentric(x), flags) <= 0.0 {
                    continue;
                }
                let s = map.sample(x)?;
                worst.0 = worst.0.max(spectral_norm(&(s.differential() - Matrix2::identity())));
                worst.1 = worst.1.max((s.jh() - 1.0).abs());
            }
            Ok(worst)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold((0.0f64, 0.0f64), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    Ok(LiftDeviation {
        h: mesh.h,
        sup_dg_minus_id: dg,
        sup_jh_minus_1: jh,
    })
}

/// Refinement study of the lift differential.
#[derive(Debug, Clone)]
pub struct SlopeReport {
    pub order: usize,
    pub config: LiftConfig,
    pub levels: Vec<usize>,
    pub rows: Vec<LiftDeviation>,
    pub slope_dg: f64,
    pub slope_jh: f64,
    /// `None` when no gate applies (`s = 1`, where `DG` is singular near
    /// the internal face).
    pub pass: Option<bool>,
}

impl SlopeReport {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "level,h,sup_dg_minus_id,sup_jh_minus_1")?;
        for (l, row) in self.levels.iter().zip(&self.rows) {
            writeln!(
                out,
                "{l},{:.16e},{:.16e},{:.16e}",
                row.h, row.sup_dg_minus_id, row.sup_jh_minus_1
            )?;
        }
        writeln!(
            out,
            "# slope_dg={:.4} slope_jh={:.4} r={} s={}",
            self.slope_dg,
            self.slope_jh,
            self.order,
            self.config.exponent_for(self.order)
        )?;
        Ok(())
    }
}

/// Fits the decay rates of `sup ‖DG − Id‖` and `sup |J_h − 1|` over a mesh
/// series. Passes when both slopes reach `r − 0.3` (for `s ≥ 2`).
pub fn certify_prop44(
    meshes: &[(usize, CurvedMesh)],
    boundary: &dyn SmoothBoundary,
    config: LiftConfig,
) -> Result<SlopeReport> {
    if meshes.len() < 3 {
        return Err(Error::Fit("at least 3 refinement levels are required".into()));
    }
    let order = meshes[0].1.order;
    let rows = meshes
        .iter()
        .map(|(_, m)| lift_deviation(m, boundary, config))
        .collect::<Result<Vec<_>>>()?;
    let slope_dg = eoc_fit(&rows.iter().map(|r| (r.h, r.sup_dg_minus_id)).collect::<Vec<_>>())?.slope;
    let slope_jh = eoc_fit(&rows.iter().map(|r| (r.h, r.sup_jh_minus_1)).collect::<Vec<_>>())?.slope;
    let threshold = order as f64 - 0.3;
    let pass = (config.exponent_for(order) >= 2).then_some(slope_dg >= threshold && slope_jh >= threshold);
    Ok(SlopeReport {
        order,
        config,
        levels: meshes.iter().map(|(l, _)| *l).collect(),
        rows,
        slope_dg,
        slope_jh,
        pass,
    })
}

/// Largest `|G(x) − b(x)|` over boundary-edge quadrature points.
pub fn trace_mismatch(
    mesh: &CurvedMesh,
    boundary: &dyn SmoothBoundary,
    config: LiftConfig,
    degree: usize,
) -> Result<f64> {
    let rule = reference::segment_rule(degree)?;
    let mut worst: f64 = 0.0;
    for &(e, le) in &mesh.boundary_edges {
        let map = LiftMap::new(mesh, boundary, config, e);
        for (t, _) in rule.params() {
            let s = map.edge_sample(le, t)?;
            worst = worst.max((s.lifted - boundary.project(&s.point)?).norm());
        }
    }
    Ok(worst)
}

/// Largest disagreement of `G` evaluated from the two sides of each shared
/// edge, at `samples` interior points per edge.
pub fn continuity_mismatch(
    mesh: &CurvedMesh,
    boundary: &dyn SmoothBoundary,
    config: LiftConfig,
    samples: usize,
) -> Result<f64> {
    let topo = mesh.affine.topology();
    let mut worst: f64 = 0.0;
    for (g, owners) in topo.edge_elements.iter().enumerate() {
        if owners.len() != 2 {
            continue;
        }
        let [lo, _] = topo.edges[g];
        let eval = |e: usize, u: f64| -> Result<Point> {
            let le = topo.element_edges[e].iter().position(|&x| x == g).unwrap();
            let (a, _) = reference::EDGES[le];
            // Parametrize from the lower global vertex on both sides.
            let t = if mesh.elements[e].vertices[a] == lo { u } else { 1.0 - u };
            Ok(LiftMap::new(mesh, boundary, config, e).sample(edge_point(le, t))?.lifted)
        };
        for i in 1..=samples {
            let u = i as f64 / (samples + 1) as f64;
            worst = worst.max((eval(owners[0], u)? - eval(owners[1], u)?).norm());
        }
    }
    Ok(worst)
}

/// Geometric P^r basis reused by callers that evaluate maps in bulk.
pub fn geometry_basis(mesh: &CurvedMesh) -> &LagrangeBasis {
    mesh.basis()
}
