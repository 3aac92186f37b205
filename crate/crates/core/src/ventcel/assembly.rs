use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;

use super::dofs::DofMap;
use super::problem::ProblemSpec;
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};
use crate::geometry::{Point, SmoothBoundary};
use crate::lift::{LiftConfig, LiftMap};
use crate::mesh::CurvedMesh;
use crate::reference::{edge_point, edge_tangent, triangle_rule, segment_rule, LagrangeBasis, QuadratureRule, Tabulation};

/// Basis tabulations at volume and boundary-edge quadrature points.
#[derive(Debug, Clone)]
pub struct QuadratureCache {
    pub basis: LagrangeBasis,
    pub volume: QuadratureRule,
    pub volume_tab: Tabulation,
    pub edge: QuadratureRule,
    /// One tabulation per local edge, at `edge_point(le, t)`.
    pub edge_tab: [Tabulation; 3],
}

impl QuadratureCache {
    pub fn new(k: usize, volume_degree: usize, edge_degree: usize) -> Result<Self> {
        let basis = LagrangeBasis::new(k)?;
        let volume = triangle_rule(volume_degree)?;
        let volume_tab = Tabulation::new(&basis, &volume.points);
        let edge = segment_rule(edge_degree)?;
        let edge_tab = [0, 1, 2].map(|le| {
            let pts: Vec<_> = edge.params().map(|(t, _)| edge_point(le, t)).collect();
            Tabulation::new(&basis, &pts)
        });
        Ok(Self {
            basis,
            volume,
            volume_tab,
            edge,
            edge_tab,
        })
    }

    /// Degrees `2k + 2r + 2` (volume) and `2k + 2r + 4` (edges), raised by `extra`.
    pub fn for_assembly(k: usize, r: usize, extra: usize) -> Result<Self> {
        Self::new(k, 2 * k + 2 * r + 2 + extra, 2 * k + 2 * r + 4 + extra)
    }

    /// Degree `2k + 2r + 4` everywhere, raised by `extra`.
    pub fn for_errors(k: usize, r: usize, extra: usize) -> Result<Self> {
        let d = 2 * k + 2 * r + 4 + extra;
        Self::new(k, d, d)
    }
}

pub(crate) fn inverse_transpose(j: &Matrix2<f64>, element: usize) -> Result<(Matrix2<f64>, f64)> {
    let det = j.determinant();
    if det <= 0.0 {
        return Err(Error::NonPositiveJacobian { element, det });
    }
    Ok((Matrix2::new(j[(1, 1)], -j[(1, 0)], -j[(0, 1)], j[(0, 0)]) / det, det))
}

pub(crate) fn physical_gradients(jit: &Matrix2<f64>, reference: &[[f64; 2]], out: &mut Vec<Vector2<f64>>) {
    out.clear();
    out.extend(reference.iter().map(|g| jit * Vector2::new(g[0], g[1])));
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AssemblyOptions {
    /// Raise both quadrature degrees by this amount.
    pub extra_quadrature: usize,
}

/// `a_h` as a sparse matrix and `l_h` as a vector over the global P^k DOFs.
#[derive(Debug, Clone)]
pub struct DiscreteSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub dofs: DofMap,
}

impl DiscreteSystem {
    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    /// `b − A u`.
    pub fn residual(&self, u: &[f64]) -> Vec<f64> {
        let au = self.matrix.mul_vec(u);
        self.rhs.iter().zip(au).map(|(b, a)| b - a).collect()
    }
}

struct Local {
    matrix: Vec<f64>,
    rhs: Vec<f64>,
}

/// Assembles
///
/// ```text
/// a_h(u, v) = ∫_{Ω_h} ∇u·∇v + κ u v  +  β ∫_{Γ_h} ∇_τ u ∇_τ v + α ∫_{Γ_h} u v
/// l_h(v)    = ∫_{Ω_h} f∘G J_h v  +  ∫_{Γ_h} g∘G |(G∘γ)'|/|γ'| v
/// ```
///
/// on the curved mesh. Volume integrals are pulled back through `F_T^(r)`;
/// each boundary edge is parametrized by `γ(t) = F_T^(r)(x̂(t))` so the
/// tangential gradient is the arc-length derivative.
pub fn assemble(
    mesh: &CurvedMesh,
    boundary: &dyn SmoothBoundary,
    lift: LiftConfig,
    spec: &ProblemSpec,
    k: usize,
    options: AssemblyOptions,
) -> Result<DiscreteSystem> {
    spec.validate()?;
    let dofs = DofMap::new(&mesh.affine.triangles, mesh.affine.vertices.len(), k)?;
    let q = QuadratureCache::for_assembly(k, mesh.order, options.extra_quadrature)?;
    let m = q.basis.len();

    let locals = (0..mesh.len())
        .into_par_iter()
        .map(|e| element_system(mesh, boundary, lift, spec, &q, e))
        .collect::<Result<Vec<Local>>>()?;

    let mut triplets = Vec::with_capacity(mesh.len() * m * m);
    let mut rhs = vec![0.0; dofs.count()];
    for (e, local) in locals.iter().enumerate() {
        let ids = dofs.element(e);
        for (a, &i) in ids.iter().enumerate() {
            rhs[i] += local.rhs[a];
            for (b, &j) in ids.iter().enumerate() {
                triplets.push((i, j, local.matrix[a * m + b]));
            }
        }
    }
    Ok(DiscreteSystem {
        matrix: CsrMatrix::from_triplets(dofs.count(), triplets),
        rhs,
        dofs,
    })
}

fn element_system(
    mesh: &CurvedMesh,
    boundary: &dyn SmoothBoundary,
    lift: LiftConfig,
    spec: &ProblemSpec,
    q: &QuadratureCache,
    e: usize,
) -> Result<Local> {
    let m = q.basis.len();
    let mut matrix = vec![0.0; m * m];
    let mut rhs = vec![0.0; m];
    let map = LiftMap::new(mesh, boundary, lift, e);
    let mut grads = Vec::with_capacity(m);

    for (iq, (x, w)) in q.volume.iter().enumerate() {
        let s = map.sample(x)?;
        let (jit, det) = inverse_transpose(&s.mesh_jacobian, e)?;
        physical_gradients(&jit, &q.volume_tab.gradients[iq], &mut grads);
        let phi = &q.volume_tab.values[iq];
        let wd = w * det;
        for a in 0..m {
            for b in a..m {
                let v = wd * (grads[a].dot(&grads[b]) + spec.kappa * phi[a] * phi[b]);
                matrix[a * m + b] += v;
            }
        }
        let fw = w * (spec.f)(&s.lifted) * s.exact_jacobian.determinant();
        for a in 0..m {
            rhs[a] += fw * phi[a];
        }
    }

    if let Some(le) = mesh.elements[e].boundary_edge() {
        let tau = edge_tangent(le);
        let mut dt = Vec::with_capacity(m);
        for (iq, (t, w)) in q.edge.params().enumerate() {
            let s = map.edge_sample(le, t)?;
            let speed = s.velocity.norm();
            if speed < 1e-14 {
                return Err(Error::DegenerateEdge { element: e, speed });
            }
            dt.clear();
            dt.extend(q.edge_tab[le].gradients[iq].iter().map(|g| g[0] * tau[0] + g[1] * tau[1]));
            let phi = &q.edge_tab[le].values[iq];
            let (stiff, mass) = (w * spec.beta / speed, w * spec.alpha * speed);
            for a in 0..m {
                for b in a..m {
                    matrix[a * m + b] += stiff * dt[a] * dt[b] + mass * phi[a] * phi[b];
                }
            }
            let gw = w * (spec.g)(&s.lifted) * s.lifted_velocity.norm();
            for a in 0..m {
                rhs[a] += gw * phi[a];
            }
        }
    }

    for a in 0..m {
        for b in 0..a {
            matrix[a * m + b] = matrix[b * m + a];
        }
    }
    Ok(Local { matrix, rhs })
}

/// Gathers element coefficients of a global vector.
pub(crate) fn gather(dofs: &DofMap, e: usize, u: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.extend(dofs.element(e).iter().map(|&i| u[i]));
}

/// `|a(v^ℓ, w^ℓ) − a_h(v, w)|`: the exact form is evaluated on Ω and Γ by
/// pulling back through the lift (`DF^(e)` in place of `DF^(r)`, and the
/// lifted boundary curve in place of `γ`).
#[allow(clippy::too_many_arguments)]
pub fn geometric_defect(
    mesh: &CurvedMesh,
    boundary: &dyn SmoothBoundary,
    lift: LiftConfig,
    spec: &ProblemSpec,
    k: usize,
    v: &[f64],
    w: &[f64],
) -> Result<f64> {
    let dofs = DofMap::new(&mesh.affine.triangles, mesh.affine.vertices.len(), k)?;
    let q = QuadratureCache::for_errors(k, mesh.order, 0)?;
    let per_element = (0..mesh.len())
        .into_par_iter()
        .map(|e| {
            let el = &mesh.elements[e];
            if el.is_internal() {
                return Ok(0.0);
            }
            let map = LiftMap::new(mesh, boundary, lift, e);
            let (mut ve, mut we) = (Vec::new(), Vec::new());
            gather(&dofs, e, v, &mut ve);
            gather(&dofs, e, w, &mut we);
            let mut diff = 0.0;
            for (iq, (x, wq)) in q.volume.iter().enumerate() {
                let s = map.sample(x)?;
                let phi = &q.volume_tab.values[iq];
                let g = &q.volume_tab.gradients[iq];
                let (vv, gv) = combine(&ve, phi, g);
                let (ww, gw) = combine(&we, phi, g);
                let form = |j: &Matrix2<f64>| -> Result<f64> {
                    let (jit, det) = inverse_transpose(j, e)?;
                    Ok(det * ((jit * gv).dot(&(jit * gw)) + spec.kappa * vv * ww))
                };
                diff += wq * (form(&s.exact_jacobian)? - form(&s.mesh_jacobian)?);
            }
            if let Some(le) = el.boundary_edge() {
                let tau = edge_tangent(le);
                let tau = Vector2::new(tau[0], tau[1]);
                for (iq, (t, wq)) in q.edge.params().enumerate() {
                    let s = map.edge_sample(le, t)?;
                    let phi = &q.edge_tab[le].values[iq];
                    let g = &q.edge_tab[le].gradients[iq];
                    let (vv, gv) = combine(&ve, phi, g);
                    let (ww, gw) = combine(&we, phi, g);
                    let (dv, dw) = (gv.dot(&tau), gw.dot(&tau));
                    let form = |speed: f64| spec.beta * dv * dw / speed + spec.alpha * vv * ww * speed;
                    diff += wq * (form(s.lifted_velocity.norm()) - form(s.velocity.norm()));
                }
            }
            Ok(diff)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(per_element.iter().sum::<f64>().abs())
}

/// Value and reference gradient of a local combination.
pub(crate) fn combine(c: &[f64], phi: &[f64], grad: &[[f64; 2]]) -> (f64, Vector2<f64>) {
    let mut v = 0.0;
    let mut g = Vector2::zeros();
    for i in 0..c.len() {
        v += c[i] * phi[i];
        g += c[i] * Vector2::new(grad[i][0], grad[i][1]);
    }
    (v, g)
}

/// Physical coordinates of every global DOF node on the curved mesh.
pub fn dof_points(mesh: &CurvedMesh, dofs: &DofMap) -> Result<Vec<Point>> {
    let nodes = LagrangeBasis::new(dofs.degree())?.nodes();
    let mut pts = vec![Point::zeros(); dofs.count()];
    for e in 0..mesh.len() {
        for (&i, &x) in dofs.element(e).iter().zip(&nodes) {
            pts[i] = mesh.point(e, x);
        }
    }
    Ok(pts)
}
