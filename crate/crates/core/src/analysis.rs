//! Lifted error norms, the lifted interpolant and convergence-order fits.

use nalgebra::Vector2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::SmoothBoundary;
use crate::lift::{LiftConfig, LiftMap};
use crate::mesh::CurvedMesh;
use crate::reference::{edge_tangent, LagrangeBasis};
use crate::ventcel::{combine, gather, inverse_transpose, DofMap, ExactSolution, QuadratureCache};

/// The four lifted error norms on one mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub h: f64,
    pub ndof: usize,
    /// `‖u − u_h^ℓ‖_{L²(Ω)}`
    pub e_l2_omega: f64,
    /// `‖∇u − ∇u_h^ℓ‖_{L²(Ω)}`
    pub e_h1s_omega: f64,
    /// `‖u − u_h^ℓ‖_{L²(Γ)}`
    pub e_l2_gamma: f64,
    /// `‖∇_Γu − ∇_Γu_h^ℓ‖_{L²(Γ)}`
    pub e_h1s_gamma: f64,
}

impl ErrorReport {
    pub fn norms(&self) -> [f64; 4] {
        [self.e_l2_omega, self.e_h1s_omega, self.e_l2_gamma, self.e_h1s_gamma]
    }
}

pub const NORM_NAMES: [&str; 4] = ["e_l2_omega", "e_h1s_omega", "e_l2_gamma", "e_h1s_gamma"];

/// Errors of the lifted discrete function `u_h^ℓ = u_h ∘ G^{-1}` against `u`.
///
/// Every integral over Ω is pulled back to the reference element through
/// `F^(e) = G ∘ F_T^(r)`, and `∇u_h^ℓ(G(x)) = DF^(e)^{-T} ∇̂u_h`. On Γ the
/// lifted edge `p(t) = F^(e)(x̂(t))` is used; the tangential derivative of
/// `u_h^ℓ` is `(d/dt u_h)/|p'|`, compared with `∇u(p)·p'/|p'|`.
pub fn lifted_errors(
    mesh: &CurvedMesh,
    boundary: &dyn SmoothBoundary,
    lift: LiftConfig,
    u: &dyn ExactSolution,
    dofs: &DofMap,
    coefficients: &[f64],
) -> Result<ErrorReport> {
    lifted_errors_with(mesh, boundary, lift, u, dofs, coefficients, 0)
}

/// [`lifted_errors`] with quadrature degrees raised by `extra`.
pub fn lifted_errors_with(
    mesh: &CurvedMesh,
    boundary: &dyn SmoothBoundary,
    lift: LiftConfig,
    u: &dyn ExactSolution,
    dofs: &DofMap,
    coefficients: &[f64],
    extra: usize,
) -> Result<ErrorReport> {
    assert_eq!(coefficients.len(), dofs.count(), "coefficient vector length");
    let q = QuadratureCache::for_errors(dofs.degree(), mesh.order, extra)?;
    let sums = (0..mesh.len())
        .into_par_iter()
        .map(|e| {
            let map = LiftMap::new(mesh, boundary, lift, e);
            let mut c = Vec::new();
            gather(dofs, e, coefficients, &mut c);
            let mut acc = [0.0; 4];
            for (iq, (x, w)) in q.volume.iter().enumerate() {
                let s = map.sample(x)?;
                let (uh, gh) = combine(&c, &q.volume_tab.values[iq], &q.volume_tab.gradients[iq]);
                let (jit, det) = inverse_transpose(&s.exact_jacobian, e)?;
                let wd = w * det;
                acc[0] += wd * (u.value(&s.lifted) - uh).powi(2);
                acc[1] += wd * (u.gradient(&s.lifted) - jit * gh).norm_squared();
            }
            if let Some(le) = mesh.elements[e].boundary_edge() {
                let tau = edge_tangent(le);
                let tau = Vector2::new(tau[0], tau[1]);
                for (iq, (t, w)) in q.edge.params().enumerate() {
                    let s = map.edge_sample(le, t)?;
                    let (uh, gh) = combine(&c, &q.edge_tab[le].values[iq], &q.edge_tab[le].gradients[iq]);
                    let speed = s.lifted_velocity.norm();
                    let exact_dt = u.gradient(&s.lifted).dot(&s.lifted_velocity) / speed;
                    let discrete_dt = gh.dot(&tau) / speed;
                    acc[2] += w * speed * (u.value(&s.lifted) - uh).powi(2);
                    acc[3] += w * speed * (exact_dt - discrete_dt).powi(2);
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<[f64; 4]>>>()?;
    let mut total = [0.0; 4];
    for s in &sums {
        for i in 0..4 {
            total[i] += s[i];
        }
    }
    Ok(ErrorReport {
        h: mesh.h,
        ndof: dofs.count(),
        e_l2_omega: total[0].sqrt(),
        e_h1s_omega: total[1].sqrt(),
        e_l2_gamma: total[2].sqrt(),
        e_h1s_gamma: total[3].sqrt(),
    })
}

/// Lifted interpolant: coefficient `i` is `u(G(x_i))` at the physical P^k
/// node `x_i` of the curved mesh.
pub fn interpolate(
    mesh: &CurvedMesh,
    boundary: &dyn SmoothBoundary,
    lift: LiftConfig,
    dofs: &DofMap,
    u: &dyn ExactSolution,
) -> Result<Vec<f64>> {
    let nodes = LagrangeBasis::new(dofs.degree())?.nodes();
    let local = (0..mesh.len())
        .into_par_iter()
        .map(|e| {
            let map = LiftMap::new(mesh, boundary, lift, e);
            nodes.iter().map(|&x| Ok(u.value(&map.sample(x)?.lifted))).collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = vec![0.0; dofs.count()];
    for (e, vals) in local.iter().enumerate() {
        for (&i, &v) in dofs.element(e).iter().zip(vals) {
            out[i] = v;
        }
    }
    Ok(out)
}

/// Squared L² and gradient norms of a discrete function on `Ω_h^(r)` and of
/// its lift on Ω.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormPair {
    pub discrete: [f64; 2],
    pub lifted: [f64; 2],
}

impl NormPair {
    /// Lifted over discrete, for the L² norm and the gradient seminorm.
    pub fn ratios(&self) -> [f64; 2] {
        [
            (self.lifted[0] / self.discrete[0]).sqrt(),
            (self.lifted[1] / self.discrete[1]).sqrt(),
        ]
    }
}

pub fn norm_pair(
    mesh: &CurvedMesh,
    boundary: &dyn SmoothBoundary,
    lift: LiftConfig,
    dofs: &DofMap,
    coefficients: &[f64],
) -> Result<NormPair> {
    let q = QuadratureCache::for_errors(dofs.degree(), mesh.order, 0)?;
    let parts = (0..mesh.len())
        .into_par_iter()
        .map(|e| {
            let map = LiftMap::new(mesh, boundary, lift, e);
            let mut c = Vec::new();
            gather(dofs, e, coefficients, &mut c);
            let mut acc = [0.0; 4];
            for (iq, (x, w)) in q.volume.iter().enumerate() {
                let s = map.sample(x)?;
                let (v, g) = combine(&c, &q.volume_tab.values[iq], &q.volume_tab.gradients[iq]);
                let (jh, dh) = inverse_transpose(&s.mesh_jacobian, e)?;
                let (je, de) = inverse_transpose(&s.exact_jacobian, e)?;
                acc[0] += w * dh * v * v;
                acc[1] += w * dh * (jh * g).norm_squared();
                acc[2] += w * de * v * v;
                acc[3] += w * de * (je * g).norm_squared();
            }
            Ok(acc)
        })
        .collect::<Result<Vec<[f64; 4]>>>()?;
    let mut t = [0.0; 4];
    for p in &parts {
        for i in 0..4 {
            t[i] += p[i];
        }
    }
    Ok(NormPair {
        discrete: [t[0], t[1]],
        lifted: [t[2], t[3]],
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EocFit {
    pub slope: f64,
    /// Largest absolute deviation of `log(error)` from the fitted line.
    pub residual: f64,
}

/// Least-squares slope of `log(error)` against `log(h)`.
pub fn eoc_fit(series: &[(f64, f64)]) -> Result<EocFit> {
    if series.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 points, got {}", series.len())));
    }
    for w in series.windows(2) {
        if !(w[1].0 < w[0].0) {
            return Err(Error::Fit("mesh sizes must be strictly decreasing".into()));
        }
    }
    if let Some(&(h, e)) = series.iter().find(|&&(h, e)| !(e > 0.0 && e.is_finite() && h > 0.0)) {
        return Err(Error::Fit(format!("non-positive value (h={h}, error={e}); truncate the series")));
    }
    let pts: Vec<(f64, f64)> = series.iter().map(|&(h, e)| (h.ln(), e.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let residual = pts
        .iter()
        .map(|p| (p.1 - (my + slope * (p.0 - mx))).abs())
        .fold(0.0, f64::max);
    Ok(EocFit { slope, residual })
}

/// EOC between consecutive levels.
pub fn pairwise_eoc(series: &[(f64, f64)]) -> Vec<f64> {
    series
        .windows(2)
        .map(|w| (w[1].1 / w[0].1).ln() / (w[1].0 / w[0].0).ln())
        .collect()
}

/// Number of finest refinement intervals used by the least-squares EOC.
pub const FIT_INTERVALS: usize = 3;

/// Least-squares fit over the finest `intervals` intervals of the series.
pub fn eoc_finest(series: &[(f64, f64)], intervals: usize) -> Result<EocFit> {
    let start = series.len().saturating_sub(intervals + 1);
    eoc_fit(&series[start..])
}

/// One row of a convergence table: a refinement series for a fixed
/// `(r, k, lift)` and its fitted orders.
#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub r: usize,
    pub k: usize,
    pub lift: LiftConfig,
    pub levels: Vec<usize>,
    pub reports: Vec<ErrorReport>,
    /// Least-squares EOC over the finest intervals, per norm.
    pub eoc: [f64; 4],
    pub residual: [f64; 4],
    /// EOC over the last interval, per norm.
    pub last: [f64; 4],
}

impl ConvergenceRow {
    pub fn new(r: usize, k: usize, lift: LiftConfig, levels: Vec<usize>, reports: Vec<ErrorReport>) -> Result<Self> {
        let mut eoc = [f64::NAN; 4];
        let mut residual = [f64::NAN; 4];
        let mut last = [f64::NAN; 4];
        for n in 0..4 {
            let series: Vec<(f64, f64)> = reports.iter().map(|rep| (rep.h, rep.norms()[n])).collect();
            let fit = eoc_finest(&series, FIT_INTERVALS)?;
            eoc[n] = fit.slope;
            residual[n] = fit.residual;
            last[n] = *pairwise_eoc(&series).last().unwrap();
        }
        Ok(Self {
            r,
            k,
            lift,
            levels,
            reports,
            eoc,
            residual,
            last,
        })
    }

    pub fn exponent(&self) -> u32 {
        self.lift.exponent_for(self.r)
    }
}

/// Collection of rows, rendered in the layout of the published tables
/// (rows = mesh order, columns = P1..P4).
#[derive(Debug, Clone, Default)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn find(&self, r: usize, k: usize, lift: LiftConfig) -> Option<&ConvergenceRow> {
        self.rows.iter().find(|row| row.r == r && row.k == k && row.lift == lift)
    }

    /// Markdown table for norms `pair` (e.g. `[0, 1]` for interior norms).
    pub fn markdown(&self, lift: LiftConfig, pair: [usize; 2], title: &str) -> String {
        let mut ks: Vec<usize> = self.rows.iter().filter(|r| r.lift == lift).map(|r| r.k).collect();
        ks.sort_unstable();
        ks.dedup();
        let mut rs: Vec<usize> = self.rows.iter().filter(|r| r.lift == lift).map(|r| r.r).collect();
        rs.sort_unstable();
        rs.dedup();
        let mut out = format!("### {title}\n\n| mesh |");
        for n in pair {
            for k in &ks {
                out.push_str(&format!(" {} P{k} |", NORM_NAMES[n]));
            }
        }
        out.push_str("\n|---|");
        out.push_str(&"---|".repeat(2 * ks.len()));
        out.push('\n');
        for r in rs {
            out.push_str(&format!("| r={r} |"));
            for n in pair {
                for &k in &ks {
                    match self.find(r, k, lift) {
                        Some(row) => out.push_str(&format!(" {:.2} ({:.2}) |", row.eoc[n], row.last[n])),
                        None => out.push_str(" – |"),
                    }
                }
            }
            out.push('\n');
        }
        out
    }
}
