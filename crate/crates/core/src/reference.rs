//! Reference triangle `T̂ = conv{(0,0), (1,0), (0,1)}`, uniform-lattice
//! Lagrange bases and Gauss quadrature on the triangle and on `[0, 1]`.
//!
//! Barycentric coordinates of `x̂ = (ξ, η)` are `(1 − ξ − η, ξ, η)`, so
//! reference vertex `i` is where `λ_i = 1`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const MAX_DEGREE: usize = 4;
pub const MAX_QUADRATURE_DEGREE: usize = 20;

/// Reference vertices `v̂_0, v̂_1, v̂_2`.
pub const REFERENCE_VERTICES: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

/// Local edges as (start, end) vertex pairs.
pub const EDGES: [(usize, usize); 3] = [(0, 1), (1, 2), (2, 0)];

/// Reference gradients of the barycentric coordinates.
pub const BARYCENTRIC_GRADIENTS: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];

pub fn barycentric(x: [f64; 2]) -> [f64; 3] {
    [1.0 - x[0] - x[1], x[0], x[1]]
}

pub fn from_barycentric(l: [f64; 3]) -> [f64; 2] {
    [l[1], l[2]]
}

/// Point at parameter `t ∈ [0, 1]` on local edge `edge`, running from its
/// start vertex to its end vertex.
pub fn edge_point(edge: usize, t: f64) -> [f64; 2] {
    let (a, b) = EDGES[edge];
    let (va, vb) = (REFERENCE_VERTICES[a], REFERENCE_VERTICES[b]);
    [va[0] + t * (vb[0] - va[0]), va[1] + t * (vb[1] - va[1])]
}

/// Tangent `d x̂ / dt` of local edge `edge`.
pub fn edge_tangent(edge: usize) -> [f64; 2] {
    let (a, b) = EDGES[edge];
    let (va, vb) = (REFERENCE_VERTICES[a], REFERENCE_VERTICES[b]);
    [vb[0] - va[0], vb[1] - va[1]]
}

fn check_degree(k: usize) -> Result<()> {
    if (1..=MAX_DEGREE).contains(&k) {
        Ok(())
    } else {
        Err(Error::UnsupportedDegree {
            degree: k,
            min: 1,
            max: MAX_DEGREE,
        })
    }
}

/// Lattice multi-indices `α` (with `|α| = k`) of the P^k nodes, node `i`
/// sitting at barycentric coordinates `α_i / k`.
///
/// Order: the three vertices, then `k − 1` nodes per edge for edges
/// (0,1), (1,2), (2,0), each listed from the start vertex, then interior
/// nodes.
pub fn lattice(k: usize) -> Result<Vec<[usize; 3]>> {
    check_degree(k)?;
    let mut nodes = Vec::with_capacity((k + 1) * (k + 2) / 2);
    for v in 0..3 {
        let mut a = [0; 3];
        a[v] = k;
        nodes.push(a);
    }
    for &(s, e) in &EDGES {
        for j in 1..k {
            let mut a = [0; 3];
            a[s] = k - j;
            a[e] = j;
            nodes.push(a);
        }
    }
    for c in 1..k {
        for b in 1..k {
            if b + c < k {
                nodes.push([k - b - c, b, c]);
            }
        }
    }
    Ok(nodes)
}

/// Barycentric coordinates of the P^k Lagrange nodes, in [`lattice`] order.
pub fn lagrange_nodes(k: usize) -> Result<Vec<[f64; 3]>> {
    Ok(lattice(k)?
        .into_iter()
        .map(|a| a.map(|ai| ai as f64 / k as f64))
        .collect())
}

/// Number of P^k nodes on a triangle.
pub const fn node_count(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

/// Local indices of the nodes on local edge `edge`, ordered from its start
/// vertex to its end vertex (both endpoints included).
pub fn edge_nodes(k: usize, edge: usize) -> Vec<usize> {
    let (s, e) = EDGES[edge];
    let mut out = Vec::with_capacity(k + 1);
    out.push(s);
    out.extend((0..k.saturating_sub(1)).map(|j| 3 + edge * (k - 1) + j));
    out.push(e);
    out
}

/// Uniform-lattice P^k Lagrange basis on the reference triangle.
#[derive(Debug, Clone)]
pub struct LagrangeBasis {
    degree: usize,
    lattice: Vec<[usize; 3]>,
}

impl LagrangeBasis {
    pub fn new(degree: usize) -> Result<Self> {
        Ok(Self {
            degree,
            lattice: lattice(degree)?,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.lattice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lattice.is_empty()
    }

    pub fn nodes(&self) -> Vec<[f64; 2]> {
        let k = self.degree as f64;
        self.lattice
            .iter()
            .map(|a| [a[1] as f64 / k, a[2] as f64 / k])
            .collect()
    }

    /// Values and reference gradients of all basis functions at `x`.
    ///
    /// Basis function `α` is `Π_i Π_{j<α_i} (kλ_i − j)/(j + 1)`.
    pub fn eval_into(&self, x: [f64; 2], values: &mut [f64], gradients: &mut [[f64; 2]]) {
        let k = self.degree;
        let lam = barycentric(x);
        // factors[i][m] = Π_{j<m} (kλ_i − j)/(j+1) and its λ-derivative.
        let mut fac = [[0.0; MAX_DEGREE + 1]; 3];
        let mut dfac = [[0.0; MAX_DEGREE + 1]; 3];
        for i in 0..3 {
            fac[i][0] = 1.0;
            dfac[i][0] = 0.0;
            let s = k as f64 * lam[i];
            for m in 1..=k {
                let q = (s - (m - 1) as f64) / m as f64;
                fac[i][m] = fac[i][m - 1] * q;
                dfac[i][m] = dfac[i][m - 1] * q + fac[i][m - 1] * k as f64 / m as f64;
            }
        }
        for (n, a) in self.lattice.iter().enumerate() {
            let f = [fac[0][a[0]], fac[1][a[1]], fac[2][a[2]]];
            let df = [dfac[0][a[0]], dfac[1][a[1]], dfac[2][a[2]]];
            values[n] = f[0] * f[1] * f[2];
            let dl = [df[0] * f[1] * f[2], f[0] * df[1] * f[2], f[0] * f[1] * df[2]];
            let mut g = [0.0; 2];
            for i in 0..3 {
                g[0] += dl[i] * BARYCENTRIC_GRADIENTS[i][0];
                g[1] += dl[i] * BARYCENTRIC_GRADIENTS[i][1];
            }
            gradients[n] = g;
        }
    }

    pub fn eval(&self, x: [f64; 2]) -> (Vec<f64>, Vec<[f64; 2]>) {
        let mut v = vec![0.0; self.len()];
        let mut g = vec![[0.0; 2]; self.len()];
        self.eval_into(x, &mut v, &mut g);
        (v, g)
    }
}

/// Basis values and gradients tabulated at a fixed set of reference points.
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub values: Vec<Vec<f64>>,
    pub gradients: Vec<Vec<[f64; 2]>>,
}

impl Tabulation {
    pub fn new(basis: &LagrangeBasis, points: &[[f64; 2]]) -> Self {
        let (values, gradients) = points.iter().map(|&p| basis.eval(p)).unzip();
        Self { values, gradients }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Triangle,
    Segment,
}

/// Quadrature rule with positive weights.
///
/// Triangle rules carry points in reference coordinates and weights summing
/// to 1/2. Segment rules live on `[0, 1]` (second coordinate zero) with
/// weights summing to 1.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub exactness_degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ([f64; 2], f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }

    /// Segment rule parameters (first coordinates).
    pub fn params(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.iter().map(|(p, w)| (p[0], w))
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, refined by Newton on P_n.
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn check_quadrature_degree(degree: usize) -> Result<()> {
    if degree > MAX_QUADRATURE_DEGREE {
        Err(Error::UnsupportedQuadrature {
            requested: degree,
            max: MAX_QUADRATURE_DEGREE,
        })
    } else {
        Ok(())
    }
}

/// Gauss–Legendre rule on `[0, 1]` exact for polynomials of degree `degree`.
pub fn segment_rule(degree: usize) -> Result<QuadratureRule> {
    check_quadrature_degree(degree)?;
    let n = (degree + 2) / 2;
    let (x, w) = gauss_legendre(n);
    Ok(QuadratureRule {
        points: x.iter().map(|&t| [0.5 * (t + 1.0), 0.0]).collect(),
        weights: w.iter().map(|&wi| 0.5 * wi).collect(),
        exactness_degree: 2 * n - 1,
    })
}

/// Collapsed (Duffy) tensor Gauss rule on the reference triangle exact for
/// bivariate polynomials of total degree `degree`.
///
/// `ξ = u`, `η = (1 − u) v` maps the unit square onto `T̂` with Jacobian
/// `1 − u`, which raises the degree in `u` by one.
pub fn triangle_rule(degree: usize) -> Result<QuadratureRule> {
    check_quadrature_degree(degree)?;
    let n = (degree + 3) / 2;
    let (x, w) = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for i in 0..n {
        let u = 0.5 * (x[i] + 1.0);
        for j in 0..n {
            let v = 0.5 * (x[j] + 1.0);
            points.push([u, (1.0 - u) * v]);
            weights.push(0.25 * w[i] * w[j] * (1.0 - u));
        }
    }
    Ok(QuadratureRule {
        points,
        weights,
        exactness_degree: 2 * n - 2,
    })
}

pub fn quadrature(domain: Domain, degree: usize) -> Result<QuadratureRule> {
    match domain {
        Domain::Triangle => triangle_rule(degree),
        Domain::Segment => segment_rule(degree),
    }
}
