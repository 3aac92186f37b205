use std::collections::HashMap;

use super::{AffineMesh, Topology};
use crate::error::Result;
use crate::geometry::{Point, SmoothBoundary};

const INNER_RING: usize = 6;
const INNER_RADIUS: f64 = 0.5;

/// Quasi-uniform triangulation of the unit disk.
///
/// Level 0 is a center vertex, a ring of six vertices at radius 1/2 and
/// twelve vertices on Γ (24 triangles). Each further level splits every
/// triangle into four through its edge midpoints; midpoints of boundary
/// edges are projected onto Γ.
pub fn generate_disk_mesh(boundary: &dyn SmoothBoundary, level: usize) -> Result<AffineMesh> {
    let (mut vertices, mut triangles, mut on_boundary) = coarse_disk(boundary)?;
    repair_boundary_triangles(&vertices, &mut triangles, &on_boundary);
    for _ in 0..level {
        refine(boundary, &mut vertices, &mut triangles, &mut on_boundary)?;
        repair_boundary_triangles(&vertices, &mut triangles, &on_boundary);
    }
    AffineMesh::with_flags(vertices, triangles, on_boundary)
}

type Skeleton = (Vec<Point>, Vec<[usize; 3]>, Vec<bool>);

fn coarse_disk(boundary: &dyn SmoothBoundary) -> Result<Skeleton> {
    let n = INNER_RING;
    let angle = |i: usize, m: usize| std::f64::consts::TAU * i as f64 / m as f64;
    let mut vertices = vec![Point::zeros()];
    for i in 0..n {
        let t = angle(i, n);
        vertices.push(INNER_RADIUS * Point::new(t.cos(), t.sin()));
    }
    for i in 0..2 * n {
        let t = angle(i, 2 * n);
        vertices.push(boundary.project(&(0.999 * Point::new(t.cos(), t.sin())))?);
    }
    let inner = |i: usize| 1 + i % n;
    let outer = |i: usize| 1 + n + i % (2 * n);
    let mut triangles = Vec::with_capacity(4 * n);
    for i in 0..n {
        triangles.push([0, inner(i), inner(i + 1)]);
        triangles.push([inner(i), outer(2 * i), outer(2 * i + 1)]);
        triangles.push([inner(i), outer(2 * i + 1), inner(i + 1)]);
        triangles.push([inner(i + 1), outer(2 * i + 1), outer(2 * i + 2)]);
    }
    let mut on_boundary = vec![false; 1 + n];
    on_boundary.resize(on_boundary.len() + 2 * n, true);
    Ok((vertices, triangles, on_boundary))
}

fn refine(
    boundary: &dyn SmoothBoundary,
    vertices: &mut Vec<Point>,
    triangles: &mut Vec<[usize; 3]>,
    on_boundary: &mut Vec<bool>,
) -> Result<()> {
    let topo = Topology::new(triangles);
    let mut midpoint = HashMap::with_capacity(topo.edges.len());
    for (g, &[a, b]) in topo.edges.iter().enumerate() {
        let m = 0.5 * (vertices[a] + vertices[b]);
        let on_gamma = topo.edge_elements[g].len() == 1 && on_boundary[a] && on_boundary[b];
        let m = if on_gamma { boundary.project(&m)? } else { m };
        midpoint.insert([a, b], vertices.len());
        vertices.push(m);
        on_boundary.push(on_gamma);
    }
    let mid = |a: usize, b: usize| midpoint[&[a.min(b), a.max(b)]];
    let mut refined = Vec::with_capacity(4 * triangles.len());
    for &[a, b, c] in triangles.iter() {
        let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
        refined.push([a, ab, ca]);
        refined.push([ab, b, bc]);
        refined.push([ca, bc, c]);
        refined.push([ab, bc, ca]);
    }
    *triangles = refined;
    Ok(())
}

/// Removes triangles with all three vertices on Γ by flipping their interior
/// edge with the neighbor across it. Returns the number of flips.
pub fn repair_boundary_triangles(
    vertices: &[Point],
    triangles: &mut [[usize; 3]],
    on_boundary: &[bool],
) -> usize {
    let mut flips = 0;
    loop {
        let topo = Topology::new(triangles);
        let bad = triangles
            .iter()
            .position(|t| t.iter().all(|&v| on_boundary[v]));
        let Some(e) = bad else { return flips };
        let flip = (0..3).find_map(|le| {
            let g = topo.element_edges[e][le];
            let owners = &topo.edge_elements[g];
            if owners.len() != 2 {
                return None;
            }
            let other = if owners[0] == e { owners[1] } else { owners[0] };
            let [a, b] = topo.edges[g];
            let apex = *triangles[e].iter().find(|&&v| v != a && v != b).unwrap();
            let opposite = *triangles[other].iter().find(|&&v| v != a && v != b).unwrap();
            // Only flip into a convex quadrilateral.
            let convex = orient(vertices, apex, opposite, a) * orient(vertices, apex, opposite, b) < 0.0;
            (convex && !on_boundary[opposite]).then_some((other, a, b, apex, opposite))
        });
        let Some((other, a, b, apex, opposite)) = flip else { return flips };
        triangles[e] = ccw(vertices, [apex, a, opposite]);
        triangles[other] = ccw(vertices, [apex, opposite, b]);
        flips += 1;
    }
}

fn orient(v: &[Point], p: usize, q: usize, x: usize) -> f64 {
    (v[q] - v[p]).perp(&(v[x] - v[p]))
}

fn ccw(v: &[Point], t: [usize; 3]) -> [usize; 3] {
    if orient(v, t[0], t[1], t[2]) < 0.0 {
        [t[0], t[2], t[1]]
    } else {
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::UnitDisk;

    #[test]
    fn coarse_mesh_vertices_on_circle() {
        let disk = UnitDisk::new();
        let mesh = generate_disk_mesh(&disk, 0).unwrap();
        assert_eq!(mesh.triangles.len(), 24);
        let flagged = mesh.on_boundary.iter().filter(|&&f| f).count();
        assert_eq!(flagged, 12);
        for (v, &f) in mesh.vertices.iter().zip(&mesh.on_boundary) {
            if f {
                assert!((v.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn refinement_halves_h_and_keeps_euler() {
        let disk = UnitDisk::new();
        let meshes: Vec<_> = (0..5).map(|l| generate_disk_mesh(&disk, l).unwrap()).collect();
        for (l, m) in meshes.iter().enumerate() {
            assert_eq!(m.euler_characteristic(), 1, "level {l}");
            assert_eq!(m.triangles.len(), 24 << (2 * l));
            let d = m.diameters();
            let (lo, hi) = d.iter().fold((f64::MAX, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
            assert!(hi / lo <= 4.0, "level {l}: quasi-uniformity ratio {}", hi / lo);
            for (v, &f) in m.vertices.iter().zip(&m.on_boundary) {
                if f {
                    assert!(disk.signed_distance(v).abs() < 1e-12);
                }
            }
            for t in &m.triangles {
                assert!(t.iter().filter(|&&v| m.on_boundary[v]).count() < 3);
            }
        }
        for w in meshes.windows(2) {
            let ratio = w[1].h / w[0].h;
            assert!((0.45..=0.55).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn flip_repairs_boundary_triangle() {
        let v = vec![
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(-1.0, 0.0),
            Point::new(0.0, -0.5),
        ];
        let flags = vec![true, true, true, false];
        let mut t = vec![[0, 1, 2], [0, 2, 3]];
        assert_eq!(repair_boundary_triangles(&v, &mut t, &flags), 1);
        for tri in &t {
            assert!(tri.iter().filter(|&&i| flags[i]).count() == 2);
            assert!(orient(&v, tri[0], tri[1], tri[2]) > 0.0);
        }
        let disk = UnitDisk::new();
        let mesh = AffineMesh::new(v, t, &disk).unwrap();
        assert_eq!(mesh.triangles.len(), 2);
    }
}
