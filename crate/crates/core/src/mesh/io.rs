//! Plain-text curved mesh format.
//!
//! ```text
//! order R  nv NV  nt NT
//! x y                      (NV lines, global P^R node coordinates)
//! i_0 i_1 ... i_{m-1}      (NT lines, m = (R+1)(R+2)/2, lattice order)
//! nb NB
//! element local_edge       (NB lines, boundary edges)
//! ```
//!
//! Node indices are 0-based; each element lists its vertices first, then
//! edge nodes, then interior nodes. Reals carry 17 significant digits.
//! Meshes produced elsewhere (e.g. Gmsh) must be permuted into this
//! lattice order before import.

use std::io::{BufRead, Write};

use super::{normalized_order, AffineMesh, CurvedMesh};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::reference::lattice;
use crate::ventcel::DofMap;

pub fn write_mesh<W: Write>(mesh: &CurvedMesh, mut out: W) -> Result<()> {
    let r = mesh.order;
    let dofs = DofMap::new(&mesh.affine.triangles, mesh.affine.vertices.len(), r)?;
    let mut coords = vec![Point::zeros(); dofs.count()];
    for (e, el) in mesh.elements.iter().enumerate() {
        for (&g, p) in dofs.element(e).iter().zip(&el.nodes) {
            coords[g] = *p;
        }
    }
    writeln!(out, "order {r}  nv {}  nt {}", coords.len(), mesh.len())?;
    for p in &coords {
        writeln!(out, "{:.16e} {:.16e}", p.x, p.y)?;
    }
    for e in 0..mesh.len() {
        let line: Vec<String> = dofs.element(e).iter().map(|i| i.to_string()).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    writeln!(out, "nb {}", mesh.boundary_edges.len())?;
    for &(e, le) in &mesh.boundary_edges {
        writeln!(out, "{e} {le}")?;
    }
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self) -> Result<Vec<String>> {
        loop {
            self.line += 1;
            let text = self
                .inner
                .next()
                .ok_or_else(|| self.error("unexpected end of file"))??;
            let fields: Vec<String> = text.split_whitespace().map(str::to_owned).collect();
            if !fields.is_empty() {
                return Ok(fields);
            }
        }
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            message: message.into(),
        }
    }

    fn parse<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.parse().map_err(|_| self.error(format!("cannot parse '{s}'")))
    }

    fn keyword<T: std::str::FromStr>(&self, fields: &[String], at: usize, key: &str) -> Result<T> {
        match fields.get(at) {
            Some(k) if k == key => self.parse(fields.get(at + 1).ok_or_else(|| self.error(format!("missing value for {key}")))?),
            _ => Err(self.error(format!("expected '{key}'"))),
        }
    }
}

/// Reads a mesh written by [`write_mesh`]. Boundary vertices are the
/// endpoints of the listed boundary edges.
pub fn read_mesh<R: BufRead>(input: R) -> Result<CurvedMesh> {
    let mut lines = Lines {
        inner: input.lines(),
        line: 0,
    };
    let header = lines.next()?;
    let r: usize = lines.keyword(&header, 0, "order")?;
    let nv: usize = lines.keyword(&header, 2, "nv")?;
    let nt: usize = lines.keyword(&header, 4, "nt")?;
    let lat = lattice(r).map_err(|e| lines.error(e.to_string()))?;
    let m = lat.len();

    let mut coords = Vec::with_capacity(nv);
    for _ in 0..nv {
        let f = lines.next()?;
        if f.len() != 2 {
            return Err(lines.error("expected two coordinates"));
        }
        coords.push(Point::new(lines.parse(&f[0])?, lines.parse(&f[1])?));
    }
    let mut elements = Vec::with_capacity(nt);
    for _ in 0..nt {
        let f = lines.next()?;
        if f.len() != m {
            return Err(lines.error(format!("expected {m} node indices")));
        }
        let ids = f.iter().map(|s| lines.parse::<usize>(s)).collect::<Result<Vec<_>>>()?;
        if let Some(bad) = ids.iter().find(|&&i| i >= nv) {
            return Err(lines.error(format!("node index {bad} out of range")));
        }
        elements.push(ids);
    }
    let f = lines.next()?;
    let nb: usize = lines.keyword(&f, 0, "nb")?;
    let mut flagged = vec![false; nv];
    for _ in 0..nb {
        let f = lines.next()?;
        if f.len() != 2 {
            return Err(lines.error("expected 'element local_edge'"));
        }
        let e: usize = lines.parse(&f[0])?;
        let le: usize = lines.parse(&f[1])?;
        if e >= nt || le > 2 {
            return Err(lines.error("boundary edge out of range"));
        }
        let (a, b) = crate::reference::EDGES[le];
        flagged[elements[e][a]] = true;
        flagged[elements[e][b]] = true;
    }

    // Compact the corner vertices and normalize each element's local order.
    let mut vertex_id = vec![usize::MAX; nv];
    let mut vertices = Vec::new();
    let mut on_boundary = Vec::new();
    let mut corner = vec![false; nv];
    for ids in &elements {
        for &g in &ids[..3] {
            corner[g] = true;
        }
    }
    for g in (0..nv).filter(|&g| corner[g]) {
        vertex_id[g] = vertices.len();
        vertices.push(coords[g]);
        on_boundary.push(flagged[g]);
    }
    let mut triangles = Vec::with_capacity(nt);
    let mut nodes = Vec::with_capacity(nt);
    for (e, ids) in elements.iter().enumerate() {
        let t = [ids[0], ids[1], ids[2]].map(|g| vertex_id[g]);
        let perm = normalized_order(&vertices, t, &on_boundary)
            .map_err(|reason| Error::InvalidMesh { element: e, reason })?;
        triangles.push(perm.map(|i| t[i]));
        nodes.push(
            lat.iter()
                .map(|alpha| {
                    let mut old = [0; 3];
                    for i in 0..3 {
                        old[perm[i]] = alpha[i];
                    }
                    let j = lat.iter().position(|b| *b == old).unwrap();
                    coords[ids[j]]
                })
                .collect(),
        );
    }
    let affine = AffineMesh::with_flags(vertices, triangles, on_boundary)?;
    CurvedMesh::from_nodes(affine, r, nodes)
}
