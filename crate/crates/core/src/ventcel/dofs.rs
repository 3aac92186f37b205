use crate::error::{Error, Result};
use crate::mesh::Topology;
use crate::reference::{self, EDGES};

/// Global numbering of a conforming P^k space: vertex DOFs first, then
/// `k − 1` DOFs per edge (ordered from its lower to its higher global
/// vertex), then interior DOFs element by element.
#[derive(Debug, Clone)]
pub struct DofMap {
    degree: usize,
    local: usize,
    count: usize,
    indices: Vec<usize>,
    n_vertices: usize,
    n_edges: usize,
}

impl DofMap {
    pub fn new(triangles: &[[usize; 3]], n_vertices: usize, degree: usize) -> Result<Self> {
        if !(1..=reference::MAX_DEGREE).contains(&degree) {
            return Err(Error::UnsupportedDegree {
                degree,
                min: 1,
                max: reference::MAX_DEGREE,
            });
        }
        let k = degree;
        let topo = Topology::new(triangles);
        let per_edge = k - 1;
        let per_cell = (k - 1) * k.saturating_sub(2) / 2;
        let local = reference::node_count(k);
        let edge_base = n_vertices;
        let cell_base = edge_base + per_edge * topo.edges.len();
        let mut indices = Vec::with_capacity(local * triangles.len());
        for (e, t) in triangles.iter().enumerate() {
            indices.extend_from_slice(t);
            for (le, &(a, _)) in EDGES.iter().enumerate() {
                let g = topo.element_edges[e][le];
                let forward = t[a] == topo.edges[g][0];
                for j in 0..per_edge {
                    let j = if forward { j } else { per_edge - 1 - j };
                    indices.push(edge_base + g * per_edge + j);
                }
            }
            for j in 0..per_cell {
                indices.push(cell_base + e * per_cell + j);
            }
        }
        Ok(Self {
            degree,
            local,
            count: cell_base + per_cell * triangles.len(),
            indices,
            n_vertices,
            n_edges: topo.edges.len(),
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn local_count(&self) -> usize {
        self.local
    }

    pub fn n_elements(&self) -> usize {
        self.indices.len() / self.local
    }

    pub fn element(&self, e: usize) -> &[usize] {
        &self.indices[e * self.local..(e + 1) * self.local]
    }

    /// `V + (k−1)E + (k−1)(k−2)/2 · T`.
    pub fn expected_count(&self) -> usize {
        let k = self.degree;
        self.n_vertices + (k - 1) * self.n_edges + (k - 1) * k.saturating_sub(2) / 2 * self.n_elements()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::UnitDisk;
    use crate::mesh::generate_disk_mesh;

    #[test]
    fn count_formula_on_generated_meshes() {
        let disk = UnitDisk::new();
        for level in 0..3 {
            let m = generate_disk_mesh(&disk, level).unwrap();
            let topo = m.topology();
            for k in 1..=4 {
                let d = DofMap::new(&m.triangles, m.vertices.len(), k).unwrap();
                let (v, e, t) = (m.vertices.len(), topo.edges.len(), m.triangles.len());
                assert_eq!(d.count(), v + (k - 1) * e + (k - 1) * (k.max(2) - 2) / 2 * t);
                assert_eq!(d.count(), d.expected_count());
                let mut seen = vec![false; d.count()];
                for el in 0..t {
                    for &i in d.element(el) {
                        seen[i] = true;
                    }
                }
                assert!(seen.iter().all(|&s| s));
            }
        }
    }

    #[test]
    fn shared_edge_dofs_match() {
        // Two triangles sharing edge (1, 2), traversed in opposite directions.
        let tris = [[0, 1, 2], [3, 2, 1]];
        let d = DofMap::new(&tris, 4, 4).unwrap();
        let a = reference::edge_nodes(4, 1).iter().map(|&i| d.element(0)[i]).collect::<Vec<_>>();
        let mut b = reference::edge_nodes(4, 1).iter().map(|&i| d.element(1)[i]).collect::<Vec<_>>();
        b.reverse();
        assert_eq!(a, b);
        assert_eq!(d.count(), 4 + 3 * 5 + 3 * 2);
    }

    #[test]
    fn rejects_degree_five() {
        assert!(DofMap::new(&[[0, 1, 2]], 3, 5).is_err());
        assert!(DofMap::new(&[[0, 1, 2]], 3, 0).is_err());
    }
}
