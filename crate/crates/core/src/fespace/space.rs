//! Continuous scalar Lagrange spaces.

use std::sync::Arc;

use super::basis::{CellGeometry, NodeKind, ReferenceElement};
use super::FeError;
use crate::mesh::{Mesh, Point2, LOCAL_EDGES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Constraint {
    None,
    /// Degrees of freedom on the boundary are removed from the numbering.
    ZeroBoundary,
    /// Zero mean, enforced weakly by a multiplier at system level; nothing is removed.
    ZeroMean,
}

impl Constraint {
    pub fn name(&self) -> &'static str {
        match self {
            Constraint::None => "none",
            Constraint::ZeroBoundary => "zero_boundary",
            Constraint::ZeroMean => "zero_mean",
        }
    }
}

/// Degree-`m` continuous Lagrange space on a mesh.
///
/// Global numbering: vertex nodes, then edge nodes by global edge index (ordered from the
/// lower-index endpoint), then interior nodes by triangle. Constrained spaces keep this
/// order with the eliminated nodes removed.
#[derive(Debug, Clone)]
pub struct LagrangeSpace {
    mesh: Arc<Mesh>,
    element: ReferenceElement,
    constraint: Constraint,
    cell_dofs: Vec<Option<usize>>,
    nodes: Vec<Point2>,
}

impl LagrangeSpace {
    pub fn new(mesh: Arc<Mesh>, degree: usize, constraint: Constraint) -> Result<LagrangeSpace, FeError> {
        if !(1..=3).contains(&degree) {
            return Err(FeError::UnsupportedDegree(degree));
        }
        let element = ReferenceElement::new(degree);
        let m = degree;
        let nv = mesh.num_vertices();
        let ne = mesh.num_edges();
        let n_int = element.num_interior();
        let full = nv + (m - 1) * ne + n_int * mesh.num_triangles();

        let mut keep = vec![true; full];
        if constraint == Constraint::ZeroBoundary {
            for (v, on) in mesh.boundary_vertex_flags().iter().enumerate() {
                if *on {
                    keep[v] = false;
                }
            }
            for (e, on) in mesh.boundary_edge_flags().iter().enumerate() {
                if *on {
                    for k in 0..(m - 1) {
                        keep[nv + e * (m - 1) + k] = false;
                    }
                }
            }
        }
        let mut renumber = vec![None; full];
        let mut next = 0;
        for (g, k) in keep.iter().enumerate() {
            if *k {
                renumber[g] = Some(next);
                next += 1;
            }
        }

        let nloc = element.num_nodes();
        let mut cell_dofs = Vec::with_capacity(nloc * mesh.num_triangles());
        let mut nodes = vec![Point2::default(); next];
        for (t, (tri, te)) in mesh.triangles().iter().zip(mesh.triangle_edges()).enumerate() {
            let geo = CellGeometry::new(&mesh, t);
            for k in 0..nloc {
                let g = match element.node_kind(k) {
                    NodeKind::Vertex(v) => tri[v],
                    NodeKind::Edge { edge, k } => {
                        let [i, j] = LOCAL_EDGES[edge];
                        // position counted from the lower global vertex index
                        let kk = if tri[j] > tri[i] { k } else { m - k };
                        nv + te[edge] * (m - 1) + (kk - 1)
                    }
                    NodeKind::Interior(i) => nv + (m - 1) * ne + t * n_int + i,
                };
                let dof = renumber[g];
                if let Some(d) = dof {
                    nodes[d] = geo.point(element.node_bary(k));
                }
                cell_dofs.push(dof);
            }
        }
        Ok(LagrangeSpace {
            mesh,
            element,
            constraint,
            cell_dofs,
            nodes,
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.element.degree()
    }

    pub fn constraint(&self) -> Constraint {
        self.constraint
    }

    pub fn element(&self) -> &ReferenceElement {
        &self.element
    }

    pub fn dof_count(&self) -> usize {
        self.nodes.len()
    }

    /// Global DOF of each local node of triangle `t`; `None` for eliminated nodes.
    pub fn cell_dofs(&self, t: usize) -> &[Option<usize>] {
        let n = self.element.num_nodes();
        &self.cell_dofs[t * n..(t + 1) * n]
    }

    pub fn dof_nodes(&self) -> &[Point2] {
        &self.nodes
    }

    /// Value of the finite element function with coefficients `coeffs` inside triangle `t`.
    pub fn evaluate_in_cell(&self, coeffs: &[f64], t: usize, l: [f64; 3]) -> f64 {
        let vals = self.element.eval(l);
        self.cell_dofs(t)
            .iter()
            .zip(vals)
            .filter_map(|(d, v)| d.map(|d| coeffs[d] * v))
            .sum()
    }

    /// Point value of the finite element function; `None` outside the mesh.
    pub fn evaluate(&self, coeffs: &[f64], p: &Point2) -> Option<f64> {
        assert_eq!(coeffs.len(), self.dof_count());
        let (t, l) = self.mesh.locate(p)?;
        Some(self.evaluate_in_cell(coeffs, t, l))
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(&self, f: impl Fn(&Point2) -> f64) -> Vec<f64> {
        self.nodes.iter().map(f).collect()
    }
}

/// Expected unconstrained DOF count `V + (m-1) E + C(m) T`.
pub fn expected_dof_count(mesh: &Mesh, degree: usize) -> usize {
    let c = if degree == 3 { 1 } else { 0 };
    mesh.num_vertices() + (degree - 1) * mesh.num_edges() + c * mesh.num_triangles()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_builtin_domain, Domain};

    fn mesh(domain: Domain, h: f64) -> Arc<Mesh> {
        Arc::new(build_builtin_domain(&domain, h).unwrap())
    }

    #[test]
    fn single_triangle_counts() {
        let m = mesh(Domain::RightTriangle, 1.0);
        assert_eq!(LagrangeSpace::new(m.clone(), 2, Constraint::None).unwrap().dof_count(), 6);
        assert_eq!(LagrangeSpace::new(m.clone(), 3, Constraint::None).unwrap().dof_count(), 10);
        assert_eq!(LagrangeSpace::new(m, 3, Constraint::ZeroBoundary).unwrap().dof_count(), 1);
    }

    #[test]
    fn square_counts() {
        let m = mesh(Domain::UnitSquare, 0.5);
        assert_eq!(LagrangeSpace::new(m.clone(), 1, Constraint::ZeroBoundary).unwrap().dof_count(), 1);
        assert_eq!(LagrangeSpace::new(m.clone(), 2, Constraint::ZeroBoundary).unwrap().dof_count(), 9);
        assert_eq!(LagrangeSpace::new(m.clone(), 2, Constraint::None).unwrap().dof_count(), 25);
        assert_eq!(LagrangeSpace::new(m, 1, Constraint::ZeroMean).unwrap().dof_count(), 9);
        assert!(matches!(
            LagrangeSpace::new(mesh(Domain::UnitSquare, 0.5), 4, Constraint::None),
            Err(FeError::UnsupportedDegree(4))
        ));
    }

    #[test]
    fn counts_follow_formula() {
        for domain in [Domain::UnitSquare, Domain::LShape, Domain::RightTriangle] {
            let m = mesh(domain, 0.25);
            for degree in 1..=3 {
                let s = LagrangeSpace::new(m.clone(), degree, Constraint::None).unwrap();
                assert_eq!(s.dof_count(), expected_dof_count(&m, degree));
            }
        }
    }

    #[test]
    fn shared_nodes_have_identical_coordinates() {
        let m = mesh(Domain::LShape, 0.5);
        for degree in 1..=3 {
            let s = LagrangeSpace::new(m.clone(), degree, Constraint::None).unwrap();
            for t in 0..m.num_triangles() {
                let geo = CellGeometry::new(&m, t);
                for (k, d) in s.cell_dofs(t).iter().enumerate() {
                    let p = geo.point(s.element().node_bary(k));
                    let q = s.dof_nodes()[d.unwrap()];
                    assert!(p.dist(&q) < 1e-14);
                }
            }
        }
    }

    #[test]
    fn interpolation_reproduces_polynomials() {
        let m = mesh(Domain::UnitSquare, 0.25);
        for degree in 1..=3 {
            let s = LagrangeSpace::new(m.clone(), degree, Constraint::None).unwrap();
            let f = |p: &Point2| p.x1.powi(degree as i32) - 2.0 * p.x2 * p.x1.powi(degree as i32 - 1) + 0.5;
            let c = s.interpolate(f);
            for p in [Point2::new(0.13, 0.77), Point2::new(0.5, 0.5), Point2::new(0.91, 0.02)] {
                assert!((s.evaluate(&c, &p).unwrap() - f(&p)).abs() < 1e-13);
            }
        }
    }
}
