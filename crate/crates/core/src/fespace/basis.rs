//! Lagrange shape functions on the reference triangle in barycentric form.

use crate::mesh::{Mesh, LOCAL_EDGES};

/// Role of a local node within its triangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Vertex(usize),
    /// Node `k` (1..m) on local edge `edge = [i, j]`, located at `(m-k)/m v_i + k/m v_j`.
    Edge { edge: usize, k: usize },
    Interior(usize),
}

/// Degree-`m` Lagrange element; nodes are the multi-indices `alpha` with `|alpha| = m`.
#[derive(Debug, Clone)]
pub struct ReferenceElement {
    degree: usize,
    nodes: Vec<[usize; 3]>,
    kinds: Vec<NodeKind>,
}

impl ReferenceElement {
    pub fn new(degree: usize) -> ReferenceElement {
        assert!((1..=3).contains(&degree), "Lagrange degree {degree} not supported");
        let m = degree;
        let mut nodes = Vec::new();
        let mut kinds = Vec::new();
        for v in 0..3 {
            let mut a = [0; 3];
            a[v] = m;
            nodes.push(a);
            kinds.push(NodeKind::Vertex(v));
        }
        for (edge, [i, j]) in LOCAL_EDGES.iter().enumerate() {
            for k in 1..m {
                let mut a = [0; 3];
                a[*i] = m - k;
                a[*j] = k;
                nodes.push(a);
                kinds.push(NodeKind::Edge { edge, k });
            }
        }
        let mut interior = 0;
        for a0 in 1..m {
            for a1 in 1..m {
                if a0 + a1 < m {
                    nodes.push([a0, a1, m - a0 - a1]);
                    kinds.push(NodeKind::Interior(interior));
                    interior += 1;
                }
            }
        }
        ReferenceElement {
            degree: m,
            nodes,
            kinds,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_interior(&self) -> usize {
        self.kinds.iter().filter(|k| matches!(k, NodeKind::Interior(_))).count()
    }

    pub fn node_kind(&self, k: usize) -> NodeKind {
        self.kinds[k]
    }

    pub fn node_bary(&self, k: usize) -> [f64; 3] {
        let m = self.degree as f64;
        let a = self.nodes[k];
        [a[0] as f64 / m, a[1] as f64 / m, a[2] as f64 / m]
    }

    /// Shape function values `phi_alpha(l) = prod_t prod_{s < alpha_t} (m l_t - s) / (s + 1)`.
    pub fn eval(&self, l: [f64; 3]) -> Vec<f64> {
        let table = self.factor_table(l);
        self.nodes
            .iter()
            .map(|a| table[0][a[0]] * table[1][a[1]] * table[2][a[2]])
            .collect()
    }

    /// Derivatives of every shape function with respect to the three barycentric coordinates.
    pub fn eval_grad_bary(&self, l: [f64; 3]) -> Vec<[f64; 3]> {
        let table = self.factor_table(l);
        let dtable = self.factor_derivative_table(l);
        self.nodes
            .iter()
            .map(|a| {
                let f = [table[0][a[0]], table[1][a[1]], table[2][a[2]]];
                let df = [dtable[0][a[0]], dtable[1][a[1]], dtable[2][a[2]]];
                [df[0] * f[1] * f[2], f[0] * df[1] * f[2], f[0] * f[1] * df[2]]
            })
            .collect()
    }

    /// `table[t][a] = prod_{s < a} (m l_t - s) / (s + 1)` for `a = 0..=m`.
    fn factor_table(&self, l: [f64; 3]) -> [Vec<f64>; 3] {
        let m = self.degree;
        let make = |x: f64| {
            let mut v = vec![1.0; m + 1];
            for a in 1..=m {
                let s = (a - 1) as f64;
                v[a] = v[a - 1] * (m as f64 * x - s) / (s + 1.0);
            }
            v
        };
        [make(l[0]), make(l[1]), make(l[2])]
    }

    fn factor_derivative_table(&self, l: [f64; 3]) -> [Vec<f64>; 3] {
        let m = self.degree;
        let mf = m as f64;
        let make = |x: f64| {
            let mut val = vec![1.0; m + 1];
            let mut der = vec![0.0; m + 1];
            for a in 1..=m {
                let s = (a - 1) as f64;
                let g = (mf * x - s) / (s + 1.0);
                let dg = mf / (s + 1.0);
                der[a] = der[a - 1] * g + val[a - 1] * dg;
                val[a] = val[a - 1] * g;
            }
            der
        };
        [make(l[0]), make(l[1]), make(l[2])]
    }
}

/// Affine data of one mesh triangle.
#[derive(Debug, Clone, Copy)]
pub struct CellGeometry {
    pub area: f64,
    /// Gradients of the barycentric coordinates.
    pub grad_lambda: [[f64; 2]; 3],
    pub points: [crate::mesh::Point2; 3],
}

impl CellGeometry {
    pub fn new(mesh: &Mesh, t: usize) -> CellGeometry {
        let p = mesh.triangle_points(t);
        let det = crate::mesh::signed_area2(&p[0], &p[1], &p[2]);
        let grad_lambda = [
            [(p[1].x2 - p[2].x2) / det, (p[2].x1 - p[1].x1) / det],
            [(p[2].x2 - p[0].x2) / det, (p[0].x1 - p[2].x1) / det],
            [(p[0].x2 - p[1].x2) / det, (p[1].x1 - p[0].x1) / det],
        ];
        CellGeometry {
            area: 0.5 * det,
            grad_lambda,
            points: p,
        }
    }

    pub fn point(&self, l: [f64; 3]) -> crate::mesh::Point2 {
        let [a, b, c] = self.points;
        crate::mesh::Point2::new(
            l[0] * a.x1 + l[1] * b.x1 + l[2] * c.x1,
            l[0] * a.x2 + l[1] * b.x2 + l[2] * c.x2,
        )
    }

    /// Physical gradient from barycentric derivatives.
    #[inline]
    pub fn gradient(&self, d: [f64; 3]) -> [f64; 2] {
        let g = &self.grad_lambda;
        [
            d[0] * g[0][0] + d[1] * g[1][0] + d[2] * g[2][0],
            d[0] * g[0][1] + d[1] * g[1][1] + d[2] * g[2][1],
        ]
    }
}
