//! The seven-component product space of the mixed formulation.

use std::collections::HashMap;
use std::ops::Range;
use std::sync::Arc;

use super::space::{Constraint, LagrangeSpace};
use super::FeError;
use crate::mesh::Mesh;

/// Components in their fixed storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Field {
    Y,
    Phi1,
    Phi2,
    U,
    P,
    Sigma,
    R,
}

impl Field {
    pub const ALL: [Field; 7] = [
        Field::Y,
        Field::Phi1,
        Field::Phi2,
        Field::U,
        Field::P,
        Field::Sigma,
        Field::R,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Field::Y => "y",
            Field::Phi1 => "phi1",
            Field::Phi2 => "phi2",
            Field::U => "u",
            Field::P => "p",
            Field::Sigma => "sigma",
            Field::R => "r",
        }
    }
}

/// Polynomial degrees of the components. `y` always has degree `m - 1`; `phi`, `u`, `r` degree `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProductDegrees {
    pub m: usize,
    pub sigma: usize,
    pub p: usize,
}

impl ProductDegrees {
    /// `sigma` and `p` of degree `m - 1`: the stable default.
    pub fn taylor_hood(m: usize) -> ProductDegrees {
        ProductDegrees {
            m,
            sigma: m - 1,
            p: m - 1,
        }
    }

    pub fn with_sigma(m: usize, sigma: usize) -> ProductDegrees {
        ProductDegrees { m, sigma, p: m - 1 }
    }

    pub fn new(m: usize, sigma: usize, p: usize) -> ProductDegrees {
        ProductDegrees { m, sigma, p }
    }

    pub fn degree(&self, field: Field) -> usize {
        match field {
            Field::Y => self.m - 1,
            Field::Phi1 | Field::Phi2 | Field::U | Field::R => self.m,
            Field::P => self.p,
            Field::Sigma => self.sigma,
        }
    }

    pub fn constraint(field: Field) -> Constraint {
        match field {
            Field::Y | Field::P => Constraint::None,
            Field::Phi1 | Field::Phi2 | Field::U | Field::R => Constraint::ZeroBoundary,
            Field::Sigma => Constraint::ZeroMean,
        }
    }
}

/// `[y | phi1 | phi2 | u | p | sigma | r]` followed, at system level, by one multiplier
/// enforcing the zero mean of `sigma`.
#[derive(Debug, Clone)]
pub struct ProductSpace {
    mesh: Arc<Mesh>,
    degrees: ProductDegrees,
    spaces: [Arc<LagrangeSpace>; 7],
    offsets: [usize; 8],
}

impl ProductSpace {
    pub fn new(mesh: Arc<Mesh>, degrees: ProductDegrees) -> Result<ProductSpace, FeError> {
        if !(2..=3).contains(&degrees.m) {
            return Err(FeError::UnsupportedProductDegree(degrees.m));
        }
        for d in [degrees.sigma, degrees.p] {
            if d + 1 != degrees.m && d != degrees.m {
                return Err(FeError::UnsupportedProductDegree(d));
            }
        }
        let mut cache: HashMap<(usize, Constraint), Arc<LagrangeSpace>> = HashMap::new();
        let mut get = |field: Field| -> Result<Arc<LagrangeSpace>, FeError> {
            let key = (degrees.degree(field), ProductDegrees::constraint(field));
            if let Some(s) = cache.get(&key) {
                return Ok(s.clone());
            }
            let s = Arc::new(LagrangeSpace::new(mesh.clone(), key.0, key.1)?);
            cache.insert(key, s.clone());
            Ok(s)
        };
        let spaces = [
            get(Field::Y)?,
            get(Field::Phi1)?,
            get(Field::Phi2)?,
            get(Field::U)?,
            get(Field::P)?,
            get(Field::Sigma)?,
            get(Field::R)?,
        ];
        let mut offsets = [0usize; 8];
        for i in 0..7 {
            offsets[i + 1] = offsets[i] + spaces[i].dof_count();
        }
        Ok(ProductSpace {
            mesh,
            degrees,
            spaces,
            offsets,
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn degrees(&self) -> ProductDegrees {
        self.degrees
    }

    pub fn space(&self, field: Field) -> &LagrangeSpace {
        &self.spaces[field.index()]
    }

    pub fn space_arc(&self, field: Field) -> &Arc<LagrangeSpace> {
        &self.spaces[field.index()]
    }

    pub fn offset(&self, field: Field) -> usize {
        self.offsets[field.index()]
    }

    pub fn range(&self, field: Field) -> Range<usize> {
        self.offsets[field.index()]..self.offsets[field.index() + 1]
    }

    pub fn dim(&self, field: Field) -> usize {
        self.spaces[field.index()].dof_count()
    }

    pub fn component_dims(&self) -> [usize; 7] {
        Field::ALL.map(|f| self.dim(f))
    }

    /// Dimension of the six-field product space.
    pub fn total_dim(&self) -> usize {
        self.offsets[7]
    }

    /// Dimension of the assembled pencil: product space plus the zero-mean multiplier.
    pub fn system_dim(&self) -> usize {
        self.offsets[7] + 1
    }

    pub fn multiplier_index(&self) -> usize {
        self.offsets[7]
    }

    /// Component `field` of a system vector.
    pub fn component<'a, T>(&self, field: Field, x: &'a [T]) -> &'a [T] {
        &x[self.range(field)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_builtin_domain, Domain};

    fn square() -> Arc<Mesh> {
        Arc::new(build_builtin_domain(&Domain::UnitSquare, 0.5).unwrap())
    }

    #[test]
    fn component_dims_on_eight_triangle_square() {
        let lit = ProductSpace::new(square(), ProductDegrees::new(2, 1, 2)).unwrap();
        assert_eq!(lit.component_dims(), [9, 9, 9, 9, 25, 9, 9]);
        assert_eq!(lit.total_dim(), 79);
        let th = ProductSpace::new(square(), ProductDegrees::taylor_hood(2)).unwrap();
        assert_eq!(th.component_dims(), [9; 7]);
        assert_eq!(th.total_dim(), 63);
        assert_eq!(th.system_dim(), 64);
    }

    #[test]
    fn offsets_partition() {
        let ps = ProductSpace::new(square(), ProductDegrees::taylor_hood(3)).unwrap();
        let mut next = 0;
        for f in Field::ALL {
            assert_eq!(ps.range(f).start, next);
            next = ps.range(f).end;
        }
        assert_eq!(next, ps.total_dim());
        // zero-mean sigma keeps every node
        assert_eq!(ps.dim(Field::Sigma), ps.dim(Field::P));
    }

    #[test]
    fn total_dim_grows_under_refinement() {
        let m0 = square();
        let m1 = Arc::new(m0.refine_red());
        let a = ProductSpace::new(m0, ProductDegrees::taylor_hood(2)).unwrap();
        let b = ProductSpace::new(m1, ProductDegrees::taylor_hood(2)).unwrap();
        assert!(b.total_dim() > a.total_dim());
    }
}
