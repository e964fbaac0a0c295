//! Quadrature rules on the reference triangle.

/// Points are barycentric `(l0, l1, l2)`; weights sum to the reference area 1/2.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { z } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * p - pm1) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            z = 0.0;
            dp = 1.0;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n == 1 {
        w[0] = 2.0;
    }
    (x, w)
}

impl QuadratureRule {
    /// Collapsed-coordinate Gauss rule exact for polynomials of total degree `degree`.
    pub fn for_degree(degree: usize) -> QuadratureRule {
        let n = (degree + 2).div_ceil(2).max(1);
        let (gx, gw) = gauss_legendre(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for (xi, wi) in gx.iter().zip(&gw) {
            let u = 0.5 * (xi + 1.0);
            for (xj, wj) in gx.iter().zip(&gw) {
                let v = 0.5 * (xj + 1.0);
                // (u, v) in the unit square onto the triangle: s = u, t = v (1 - u)
                let s = u;
                let t = v * (1.0 - u);
                points.push([1.0 - s - t, s, t]);
                weights.push(0.25 * wi * wj * (1.0 - u));
            }
        }
        QuadratureRule {
            points,
            weights,
            exactness: 2 * n - 2,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
