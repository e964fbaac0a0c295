//! Dense vector kernels and Gram–Schmidt orthonormalization.

use num_complex::Complex64;

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: f64, x: &mut [f64]) {
    for xi in x {
        *xi *= alpha;
    }
}

/// Hermitian inner product `sum conj(x_i) y_i`.
pub fn cdot(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub fn cnorm2(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn caxpy(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn split_complex(x: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
    (x.iter().map(|z| z.re).collect(), x.iter().map(|z| z.im).collect())
}

pub fn join_complex(re: &[f64], im: &[f64]) -> Vec<Complex64> {
    re.iter().zip(im).map(|(a, b)| Complex64::new(*a, *b)).collect()
}

/// Orthogonalizes `v` against the orthonormal `basis` with modified Gram–Schmidt.
///
/// A second pass runs when the first one removes most of the norm (loss of
/// orthogonality above 1e-8 is not tolerated). Returns the coefficients and the
/// remaining norm; `v` is left unnormalized.
pub fn mgs_orthogonalize(basis: &[Vec<f64>], v: &mut [f64]) -> (Vec<f64>, f64) {
    let mut coeffs = vec![0.0; basis.len()];
    let before = norm2(v);
    for (c, q) in coeffs.iter_mut().zip(basis) {
        let h = dot(q, v);
        axpy(-h, q, v);
        *c += h;
    }
    let mut after = norm2(v);
    if after < 0.7071 * before || needs_second_pass(basis, v, after) {
        for (c, q) in coeffs.iter_mut().zip(basis) {
            let h = dot(q, v);
            axpy(-h, q, v);
            *c += h;
        }
        after = norm2(v);
    }
    (coeffs, after)
}

fn needs_second_pass(basis: &[Vec<f64>], v: &[f64], vnorm: f64) -> bool {
    if vnorm == 0.0 {
        return false;
    }
    basis.iter().any(|q| (dot(q, v) / vnorm).abs() > 1e-8)
}

/// Orthonormalizes `columns` in place, dropping columns whose remaining norm falls below
/// `drop_tol` times their original norm. Returns the indices of the kept input columns.
pub fn mgs_orthonormalize(columns: &mut Vec<Vec<f64>>, drop_tol: f64) -> Vec<usize> {
    let input = std::mem::take(columns);
    let mut kept = Vec::new();
    for (i, mut v) in input.into_iter().enumerate() {
        let original = norm2(&v);
        if original == 0.0 {
            continue;
        }
        let (_, rest) = mgs_orthogonalize(columns, &mut v);
        if rest <= drop_tol * original {
            continue;
        }
        scale(1.0 / rest, &mut v);
        columns.push(v);
        kept.push(i);
    }
    kept
}
