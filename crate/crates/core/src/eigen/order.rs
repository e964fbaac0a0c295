//! The spectral preorder on complex numbers: by modulus, ties broken by descending argument.

use std::cmp::Ordering;

use num_complex::Complex64;

/// Argument in `[0, 2 pi)`.
pub fn argument(c: Complex64) -> f64 {
    let t = c.im.atan2(c.re);
    if t < 0.0 {
        t + std::f64::consts::TAU
    } else {
        t
    }
}

/// `Less` when `c1` strictly precedes `c2`, `Equal` when each precedes the other.
///
/// Moduli and arguments are compared exactly; callers that need tolerance should
/// round first.
pub fn compare_eqslantless(c1: Complex64, c2: Complex64) -> Ordering {
    let (r1, r2) = (c1.norm(), c2.norm());
    if r1 == 0.0 && r2 == 0.0 {
        return Ordering::Equal;
    }
    match r1.total_cmp(&r2) {
        Ordering::Equal => argument(c2).total_cmp(&argument(c1)),
        o => o,
    }
}

/// `c1 ⪕ c2`
pub fn eqslantless(c1: Complex64, c2: Complex64) -> bool {
    compare_eqslantless(c1, c2) != Ordering::Greater
}

/// Sorts ascending in the spectral order (stable).
pub fn sort_eqslantless<T>(items: &mut [T], key: impl Fn(&T) -> Complex64) {
    items.sort_by(|a, b| compare_eqslantless(key(a), key(b)));
}
