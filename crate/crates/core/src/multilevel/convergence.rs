use num_complex::Complex64;
use serde::Serialize;

use super::hierarchy::LevelHierarchy;
use crate::eigen::EigenPair;
use crate::fespace::{ComponentGrams, Field, ProductSpace};

/// Relative |Im| below which a value counts as real.
pub const REAL_TOL: f64 = 1e-8;

/// `log2(|lambda_N - lambda_{i-1}| / |lambda_N - lambda_i|)` for `i = 1..N-1`; `None` where undefined.
pub fn eigenvalue_orders(values: &[Complex64]) -> Vec<Option<f64>> {
    let Some(reference) = values.last() else {
        return Vec::new();
    };
    let errors: Vec<f64> = values[..values.len() - 1].iter().map(|v| (reference - v).norm()).collect();
    error_orders(&errors)
}

/// `log2(e_{i-1} / e_i)` for `i = 1..len-1`, where `e_i` is an error against the finest level.
pub fn error_orders(errors: &[f64]) -> Vec<Option<f64>> {
    (1..errors.len())
        .map(|i| {
            let (num, den) = (errors[i - 1], errors[i]);
            let r = (num / den).log2();
            (num > 0.0 && den > 0.0 && r.is_finite()).then_some(r)
        })
        .collect()
}

/// `c * candidate` with `c` minimizing `|c candidate - reference|` in the `u`-component H1 inner product.
pub fn align_eigenfunction(
    ps: &ProductSpace,
    grams: &ComponentGrams,
    candidate: &[Complex64],
    reference: &[Complex64],
) -> Vec<Complex64> {
    let xx = grams.h1_inner(ps, Field::U, candidate, candidate);
    let xr = grams.h1_inner(ps, Field::U, candidate, reference);
    let c = if xx.norm() > 0.0 { xr / xx } else { Complex64::new(1.0, 0.0) };
    candidate.iter().map(|v| c * v).collect()
}

/// For each finest-level index, the matching index on every level (greedy, nearest first).
///
/// Conjugate pairs match their counterparts because distances are measured in the complex plane.
pub fn match_levels(per_level: &[Vec<Complex64>]) -> Vec<Vec<Option<usize>>> {
    let Some(finest) = per_level.last() else {
        return Vec::new();
    };
    let mut out = vec![vec![None; per_level.len()]; finest.len()];
    for (l, values) in per_level.iter().enumerate() {
        let mut cand: Vec<(f64, usize, usize)> = Vec::new();
        for (j, f) in finest.iter().enumerate() {
            for (i, v) in values.iter().enumerate() {
                cand.push(((f - v).norm() / f.norm().max(1e-300), j, i));
            }
        }
        cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut used_f = vec![false; finest.len()];
        let mut used_v = vec![false; values.len()];
        for (_, j, i) in cand {
            if !used_f[j] && !used_v[i] {
                used_f[j] = true;
                used_v[i] = true;
                out[j][l] = Some(i);
            }
        }
    }
    out
}

/// Convergence record of one eigenvalue tracked across levels.
#[derive(Debug, Clone, Serialize)]
pub struct EigenSequence {
    /// Index on the finest level (spectral order).
    pub index: usize,
    /// `(re, im)` per level, `None` when no match exists.
    pub values: Vec<Option<(f64, f64)>>,
    pub orders: Vec<Option<f64>>,
    /// Real on every level.
    pub persistent_real: bool,
    /// Non-increasing across the last three levels (persistent real sequences only).
    pub monotone_tail: Option<bool>,
    /// H1 orders of the `u` and `phi` components, computed for isolated eigenvalues only.
    pub u_orders: Option<Vec<Option<f64>>>,
    pub phi_orders: Option<Vec<Option<f64>>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub mesh_sizes: Vec<f64>,
    pub sequences: Vec<EigenSequence>,
    /// Soft-check messages (monotonicity, complex-pair persistence).
    pub flags: Vec<String>,
}

fn is_real(z: Complex64) -> bool {
    z.im.abs() <= REAL_TOL * z.norm().max(1.0)
}

/// Builds per-eigenvalue sequences, orders and soft-check flags from per-level eigenpairs.
pub fn convergence_report(h: &LevelHierarchy, pairs: &[Vec<EigenPair>]) -> ConvergenceReport {
    let values: Vec<Vec<Complex64>> = pairs.iter().map(|v| v.iter().map(|p| p.lambda).collect()).collect();
    let matches = match_levels(&values);
    let nl = pairs.len();
    let finest = nl - 1;
    let fine_space = &h.levels[finest].space;
    let grams = (nl >= 2).then(|| ComponentGrams::new(fine_space));
    let mut flags = Vec::new();
    let mut sequences = Vec::new();
    for (j, idx) in matches.iter().enumerate() {
        let seq: Vec<Option<Complex64>> = idx.iter().enumerate().map(|(l, i)| i.map(|i| values[l][i])).collect();
        let complete: Option<Vec<Complex64>> = seq.iter().copied().collect();
        let orders = complete.as_deref().map(eigenvalue_orders).unwrap_or_else(|| vec![None; nl.saturating_sub(2)]);
        let persistent_real = complete.as_ref().is_some_and(|c| c.iter().all(|z| is_real(*z)));
        let monotone_tail = (persistent_real && nl >= 3).then(|| {
            let c = complete.as_ref().unwrap();
            let t = &c[nl - 3..];
            let slack = 1e-12 * t[0].re.abs().max(1.0);
            t[0].re + slack >= t[1].re && t[1].re + slack >= t[2].re
        });
        if monotone_tail == Some(false) {
            flags.push(format!(
                "eigenvalue {j}: real sequence is not non-increasing over the last three levels"
            ));
        }
        let lam = values[finest][j];
        let isolated = values[finest]
            .iter()
            .enumerate()
            .all(|(i, v)| i == j || (v - lam).norm() > 1e-3 * lam.norm());
        let (u_orders, phi_orders) = match (&grams, &complete, isolated && nl >= 3) {
            (Some(g), Some(_), true) => {
                let reference = &pairs[finest][j].vector;
                let mut eu = Vec::new();
                let mut ephi = Vec::new();
                for (l, i) in idx.iter().enumerate().take(finest) {
                    let x = h.prolong_vector(l, finest, &pairs[l][i.unwrap()].vector);
                    let x = align_eigenfunction(fine_space, g, &x, reference);
                    let diff: Vec<Complex64> = x.iter().zip(reference).map(|(a, b)| a - b).collect();
                    let norms = g.component_norms(fine_space, &diff);
                    let h1 = |f: Field| norms[f.index()].h1();
                    eu.push(h1(Field::U));
                    ephi.push(h1(Field::Phi1).hypot(h1(Field::Phi2)));
                }
                (Some(error_orders(&eu)), Some(error_orders(&ephi)))
            }
            _ => (None, None),
        };
        sequences.push(EigenSequence {
            index: j,
            values: seq.iter().map(|z| z.map(|z| (z.re, z.im))).collect(),
            orders,
            persistent_real,
            monotone_tail,
            u_orders,
            phi_orders,
        });
    }
    // complex pairs at the coarsest level should keep their imaginary part
    if nl >= 2 {
        for (i, z) in values[0].iter().enumerate() {
            if is_real(*z) || z.im < 0.0 {
                continue;
            }
            let fine_im = matches
                .iter()
                .enumerate()
                .find(|(_, m)| m[0] == Some(i))
                .map(|(j, _)| values[finest][j].im.abs());
            match fine_im {
                Some(f) if f > 0.5 * z.im.abs() => {}
                Some(f) => flags.push(format!(
                    "complex pair {:.6}±{:.6}i: |Im| fell to {:.6} on the finest level",
                    z.re,
                    z.im.abs(),
                    f
                )),
                None => flags.push(format!(
                    "complex pair {:.6}±{:.6}i has no counterpart on the finest level",
                    z.re,
                    z.im.abs()
                )),
            }
        }
    }
    ConvergenceReport {
        mesh_sizes: h.levels.iter().map(|l| l.h).collect(),
        sequences,
        flags,
    }
}
