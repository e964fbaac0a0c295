use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;

use super::hierarchy::LevelHierarchy;
use super::MultilevelError;
use crate::eigen::{normalize_phase, residual, shift_invert_arnoldi, ArnoldiOptions, EigenError, EigenPair};
use crate::eigen::arnoldi::{INFINITE_NU, MAX_LAMBDA};
use crate::linalg::{dense_eig, dot, mgs_orthonormalize, norm2, DenseLu, DenseMatrix, SparseLu, SparseMatrix};

/// Relative remaining norm below which a correction column counts as dependent.
pub const DROP_TOL: f64 = 1e-8;

/// Outcome of one projected solve on an enriched coarse space.
#[derive(Debug, Clone)]
pub struct EnrichedSolve {
    pub pairs: Vec<EigenPair>,
    /// Columns of `C`: coarse dimension plus kept corrections.
    pub basis_dim: usize,
    pub corrections: usize,
    pub dropped: usize,
}

/// Per-level record of the multi-level scheme.
#[derive(Debug, Clone, Serialize)]
pub struct LevelRecord {
    pub level: usize,
    pub dofs: usize,
    pub basis_dim: usize,
    pub corrections: usize,
    pub dropped: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct MultilevelResult {
    /// `pairs[i]`: the eigenpairs on level `i` (level 0 from the coarse solve).
    pub pairs: Vec<Vec<EigenPair>>,
    pub records: Vec<LevelRecord>,
    pub warnings: Vec<String>,
    pub coarse_converged: bool,
}

impl MultilevelResult {
    pub fn finest(&self) -> &[EigenPair] {
        self.pairs.last().map(|v| v.as_slice()).unwrap_or(&[])
    }
}

/// Corrections and projected solve on one level.
///
/// `coarse` maps coarse coefficients to this level (its columns span the coarse space), `a_lu`
/// factorizes `a`, and `previous` holds approximate eigenpairs already expressed on this level.
/// For each previous pair the correction solves `a w = lambda b x`; only one member of a conjugate
/// pair is used and its real and imaginary parts become two columns.
pub fn enrichment_step(
    a: &SparseMatrix,
    b: &SparseMatrix,
    a_lu: &SparseLu,
    coarse: &SparseMatrix,
    previous: &[(Complex64, Vec<Complex64>)],
    k: usize,
    shift: f64,
) -> Result<EnrichedSolve, MultilevelError> {
    let n = a.nrows();
    let n0 = coarse.ncols();

    let mut columns: Vec<Vec<f64>> = Vec::new();
    for (lambda, x) in previous {
        if lambda.im < 0.0 && previous.iter().any(|(mu, _)| (*mu - lambda.conj()).norm() <= 1e-8 * lambda.norm()) {
            continue;
        }
        let solve = |part: Vec<f64>| -> Vec<f64> {
            let mut r = b.matvec(&part);
            a_lu.solve_in_place(&mut r);
            r
        };
        let zr = solve(x.iter().map(|c| c.re).collect());
        let zi = solve(x.iter().map(|c| c.im).collect());
        // w = lambda (zr + i zi)
        let wr: Vec<f64> = zr.iter().zip(&zi).map(|(r, i)| lambda.re * r - lambda.im * i).collect();
        columns.push(wr);
        if lambda.im != 0.0 {
            let wi: Vec<f64> = zr.iter().zip(&zi).map(|(r, i)| lambda.im * r + lambda.re * i).collect();
            columns.push(wi);
        }
    }
    let requested = columns.len();

    // remove the coarse-space component: w -= P (P^T P)^{-1} P^T w, twice
    let ptp = coarse.transpose().matmul(coarse).to_dense();
    let gram_lu = DenseLu::factorize(&ptp)?;
    let coarse_t = coarse.transpose();
    let mut kept_columns = Vec::new();
    for mut w in columns {
        let original = norm2(&w);
        for _ in 0..2 {
            let c = gram_lu.solve(&coarse_t.matvec(&w));
            let pc = coarse.matvec(&c);
            w.iter_mut().zip(&pc).for_each(|(wi, p)| *wi -= p);
        }
        if norm2(&w) > DROP_TOL * original {
            kept_columns.push(w);
        }
    }
    let mut w_cols = kept_columns;
    mgs_orthonormalize(&mut w_cols, DROP_TOL);
    let corrections = w_cols.len();
    let dropped = requested - corrections;

    // projected pencil on C = [coarse | W]
    let d = n0 + corrections;
    let project = |m: &SparseMatrix| -> DenseMatrix {
        let mp = m.matmul(coarse);
        let cc = coarse_t.matmul(&mp).to_dense();
        let mw: Vec<Vec<f64>> = w_cols.iter().map(|w| m.matvec(w)).collect();
        let mut out = DenseMatrix::zeros(d, d);
        for i in 0..n0 {
            for j in 0..n0 {
                out[(i, j)] = cc[(i, j)];
            }
        }
        for (j, mwj) in mw.iter().enumerate() {
            let top = coarse_t.matvec(mwj);
            for i in 0..n0 {
                out[(i, n0 + j)] = top[i];
            }
            for (i, wi) in w_cols.iter().enumerate() {
                out[(n0 + i, n0 + j)] = dot(wi, mwj);
            }
        }
        let mpt = mp.transpose();
        for (i, wi) in w_cols.iter().enumerate() {
            let row = mpt.matvec(wi);
            for j in 0..n0 {
                out[(n0 + i, j)] = row[j];
            }
        }
        out
    };
    let ap = project(a);
    let bp = project(b);
    let shifted = ap.add_scaled(-shift, &bp);
    let lu = DenseLu::factorize(&shifted).map_err(|e| match e {
        crate::linalg::DenseError::Singular(_) => MultilevelError::Eigen(EigenError::BadInput(format!(
            "projected pencil is singular at shift {shift}; perturb the shift slightly"
        ))),
        other => MultilevelError::Dense(other),
    })?;
    let op = lu.solve_matrix(&bp);
    let mut pairs = Vec::new();
    for ep in dense_eig(&op)? {
        if ep.value.norm() < INFINITE_NU {
            continue;
        }
        let lambda = Complex64::new(shift, 0.0) + 1.0 / ep.value;
        if lambda.norm() > MAX_LAMBDA {
            continue;
        }
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        let gc = &ep.vector[..n0];
        let (gr, gi): (Vec<f64>, Vec<f64>) = gc.iter().map(|c| (c.re, c.im)).unzip();
        let (xr, xi) = (coarse.matvec(&gr), coarse.matvec(&gi));
        for i in 0..n {
            x[i] = Complex64::new(xr[i], xi[i]);
        }
        for (w, g) in w_cols.iter().zip(&ep.vector[n0..]) {
            for (xi, wi) in x.iter_mut().zip(w) {
                *xi += *g * *wi;
            }
        }
        normalize_phase(&mut x);
        pairs.push((lambda, x));
    }
    let pairs = crate::eigen::arnoldi::select_closed(pairs, k, |p| p.0);
    let pairs = pairs
        .into_iter()
        .map(|(lambda, vector)| EigenPair {
            residual: residual(a, b, lambda, &vector),
            lambda,
            vector,
        })
        .collect();
    Ok(EnrichedSolve {
        pairs,
        basis_dim: d,
        corrections,
        dropped,
    })
}

/// The multi-level scheme: a coarse eigensolve followed by one correction and one projected
/// solve per finer level.
pub fn algorithm1(h: &LevelHierarchy, opts: &ArnoldiOptions) -> Result<MultilevelResult, MultilevelError> {
    let mut warnings = Vec::new();
    let t0 = Instant::now();
    let coarse = &h.levels[0];
    let first = shift_invert_arnoldi(&coarse.a, &coarse.b, opts).map_err(MultilevelError::CoarseSolve)?;
    if !first.converged {
        warnings.push(format!(
            "coarse solve did not converge within {} restarts (max residual {:.3e})",
            opts.max_restarts,
            first.max_residual()
        ));
    }
    let mut records = vec![LevelRecord {
        level: 0,
        dofs: coarse.dim(),
        basis_dim: coarse.dim(),
        corrections: 0,
        dropped: 0,
        seconds: t0.elapsed().as_secs_f64(),
    }];
    let mut all = vec![first.pairs];
    for i in 1..h.levels.len() {
        let t = Instant::now();
        let level = &h.levels[i];
        let lu = SparseLu::factorize(&level.a)?;
        let previous: Vec<(Complex64, Vec<Complex64>)> = all[i - 1]
            .iter()
            .map(|p| (p.lambda, h.prolongations[i - 1].matvec_complex(&p.vector)))
            .collect();
        let step = enrichment_step(&level.a, &level.b, &lu, &h.composite[i], &previous, opts.k, opts.shift)?;
        if step.dropped > 0 {
            warnings.push(format!(
                "level {i}: {} dependent correction column(s) dropped",
                step.dropped
            ));
        }
        records.push(LevelRecord {
            level: i,
            dofs: level.dim(),
            basis_dim: step.basis_dim,
            corrections: step.corrections,
            dropped: step.dropped,
            seconds: t.elapsed().as_secs_f64(),
        });
        all.push(step.pairs);
    }
    Ok(MultilevelResult {
        pairs: all,
        records,
        warnings,
        coarse_converged: first.converged,
    })
}
