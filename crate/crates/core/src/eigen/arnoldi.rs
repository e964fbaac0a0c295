//! Shift-invert Arnoldi with thick (Krylov–Schur style) restarts for `A x = lambda B x`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::order::sort_eqslantless;
use super::EigenError;
use crate::linalg::{cnorm2, dense_eig, mgs_orthogonalize, mgs_orthonormalize, norm2, scale, DenseMatrix, SparseLu, SparseMatrix};

/// Ritz values of the shift-inverted operator below this modulus stand for infinite eigenvalues.
pub const INFINITE_NU: f64 = 1e-10;
/// Eigenvalues above this modulus are not reported.
pub const MAX_LAMBDA: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArnoldiOptions {
    pub k: usize,
    pub shift: f64,
    pub tol: f64,
    pub max_restarts: usize,
    /// Krylov dimension; `max(2k + 10, 30)` when unset.
    pub ncv: Option<usize>,
    pub seed: u64,
}

impl Default for ArnoldiOptions {
    fn default() -> Self {
        ArnoldiOptions {
            k: 6,
            shift: 0.5,
            tol: 1e-8,
            max_restarts: 300,
            ncv: None,
            seed: 20_160_817,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda: Complex64,
    /// Unit 2-norm, largest entry real positive.
    pub vector: Vec<Complex64>,
    /// `|A x - lambda B x|_2 / |x|_2`
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct ArnoldiResult {
    /// Ascending in the spectral order; conjugate pairs are kept together.
    pub pairs: Vec<EigenPair>,
    /// False when the restart budget ran out; unconverged pairs are still listed.
    pub converged: bool,
    pub restarts: usize,
    pub operator_applications: usize,
    pub krylov_dim: usize,
}

impl ArnoldiResult {
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.pairs.iter().map(|p| p.lambda).collect()
    }

    pub fn max_residual(&self) -> f64 {
        self.pairs.iter().map(|p| p.residual).fold(0.0, f64::max)
    }
}

/// `|A x - lambda B x|_2 / |x|_2` with real matvecs on the real and imaginary parts.
pub fn residual(a: &SparseMatrix, b: &SparseMatrix, lambda: Complex64, x: &[Complex64]) -> f64 {
    let ax = a.matvec_complex(x);
    let bx = b.matvec_complex(x);
    let r: Vec<Complex64> = ax.iter().zip(&bx).map(|(p, q)| p - lambda * q).collect();
    cnorm2(&r) / cnorm2(x)
}

/// Scales `x` to unit norm with its largest-modulus entry real and positive.
pub fn normalize_phase(x: &mut [Complex64]) {
    let nrm = cnorm2(x);
    if nrm == 0.0 {
        return;
    }
    let mut best = Complex64::new(0.0, 0.0);
    for v in x.iter() {
        if v.norm() > best.norm() * (1.0 + 1e-12) {
            best = *v;
        }
    }
    let rot = best.conj() / (best.norm() * nrm);
    x.iter_mut().for_each(|v| *v *= rot);
}

struct ShiftInvert<'a> {
    b: &'a SparseMatrix,
    lu: SparseLu,
    applications: usize,
}

impl ShiftInvert<'_> {
    fn apply(&mut self, x: &[f64]) -> Vec<f64> {
        let mut y = self.b.matvec(x);
        self.lu.solve_in_place(&mut y);
        self.applications += 1;
        y
    }
}

struct Ritz {
    nu: Complex64,
    y: Vec<Complex64>,
}

/// The `k` eigenvalues of `A x = lambda B x` first in the spectral order among those nearest `shift`.
pub fn shift_invert_arnoldi(a: &SparseMatrix, b: &SparseMatrix, opts: &ArnoldiOptions) -> Result<ArnoldiResult, EigenError> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || b.ncols() != n {
        return Err(EigenError::BadInput(format!(
            "pencil shapes differ: A is {}x{}, B is {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    if opts.k == 0 || opts.k > n {
        return Err(EigenError::BadInput(format!("k = {} must lie in 1..={n}", opts.k)));
    }
    let shifted = a.add_scaled(-opts.shift, b);
    let lu = SparseLu::factorize(&shifted).map_err(|source| EigenError::SingularShift {
        shift: opts.shift,
        source,
    })?;
    let mut op = ShiftInvert { b, lu, applications: 0 };
    let ncv = opts.ncv.unwrap_or((2 * opts.k + 10).max(30)).max(opts.k + 3).min(n);
    let nwant = (opts.k + 2).min(ncv);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    // start inside the range of the operator so the infinite eigenspace is filtered out
    let mut v0 = random_vector(&mut rng, n);
    v0 = op.apply(&v0);
    let nrm = norm2(&v0);
    if nrm == 0.0 {
        return Err(EigenError::BadInput("B annihilates the start vector".into()));
    }
    scale(1.0 / nrm, &mut v0);
    let mut basis: Vec<Vec<f64>> = vec![v0];
    // h[i][j] for i <= ncv, j < ncv
    let mut h = vec![vec![0.0; ncv]; ncv + 1];
    let mut start = 0;
    let mut restarts = 0;

    loop {
        let m = extend(&mut op, &mut basis, &mut h, start, ncv, &mut rng);
        let hm = DenseMatrix::from_rows(&h[..m].iter().map(|r| r[..m].to_vec()).collect::<Vec<_>>());
        let ritz: Vec<Ritz> = dense_eig(&hm)?
            .into_iter()
            .map(|p| Ritz {
                nu: p.value,
                y: p.vector,
            })
            .collect();
        let mut order: Vec<usize> = (0..ritz.len()).collect();
        order.sort_by(|&i, &j| ritz[j].nu.norm().total_cmp(&ritz[i].nu.norm()).then(i.cmp(&j)));
        let valid: Vec<usize> = order
            .iter()
            .copied()
            .filter(|&i| ritz[i].nu.norm() >= INFINITE_NU && to_lambda(opts.shift, ritz[i].nu).norm() <= MAX_LAMBDA)
            .collect();
        let mut wanted: Vec<usize> = valid.iter().copied().take(nwant).collect();
        close_under_conjugation(&ritz, &valid, &mut wanted);
        let exhausted = m == n || basis.len() <= m;

        let pairs: Vec<EigenPair> = wanted
            .iter()
            .map(|&i| {
                let mut x = combine(&basis[..m], &ritz[i].y);
                normalize_phase(&mut x);
                let lambda = to_lambda(opts.shift, ritz[i].nu);
                let residual = residual(a, b, lambda, &x);
                EigenPair { lambda, vector: x, residual }
            })
            .collect();
        let all_converged = pairs.iter().all(|p| p.residual <= opts.tol);
        let enough = wanted.len() >= nwant.min(valid.len()) && (valid.len() >= opts.k || exhausted);
        if (all_converged && enough) || exhausted || restarts >= opts.max_restarts {
            let converged = all_converged && enough;
            return Ok(ArnoldiResult {
                pairs: select_first(pairs, opts.k),
                converged,
                restarts,
                operator_applications: op.applications,
                krylov_dim: m,
            });
        }

        // thick restart on the real invariant subspace of the leading Ritz vectors
        let mut keep_count = (nwant + (m - nwant) / 2).min(m - 2).max(1);
        if keep_count < order.len() && is_conjugate_pair(&ritz, order[keep_count - 1], order[keep_count]) {
            keep_count += 1;
        }
        let mut cols: Vec<Vec<f64>> = Vec::new();
        for &i in &order[..keep_count] {
            let y = &ritz[i].y;
            if ritz[i].nu.im.abs() == 0.0 {
                cols.push(y.iter().map(|c| c.re).collect());
            } else if ritz[i].nu.im > 0.0 || !order[..keep_count].iter().any(|&j| is_conjugate_pair(&ritz, i, j)) {
                cols.push(y.iter().map(|c| c.re).collect());
                cols.push(y.iter().map(|c| c.im).collect());
            }
        }
        mgs_orthonormalize(&mut cols, 1e-10);
        let p = cols.len();
        let beta = h[m][m - 1];
        let mut new_basis: Vec<Vec<f64>> = cols
            .iter()
            .map(|q| {
                let mut v = vec![0.0; n];
                for (qi, vi) in q.iter().zip(&basis[..m]) {
                    crate::linalg::axpy(*qi, vi, &mut v);
                }
                v
            })
            .collect();
        new_basis.push(basis[m].clone());
        let mut new_h = vec![vec![0.0; ncv]; ncv + 1];
        for r in 0..p {
            for c in 0..p {
                let mut s = 0.0;
                for i in 0..m {
                    let hq: f64 = (0..m).map(|j| h[i][j] * cols[c][j]).sum();
                    s += cols[r][i] * hq;
                }
                new_h[r][c] = s;
            }
        }
        for c in 0..p {
            new_h[p][c] = beta * cols[c][m - 1];
        }
        basis = new_basis;
        h = new_h;
        start = p;
        restarts += 1;
    }
}

fn to_lambda(shift: f64, nu: Complex64) -> Complex64 {
    Complex64::new(shift, 0.0) + 1.0 / nu
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn combine(basis: &[Vec<f64>], y: &[Complex64]) -> Vec<Complex64> {
    let n = basis[0].len();
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for (v, c) in basis.iter().zip(y) {
        for (xi, vi) in x.iter_mut().zip(v) {
            *xi += *c * *vi;
        }
    }
    x
}

fn is_conjugate_pair(ritz: &[Ritz], i: usize, j: usize) -> bool {
    let (a, b) = (ritz[i].nu, ritz[j].nu);
    i != j && a.im != 0.0 && (a - b.conj()).norm() <= 1e-12 * a.norm()
}

fn close_under_conjugation(ritz: &[Ritz], valid: &[usize], wanted: &mut Vec<usize>) {
    let mut extra = Vec::new();
    for &i in wanted.iter() {
        if ritz[i].nu.im == 0.0 {
            continue;
        }
        if wanted.iter().chain(&extra).any(|&j| is_conjugate_pair(ritz, i, j)) {
            continue;
        }
        if let Some(&j) = valid.iter().find(|&&j| is_conjugate_pair(ritz, i, j)) {
            extra.push(j);
        }
    }
    wanted.extend(extra);
}

fn select_first(pairs: Vec<EigenPair>, k: usize) -> Vec<EigenPair> {
    select_closed(pairs, k, |p| p.lambda)
}

/// First `k` in the spectral order, plus the partners of split conjugate pairs.
pub(crate) fn select_closed<T>(mut items: Vec<T>, k: usize, key: impl Fn(&T) -> Complex64) -> Vec<T> {
    sort_eqslantless(&mut items, &key);
    if items.len() <= k {
        return items;
    }
    let head: Vec<Complex64> = items[..k].iter().map(&key).collect();
    let mut keep = k;
    for v in super::verify_conjugate_closure(&head, 1e-8).violations {
        let target = Complex64::new(v.re, -v.im);
        let dist = |j: usize| (key(&items[j]) - target).norm();
        let partner = (keep..items.len())
            .filter(|&j| dist(j) <= 1e-8 * target.norm().max(1.0))
            .min_by(|&a, &b| dist(a).total_cmp(&dist(b)));
        if let Some(j) = partner {
            items.swap(keep, j);
            keep += 1;
        }
    }
    items.truncate(keep);
    sort_eqslantless(&mut items, &key);
    items
}

/// Runs Arnoldi steps `start..ncv`, returning the number of basis vectors with a full column of `h`.
fn extend(
    op: &mut ShiftInvert<'_>,
    basis: &mut Vec<Vec<f64>>,
    h: &mut [Vec<f64>],
    start: usize,
    ncv: usize,
    rng: &mut ChaCha8Rng,
) -> usize {
    let n = basis[0].len();
    for j in start..ncv {
        let mut w = op.apply(&basis[j]);
        let before = norm2(&w);
        let (coeffs, rest) = mgs_orthogonalize(&basis[..=j], &mut w);
        for (i, c) in coeffs.iter().enumerate() {
            h[i][j] = *c;
        }
        if rest > 1e-12 * before.max(f64::MIN_POSITIVE) {
            h[j + 1][j] = rest;
            scale(1.0 / rest, &mut w);
            basis.push(w);
            continue;
        }
        // invariant subspace found: continue with a fresh direction
        h[j + 1][j] = 0.0;
        if j + 1 >= n {
            return j + 1;
        }
        let mut fresh = None;
        for _ in 0..3 {
            let mut r = random_vector(rng, n);
            let (_, rn) = mgs_orthogonalize(&basis[..=j], &mut r);
            if rn > 1e-8 {
                scale(1.0 / rn, &mut r);
                fresh = Some(r);
                break;
            }
        }
        match fresh {
            Some(r) => basis.push(r),
            None => return j + 1,
        }
    }
    ncv
}
