//! Sparse matrices and the direct solves used by the time stepper.
//!
//! The factorization itself is delegated to `faer`'s supernodal LU with
//! partial pivoting. Everything around it (storage, constraint bordering,
//! residual control, the dense reference solver) lives here.

mod csr;
mod dense;

pub use csr::CsrMatrix;
pub use dense::dense_oracle;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Col;

use crate::error::SolveError;

const RESIDUAL_FACTOR: f64 = 1e-10;
const MAX_REFINEMENT_STEPS: usize = 6;

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// LU factorization of a square sparse matrix, reusable for many right-hand
/// sides.
pub struct SparseLu {
    matrix: CsrMatrix,
    norm_inf: f64,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
}

impl std::fmt::Debug for SparseLu {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SparseLu")
            .field("n", &self.matrix.nrows())
            .field("nnz", &self.matrix.nnz())
            .finish()
    }
}

impl SparseLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self, SolveError> {
        if a.nrows() != a.ncols() {
            return Err(SolveError::Dimension(format!(
                "matrix is {} x {}, expected square",
                a.nrows(),
                a.ncols()
            )));
        }
        let n = a.nrows();
        if let Some(i) = (0..n).find(|&i| a.row(i).all(|(_, v)| v == 0.0)) {
            return Err(SolveError::Singular { index: i });
        }
        let triplets: Vec<Triplet<usize, usize, f64>> = (0..n)
            .flat_map(|i| a.row(i).map(move |(j, v)| Triplet::new(i, j, v)))
            .collect();
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| SolveError::Backend(format!("{e:?}")))?;
        let lu = mat.sp_lu().map_err(|e| match e {
            faer::sparse::linalg::LuError::SymbolicSingular { index } => {
                SolveError::Singular { index }
            }
            other => SolveError::Backend(format!("{other:?}")),
        })?;
        Ok(SparseLu {
            norm_inf: a.norm_inf(),
            matrix: a.clone(),
            lu,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn raw_solve(&self, b: &[f64]) -> Vec<f64> {
        let rhs = Col::from_fn(b.len(), |i| b[i]);
        let x = self.lu.solve(&rhs);
        (0..b.len()).map(|i| x[i]).collect()
    }

    /// Solves `A x = b`, applying iterative refinement until
    /// `|Ax - b| <= 1e-10 (|A|_inf |x| + |b|)`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, SolveError> {
        let n = self.dim();
        if b.len() != n {
            return Err(SolveError::Dimension(format!(
                "right-hand side has length {}, expected {n}",
                b.len()
            )));
        }
        refine(b, self.norm_inf, |x| self.matrix.matvec(x), |r| Ok(self.raw_solve(r)))
    }
}

/// Iterative refinement of `apply(x) = b` with an approximate inverse.
///
/// The norm-wise bound is loose for blocks with small entries (the
/// divergence rows of the Stokes system), so refinement runs until the
/// residual stops halving and the best iterate is then checked against it.
fn refine(
    b: &[f64],
    norm_inf: f64,
    apply: impl Fn(&[f64]) -> Vec<f64>,
    inverse: impl Fn(&[f64]) -> Result<Vec<f64>, SolveError>,
) -> Result<Vec<f64>, SolveError> {
    let finite = |v: Vec<f64>| match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(SolveError::Singular { index: i }),
        None => Ok(v),
    };
    let mut x = finite(inverse(b)?)?;
    let b_norm = norm2(b);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..=MAX_REFINEMENT_STEPS {
        let ax = apply(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let res = norm2(&r);
        let stalled = best.as_ref().is_some_and(|(prev, _)| res > 0.5 * prev);
        if best.as_ref().is_none_or(|(prev, _)| res < *prev) {
            best = Some((res, x.clone()));
        }
        if res == 0.0 || stalled {
            break;
        }
        let dx = finite(inverse(&r)?)?;
        x.iter_mut().zip(&dx).for_each(|(xi, di)| *xi += di);
    }
    let (res, x) = best.expect("at least one iterate");
    let bound = RESIDUAL_FACTOR * (norm_inf * norm2(&x) + b_norm);
    if res <= bound {
        Ok(x)
    } else {
        Err(SolveError::Inaccurate { residual: res, bound })
    }
}

/// Solves a square sparse system with a direct factorization.
pub fn solve_sparse(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>, SolveError> {
    SparseLu::factor(a)?.solve(b)
}

/// Core block bordered by dense constraint rows:
/// `[[A, C^T], [C, 0]] [x; mu] = [rhs; constraint_rhs]`.
#[derive(Debug, Clone)]
pub struct AugmentedSystem {
    pub core: CsrMatrix,
    pub constraints: Vec<Vec<f64>>,
    pub constraint_rhs: Vec<f64>,
    pub rhs: Vec<f64>,
}

/// Reusable factorization of `[[A, C^T], [C, 0]]`.
///
/// Dense constraint rows ruin the fill-reducing ordering of a sparse LU, so
/// the factorized matrix uses sparse surrogate rows `E` (one scaled unit
/// vector per constraint) instead. The difference to the true bordered
/// matrix has rank `2m` and is removed with the Woodbury identity; refinement
/// runs against the true matrix. If the surrogate system happens to be
/// singular the bordered matrix is factorized directly.
#[derive(Debug)]
pub struct AugmentedFactorization {
    n: usize,
    m: usize,
    /// The true bordered matrix, for residuals.
    full: CsrMatrix,
    norm_inf: f64,
    lu: SparseLu,
    correction: Option<Woodbury>,
}

#[derive(Debug)]
struct Woodbury {
    /// `d_k = C_k - E_k`, length `n`.
    diffs: Vec<Vec<f64>>,
    /// Surrogate solves against the `2m` update columns.
    z: Vec<Vec<f64>>,
    /// Capacitance matrix `I + V^T Z`.
    cap: Vec<Vec<f64>>,
}

/// Rejects constraint sets whose Gram matrix `C C^T` is numerically singular.
fn check_constraint_rank(rows: &[Vec<f64>]) -> Result<(), SolveError> {
    let m = rows.len();
    let mut g = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            g[i][j] = rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum();
        }
    }
    let scale = (0..m).map(|i| g[i][i]).fold(0.0, f64::max);
    if m > 0 && scale == 0.0 {
        return Err(SolveError::RankDeficient("all constraint rows are zero".into()));
    }
    // symmetric elimination with diagonal pivoting
    let mut used = vec![false; m];
    for _ in 0..m {
        let (p, piv) = (0..m)
            .filter(|&i| !used[i])
            .map(|i| (i, g[i][i]))
            .fold((usize::MAX, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        if piv <= 1e-12 * scale {
            return Err(SolveError::RankDeficient(format!(
                "constraint row {p} is linearly dependent on the others"
            )));
        }
        used[p] = true;
        for i in 0..m {
            if used[i] {
                continue;
            }
            let f = g[i][p] / piv;
            for j in 0..m {
                g[i][j] -= f * g[p][j];
            }
        }
    }
    Ok(())
}

fn singular_to_rank(e: SolveError) -> SolveError {
    match e {
        SolveError::Singular { index } => {
            SolveError::RankDeficient(format!("augmented matrix singular at pivot {index}"))
        }
        other => other,
    }
}

fn bordered(core: &CsrMatrix, rows: &[Vec<f64>]) -> CsrMatrix {
    let n = core.nrows();
    let m = rows.len();
    let mut trip = core.triplets();
    for (k, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v != 0.0 {
                trip.push((n + k, j, v));
                trip.push((j, n + k, v));
            }
        }
    }
    CsrMatrix::from_triplets(n + m, n + m, &trip)
}

impl AugmentedFactorization {
    pub fn new(core: &CsrMatrix, constraints: &[Vec<f64>]) -> Result<Self, SolveError> {
        let n = core.nrows();
        if core.ncols() != n {
            return Err(SolveError::Dimension("core block must be square".into()));
        }
        if let Some(r) = constraints.iter().position(|r| r.len() != n) {
            return Err(SolveError::Dimension(format!(
                "constraint row {r} has length {}, expected {n}",
                constraints[r].len()
            )));
        }
        check_constraint_rank(constraints)?;
        let m = constraints.len();
        let full = bordered(core, constraints);
        let norm_inf = full.norm_inf();
        if let Some((lu, correction)) = Self::surrogate(core, constraints) {
            return Ok(AugmentedFactorization { n, m, full, norm_inf, lu, correction: Some(correction) });
        }
        let lu = SparseLu::factor(&full).map_err(singular_to_rank)?;
        Ok(AugmentedFactorization { n, m, full, norm_inf, lu, correction: None })
    }

    fn surrogate(core: &CsrMatrix, constraints: &[Vec<f64>]) -> Option<(SparseLu, Woodbury)> {
        let n = core.nrows();
        let m = constraints.len();
        let mut chosen: Vec<usize> = Vec::with_capacity(m);
        let mut pins = Vec::with_capacity(m);
        for row in constraints {
            let (j, v) = row
                .iter()
                .enumerate()
                .filter(|(j, _)| !chosen.contains(j))
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))?;
            if *v == 0.0 {
                return None;
            }
            chosen.push(j);
            let mut e = vec![0.0; n];
            e[j] = *v;
            pins.push(e);
        }
        let lu = SparseLu::factor(&bordered(core, &pins)).ok()?;
        let diffs: Vec<Vec<f64>> = constraints
            .iter()
            .zip(&pins)
            .map(|(c, e)| c.iter().zip(e).map(|(a, b)| a - b).collect())
            .collect();
        // U = [d_1 .. d_m, e_{n+1} .. e_{n+m}], V = [e_{n+1} .. e_{n+m}, d_1 .. d_m]
        let mut z = Vec::with_capacity(2 * m);
        for d in &diffs {
            let mut col = d.clone();
            col.extend(std::iter::repeat_n(0.0, m));
            z.push(lu.raw_solve(&col));
        }
        for k in 0..m {
            let mut col = vec![0.0; n + m];
            col[n + k] = 1.0;
            z.push(lu.raw_solve(&col));
        }
        if z.iter().flatten().any(|v| !v.is_finite()) {
            return None;
        }
        let cap: Vec<Vec<f64>> = (0..2 * m)
            .map(|i| {
                (0..2 * m)
                    .map(|j| {
                        let vz = Woodbury::apply_vt(&diffs, n, i, &z[j]);
                        vz + if i == j { 1.0 } else { 0.0 }
                    })
                    .collect()
            })
            .collect();
        Some((lu, Woodbury { diffs, z, cap }))
    }

    pub fn core_dim(&self) -> usize {
        self.n
    }

    pub fn num_constraints(&self) -> usize {
        self.m
    }

    fn apply_inverse(&self, b: &[f64]) -> Result<Vec<f64>, SolveError> {
        let mut y = self.lu.raw_solve(b);
        if let Some(w) = &self.correction {
            let vty: Vec<f64> = (0..w.z.len()).map(|i| Woodbury::apply_vt(&w.diffs, self.n, i, &y)).collect();
            let c = dense_oracle(&w.cap, &vty).map_err(singular_to_rank)?;
            for (zj, cj) in w.z.iter().zip(&c) {
                y.iter_mut().zip(zj).for_each(|(a, b)| *a -= cj * b);
            }
        }
        Ok(y)
    }

    /// Returns `(x, multipliers)`.
    pub fn solve(&self, rhs: &[f64], constraint_rhs: &[f64]) -> Result<(Vec<f64>, Vec<f64>), SolveError> {
        if rhs.len() != self.n || constraint_rhs.len() != self.m {
            return Err(SolveError::Dimension(format!(
                "got rhs lengths ({}, {}), expected ({}, {})",
                rhs.len(),
                constraint_rhs.len(),
                self.n,
                self.m
            )));
        }
        let mut b = rhs.to_vec();
        b.extend_from_slice(constraint_rhs);
        let mut z = refine(&b, self.norm_inf, |x| self.full.matvec(x), |r| self.apply_inverse(r))
            .map_err(singular_to_rank)?;
        let mu = z.split_off(self.n);
        Ok((z, mu))
    }
}

impl Woodbury {
    /// Row `i` of `V^T` applied to `x` (length `n + m`).
    fn apply_vt(diffs: &[Vec<f64>], n: usize, i: usize, x: &[f64]) -> f64 {
        let m = diffs.len();
        if i < m {
            x[n + i]
        } else {
            diffs[i - m].iter().zip(x).map(|(a, b)| a * b).sum()
        }
    }
}

/// One-shot solve of a constrained system; see [`AugmentedFactorization`].
pub fn solve_augmented(sys: &AugmentedSystem) -> Result<(Vec<f64>, Vec<f64>), SolveError> {
    if sys.constraints.len() != sys.constraint_rhs.len() {
        return Err(SolveError::Dimension(
            "constraint rows and right-hand sides differ in number".into(),
        ));
    }
    AugmentedFactorization::new(&sys.core, &sys.constraints)?.solve(&sys.rhs, &sys.constraint_rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poisson_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t)
    }

    #[test]
    fn identity_system() {
        let b = vec![1.0, -2.0, 3.5];
        let x = solve_sparse(&CsrMatrix::identity(3), &b).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn tridiagonal_matches_dense() {
        let a = poisson_1d(4);
        let b = vec![1.0; 4];
        let x = solve_sparse(&a, &b).unwrap();
        let xd = dense_oracle(&a.to_dense(), &b).unwrap();
        // exact solution of the n = 4 Poisson system with unit load
        let exact = [2.0, 3.0, 3.0, 2.0];
        for i in 0..4 {
            assert!((x[i] - xd[i]).abs() < 1e-12);
            assert!((x[i] - exact[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_row_is_singular() {
        let a = CsrMatrix::from_triplets(3, 3, &[(0, 0, 1.0), (0, 1, 2.0), (2, 2, 1.0)]);
        assert!(matches!(
            solve_sparse(&a, &[1.0, 1.0, 1.0]),
            Err(SolveError::Singular { index: 1 })
        ));
    }

    #[test]
    fn numerically_singular_detected() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]);
        assert!(solve_sparse(&a, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn contradictory_constraints_rejected() {
        let a = poisson_1d(3);
        let sys = AugmentedSystem {
            core: a,
            constraints: vec![vec![1.0; 3], vec![1.0; 3]],
            constraint_rhs: vec![0.0, 1.0],
            rhs: vec![0.0; 3],
        };
        assert!(matches!(solve_augmented(&sys), Err(SolveError::RankDeficient(_))));
    }

    #[test]
    fn constraint_order_does_not_change_solution() {
        let n = 6;
        let mut t = Vec::new();
        // singular 1-D Neumann Laplacian
        for i in 0..n - 1 {
            t.extend([(i, i, 1.0), (i + 1, i + 1, 1.0), (i, i + 1, -1.0), (i + 1, i, -1.0)]);
        }
        let a = CsrMatrix::from_triplets(n, n, &t);
        let r1 = vec![1.0; n];
        let r2: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let b: Vec<f64> = vec![1.0, 0.0, -1.0, 0.5, -0.5, 0.0];
        let (x1, _) = solve_augmented(&AugmentedSystem {
            core: a.clone(),
            constraints: vec![r1.clone()],
            constraint_rhs: vec![2.0],
            rhs: b.clone(),
        })
        .unwrap();
        let (x2, _) = solve_augmented(&AugmentedSystem {
            core: a.clone(),
            constraints: vec![r1.clone(), r2.clone()],
            constraint_rhs: vec![2.0, 1.0],
            rhs: b.clone(),
        })
        .unwrap();
        let (x3, _) = solve_augmented(&AugmentedSystem {
            core: a,
            constraints: vec![r2, r1],
            constraint_rhs: vec![1.0, 2.0],
            rhs: b,
        })
        .unwrap();
        for i in 0..n {
            assert!((x2[i] - x3[i]).abs() < 1e-12);
        }
        assert!((x1.iter().sum::<f64>() - 2.0).abs() < 1e-12);
    }

    fn dense_bordered(a: &CsrMatrix, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = a.nrows();
        let m = rows.len();
        let mut d: Vec<Vec<f64>> = a
            .to_dense()
            .into_iter()
            .enumerate()
            .map(|(i, mut r)| {
                r.extend(rows.iter().map(|c| c[i]));
                r
            })
            .collect();
        for r in rows {
            let mut row = r.clone();
            row.extend(std::iter::repeat_n(0.0, m));
            d.push(row);
        }
        assert_eq!(d.len(), n + m);
        d
    }

    #[test]
    fn dense_constraints_match_dense_oracle() {
        let n = 40;
        let mut t = Vec::new();
        // singular Neumann chain plus a weak coupling further out
        for i in 0..n - 1 {
            t.extend([(i, i, 1.0), (i + 1, i + 1, 1.0), (i, i + 1, -1.0), (i + 1, i, -1.0)]);
        }
        for i in 0..n - 5 {
            t.extend([(i, i + 5, 0.1), (i + 5, i, 0.1), (i, i, 0.1), (i + 5, i + 5, 0.1)]);
        }
        let a = CsrMatrix::from_triplets(n, n, &t);
        let rows = vec![
            (0..n).map(|i| 1.0 + 0.01 * i as f64).collect::<Vec<_>>(),
            (0..n).map(|i| ((i as f64) * 0.7).sin()).collect(),
            (0..n).map(|i| if i % 3 == 0 { 1.0 } else { 0.0 }).collect(),
        ];
        let b: Vec<f64> = (0..n).map(|i| ((i * i) as f64 * 0.13).cos()).collect();
        let c = [0.5, -1.0, 2.0];
        let fact = AugmentedFactorization::new(&a, &rows).unwrap();
        assert!(fact.correction.is_some());
        let (x, mu) = fact.solve(&b, &c).unwrap();
        let mut rhs = b.clone();
        rhs.extend_from_slice(&c);
        let z = dense_oracle(&dense_bordered(&a, &rows), &rhs).unwrap();
        let scale = z.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for (got, want) in x.iter().chain(&mu).zip(&z) {
            assert!((got - want).abs() <= 1e-11 * scale, "{got} vs {want}");
        }
    }

    #[test]
    fn falls_back_when_surrogate_is_singular() {
        // pinning the largest entry of the only constraint leaves the
        // kernel of this core intact: it is spanned by e_1
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0)]);
        let rows = vec![vec![2.0, 1.0]];
        let fact = AugmentedFactorization::new(&a, &rows).unwrap();
        assert!(fact.correction.is_none());
        let (x, _) = fact.solve(&[1.0, 0.0], &[3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }
}
