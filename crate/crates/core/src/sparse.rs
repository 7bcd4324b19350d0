//! Compressed sparse row storage and a reusable sparse LU factorization.

use std::sync::Once;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::linalg::LuError;
use faer::sparse::{SparseColMat, Triplet};
use faer::MatMut;

use crate::error::{invalid, Error, Result};

/// Collects `(row, col, value)` entries; duplicates are summed in insertion order.
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    n_rows: usize,
    n_cols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        Self { n_rows, n_cols, entries: Vec::new() }
    }

    pub fn with_capacity(n_rows: usize, n_cols: usize, cap: usize) -> Self {
        Self { n_rows, n_cols, entries: Vec::with_capacity(cap) }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.n_rows && col < self.n_cols);
        self.entries.push((row, col, value));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn build(mut self) -> Result<SparseMatrix> {
        for &(r, c, v) in &self.entries {
            if r >= self.n_rows || c >= self.n_cols {
                return Err(invalid(format!(
                    "entry ({r},{c}) outside {}x{} matrix",
                    self.n_rows, self.n_cols
                )));
            }
            if !v.is_finite() {
                return Err(invalid(format!("non-finite entry at ({r},{c})")));
            }
        }
        // stable sort keeps the insertion order among duplicates
        self.entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; self.n_rows + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in &self.entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..self.n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(SparseMatrix { n_rows: self.n_rows, n_cols: self.n_cols, row_ptr, col_idx, values })
    }
}

/// Sparse matrix in compressed row form with sorted, unique column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut b = TripletBuilder::with_capacity(n_rows, n_cols, triplets.len());
        b.entries.extend_from_slice(triplets);
        b.build()
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[a..b], &self.values[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_cols {
            return Err(Error::DimensionMismatch { expected: self.n_cols, found: x.len() });
        }
        let mut y = vec![0.0; self.n_rows];
        self.mul_vec_into(x, &mut y);
        Ok(y)
    }

    /// `y = A x` without length checks beyond debug assertions.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        debug_assert_eq!(y.len(), self.n_rows);
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
        }
    }

    /// `y += s A x`.
    pub fn mul_vec_acc(&self, s: f64, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        debug_assert_eq!(y.len(), self.n_rows);
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            let dot: f64 = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
            *yi += s * dot;
        }
    }

    pub fn transpose(&self) -> Self {
        let mut b = TripletBuilder::with_capacity(self.n_cols, self.n_rows, self.nnz());
        for (i, j, v) in self.iter() {
            b.push(j, i, v);
        }
        b.build().expect("transpose of a valid matrix")
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn max_asymmetry(&self) -> f64 {
        self.iter().map(|(i, j, v)| (v - self.get(j, i)).abs()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Submatrix with rows/cols mapped through `row_map`/`col_map` (`None` drops the index).
    pub fn select(
        &self,
        row_map: &[Option<usize>],
        n_rows: usize,
        col_map: &[Option<usize>],
        n_cols: usize,
    ) -> Self {
        let mut b = TripletBuilder::with_capacity(n_rows, n_cols, self.nnz());
        for (i, j, v) in self.iter() {
            if let (Some(r), Some(c)) = (row_map[i], col_map[j]) {
                b.push(r, c, v);
            }
        }
        b.build().expect("selection of a valid matrix")
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let trips: Vec<Triplet<usize, usize, f64>> =
            self.iter().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        SparseColMat::try_new_from_triplets(self.n_rows, self.n_cols, &trips)
            .map_err(|e| Error::Factorization(format!("{e:?}")))
    }
}

static SEQUENTIAL: Once = Once::new();

thread_local! {
    static FACTORIZATIONS: std::cell::Cell<usize> = const { std::cell::Cell::new(0) };
}

/// Numeric factorizations completed on the current thread so far.
pub fn factorization_count() -> usize {
    FACTORIZATIONS.with(|c| c.get())
}

fn force_sequential() {
    // fixed operation order regardless of the worker pool
    SEQUENTIAL.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
}

/// Fill-reducing ordering and symbolic structure of a square sparsity pattern.
#[derive(Debug, Clone)]
pub struct SymbolicFactorization {
    n: usize,
    pattern: Vec<(usize, usize)>,
    inner: SymbolicLu<usize>,
}

impl SymbolicFactorization {
    pub fn analyze(a: &SparseMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch { expected: a.n_rows, found: a.n_cols });
        }
        force_sequential();
        let m = a.to_faer()?;
        let inner = SymbolicLu::try_new(m.symbolic()).map_err(|e| Error::Factorization(format!("{e:?}")))?;
        Ok(Self { n: a.n_rows, pattern: a.iter().map(|(i, j, _)| (i, j)).collect(), inner })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn matches(&self, a: &SparseMatrix) -> bool {
        a.n_rows == self.n && a.nnz() == self.pattern.len() && a.iter().zip(&self.pattern).all(|((i, j, _), &p)| (i, j) == p)
    }
}

/// Numeric LU factors; solves are read-only and may run concurrently.
#[derive(Debug, Clone)]
pub struct Factorization {
    n: usize,
    lu: Lu<usize, f64>,
}

/// Factorize a square matrix. A zero pivot is reported with its row index.
pub fn factorize(a: &SparseMatrix) -> Result<Factorization> {
    let sym = SymbolicFactorization::analyze(a)?;
    factorize_with(&sym, a)
}

/// Numeric factorization reusing an earlier symbolic analysis of the same pattern.
pub fn factorize_with(sym: &SymbolicFactorization, a: &SparseMatrix) -> Result<Factorization> {
    if !sym.matches(a) {
        return Err(invalid("sparsity pattern differs from the symbolic analysis"));
    }
    force_sequential();
    let m = a.to_faer()?;
    let lu = Lu::try_new_with_symbolic(sym.inner.clone(), m.as_ref()).map_err(|e| match e {
        LuError::SymbolicSingular { index } => Error::SingularPivot { row: index },
        LuError::Generic(g) => Error::Factorization(format!("{g:?}")),
    })?;
    let f = Factorization { n: a.n_rows, lu };
    f.check_pivots(a)?;
    FACTORIZATIONS.with(|c| c.set(c.get() + 1));
    Ok(f)
}

impl Factorization {
    pub fn dim(&self) -> usize {
        self.n
    }

    // A numerically zero pivot yields inf/NaN in the solve of a generic vector.
    fn check_pivots(&self, a: &SparseMatrix) -> Result<()> {
        let probe: Vec<f64> = (0..self.n).map(|i| 1.0 + (i % 7) as f64 * 0.125).collect();
        let b = a.mul_vec(&probe)?;
        let x = self.solve_unchecked(&b);
        if let Some(row) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::SingularPivot { row });
        }
        Ok(())
    }

    fn solve_unchecked(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.lu.solve_in_place(MatMut::from_column_major_slice_mut(&mut x, self.n, 1));
        x
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: b.len() });
        }
        Ok(self.solve_unchecked(b))
    }

    /// Solve all right-hand sides as one column block against the shared factors.
    pub fn solve_many(&self, rhs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        if let Some(bad) = rhs.iter().find(|b| b.len() != self.n) {
            return Err(Error::DimensionMismatch { expected: self.n, found: bad.len() });
        }
        let k = rhs.len();
        if k == 0 {
            return Ok(Vec::new());
        }
        let mut block = Vec::with_capacity(self.n * k);
        for b in rhs {
            block.extend_from_slice(b);
        }
        self.lu.solve_in_place(MatMut::from_column_major_slice_mut(&mut block, self.n, k));
        Ok(block.chunks_exact(self.n).map(|c| c.to_vec()).collect())
    }
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, seed: u64) -> SparseMatrix {
        // B^T B + n I with a sparse random B
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut dense = vec![vec![0.0; n]; n];
        for row in dense.iter_mut() {
            for _ in 0..4 {
                row[rng.gen_range(0..n)] += rng.gen_range(-1.0..1.0);
            }
        }
        let mut b = TripletBuilder::new(n, n);
        for i in 0..n {
            for j in 0..n {
                let v: f64 = (0..n).map(|k| dense[k][i] * dense[k][j]).sum::<f64>() + if i == j { n as f64 } else { 0.0 };
                if v != 0.0 {
                    b.push(i, j, v);
                }
            }
        }
        b.build().unwrap()
    }

    fn residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> f64 {
        let ax = a.mul_vec(x).unwrap();
        let r: Vec<f64> = ax.iter().zip(b).map(|(p, q)| p - q).collect();
        norm2(&r) / norm2(b).max(1.0)
    }

    #[test]
    fn duplicates_summed() {
        let m = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, 2.0), (0, 0, 0.5), (0, 1, 3.0)]).unwrap();
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(0, 0), 1.5);
        assert_eq!(m.get(1, 0), 0.0);
    }

    #[test]
    fn rejects_out_of_range_and_nan() {
        assert!(SparseMatrix::from_triplets(2, 2, &[(2, 0, 1.0)]).is_err());
        assert!(SparseMatrix::from_triplets(2, 2, &[(0, 0, f64::NAN)]).is_err());
    }

    #[test]
    fn identity_solve() {
        let f = factorize(&SparseMatrix::identity(3)).unwrap();
        assert_eq!(f.solve(&[1.0, -2.0, 3.0]).unwrap(), vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn diagonal_solve() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (1, 1, 4.0)]).unwrap();
        let x = factorize(&a).unwrap().solve(&[2.0, 8.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn random_spd_residual() {
        let a = random_spd(50, 7);
        let f = factorize(&a).unwrap();
        let b: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
        let x = f.solve(&b).unwrap();
        assert!(residual(&a, &x, &b) <= 1e-10);
    }

    #[test]
    fn inverse_columns() {
        let a = random_spd(20, 3);
        let f = factorize(&a).unwrap();
        let cols: Vec<Vec<f64>> = (0..20).map(|k| (0..20).map(|i| if i == k { 1.0 } else { 0.0 }).collect()).collect();
        let inv = f.solve_many(&cols).unwrap();
        for k in 0..20 {
            let col = a.mul_vec(&inv[k]).unwrap();
            for i in 0..20 {
                let e = if i == k { 1.0 } else { 0.0 };
                assert!((col[i] - e).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn solve_many_edge_cases() {
        let f = factorize(&random_spd(10, 1)).unwrap();
        assert!(f.solve_many(&[]).unwrap().is_empty());
        let b = vec![1.0; 10];
        let xs = f.solve_many(&vec![b.clone(); 4]).unwrap();
        assert!(xs.iter().all(|x| x.iter().zip(&xs[0]).all(|(p, q)| (p - q).abs() <= 1e-14)));
        assert!(matches!(f.solve_many(&[vec![1.0; 9]]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn singular_matrix_reports_row() {
        let a = SparseMatrix::from_triplets(3, 3, &[(0, 0, 1.0), (1, 1, 1.0), (2, 1, 1.0)]).unwrap();
        assert!(matches!(factorize(&a), Err(Error::SingularPivot { .. })));
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]).unwrap();
        assert!(matches!(factorize(&a), Err(Error::SingularPivot { .. })));
    }

    #[test]
    fn symbolic_reuse() {
        let a = random_spd(30, 11);
        let sym = SymbolicFactorization::analyze(&a).unwrap();
        let mut scaled = a.clone();
        scaled.values.iter_mut().for_each(|v| *v *= 2.0);
        let f = factorize_with(&sym, &scaled).unwrap();
        let b = vec![1.0; 30];
        let x = f.solve(&b).unwrap();
        assert!(residual(&scaled, &x, &b) <= 1e-10);
        let other = random_spd(30, 12);
        assert!(factorize_with(&sym, &other).is_err() || sym.matches(&other));
    }

    #[test]
    fn nonsquare_rejected() {
        let a = SparseMatrix::from_triplets(2, 3, &[(0, 0, 1.0)]).unwrap();
        assert!(factorize(&a).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn solve_many_matches_single(seed in 0u64..1000, j in 1usize..6) {
            let a = random_spd(25, seed);
            let f = factorize(&a).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
            let rhs: Vec<Vec<f64>> = (0..j).map(|_| (0..25).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
            let many = f.solve_many(&rhs).unwrap();
            for (b, x) in rhs.iter().zip(&many) {
                let single = f.solve(b).unwrap();
                prop_assert!(single.iter().zip(x).all(|(p, q)| (p - q).abs() <= 1e-13 * (1.0 + p.abs())));
            }
            if j == 1 {
                prop_assert_eq!(&many[0], &f.solve(&rhs[0]).unwrap());
            }
        }

        #[test]
        fn transpose_is_involution(n in 1usize..12, seed in 0u64..100) {
            let a = random_spd(n, seed);
            prop_assert_eq!(a.transpose().transpose(), a.clone());
            prop_assert!(a.max_asymmetry() <= 1e-12);
        }
    }
}
