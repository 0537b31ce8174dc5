//! Kolmogorov (transition) matrices and their stochastic propagators.
//!
//! A Kolmogorov matrix C holds transition rates between population patches:
//! `c_ij` (row i, column j, i ≠ j) is the rate per unit time at which members
//! move from patch j to patch i. Diagonal entries are defined as
//! `c_jj = -Σ_{i≠j} c_ij` so every column sums to zero: the movement process
//! only redistributes members, it never creates or destroys them. Under this
//! convention `exp(tC)` is a column-stochastic propagator for any t ≥ 0.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};

/// Default validation tolerance, applied relative to max(1, max|entry|).
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

/// Roundoff floor for propagator entries: values in [-1e-12, 0) are clamped
/// to zero, anything lower is treated as an algorithm failure.
pub const EXP_NEGATIVE_FLOOR: f64 = -1e-12;

/// Allowed deviation of propagator column sums from 1.
pub const EXP_COLUMN_SUM_TOL: f64 = 1e-10;

/// A validated n×n Kolmogorov matrix.
///
/// Invariants guaranteed after construction:
/// - off-diagonal entries are non-negative (sub-tolerance noise is clamped),
/// - every column sums to zero within `tolerance × max(1, max|entry|)`,
/// - n ≥ 1.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    matrix: DenseMatrix,
    tolerance: f64,
}

impl TransitionMatrix {
    /// Validates a square rate matrix as a Kolmogorov matrix.
    ///
    /// Off-diagonal entries in `[-tolerance, 0)` are clamped to zero; more
    /// negative entries are rejected. Column sums must vanish within
    /// `tolerance × max(1, max|entry|)`.
    pub fn validate(entries: DenseMatrix, tolerance: f64) -> Result<Self> {
        if entries.n() == 0 {
            return Err(Error::InvalidInput(
                "transition matrix must have at least one patch".into(),
            ));
        }
        if !(tolerance >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "tolerance must be non-negative, got {tolerance}"
            )));
        }
        let n = entries.n();
        let mut m = entries;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let v = m.at(i, j);
                if v < -tolerance {
                    return Err(Error::NegativeOffDiagonal {
                        row: i + 1,
                        col: j + 1,
                        value: v,
                    });
                }
                if v < 0.0 {
                    m.set(i, j, 0.0);
                }
            }
        }
        let bound = tolerance * m.max_abs().max(1.0);
        for j in 0..n {
            let sum = m.column_sum(j);
            if sum.abs() > bound {
                return Err(Error::ColumnSumNonZero {
                    col: j + 1,
                    sum,
                    bound,
                });
            }
        }
        Ok(Self {
            matrix: m,
            tolerance,
        })
    }

    /// Convenience constructor from row vectors.
    pub fn from_rows(rows: &[Vec<f64>], tolerance: f64) -> Result<Self> {
        Self::validate(DenseMatrix::from_rows(rows)?, tolerance)
    }

    /// Builds a Kolmogorov matrix from off-diagonal rates alone.
    ///
    /// The diagonal of `rates` is ignored; each diagonal entry is filled as
    /// the negated sum of the same column's off-diagonal entries, accumulated
    /// in increasing row order, so column sums vanish exactly in floating
    /// point.
    pub fn from_offdiagonal_rates(rates: &DenseMatrix) -> Result<Self> {
        let n = rates.n();
        if n == 0 {
            return Err(Error::InvalidInput(
                "transition matrix must have at least one patch".into(),
            ));
        }
        let mut m = DenseMatrix::zeros(n);
        for j in 0..n {
            let mut outflow = 0.0;
            for i in 0..n {
                if i == j {
                    continue;
                }
                let v = rates.at(i, j);
                if v < 0.0 {
                    return Err(Error::NegativeOffDiagonal {
                        row: i + 1,
                        col: j + 1,
                        value: v,
                    });
                }
                m.set(i, j, v);
                outflow += v;
            }
            m.set(j, j, -outflow);
        }
        Self::validate(m, DEFAULT_TOLERANCE)
    }

    /// Internal constructor for sub-blocks already known to satisfy the
    /// invariants (e.g. closed diagonal blocks of a normal form).
    pub(crate) fn trusted(matrix: DenseMatrix, tolerance: f64) -> Self {
        Self { matrix, tolerance }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    /// Transition rate from patch j to patch i (0-based).
    #[inline]
    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.matrix.at(i, j)
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// max(1, max|entry|), the scale used by relative thresholds.
    pub fn scale(&self) -> f64 {
        self.matrix.max_abs().max(1.0)
    }

    /// ‖1ᵀC‖_∞ — the residual of the constant left eigenvector.
    pub fn left_one_residual(&self) -> f64 {
        (0..self.n())
            .map(|j| self.matrix.column_sum(j).abs())
            .fold(0.0, f64::max)
    }

    /// Computes the migration propagator exp(tC) for t ≥ 0 and checks the
    /// stochastic-semigroup invariants (entries ≥ 0 after clamping roundoff,
    /// columns summing to 1 within 1e-10).
    pub fn propagator(&self, t: f64) -> Result<MatrixExponentialResult> {
        if !(t >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "propagator duration must be non-negative, got {t}"
            )));
        }
        let raw = matrix_exponential(&self.matrix, t)?;
        MatrixExponentialResult::from_raw(raw, t)
    }
}

/// exp(tC) for a Kolmogorov matrix: a column-stochastic matrix with
/// non-negative entries.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixExponentialResult {
    matrix: DenseMatrix,
    t: f64,
}

impl MatrixExponentialResult {
    fn from_raw(raw: DenseMatrix, t: f64) -> Result<Self> {
        let n = raw.n();
        let mut m = raw;
        for i in 0..n {
            for j in 0..n {
                let v = m.at(i, j);
                if v < EXP_NEGATIVE_FLOOR {
                    return Err(Error::NegativeExponentialEntry {
                        row: i + 1,
                        col: j + 1,
                        value: v,
                    });
                }
                if v < 0.0 {
                    m.set(i, j, 0.0);
                }
            }
        }
        for j in 0..n {
            let sum = m.column_sum(j);
            if (sum - 1.0).abs() > EXP_COLUMN_SUM_TOL {
                return Err(Error::NonConservativePropagator { col: j + 1, sum });
            }
        }
        Ok(Self { matrix: m, t })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.matrix.at(i, j)
    }
}

/// Padé numerator/denominator coefficients for the degree-13 approximant.
const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

/// Maximum squaring depth; ‖tA‖₁ may not exceed 0.5·2^60.
const MAX_SQUARINGS: u32 = 60;

/// Approximates exp(t·A) for a general square matrix by scaling and squaring
/// with a degree-13 diagonal Padé approximant.
///
/// The matrix is scaled by 2^-s with s chosen so the scaled 1-norm is at
/// most 0.5, then squared s times. Inputs with ‖tA‖₁ > 0.5·2^60 are rejected
/// as overflow.
pub fn matrix_exponential(a: &DenseMatrix, t: f64) -> Result<DenseMatrix> {
    let n = a.n();
    if n == 0 {
        return Err(Error::InvalidInput("empty matrix".into()));
    }
    if !t.is_finite() {
        return Err(Error::InvalidInput(format!("non-finite duration {t}")));
    }
    let scaled_input = a.scaled(t);
    let norm = scaled_input.one_norm();
    if !norm.is_finite() {
        return Err(Error::Overflow { norm });
    }
    let squarings = if norm <= 0.5 {
        0
    } else {
        (norm / 0.5).log2().ceil() as u32
    };
    if squarings > MAX_SQUARINGS {
        return Err(Error::Overflow { norm });
    }
    let b = scaled_input.scaled(0.5f64.powi(squarings as i32));

    let b2 = b.matmul(&b);
    let b4 = b2.matmul(&b2);
    let b6 = b4.matmul(&b2);
    let ident = DenseMatrix::identity(n);

    // U = B·(B6·(b13·B6 + b11·B4 + b9·B2) + b7·B6 + b5·B4 + b3·B2 + b1·I)
    let inner_u = b6
        .matmul(
            &b6.scaled(PADE13[13])
                .add(&b4.scaled(PADE13[11]))
                .add(&b2.scaled(PADE13[9])),
        )
        .add(&b6.scaled(PADE13[7]))
        .add(&b4.scaled(PADE13[5]))
        .add(&b2.scaled(PADE13[3]))
        .add(&ident.scaled(PADE13[1]));
    let u = b.matmul(&inner_u);

    // V = B6·(b12·B6 + b10·B4 + b8·B2) + b6·B6 + b4·B4 + b2·B2 + b0·I
    let v = b6
        .matmul(
            &b6.scaled(PADE13[12])
                .add(&b4.scaled(PADE13[10]))
                .add(&b2.scaled(PADE13[8])),
        )
        .add(&b6.scaled(PADE13[6]))
        .add(&b4.scaled(PADE13[4]))
        .add(&b2.scaled(PADE13[2]))
        .add(&ident.scaled(PADE13[0]));

    let mut result = v.sub(&u).solve_matrix(&v.add(&u))?;
    for _ in 0..squarings {
        result = result.matmul(&result);
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[Vec<f64>]) -> DenseMatrix {
        DenseMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn validate_accepts_two_patch_exchange() {
        let c = TransitionMatrix::from_rows(&[vec![-1.0, 2.0], vec![1.0, -2.0]], 1e-12).unwrap();
        assert_eq!(c.n(), 2);
        assert_eq!(c.rate(1, 0), 1.0);
    }

    #[test]
    fn validate_rejects_nonzero_column_sum() {
        let err =
            TransitionMatrix::from_rows(&[vec![-1.0, 2.0], vec![0.5, -2.0]], 1e-12).unwrap_err();
        match err {
            Error::ColumnSumNonZero { col, sum, .. } => {
                assert_eq!(col, 1);
                assert!((sum - (-0.5)).abs() < 1e-15);
            }
            other => panic!("expected ColumnSumNonZero, got {other:?}"),
        }
    }

    #[test]
    fn validate_accepts_one_by_one_zero() {
        let c = TransitionMatrix::from_rows(&[vec![0.0]], 1e-12).unwrap();
        assert_eq!(c.n(), 1);
        assert_eq!(c.rate(0, 0), 0.0);
    }

    #[test]
    fn validate_rejects_negative_off_diagonal() {
        let err =
            TransitionMatrix::from_rows(&[vec![-1.0, -2.0], vec![1.0, 2.0]], 1e-12).unwrap_err();
        assert!(matches!(err, Error::NegativeOffDiagonal { row: 1, col: 2, .. }));
    }

    #[test]
    fn validate_clamps_subtolerance_noise() {
        let c = TransitionMatrix::from_rows(
            &[vec![-1.0, 2.0 - 2e-13], vec![1.0, -2.0 + 1e-13]],
            1e-12,
        );
        assert!(c.is_ok());
        let c2 = TransitionMatrix::from_rows(&[vec![0.0, -5e-13], vec![0.0, 5e-13]], 1e-12)
            .unwrap();
        assert_eq!(c2.rate(0, 1), 0.0, "sub-tolerance negative must clamp to 0");
    }

    #[test]
    fn validate_rejects_non_square() {
        let err = TransitionMatrix::from_rows(&[vec![0.0, 0.0]], 1e-12).unwrap_err();
        assert!(matches!(err, Error::NonSquare { .. }));
    }

    #[test]
    fn offdiagonal_rates_two_patches() {
        let rates = mat(&[vec![0.0, 2.0], vec![1.0, 0.0]]);
        let c = TransitionMatrix::from_offdiagonal_rates(&rates).unwrap();
        assert_eq!(c.rate(0, 0), -1.0);
        assert_eq!(c.rate(0, 1), 2.0);
        assert_eq!(c.rate(1, 0), 1.0);
        assert_eq!(c.rate(1, 1), -2.0);
    }

    #[test]
    fn offdiagonal_rates_all_zero() {
        let c = TransitionMatrix::from_offdiagonal_rates(&DenseMatrix::zeros(3)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(c.rate(i, j), 0.0);
            }
        }
    }

    #[test]
    fn offdiagonal_rates_three_cycle() {
        let mut rates = DenseMatrix::zeros(3);
        rates.set(1, 0, 1.0); // 1 -> 2
        rates.set(2, 1, 1.0); // 2 -> 3
        rates.set(0, 2, 1.0); // 3 -> 1
        let c = TransitionMatrix::from_offdiagonal_rates(&rates).unwrap();
        for j in 0..3 {
            assert_eq!(c.rate(j, j), -1.0);
        }
        assert_eq!(c.rate(1, 0), 1.0);
        assert_eq!(c.rate(2, 1), 1.0);
        assert_eq!(c.rate(0, 2), 1.0);
    }

    #[test]
    fn offdiagonal_rates_columns_sum_to_exact_zero() {
        // Awkward magnitudes on purpose: the diagonal is the negated sum of
        // the same column's off-diagonal entries in a fixed order, so adding
        // them back in that order must cancel exactly.
        let rates = mat(&[
            vec![0.0, 0.1, 0.7, 1e-3],
            vec![0.3, 0.0, 1e8, 2.0],
            vec![0.11, 5.0, 0.0, 0.023],
            vec![7.0, 1e-7, 3.3, 0.0],
        ]);
        let c = TransitionMatrix::from_offdiagonal_rates(&rates).unwrap();
        for j in 0..4 {
            let mut off = 0.0;
            for i in 0..4 {
                if i != j {
                    off += c.rate(i, j);
                }
            }
            assert_eq!(off + c.rate(j, j), 0.0, "column {j} must cancel exactly");
        }
    }

    #[test]
    fn exponential_of_zero_duration_is_exact_identity() {
        let c = mat(&[vec![-3.0, 1.0], vec![3.0, -1.0]]);
        let e = matrix_exponential(&c, 0.0).unwrap();
        assert_eq!(e, DenseMatrix::identity(2));
    }

    #[test]
    fn exponential_of_zero_matrix_is_exact_identity() {
        let e = matrix_exponential(&DenseMatrix::zeros(3), 7.5).unwrap();
        assert_eq!(e, DenseMatrix::identity(3));
    }

    #[test]
    fn exponential_matches_symmetric_exchange_closed_form() {
        // exp(t·[[-1,1],[1,-1]]) has eigenvalues {0,-2}:
        // diagonal (1+e^{-2t})/2, off-diagonal (1-e^{-2t})/2.
        let c = mat(&[vec![-1.0, 1.0], vec![1.0, -1.0]]);
        for &t in &[0.3, 1.0, 2.5, 10.0] {
            let e = matrix_exponential(&c, t).unwrap();
            let d = (1.0 + (-2.0 * t).exp()) / 2.0;
            let o = (1.0 - (-2.0 * t).exp()) / 2.0;
            assert!((e.at(0, 0) - d).abs() < 1e-14, "t={t}");
            assert!((e.at(1, 1) - d).abs() < 1e-14, "t={t}");
            assert!((e.at(0, 1) - o).abs() < 1e-14, "t={t}");
            assert!((e.at(1, 0) - o).abs() < 1e-14, "t={t}");
        }
    }

    #[test]
    fn exponential_matches_triangular_closed_form() {
        // For C=[[0,1],[0,-1]] the ODE solves to exp(tC) = [[1, 1-e^{-t}],[0, e^{-t}]];
        // at t = ln 2 that is [[1, 1/2],[0, 1/2]].
        let c = mat(&[vec![0.0, 1.0], vec![0.0, -1.0]]);
        let e = matrix_exponential(&c, 2.0f64.ln()).unwrap();
        assert!((e.at(0, 0) - 1.0).abs() < 1e-14);
        assert!((e.at(0, 1) - 0.5).abs() < 1e-14);
        assert!(e.at(1, 0).abs() < 1e-14);
        assert!((e.at(1, 1) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn exponential_overflow_is_reported() {
        let c = mat(&[vec![-1e18, 1e18], vec![1e18, -1e18]]);
        let err = matrix_exponential(&c, 10.0).unwrap_err();
        assert!(matches!(err, Error::Overflow { .. }));
    }

    #[test]
    fn propagator_is_column_stochastic() {
        let c = TransitionMatrix::from_rows(
            &[
                vec![-1.5, 0.2, 0.3],
                vec![1.0, -0.7, 0.4],
                vec![0.5, 0.5, -0.7],
            ],
            1e-12,
        )
        .unwrap();
        for &t in &[0.1, 1.0, 10.0] {
            let p = c.propagator(t).unwrap();
            for j in 0..3 {
                let sum = p.matrix().column_sum(j);
                assert!((sum - 1.0).abs() < 1e-10, "t={t} col={j} sum={sum}");
                for i in 0..3 {
                    assert!(p.at(i, j) >= 0.0);
                }
            }
        }
    }

    #[test]
    fn propagator_rejects_negative_duration() {
        let c = TransitionMatrix::from_rows(&[vec![0.0]], 1e-12).unwrap();
        assert!(c.propagator(-1.0).is_err());
    }
}
