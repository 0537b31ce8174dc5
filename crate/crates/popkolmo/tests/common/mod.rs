//! Shared test oracles and random-matrix generators.
//!
//! Everything here is deliberately independent of the library's own
//! algorithms: the kernel/rank oracle is a plain reduced-row-echelon
//! elimination, the spectrum oracle goes through characteristic-polynomial
//! coefficients (Faddeev–LeVerrier) and Durand–Kerner root finding, and the
//! 2×2 exponentials are closed-form eigendecompositions.

#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;

use popkolmo::{DenseMatrix, TransitionMatrix};

// ---------------------------------------------------------------------------
// elimination oracle: RREF, rank, kernel basis
// ---------------------------------------------------------------------------

/// Reduced row echelon form with partial pivoting; returns the reduced rows
/// and the pivot columns. Pivots with magnitude ≤ tol count as zero.
pub fn rref(a: &DenseMatrix, tol: f64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let n = a.n();
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for c in 0..n {
        let mut best = tol;
        let mut pick = None;
        for (i, row) in m.iter().enumerate().skip(r) {
            if row[c].abs() > best {
                best = row[c].abs();
                pick = Some(i);
            }
        }
        let Some(pi) = pick else { continue };
        m.swap(r, pi);
        let pivot = m[r][c];
        for v in &mut m[r] {
            *v /= pivot;
        }
        for i in 0..n {
            if i == r {
                continue;
            }
            let f = m[i][c];
            if f == 0.0 {
                continue;
            }
            let pivot_row = m[r].clone();
            for (v, p) in m[i].iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
        }
        pivot_cols.push(c);
        r += 1;
        if r == n {
            break;
        }
    }
    (m, pivot_cols)
}

pub fn elimination_rank(a: &DenseMatrix, tol: f64) -> usize {
    rref(a, tol).1.len()
}

/// Kernel basis from the RREF: one vector per free column.
pub fn kernel_basis(a: &DenseMatrix, tol: f64) -> Vec<Vec<f64>> {
    let n = a.n();
    let (m, pivot_cols) = rref(a, tol);
    let mut basis = Vec::new();
    for free in (0..n).filter(|c| !pivot_cols.contains(c)) {
        let mut x = vec![0.0; n];
        x[free] = 1.0;
        for (row, &pc) in pivot_cols.iter().enumerate() {
            x[pc] = -m[row][free];
        }
        basis.push(x);
    }
    basis
}

// ---------------------------------------------------------------------------
// characteristic-polynomial spectrum oracle
// ---------------------------------------------------------------------------

/// Monic characteristic polynomial coefficients by the Faddeev–LeVerrier
/// recurrence: returns c with p(λ) = Σ_k c[k]·λ^k and c[n] = 1.
pub fn char_poly_coeffs(a: &DenseMatrix) -> Vec<f64> {
    let n = a.n();
    let mut coeffs = vec![0.0; n + 1];
    coeffs[n] = 1.0;
    let mut mk = a.clone();
    for k in 1..=n {
        if k > 1 {
            mk = a.matmul(&mk.plus_scaled_identity(coeffs[n - k + 1]));
        }
        let trace: f64 = (0..n).map(|i| mk.at(i, i)).sum();
        coeffs[n - k] = -trace / k as f64;
    }
    coeffs
}

fn eval_poly(coeffs: &[f64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

/// All roots of a monic polynomial by Durand–Kerner iteration.
pub fn polynomial_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let degree = coeffs.len() - 1;
    assert!(degree >= 1 && coeffs[degree] == 1.0, "monic input expected");
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..degree).map(|k| seed.powu(k as u32 + 1)).collect();
    for _ in 0..5000 {
        let mut moved: f64 = 0.0;
        for i in 0..degree {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..degree {
                if j != i {
                    denom *= z[i] - z[j];
                }
            }
            let delta = eval_poly(coeffs, z[i]) / denom;
            z[i] -= delta;
            moved = moved.max(delta.norm());
        }
        if moved < 1e-13 {
            break;
        }
    }
    z
}

/// Minimal over all pairings of the maximum pairwise distance (exact
/// brute-force minimax matching; fine for n ≤ 8).
pub fn best_matching_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    permute(&mut perm, 0, &mut |p| {
        let worst = (0..n)
            .map(|i| (a[i] - b[p[i]]).norm())
            .fold(0.0, f64::max);
        if worst < best {
            best = worst;
        }
    });
    best
}

fn permute(items: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

// ---------------------------------------------------------------------------
// closed-form 2×2 exponentials
// ---------------------------------------------------------------------------

/// exp(t·S) for a symmetric 2×2 matrix via its orthogonal eigendecomposition.
pub fn expm2_symmetric(s: [[f64; 2]; 2], t: f64) -> [[f64; 2]; 2] {
    assert!(
        (s[0][1] - s[1][0]).abs() < 1e-15,
        "symmetric input expected"
    );
    let (a, b, d) = (s[0][0], s[0][1], s[1][1]);
    if b == 0.0 {
        return [[(a * t).exp(), 0.0], [0.0, (d * t).exp()]];
    }
    let mean = 0.5 * (a + d);
    let disc = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    let (l1, l2) = (mean + disc, mean - disc);
    // eigenvector for l1: (b, l1 - a), normalized
    let v1 = {
        let norm = (b * b + (l1 - a) * (l1 - a)).sqrt();
        [b / norm, (l1 - a) / norm]
    };
    // orthogonal complement
    let v2 = [-v1[1], v1[0]];
    let (e1, e2) = ((l1 * t).exp(), (l2 * t).exp());
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = e1 * v1[i] * v1[j] + e2 * v2[i] * v2[j];
        }
    }
    out
}

// ---------------------------------------------------------------------------
// random matrix generators
// ---------------------------------------------------------------------------

/// Uniform rate in (0, 1].
pub fn rate<R: Rng>(rng: &mut R) -> f64 {
    1.0 - rng.gen::<f64>()
}

/// Random Kolmogorov matrix with edge density ~0.4 (may be reducible).
pub fn random_kolmogorov<R: Rng>(rng: &mut R, n: usize) -> TransitionMatrix {
    let mut rates = DenseMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.gen_bool(0.4) {
                rates.set(i, j, rate(rng));
            }
        }
    }
    TransitionMatrix::from_offdiagonal_rates(&rates).unwrap()
}

/// Random irreducible Kolmogorov matrix: random edges plus a Hamiltonian
/// cycle over a random patch ordering (which forces strong connectivity).
pub fn random_irreducible_kolmogorov<R: Rng>(rng: &mut R, n: usize) -> TransitionMatrix {
    let mut rates = DenseMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.gen_bool(0.4) {
                rates.set(i, j, rate(rng));
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    for k in (1..n).rev() {
        order.swap(k, rng.gen_range(0..=k));
    }
    for k in 0..n {
        let from = order[k];
        let to = order[(k + 1) % n];
        if from != to {
            rates.set(to, from, rate(rng));
        }
    }
    TransitionMatrix::from_offdiagonal_rates(&rates).unwrap()
}

/// A reducible matrix with known block pattern, scrambled by a random
/// permutation. `closed`/`transient` hold the expected member sets in the
/// scrambled numbering (each sorted ascending).
pub struct ReducibleCase {
    pub matrix: TransitionMatrix,
    pub closed: Vec<Vec<usize>>,
    pub transient: Vec<Vec<usize>>,
}

/// Builds 1–3 closed blocks plus 1–3 transient blocks (sizes 1–3) with
/// internal cycles, couplings from each transient block to at least one
/// earlier block, and a final random relabeling of all patches.
pub fn random_reducible<R: Rng>(rng: &mut R) -> ReducibleCase {
    let n_closed = rng.gen_range(1..=3);
    // a lone closed block would be irreducible, so force a transient one then
    let n_transient = if n_closed == 1 {
        rng.gen_range(1..=3)
    } else {
        rng.gen_range(0..=3)
    };

    let mut blocks: Vec<(bool, Vec<usize>)> = Vec::new(); // (is_closed, members)
    let mut next = 0usize;
    for b in 0..n_closed + n_transient {
        let size = rng.gen_range(1..=3);
        blocks.push((b < n_closed, (next..next + size).collect()));
        next += size;
    }
    let n = next;

    let mut rates = DenseMatrix::zeros(n);
    for (_, members) in &blocks {
        if members.len() >= 2 {
            // internal cycle plus optional extra edges to keep blocks irreducible
            for k in 0..members.len() {
                let from = members[k];
                let to = members[(k + 1) % members.len()];
                rates.set(to, from, rate(rng));
            }
            for &i in members {
                for &j in members {
                    if i != j && rng.gen_bool(0.3) {
                        rates.set(i, j, rate(rng));
                    }
                }
            }
        }
    }
    // couplings: only from transient blocks toward strictly earlier blocks,
    // which keeps the intended components intact and acyclic between blocks
    for bi in n_closed..blocks.len() {
        let targets = rng.gen_range(1..=bi.min(2));
        for _ in 0..targets {
            let tb = rng.gen_range(0..bi);
            let from = blocks[bi].1[rng.gen_range(0..blocks[bi].1.len())];
            let to = blocks[tb].1[rng.gen_range(0..blocks[tb].1.len())];
            rates.set(to, from, rate(rng));
        }
    }

    // scramble patch labels
    let mut perm: Vec<usize> = (0..n).collect(); // perm[new] = old
    for k in (1..n).rev() {
        perm.swap(k, rng.gen_range(0..=k));
    }
    let mut new_of_old = vec![0usize; n];
    for (new, &old) in perm.iter().enumerate() {
        new_of_old[old] = new;
    }
    let mut scrambled = DenseMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            scrambled.set(i, j, rates.at(perm[i], perm[j]));
        }
    }

    let relabel = |members: &[usize]| {
        let mut v: Vec<usize> = members.iter().map(|&o| new_of_old[o]).collect();
        v.sort_unstable();
        v
    };
    let closed = blocks
        .iter()
        .filter(|(c, _)| *c)
        .map(|(_, m)| relabel(m))
        .collect();
    let transient = blocks
        .iter()
        .filter(|(c, _)| !*c)
        .map(|(_, m)| relabel(m))
        .collect();

    ReducibleCase {
        matrix: TransitionMatrix::from_offdiagonal_rates(&scrambled).unwrap(),
        closed,
        transient,
    }
}

/// Random integer-entry matrix with entries in [-bound, bound].
pub fn random_integer_matrix<R: Rng>(rng: &mut R, n: usize, bound: i32) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            m.set(i, j, rng.gen_range(-bound..=bound) as f64);
        }
    }
    m
}

// ---------------------------------------------------------------------------
// fixed simulation benchmarks (shared by behavior and acceptance tests)
// ---------------------------------------------------------------------------

use popkolmo::{AgeGrid, SimulationConfig, VitalRates};

/// Per-node table from a closure over age.
pub fn table(grid: AgeGrid, f: impl Fn(f64) -> f64) -> Vec<f64> {
    (0..grid.nodes()).map(|j| f(grid.age(j))).collect()
}

/// Triangular fertility bump on [lo, hi] peaking at the midpoint.
pub fn fertility_bump(a: f64, lo: f64, hi: f64, peak: f64) -> f64 {
    if a <= lo || a >= hi {
        return 0.0;
    }
    let mid = 0.5 * (lo + hi);
    if a <= mid {
        peak * (a - lo) / (mid - lo)
    } else {
        peak * (hi - a) / (hi - mid)
    }
}

/// Irreducible 3-patch benchmark: complete transfer graph, patch-dependent
/// mortality, patch-skewed initial profile. Fertility is the same in every
/// patch so the newborn node carries no ε-independent composition bias and
/// the share deviation is governed by ε alone.
pub fn stable_patch_benchmark(grid_count: usize, epsilon: f64) -> SimulationConfig {
    let matrix = TransitionMatrix::from_rows(
        &[
            vec![-0.9, 0.4, 0.7],
            vec![0.6, -0.9, 0.2],
            vec![0.3, 0.5, -0.9],
        ],
        1e-12,
    )
    .unwrap();
    let grid = AgeGrid::new(10.0, grid_count).unwrap();
    let cutoff = 4.0;
    let rates = VitalRates::new(
        grid,
        vec![
            table(grid, |a| 0.05 + 0.015 * a),
            table(grid, |a| 0.10 + 0.0 * a),
            table(grid, |a| 0.02 + 0.030 * a),
        ],
        vec![table(grid, |a| fertility_bump(a, 0.5, cutoff, 0.9)); 3],
        cutoff,
    )
    .unwrap();
    let initial = vec![
        table(grid, |a| if a <= 6.0 { 1.0 } else { 0.0 }),
        table(grid, |a| if a <= 6.0 { 0.2 } else { 0.0 }),
        table(grid, |a| 0.0 * a),
    ];
    SimulationConfig {
        matrix,
        rates,
        epsilon,
        horizon: 20.0,
        initial,
        output_stride: 40,
    }
}

/// Reducible 4-patch benchmark: closed 2-cycle {1,2}, patch 3 drains into
/// patch 1 at rate 1, patch 4 drains into patch 3 at rate 0.5 (the slowest
/// transient block, spectral bound -0.5). No births or deaths.
pub fn depletion_benchmark(grid_count: usize, epsilon: f64) -> SimulationConfig {
    let matrix = TransitionMatrix::from_rows(
        &[
            vec![-1.0, 2.0, 1.0, 0.0],
            vec![1.0, -2.0, 0.0, 0.0],
            vec![0.0, 0.0, -1.0, 0.5],
            vec![0.0, 0.0, 0.0, -0.5],
        ],
        1e-12,
    )
    .unwrap();
    let grid = AgeGrid::new(8.0, grid_count).unwrap();
    let zeros = vec![table(grid, |_| 0.0); 4];
    let rates = VitalRates::new(grid, zeros.clone(), zeros, grid.age_max).unwrap();
    let boxcar = |lo: f64, hi: f64, h: f64| {
        table(grid, move |a| if a >= lo && a <= hi { h } else { 0.0 })
    };
    SimulationConfig {
        matrix,
        rates,
        epsilon,
        horizon: 5.0,
        initial: vec![
            boxcar(0.5, 2.5, 0.5),
            boxcar(0.5, 2.5, 0.5),
            boxcar(0.5, 2.5, 1.0),
            boxcar(0.5, 2.5, 1.0),
        ],
        output_stride: 5,
    }
}

/// Manufactured constant-coefficient 2-patch case with patch-dependent
/// mortality: the exact solution is exp(t(C/ε - M)) applied to the
/// transported smooth initial profile, computable from the closed-form
/// symmetric 2×2 exponential.
pub struct SplittingCase {
    pub config: SimulationConfig,
    pub combined: [[f64; 2]; 2],
}

pub fn splitting_benchmark(grid_count: usize) -> SplittingCase {
    let epsilon = 0.5;
    let (mu1, mu2) = (0.5, 0.1);
    let matrix =
        TransitionMatrix::from_rows(&[vec![-1.0, 1.0], vec![1.0, -1.0]], 1e-12).unwrap();
    let grid = AgeGrid::new(8.0, grid_count).unwrap();
    let rates = VitalRates::new(
        grid,
        vec![table(grid, |_| mu1), table(grid, |_| mu2)],
        vec![table(grid, |_| 0.0); 2],
        grid.age_max,
    )
    .unwrap();
    let initial = vec![
        table(grid, |a| (-(a - 2.0) * (a - 2.0) / 0.5).exp()),
        table(grid, |a| 0.6 * (-(a - 2.5) * (a - 2.5) / 0.8).exp()),
    ];
    SplittingCase {
        config: SimulationConfig {
            matrix,
            rates,
            epsilon,
            horizon: 2.0,
            initial,
            output_stride: usize::MAX,
        },
        combined: [
            [-1.0 / epsilon - mu1, 1.0 / epsilon],
            [1.0 / epsilon, -1.0 / epsilon - mu2],
        ],
    }
}

/// Max-norm error of the splitting benchmark at the final time against the
/// closed-form solution.
pub fn splitting_error(grid_count: usize) -> f64 {
    let case = splitting_benchmark(grid_count);
    let traj = popkolmo::simulate(&case.config).unwrap();
    let last = traj.final_sample();
    let grid = case.config.rates.grid;
    let horizon = case.config.horizon;
    let shift = (horizon / grid.da()).round() as usize;
    let propagator = expm2_symmetric(case.combined, horizon);

    let mut err: f64 = 0.0;
    for j in 0..grid.nodes() {
        let (phi1, phi2) = if j >= shift {
            (case.config.initial[0][j - shift], case.config.initial[1][j - shift])
        } else {
            (0.0, 0.0)
        };
        let exact1 = propagator[0][0] * phi1 + propagator[0][1] * phi2;
        let exact2 = propagator[1][0] * phi1 + propagator[1][1] * phi2;
        err = err.max((last.state.values[0][j] - exact1).abs());
        err = err.max((last.state.values[1][j] - exact2).abs());
    }
    err
}

/// Least-squares slope of ln(y) against t.
pub fn log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|(t, _)| t).sum();
    let sy: f64 = points.iter().map(|(_, y)| y.ln()).sum();
    let sxx: f64 = points.iter().map(|(t, _)| t * t).sum();
    let sxy: f64 = points.iter().map(|(t, y)| t * y.ln()).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Determinant by LU with partial pivoting (sign times pivot product).
pub fn determinant(a: &DenseMatrix) -> f64 {
    let n = a.n();
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let mut det = 1.0;
    for k in 0..n {
        let mut piv = k;
        for i in k + 1..n {
            if m[i][k].abs() > m[piv][k].abs() {
                piv = i;
            }
        }
        if m[piv][k] == 0.0 {
            return 0.0;
        }
        if piv != k {
            m.swap(piv, k);
            det = -det;
        }
        det *= m[k][k];
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            if f == 0.0 {
                continue;
            }
            let pivot_row = m[k].clone();
            for (v, p) in m[i].iter_mut().zip(&pivot_row).skip(k) {
                *v -= f * p;
            }
        }
    }
    det
}
