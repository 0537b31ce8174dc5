//! Spectral analysis of transition matrices.
//!
//! The facts verified numerically here: a Kolmogorov matrix always has
//! spectral bound zero with the constant vector as a left eigenvector; in
//! the irreducible case zero is a simple dominant eigenvalue with a
//! strictly positive right Perron vector; in the reducible case the kernel
//! has one non-negative basis vector per closed block, supported exactly on
//! that block and vanishing on every transient patch.
//!
//! Algorithms: shifted power iteration with one inverse-iteration
//! refinement for the dominant pair, Householder reduction to Hessenberg
//! form followed by Francis double-shift QR for the full spectrum, and
//! fully pivoted Gaussian elimination as the rank cross-check.

use num_complex::Complex64;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::kolmogorov::TransitionMatrix;
use crate::structure::{NormalForm, StateKind};

/// Perron components below this (after sum-normalization) count as zero.
pub const PERRON_ZERO_THRESHOLD: f64 = 1e-9;

/// |λ| below `1e-8 × max(1, ‖C‖_max)` counts as the zero eigenvalue.
pub const EIGENVALUE_ZERO_FACTOR: f64 = 1e-8;

const POWER_ITERATION_CAP: usize = 10_000;
const POWER_ITERATION_TOL: f64 = 1e-13;
const WITNESS_RESIDUAL_FACTOR: f64 = 1e-9;
const QR_DEFLATION_FACTOR: f64 = 1e-14;
const RANK_TOL_FACTOR: f64 = 1e-10;

/// Everything the spectral theorems talk about, for one matrix.
#[derive(Debug, Clone)]
pub struct SpectralReport {
    /// All n eigenvalues, sorted by descending real part then descending
    /// imaginary part.
    pub spectrum: Vec<Complex64>,
    /// s(C) = max real part; reported as exact 0 when within the zero
    /// threshold.
    pub spectral_bound: f64,
    /// Sp(C) = max modulus.
    pub spectral_radius: f64,
    /// One kernel vector per closed block, each supported exactly on its
    /// block and summing to 1.
    pub right_perron_basis: Vec<Vec<f64>>,
    /// Uniform mixture of the basis (1·k = 1); strictly positive iff there
    /// are no transient patches.
    pub default_perron: Vec<f64>,
    /// ‖1ᵀC‖_∞.
    pub left_perron_residual: f64,
    /// Kernel dimension from the elimination-rank cross-check.
    pub zero_multiplicity_geometric: usize,
    /// True iff the normal form has exactly one closed block (kernel
    /// dimension one).
    pub dominant_is_simple: bool,
}

/// Returns the spectral bound s(C) and a non-negative eigenvector witness
/// with ‖Cv − s·v‖_∞ < 1e-9·max(1, ‖C‖_max).
///
/// Shifted power iteration on A = C + cI with c = max|c_ii| + 1 (A is
/// entrywise non-negative and its spectral radius is s(C) + c), followed by
/// one inverse-iteration step on C to polish the kernel direction.
pub fn spectral_bound_with_witness(c: &TransitionMatrix) -> Result<(f64, Vec<f64>)> {
    let n = c.n();
    let shift = (0..n)
        .map(|i| c.rate(i, i).abs())
        .fold(0.0, f64::max)
        + 1.0;
    let a = c.matrix().plus_scaled_identity(shift);

    // For a Kolmogorov matrix 1ᵀA = c·1ᵀ, so sum-normalized iterates stay
    // on the probability simplex and the normalizer is exactly the shift.
    let mut v = vec![1.0 / n as f64; n];
    let mut converged = false;
    for _ in 0..POWER_ITERATION_CAP {
        let w = a.matvec(&v);
        let sum: f64 = w.iter().sum();
        let next: Vec<f64> = w.iter().map(|x| x / sum).collect();
        let diff = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = next;
        if diff < POWER_ITERATION_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            what: "shifted power iteration",
            iterations: POWER_ITERATION_CAP,
        });
    }

    let lambda = rayleigh(c.matrix(), &v);
    let scale = c.scale();
    let shifted = c.matrix().plus_scaled_identity(-lambda);
    let mut x = shifted.solve_vector_regularized(&v, f64::EPSILON * scale);

    let total: f64 = x.iter().sum();
    if total < 0.0 {
        for xi in &mut x {
            *xi = -*xi;
        }
    }
    let total: f64 = x.iter().sum();
    for xi in &mut x {
        *xi /= total;
    }
    for xi in &mut x {
        if *xi < 0.0 && *xi > -1e-12 {
            *xi = 0.0;
        }
    }
    if x.iter().any(|xi| *xi < 0.0 || !xi.is_finite()) {
        return Err(Error::NoConvergence {
            what: "kernel refinement (witness left the non-negative cone)",
            iterations: 1,
        });
    }

    let s = rayleigh(c.matrix(), &x);
    let residual = c
        .matrix()
        .matvec(&x)
        .iter()
        .zip(&x)
        .map(|(cv, xi)| (cv - s * xi).abs())
        .fold(0.0, f64::max);
    if residual >= WITNESS_RESIDUAL_FACTOR * scale {
        return Err(Error::NoConvergence {
            what: "kernel refinement (residual above tolerance)",
            iterations: 1,
        });
    }
    Ok((s, x))
}

fn rayleigh(a: &DenseMatrix, v: &[f64]) -> f64 {
    let av = a.matvec(v);
    let num: f64 = av.iter().zip(v).map(|(x, y)| x * y).sum();
    let den: f64 = v.iter().map(|x| x * x).sum();
    num / den
}

/// All eigenvalues of a general real square matrix.
///
/// Householder reduction to upper Hessenberg form, then Francis double-shift
/// QR with deflation when a subdiagonal entry drops below
/// `1e-14·(|h_kk| + |h_{k+1,k+1}|)`; at most 60n sweeps in total.
pub fn full_spectrum(a: &DenseMatrix) -> Result<Vec<Complex64>> {
    let n = a.n();
    if n == 0 {
        return Err(Error::InvalidInput("empty matrix".into()));
    }
    let mut h = a.clone();
    hessenberg(&mut h);
    let mut eigs = hqr(&mut h)?;
    eigs.sort_by(|x, y| y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im)));
    Ok(eigs)
}

/// In-place Householder reduction to upper Hessenberg form (the orthogonal
/// similarity is not accumulated; only eigenvalues are needed).
fn hessenberg(h: &mut DenseMatrix) {
    let n = h.n();
    for k in 0..n.saturating_sub(2) {
        let col_scale: f64 = (k + 1..n).map(|i| h.at(i, k).abs()).sum();
        if col_scale == 0.0 {
            continue;
        }
        let mut v: Vec<f64> = (k + 1..n).map(|i| h.at(i, k) / col_scale).collect();
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let alpha = if v[0] >= 0.0 { -norm } else { norm };
        let beta = 1.0 / (alpha * alpha - alpha * v[0]);
        v[0] -= alpha;

        // left: rows k+1..n of every column
        for j in 0..n {
            let mut w = 0.0;
            for (r, vi) in v.iter().enumerate() {
                w += vi * h.at(k + 1 + r, j);
            }
            w *= beta;
            for (r, vi) in v.iter().enumerate() {
                let cur = h.at(k + 1 + r, j);
                h.set(k + 1 + r, j, cur - vi * w);
            }
        }
        // right: columns k+1..n of every row
        for i in 0..n {
            let mut w = 0.0;
            for (cidx, vi) in v.iter().enumerate() {
                w += vi * h.at(i, k + 1 + cidx);
            }
            w *= beta;
            for (cidx, vi) in v.iter().enumerate() {
                let cur = h.at(i, k + 1 + cidx);
                h.set(i, k + 1 + cidx, cur - vi * w);
            }
        }

        h.set(k + 1, k, alpha * col_scale);
        for i in k + 2..n {
            h.set(i, k, 0.0);
        }
    }
}

fn sign_with(magnitude: f64, sign_of: f64) -> f64 {
    if sign_of >= 0.0 {
        magnitude.abs()
    } else {
        -magnitude.abs()
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix; returns unsorted
/// eigenvalues. Adapted from the classic Wilkinson/Francis formulation.
fn hqr(hm: &mut DenseMatrix) -> Result<Vec<Complex64>> {
    let n = hm.n();
    let max_total = 60 * n;
    let mut eigs: Vec<Complex64> = Vec::with_capacity(n);

    let anorm: f64 = {
        let mut s = 0.0;
        for i in 0..n {
            for j in i.saturating_sub(1)..n {
                s += hm.at(i, j).abs();
            }
        }
        s
    };

    let mut nn = n as isize - 1;
    let mut exceptional = 0.0; // accumulated exceptional shifts
    let mut total_its = 0usize;
    let mut its = 0usize;

    while nn >= 0 {
        let nnu = nn as usize;
        // scan for a negligible subdiagonal entry
        let mut l = nnu;
        while l >= 1 {
            let s = hm.at(l - 1, l - 1).abs() + hm.at(l, l).abs();
            let thr = if s == 0.0 {
                QR_DEFLATION_FACTOR * anorm
            } else {
                QR_DEFLATION_FACTOR * s
            };
            if hm.at(l, l - 1).abs() <= thr {
                hm.set(l, l - 1, 0.0);
                break;
            }
            l -= 1;
        }

        let x = hm.at(nnu, nnu);
        if l == nnu {
            // single real eigenvalue
            eigs.push(Complex64::new(x + exceptional, 0.0));
            nn -= 1;
            its = 0;
            continue;
        }
        let y = hm.at(nnu - 1, nnu - 1);
        let w = hm.at(nnu, nnu - 1) * hm.at(nnu - 1, nnu);
        if l == nnu - 1 {
            // trailing 2×2 block
            let p = 0.5 * (y - x);
            let q = p * p + w;
            let z = q.abs().sqrt();
            let xs = x + exceptional;
            if q >= 0.0 {
                let zz = p + sign_with(z, p);
                let r1 = xs + zz;
                let r2 = if zz != 0.0 { xs - w / zz } else { r1 };
                eigs.push(Complex64::new(r1, 0.0));
                eigs.push(Complex64::new(r2, 0.0));
            } else {
                eigs.push(Complex64::new(xs + p, z));
                eigs.push(Complex64::new(xs + p, -z));
            }
            nn -= 2;
            its = 0;
            continue;
        }

        if total_its >= max_total {
            return Err(Error::NoConvergence {
                what: "QR iteration",
                iterations: max_total,
            });
        }
        let (mut x, mut y, mut w) = (x, y, w);
        if its == 10 || its == 20 {
            // exceptional shift to break symmetric stalls
            exceptional += x;
            for i in 0..=nnu {
                let d = hm.at(i, i);
                hm.set(i, i, d - x);
            }
            let s = hm.at(nnu, nnu - 1).abs() + hm.at(nnu - 1, nnu - 2).abs();
            x = 0.75 * s;
            y = x;
            w = -0.4375 * s * s;
        }
        its += 1;
        total_its += 1;

        // find two consecutive small subdiagonals to start the bulge
        let mut m = nnu - 2;
        let (mut p, mut q, mut r);
        loop {
            let z = hm.at(m, m);
            let rr = x - z;
            let ss = y - z;
            p = (rr * ss - w) / hm.at(m + 1, m) + hm.at(m, m + 1);
            q = hm.at(m + 1, m + 1) - z - rr - ss;
            r = hm.at(m + 2, m + 1);
            let s = p.abs() + q.abs() + r.abs();
            p /= s;
            q /= s;
            r /= s;
            if m == l {
                break;
            }
            let u = hm.at(m, m - 1).abs() * (q.abs() + r.abs());
            let v =
                p.abs() * (hm.at(m - 1, m - 1).abs() + z.abs() + hm.at(m + 1, m + 1).abs());
            if u <= f64::EPSILON * v {
                break;
            }
            m -= 1;
        }
        for i in m + 2..=nnu {
            hm.set(i, i - 2, 0.0);
            if i != m + 2 {
                hm.set(i, i - 3, 0.0);
            }
        }

        // double QR sweep: chase the bulge from m to nn-1
        for k in m..nnu {
            if k != m {
                p = hm.at(k, k - 1);
                q = hm.at(k + 1, k - 1);
                r = if k != nnu - 1 { hm.at(k + 2, k - 1) } else { 0.0 };
                x = p.abs() + q.abs() + r.abs();
                if x != 0.0 {
                    p /= x;
                    q /= x;
                    r /= x;
                }
            }
            let s = sign_with((p * p + q * q + r * r).sqrt(), p);
            if s == 0.0 {
                continue;
            }
            if k == m {
                if l != m {
                    let cur = hm.at(k, k - 1);
                    hm.set(k, k - 1, -cur);
                }
            } else {
                hm.set(k, k - 1, -s * x);
            }
            p += s;
            x = p / s;
            y = q / s;
            let z = r / s;
            q /= p;
            r /= p;
            for j in k..=nnu {
                let mut pp = hm.at(k, j) + q * hm.at(k + 1, j);
                if k != nnu - 1 {
                    pp += r * hm.at(k + 2, j);
                    let cur = hm.at(k + 2, j);
                    hm.set(k + 2, j, cur - pp * z);
                }
                let cur = hm.at(k + 1, j);
                hm.set(k + 1, j, cur - pp * y);
                let cur = hm.at(k, j);
                hm.set(k, j, cur - pp * x);
            }
            let mmin = nnu.min(k + 3);
            for i in l..=mmin {
                let mut pp = x * hm.at(i, k) + y * hm.at(i, k + 1);
                if k != nnu - 1 {
                    pp += z * hm.at(i, k + 2);
                    let cur = hm.at(i, k + 2);
                    hm.set(i, k + 2, cur - pp * r);
                }
                let cur = hm.at(i, k + 1);
                hm.set(i, k + 1, cur - pp * q);
                let cur = hm.at(i, k);
                hm.set(i, k, cur - pp);
            }
        }
    }
    Ok(eigs)
}

/// One kernel vector per closed block: strictly positive on the block,
/// exactly zero elsewhere, entries summing to 1, with ‖Cv‖_∞ < 1e-9.
///
/// Each vector is obtained by solving the closed block's own irreducible
/// Kolmogorov kernel and embedding it; the structural zeros on all other
/// patches are exact by construction.
pub fn right_perron_basis(c: &TransitionMatrix, nf: &NormalForm) -> Result<Vec<Vec<f64>>> {
    let n = c.n();
    let mut basis = Vec::with_capacity(nf.m);
    for block in nf.closed_blocks() {
        let sub = c.matrix().submatrix(&block.original_indices);
        let sub_tm = TransitionMatrix::trusted(sub, c.tolerance());
        let (_, w) = spectral_bound_with_witness(&sub_tm)?;
        if w.iter().any(|&x| x <= 0.0) {
            return Err(Error::NoConvergence {
                what: "closed-block kernel (component not strictly positive)",
                iterations: 1,
            });
        }
        let mut v = vec![0.0; n];
        for (local, &orig) in block.original_indices.iter().enumerate() {
            v[orig] = w[local];
        }
        basis.push(v);
    }
    Ok(basis)
}

/// True iff every basis vector vanishes (below threshold) on all transient
/// patches and carries mass (above threshold) on closed patches only.
pub fn verify_zero_pattern(basis: &[Vec<f64>], labels: &[StateKind]) -> bool {
    basis.iter().all(|v| {
        let mut has_closed_mass = false;
        for (p, &x) in v.iter().enumerate() {
            match labels[p] {
                StateKind::Transient => {
                    if x.abs() >= PERRON_ZERO_THRESHOLD {
                        return false;
                    }
                }
                StateKind::Closed => {
                    if x > PERRON_ZERO_THRESHOLD {
                        has_closed_mass = true;
                    }
                }
            }
        }
        has_closed_mass
    })
}

/// Assembles the full spectral report for a validated transition matrix.
pub fn analyze(c: &TransitionMatrix) -> Result<SpectralReport> {
    let nf = crate::structure::normal_form(c);
    analyze_with_normal_form(c, &nf)
}

/// Same as [`analyze`] but reuses an already computed normal form.
pub fn analyze_with_normal_form(c: &TransitionMatrix, nf: &NormalForm) -> Result<SpectralReport> {
    let scale = c.scale();
    let spectrum = full_spectrum(c.matrix())?;
    let raw_bound = spectrum.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let spectral_bound = if raw_bound.abs() < EIGENVALUE_ZERO_FACTOR * scale {
        0.0
    } else {
        raw_bound
    };
    let spectral_radius = spectrum.iter().map(|z| z.norm()).fold(0.0, f64::max);

    let basis = right_perron_basis(c, nf)?;
    let m = basis.len();
    let mut default_perron = vec![0.0; c.n()];
    for v in &basis {
        for (d, x) in default_perron.iter_mut().zip(v) {
            *d += x / m as f64;
        }
    }

    let rank = c.matrix().rank(RANK_TOL_FACTOR * scale);
    Ok(SpectralReport {
        spectrum,
        spectral_bound,
        spectral_radius,
        right_perron_basis: basis,
        default_perron,
        left_perron_residual: c.left_one_residual(),
        zero_multiplicity_geometric: c.n() - rank,
        dominant_is_simple: nf.m == 1,
    })
}
