//! Averaged scalar model and comparison against the full multi-patch run.
//!
//! When migration is fast and the transition matrix irreducible, the
//! population settles on the stable patch structure k (the normalized right
//! Perron vector) and the total evolves like a single-patch population with
//! k-weighted vital rates. This module builds that averaged model, runs it
//! on the same grid, and quantifies how far the full solution is from
//! (patch structure) × (aggregated density).

use crate::error::{Error, Result};
use crate::kolmogorov::TransitionMatrix;
use crate::sim::{simulate, AgeGrid, SimulationConfig, Trajectory, VitalRates};

/// Scalar model obtained by k-weighting the per-patch vital rates.
#[derive(Debug, Clone)]
pub struct AveragedModel {
    /// Stable patch structure, normalized so its entries sum to 1.
    pub k: Vec<f64>,
    pub grid: AgeGrid,
    /// μ*(a_j) = Σ_i k_i μ_i(a_j)
    pub mortality: Vec<f64>,
    /// β*(a_j) = Σ_i k_i β_i(a_j)
    pub fertility: Vec<f64>,
    pub fertility_cutoff: f64,
}

/// Builds the averaged model with the k-weighted arithmetic mean of the
/// per-patch rates.
pub fn averaged_rates(rates: &VitalRates, k: &[f64]) -> Result<AveragedModel> {
    if k.len() != rates.patches() {
        return Err(Error::DimensionMismatch {
            expected: rates.patches(),
            got: k.len(),
        });
    }
    if k.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::InvalidInput(
            "patch weights must be finite and non-negative".into(),
        ));
    }
    let nodes = rates.grid.nodes();
    let mut mortality = vec![0.0; nodes];
    let mut fertility = vec![0.0; nodes];
    for (i, &ki) in k.iter().enumerate() {
        for j in 0..nodes {
            mortality[j] += ki * rates.mortality[i][j];
            fertility[j] += ki * rates.fertility[i][j];
        }
    }
    Ok(AveragedModel {
        k: k.to_vec(),
        grid: rates.grid,
        mortality,
        fertility,
        fertility_cutoff: rates.fertility_cutoff,
    })
}

/// Runs the age-structured stepper on the averaged model: one patch,
/// zero transition matrix, migration inert.
pub fn simulate_aggregated(
    model: &AveragedModel,
    initial: &[f64],
    horizon: f64,
    output_stride: usize,
) -> Result<Trajectory> {
    let rates = VitalRates::new(
        model.grid,
        vec![model.mortality.clone()],
        vec![model.fertility.clone()],
        model.fertility_cutoff,
    )?;
    let config = SimulationConfig {
        matrix: TransitionMatrix::from_rows(&[vec![0.0]], crate::kolmogorov::DEFAULT_TOLERANCE)?,
        rates,
        epsilon: 1.0,
        horizon,
        initial: vec![initial.to_vec()],
        output_stride,
    };
    simulate(&config)
}

/// Per-sample deviation between the full run and k × aggregated run.
#[derive(Debug, Clone)]
pub struct CompareRow {
    pub time: f64,
    /// ‖patch_shares(full) − k‖_∞
    pub d_share: f64,
    /// max_i ∫ |u_i(a,t) − k_i·ū(a,t)| da / max(∫ ū da, floor)
    pub d_prof: f64,
}

/// Compares sample-wise (no interpolation); trajectories must share sample
/// times and grids. The profile-deviation denominator is floored at
/// 1e-12 × (initial aggregated total) so die-outs do not blow up.
pub fn compare(
    full: &Trajectory,
    model: &AveragedModel,
    aggregated: &Trajectory,
) -> Result<Vec<CompareRow>> {
    if full.samples.len() != aggregated.samples.len() {
        return Err(Error::SampleMismatch(format!(
            "{} samples vs {}",
            full.samples.len(),
            aggregated.samples.len()
        )));
    }
    let floor = 1e-12 * aggregated.samples[0].total;
    let mut rows = Vec::with_capacity(full.samples.len());
    for (fs, ags) in full.samples.iter().zip(&aggregated.samples) {
        if fs.time != ags.time {
            return Err(Error::SampleMismatch(format!(
                "sample times differ: {} vs {}",
                fs.time, ags.time
            )));
        }
        if fs.state.grid != model.grid || ags.state.grid != model.grid {
            return Err(Error::SampleMismatch("grids differ".into()));
        }
        if fs.state.patches() != model.k.len() {
            return Err(Error::DimensionMismatch {
                expected: model.k.len(),
                got: fs.state.patches(),
            });
        }

        // NaN shares (extinct population) must surface as NaN, not vanish
        // inside the max fold
        let d_share = if fs.shares.iter().any(|s| s.is_nan()) {
            f64::NAN
        } else {
            fs.shares
                .iter()
                .zip(&model.k)
                .map(|(s, k)| (s - k).abs())
                .fold(0.0, f64::max)
        };

        let u_bar = &ags.state.values[0];
        let denominator = ags.total.max(floor);
        let nodes = model.grid.nodes();
        let mut d_prof: f64 = 0.0;
        let mut diff = vec![0.0; nodes];
        for (i, &ki) in model.k.iter().enumerate() {
            for j in 0..nodes {
                diff[j] = (fs.state.values[i][j] - ki * u_bar[j]).abs();
            }
            d_prof = d_prof.max(model.grid.trapezoid(&diff) / denominator);
        }
        rows.push(CompareRow {
            time: fs.time,
            d_share,
            d_prof,
        });
    }
    Ok(rows)
}
