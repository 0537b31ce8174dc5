//! Age-structured simulation of a multi-patch population with fast
//! migration: u_t = -u_a - M(a)u + (1/ε)Cu with a renewal boundary at age 0.
//!
//! Discretization: uniform age grid with Δt = Δa, so transport along
//! characteristics is an exact one-cell shift. Each step applies, in order,
//! transport, per-node exponential mortality decay, the precomputed
//! migration propagator exp((Δt/ε)C) at every age node, and finally the
//! renewal boundary at the age-0 node. Every sub-step is a non-negative
//! operator, so states stay non-negative; the migration term is handled by
//! the matrix exponential because 1/ε makes it stiff.

use crate::error::{Error, Result};
use crate::kolmogorov::{MatrixExponentialResult, TransitionMatrix};

/// Uniform age grid on [0, age_max] with `cells` intervals (cells+1 nodes).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgeGrid {
    pub age_max: f64,
    pub cells: usize,
}

impl AgeGrid {
    pub fn new(age_max: f64, cells: usize) -> Result<Self> {
        if !(age_max > 0.0) {
            return Err(Error::InvalidInput(format!(
                "age_max must be positive, got {age_max}"
            )));
        }
        if cells == 0 {
            return Err(Error::InvalidInput("grid_count must be at least 1".into()));
        }
        Ok(Self { age_max, cells })
    }

    #[inline]
    pub fn da(&self) -> f64 {
        self.age_max / self.cells as f64
    }

    #[inline]
    pub fn nodes(&self) -> usize {
        self.cells + 1
    }

    #[inline]
    pub fn age(&self, j: usize) -> f64 {
        j as f64 * self.da()
    }

    /// Composite trapezoid quadrature of per-node values over [0, age_max].
    pub fn trapezoid(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.nodes());
        let inner: f64 = values[1..values.len() - 1].iter().sum();
        self.da() * (0.5 * values[0] + inner + 0.5 * values[values.len() - 1])
    }
}

/// Tabulated age-dependent mortality and fertility per patch.
///
/// Tables hold one value per grid node. Fertility beyond the cutoff age w is
/// zeroed at load time.
#[derive(Debug, Clone)]
pub struct VitalRates {
    pub grid: AgeGrid,
    pub mortality: Vec<Vec<f64>>,
    pub fertility: Vec<Vec<f64>>,
    pub fertility_cutoff: f64,
}

impl VitalRates {
    pub fn new(
        grid: AgeGrid,
        mortality: Vec<Vec<f64>>,
        mut fertility: Vec<Vec<f64>>,
        fertility_cutoff: f64,
    ) -> Result<Self> {
        let patches = mortality.len();
        if patches == 0 {
            return Err(Error::InvalidInput("at least one patch required".into()));
        }
        if fertility.len() != patches {
            return Err(Error::DimensionMismatch {
                expected: patches,
                got: fertility.len(),
            });
        }
        if !(fertility_cutoff >= 0.0) || fertility_cutoff > grid.age_max {
            return Err(Error::InvalidInput(format!(
                "fertility_cutoff must lie in [0, age_max], got {fertility_cutoff}"
            )));
        }
        for table in mortality.iter().chain(fertility.iter()) {
            if table.len() != grid.nodes() {
                return Err(Error::DimensionMismatch {
                    expected: grid.nodes(),
                    got: table.len(),
                });
            }
            if table.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidInput(
                    "vital rates must be finite and non-negative".into(),
                ));
            }
        }
        for table in &mut fertility {
            for (j, v) in table.iter_mut().enumerate() {
                if grid.age(j) > fertility_cutoff {
                    *v = 0.0;
                }
            }
        }
        Ok(Self {
            grid,
            mortality,
            fertility,
            fertility_cutoff,
        })
    }

    pub fn patches(&self) -> usize {
        self.mortality.len()
    }
}

/// Per-patch, per-age-node population densities at one time instant.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationState {
    pub time: f64,
    pub grid: AgeGrid,
    /// values[patch][node] = u_i(a_j, t), individuals per unit age.
    pub values: Vec<Vec<f64>>,
}

impl PopulationState {
    pub fn new(time: f64, grid: AgeGrid, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("at least one patch required".into()));
        }
        for profile in &values {
            if profile.len() != grid.nodes() {
                return Err(Error::GridMismatch(format!(
                    "profile has {} nodes, grid has {}",
                    profile.len(),
                    grid.nodes()
                )));
            }
        }
        Ok(Self { time, grid, values })
    }

    pub fn patches(&self) -> usize {
        self.values.len()
    }

    /// Per-patch integrals ∫ u_i da.
    pub fn patch_totals(&self) -> Vec<f64> {
        self.values
            .iter()
            .map(|u| self.grid.trapezoid(u))
            .collect()
    }

    pub fn total(&self) -> f64 {
        self.patch_totals().iter().sum()
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|u| u.iter().all(|v| v.is_finite()))
    }
}

/// Newborn densities b_i = ∫₀^w β_i(a) u_i(a,t) da by composite trapezoid.
///
/// Births are attributed within each patch (the fertility matrix acts
/// diagonally): patch i's newborns come from patch i's own fertility.
pub fn renewal_boundary(state: &PopulationState, rates: &VitalRates) -> Result<Vec<f64>> {
    if state.grid != rates.grid {
        return Err(Error::GridMismatch(
            "state and vital rates use different grids".into(),
        ));
    }
    if state.patches() != rates.patches() {
        return Err(Error::DimensionMismatch {
            expected: rates.patches(),
            got: state.patches(),
        });
    }
    Ok(state
        .values
        .iter()
        .zip(&rates.fertility)
        .map(|(u, beta)| {
            let integrand: Vec<f64> = u.iter().zip(beta).map(|(ui, bi)| ui * bi).collect();
            state.grid.trapezoid(&integrand)
        })
        .collect())
}

/// Precomputed single-step operator: migration propagator exp((Δt/ε)C) and
/// per-node mortality decay factors for Δt = Δa.
#[derive(Debug, Clone)]
pub struct Stepper {
    rates: VitalRates,
    propagator: MatrixExponentialResult,
    /// decay[patch][node] = exp(-μ_i(a_j)·Δt)
    decay: Vec<Vec<f64>>,
    patches: usize,
}

impl Stepper {
    pub fn new(matrix: &TransitionMatrix, rates: &VitalRates, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidInput(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        if matrix.n() != rates.patches() {
            return Err(Error::DimensionMismatch {
                expected: rates.patches(),
                got: matrix.n(),
            });
        }
        let dt = rates.grid.da();
        let propagator = matrix.propagator(dt / epsilon)?;
        let decay = rates
            .mortality
            .iter()
            .map(|mu| mu.iter().map(|m| (-m * dt).exp()).collect())
            .collect();
        Ok(Self {
            rates: rates.clone(),
            propagator,
            decay,
            patches: matrix.n(),
        })
    }

    pub fn propagator(&self) -> &MatrixExponentialResult {
        &self.propagator
    }

    pub fn grid(&self) -> AgeGrid {
        self.rates.grid
    }

    /// Advances one step of Δt = Δa: exact transport shift, mortality decay
    /// at the post-shift ages, migration at every age node, then the renewal
    /// boundary written into the age-0 node.
    pub fn step(&self, state: &PopulationState) -> Result<PopulationState> {
        if state.grid != self.rates.grid {
            return Err(Error::GridMismatch(
                "state grid differs from stepper grid".into(),
            ));
        }
        if state.patches() != self.patches {
            return Err(Error::DimensionMismatch {
                expected: self.patches,
                got: state.patches(),
            });
        }
        let nodes = state.grid.nodes();
        let n = self.patches;

        // transport: shift one cell toward older age; the oldest cell exits
        let mut values: Vec<Vec<f64>> = state
            .values
            .iter()
            .map(|u| {
                let mut shifted = vec![0.0; nodes];
                shifted[1..].copy_from_slice(&u[..nodes - 1]);
                shifted
            })
            .collect();

        // demography at post-shift ages
        for (u, decay) in values.iter_mut().zip(&self.decay) {
            for j in 1..nodes {
                u[j] *= decay[j];
            }
        }

        // migration: left-multiply the patch vector at each age node
        if n > 1 {
            let mut column = vec![0.0; n];
            for j in 1..nodes {
                for i in 0..n {
                    column[i] = values[i][j];
                }
                for i in 0..n {
                    let mut acc = 0.0;
                    for (k, ck) in column.iter().enumerate() {
                        acc += self.propagator.at(i, k) * ck;
                    }
                    values[i][j] = acc;
                }
            }
        }

        // renewal boundary from the post-update state
        let next = PopulationState {
            time: state.time + state.grid.da(),
            grid: state.grid,
            values,
        };
        let births = renewal_boundary(&next, &self.rates)?;
        let mut next = next;
        for (u, b) in next.values.iter_mut().zip(births) {
            u[0] = b;
        }
        Ok(next)
    }
}

/// Full simulation setup.
#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub matrix: TransitionMatrix,
    pub rates: VitalRates,
    pub epsilon: f64,
    pub horizon: f64,
    /// initial[patch][node] = φ_i(a_j)
    pub initial: Vec<Vec<f64>>,
    pub output_stride: usize,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidInput(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.horizon >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "horizon must be non-negative, got {}",
                self.horizon
            )));
        }
        if self.output_stride == 0 {
            return Err(Error::InvalidInput("output_stride must be at least 1".into()));
        }
        if self.matrix.n() != self.rates.patches() {
            return Err(Error::DimensionMismatch {
                expected: self.rates.patches(),
                got: self.matrix.n(),
            });
        }
        if self.initial.len() != self.rates.patches() {
            return Err(Error::DimensionMismatch {
                expected: self.rates.patches(),
                got: self.initial.len(),
            });
        }
        let mut any_positive = false;
        for profile in &self.initial {
            if profile.len() != self.rates.grid.nodes() {
                return Err(Error::GridMismatch(format!(
                    "initial profile has {} nodes, grid has {}",
                    profile.len(),
                    self.rates.grid.nodes()
                )));
            }
            for v in profile {
                if !v.is_finite() || *v < 0.0 {
                    return Err(Error::InvalidInput(
                        "initial profile must be finite and non-negative".into(),
                    ));
                }
                if *v > 0.0 {
                    any_positive = true;
                }
            }
        }
        if !any_positive {
            return Err(Error::InvalidInput(
                "initial profile must have at least one positive entry".into(),
            ));
        }
        Ok(())
    }
}

/// One recorded trajectory sample.
#[derive(Debug, Clone)]
pub struct Sample {
    pub step: usize,
    pub time: f64,
    /// Σ_i ∫ u_i da.
    pub total: f64,
    /// Per-patch shares of the total; NaN when the population is extinct.
    pub shares: Vec<f64>,
    pub state: PopulationState,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn final_sample(&self) -> &Sample {
        self.samples.last().expect("trajectory has at least one sample")
    }
}

fn make_sample(step: usize, state: &PopulationState) -> Sample {
    let totals = state.patch_totals();
    let total: f64 = totals.iter().sum();
    let shares = if total > 0.0 {
        totals.iter().map(|t| t / total).collect()
    } else {
        vec![f64::NAN; totals.len()]
    };
    Sample {
        step,
        time: state.time,
        total,
        shares,
        state: state.clone(),
    }
}

/// Runs ⌈horizon/Δt⌉ steps, recording the initial state, every
/// `output_stride`-th step, and the final step.
pub fn simulate(config: &SimulationConfig) -> Result<Trajectory> {
    config.validate()?;
    let stepper = Stepper::new(&config.matrix, &config.rates, config.epsilon)?;
    let grid = config.rates.grid;
    let dt = grid.da();
    let steps_real = (config.horizon / dt).ceil();
    if !(steps_real <= 1e8) {
        return Err(Error::InvalidInput(format!(
            "horizon {} needs {steps_real:e} steps of Δt = {dt}",
            config.horizon
        )));
    }
    let steps = steps_real as usize;

    let mut state = PopulationState::new(0.0, grid, config.initial.clone())?;
    let mut samples = vec![make_sample(0, &state)];
    for k in 1..=steps {
        state = stepper.step(&state)?;
        if !state.is_finite() {
            return Err(Error::NonFiniteState { step: k });
        }
        if k % config.output_stride == 0 || k == steps {
            samples.push(make_sample(k, &state));
        }
    }
    Ok(Trajectory { samples })
}

/// share_i = (∫ u_i da) / (Σ_j ∫ u_j da).
pub fn patch_shares(state: &PopulationState) -> Result<Vec<f64>> {
    let totals = state.patch_totals();
    let total: f64 = totals.iter().sum();
    if !(total > 0.0) {
        return Err(Error::EmptyPopulation);
    }
    Ok(totals.iter().map(|t| t / total).collect())
}
