//! Combined analysis report: structure, spectrum, and the named theorem
//! checks the CLI surfaces.

use crate::error::Result;
use crate::kolmogorov::TransitionMatrix;
use crate::spectral::{
    analyze_with_normal_form, full_spectrum, verify_zero_pattern, SpectralReport,
    EIGENVALUE_ZERO_FACTOR,
};
use crate::structure::{classify_states, is_irreducible, normal_form, NormalForm, StateKind};

/// Named boolean verdicts; all of them hold for any valid Kolmogorov matrix,
/// so a `false` flags either a defect or an invalid matrix that slipped past
/// validation.
#[derive(Debug, Clone, Copy)]
pub struct TheoremChecks {
    /// Spectral bound is zero and zero is attained in the spectrum.
    pub zero_is_dominant: bool,
    /// ‖1ᵀC‖_∞ vanishes up to 1e-12 × max(1, ‖C‖_max).
    pub left_one_residual_ok: bool,
    /// Kernel basis vectors vanish on transient patches and carry mass on
    /// closed patches only.
    pub zero_pattern_consistent: bool,
    /// Every transient diagonal block has spectral bound < 0.
    pub transient_blocks_negative_bound: bool,
}

impl TheoremChecks {
    pub fn all_hold(&self) -> bool {
        self.zero_is_dominant
            && self.left_one_residual_ok
            && self.zero_pattern_consistent
            && self.transient_blocks_negative_bound
    }
}

#[derive(Debug, Clone)]
pub struct AnalysisReport {
    pub n: usize,
    pub tolerance: f64,
    pub irreducible: bool,
    pub normal_form: NormalForm,
    pub spectral: SpectralReport,
    pub state_labels: Vec<StateKind>,
    pub checks: TheoremChecks,
}

/// Runs the full structure + spectral analysis and evaluates the theorem
/// checks.
pub fn analyze_matrix(c: &TransitionMatrix) -> Result<AnalysisReport> {
    let nf = normal_form(c);
    let spectral = analyze_with_normal_form(c, &nf)?;
    let state_labels = classify_states(&nf);
    let scale = c.scale();

    let zero_attained = spectral
        .spectrum
        .iter()
        .any(|z| z.norm() < EIGENVALUE_ZERO_FACTOR * scale);
    let zero_is_dominant = spectral.spectral_bound == 0.0 && zero_attained;

    let left_one_residual_ok = spectral.left_perron_residual <= 1e-12 * scale;

    let zero_pattern_consistent =
        verify_zero_pattern(&spectral.right_perron_basis, &state_labels);

    let mut transient_blocks_negative_bound = true;
    for block in nf.transient_blocks() {
        let sub = nf.diagonal_block(block);
        let bound = full_spectrum(&sub)?
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        if !(bound < 0.0) {
            transient_blocks_negative_bound = false;
        }
    }

    Ok(AnalysisReport {
        n: c.n(),
        tolerance: c.tolerance(),
        irreducible: is_irreducible(c),
        normal_form: nf,
        spectral,
        state_labels,
        checks: TheoremChecks {
            zero_is_dominant,
            left_one_residual_ok,
            zero_pattern_consistent,
            transient_blocks_negative_bound,
        },
    })
}
