//! Morse index assembly: combine the radial spectrum on the annulus
//! with the sphere spectrum through
//! `mu~ = beta~_i + lambda_k` and count negatives with multiplicity.

use crate::angular::AngularSpectrum;
use crate::problem::ProblemSpec;
use crate::spectral::RadialSpectrum;
use serde::Serialize;
use std::fmt;

/// One `(i, k)` pair in the decomposition with a decided sign.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Contribution {
    pub radial_index: usize,
    pub k: u32,
    pub beta: f64,
    pub lambda: u64,
    pub sum: f64,
    pub multiplicity: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Combination {
    /// Negative eigenvalues of the weighted operator, with multiplicity.
    pub negative_count: u64,
    /// All negative `(i, k)` pairs, sorted by sum.
    pub contributions: Vec<Contribution>,
    /// Pairs whose sum is within the sign margin of zero.
    pub indeterminate: Vec<Contribution>,
    pub sign_margin: f64,
    /// Smallest |sum| over all decided pairs.
    pub min_margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CombineError {
    /// A radial eigenvalue needed for counting is undecided; refine the
    /// grid, then the annulus, then move closer to the critical exponent.
    IndeterminateRadial { index: usize, value: f64, grid_error: f64 },
    /// Not enough radial eigenvalues were computed to certify the count.
    SpectrumTooShort { have: usize },
    /// The last computed radial eigenvalue is still negative, so the
    /// negative radial list may be incomplete.
    CountNotCertified { last_value: f64 },
}

impl fmt::Display for CombineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::IndeterminateRadial { index, value, grid_error } => write!(
                f,
                "radial eigenvalue {index} = {value:.3e} (grid error {grid_error:.1e}) is within the sign margin"
            ),
            Self::SpectrumTooShort { have } => {
                write!(f, "only {have} radial eigenvalues available")
            }
            Self::CountNotCertified { last_value } => write!(
                f,
                "largest computed radial eigenvalue {last_value:.3e} is negative; count incomplete"
            ),
        }
    }
}

impl std::error::Error for CombineError {}

/// Count the negative eigenvalues `beta~_i + lambda_k` with multiplicity.
///
/// Near-zero sums are never silently counted: any pair within the margin
/// is reported as indeterminate and the caller must refine.
pub fn combine_spectra(
    radial: &RadialSpectrum,
    angular: &AngularSpectrum,
) -> Result<Combination, CombineError> {
    let margin = radial.sign_margin;
    if radial.weighted.len() < 2 {
        return Err(CombineError::SpectrumTooShort { have: radial.weighted.len() });
    }
    // the radial list must extend past the negatives
    let last = radial.weighted.last().unwrap();
    if last.value < 0.0 {
        return Err(CombineError::CountNotCertified { last_value: last.value });
    }
    for (i, est) in radial.weighted.iter().enumerate() {
        if est.indeterminate && est.value < margin.max(5.0 * est.grid_error) {
            return Err(CombineError::IndeterminateRadial {
                index: i + 1,
                value: est.value,
                grid_error: est.grid_error,
            });
        }
    }
    // truncation safety: lambda_{k_max} must exceed every |beta|
    let beta_min = radial.weighted.iter().map(|e| e.value).fold(f64::MAX, f64::min);
    assert!(
        (angular.max_lambda() as f64) > -beta_min.min(0.0),
        "angular spectrum too short for beta_1 = {beta_min}"
    );

    let mut contributions = Vec::new();
    let mut indeterminate = Vec::new();
    let mut count = 0u64;
    let mut min_margin = f64::MAX;
    for (i, est) in radial.weighted.iter().enumerate() {
        if est.value >= 0.0 && !est.indeterminate {
            continue; // nonnegative beta cannot make a negative sum
        }
        for level in &angular.levels {
            let sum = est.value + level.lambda as f64;
            let pair = Contribution {
                radial_index: i + 1,
                k: level.k,
                beta: est.value,
                lambda: level.lambda,
                sum,
                multiplicity: level.multiplicity,
            };
            let local_margin = margin.max(5.0 * est.grid_error);
            if sum.abs() <= local_margin {
                indeterminate.push(pair);
            } else if sum < 0.0 {
                contributions.push(pair);
                count += level.multiplicity;
                min_margin = min_margin.min(sum.abs());
            } else {
                min_margin = min_margin.min(sum.abs());
                break; // lambda_k increases in k
            }
        }
    }
    contributions.sort_by(|a, b| a.sum.total_cmp(&b.sum));
    Ok(Combination {
        negative_count: count,
        contributions,
        indeterminate,
        sign_margin: margin,
        min_margin,
    })
}

/// Full report for one instance.
#[derive(Debug, Clone, Serialize)]
pub struct MorseReport {
    pub spec: ProblemSpec,
    pub n_used: f64,
    pub grid_size: usize,
    pub morse_index: u64,
    pub radial_morse_index: usize,
    /// `m + N(m-1)`.
    pub formula_value: u64,
    /// `m_rad + N(m-1)`.
    pub lower_bound_value: u64,
    pub matches_formula: bool,
    pub satisfies_lower_bound: bool,
    pub radial_index_is_m: bool,
    /// Signs of `beta~_i + lambda_1` for `i = 1..m-1` (all negative once
    /// the asymptotic regime is reached).
    pub first_level_sums: Vec<f64>,
    pub contributions: Vec<Contribution>,
    pub indeterminate: Vec<Contribution>,
    pub min_margin: f64,
    pub weighted_eigenvalues: Vec<f64>,
}

pub fn morse_report(
    spec: &ProblemSpec,
    radial: &RadialSpectrum,
    angular: &AngularSpectrum,
    combination: &Combination,
) -> MorseReport {
    let m = spec.nodal_count() as u64;
    let n_dim = spec.dim() as u64;
    let formula_value = m + n_dim * (m - 1);
    let radial_morse_index = radial.negative_count_weighted;
    let lower_bound_value = radial_morse_index as u64 + n_dim * (m - 1);
    let lambda1 = angular.levels[1].lambda as f64;
    let first_level_sums = radial
        .weighted
        .iter()
        .take(m as usize - 1)
        .map(|e| e.value + lambda1)
        .collect();
    MorseReport {
        spec: *spec,
        n_used: radial.n,
        grid_size: radial.grid_size,
        morse_index: combination.negative_count,
        radial_morse_index,
        formula_value,
        lower_bound_value,
        matches_formula: combination.negative_count == formula_value
            && combination.indeterminate.is_empty(),
        satisfies_lower_bound: combination.negative_count >= formula_value,
        radial_index_is_m: radial_morse_index as u64 == m,
        first_level_sums,
        contributions: combination.contributions.clone(),
        indeterminate: combination.indeterminate.clone(),
        min_margin: combination.min_margin,
        weighted_eigenvalues: radial.weighted.iter().map(|e| e.value).collect(),
    }
}
