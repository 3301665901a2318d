//! Radial eigenvalues of the linearized operator on annuli `1/n < r < 1`.
//!
//! Two problems are solved on the same log-radius grid:
//!
//! * the Hardy-weighted problem, via the Liouville transform in
//!   [`crate::schrodinger`] (eigenvalues `beta~_i`);
//! * the plain Dirichlet problem, in the self-adjoint form
//!   `-(r^{N-1} v')' - p|u|^{p-1} r^{N-1} v = beta r^{N-1} v`,
//!   written in `s = ln r` so that one symmetric tridiagonal engine
//!   serves both and arbitrarily small inner radii stay resolved
//!   (eigenvalues `beta_i`).
//!
//! Eigenvalues are reported at two grid sizes together with their
//! Richardson extrapolation; sign decisions near zero are guarded by an
//! explicit margin rather than silently committed.

use crate::problem::sphere_area;
use crate::radial::{NodalData, RadialProfile};
use crate::schrodinger::{negative_count_oscillation, SchroedingerForm};
use crate::tridiag::SymTridiag;
use serde::Serialize;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    Explicit,
    /// `n = max(floor(1/r_1) + 1, floor(M_0^{p-1}) + 1)`: inner radius
    /// inside the first nodal region and deeper than the amplitude scale.
    AmplitudeRule,
    /// Double `n` until the negative counts (plain and weighted) are
    /// unchanged across two consecutive doublings.
    Stabilized,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct AnnulusSpec {
    pub n: f64,
    pub mode: SelectionMode,
}

impl AnnulusSpec {
    pub fn explicit(n: f64) -> Self {
        assert!(n >= 2.0);
        Self { n, mode: SelectionMode::Explicit }
    }

    pub fn log_inner(&self) -> f64 {
        -(self.n).ln()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpectralError {
    /// Negative counts kept changing up to the doubling cap.
    StabilizationFailed { trajectory: Vec<(f64, usize, usize)> },
    /// The annulus must start inside the first nodal region.
    InnerRadiusTooLarge { n: f64, first_nodal_radius: f64 },
}

impl fmt::Display for SpectralError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::StabilizationFailed { trajectory } => {
                write!(f, "negative counts did not stabilize: {trajectory:?}")
            }
            Self::InnerRadiusTooLarge { n, first_nodal_radius } => write!(
                f,
                "annulus 1/{n} does not satisfy 1/n < r_1 = {first_nodal_radius}"
            ),
        }
    }
}

impl std::error::Error for SpectralError {}

/// One eigenvalue with its two raw grid values and extrapolation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EigenEstimate {
    pub value: f64,
    pub raw_coarse: f64,
    pub raw_fine: f64,
    pub grid_error: f64,
    pub indeterminate: bool,
}

impl EigenEstimate {
    fn from_pair(coarse: f64, fine: f64, margin: f64) -> Self {
        // second-order extrapolation: e(h) = e + c h^2
        let value = (4.0 * fine - coarse) / 3.0;
        let grid_error = (fine - coarse).abs() / 3.0;
        let indeterminate = value.abs() <= margin.max(5.0 * grid_error);
        Self { value, raw_coarse: coarse, raw_fine: fine, grid_error, indeterminate }
    }
}

/// Weighted radial eigenfunction sampled on the annulus, normalized so
/// that the weighted norm `int_A (phi/|y|)^2 dy = 1`.
#[derive(Debug, Clone, Serialize)]
pub struct RadialEigenfunction {
    pub index: usize,
    pub r: Vec<f64>,
    pub values: Vec<f64>,
    pub interior_nodes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RadialSpectrum {
    pub n: f64,
    pub grid_size: usize,
    pub weighted: Vec<EigenEstimate>,
    pub plain: Vec<EigenEstimate>,
    pub negative_count_weighted: usize,
    pub negative_count_plain: usize,
    pub oscillation_count: usize,
    pub sign_margin: f64,
    #[serde(skip)]
    pub eigenfunctions: Vec<RadialEigenfunction>,
}

impl RadialSpectrum {
    /// Whether any of the leading eigenvalues needed for sign counting
    /// is undecided at this resolution.
    pub fn has_indeterminate(&self, upto: usize) -> bool {
        self.weighted.iter().take(upto).any(|e| e.indeterminate)
    }
}

/// Symmetric tridiagonal discretization of the plain problem in the
/// variable `s = ln r`: `-(P v_s)_s - Q v = beta W v` with
/// `P = e^{(N-2)s}`, `Q = p|u|^{p-1} e^{Ns}`, `W = e^{Ns}`, reduced to
/// standard form with the diagonal mass `W`.
fn plain_matrix(profile: &RadialProfile, n: f64, grid_size: usize) -> SymTridiag {
    let dim = profile.equation().dim() as f64;
    let p = profile.equation().exponent();
    let l = n.ln();
    let h = l / grid_size as f64;
    let s_at = |i: f64| -l + h * i;
    let n_int = grid_size - 1;
    let mut diag = Vec::with_capacity(n_int);
    let mut off = Vec::with_capacity(n_int - 1);
    let pface = |i: f64| ((dim - 2.0) * s_at(i)).exp();
    for k in 1..=n_int {
        let s = s_at(k as f64);
        let w = (dim * s).exp();
        let u = profile.value(s.exp());
        let q = p * u.abs().powf(p - 1.0) * w;
        let d = (pface(k as f64 - 0.5) + pface(k as f64 + 0.5)) / (h * h) - q;
        diag.push(d / w);
        if k < n_int {
            let w_next = (dim * s_at(k as f64 + 1.0)).exp();
            off.push(-pface(k as f64 + 0.5) / (h * h) / (w * w_next).sqrt());
        }
    }
    SymTridiag::new(diag, off)
}

fn negative_counts_at(profile: &RadialProfile, n: f64, grid_size: usize) -> (usize, usize) {
    let form = SchroedingerForm::from_profile(profile, n, grid_size);
    let weighted = form.matrix().count_below(0.0);
    let plain = plain_matrix(profile, n, grid_size).count_below(0.0);
    (plain, weighted)
}

/// Pick the annulus parameter.
pub fn choose_n(
    profile: &RadialProfile,
    nodal: &NodalData,
    mode: SelectionMode,
    grid_size: usize,
) -> Result<AnnulusSpec, SpectralError> {
    let r1 = nodal.nodal_radii[0];
    let n_r1 = (1.0 / r1).floor() + 1.0;
    match mode {
        SelectionMode::Explicit => panic!("explicit mode carries its own n"),
        SelectionMode::AmplitudeRule => {
            let p = profile.equation().exponent();
            let m0 = nodal.extrema[0];
            let n_amp = m0.powf(p - 1.0).floor() + 1.0;
            Ok(AnnulusSpec { n: n_r1.max(n_amp).max(2.0), mode })
        }
        SelectionMode::Stabilized => {
            // Counts plateau spuriously while the hole still swallows the
            // innermost potential well, which sits near
            // r = sqrt(N(N-2)) / M_0^{(p-1)/2}; start with the hole two
            // well-decay lengths below it, then demand two stable doublings.
            let nf = profile.equation().dim() as f64;
            let p = profile.equation().exponent();
            let well = (nf * (nf - 2.0)).sqrt() / nodal.extrema[0].powf((p - 1.0) / 2.0);
            let mut n = n_r1.max(16.0).max((64.0 / well).floor() + 1.0);
            let mut trajectory = Vec::new();
            let mut counts = negative_counts_at(profile, n, grid_size);
            trajectory.push((n, counts.0, counts.1));
            let mut stable = 0;
            for _ in 0..24 {
                let n2 = n * 2.0;
                let next = negative_counts_at(profile, n2, grid_size);
                trajectory.push((n2, next.0, next.1));
                if next == counts {
                    stable += 1;
                    if stable >= 2 {
                        return Ok(AnnulusSpec { n: n2, mode });
                    }
                } else {
                    stable = 0;
                }
                n = n2;
                counts = next;
            }
            Err(SpectralError::StabilizationFailed { trajectory })
        }
    }
}

fn eigen_pairs(matrix: &SymTridiag, count: usize) -> Vec<f64> {
    matrix.lowest_eigenvalues(count)
}

/// Tune the annulus so the m-th weighted eigenvalue sits mid-window in
/// `(-(N-1), 0)`.
///
/// As the hole shrinks, `beta~_m^n` decreases continuously from positive
/// values to `-(N-1)` plus an exponentially small excess, so at the
/// count-stabilizing n its sign margin against `-(N-1)` is far below
/// discretization error. Every n is an equally valid instance of the
/// annulus problem, and the eigenvalue ordering in n is monotone, so
/// bisection in `ln n` picks an annulus where both window signs carry
/// real margins. Counts must already be stable at `n_hi`.
pub fn window_tuned_annulus(
    profile: &RadialProfile,
    m: usize,
    n_lo: f64,
    n_hi: f64,
    grid_size: usize,
) -> AnnulusSpec {
    let nf = profile.equation().dim() as f64;
    let target = -(nf - 1.0) / 2.0;
    let band = (nf - 1.0) / 4.0;
    let beta_m = |n: f64| -> f64 {
        let form = SchroedingerForm::from_profile(profile, n, grid_size);
        form.matrix().lowest_eigenvalues(m)[m - 1]
    };
    let (mut lo, mut hi) = (n_lo.max(2.0), n_hi.max(n_lo * 2.0));
    // bracket: beta_m decreases in n; want it above target at lo
    for _ in 0..12 {
        if beta_m(lo) > target || lo <= 2.0 {
            break;
        }
        lo = (lo / 4.0).max(2.0);
    }
    let mut best = hi;
    for _ in 0..48 {
        let mid = (lo * hi).sqrt();
        let b = beta_m(mid);
        if (b - target).abs() <= band {
            best = mid;
            break;
        }
        if b > target {
            lo = mid;
        } else {
            hi = mid;
            best = mid;
        }
        if hi / lo < 1.0001 {
            break;
        }
    }
    AnnulusSpec { n: best, mode: SelectionMode::Explicit }
}

/// Eigenvalues and eigenvectors of a Schroedinger form by Sturm
/// bisection and inverse iteration.
pub fn eigen_bisect(form: &SchroedingerForm, count: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let matrix = form.matrix();
    let values = matrix.lowest_eigenvalues(count);
    let vectors = values.iter().map(|&v| matrix.eigenvector(v)).collect();
    (values, vectors)
}

/// Full radial spectrum on the annulus: at least `count` weighted and
/// plain eigenvalues (extended to cover every negative one), negative
/// counts from three routes, and the normalized weighted eigenfunctions.
pub fn radial_spectrum(
    profile: &RadialProfile,
    annulus: &AnnulusSpec,
    count: usize,
    grid_size: usize,
    sign_margin: f64,
) -> RadialSpectrum {
    let n = annulus.n;
    let dim = profile.equation().dim();

    let form_fine = SchroedingerForm::from_profile(profile, n, grid_size);
    let form_coarse = SchroedingerForm::from_profile(profile, n, grid_size / 2);
    let mat_w_fine = form_fine.matrix();
    let mat_w_coarse = form_coarse.matrix();
    let mat_p_fine = plain_matrix(profile, n, grid_size);
    let mat_p_coarse = plain_matrix(profile, n, grid_size / 2);

    let neg_w = mat_w_fine.count_below(0.0);
    let neg_p = mat_p_fine.count_below(0.0);
    let k = count.max(neg_w + 2).max(neg_p + 2);

    let weighted: Vec<EigenEstimate> = eigen_pairs(&mat_w_fine, k)
        .into_iter()
        .zip(eigen_pairs(&mat_w_coarse, k))
        .map(|(fine, coarse)| EigenEstimate::from_pair(coarse, fine, sign_margin))
        .collect();
    let plain: Vec<EigenEstimate> = eigen_pairs(&mat_p_fine, k)
        .into_iter()
        .zip(eigen_pairs(&mat_p_coarse, k))
        .map(|(fine, coarse)| EigenEstimate::from_pair(coarse, fine, sign_margin))
        .collect();

    let oscillation_count = negative_count_oscillation(&form_fine);

    // back-transform psi -> v(r) = e^{-(N-2)s/2} psi(s); the weighted
    // normalization of v equals the plain L2 normalization of psi
    let area = sphere_area(dim);
    let h = form_fine.step();
    let s_grid = form_fine.grid();
    let mut eigenfunctions = Vec::with_capacity(k);
    for (index, est) in weighted.iter().enumerate() {
        let psi_int = mat_w_fine.eigenvector(est.raw_fine);
        let mut psi = vec![0.0];
        psi.extend_from_slice(&psi_int);
        psi.push(0.0);
        let norm2: f64 = area * h * psi_int.iter().map(|v| v * v).sum::<f64>();
        let scale = 1.0 / norm2.sqrt();
        let interior_nodes = psi_int
            .windows(2)
            .filter(|w| w[0] != 0.0 && w[1] != 0.0 && w[0].signum() != w[1].signum())
            .count();
        let nf = dim as f64;
        let r: Vec<f64> = s_grid.iter().map(|s| s.exp()).collect();
        let values: Vec<f64> = s_grid
            .iter()
            .zip(&psi)
            .map(|(&s, &p)| scale * (-(nf - 2.0) / 2.0 * s).exp() * p)
            .collect();
        eigenfunctions.push(RadialEigenfunction { index: index + 1, r, values, interior_nodes });
    }

    RadialSpectrum {
        n: annulus.n,
        grid_size,
        weighted,
        plain,
        negative_count_weighted: neg_w,
        negative_count_plain: neg_p,
        oscillation_count,
        sign_margin,
        eigenfunctions,
    }
}

/// Table of the leading eigenvalues across a list of annulus parameters,
/// with per-pair monotonicity flags (eigenvalues must not increase as
/// the hole shrinks, up to twice the combined discretization error).
#[derive(Debug, Clone, Serialize)]
pub struct NConvergence {
    pub ns: Vec<f64>,
    pub weighted: Vec<Vec<EigenEstimate>>,
    pub plain: Vec<Vec<EigenEstimate>>,
    pub monotone_weighted: bool,
    pub monotone_plain: bool,
}

pub fn convergence_in_n(
    profile: &RadialProfile,
    n_list: &[f64],
    count: usize,
    grid_size: usize,
    sign_margin: f64,
) -> NConvergence {
    assert!(n_list.windows(2).all(|w| w[0] < w[1]), "n list must increase");
    let spectra: Vec<RadialSpectrum> = n_list
        .iter()
        .map(|&n| radial_spectrum(profile, &AnnulusSpec::explicit(n), count, grid_size, sign_margin))
        .collect();
    let monotone = |pick: &dyn Fn(&RadialSpectrum) -> &Vec<EigenEstimate>| -> bool {
        spectra.windows(2).all(|w| {
            let (a, b) = (pick(&w[0]), pick(&w[1]));
            (0..count.min(a.len()).min(b.len())).all(|i| {
                b[i].value <= a[i].value + 2.0 * (a[i].grid_error + b[i].grid_error)
            })
        })
    };
    NConvergence {
        ns: n_list.to_vec(),
        monotone_weighted: monotone(&|s| &s.weighted),
        monotone_plain: monotone(&|s| &s.plain),
        weighted: spectra.iter().map(|s| s.weighted.clone()).collect(),
        plain: spectra.iter().map(|s| s.plain.clone()).collect(),
    }
}

/// Residual of the exact relation `L~_rad (du/dr) = -(N-1) du/dr` on the
/// annulus. `eta = u'` is sampled from the solver; `eta''` comes from
/// differentiating the equation itself,
/// `eta'' = -(N-1)/r eta' + (N-1)/r^2 eta - p|u|^{p-1} eta`
/// with `eta' = u''` evaluated through the equation, while the first
/// derivative appearing in the operator is taken by fourth-order central
/// differences on the log-radius grid. The identity is exact in the
/// continuum, so the residual measures solver plus sampling error only.
/// Requires `1/n < r_1`.
pub fn derivative_eigenrelation_residual(
    profile: &RadialProfile,
    nodal: &NodalData,
    n: f64,
    grid_size: usize,
) -> Result<f64, SpectralError> {
    if 1.0 / n >= nodal.nodal_radii[0] {
        return Err(SpectralError::InnerRadiusTooLarge { n, first_nodal_radius: nodal.nodal_radii[0] });
    }
    let eq = profile.equation();
    let dim = eq.dim() as f64;
    let p = eq.exponent();
    let l = n.ln();
    let h = l / grid_size as f64;
    let g = grid_size + 1;
    let mut r_at = Vec::with_capacity(g);
    let mut eta = Vec::with_capacity(g);
    let mut deta_alg = Vec::with_capacity(g); // u'' from the equation
    let mut weight = Vec::with_capacity(g); // p |u|^{p-1}
    for i in 0..g {
        let r = (-l + h * i as f64).exp();
        let (u, du) = profile.eval(r);
        r_at.push(r);
        eta.push(du);
        deta_alg.push(-(dim - 1.0) / r * du - eq.nonlinearity(u));
        weight.push(p * u.abs().powf(p - 1.0));
    }
    let mut worst = 0.0_f64;
    for i in 2..g - 2 {
        let r = r_at[i];
        // d eta / dr via d/ds on the uniform log grid
        let d1 = (-eta[i + 2] + 8.0 * eta[i + 1] - 8.0 * eta[i - 1] + eta[i - 2]) / (12.0 * h * r);
        let d2_alg = -(dim - 1.0) / r * deta_alg[i] + (dim - 1.0) / (r * r) * eta[i]
            - weight[i] * eta[i];
        let res = r * r * (-d2_alg - (dim - 1.0) / r * d1 - weight[i] * eta[i])
            + (dim - 1.0) * eta[i];
        worst = worst.max(res.abs() / (1.0 + eta[i].abs()));
    }
    Ok(worst)
}
