//! Rescalings of the solution around each nodal region and the sweep
//! diagnostics that track their convergence to the bubble.
//!
//! Region `i` is rescaled as `z_i(x) = (-1)^i u(x / M_i^{(p-1)/2}) / M_i`
//! on the tail set beyond its inner nodal radius, so that `z_i(s~_i) = 1`
//! at the rescaled critical radius and the limit is the bubble `U` for
//! every region.

use crate::limit::LimitProfile;
use crate::radial::{NodalData, RadialProfile};
use serde::Serialize;
use std::fmt;

pub struct RescaledProfile<'a> {
    profile: &'a RadialProfile,
    pub region: usize,
    /// `M_i^{(p-1)/2}`: radii scale by this factor.
    pub x_scale: f64,
    /// `M_i`: values divide by this factor.
    pub amplitude: f64,
    pub sign: f64,
    /// Rescaled tail set `(x_lo, x_hi)`; `x_lo = 0` for the first region.
    pub x_lo: f64,
    pub x_hi: f64,
    /// Rescaled critical radius, where `z = 1` exactly.
    pub critical_x: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AsymptoticsError {
    EmptyWindow { region: usize, lo: f64, hi: f64, x_lo: f64, x_hi: f64 },
    TooFewSweepPoints { have: usize },
}

impl fmt::Display for AsymptoticsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EmptyWindow { region, lo, hi, x_lo, x_hi } => write!(
                f,
                "window [{lo}, {hi}] misses the rescaled domain [{x_lo}, {x_hi}] of region {region}"
            ),
            Self::TooFewSweepPoints { have } => {
                write!(f, "sweep diagnostics need at least 3 points, got {have}")
            }
        }
    }
}

impl std::error::Error for AsymptoticsError {}

/// Rescale nodal region `i` (0-based) of a solved instance.
pub fn rescale_region<'a>(
    profile: &'a RadialProfile,
    nodal: &NodalData,
    region: usize,
) -> RescaledProfile<'a> {
    assert!(region < nodal.regions());
    let p = profile.equation().exponent();
    let amplitude = nodal.extrema[region];
    let x_scale = amplitude.powf((p - 1.0) / 2.0);
    let x_lo = if region == 0 { 0.0 } else { nodal.nodal_radii[region - 1] * x_scale };
    RescaledProfile {
        profile,
        region,
        x_scale,
        amplitude,
        sign: if region % 2 == 0 { 1.0 } else { -1.0 },
        x_lo,
        x_hi: profile.r_end() * x_scale,
        critical_x: nodal.critical_radii[region] * x_scale,
    }
}

impl RescaledProfile<'_> {
    /// `(z(x), z'(x))`.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let (u, du) = self.profile.eval(x / self.x_scale);
        (self.sign * u / self.amplitude, self.sign * du / (self.amplitude * self.x_scale))
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).0
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProfileDistance {
    pub sup_value: f64,
    pub sup_derivative: f64,
}

const DIST_SAMPLES: usize = 1500;

/// Sup distance of the rescaled profile to the bubble over the window
/// `inner_cut <= |x| <= r_max`, in value and first derivative. For
/// regions beyond the first the convergence excludes the origin, so a
/// positive `inner_cut` is required there.
pub fn profile_distance(
    z: &RescaledProfile<'_>,
    r_max: f64,
    inner_cut: f64,
) -> Result<ProfileDistance, AsymptoticsError> {
    assert!(r_max > inner_cut && inner_cut >= 0.0);
    assert!(z.region == 0 || inner_cut > 0.0, "regions past the first need a positive inner cut");
    let lo = inner_cut.max(z.x_lo);
    let hi = r_max.min(z.x_hi);
    if lo >= hi {
        return Err(AsymptoticsError::EmptyWindow {
            region: z.region,
            lo: inner_cut,
            hi: r_max,
            x_lo: z.x_lo,
            x_hi: z.x_hi,
        });
    }
    let bubble = LimitProfile::new(z.profile.equation().dim());
    let mut sup_value = 0.0_f64;
    let mut sup_derivative = 0.0_f64;
    for k in 0..=DIST_SAMPLES {
        let x = lo + (hi - lo) * k as f64 / DIST_SAMPLES as f64;
        let (zv, zd) = z.eval(x);
        sup_value = sup_value.max((zv - bubble.bubble(x)).abs());
        sup_derivative = sup_derivative.max((zd - bubble.bubble_deriv(x)).abs());
    }
    Ok(ProfileDistance { sup_value, sup_derivative })
}

/// One sweep row: every scaling diagnostic at a single exponent.
#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsRow {
    pub p: f64,
    /// `r_i M_{i-1}^{(p-1)/2}`, i = 1..m-1 (grows without bound).
    pub a_cols: Vec<f64>,
    /// `s_i M_i^{(p-1)/2}`, i = 1..m-1 (tends to zero).
    pub b_cols: Vec<f64>,
    /// `r_i M_i^{(p-1)/2}`, i = 1..m-1 (tends to zero).
    pub c_cols: Vec<f64>,
    /// `s_i / r_{i+1}`, i = 1..m-1 (tends to zero).
    pub r_cols: Vec<f64>,
    /// `M_i / M_{i+1}`, i = 0..m-2 (grows without bound).
    pub ratio_cols: Vec<f64>,
    pub m0: f64,
    /// Sup distance to the bubble per region on a fixed window.
    pub bubble_distance: Vec<f64>,
    /// Per-region gradient energies.
    pub energies: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrendFlags {
    pub a_increasing: bool,
    pub b_decreasing: bool,
    pub c_decreasing: bool,
    pub r_decreasing: bool,
    pub ratios_increasing: bool,
    pub m0_increasing: bool,
    pub distance_decreasing: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepDiagnostics {
    pub rows: Vec<DiagnosticsRow>,
    /// Trends over the last three sweep points.
    pub trends: TrendFlags,
}

pub fn diagnostics_row(
    p: f64,
    profile: &RadialProfile,
    nodal: &NodalData,
    energies: &[f64],
    bubble_window: (f64, f64),
) -> DiagnosticsRow {
    let half = (p - 1.0) / 2.0;
    let m = nodal.regions();
    let mut row = DiagnosticsRow {
        p,
        a_cols: Vec::new(),
        b_cols: Vec::new(),
        c_cols: Vec::new(),
        r_cols: Vec::new(),
        ratio_cols: Vec::new(),
        m0: nodal.extrema[0],
        bubble_distance: Vec::new(),
        energies: energies.to_vec(),
    };
    for i in 1..m {
        row.a_cols.push(nodal.nodal_radii[i - 1] * nodal.extrema[i - 1].powf(half));
        row.b_cols.push(nodal.critical_radii[i] * nodal.extrema[i].powf(half));
        row.c_cols.push(nodal.nodal_radii[i - 1] * nodal.extrema[i].powf(half));
        row.r_cols.push(nodal.critical_radii[i] / nodal.nodal_radii[i]);
    }
    for i in 0..m.saturating_sub(1) {
        row.ratio_cols.push(nodal.extrema[i] / nodal.extrema[i + 1]);
    }
    let (inner_cut, r_max) = bubble_window;
    for i in 0..m {
        let z = rescale_region(profile, nodal, i);
        let cut = if i == 0 { 0.0 } else { inner_cut };
        let d = profile_distance(&z, r_max, cut)
            .map(|d| d.sup_value)
            .unwrap_or(f64::NAN);
        row.bubble_distance.push(d);
    }
    row
}

fn strictly<F: Fn(&DiagnosticsRow) -> Vec<f64>>(
    rows: &[DiagnosticsRow],
    col: F,
    increasing: bool,
) -> bool {
    let tail = &rows[rows.len() - 3..];
    let k = col(&tail[0]).len();
    (0..k).all(|j| {
        tail.windows(2).all(|w| {
            let (a, b) = (col(&w[0])[j], col(&w[1])[j]);
            if increasing {
                b > a
            } else {
                b < a
            }
        })
    })
}

/// Assemble rows over an increasing exponent sweep and test the trend
/// of every column on the last three points.
pub fn sweep_diagnostics(rows: Vec<DiagnosticsRow>) -> Result<SweepDiagnostics, AsymptoticsError> {
    if rows.len() < 3 {
        return Err(AsymptoticsError::TooFewSweepPoints { have: rows.len() });
    }
    assert!(rows.windows(2).all(|w| w[0].p < w[1].p), "rows must be keyed by increasing p");
    let trends = TrendFlags {
        a_increasing: strictly(&rows, |r| r.a_cols.clone(), true),
        b_decreasing: strictly(&rows, |r| r.b_cols.clone(), false),
        c_decreasing: strictly(&rows, |r| r.c_cols.clone(), false),
        r_decreasing: strictly(&rows, |r| r.r_cols.clone(), false),
        ratios_increasing: strictly(&rows, |r| r.ratio_cols.clone(), true),
        m0_increasing: strictly(&rows, |r| vec![r.m0], true),
        distance_decreasing: strictly(&rows, |r| r.bubble_distance.clone(), false),
    };
    Ok(SweepDiagnostics { rows, trends })
}
