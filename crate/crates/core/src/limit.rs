//! Closed-form objects of the critical-exponent limit: the bubble
//! `U(r) = (N(N-2) / (N(N-2) + r^2))^{(N-2)/2}`, the potential
//! `V = p_S U^{p_S - 1}`, and the minimizer
//! `eta*(r) = r / (1 + r^2/(N(N-2)))^{N/2}` of the Hardy-weighted
//! Rayleigh quotient, whose value is `-(N-1)`.
//!
//! Derivatives are hand-derived and unit-tested against central
//! differences, so the residual checks are not polluted by numerical
//! differentiation error.

use crate::problem::{critical_exponent, sphere_area};
use crate::quad::radial_integral;
use serde::Serialize;

#[derive(Debug, Clone, Copy)]
pub struct LimitProfile {
    dim: u32,
    c: f64, // N(N-2)
}

impl LimitProfile {
    pub fn new(dim: u32) -> Self {
        assert!(dim >= 3);
        Self { dim, c: dim as f64 * (dim as f64 - 2.0) }
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn bubble(&self, r: f64) -> f64 {
        let nu = (self.dim as f64 - 2.0) / 2.0;
        (self.c / (self.c + r * r)).powf(nu)
    }

    pub fn bubble_deriv(&self, r: f64) -> f64 {
        let nu = (self.dim as f64 - 2.0) / 2.0;
        let w = self.c + r * r;
        -2.0 * nu * r * self.c.powf(nu) * w.powf(-nu - 1.0)
    }

    pub fn bubble_deriv2(&self, r: f64) -> f64 {
        let nu = (self.dim as f64 - 2.0) / 2.0;
        let w = self.c + r * r;
        self.c.powf(nu) * w.powf(-nu - 2.0) * (4.0 * nu * (nu + 1.0) * r * r - 2.0 * nu * w)
    }

    /// `V(r) = p_S U(r)^{p_S - 1} = p_S (c / (c + r^2))^2`.
    pub fn potential(&self, r: f64) -> f64 {
        let frac = self.c / (self.c + r * r);
        critical_exponent(self.dim) * frac * frac
    }

    pub fn eta(&self, r: f64) -> f64 {
        let nf = self.dim as f64;
        let w = self.c + r * r;
        r * self.c.powf(nf / 2.0) * w.powf(-nf / 2.0)
    }

    pub fn eta_deriv(&self, r: f64) -> f64 {
        let nf = self.dim as f64;
        let w = self.c + r * r;
        self.c.powf(nf / 2.0) * w.powf(-nf / 2.0 - 1.0) * (w - nf * r * r)
    }

    pub fn eta_deriv2(&self, r: f64) -> f64 {
        let nf = self.dim as f64;
        let w = self.c + r * r;
        self.c.powf(nf / 2.0) * r * w.powf(-nf / 2.0 - 2.0) * (nf * (nf + 2.0) * r * r - 3.0 * nf * w)
    }

    /// Maximizer and value of `r^2 V(r)`: the maximum `N(N+2)/4` is
    /// attained at `r^2 = N(N-2)`.
    pub fn weight_max(&self) -> (f64, f64) {
        let nf = self.dim as f64;
        (self.c.sqrt(), nf * (nf + 2.0) / 4.0)
    }
}

/// Log-spaced grid with `points` nodes covering `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    assert!(0.0 < lo && lo < hi);
    let ratio = (hi / lo).ln();
    (0..=points).map(|k| lo * (ratio * k as f64 / points as f64).exp()).collect()
}

/// Sup over the grid of `|U'' + (N-1)/r U' + U^{p_S}|`; an algebraic
/// identity, so anything above rounding noise indicates a bug.
pub fn bubble_residual(dim: u32, r_grid: &[f64]) -> f64 {
    let lp = LimitProfile::new(dim);
    let nf = dim as f64;
    let ps = critical_exponent(dim);
    r_grid
        .iter()
        .map(|&r| {
            (lp.bubble_deriv2(r) + (nf - 1.0) / r * lp.bubble_deriv(r) + lp.bubble(r).powf(ps))
                .abs()
        })
        .fold(0.0, f64::max)
}

/// Sup over the grid of the eigenrelation residual
/// `|eta'' + (N-1)/r eta' + V eta - (N-1) eta / r^2|`.
pub fn eta_star_residual(dim: u32, r_grid: &[f64]) -> f64 {
    let lp = LimitProfile::new(dim);
    let nf = dim as f64;
    r_grid
        .iter()
        .map(|&r| {
            (lp.eta_deriv2(r) + (nf - 1.0) / r * lp.eta_deriv(r) + lp.potential(r) * lp.eta(r)
                - (nf - 1.0) * lp.eta(r) / (r * r))
                .abs()
        })
        .fold(0.0, f64::max)
}

/// Hardy-weighted Rayleigh quotient
/// `(int |v'|^2 r^{N-1} - int V v^2 r^{N-1}) / int v^2 r^{N-3}`
/// over `(0, infinity)`, truncated to `[r_lo, r_hi]` with the tail
/// magnitude reported alongside.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RayleighValue {
    pub value: f64,
    pub quadrature_error: f64,
    pub denominator: f64,
}

pub fn rayleigh_quotient<F, G>(
    dim: u32,
    v: F,
    dv: G,
    r_lo: f64,
    r_hi: f64,
    tol: f64,
) -> RayleighValue
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let lp = LimitProfile::new(dim);
    let (grad, e1) = radial_integral(dim, &|r| dv(r) * dv(r), r_lo, r_hi, tol);
    let (pot, e2) = radial_integral(dim, &|r| lp.potential(r) * v(r) * v(r), r_lo, r_hi, tol);
    let (hardy, e3) = radial_integral(dim, &|r| (v(r) / r) * (v(r) / r), r_lo, r_hi, tol);
    RayleighValue {
        value: (grad - pot) / hardy,
        quadrature_error: (e1 + e2 + e3) / hardy,
        denominator: hardy,
    }
}

/// Rayleigh quotient of the minimizer itself, on a generous truncation.
pub fn rayleigh_of_eta(dim: u32, tol: f64) -> RayleighValue {
    let lp = LimitProfile::new(dim);
    rayleigh_quotient(dim, move |r| lp.eta(r), move |r| lp.eta_deriv(r), 0.0, 1e8, tol)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SobolevEnergy {
    pub gradient: f64,
    pub critical_mass: f64,
}

/// `int |grad U|^2 = int U^{2*}`, the common value being the energy
/// that each nodal region carries in the limit.
pub fn sobolev_energy(dim: u32) -> SobolevEnergy {
    let lp = LimitProfile::new(dim);
    let area = sphere_area(dim);
    let two_star = 2.0 * dim as f64 / (dim as f64 - 2.0);
    // tails decay like r^{-(N-1)} and r^{-(N+1)} after the measure, so
    // 1e10 truncation leaves far less than the quadrature tolerance
    let (grad, _) = radial_integral(dim, &|r| lp.bubble_deriv(r).powi(2), 0.0, 1e10, 1e-13);
    let (mass, _) = radial_integral(dim, &|r| lp.bubble(r).powf(two_star), 0.0, 1e10, 1e-13);
    SobolevEnergy { gradient: area * grad, critical_mass: area * mass }
}

/// Slack in the Hardy inequality for the radial function `v`:
/// `(2/(N-2)) || v' ||_{L^2} - || v/r ||_{L^2}`, nonnegative.
pub fn hardy_margin<F, G>(dim: u32, v: F, dv: G, r_lo: f64, r_hi: f64, tol: f64) -> f64
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let (grad, _) = radial_integral(dim, &|r| dv(r) * dv(r), r_lo, r_hi, tol);
    let (hardy, _) = radial_integral(dim, &|r| (v(r) / r) * (v(r) / r), r_lo, r_hi, tol);
    2.0 / (dim as f64 - 2.0) * grad.sqrt() - hardy.sqrt()
}

/// Near-extremal family for the Hardy inequality: in the log variable
/// `t = ln r`, `v_eps = e^{-(N-2)t/2 - eps |t|}`. Its margin tends to
/// zero as `eps` does, witnessing optimality of the constant.
pub fn hardy_extremal(dim: u32, eps: f64) -> (impl Fn(f64) -> f64, impl Fn(f64) -> f64) {
    let nu = (dim as f64 - 2.0) / 2.0;
    let v = move |r: f64| {
        let t = r.ln();
        (-nu * t - eps * t.abs()).exp()
    };
    let dv = move |r: f64| {
        let t = r.ln();
        let slope = -nu - eps * t.signum();
        slope * (-nu * t - eps * t.abs()).exp() / r
    };
    (v, dv)
}

/// Constants exported for reports.
#[derive(Debug, Clone, Serialize)]
pub struct LimitConstants {
    pub dim: u32,
    pub sobolev_energy: f64,
    pub weight_max_location: f64,
    pub weight_max_value: f64,
    pub limit_eigenvalue: f64,
}

pub fn constants(dim: u32) -> LimitConstants {
    let lp = LimitProfile::new(dim);
    let (loc, val) = lp.weight_max();
    LimitConstants {
        dim,
        sobolev_energy: sobolev_energy(dim).gradient,
        weight_max_location: loc,
        weight_max_value: val,
        limit_eigenvalue: -(dim as f64 - 1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_match_central_differences() {
        for dim in [3u32, 4, 5, 6] {
            let lp = LimitProfile::new(dim);
            for &r in &[0.1, 0.7, 2.0, 9.0] {
                let h = 1e-5;
                let du = (lp.bubble(r + h) - lp.bubble(r - h)) / (2.0 * h);
                let d2u = (lp.bubble(r + h) - 2.0 * lp.bubble(r) + lp.bubble(r - h)) / (h * h);
                assert!((du - lp.bubble_deriv(r)).abs() < 1e-8, "U' at N={dim} r={r}");
                assert!((d2u - lp.bubble_deriv2(r)).abs() < 1e-5, "U'' at N={dim} r={r}");
                let de = (lp.eta(r + h) - lp.eta(r - h)) / (2.0 * h);
                let d2e = (lp.eta(r + h) - 2.0 * lp.eta(r) + lp.eta(r - h)) / (h * h);
                assert!((de - lp.eta_deriv(r)).abs() < 1e-8, "eta' at N={dim} r={r}");
                assert!((d2e - lp.eta_deriv2(r)).abs() < 1e-5, "eta'' at N={dim} r={r}");
            }
        }
    }

    #[test]
    fn bubble_solves_critical_equation() {
        for dim in 3..=7 {
            let grid = log_grid(1e-3, 1e3, 600);
            assert!(bubble_residual(dim, &grid) < 1e-12, "N = {dim}");
        }
    }

    #[test]
    fn bubble_normalization_and_shape() {
        let lp = LimitProfile::new(3);
        assert_eq!(lp.bubble(0.0), 1.0);
        // N = 3: U = (3/(3+r^2))^{1/2}
        for &r in &[0.5, 1.0, 4.0] {
            assert!((lp.bubble(r) - (3.0 / (3.0 + r * r)).sqrt()).abs() < 1e-15);
        }
        assert!(lp.bubble(1.0) > lp.bubble(2.0));
        assert!((lp.potential(0.0) - 5.0).abs() < 1e-15); // V(0) = p_S
        // eta* vanishes at 0 and infinity, positive between
        assert_eq!(lp.eta(0.0), 0.0);
        assert!(lp.eta(1.0) > 0.0 && lp.eta(1e6) < 1e-10);
    }

    #[test]
    fn eta_star_is_exact_eigenfunction() {
        for dim in [3u32, 4] {
            let grid = log_grid(1e-3, 1e3, 600);
            assert!(eta_star_residual(dim, &grid) < 1e-10, "N = {dim}");
        }
    }

    #[test]
    fn eta_residual_scale_invariant() {
        // linearity: the residual of c * eta is c times the residual,
        // so the normalized check is scale independent
        let lp = LimitProfile::new(3);
        let grid = log_grid(1e-2, 1e2, 200);
        let res = |c: f64| {
            grid.iter()
                .map(|&r| {
                    (c * lp.eta_deriv2(r) + 2.0 / r * c * lp.eta_deriv(r)
                        + lp.potential(r) * c * lp.eta(r)
                        - 2.0 * c * lp.eta(r) / (r * r))
                        .abs()
                })
                .fold(0.0, f64::max)
        };
        assert!((res(5.0) - 5.0 * res(1.0)).abs() < 1e-12);
    }

    #[test]
    fn rayleigh_of_eta_is_minus_n_minus_one() {
        for dim in [3u32, 5] {
            let rq = rayleigh_of_eta(dim, 1e-10);
            assert!(
                (rq.value + (dim as f64 - 1.0)).abs() < 1e-6,
                "N = {dim}: {}",
                rq.value
            );
        }
    }

    #[test]
    fn bubble_rayleigh_lies_above_minimum() {
        let lp = LimitProfile::new(3);
        let rq = rayleigh_quotient(3, move |r| lp.bubble(r), move |r| lp.bubble_deriv(r), 0.0, 1e8, 1e-10);
        assert!(rq.value > -2.0);
    }

    #[test]
    fn sobolev_energy_identity() {
        let e3 = sobolev_energy(3);
        assert!((e3.gradient - e3.critical_mass).abs() / e3.gradient < 1e-8);
        let e4 = sobolev_energy(4);
        assert!((e4.gradient - e4.critical_mass).abs() / e4.gradient < 1e-8);
    }

    #[test]
    fn weight_max_is_at_root_c() {
        // numeric maximization of r^2 V against the analytic location
        let lp = LimitProfile::new(5);
        let (loc, val) = lp.weight_max();
        let mut best = (0.0, 0.0);
        for k in 0..20000 {
            let r = 1e-2 * 1.001_f64.powi(k);
            let w = r * r * lp.potential(r);
            if w > best.1 {
                best = (r, w);
            }
        }
        assert!((best.1 - val).abs() < 1e-6 * val);
        assert!((best.0 - loc).abs() < 1e-2 * loc);
    }

    #[test]
    fn rayleigh_minimality_over_test_basket() {
        // ten smooth rapidly decaying radial trial functions; none may
        // fall below the minimum -(N-1)
        let floor = -2.0 - 1e-6;
        for &a in &[0.05, 0.1, 0.2, 0.5, 1.0] {
            let v = move |r: f64| r * (-a * r * r).exp();
            let dv = move |r: f64| (1.0 - 2.0 * a * r * r) * (-a * r * r).exp();
            let rq = rayleigh_quotient(3, v, dv, 0.0, 60.0 / a.sqrt(), 1e-9);
            assert!(rq.value >= floor, "gaussian a={a}: {}", rq.value);
        }
        for &k in &[1.5, 2.0, 3.0, 4.0, 5.0] {
            let v = move |r: f64| r * (1.0 + r * r).powf(-k);
            let dv = move |r: f64| {
                (1.0 + (1.0 - 2.0 * k) * r * r) * (1.0 + r * r).powf(-k - 1.0)
            };
            let rq = rayleigh_quotient(3, v, dv, 0.0, 1e6, 1e-9);
            assert!(rq.value >= floor, "rational k={k}: {}", rq.value);
        }
    }

    #[test]
    fn hardy_margin_positive_and_extremal_family_closes_it() {
        let lp = LimitProfile::new(3);
        let m_eta = hardy_margin(3, |r| lp.eta(r), |r| lp.eta_deriv(r), 0.0, 1e8, 1e-10);
        assert!(m_eta > 0.0);
        let m_u = hardy_margin(3, |r| lp.bubble(r), |r| lp.bubble_deriv(r), 0.0, 1e8, 1e-10);
        assert!(m_u > 0.0);
        let mut prev = f64::MAX;
        for &eps in &[0.5, 0.25, 0.1] {
            let (v, dv) = hardy_extremal(3, eps);
            let span: f64 = 20.0 / eps;
            let m = hardy_margin(3, v, dv, (-span).exp(), span.exp(), 1e-10);
            assert!(m > 0.0 && m < prev, "eps = {eps}: margin {m}");
            prev = m;
        }
    }
}
