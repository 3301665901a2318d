//! Log-radius Liouville transform of the weighted radial eigenproblem.
//!
//! With `r = e^s` and `v(e^s) = e^{-(N-2)s/2} psi(s)`, the problem
//!
//! `r^2 ( -v'' - (N-1)/r v' - p |u(r)|^{p-1} v ) = beta v` on `(1/n, 1)`
//!
//! becomes the Dirichlet Schroedinger problem
//!
//! `-psi'' + q(s) psi = beta psi`,
//! `q(s) = ((N-2)/2)^2 - p e^{2s} |u(e^s)|^{p-1}`,
//!
//! on `s in (-ln n, 0)`. The singular Hardy weight is eliminated
//! exactly and the discretization is a plain symmetric tridiagonal
//! matrix.

use crate::radial::RadialProfile;
use crate::tridiag::SymTridiag;

/// Uniformly sampled Schroedinger form on `[-ln n, 0]`, Dirichlet ends.
#[derive(Debug, Clone)]
pub struct SchroedingerForm {
    dim: u32,
    s: Vec<f64>,
    q: Vec<f64>,
}

impl SchroedingerForm {
    /// Transform a radial solution restricted to the annulus `1/n < r < 1`.
    /// `grid_size` is the number of grid intervals (>= 64).
    pub fn from_profile(profile: &RadialProfile, n: f64, grid_size: usize) -> Self {
        assert!(n >= 2.0, "annulus parameter n must be >= 2");
        assert!(grid_size >= 64, "grid too coarse");
        assert!(profile.r_end() >= 1.0, "profile does not cover the annulus");
        let dim = profile.equation().dim();
        let p = profile.equation().exponent();
        let nf = dim as f64;
        let l = n.ln();
        let s: Vec<f64> =
            (0..=grid_size).map(|i| -l + l * i as f64 / grid_size as f64).collect();
        let base = ((nf - 2.0) / 2.0).powi(2);
        let q = s.iter().map(|&si| base - p * profile.weight_f(si.exp())).collect();
        Self { dim, s, q }
    }

    /// Build directly from a potential function (used by tests and the
    /// oscillation-count checks on exactly solvable wells).
    pub fn from_potential<F: Fn(f64) -> f64>(dim: u32, s_lo: f64, grid_size: usize, q: F) -> Self {
        assert!(s_lo < 0.0);
        let s: Vec<f64> =
            (0..=grid_size).map(|i| s_lo - s_lo * i as f64 / grid_size as f64).collect();
        let q = s.iter().map(|&si| q(si)).collect();
        Self { dim, s, q }
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn grid(&self) -> &[f64] {
        &self.s
    }

    pub fn potential(&self) -> &[f64] {
        &self.q
    }

    pub fn step(&self) -> f64 {
        self.s[1] - self.s[0]
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.s[0], *self.s.last().unwrap())
    }

    /// Central-difference matrix on the interior nodes.
    pub fn matrix(&self) -> SymTridiag {
        let h = self.step();
        let inv_h2 = 1.0 / (h * h);
        let n_int = self.s.len() - 2;
        let diag: Vec<f64> = (1..=n_int).map(|i| 2.0 * inv_h2 + self.q[i]).collect();
        let off = vec![-inv_h2; n_int - 1];
        SymTridiag::new(diag, off)
    }

    /// Interpolated potential inside the grid (cubic Lagrange on the
    /// four nearest nodes).
    fn q_at(&self, s: f64) -> f64 {
        let h = self.step();
        let g = self.s.len();
        let x = (s - self.s[0]) / h;
        let i = (x.floor() as usize).min(g - 2);
        let i0 = i.saturating_sub(1).min(g - 4);
        let t = x - i0 as f64;
        // Lagrange basis on offsets 0,1,2,3
        let (q0, q1, q2, q3) = (self.q[i0], self.q[i0 + 1], self.q[i0 + 2], self.q[i0 + 3]);
        let l0 = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
        let l1 = t * (t - 2.0) * (t - 3.0) / 2.0;
        let l2 = -t * (t - 1.0) * (t - 3.0) / 2.0;
        let l3 = t * (t - 1.0) * (t - 2.0) / 6.0;
        q0 * l0 + q1 * l1 + q2 * l2 + q3 * l3
    }
}

const OSC_SUBSTEPS: usize = 4;
const RENORM_AT: f64 = 1e120;

/// Number of negative Dirichlet eigenvalues of the form, by Sturm
/// oscillation: integrate the `beta = 0` solution with `psi = 0`,
/// `psi' = 1` at the left end and count its interior zeros.
///
/// Growth through classically forbidden regions is renormalized away;
/// if the direct integration still degenerates, a Pruefer phase
/// integration (which cannot overflow) is used instead.
pub fn negative_count_oscillation(form: &SchroedingerForm) -> usize {
    match oscillation_direct(form) {
        Some(count) => count,
        None => oscillation_pruefer(form),
    }
}

fn oscillation_direct(form: &SchroedingerForm) -> Option<usize> {
    let h = form.step() / OSC_SUBSTEPS as f64;
    let cells = form.s.len() - 1;
    let (mut psi, mut dpsi) = (0.0_f64, 1.0_f64);
    let mut count = 0usize;
    let mut s = form.s[0];
    for _ in 0..cells * OSC_SUBSTEPS {
        let prev = psi;
        // RK4 on psi'' = q psi
        let f = |s: f64, y: (f64, f64)| (y.1, form.q_at(s) * y.0);
        let y = (psi, dpsi);
        let k1 = f(s, y);
        let k2 = f(s + 0.5 * h, (y.0 + 0.5 * h * k1.0, y.1 + 0.5 * h * k1.1));
        let k3 = f(s + 0.5 * h, (y.0 + 0.5 * h * k2.0, y.1 + 0.5 * h * k2.1));
        let k4 = f(s + h, (y.0 + h * k3.0, y.1 + h * k3.1));
        psi += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        dpsi += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        s += h;
        if !psi.is_finite() || !dpsi.is_finite() {
            return None;
        }
        if prev != 0.0 && prev.signum() != psi.signum() && psi != 0.0 {
            count += 1;
        }
        if psi.abs() > RENORM_AT || dpsi.abs() > RENORM_AT {
            psi /= RENORM_AT;
            dpsi /= RENORM_AT;
        }
    }
    // a crossing in the final subinterval belongs to the boundary zero,
    // not the interior, when psi(0) = 0 to rounding; the Dirichlet
    // endpoint itself never counts
    Some(count)
}

fn oscillation_pruefer(form: &SchroedingerForm) -> usize {
    let h = form.step() / OSC_SUBSTEPS as f64;
    let cells = form.s.len() - 1;
    let mut theta = 0.0_f64;
    let mut s = form.s[0];
    for _ in 0..cells * OSC_SUBSTEPS {
        let f = |s: f64, th: f64| {
            let c = th.cos();
            let si = th.sin();
            c * c - form.q_at(s) * si * si
        };
        let k1 = f(s, theta);
        let k2 = f(s + 0.5 * h, theta + 0.5 * h * k1);
        let k3 = f(s + 0.5 * h, theta + 0.5 * h * k2);
        let k4 = f(s + h, theta + h * k3);
        theta += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        s += h;
    }
    (theta / std::f64::consts::PI - 1e-9).floor().max(0.0) as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::LaneEmden;
    use crate::radial::integrate_ivp;

    /// Exactly solvable constant well: eigenvalues `q0 + (j pi / L)^2`.
    fn constant_well(dim: u32, q0: f64, l: f64, grid: usize) -> SchroedingerForm {
        SchroedingerForm::from_potential(dim, -l, grid, |_| q0)
    }

    #[test]
    fn constant_well_eigenvalues_second_order() {
        let l = 4.0_f64.ln();
        let base = 0.25; // ((N-2)/2)^2 for N = 3
        let errors: Vec<Vec<f64>> = [128usize, 256]
            .iter()
            .map(|&grid| {
                let form = constant_well(3, base, l, grid);
                form.matrix()
                    .lowest_eigenvalues(4)
                    .iter()
                    .enumerate()
                    .map(|(j, ev)| {
                        let exact = base + ((j as f64 + 1.0) * std::f64::consts::PI / l).powi(2);
                        (ev - exact).abs() / exact
                    })
                    .collect()
            })
            .collect();
        let h = l / 128.0;
        for j in 0..4 {
            // leading error k^4 h^2 / (12 lambda); allow 2x headroom
            let k = (j as f64 + 1.0) * std::f64::consts::PI / l;
            let exact = base + k * k;
            let bound = 2.0 * k.powi(4) * h * h / (12.0 * exact);
            assert!(errors[0][j] < bound, "j {j}: rel {:.2e} vs {bound:.2e}", errors[0][j]);
            // halving h quarters the error
            let ratio = errors[0][j] / errors[1][j];
            assert!((2.5..6.0).contains(&ratio), "j {j}: ratio {ratio:.2}");
        }
    }

    #[test]
    fn shifted_well_negative_count_closed_form() {
        let l = 10.0_f64;
        let v0 = 5.0;
        // eigenvalues 0.25 - v0 + (j pi / l)^2 < 0  <=>  j < l sqrt(v0 - 0.25) / pi
        let expected = (l * (v0 - 0.25_f64).sqrt() / std::f64::consts::PI).floor() as usize;
        let form = constant_well(3, 0.25 - v0, l, 2048);
        assert_eq!(form.matrix().count_below(0.0), expected);
        assert_eq!(negative_count_oscillation(&form), expected);
        assert_eq!(oscillation_pruefer(&form), expected);
    }

    #[test]
    fn potential_matches_weight_from_solver() {
        let eq = LaneEmden::new(3, 4.8).unwrap();
        let profile = integrate_ivp(&eq, 2.0, 1e-10).unwrap();
        let form = SchroedingerForm::from_profile(&profile, 100.0, 256);
        let p = eq.exponent();
        for (i, &s) in form.grid().iter().enumerate() {
            let expect = 0.25 - p * profile.weight_f(s.exp());
            assert_eq!(form.potential()[i], expect);
        }
        // u(1) is generally nonzero for a raw integration, but the
        // boundary identity q(0) = 1/4 - p |u(1)|^{p-1} holds exactly
        let u1 = profile.value(1.0);
        let q_end = form.potential().last().unwrap();
        assert!((q_end - (0.25 - p * u1.abs().powf(p - 1.0))).abs() < 1e-15);
    }

    #[test]
    fn pruefer_agrees_with_direct_on_rough_well() {
        let form = SchroedingerForm::from_potential(3, -6.0, 512, |s: f64| {
            0.25 - 12.0 * (-(s + 3.0).powi(2)).exp()
        });
        let direct = oscillation_direct(&form).unwrap();
        assert_eq!(direct, oscillation_pruefer(&form));
        assert_eq!(direct, form.matrix().count_below(0.0));
    }
}
