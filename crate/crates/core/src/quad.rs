//! Adaptive Gauss-Legendre panel quadrature, with a log-variable wrapper
//! for radial integrals whose integrands span many decades.

use std::cell::RefCell;

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1],
/// computed by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // Tricomi-type initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // P_n(x) and P_n'(x) by the three-term recurrence
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

const PANEL_ORDER: usize = 16;

thread_local! {
    static PANEL_RULE: RefCell<Option<(Vec<f64>, Vec<f64>)>> = const { RefCell::new(None) };
}

fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    PANEL_RULE.with(|cell| {
        let mut cell = cell.borrow_mut();
        let (x, w) = cell.get_or_insert_with(|| gauss_legendre(PANEL_ORDER));
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut sum = 0.0;
        for i in 0..PANEL_ORDER {
            sum += w[i] * f(c + h * x[i]);
        }
        sum * h
    })
}

/// Adaptive bisection: a panel is accepted when splitting it changes the
/// value by less than its share of the tolerance. Returns the integral
/// and an error estimate.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> (f64, f64) {
        let mid = 0.5 * (a + b);
        let left = panel(f, a, mid);
        let right = panel(f, mid, b);
        let diff = (left + right - whole).abs();
        if diff <= tol || depth >= 48 {
            return (left + right, diff);
        }
        let (vl, el) = recurse(f, a, mid, left, 0.5 * tol, depth + 1);
        let (vr, er) = recurse(f, mid, b, right, 0.5 * tol, depth + 1);
        (vl + vr, el + er)
    }
    let whole = panel(f, a, b);
    recurse(f, a, b, whole, tol, 0)
}

/// `int_{r_lo}^{r_hi} g(r) r^{N-1} dr` evaluated in the variable
/// `s = ln r` (plus a direct panel on `[0, r_lo]` when the lower limit
/// is zero). Does not include the sphere-area factor.
pub fn radial_integral<F: Fn(f64) -> f64>(
    dim: u32,
    g: &F,
    r_lo: f64,
    r_hi: f64,
    tol: f64,
) -> (f64, f64) {
    let n = dim as f64;
    assert!(r_hi > r_lo && r_lo >= 0.0);
    let inner_cut = (r_hi * 1e-4).min(1e-3);
    let (mut total, mut err) = (0.0, 0.0);
    let mut lo = r_lo;
    if lo == 0.0 {
        // the r^{N-1} measure kills the endpoint; a direct panel is
        // accurate for integrands bounded near the origin
        let (v, e) = integrate(&|r: f64| g(r) * r.powf(n - 1.0), lo, inner_cut, tol * 0.5);
        total += v;
        err += e;
        lo = inner_cut;
    }
    let (v, e) = integrate(
        &|s: f64| {
            let r = s.exp();
            g(r) * (n * s).exp()
        },
        lo.ln(),
        r_hi.ln(),
        tol * 0.5,
    );
    (total + v, err + e)
}
