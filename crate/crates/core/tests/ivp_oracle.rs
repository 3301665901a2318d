//! Independent oracle for the radial integrator: a fixed fourth-order
//! RK4 march with a graded step, at an effective resolution far finer
//! than the adaptive tolerance under test. The oracle shares no code
//! with the production integrator.

use lane_morse::problem::LaneEmden;
use lane_morse::{integrate_ivp, locate_nodes, solve_m_nodal, ProblemSpec};

struct OracleEvents {
    zeros: Vec<f64>,
    criticals: Vec<f64>,
    extrema: Vec<f64>,
}

/// RK4 march for `u'' + (N-1)/r u' + |u|^{p-1} u = 0` from the series
/// start. The step is `h0 max(1, r/4)`, which tracks the stretching of
/// the oscillation wavelength at large radii. Zeros and critical radii
/// are refined by bisection on auxiliary fine sub-steps.
fn rk4_events(dim: u32, p: f64, h0: f64, r_max: f64, count: usize) -> OracleEvents {
    let n = dim as f64;
    let f = |r: f64, y: [f64; 2]| -> [f64; 2] {
        [y[1], -(n - 1.0) / r * y[1] - y[0].abs().powf(p - 1.0) * y[0]]
    };
    let step = |r: f64, y: [f64; 2], h: f64| -> [f64; 2] {
        let k1 = f(r, y);
        let k2 = f(r + h / 2.0, [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]]);
        let k3 = f(r + h / 2.0, [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]]);
        let k4 = f(r + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        [
            y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ]
    };
    let refine = |mut r: f64, mut y: [f64; 2], mut h: f64, comp: usize| -> f64 {
        // bisection on the step: halve and re-march inside the bracket
        for _ in 0..64 {
            let mid = step(r, y, h / 2.0);
            if y[comp] * mid[comp] <= 0.0 {
                h /= 2.0;
            } else {
                r += h / 2.0;
                y = mid;
                h /= 2.0;
            }
            if h < 1e-13 * r.abs().max(1.0) {
                break;
            }
        }
        r + h / 2.0
    };

    let r0 = 1e-6;
    let a = -1.0 / (2.0 * n);
    let b = p / (8.0 * n * (n + 2.0));
    let mut r = r0;
    let mut y = [1.0 + a * r0 * r0 + b * r0.powi(4), 2.0 * a * r0 + 4.0 * b * r0.powi(3)];
    let mut ev = OracleEvents { zeros: Vec::new(), criticals: Vec::new(), extrema: Vec::new() };
    while r < r_max && ev.zeros.len() < count {
        let h = h0 * (r / 4.0).max(1.0);
        let y_next = step(r, y, h);
        if y[0] * y_next[0] < 0.0 {
            ev.zeros.push(refine(r, y, h, 0));
        }
        if y[1] * y_next[1] < 0.0 {
            let s = refine(r, y, h, 1);
            ev.criticals.push(s);
            // value at the critical radius by marching the remainder
            let at = step(r, y, s - r);
            ev.extrema.push(at[0].abs());
        }
        y = y_next;
        r += h;
    }
    ev
}

#[test]
fn adaptive_first_zero_matches_rk4_oracle() {
    let oracle = rk4_events(3, 3.0, 2e-6, 8.0, 1).zeros[0];
    let eq = LaneEmden::new(3, 3.0).unwrap();
    let profile = integrate_ivp(&eq, 8.0, 1e-12).unwrap();
    let nodes = locate_nodes(&profile, 1).unwrap();
    println!("oracle xi_1 = {oracle:.12}, adaptive xi_1 = {:.12}", nodes.nodal_radii[0]);
    assert!(
        (nodes.nodal_radii[0] - oracle).abs() < 1e-8,
        "oracle {oracle:.12} vs adaptive {:.12}",
        nodes.nodal_radii[0]
    );
}

#[test]
fn adaptive_three_node_radii_match_oracle() {
    // all six radii for m = 3 at N = 3, p = 4.5; the third zero sits
    // near 6.8e4, far outside a constant-step oracle's reach
    let p = 4.5;
    let spec = ProblemSpec::new(3, p, 3).unwrap();
    let (_, nodes) = solve_m_nodal(&spec, 1e-11).unwrap();
    let oracle = rk4_events(3, p, 4e-6, 1e5, 3);
    assert_eq!(oracle.zeros.len(), 3);
    let scale = oracle.zeros[2];
    for (a, b) in nodes.nodal_radii.iter().zip(&oracle.zeros) {
        let b = b / scale;
        assert!((a - b).abs() < 2e-9 + 2e-9 * b, "{a:.10e} vs oracle {b:.10e}");
    }
    for (a, b) in nodes.critical_radii[1..].iter().zip(&oracle.criticals) {
        let b = b / scale;
        assert!((a - b).abs() < 1e-7 * b.max(1e-3), "critical {a:.8e} vs oracle {b:.8e}");
    }
}

#[test]
fn two_node_regression_values_frozen_from_oracle() {
    // N = 3, p = 4.9, m = 2 on the unit ball; frozen during development
    // from this oracle and locked as regression values
    let spec = ProblemSpec::new(3, 4.9, 2).unwrap();
    let (_, nodal) = solve_m_nodal(&spec, 1e-11).unwrap();
    let oracle = rk4_events(3, 4.9, 4e-6, 1e6, 2);
    assert_eq!(oracle.zeros.len(), 2);
    let scale = oracle.zeros[1];
    let amp = scale.powf(2.0 / 3.9);
    println!(
        "m=2 p=4.9: r_1 = {:.12e}  s_1 = {:.12e}  M_0 = {:.12e}  M_1 = {:.12e}",
        nodal.nodal_radii[0], nodal.critical_radii[1], nodal.extrema[0], nodal.extrema[1]
    );
    assert!((nodal.nodal_radii[0] - oracle.zeros[0] / scale).abs() < 1e-9);
    // the only interior critical radius for two nodal regions
    assert_eq!(oracle.criticals.len(), 1);
    assert!((nodal.critical_radii[1] - oracle.criticals[0] / scale).abs() < 1e-7);
    assert!((nodal.extrema[0] - amp).abs() / amp < 1e-8);
    assert!((nodal.extrema[1] - amp * oracle.extrema[0]).abs() / nodal.extrema[1] < 1e-6);
    // regression lock
    assert!((nodal.nodal_radii[0] - 2.822802689e-4).abs() < 1e-10);
    assert!((nodal.critical_radii[1] - 5.963346217e-3).abs() < 1e-9);
    assert!((nodal.extrema[0] - 9.243870828e2).abs() < 1e-5);
    assert!((nodal.extrema[1] - 8.681385801e0).abs() < 1e-6);
}
