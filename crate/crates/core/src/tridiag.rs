//! Symmetric tridiagonal eigenvalue machinery: Sturm-sequence bisection
//! for selected eigenvalues, inverse iteration for eigenvectors, and an
//! independent QL reference solver used as a cross-check.

/// Symmetric tridiagonal matrix: `diag` of length n, `off` of length n-1.
#[derive(Debug, Clone)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

const PIVOT_GUARD: f64 = 1e-300;

impl SymTridiag {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len());
        Self { diag, off }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Number of eigenvalues strictly below `lambda` (Sturm sequence via
    /// the LDL^T pivots).
    pub fn count_below(&self, lambda: f64) -> usize {
        let n = self.len();
        let mut count = 0;
        let mut q = self.diag[0] - lambda;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..n {
            let q_safe = if q.abs() < PIVOT_GUARD { PIVOT_GUARD.copysign(q + 0.0) } else { q };
            q = (self.diag[i] - lambda) - self.off[i - 1] * self.off[i - 1] / q_safe;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Gershgorin interval containing the whole spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let (mut lo, mut hi) = (f64::MAX, f64::MIN);
        for i in 0..n {
            let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
            let right = if i < n - 1 { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        (lo - 1.0, hi + 1.0)
    }

    /// The `count` smallest eigenvalues in ascending order, each found by
    /// bisection on the Sturm count.
    pub fn lowest_eigenvalues(&self, count: usize) -> Vec<f64> {
        let n = self.len();
        let count = count.min(n);
        let (lo, hi) = self.gershgorin();
        let mut out = Vec::with_capacity(count);
        for k in 0..count {
            let mut a = if k == 0 { lo } else { out[k - 1] };
            let mut b = hi;
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if (b - a) <= 4.0 * f64::EPSILON * mid.abs().max(1.0) {
                    break;
                }
                if self.count_below(mid) <= k {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            out.push(0.5 * (a + b));
        }
        out
    }

    /// Eigenvector for an eigenvalue estimate, by shifted inverse
    /// iteration. Returns a unit vector with a deterministic sign.
    pub fn eigenvector(&self, lambda: f64) -> Vec<f64> {
        let n = self.len();
        let scale = self.gershgorin().1.abs().max(self.gershgorin().0.abs()).max(1.0);
        let shift = lambda + 1e-13 * scale;
        // deterministic pseudo-random start avoids accidental orthogonality
        let mut x: Vec<f64> = (0..n)
            .map(|i| {
                let v = ((i as u64).wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407) >> 33) as f64;
                v / (1u64 << 31) as f64 - 1.0
            })
            .collect();
        normalize(&mut x);
        for _ in 0..4 {
            x = solve_shifted(&self.diag, &self.off, shift, &x);
            normalize(&mut x);
        }
        // orient: largest-magnitude component positive
        let imax = (0..n).max_by(|&i, &j| x[i].abs().total_cmp(&x[j].abs())).unwrap();
        if x[imax] < 0.0 {
            for v in &mut x {
                *v = -*v;
            }
        }
        x
    }
}

fn normalize(x: &mut [f64]) {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in x.iter_mut() {
            *v /= norm;
        }
    }
}

/// Solve `(T - shift I) x = b` by Gaussian elimination with partial
/// pivoting; the fill-in of a tridiagonal system is one extra
/// superdiagonal.
fn solve_shifted(diag: &[f64], off: &[f64], shift: f64, b: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut a = vec![0.0; n]; // subdiag of working row (consumed)
    let mut d = vec![0.0; n];
    let mut c1 = vec![0.0; n];
    let mut c2 = vec![0.0; n];
    let mut rhs = b.to_vec();
    for i in 0..n {
        d[i] = diag[i] - shift;
        c1[i] = if i < n - 1 { off[i] } else { 0.0 };
    }
    for i in 0..n - 1 {
        a[i + 1] = off[i];
        // pivot between row i and i+1
        if a[i + 1].abs() > d[i].abs() {
            std::mem::swap(&mut d[i], &mut a[i + 1]);
            let (head, tail) = c1.split_at_mut(i + 1);
            std::mem::swap(&mut head[i], &mut d[i + 1]);
            std::mem::swap(&mut c2[i], &mut tail[0]);
            rhs.swap(i, i + 1);
        }
        let piv = if d[i].abs() < PIVOT_GUARD { PIVOT_GUARD.copysign(d[i]) } else { d[i] };
        let m = a[i + 1] / piv;
        d[i + 1] -= m * c1[i];
        c1[i + 1] -= m * c2[i];
        rhs[i + 1] -= m * rhs[i];
    }
    // back substitution
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut v = rhs[i];
        if i + 1 < n {
            v -= c1[i] * x[i + 1];
        }
        if i + 2 < n {
            v -= c2[i] * x[i + 2];
        }
        let piv = if d[i].abs() < PIVOT_GUARD { PIVOT_GUARD.copysign(d[i]) } else { d[i] };
        x[i] = v / piv;
    }
    x
}

/// Reference full-spectrum solver, independent of the bisection path.
pub mod reference {
    /// All eigenvalues by the implicit-shift QL algorithm, ascending.
    pub fn eigenvalues_ql(diag: &[f64], off: &[f64]) -> Vec<f64> {
        let n = diag.len();
        let mut d = diag.to_vec();
        let mut e = vec![0.0; n];
        e[..n - 1].copy_from_slice(off);
        for l in 0..n {
            let mut iter = 0;
            loop {
                let mut m = l;
                while m + 1 < n {
                    let dd = d[m].abs() + d[m + 1].abs();
                    if e[m].abs() <= f64::EPSILON * dd {
                        break;
                    }
                    m += 1;
                }
                if m == l {
                    break;
                }
                iter += 1;
                assert!(iter <= 60, "QL failed to converge");
                let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                let mut r = g.hypot(1.0);
                g = d[m] - d[l] + e[l] / (g + r.copysign(g));
                let (mut s, mut c) = (1.0, 1.0);
                let mut p = 0.0;
                let mut underflow = false;
                for i in (l..m).rev() {
                    let mut f = s * e[i];
                    let b = c * e[i];
                    r = f.hypot(g);
                    e[i + 1] = r;
                    if r == 0.0 {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        underflow = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    f = (d[i] - g) * s + 2.0 * c * b;
                    p = s * f;
                    d[i + 1] = g + p;
                    g = c * f - b;
                }
                if underflow {
                    continue;
                }
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        }
        d.sort_by(f64::total_cmp);
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn count_below_2x2() {
        // [[1,-1],[-1,3]] has eigenvalues 2 -+ sqrt(2)
        let t = SymTridiag::new(vec![1.0, 3.0], vec![-1.0]);
        assert_eq!(t.count_below(0.0), 0);
        assert_eq!(t.count_below(1.0), 1);
        assert_eq!(t.count_below(4.0), 2);
    }

    #[test]
    fn clean_chain_eigenvalues() {
        // d = 0, e = -1: eigenvalues 2 cos(k pi / (n+1))
        let n = 64;
        let t = SymTridiag::new(vec![0.0; n], vec![-1.0; n - 1]);
        let evs = t.lowest_eigenvalues(n);
        for k in 1..=n {
            let exact = 2.0 * ((n + 1 - k) as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos();
            assert!((evs[k - 1] - exact).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn bisection_matches_ql_on_random_matrices() {
        let mut rng = StdRng::seed_from_u64(0x1ead5eed);
        for trial in 0..20 {
            let n = rng.gen_range(5..120);
            let diag: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let off: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let t = SymTridiag::new(diag.clone(), off.clone());
            let bis = t.lowest_eigenvalues(n);
            let ql = reference::eigenvalues_ql(&diag, &off);
            for (a, b) in bis.iter().zip(&ql) {
                assert!((a - b).abs() < 1e-10, "trial {trial}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn inverse_iteration_residual() {
        let mut rng = StdRng::seed_from_u64(7);
        let n = 80;
        let diag: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..4.0)).collect();
        let off: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let t = SymTridiag::new(diag, off);
        for (k, &ev) in t.lowest_eigenvalues(4).iter().enumerate() {
            let v = t.eigenvector(ev);
            // || T v - ev v ||
            let mut res = 0.0f64;
            for i in 0..n {
                let mut tv = t.diag[i] * v[i];
                if i > 0 {
                    tv += t.off[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    tv += t.off[i] * v[i + 1];
                }
                res = res.max((tv - ev * v[i]).abs());
            }
            assert!(res < 1e-8, "eigenpair {k}: residual {res:.2e}");
        }
    }
}
