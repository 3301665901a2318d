//! Exact spectrum of the Laplace-Beltrami operator on `S^{N-1}`:
//! eigenvalues `lambda_k = k(k + N - 2)` with multiplicity
//! `N_k - N_{k-2}`, where `N_h = C(N-1+h, N-1)`.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AngularLevel {
    pub k: u32,
    pub lambda: u64,
    pub multiplicity: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AngularSpectrum {
    pub dim: u32,
    pub levels: Vec<AngularLevel>,
}

/// `C(n, k)` with exact wide accumulation.
fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

fn harmonic_dim(dim: u32, h: i64) -> u128 {
    if h < 0 {
        0
    } else {
        binomial(dim as u64 - 1 + h as u64, dim as u64 - 1)
    }
}

/// Levels `k = 0..=k_max`.
pub fn angular_eigenvalues(dim: u32, k_max: u32) -> AngularSpectrum {
    assert!(dim >= 3 && k_max >= 1);
    let levels = (0..=k_max)
        .map(|k| {
            let lambda = k as u64 * (k as u64 + dim as u64 - 2);
            let mult = harmonic_dim(dim, k as i64) - harmonic_dim(dim, k as i64 - 2);
            let multiplicity = u64::try_from(mult).expect("multiplicity exceeds u64");
            AngularLevel { k, lambda, multiplicity }
        })
        .collect();
    AngularSpectrum { dim, levels }
}

impl AngularSpectrum {
    /// Smallest spectrum guaranteed to cover every sum `beta + lambda_k < 0`
    /// for `beta >= beta_floor`: extends until `lambda_k > -beta_floor`.
    pub fn covering(dim: u32, beta_floor: f64) -> Self {
        let mut k_max = 1;
        while ((k_max as u64) * (k_max as u64 + dim as u64 - 2)) as f64 <= -beta_floor.min(0.0) {
            k_max += 1;
        }
        angular_eigenvalues(dim, k_max)
    }

    pub fn max_lambda(&self) -> u64 {
        self.levels.last().unwrap().lambda
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_three_levels() {
        let sp = angular_eigenvalues(3, 4);
        let got: Vec<(u64, u64)> = sp.levels.iter().map(|l| (l.lambda, l.multiplicity)).collect();
        // lambda_k = k(k+1), multiplicity 2k+1
        assert_eq!(got, vec![(0, 1), (2, 3), (6, 5), (12, 7), (20, 9)]);
    }

    #[test]
    fn dimension_four_first_level() {
        let sp = angular_eigenvalues(4, 2);
        assert_eq!(sp.levels[0], AngularLevel { k: 0, lambda: 0, multiplicity: 1 });
        assert_eq!(sp.levels[1], AngularLevel { k: 1, lambda: 3, multiplicity: 4 });
        assert_eq!(sp.levels[2], AngularLevel { k: 2, lambda: 8, multiplicity: 9 });
    }

    #[test]
    fn constant_harmonic_for_every_dimension() {
        for dim in 3..12 {
            let sp = angular_eigenvalues(dim, 1);
            assert_eq!((sp.levels[0].lambda, sp.levels[0].multiplicity), (0, 1));
            assert_eq!(sp.levels[1].lambda, (dim as u64 - 1));
            assert_eq!(sp.levels[1].multiplicity, dim as u64);
        }
    }

    #[test]
    fn covering_reaches_past_floor() {
        let sp = AngularSpectrum::covering(3, -11.0);
        assert!(sp.max_lambda() as f64 > 11.0);
        let sp0 = AngularSpectrum::covering(3, 1.0);
        assert_eq!(sp0.levels.len(), 2); // k = 0, 1 at minimum
    }
}
