//! Principal eigenpair of the shifted dispersal operator `𝒦_c` and its
//! dispersal-success approximations.

use crate::error::{ModelError, Result};
use crate::habitat::Interval;
use crate::kernels::DispersalKernel;
use crate::operator::{IdeOperator, ShiftedKernelMatrix};

/// Midpoint nodes used to integrate the dispersal success over `Ω₀`.
pub const SUCCESS_QUADRATURE_POINTS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PowerOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100_000,
        }
    }
}

/// Principal eigenpair; `eigenfunction` has unit mass `Σ w_i φ_i = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub eigenvalue: f64,
    pub eigenfunction: Vec<f64>,
    pub iterations: usize,
    /// `‖𝒦φ − λφ‖∞ / (λ ‖φ‖∞)` at the last iterate.
    pub residual: f64,
}

/// Power iteration for the principal eigenpair of `u ↦ A (g ∘ u)`, where
/// `weight` is the quadrature weight `h` of the uniform grid.
///
/// Starts from the uniform density. The eigenvalue estimate is the mass ratio
/// of consecutive iterates; iteration stops when it stagnates to `tol`
/// (relative) and the relative residual is below `tol`.
pub fn principal_eigen(
    matrix: &ShiftedKernelMatrix,
    suitability: &[f64],
    weight: f64,
    opts: PowerOptions,
) -> Result<EigenResult> {
    let n = matrix.len();
    if suitability.len() != n {
        return Err(ModelError::DimensionMismatch {
            expected: n,
            found: suitability.len(),
        });
    }
    let first = suitability.iter().position(|&g| g > 0.0);
    let last = suitability.iter().rposition(|&g| g > 0.0);
    let (Some(first), Some(last)) = (first, last) else {
        return Err(ModelError::invalid(
            "suitability",
            "column is identically zero on the grid",
        ));
    };
    let range = (first, last + 1);

    let mass = |v: &[f64]| weight * v.iter().sum::<f64>();
    let mut phi = vec![1.0 / (weight * n as f64); n];
    let mut y = vec![0.0; n];
    let mut psi = vec![0.0; n];
    let mut previous = f64::NAN;
    let mut residual = f64::INFINITY;

    for iteration in 1..=opts.max_iter {
        for j in first..=last {
            y[j] = suitability[j] * phi[j];
        }
        matrix.mul_vec_range(&y, range, &mut psi);
        let lambda = mass(&psi);
        if lambda == 0.0 {
            // Some power of the nonnegative operator annihilates a positive
            // vector, so the operator is nilpotent; the current iterate is
            // in its kernel.
            return Ok(EigenResult {
                eigenvalue: 0.0,
                eigenfunction: phi,
                iterations: iteration,
                residual: 0.0,
            });
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(ModelError::NoConvergence {
                iterations: iteration,
                residual,
            });
        }

        let phi_max = phi.iter().fold(0.0f64, |m, &v| m.max(v));
        residual = psi
            .iter()
            .zip(&phi)
            .map(|(p, f)| (p - lambda * f).abs())
            .fold(0.0, f64::max)
            / (lambda * phi_max);
        for (f, p) in phi.iter_mut().zip(&psi) {
            *f = p / lambda;
        }

        if (lambda - previous).abs() < opts.tol * lambda && residual <= opts.tol {
            return Ok(EigenResult {
                eigenvalue: lambda,
                eigenfunction: phi,
                iterations: iteration,
                residual,
            });
        }
        previous = lambda;
    }
    Err(ModelError::NoConvergence {
        iterations: opts.max_iter,
        residual,
    })
}

impl IdeOperator {
    /// Principal eigenpair of `u ↦ A (g₀(· − σ) u)` on this operator's grid.
    pub fn principal_eigen(&self, sigma: f64, opts: PowerOptions) -> Result<EigenResult> {
        let column = self.habitat().column(sigma)?;
        principal_eigen(self.matrix(), column, self.habitat().step(), opts)
    }
}

/// Dispersal success `s⁰` sampled at the midpoint nodes of `patch`.
fn success_profile(kernel: &DispersalKernel, patch: Interval) -> (f64, Vec<f64>) {
    let h = patch.length() / SUCCESS_QUADRATURE_POINTS as f64;
    let values = (0..SUCCESS_QUADRATURE_POINTS)
        .map(|i| kernel.dispersal_success(patch, patch.start + (i as f64 + 0.5) * h))
        .collect();
    (h, values)
}

/// `λ̄₀ = (1/|Ω₀|) ∫_{Ω₀} s⁰(y) dy` for the indicator of `patch`.
pub fn dispersal_success_approx(kernel: &DispersalKernel, patch: Interval) -> f64 {
    let (h, s) = success_profile(kernel, patch);
    h * s.iter().sum::<f64>() / patch.length()
}

/// `λ̂₀ = (1/|Ω₀|) ∫_{Ω₀} (s⁰(y) / λ̄₀) s⁰(y) dy` for the indicator of `patch`.
pub fn modified_dispersal_success_approx(kernel: &DispersalKernel, patch: Interval) -> f64 {
    let (h, s) = success_profile(kernel, patch);
    let bar = h * s.iter().sum::<f64>() / patch.length();
    h * s.iter().map(|v| v * v).sum::<f64>() / (patch.length() * bar)
}

/// `λ_c = e^{−c²/(2 v)} λ₀`, exact for Gaussian kernels of variance `v`.
pub fn gaussian_shifted_eigenvalue(lambda0: f64, c: f64, variance: f64) -> f64 {
    (-c * c / (2.0 * variance)).exp() * lambda0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::habitat::{DiscretizedHabitat, Suitability};
    use crate::kernels::KernelFamily;
    use nalgebra::{DMatrix, SymmetricEigen};

    fn patch() -> Interval {
        Interval::new(-5.0, 5.0).unwrap()
    }

    fn unshifted_operator(kernel: DispersalKernel, n: usize, c: f64) -> IdeOperator {
        let hab = DiscretizedHabitat::unshifted(&Suitability::indicator(patch()), n).unwrap();
        IdeOperator::new(kernel, hab, c)
    }

    /// Largest eigenvalue of the symmetrized `G^{1/2} A G^{1/2}` (c = 0 only).
    fn dense_eigenvalue(op: &IdeOperator) -> f64 {
        let n = op.len();
        let g = op.habitat().column(0.0).unwrap();
        let m = DMatrix::from_fn(n, n, |i, j| {
            g[i].sqrt() * op.matrix().get(i, j) * g[j].sqrt()
        });
        SymmetricEigen::new(m).eigenvalues.max()
    }

    #[test]
    fn fully_shifted_away_kernel_has_zero_spectrum() {
        let op = unshifted_operator(DispersalKernel::gaussian(0.1).unwrap(), 64, 50.0);
        let r = op.principal_eigen(0.0, PowerOptions::default()).unwrap();
        assert_eq!(r.eigenvalue, 0.0);
    }

    #[test]
    fn rank_one_surrogate() {
        // K ≈ k0 over the patch: λ₀ = k0 |Ω₀| with uniform eigenfunction.
        let kernel = DispersalKernel::gaussian(1e10).unwrap();
        let op = unshifted_operator(kernel, 64, 0.0);
        let eig = op.principal_eigen(0.0, PowerOptions::default()).unwrap();
        let expected = kernel.peak_density() * 10.0;
        assert!(((eig.eigenvalue - expected) / expected).abs() < 1e-8);
        for v in &eig.eigenfunction {
            assert!((v - 0.1).abs() < 1e-8);
        }
        assert!(((dense_eigenvalue(&op) - expected) / expected).abs() < 1e-8);
    }

    #[test]
    fn power_iteration_matches_dense_eigensolve() {
        for kernel in [
            DispersalKernel::gaussian(25.0).unwrap(),
            DispersalKernel::gaussian(2.0).unwrap(),
            DispersalKernel::laplace(25.0).unwrap(),
        ] {
            for n in [32, 64, 128] {
                let op = unshifted_operator(kernel, n, 0.0);
                let eig = op.principal_eigen(0.0, PowerOptions::default()).unwrap();
                let dense = dense_eigenvalue(&op);
                assert!(
                    ((eig.eigenvalue - dense) / dense).abs() < 1e-8,
                    "{kernel:?} n={n}"
                );
                assert!(eig.eigenfunction.iter().all(|&v| v > 0.0));
                assert!(eig.residual <= 1e-10);
                let mass = op.mass(&eig.eigenfunction);
                assert!((mass - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gaussian_eigenvalue_at_production_resolution() {
        let op = unshifted_operator(DispersalKernel::gaussian(25.0).unwrap(), 512, 0.0);
        let eig = op.principal_eigen(0.0, PowerOptions::default()).unwrap();
        let dense = dense_eigenvalue(&op);
        assert!(((eig.eigenvalue - dense) / dense).abs() < 1e-8);
    }

    #[test]
    fn eigenvalue_within_row_sum_bounds() {
        for v in [0.01, 0.05, 1.0, 25.0, 150.0] {
            for kernel in [
                DispersalKernel::gaussian(v).unwrap(),
                DispersalKernel::laplace(v).unwrap(),
            ] {
                let op = unshifted_operator(kernel, 128, 0.0);
                let g = op.habitat().column(0.0).unwrap();
                let row_sums: Vec<f64> = (0..op.len())
                    .map(|i| op.matrix().row(i).iter().zip(g).map(|(a, w)| a * w).sum())
                    .collect();
                let lo = row_sums.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = row_sums.iter().copied().fold(0.0, f64::max);
                let eig = op.principal_eigen(0.0, PowerOptions::default()).unwrap();
                assert!(lo <= eig.eigenvalue && eig.eigenvalue <= hi, "{kernel:?}");
                if kernel.family() == KernelFamily::Gaussian {
                    assert!(eig.eigenvalue < 1.0);
                }
            }
        }
    }

    #[test]
    fn shifted_gaussian_follows_closed_form() {
        let kernel = DispersalKernel::gaussian(25.0).unwrap();
        let lambda0 = unshifted_operator(kernel, 256, 0.0)
            .principal_eigen(0.0, PowerOptions::default())
            .unwrap()
            .eigenvalue;
        let mut previous = lambda0;
        for c in [1.0, 3.25, 6.0] {
            let eig = unshifted_operator(kernel, 256, c)
                .principal_eigen(0.0, PowerOptions::default())
                .unwrap();
            let predicted = gaussian_shifted_eigenvalue(lambda0, c, 25.0);
            assert!(
                ((eig.eigenvalue - predicted) / predicted).abs() < 1e-6,
                "c={c}"
            );
            assert!(eig.eigenvalue < previous);
            previous = eig.eigenvalue;
        }
    }

    #[test]
    fn shifted_eigenvalue_examples() {
        assert_eq!(gaussian_shifted_eigenvalue(0.9, 0.0, 25.0), 0.9);
        assert!(
            (gaussian_shifted_eigenvalue(0.9, 5.0, 25.0) - 0.545_877_593_741_370_1).abs() < 1e-12
        );
    }

    #[test]
    fn grid_refinement_converges() {
        let kernel = DispersalKernel::gaussian(25.0).unwrap();
        let lambdas: Vec<f64> = [64, 128, 256, 512]
            .iter()
            .map(|&n| {
                unshifted_operator(kernel, n, 0.0)
                    .principal_eigen(0.0, PowerOptions::default())
                    .unwrap()
                    .eigenvalue
            })
            .collect();
        let diffs: Vec<f64> = lambdas.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        assert!(diffs.windows(2).all(|d| d[1] < d[0]), "{diffs:?}");
        // Second-order midpoint rule: Richardson extrapolations agree.
        let rich = |a: f64, b: f64| (4.0 * b - a) / 3.0;
        let r1 = rich(lambdas[1], lambdas[2]);
        let r2 = rich(lambdas[2], lambdas[3]);
        assert!((r1 - r2).abs() < 1e-6, "{r1} vs {r2}");
    }

    #[test]
    fn rejects_zero_column_and_reports_non_convergence() {
        let op = unshifted_operator(DispersalKernel::gaussian(25.0).unwrap(), 32, 0.0);
        let zeros = vec![0.0; 32];
        assert!(principal_eigen(
            op.matrix(),
            &zeros,
            op.habitat().step(),
            PowerOptions::default()
        )
        .is_err());
        let err = op
            .principal_eigen(
                0.0,
                PowerOptions {
                    tol: 1e-14,
                    max_iter: 2,
                },
            )
            .unwrap_err();
        assert!(matches!(
            err,
            ModelError::NoConvergence { iterations: 2, .. }
        ));
    }

    /// 1000 × 1000 midpoint rule for `(1/|Ω₀|) ∫∫ K(x − y) dx dy`.
    fn brute_force_success(kernel: &DispersalKernel) -> f64 {
        let n = 1000;
        let h = 10.0 / n as f64;
        let x: Vec<f64> = (0..n).map(|i| -5.0 + (i as f64 + 0.5) * h).collect();
        let mut total = 0.0;
        for &xi in &x {
            total += x.iter().map(|&yj| kernel.density(xi - yj)).sum::<f64>();
        }
        total * h * h / 10.0
    }

    #[test]
    fn dispersal_success_matches_double_quadrature() {
        let k = DispersalKernel::gaussian(25.0).unwrap();
        let bar = dispersal_success_approx(&k, patch());
        assert!((bar - brute_force_success(&k)).abs() < 1e-6, "{bar}");
    }

    #[test]
    fn dispersal_success_limits_and_ordering() {
        let narrow = DispersalKernel::gaussian(1e-6).unwrap();
        let bar = dispersal_success_approx(&narrow, patch());
        assert!(bar <= 1.0 && bar > 0.999);

        let bars: Vec<f64> = [1.0, 25.0, 100.0]
            .iter()
            .map(|&v| dispersal_success_approx(&DispersalKernel::gaussian(v).unwrap(), patch()))
            .collect();
        assert!(bars[0] > bars[1] && bars[1] > bars[2], "{bars:?}");

        for v in [0.01, 0.5, 5.0, 25.0, 150.0] {
            for k in [
                DispersalKernel::gaussian(v).unwrap(),
                DispersalKernel::laplace(v).unwrap(),
            ] {
                let bar = dispersal_success_approx(&k, patch());
                let hat = modified_dispersal_success_approx(&k, patch());
                assert!(hat >= bar, "{k:?}");
            }
        }
    }

    #[test]
    fn modified_approximation_is_closer() {
        let k = DispersalKernel::gaussian(25.0).unwrap();
        let lambda0 = unshifted_operator(k, 512, 0.0)
            .principal_eigen(0.0, PowerOptions::default())
            .unwrap()
            .eigenvalue;
        let bar = dispersal_success_approx(&k, patch());
        let hat = modified_dispersal_success_approx(&k, patch());
        assert!((hat - lambda0).abs() < (bar - lambda0).abs());
    }
}
