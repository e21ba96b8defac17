//! Nyström discretization of the moving-frame growth–dispersal map.
//!
//! On the midpoint grid, one generation with environment `(σ, r)` is
//!
//! ```text
//! v_i = Σ_j A_ij · g₀(x_j − σ) · f_r(u_j),     A_ij = h · K(x_i − x_j + c)
//! ```
//!
//! and the linearization at zero replaces `f_r(u)` by `r u`.

use crate::environment::EnvironmentModel;
use crate::error::{ModelError, Result};
use crate::growth::GrowthLaw;
use crate::habitat::{DiscretizedHabitat, Suitability};
use crate::kernels::DispersalKernel;

/// Matrix entries smaller than this are treated as exact zeros.
pub const NEGLIGIBLE_ENTRY: f64 = 1e-280;

/// Dense `A_ij = h · K(x_i − x_j + c)` for one kernel, speed and grid.
#[derive(Debug, Clone)]

pub struct ShiftedKernelMatrix {
    n: usize,
    c: f64,
    entries: Vec<f64>,
}

impl ShiftedKernelMatrix {
    pub fn build(kernel: &DispersalKernel, habitat: &DiscretizedHabitat, c: f64) -> Self {
        let n = habitat.len();
        let h = habitat.step();
        // Uniform grid: A_ij depends on i − j only. Entries below
        // `NEGLIGIBLE_ENTRY` are stored as zero to keep matvecs off the
        // subnormal slow path.
        let diagonals: Vec<f64> = (0..2 * n - 1)
            .map(|k| h * kernel.density((k as f64 - (n - 1) as f64) * h + c))
            .map(|a| if a < NEGLIGIBLE_ENTRY { 0.0 } else { a })
            .collect();
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            entries.extend((0..n).map(|j| diagonals[i + n - 1 - j]));
        }
        Self { n, c, entries }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    /// `out = A y`, reading only the columns in `range`.
    pub fn mul_vec_range(&self, y: &[f64], range: (usize, usize), out: &mut [f64]) {
        let (a, b) = range;
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(&self.row(i)[a..b], &y[a..b]);
        }
    }

    /// `out = A y`.
    pub fn mul_vec(&self, y: &[f64], out: &mut [f64]) {
        self.mul_vec_range(y, (0, self.n), out);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Kernel matrix bundled with the grid it was built on.
#[derive(Debug, Clone)]
pub struct IdeOperator {
    kernel: DispersalKernel,
    habitat: DiscretizedHabitat,
    matrix: ShiftedKernelMatrix,
}

impl IdeOperator {
    pub fn new(kernel: DispersalKernel, habitat: DiscretizedHabitat, c: f64) -> Self {
        let matrix = ShiftedKernelMatrix::build(&kernel, &habitat, c);
        Self {
            kernel,
            habitat,
            matrix,
        }
    }

    /// Operator on the grid covering every shift of `env`, moving at `env.c()`.
    pub fn for_environment(
        kernel: DispersalKernel,
        suitability: &Suitability,
        env: &EnvironmentModel,
        grid_points: usize,
    ) -> Result<Self> {
        let habitat = DiscretizedHabitat::build(suitability, env, grid_points)?;
        Ok(Self::new(kernel, habitat, env.c()))
    }

    pub fn kernel(&self) -> &DispersalKernel {
        &self.kernel
    }

    pub fn habitat(&self) -> &DiscretizedHabitat {
        &self.habitat
    }

    pub fn matrix(&self) -> &ShiftedKernelMatrix {
        &self.matrix
    }

    pub fn c(&self) -> f64 {
        self.matrix.c()
    }

    pub fn len(&self) -> usize {
        self.matrix.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.is_empty()
    }

    fn check(&self, u: &[f64], out: &[f64]) -> Result<()> {
        for found in [u.len(), out.len()] {
            if found != self.len() {
                return Err(ModelError::DimensionMismatch {
                    expected: self.len(),
                    found,
                });
            }
        }
        Ok(())
    }

    /// Shared body of both steps: `out = A (g_σ ∘ growth(u))`.
    fn step_with(
        &self,
        sigma: f64,
        u: &[f64],
        out: &mut [f64],
        growth: impl Fn(f64) -> f64,
    ) -> Result<()> {
        self.check(u, out)?;
        let g = self.habitat.column(sigma)?;
        let range = self.habitat.column_support(sigma)?;
        let mut y = vec![0.0; self.len()];
        for j in range.0..range.1 {
            y[j] = g[j] * growth(u[j]);
        }
        self.matrix.mul_vec_range(&y, range, out);
        Ok(())
    }

    /// Linearized step `ℒ_α u` written into `out`.
    pub fn step_linear_into(&self, sigma: f64, r: f64, u: &[f64], out: &mut [f64]) -> Result<()> {
        self.step_with(sigma, u, out, |x| r * x)
    }

    /// Nonlinear step `F_α(u)` written into `out`.
    pub fn step_nonlinear_into(
        &self,
        growth: &dyn GrowthLaw,
        sigma: f64,
        r: f64,
        u: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        self.step_with(sigma, u, out, |x| growth.eval(r, x))
    }

    pub fn step_linear(&self, sigma: f64, r: f64, u: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.len()];
        self.step_linear_into(sigma, r, u, &mut out)?;
        Ok(out)
    }

    pub fn step_nonlinear(
        &self,
        growth: &dyn GrowthLaw,
        sigma: f64,
        r: f64,
        u: &[f64],
    ) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.len()];
        self.step_nonlinear_into(growth, sigma, r, u, &mut out)?;
        Ok(out)
    }

    /// `Σ w_i u_i`.
    pub fn mass(&self, u: &[f64]) -> f64 {
        self.habitat.mass(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::EnvironmentModel;
    use crate::growth::GrowthMap;
    use crate::habitat::{Interval, Suitability};

    fn butterfly_operator(n: usize) -> IdeOperator {
        let env = EnvironmentModel::butterfly();
        let s = Suitability::indicator(Interval::new(-5.0, 5.0).unwrap());
        let hab = DiscretizedHabitat::build(&s, &env, n).unwrap();
        IdeOperator::new(DispersalKernel::gaussian(25.0).unwrap(), hab, env.c())
    }

    #[test]
    fn matrix_entries_match_definition() {
        let op = butterfly_operator(64);
        let x = op.habitat().nodes();
        let h = op.habitat().step();
        let k = op.kernel();
        for (i, j) in [(0, 0), (3, 40), (63, 1), (20, 20), (10, 55)] {
            let expected = h * k.density(x[i] - x[j] + 3.25);
            assert!(
                (op.matrix().get(i, j) - expected).abs() < 1e-15,
                "({i},{j})"
            );
        }
    }

    #[test]
    fn zero_density_and_zero_suitability_stay_zero() {
        let op = butterfly_operator(64);
        let g = GrowthMap::beverton_holt(1.0).unwrap();
        let zero = vec![0.0; 64];
        assert!(op
            .step_nonlinear(&g, 1.36, 2.07, &zero)
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));

        // Density sitting only where g₀(x − σ) = 0 never reproduces.
        let g_col = op.habitat().column(1.36).unwrap();
        let outside: Vec<f64> = g_col
            .iter()
            .map(|&w| if w == 0.0 { 5.0 } else { 0.0 })
            .collect();
        assert!(outside.iter().any(|&v| v > 0.0));
        let v = op.step_nonlinear(&g, 1.36, 4.85, &outside).unwrap();
        assert!(v.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn uniform_kernel_surrogate_sums_directly() {
        // A very wide Gaussian is nearly constant over Ω: K ≈ k0.
        let env = EnvironmentModel::butterfly();
        let s = Suitability::indicator(Interval::new(-5.0, 5.0).unwrap());
        let hab = DiscretizedHabitat::build(&s, &env, 128).unwrap();
        let kernel = DispersalKernel::gaussian(1e8).unwrap();
        let op = IdeOperator::new(kernel, hab, 0.0);
        let k0 = kernel.peak_density();
        let u: Vec<f64> = op.habitat().nodes().iter().map(|x| 1.0 + 0.1 * x).collect();
        let g = op.habitat().column(1.36).unwrap();
        let direct: f64 = k0
            * 3.0
            * (0..128)
                .map(|j| op.habitat().step() * g[j] * u[j])
                .sum::<f64>();
        let v = op.step_linear(1.36, 3.0, &u).unwrap();
        for vi in v {
            assert!(((vi - direct) / direct).abs() < 1e-6);
        }
    }

    #[test]
    fn two_point_product_by_hand() {
        let op = butterfly_operator(16);
        let u: Vec<f64> = (0..16)
            .map(|i| if i == 7 || i == 8 { 1.0 } else { 0.0 })
            .collect();
        let v = op.step_linear(-1.36, 2.0, &u).unwrap();
        let g = op.habitat().column(-1.36).unwrap();
        for i in [0, 7, 8, 15] {
            let expected = 2.0 * (op.matrix().get(i, 7) * g[7] + op.matrix().get(i, 8) * g[8]);
            assert!((v[i] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn substochastic_without_shift_or_growth() {
        let s = Suitability::indicator(Interval::new(-5.0, 5.0).unwrap());
        let hab = DiscretizedHabitat::unshifted(&s, 256).unwrap();
        let op = IdeOperator::new(DispersalKernel::laplace(4.0).unwrap(), hab, 0.0);
        let u: Vec<f64> = op
            .habitat()
            .nodes()
            .iter()
            .map(|x| (-x * x / 8.0).exp())
            .collect();
        let v = op.step_linear(0.0, 1.0, &u).unwrap();
        assert!(op.mass(&v) <= op.mass(&u));
    }

    #[test]
    fn rejects_unknown_shift_and_bad_lengths() {
        let op = butterfly_operator(32);
        assert!(matches!(
            op.step_linear(0.0, 2.0, &[1.0; 32]),
            Err(ModelError::UnknownShift { .. })
        ));
        assert!(matches!(
            op.step_linear(1.36, 2.0, &[1.0; 31]),
            Err(ModelError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gaussian_shift_identity_at_matrix_level() {
        let s = Suitability::indicator(Interval::new(-5.0, 5.0).unwrap());
        let hab = DiscretizedHabitat::unshifted(&s, 128).unwrap();
        let k = DispersalKernel::gaussian(25.0).unwrap();
        let a0 = ShiftedKernelMatrix::build(&k, &hab, 0.0);
        let c = 3.25;
        let ac = ShiftedKernelMatrix::build(&k, &hab, c);
        let x = hab.nodes();
        for i in (0..128).step_by(7) {
            for j in (0..128).step_by(5) {
                let expected =
                    (-c * c / 50.0).exp() * (-c * (x[i] - x[j]) / 25.0).exp() * a0.get(i, j);
                assert!(((ac.get(i, j) - expected) / expected).abs() < 1e-12);
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn density(n: usize) -> impl Strategy<Value = Vec<f64>> {
            proptest::collection::vec(0.0f64..3.0, n)
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn linear_step_dominates_nonlinear(u in density(48), ricker in any::<bool>(), bad in any::<bool>()) {
                let op = butterfly_operator(48);
                let g = if ricker { GrowthMap::ricker(1.0) } else { GrowthMap::beverton_holt(1.0) }.unwrap();
                let (sigma, r) = if bad { (1.36, 2.07) } else { (-1.36, 4.85) };
                let lin = op.step_linear(sigma, r, &u).unwrap();
                let non = op.step_nonlinear(&g, sigma, r, &u).unwrap();
                for (l, n) in lin.iter().zip(&non) {
                    prop_assert!(n <= l);
                }
            }

            #[test]
            fn compensatory_step_is_monotone(u in density(48), bump in density(48)) {
                let op = butterfly_operator(48);
                let g = GrowthMap::beverton_holt(1.0).unwrap();
                let w: Vec<f64> = u.iter().zip(&bump).map(|(a, b)| a + b).collect();
                let fu = op.step_nonlinear(&g, -1.36, 4.85, &u).unwrap();
                let fw = op.step_nonlinear(&g, -1.36, 4.85, &w).unwrap();
                for (a, b) in fu.iter().zip(&fw) {
                    prop_assert!(a <= b);
                }
            }

            #[test]
            fn outputs_bounded_by_density_bound(u in proptest::collection::vec(0.0f64..1e6, 48), ricker in any::<bool>()) {
                let op = butterfly_operator(48);
                let env = EnvironmentModel::butterfly();
                let g = if ricker { GrowthMap::ricker(1.0) } else { GrowthMap::beverton_holt(1.0) }.unwrap();
                let b = crate::growth::density_bound(&g, env.atoms().iter().map(|a| a.r), op.kernel().peak_density(), 10.0);
                for atom in env.atoms() {
                    let v = op.step_nonlinear(&g, atom.sigma, atom.r, &u).unwrap();
                    prop_assert!(v.iter().all(|&x| x <= b));
                    prop_assert!(op.mass(&v) <= b * op.habitat().domain().length());
                }
            }

            #[test]
            fn linear_step_is_linear(u in density(48), w in density(48), a in -2.0f64..2.0, b in -2.0f64..2.0) {
                let op = butterfly_operator(48);
                let combo: Vec<f64> = u.iter().zip(&w).map(|(x, y)| a * x + b * y).collect();
                let lhs = op.step_linear(1.36, 2.07, &combo).unwrap();
                let lu = op.step_linear(1.36, 2.07, &u).unwrap();
                let lw = op.step_linear(1.36, 2.07, &w).unwrap();
                let scale = lu.iter().chain(&lw).fold(1.0f64, |m, x| m.max(x.abs()));
                for i in 0..48 {
                    prop_assert!((lhs[i] - (a * lu[i] + b * lw[i])).abs() <= 1e-12 * scale);
                }
            }
        }
    }
}
