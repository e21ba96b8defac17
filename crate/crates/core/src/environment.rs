//! The i.i.d. random environment `α_t = (σ_t, r_t)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{ModelError, Result};

const PROBABILITY_TOLERANCE: f64 = 1e-12;

/// One outcome of the environment: yearly shift `sigma` (km/generation),
/// low-density growth rate `r`, and its probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub sigma: f64,
    pub r: f64,
    pub prob: f64,
}

impl Atom {
    pub const fn new(sigma: f64, r: f64, prob: f64) -> Self {
        Self { sigma, r, prob }
    }
}

/// Which coordinate of `α` a mean-preserving spread acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpreadTarget {
    Shift,
    Growth,
}

/// Finite-atom distribution of `α` plus the asymptotic shifting speed `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentModel {
    atoms: Vec<Atom>,
    c: f64,
}

impl EnvironmentModel {
    pub fn new(atoms: Vec<Atom>, c: f64) -> Result<Self> {
        if atoms.is_empty() {
            return Err(ModelError::invalid(
                "atoms",
                "environment needs at least one atom",
            ));
        }
        if !(c.is_finite() && c >= 0.0) {
            return Err(ModelError::invalid(
                "c",
                format!("shifting speed must be ≥ 0, got {c}"),
            ));
        }
        for a in &atoms {
            if !(a.r.is_finite() && a.r > 0.0) {
                return Err(ModelError::invalid(
                    "r",
                    format!("growth rates must be > 0, got {}", a.r),
                ));
            }
            if !a.sigma.is_finite() {
                return Err(ModelError::invalid("sigma", "shifts must be finite"));
            }
            if !(a.prob.is_finite() && a.prob >= 0.0) {
                return Err(ModelError::invalid(
                    "prob",
                    format!("probabilities must be ≥ 0, got {}", a.prob),
                ));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.prob).sum();
        if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(ModelError::invalid(
                "prob",
                format!("probabilities sum to {total}, not 1"),
            ));
        }
        let model = Self { atoms, c };
        let (lo, hi) = model.sigma_range();
        if lo > 0.0 || hi < 0.0 {
            return Err(ModelError::invalid(
                "sigma",
                format!("shift range [{lo}, {hi}] must contain 0"),
            ));
        }
        Ok(model)
    }

    /// Deterministic environment: `σ ≡ 0`, `r` fixed.
    pub fn deterministic(r: f64, c: f64) -> Result<Self> {
        Self::new(vec![Atom::new(0.0, r, 1.0)], c)
    }

    /// Two equally likely environments: good `(σ̲, r̄)` and bad `(σ̄, r̲)`.
    pub fn good_bad(sigma_lo: f64, sigma_hi: f64, r_lo: f64, r_hi: f64, c: f64) -> Result<Self> {
        Self::new(
            vec![
                Atom::new(sigma_lo, r_hi, 0.5),
                Atom::new(sigma_hi, r_lo, 0.5),
            ],
            c,
        )
    }

    /// Butterfly case study: `c = 3.25`, `σ ∈ {−1.36, 1.36}`, `r ∈ {2.07, 4.85}`.
    pub fn butterfly() -> Self {
        Self::good_bad(-1.36, 1.36, 2.07, 4.85, 3.25).expect("valid butterfly parameters")
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Asymptotic shifting speed `c` in km/generation.
    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn with_c(&self, c: f64) -> Result<Self> {
        Self::new(self.atoms.clone(), c)
    }

    /// Same growth distribution with every shift set to zero.
    pub fn without_shifts(&self) -> Self {
        Self {
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom { sigma: 0.0, ..*a })
                .collect(),
            c: self.c,
        }
    }

    pub fn has_zero_shifts(&self) -> bool {
        self.atoms.iter().all(|a| a.sigma == 0.0)
    }

    /// `(min σ, max σ)`.
    pub fn sigma_range(&self) -> (f64, f64) {
        self.atoms
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), a| {
                (lo.min(a.sigma), hi.max(a.sigma))
            })
    }

    pub fn r_max(&self) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.r)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `E[ln r₀]`.
    pub fn log_growth_mean(&self) -> f64 {
        self.atoms.iter().map(|a| a.prob * a.r.ln()).sum()
    }

    /// `R̄ = e^{E[ln r₀]}`, the geometric mean growth rate.
    pub fn geometric_growth(&self) -> f64 {
        self.log_growth_mean().exp()
    }

    /// Two-atom model with the chosen coordinate moved to `mean ± spread`,
    /// everything else untouched.
    ///
    /// The good/bad coupling is kept: the atom with the lower shift (or, for
    /// ties, the higher growth rate; then the first atom) receives the lower
    /// shift and the higher growth rate.
    pub fn mean_preserving_spread(&self, target: SpreadTarget, spread: f64) -> Result<Self> {
        if self.atoms.len() != 2 || self.atoms.iter().any(|a| a.prob != 0.5) {
            return Err(ModelError::Unsupported {
                requirement: "a two-atom environment with probabilities 1/2",
            });
        }
        if !(spread.is_finite() && spread >= 0.0) {
            return Err(ModelError::invalid(
                "spread",
                format!("must be ≥ 0, got {spread}"),
            ));
        }
        let [a, b] = [self.atoms[0], self.atoms[1]];
        let a_is_good = if a.sigma != b.sigma {
            a.sigma < b.sigma
        } else if a.r != b.r {
            a.r > b.r
        } else {
            true
        };
        let (good, bad) = if a_is_good { (0, 1) } else { (1, 0) };
        let mut atoms = self.atoms.clone();
        match target {
            SpreadTarget::Shift => {
                let mean = 0.5 * (a.sigma + b.sigma);
                atoms[good].sigma = mean - spread;
                atoms[bad].sigma = mean + spread;
            }
            SpreadTarget::Growth => {
                let mean = 0.5 * (a.r + b.r);
                if mean - spread <= 0.0 {
                    return Err(ModelError::invalid(
                        "spread",
                        format!("r spread {spread} around mean {mean} makes a growth rate ≤ 0"),
                    ));
                }
                atoms[good].r = mean + spread;
                atoms[bad].r = mean - spread;
            }
        }
        Self::new(atoms, self.c)
    }
}

/// One draw from the environment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Draw {
    pub atom: usize,
    pub sigma: f64,
    pub r: f64,
}

/// Reproducible i.i.d. sampler for one replicate.
///
/// Each `(base_seed, replicate)` pair selects an independent ChaCha stream;
/// the same pair always yields the same sequence.
#[derive(Debug, Clone)]
pub struct EnvironmentStream<'a> {
    model: &'a EnvironmentModel,
    cumulative: Vec<f64>,
    rng: ChaCha8Rng,
    base_seed: u64,
    replicate: u64,
}

impl<'a> EnvironmentStream<'a> {
    pub fn new(model: &'a EnvironmentModel, base_seed: u64, replicate: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
        rng.set_stream(replicate);
        let mut acc = 0.0;
        let cumulative = model
            .atoms
            .iter()
            .map(|a| {
                acc += a.prob;
                acc
            })
            .collect();
        Self {
            model,
            cumulative,
            rng,
            base_seed,
            replicate,
        }
    }

    pub fn base_seed(&self) -> u64 {
        self.base_seed
    }

    pub fn replicate(&self) -> u64 {
        self.replicate
    }

    pub fn sample(&mut self) -> Draw {
        let u: f64 = self.rng.random();
        let last = self.cumulative.len() - 1;
        let atom = self.cumulative.iter().position(|&c| u < c).unwrap_or(last);
        let a = self.model.atoms[atom];
        Draw {
            atom,
            sigma: a.sigma,
            r: a.r,
        }
    }
}

impl Iterator for EnvironmentStream<'_> {
    type Item = Draw;

    fn next(&mut self) -> Option<Draw> {
        Some(self.sample())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_model_always_returns_its_atom() {
        let env = EnvironmentModel::deterministic(2.0, 0.0).unwrap();
        let mut s = EnvironmentStream::new(&env, 7, 0);
        for _ in 0..100 {
            let d = s.sample();
            assert_eq!((d.sigma, d.r), (0.0, 2.0));
        }
    }

    #[test]
    fn butterfly_good_frequency_is_one_half() {
        let env = EnvironmentModel::butterfly();
        let stream = EnvironmentStream::new(&env, 2024, 3);
        let good = stream.take(100_000).filter(|d| d.r == 4.85).count();
        let freq = good as f64 / 1e5;
        assert!((freq - 0.5).abs() < 0.005, "{freq}");
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let env = EnvironmentModel::butterfly();
        let a: Vec<_> = EnvironmentStream::new(&env, 11, 4).take(100).collect();
        let b: Vec<_> = EnvironmentStream::new(&env, 11, 4).take(100).collect();
        let c: Vec<_> = EnvironmentStream::new(&env, 11, 5).take(100).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn replicate_streams_are_uncorrelated() {
        let env = EnvironmentModel::butterfly();
        let n = 20_000;
        let x: Vec<f64> = EnvironmentStream::new(&env, 1, 0)
            .take(n)
            .map(|d| d.atom as f64 - 0.5)
            .collect();
        let y: Vec<f64> = EnvironmentStream::new(&env, 1, 1)
            .take(n)
            .map(|d| d.atom as f64 - 0.5)
            .collect();
        let corr = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / (0.25 * n as f64);
        // 4 standard errors of a null correlation.
        assert!(corr.abs() < 4.0 / (n as f64).sqrt(), "{corr}");
    }

    #[test]
    fn log_growth_mean_examples() {
        let env = EnvironmentModel::butterfly();
        assert!((env.log_growth_mean() - 1.153_263_656_113_334_8).abs() < 1e-12);
        assert!((env.geometric_growth() - (2.07f64 * 4.85).sqrt()).abs() < 1e-12);
        assert!((env.geometric_growth() - 3.168_517_003_268_248).abs() < 1e-9);
        let det = EnvironmentModel::deterministic(2.0, 0.0).unwrap();
        assert_eq!(det.log_growth_mean(), 2f64.ln());
        assert_eq!(det.geometric_growth(), 2.0);
    }

    #[test]
    fn spread_in_growth_lowers_geometric_mean() {
        let base = EnvironmentModel::good_bad(-1.36, 1.36, 2.46, 2.46, 3.25).unwrap();
        let rbar: Vec<f64> = [0.0, 0.5, 1.0]
            .iter()
            .map(|&d| {
                base.mean_preserving_spread(SpreadTarget::Growth, d)
                    .unwrap()
                    .geometric_growth()
            })
            .collect();
        assert_eq!(rbar[0], 2.46);
        assert!(rbar[0] > rbar[1] && rbar[1] > rbar[2], "{rbar:?}");
    }

    #[test]
    fn log_growth_mean_matches_monte_carlo() {
        let env = EnvironmentModel::butterfly();
        let n = 1_000_000;
        let draws: Vec<f64> = EnvironmentStream::new(&env, 99, 0)
            .take(n)
            .map(|d| d.r.ln())
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!((mean - env.log_growth_mean()).abs() < 3.0 * se);
    }

    #[test]
    fn mean_preserving_spread_examples() {
        let env = EnvironmentModel::butterfly();
        let flat = env
            .mean_preserving_spread(SpreadTarget::Growth, 0.0)
            .unwrap();
        assert!(flat.atoms().iter().all(|a| a.r == 3.46));
        assert_eq!(flat.atoms()[0].sigma, -1.36);

        let zero_shift = env.without_shifts();
        let shifted = zero_shift
            .mean_preserving_spread(SpreadTarget::Shift, 1.36)
            .unwrap();
        let sigmas: Vec<f64> = shifted.atoms().iter().map(|a| a.sigma).collect();
        assert_eq!(sigmas, vec![-1.36, 1.36]);
        // Good environment keeps the high growth rate.
        assert_eq!(shifted.atoms()[0].r, 4.85);

        for spread in [0.3, 1.0, 2.5] {
            let m = env
                .mean_preserving_spread(SpreadTarget::Growth, spread)
                .unwrap();
            let mean = m.atoms().iter().map(|a| a.prob * a.r).sum::<f64>();
            let var = m
                .atoms()
                .iter()
                .map(|a| a.prob * (a.r - mean).powi(2))
                .sum::<f64>();
            assert!((var - spread * spread).abs() < 1e-12);
            assert!((mean - 3.46).abs() < 1e-12);
            assert_eq!(m.c(), 3.25);
        }
        assert!(env
            .mean_preserving_spread(SpreadTarget::Growth, 3.46)
            .is_err());
        assert!(env
            .mean_preserving_spread(SpreadTarget::Shift, -1.0)
            .is_err());
    }

    #[test]
    fn validation() {
        assert!(EnvironmentModel::new(vec![Atom::new(0.0, 2.0, 0.6)], 0.0).is_err());
        assert!(EnvironmentModel::new(vec![Atom::new(0.0, 0.0, 1.0)], 0.0).is_err());
        assert!(EnvironmentModel::new(vec![Atom::new(0.5, 2.0, 1.0)], 0.0).is_err());
        assert!(EnvironmentModel::new(vec![Atom::new(0.0, 2.0, 1.0)], -1.0).is_err());
        assert!(EnvironmentModel::new(vec![], 0.0).is_err());
        let three = EnvironmentModel::new(
            vec![
                Atom::new(-1.0, 2.0, 0.25),
                Atom::new(0.0, 2.0, 0.25),
                Atom::new(1.0, 2.0, 0.5),
            ],
            1.0,
        )
        .unwrap();
        assert!(three
            .mean_preserving_spread(SpreadTarget::Shift, 1.0)
            .is_err());
    }
}
