//! Suitability profiles, the computational domain and its quadrature grid.
//!
//! The grid is a uniform midpoint rule over `Ω = [a₀ + σ_min, b₀ + σ_max]`.
//! For every shift `σ` the environment can draw, the habitat caches the
//! suitability seen by each grid cell after the patch moved by `σ`.

use crate::environment::EnvironmentModel;
use crate::error::{ModelError, Result};

/// Minimum number of grid points accepted by [`DiscretizedHabitat::build`].
pub const MIN_GRID_POINTS: usize = 16;

/// Closed interval `[start, end]` in km.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
}

impl Interval {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if !(start.is_finite() && end.is_finite()) {
            return Err(ModelError::invalid("interval", "bounds must be finite"));
        }
        if start >= end {
            return Err(ModelError::invalid(
                "interval",
                format!("empty interval [{start}, {end}]"),
            ));
        }
        Ok(Self { start, end })
    }

    /// Symmetric interval `[-length/2, length/2]`.
    pub fn centered(length: f64) -> Result<Self> {
        Self::new(-0.5 * length, 0.5 * length)
    }

    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    pub fn contains(&self, x: f64) -> bool {
        self.start <= x && x <= self.end
    }

    /// Length of the overlap with `[lo, hi]`.
    pub fn overlap(&self, lo: f64, hi: f64) -> f64 {
        (self.end.min(hi) - self.start.max(lo)).max(0.0)
    }

    pub fn shifted(&self, by: f64) -> Self {
        Self {
            start: self.start + by,
            end: self.end + by,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Profile {
    Indicator,
    /// Values at equally spaced points spanning the support, endpoints included.
    Tabulated(Vec<f64>),
}

/// The unshifted suitability profile `g₀`, compactly supported on `Ω₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct Suitability {
    support: Interval,
    profile: Profile,
}

impl Suitability {
    /// `g₀ = 1` on `support`, zero elsewhere.
    pub fn indicator(support: Interval) -> Self {
        Self {
            support,
            profile: Profile::Indicator,
        }
    }

    /// Piecewise-linear profile through `values`, tabulated at equally spaced
    /// points from `support.start` to `support.end`.
    pub fn tabulated(support: Interval, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(ModelError::invalid(
                "suitability",
                "tabulated profile needs at least two values",
            ));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(ModelError::invalid(
                "suitability",
                "tabulated values must lie in [0, 1]",
            ));
        }
        if values.iter().all(|&v| v == 0.0) {
            return Err(ModelError::invalid(
                "suitability",
                "profile is identically zero",
            ));
        }
        Ok(Self {
            support,
            profile: Profile::Tabulated(values),
        })
    }

    pub fn support(&self) -> Interval {
        self.support
    }

    pub fn is_indicator(&self) -> bool {
        matches!(self.profile, Profile::Indicator)
    }

    /// `g₀(x)`.
    pub fn value(&self, x: f64) -> f64 {
        if !self.support.contains(x) {
            return 0.0;
        }
        match &self.profile {
            Profile::Indicator => 1.0,
            Profile::Tabulated(values) => {
                let segments = (values.len() - 1) as f64;
                let t = (x - self.support.start) / self.support.length() * segments;
                let k = (t.floor() as usize).min(values.len() - 2);
                let frac = t - k as f64;
                values[k] * (1.0 - frac) + values[k + 1] * frac
            }
        }
    }

    /// Weight of the grid cell `[lo, hi]`. Indicator profiles use the exact
    /// covered fraction of the cell; tabulated profiles use the midpoint value.
    pub fn cell_weight(&self, lo: f64, hi: f64) -> f64 {
        match self.profile {
            Profile::Indicator => self.support.overlap(lo, hi) / (hi - lo),
            Profile::Tabulated(_) => self.value(0.5 * (lo + hi)),
        }
    }

    /// `∫ g₀`.
    pub fn integral(&self) -> f64 {
        match &self.profile {
            Profile::Indicator => self.support.length(),
            Profile::Tabulated(values) => {
                let h = self.support.length() / (values.len() - 1) as f64;
                values.windows(2).map(|w| 0.5 * h * (w[0] + w[1])).sum()
            }
        }
    }
}

fn check_grid_points(grid_points: usize) -> Result<()> {
    if grid_points < MIN_GRID_POINTS {
        return Err(ModelError::invalid(
            "grid_points",
            format!("need at least {MIN_GRID_POINTS}, got {grid_points}"),
        ));
    }
    Ok(())
}

/// Uniform midpoint grid over `Ω` with cached shifted suitability columns.
#[derive(Debug, Clone)]
pub struct DiscretizedHabitat {
    domain: Interval,
    nodes: Vec<f64>,
    step: f64,
    suitability: Suitability,
    columns: Vec<ShiftColumn>,
}

#[derive(Debug, Clone)]
struct ShiftColumn {
    sigma: f64,
    values: Vec<f64>,
    /// Half-open index range holding every nonzero entry.
    support: (usize, usize),
}

impl DiscretizedHabitat {
    /// Grid over `Ω = [a₀ + min σ, b₀ + max σ]` with `grid_points` cells and a
    /// suitability column for every distinct shift in `env`.
    pub fn build(
        suitability: &Suitability,
        env: &EnvironmentModel,
        grid_points: usize,
    ) -> Result<Self> {
        let (lo, hi) = env.sigma_range();
        let mut shifts: Vec<f64> = env.atoms().iter().map(|a| a.sigma).collect();
        shifts.sort_by(f64::total_cmp);
        shifts.dedup();
        check_grid_points(grid_points)?;
        Ok(Self::with_shifts(suitability, lo, hi, &shifts, grid_points))
    }

    /// Grid over `Ω₀` itself, with the single unshifted column. This is the
    /// setting of the deterministic-shift eigenproblem.
    pub fn unshifted(suitability: &Suitability, grid_points: usize) -> Result<Self> {
        check_grid_points(grid_points)?;
        Ok(Self::with_shifts(
            suitability,
            0.0,
            0.0,
            &[0.0],
            grid_points,
        ))
    }

    fn with_shifts(
        suitability: &Suitability,
        sigma_lo: f64,
        sigma_hi: f64,
        shifts: &[f64],
        grid_points: usize,
    ) -> Self {
        let support = suitability.support();
        let domain = Interval {
            start: support.start + sigma_lo,
            end: support.end + sigma_hi,
        };
        let step = domain.length() / grid_points as f64;
        let nodes: Vec<f64> = (0..grid_points)
            .map(|i| domain.start + (i as f64 + 0.5) * step)
            .collect();

        let columns = shifts
            .iter()
            .map(|&sigma| {
                let values: Vec<f64> = nodes
                    .iter()
                    .map(|&x| {
                        suitability.cell_weight(x - 0.5 * step - sigma, x + 0.5 * step - sigma)
                    })
                    .collect();
                let first = values.iter().position(|&g| g > 0.0).unwrap_or(0);
                let last = values.iter().rposition(|&g| g > 0.0).map_or(0, |k| k + 1);
                ShiftColumn {
                    sigma,
                    values,
                    support: (first, last.max(first)),
                }
            })
            .collect();

        Self {
            domain,
            nodes,
            step,
            suitability: suitability.clone(),
            columns,
        }
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Uniform quadrature weight `h = |Ω| / N`.
    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn suitability(&self) -> &Suitability {
        &self.suitability
    }

    /// Shifts with a cached column, in increasing order.
    pub fn shifts(&self) -> impl Iterator<Item = f64> + '_ {
        self.columns.iter().map(|c| c.sigma)
    }

    /// Cached `g₀(x_i − σ)` column.
    pub fn column(&self, sigma: f64) -> Result<&[f64]> {
        self.find(sigma).map(|c| c.values.as_slice())
    }

    /// Index range `[first, last)` outside of which the column for `sigma` is zero.
    pub fn column_support(&self, sigma: f64) -> Result<(usize, usize)> {
        self.find(sigma).map(|c| c.support)
    }

    fn find(&self, sigma: f64) -> Result<&ShiftColumn> {
        self.columns
            .iter()
            .find(|c| c.sigma == sigma)
            .ok_or(ModelError::UnknownShift { sigma })
    }

    /// `Σ w_i u_i`.
    pub fn mass(&self, values: &[f64]) -> f64 {
        self.step * values.iter().sum::<f64>()
    }

    /// Quadrature of `g₀(x − σ)` over `Ω`.
    pub fn suitability_mass(&self, sigma: f64) -> Result<f64> {
        Ok(self.mass(self.column(sigma)?))
    }
}
