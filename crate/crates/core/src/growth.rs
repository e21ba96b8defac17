//! Density-dependent growth maps `f_r` and their monotone envelopes.
//!
//! Both families are normalized so that `f_r'(0) = r` exactly:
//!
//! * Beverton–Holt (compensatory, nondecreasing):
//!   `f_r(u) = r u / (1 + (r − 1) u / C)` for `r > 1`, `r u / (1 + u / C)` otherwise.
//! * Ricker (overcompensatory, single hump at `u = C`): `f_r(u) = r u e^{−u/C}`.

use crate::error::{ModelError, Result};

/// Number of grid points in an [`ExtremumProfile`].
pub const PROFILE_POINTS: usize = 2048;

/// Anything that maps a density `u` to its post-growth value given the
/// generation's growth rate `r`.
pub trait GrowthLaw: Sync {
    fn eval(&self, r: f64, u: f64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GrowthFamily {
    BevertonHolt,
    Ricker,
}

impl GrowthFamily {
    pub fn name(self) -> &'static str {
        match self {
            GrowthFamily::BevertonHolt => "beverton_holt",
            GrowthFamily::Ricker => "ricker",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthMap {
    family: GrowthFamily,
    carrying_capacity: f64,
}

impl GrowthMap {
    pub fn new(family: GrowthFamily, carrying_capacity: f64) -> Result<Self> {
        if !(carrying_capacity.is_finite() && carrying_capacity > 0.0) {
            return Err(ModelError::invalid(
                "carrying_capacity",
                format!("must be finite and > 0, got {carrying_capacity}"),
            ));
        }
        Ok(Self {
            family,
            carrying_capacity,
        })
    }

    pub fn beverton_holt(carrying_capacity: f64) -> Result<Self> {
        Self::new(GrowthFamily::BevertonHolt, carrying_capacity)
    }

    pub fn ricker(carrying_capacity: f64) -> Result<Self> {
        Self::new(GrowthFamily::Ricker, carrying_capacity)
    }

    pub fn family(&self) -> GrowthFamily {
        self.family
    }

    pub fn carrying_capacity(&self) -> f64 {
        self.carrying_capacity
    }

    /// `f_r(u)`; zero for `u ≤ 0`.
    pub fn apply(&self, r: f64, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        let cap = self.carrying_capacity;
        match self.family {
            GrowthFamily::BevertonHolt if r > 1.0 => r * u / (1.0 + (r - 1.0) * u / cap),
            GrowthFamily::BevertonHolt => r * u / (1.0 + u / cap),
            GrowthFamily::Ricker => r * u * (-u / cap).exp(),
        }
    }

    /// `sup_u f_r(u)`.
    pub fn supremum(&self, r: f64) -> f64 {
        let cap = self.carrying_capacity;
        match self.family {
            GrowthFamily::BevertonHolt if r > 1.0 => r * cap / (r - 1.0),
            GrowthFamily::BevertonHolt => r * cap,
            GrowthFamily::Ricker => r * cap / std::f64::consts::E,
        }
    }

    /// Density at which `f_r` peaks, if it has an interior maximum.
    pub fn hump(&self) -> Option<f64> {
        match self.family {
            GrowthFamily::BevertonHolt => None,
            GrowthFamily::Ricker => Some(self.carrying_capacity),
        }
    }

    /// Lower and upper nondecreasing envelopes on `[0, b]`:
    /// `f̲(u) = min_{u≤v≤b} f(v)` and `f̄(u) = max_{0≤v≤u} f(v)`.
    pub fn monotone_envelopes(&self, bound: f64) -> Result<(MonotoneEnvelope, MonotoneEnvelope)> {
        if !(bound.is_finite() && bound > 0.0) {
            return Err(ModelError::invalid(
                "bound",
                format!("envelope bound must be > 0, got {bound}"),
            ));
        }
        let make = |side| MonotoneEnvelope {
            map: *self,
            side,
            bound,
        };
        Ok((make(EnvelopeSide::Lower), make(EnvelopeSide::Upper)))
    }
}

impl GrowthLaw for GrowthMap {
    fn eval(&self, r: f64, u: f64) -> f64 {
        self.apply(r, u)
    }
}

/// Upper density bound `b = m · sup K · ∫g₀` with `m = max_r sup_u f_r(u)`
/// over the growth rates in `rates`.
pub fn density_bound(
    map: &GrowthMap,
    rates: impl IntoIterator<Item = f64>,
    peak_kernel: f64,
    suitability_mass: f64,
) -> f64 {
    let m = rates
        .into_iter()
        .map(|r| map.supremum(r))
        .fold(0.0, f64::max);
    m * peak_kernel * suitability_mass
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeSide {
    Lower,
    Upper,
}

/// Monotone envelope of a growth map on `[0, b]`, evaluated exactly from the
/// family's unimodal shape. Above `b` the lower envelope is held at `f_r(b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotoneEnvelope {
    map: GrowthMap,
    side: EnvelopeSide,
    bound: f64,
}

impl MonotoneEnvelope {
    pub fn side(&self) -> EnvelopeSide {
        self.side
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn apply(&self, r: f64, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        let f = |v| self.map.apply(r, v);
        match (self.side, self.map.hump()) {
            (_, None) => f(u),
            // Min of a unimodal map over [u, b] sits at an endpoint.
            (EnvelopeSide::Lower, Some(_)) => f(u.min(self.bound)).min(f(self.bound)),
            (EnvelopeSide::Upper, Some(peak)) => f(u.min(peak)),
        }
    }
}

impl GrowthLaw for MonotoneEnvelope {
    fn eval(&self, r: f64, u: f64) -> f64 {
        self.apply(r, u)
    }
}

/// Grid-scanned running extrema of `f_r` on `[0, b]`: a generic envelope
/// construction used to cross-check [`MonotoneEnvelope`].
#[derive(Debug, Clone)]
pub struct ExtremumProfile {
    map: GrowthMap,
    r: f64,
    bound: f64,
    step: f64,
    prefix_max: Vec<f64>,
    suffix_min: Vec<f64>,
}

impl ExtremumProfile {
    pub fn scan(map: &GrowthMap, r: f64, bound: f64) -> Result<Self> {
        if !(bound.is_finite() && bound > 0.0) {
            return Err(ModelError::invalid("bound", "profile bound must be > 0"));
        }
        let n = PROFILE_POINTS;
        let step = bound / (n - 1) as f64;
        let values: Vec<f64> = (0..n).map(|k| map.apply(r, k as f64 * step)).collect();
        let mut prefix_max = values.clone();
        for k in 1..n {
            prefix_max[k] = prefix_max[k].max(prefix_max[k - 1]);
        }
        let mut suffix_min = values;
        for k in (0..n - 1).rev() {
            suffix_min[k] = suffix_min[k].min(suffix_min[k + 1]);
        }
        Ok(Self {
            map: *map,
            r,
            bound,
            step,
            prefix_max,
            suffix_min,
        })
    }

    /// Envelopes at `u ∈ [0, b]`, combining the scanned extrema with the exact
    /// value at `u` itself.
    pub fn envelopes(&self, u: f64) -> (f64, f64) {
        let u = u.clamp(0.0, self.bound);
        let f = self.map.apply(self.r, u);
        let below = ((u / self.step).floor() as usize).min(self.prefix_max.len() - 1);
        let above = ((u / self.step).ceil() as usize).min(self.suffix_min.len() - 1);
        (f.min(self.suffix_min[above]), f.max(self.prefix_max[below]))
    }
}
