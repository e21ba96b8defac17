//! Forward simulation of the nonlinear model in the moving frame.

use crate::environment::{EnvironmentModel, EnvironmentStream};
use crate::error::{ModelError, Result};
use crate::growth::{density_bound, GrowthLaw, GrowthMap};
use crate::operator::IdeOperator;
use crate::par::map_indices;

/// Thresholds turning a mass series into an outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassificationRules {
    /// Mass below which a generation counts towards extinction.
    pub extinction_floor: f64,
    /// Consecutive generations below the floor that declare extinction.
    pub extinction_window: usize,
    /// Length of the trailing windows compared for persistence.
    pub persistence_window: usize,
    /// Minimum mass required over the last window.
    pub persistence_floor: f64,
    /// Allowed relative change between the last two window means.
    pub persistence_tolerance: f64,
}

impl Default for ClassificationRules {
    fn default() -> Self {
        Self {
            extinction_floor: 1e-10,
            extinction_window: 50,
            persistence_window: 500,
            persistence_floor: 1e-6,
            persistence_tolerance: 0.10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Persisted,
    Extinct,
    Undecided,
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Outcome::Persisted => "persisted",
            Outcome::Extinct => "extinct",
            Outcome::Undecided => "undecided",
        }
    }
}

/// Classifies a mass series `m_0, …, m_T`.
///
/// Extinct if the mass stays below the extinction floor for a full window of
/// consecutive generations. Persisted if the last window stays above the
/// persistence floor and its mean is within the tolerance of the preceding
/// window's mean. Otherwise undecided.
pub fn classify(mass: &[f64], rules: &ClassificationRules) -> Outcome {
    let mut run = 0;
    for &m in mass {
        run = if m < rules.extinction_floor {
            run + 1
        } else {
            0
        };
        if run >= rules.extinction_window {
            return Outcome::Extinct;
        }
    }

    let w = rules.persistence_window;
    if w == 0 || mass.len() < 2 * w {
        return Outcome::Undecided;
    }
    let last = &mass[mass.len() - w..];
    let before = &mass[mass.len() - 2 * w..mass.len() - w];
    let min = last.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let (now, then) = (mean(last), mean(before));
    if min > rules.persistence_floor && (now - then).abs() <= rules.persistence_tolerance * then {
        Outcome::Persisted
    } else {
        Outcome::Undecided
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOptions {
    pub horizon: usize,
    /// Generations at which the full density is kept.
    pub snapshot_times: Vec<usize>,
    pub rules: ClassificationRules,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            horizon: 3000,
            snapshot_times: Vec::new(),
            rules: ClassificationRules::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub base_seed: u64,
    pub replicate: u64,
    /// `∫u_t` for `t = 0..=T`.
    pub mass: Vec<f64>,
    /// `max_x u_t(x)` for `t = 0..=T`.
    pub sup: Vec<f64>,
    pub snapshots: Vec<(usize, Vec<f64>)>,
    pub outcome: Outcome,
}

fn check_initial(op: &IdeOperator, u0: &[f64]) -> Result<()> {
    if u0.len() != op.len() {
        return Err(ModelError::DimensionMismatch {
            expected: op.len(),
            found: u0.len(),
        });
    }
    if u0.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(ModelError::invalid(
            "initial",
            "density must be finite and nonnegative",
        ));
    }
    if u0.iter().all(|&v| v == 0.0) {
        return Err(ModelError::invalid(
            "initial",
            "density is identically zero",
        ));
    }
    Ok(())
}

fn sup_norm(u: &[f64]) -> f64 {
    u.iter().copied().fold(0.0, f64::max)
}

/// Iterates `u_{t+1} = F_{α_t}(u_t)` for one replicate stream.
pub fn run_trajectory(
    op: &IdeOperator,
    growth: &dyn GrowthLaw,
    env: &EnvironmentModel,
    u0: &[f64],
    opts: &SimulationOptions,
    base_seed: u64,
    replicate: u64,
) -> Result<TrajectoryRecord> {
    check_initial(op, u0)?;
    let mut stream = EnvironmentStream::new(env, base_seed, replicate);
    let mut u = u0.to_vec();
    let mut next = vec![0.0; op.len()];
    let mut mass = Vec::with_capacity(opts.horizon + 1);
    let mut sup = Vec::with_capacity(opts.horizon + 1);
    let mut snapshots = Vec::new();
    mass.push(op.mass(&u));
    sup.push(sup_norm(&u));
    if opts.snapshot_times.contains(&0) {
        snapshots.push((0, u.clone()));
    }

    for t in 1..=opts.horizon {
        let draw = stream.sample();
        op.step_nonlinear_into(growth, draw.sigma, draw.r, &u, &mut next)?;
        std::mem::swap(&mut u, &mut next);
        let m = op.mass(&u);
        if !m.is_finite() {
            return Err(ModelError::NonFinite { generation: t });
        }
        mass.push(m);
        sup.push(sup_norm(&u));
        if opts.snapshot_times.contains(&t) {
            snapshots.push((t, u.clone()));
        }
    }

    let outcome = classify(&mass, &opts.rules);
    Ok(TrajectoryRecord {
        base_seed,
        replicate,
        mass,
        sup,
        snapshots,
        outcome,
    })
}

/// Replicates `0..count` of [`run_trajectory`].
pub fn run_replicates(
    op: &IdeOperator,
    growth: &dyn GrowthLaw,
    env: &EnvironmentModel,
    u0: &[f64],
    opts: &SimulationOptions,
    base_seed: u64,
    count: usize,
) -> Result<Vec<TrajectoryRecord>> {
    map_indices(count, |i| {
        run_trajectory(op, growth, env, u0, opts, base_seed, i as u64)
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryOptions {
    pub burn_in: usize,
    pub every: usize,
    pub samples: usize,
}

impl Default for StationaryOptions {
    fn default() -> Self {
        Self {
            burn_in: 500,
            every: 1,
            samples: 1000,
        }
    }
}

/// Masses `∫u_t` at `t = B + k·every` for `k = 1..=samples`.
pub fn stationary_sample(
    op: &IdeOperator,
    growth: &dyn GrowthLaw,
    env: &EnvironmentModel,
    u0: &[f64],
    opts: &StationaryOptions,
    base_seed: u64,
    replicate: u64,
) -> Result<Vec<f64>> {
    if opts.every == 0 {
        return Err(ModelError::invalid(
            "every",
            "sampling interval must be at least 1",
        ));
    }
    check_initial(op, u0)?;
    let mut stream = EnvironmentStream::new(env, base_seed, replicate);
    let mut u = u0.to_vec();
    let mut next = vec![0.0; op.len()];
    let total = opts.burn_in + opts.every * opts.samples;
    let mut out = Vec::with_capacity(opts.samples);
    for t in 1..=total {
        let draw = stream.sample();
        op.step_nonlinear_into(growth, draw.sigma, draw.r, &u, &mut next)?;
        std::mem::swap(&mut u, &mut next);
        if t > opts.burn_in && (t - opts.burn_in).is_multiple_of(opts.every) {
            let m = op.mass(&u);
            if !m.is_finite() {
                return Err(ModelError::NonFinite { generation: t });
            }
            out.push(m);
        }
    }
    Ok(out)
}

/// Linear-interpolated quantile of sorted data, `q ∈ [0, 1]`.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Two-sample location check: medians differ by at most the interquartile
/// range of the pooled sample.
pub fn medians_within_pooled_iqr(a: &[f64], b: &[f64]) -> bool {
    if a.is_empty() || b.is_empty() {
        return false;
    }
    let sorted = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        s
    };
    let (sa, sb) = (sorted(a), sorted(b));
    let pooled = sorted(&[a, b].concat());
    let iqr = quantile(&pooled, 0.75) - quantile(&pooled, 0.25);
    (quantile(&sa, 0.5) - quantile(&sb, 0.5)).abs() <= iqr
}

/// Largest entrywise violations of `v_t ≤ u_t ≤ w_t` along a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichReport {
    pub generations: usize,
    pub bound: f64,
    /// `max_{t,i} (v_t − u_t)_i`, nonpositive when the lower bound holds.
    pub lower_excess: f64,
    /// `max_{t,i} (u_t − w_t)_i`, nonpositive when the upper bound holds.
    pub upper_excess: f64,
    /// Largest `|u_t|_∞` seen, for scaling tolerances.
    pub scale: f64,
}

impl SandwichReport {
    pub fn holds(&self, slack: f64) -> bool {
        let tol = slack * self.scale.max(1.0);
        self.lower_excess <= tol && self.upper_excess <= tol
    }
}

/// Runs `f`, its lower envelope and its upper envelope on one shared stream.
/// The envelope bound is the a priori density bound, raised to `sup u₀` if
/// needed.
pub fn envelope_sandwich(
    op: &IdeOperator,
    map: &GrowthMap,
    env: &EnvironmentModel,
    u0: &[f64],
    horizon: usize,
    base_seed: u64,
    replicate: u64,
) -> Result<SandwichReport> {
    check_initial(op, u0)?;
    let suitability_mass = op.habitat().suitability().integral();
    let bound = density_bound(
        map,
        env.atoms().iter().map(|a| a.r),
        op.kernel().peak_density(),
        suitability_mass,
    )
    .max(sup_norm(u0));
    let (lower, upper) = map.monotone_envelopes(bound)?;

    let mut stream = EnvironmentStream::new(env, base_seed, replicate);
    let (mut u, mut v, mut w) = (u0.to_vec(), u0.to_vec(), u0.to_vec());
    let mut next = vec![0.0; op.len()];
    let mut report = SandwichReport {
        generations: horizon,
        bound,
        lower_excess: f64::NEG_INFINITY,
        upper_excess: f64::NEG_INFINITY,
        scale: sup_norm(u0),
    };
    for t in 1..=horizon {
        let draw = stream.sample();
        for (state, law) in [
            (&mut u, map as &dyn GrowthLaw),
            (&mut v, &lower as &dyn GrowthLaw),
            (&mut w, &upper as &dyn GrowthLaw),
        ] {
            op.step_nonlinear_into(law, draw.sigma, draw.r, state, &mut next)?;
            state.copy_from_slice(&next);
            if state.iter().any(|x| !x.is_finite()) {
                return Err(ModelError::NonFinite { generation: t });
            }
        }
        for i in 0..u.len() {
            report.lower_excess = report.lower_excess.max(v[i] - u[i]);
            report.upper_excess = report.upper_excess.max(u[i] - w[i]);
        }
        report.scale = report.scale.max(sup_norm(&w));
    }
    Ok(report)
}
