//! The persistence metric Λ, critical shifting speeds and the stochastic
//! spreading speed.
//!
//! Λ is the almost-sure limit of `Λ_t = (∫ ũ_t)^{1/t}` for the linearized
//! dynamics `ũ_{t+1} = ℒ_{α_t} ũ_t`. The population persists when Λ > 1.

use crate::environment::{EnvironmentModel, EnvironmentStream};
use crate::error::{ModelError, Result};
use crate::habitat::{DiscretizedHabitat, Suitability};
use crate::kernels::DispersalKernel;
use crate::operator::{IdeOperator, ShiftedKernelMatrix};
use crate::optimize::{bisect_decreasing, golden_section_minimize, is_quasiconvex};
use crate::par::map_indices;
use crate::spectral::{principal_eigen, PowerOptions};

/// Shortest horizon accepted by [`estimate_lambda`].
pub const MIN_HORIZON: usize = 100;

/// Starting density `ũ₀` for Λ estimation.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialDensity {
    /// Constant density with unit mass on the grid.
    Uniform,
    /// Caller-supplied nonnegative grid values.
    Custom(Vec<f64>),
}

impl InitialDensity {
    fn materialize(&self, op: &IdeOperator) -> Result<Vec<f64>> {
        match self {
            InitialDensity::Uniform => Ok(vec![1.0 / op.habitat().domain().length(); op.len()]),
            InitialDensity::Custom(u) => {
                if u.len() != op.len() {
                    return Err(ModelError::DimensionMismatch {
                        expected: op.len(),
                        found: u.len(),
                    });
                }
                if u.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(ModelError::invalid(
                        "initial",
                        "density must be finite and nonnegative",
                    ));
                }
                if op.mass(u) <= 0.0 {
                    return Err(ModelError::invalid("initial", "density has zero mass"));
                }
                Ok(u.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaOptions {
    pub horizon: usize,
    pub replicates: usize,
    pub base_seed: u64,
    pub initial: InitialDensity,
    /// Also run each replicate with every `r` replaced by 1 to measure `κ_T`.
    pub track_kappa: bool,
}

impl Default for LambdaOptions {
    fn default() -> Self {
        Self {
            horizon: 2000,
            replicates: 30,
            base_seed: 0,
            initial: InitialDensity::Uniform,
            track_kappa: false,
        }
    }
}

/// Λ_T for one environment stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicateLambda {
    pub replicate: u64,
    pub lambda: f64,
    pub log_lambda: f64,
    /// `(1/T) Σ ln r_t` over the draws of this replicate.
    pub mean_log_r: f64,
    /// `(1/T) ln κ_T`, where `κ_T` is the mass after `T` steps with unit growth.
    pub log_kappa_rate: Option<f64>,
}

impl ReplicateLambda {
    /// `ln Λ_T − (1/T) Σ ln r_t − (1/T) ln κ_T`, zero up to rounding.
    pub fn decomposition_residual(&self) -> Option<f64> {
        self.log_kappa_rate
            .map(|k| self.log_lambda - self.mean_log_r - k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaEstimate {
    pub horizon: usize,
    pub replicates: Vec<ReplicateLambda>,
    /// Median of the per-replicate Λ_T.
    pub lambda: f64,
    pub min: f64,
    pub max: f64,
    /// Sample standard deviation of ln Λ_T across replicates.
    pub log_sd: f64,
    /// `log_sd / √M`.
    pub log_se: f64,
    /// `R̄ = exp E[ln r]` of the environment.
    pub geometric_growth: f64,
    /// Median of `κ_T^{1/T}` when tracked.
    pub kappa_rate: Option<f64>,
}

impl LambdaEstimate {
    pub fn persists(&self) -> bool {
        self.lambda > 1.0
    }

    pub fn values(&self) -> Vec<f64> {
        self.replicates.iter().map(|r| r.lambda).collect()
    }
}

/// Running sums of one linearized trajectory.
struct LinearRun {
    /// `ln ∫ũ_t` for `t = 1..=T`; `-∞` once the mass underflows to zero.
    log_mass: Vec<f64>,
    sum_log_r: f64,
}

fn run_linear(
    op: &IdeOperator,
    u0: &[f64],
    stream: &mut EnvironmentStream<'_>,
    horizon: usize,
    unit_growth: bool,
) -> Result<LinearRun> {
    let mass0 = op.mass(u0);
    let mut acc = mass0.ln();
    let mut u: Vec<f64> = u0.iter().map(|v| v / mass0).collect();
    let mut next = vec![0.0; op.len()];
    let mut log_mass = Vec::with_capacity(horizon);
    let mut sum_log_r = 0.0;

    for t in 1..=horizon {
        let draw = stream.sample();
        sum_log_r += draw.r.ln();
        if acc == f64::NEG_INFINITY {
            log_mass.push(acc);
            continue;
        }
        let r = if unit_growth { 1.0 } else { draw.r };
        op.step_linear_into(draw.sigma, r, &u, &mut next)?;
        let m = op.mass(&next);
        if !m.is_finite() {
            return Err(ModelError::NonFinite { generation: t });
        }
        if m > 0.0 {
            acc += m.ln();
            for (ui, ni) in u.iter_mut().zip(&next) {
                *ui = ni / m;
            }
        } else {
            acc = f64::NEG_INFINITY;
        }
        log_mass.push(acc);
    }
    Ok(LinearRun {
        log_mass,
        sum_log_r,
    })
}

fn check_speed(op: &IdeOperator, env: &EnvironmentModel) -> Result<()> {
    if op.c() != env.c() {
        return Err(ModelError::invalid(
            "c",
            format!(
                "operator moves at {} but environment at {}",
                op.c(),
                env.c()
            ),
        ));
    }
    Ok(())
}

/// `Λ_t` for `t = 1..=horizon` on one replicate stream, using per-step
/// renormalization.
pub fn lambda_path(
    op: &IdeOperator,
    env: &EnvironmentModel,
    initial: &InitialDensity,
    horizon: usize,
    base_seed: u64,
    replicate: u64,
) -> Result<Vec<f64>> {
    check_speed(op, env)?;
    let u0 = initial.materialize(op)?;
    let mut stream = EnvironmentStream::new(env, base_seed, replicate);
    let run = run_linear(op, &u0, &mut stream, horizon, false)?;
    Ok(run
        .log_mass
        .iter()
        .enumerate()
        .map(|(i, l)| (l / (i + 1) as f64).exp())
        .collect())
}

/// `Λ_t = (∫ũ_t)^{1/t}` without renormalization. Overflows for long horizons;
/// intended for cross-checking [`lambda_path`].
pub fn direct_lambda_path(
    op: &IdeOperator,
    env: &EnvironmentModel,
    initial: &InitialDensity,
    horizon: usize,
    base_seed: u64,
    replicate: u64,
) -> Result<Vec<f64>> {
    check_speed(op, env)?;
    let mut u = initial.materialize(op)?;
    let mut next = vec![0.0; op.len()];
    let mut stream = EnvironmentStream::new(env, base_seed, replicate);
    let mut out = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let draw = stream.sample();
        op.step_linear_into(draw.sigma, draw.r, &u, &mut next)?;
        std::mem::swap(&mut u, &mut next);
        out.push(op.mass(&u).powf(1.0 / t as f64));
    }
    Ok(out)
}

/// Λ_T for a single replicate stream.
pub fn replicate_lambda(
    op: &IdeOperator,
    env: &EnvironmentModel,
    opts: &LambdaOptions,
    replicate: u64,
) -> Result<ReplicateLambda> {
    check_speed(op, env)?;
    let u0 = opts.initial.materialize(op)?;
    let t = opts.horizon as f64;
    let mut stream = EnvironmentStream::new(env, opts.base_seed, replicate);
    let run = run_linear(op, &u0, &mut stream, opts.horizon, false)?;
    let log_lambda = run.log_mass.last().copied().unwrap_or(0.0) / t;

    let log_kappa_rate = if opts.track_kappa {
        let mut stream = EnvironmentStream::new(env, opts.base_seed, replicate);
        let unit = run_linear(op, &u0, &mut stream, opts.horizon, true)?;
        Some(unit.log_mass.last().copied().unwrap_or(0.0) / t)
    } else {
        None
    };

    Ok(ReplicateLambda {
        replicate,
        lambda: log_lambda.exp(),
        log_lambda,
        mean_log_r: run.sum_log_r / t,
        log_kappa_rate,
    })
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Sample standard deviation (`n − 1` denominator); zero for a single value.
pub fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (ss / (n - 1) as f64).sqrt()
}

/// Monte Carlo estimate of Λ from independent replicate streams.
pub fn estimate_lambda(
    op: &IdeOperator,
    env: &EnvironmentModel,
    opts: &LambdaOptions,
) -> Result<LambdaEstimate> {
    if opts.horizon < MIN_HORIZON {
        return Err(ModelError::invalid(
            "horizon",
            format!("must be at least {MIN_HORIZON}, got {}", opts.horizon),
        ));
    }
    if opts.replicates == 0 {
        return Err(ModelError::invalid("replicates", "must be at least 1"));
    }
    check_speed(op, env)?;

    let replicates = map_indices(opts.replicates, |i| {
        replicate_lambda(op, env, opts, i as u64)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut lambdas: Vec<f64> = replicates.iter().map(|r| r.lambda).collect();
    let logs: Vec<f64> = replicates.iter().map(|r| r.log_lambda).collect();
    let log_sd = sample_sd(&logs);
    let min = lambdas.iter().copied().fold(f64::INFINITY, f64::min);
    let max = lambdas.iter().copied().fold(0.0, f64::max);
    let kappa_rate = if opts.track_kappa {
        let mut k: Vec<f64> = replicates
            .iter()
            .filter_map(|r| r.log_kappa_rate.map(f64::exp))
            .collect();
        Some(median(&mut k))
    } else {
        None
    };

    Ok(LambdaEstimate {
        horizon: opts.horizon,
        lambda: median(&mut lambdas),
        min,
        max,
        log_sd,
        log_se: log_sd / (opts.replicates as f64).sqrt(),
        geometric_growth: env.geometric_growth(),
        kappa_rate,
        replicates,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticalSpeedMethod {
    ClosedFormGaussian,
    RootFind,
}

impl CriticalSpeedMethod {
    pub fn name(self) -> &'static str {
        match self {
            CriticalSpeedMethod::ClosedFormGaussian => "closed-form-gaussian",
            CriticalSpeedMethod::RootFind => "root-find",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalSpeedResult {
    pub c_star: f64,
    pub method: CriticalSpeedMethod,
    /// Final bisection bracket; `None` for the closed form or when `c* = 0`.
    pub bracket: Option<(f64, f64)>,
    /// `Λ(c*) − 1` at the returned speed (root-find only).
    pub residual: Option<f64>,
}

fn require_unshifted(env: &EnvironmentModel) -> Result<()> {
    if env.has_zero_shifts() {
        Ok(())
    } else {
        Err(ModelError::Unsupported {
            requirement: "an environment without random shifts (σ ≡ 0)",
        })
    }
}

/// `Λ(c) = R̄ e^{−c²/(2v)} λ₀` for a Gaussian kernel without random shifts.
pub fn gaussian_lambda(lambda0: f64, c: f64, variance: f64, env: &EnvironmentModel) -> f64 {
    (env.log_growth_mean() + lambda0.ln() - c * c / (2.0 * variance)).exp()
}

/// `c* = √(2v (ln λ₀ + E[ln r]))`, or 0 when `λ₀ R̄ ≤ 1`.
pub fn critical_speed_gaussian(
    lambda0: f64,
    variance: f64,
    env: &EnvironmentModel,
) -> Result<CriticalSpeedResult> {
    if !(lambda0.is_finite() && lambda0 > 0.0) {
        return Err(ModelError::invalid(
            "lambda0",
            format!("must be finite and > 0, got {lambda0}"),
        ));
    }
    if !(variance.is_finite() && variance > 0.0) {
        return Err(ModelError::invalid(
            "variance",
            format!("must be finite and > 0, got {variance}"),
        ));
    }
    require_unshifted(env)?;
    let c_star = if lambda0 * env.geometric_growth() <= 1.0 {
        0.0
    } else {
        (2.0 * variance * (lambda0.ln() + env.log_growth_mean())).sqrt()
    };
    Ok(CriticalSpeedResult {
        c_star,
        method: CriticalSpeedMethod::ClosedFormGaussian,
        bracket: None,
        residual: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootFindOptions {
    /// Upper end of the bracket `[0, c_hi]` in km/generation.
    pub c_hi: f64,
    /// Width of the final bisection bracket.
    pub tol: f64,
    pub grid_points: usize,
    /// Interior points where monotonicity of Λ(c) is checked.
    pub probes: usize,
    pub power: PowerOptions,
}

impl Default for RootFindOptions {
    fn default() -> Self {
        Self {
            c_hi: 50.0,
            tol: 1e-6,
            grid_points: 512,
            probes: 4,
            power: PowerOptions::default(),
        }
    }
}

/// `c ↦ R̄ λ_c` on the unshifted grid of `suitability`.
pub struct ShiftedGrowth {
    kernel: DispersalKernel,
    habitat: DiscretizedHabitat,
    geometric_growth: f64,
    power: PowerOptions,
}

impl ShiftedGrowth {
    pub fn new(
        kernel: DispersalKernel,
        suitability: &Suitability,
        env: &EnvironmentModel,
        grid_points: usize,
        power: PowerOptions,
    ) -> Result<Self> {
        require_unshifted(env)?;
        Ok(Self {
            kernel,
            habitat: DiscretizedHabitat::unshifted(suitability, grid_points)?,
            geometric_growth: env.geometric_growth(),
            power,
        })
    }

    /// Principal eigenvalue `λ_c` of `𝒦_c`.
    pub fn eigenvalue(&self, c: f64) -> Result<f64> {
        let matrix = ShiftedKernelMatrix::build(&self.kernel, &self.habitat, c);
        let column = self.habitat.column(0.0)?;
        Ok(principal_eigen(&matrix, column, self.habitat.step(), self.power)?.eigenvalue)
    }

    /// `Λ(c) = R̄ λ_c`.
    pub fn lambda(&self, c: f64) -> Result<f64> {
        Ok(self.geometric_growth * self.eigenvalue(c)?)
    }
}

/// Critical speed by bisection on `c ↦ R̄ λ_c − 1`, for any kernel.
pub fn critical_speed_rootfind(
    kernel: DispersalKernel,
    suitability: &Suitability,
    env: &EnvironmentModel,
    opts: RootFindOptions,
) -> Result<CriticalSpeedResult> {
    if !(opts.c_hi.is_finite() && opts.c_hi > 0.0) {
        return Err(ModelError::invalid(
            "c_hi",
            format!("must be finite and > 0, got {}", opts.c_hi),
        ));
    }
    let growth = ShiftedGrowth::new(kernel, suitability, env, opts.grid_points, opts.power)?;

    let lambda0 = growth.lambda(0.0)?;
    if lambda0 <= 1.0 {
        return Ok(CriticalSpeedResult {
            c_star: 0.0,
            method: CriticalSpeedMethod::RootFind,
            bracket: None,
            residual: Some(lambda0 - 1.0),
        });
    }
    let lambda_hi = growth.lambda(opts.c_hi)?;
    if lambda_hi > 1.0 {
        return Err(ModelError::BracketTooNarrow {
            c_hi: opts.c_hi,
            lambda_hi,
        });
    }

    let mut previous = lambda0;
    for k in 1..=opts.probes + 1 {
        let c = opts.c_hi * k as f64 / (opts.probes + 1) as f64;
        let value = if k == opts.probes + 1 {
            lambda_hi
        } else {
            growth.lambda(c)?
        };
        if value > previous || (value == previous && value > 0.0) {
            return Err(ModelError::NonMonotone { c });
        }
        previous = value;
    }

    let (lo, hi) = bisect_decreasing(
        |c| Ok::<_, ModelError>(growth.lambda(c)? - 1.0),
        0.0,
        opts.c_hi,
        opts.tol,
    )?;
    let c_star = 0.5 * (lo + hi);
    Ok(CriticalSpeedResult {
        c_star,
        method: CriticalSpeedMethod::RootFind,
        bracket: Some((lo, hi)),
        residual: Some(growth.lambda(c_star)? - 1.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpreadingStatus {
    /// `E[ln r] > 0`; the speed is the minimum of `h`.
    Positive,
    /// `E[ln r] ≤ 0`; no positive spreading speed, reported as 0.
    NotPositive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpreadingSpeed {
    pub speed: f64,
    pub s_star: Option<f64>,
    pub status: SpreadingStatus,
}

/// `h(s) = (E[ln r] + ln M(s)) / s`, or `None` outside the MGF domain.
pub fn spreading_objective(
    kernel: &DispersalKernel,
    env: &EnvironmentModel,
    s: f64,
) -> Option<f64> {
    if s <= 0.0 {
        return None;
    }
    kernel.log_mgf(s).map(|l| (env.log_growth_mean() + l) / s)
}

/// Interval of `s` searched for the minimum of `h`.
pub fn spreading_search_interval(kernel: &DispersalKernel, env: &EnvironmentModel) -> (f64, f64) {
    if let Some(alpha) = kernel.mgf_abscissa() {
        let eps = 1e-6 * alpha;
        return (eps, alpha - eps);
    }
    let h = |s: f64| spreading_objective(kernel, env, s).unwrap_or(f64::INFINITY);
    let mut s = 1.0 / kernel.std_dev();
    while h(2.0 * s) <= h(s) {
        s *= 2.0;
    }
    let s_max = 2.0 * s;
    (1e-6 * s_max, s_max)
}

/// Stochastic spreading speed `c̄* = inf_{s>0} h(s)`.
pub fn spreading_speed(kernel: &DispersalKernel, env: &EnvironmentModel) -> SpreadingSpeed {
    if env.log_growth_mean() <= 0.0 {
        return SpreadingSpeed {
            speed: 0.0,
            s_star: None,
            status: SpreadingStatus::NotPositive,
        };
    }
    let (a, b) = spreading_search_interval(kernel, env);
    let h = |s: f64| spreading_objective(kernel, env, s).unwrap_or(f64::INFINITY);
    let (s_star, speed) = golden_section_minimize(h, a, b, 1e-12 * b, 500);
    SpreadingSpeed {
        speed,
        s_star: Some(s_star),
        status: SpreadingStatus::Positive,
    }
}

/// `h` on `points` evenly spaced nodes of the search interval, paired with `s`.
pub fn spreading_probe(
    kernel: &DispersalKernel,
    env: &EnvironmentModel,
    points: usize,
) -> Vec<(f64, f64)> {
    let (a, b) = spreading_search_interval(kernel, env);
    (0..points)
        .map(|i| {
            let s = a + (b - a) * i as f64 / (points - 1).max(1) as f64;
            (
                s,
                spreading_objective(kernel, env, s).unwrap_or(f64::INFINITY),
            )
        })
        .collect()
}

/// Whether `h` looks quasiconvex on a probe grid of the search interval.
pub fn spreading_objective_is_quasiconvex(
    kernel: &DispersalKernel,
    env: &EnvironmentModel,
    points: usize,
) -> bool {
    let values: Vec<f64> = spreading_probe(kernel, env, points)
        .into_iter()
        .map(|(_, h)| h)
        .collect();
    is_quasiconvex(&values, 1e-12)
}
