//! WebAssembly entry points for the static demo in `web/`.
//!
//! Each export takes plain numbers and returns a flat `Float64Array` (or a
//! small result object) so the page needs no glue beyond the generated
//! bindings. The same computations are exposed as ordinary Rust functions
//! for native tests.

use ide_persist::persistence::{critical_speed_rootfind, RootFindOptions};
use ide_persist::simulate::run_trajectory;
use ide_persist::spectral::{dispersal_success_approx, modified_dispersal_success_approx};
use ide_persist::{
    Atom, ClassificationRules, DispersalKernel, EnvironmentModel, GrowthMap, IdeOperator, Interval,
    KernelFamily, ModelError, PowerOptions, SimulationOptions, Suitability,
};
use wasm_bindgen::prelude::*;

pub type Result<T> = std::result::Result<T, ModelError>;

fn family(name: &str) -> Result<KernelFamily> {
    match name {
        "gaussian" => Ok(KernelFamily::Gaussian),
        "laplace" => Ok(KernelFamily::Laplace),
        other => Err(ModelError::invalid(
            "kernel",
            format!("unknown family `{other}`"),
        )),
    }
}

fn patch(length: f64) -> Result<Suitability> {
    Ok(Suitability::indicator(Interval::centered(length)?))
}

/// `points` log-spaced variances from `v_min` to exactly `v_max`.
pub fn log_grid(v_min: f64, v_max: f64, points: usize) -> Result<Vec<f64>> {
    if !(v_min > 0.0 && v_max > v_min && v_max.is_finite()) {
        return Err(ModelError::invalid("variance", "need 0 < v_min < v_max"));
    }
    if points < 2 {
        return Err(ModelError::invalid("points", "need at least 2"));
    }
    let (a, b) = (v_min.ln(), v_max.ln());
    let mut v: Vec<f64> = (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect();
    v[0] = v_min;
    v[points - 1] = v_max;
    Ok(v)
}

/// Rows `[v, λ₀, λ̄₀, λ̂₀]` for a centred patch of `patch_length` km.
pub fn eigen_rows(
    kernel: &str,
    patch_length: f64,
    v_min: f64,
    v_max: f64,
    points: usize,
    grid_points: usize,
) -> Result<Vec<[f64; 4]>> {
    let family = family(kernel)?;
    let suitability = patch(patch_length)?;
    let env = EnvironmentModel::deterministic(1.0, 0.0)?;
    log_grid(v_min, v_max, points)?
        .into_iter()
        .map(|v| {
            let k = DispersalKernel::new(family, v)?;
            let op = IdeOperator::for_environment(k, &suitability, &env, grid_points)?;
            let lambda0 = op.principal_eigen(0.0, PowerOptions::default())?.eigenvalue;
            let support = suitability.support();
            Ok([
                v,
                lambda0,
                dispersal_success_approx(&k, support),
                modified_dispersal_success_approx(&k, support),
            ])
        })
        .collect()
}

/// Rows `[v, c*]` for an environment without shifts where `r` is `r_good`
/// with probability `p_good` and `r_bad` otherwise.
#[allow(clippy::too_many_arguments)]
pub fn critical_speed_rows(
    kernel: &str,
    patch_length: f64,
    r_good: f64,
    r_bad: f64,
    p_good: f64,
    v_min: f64,
    v_max: f64,
    points: usize,
    grid_points: usize,
) -> Result<Vec<[f64; 2]>> {
    let family = family(kernel)?;
    let suitability = patch(patch_length)?;
    let env = EnvironmentModel::new(
        vec![
            Atom::new(0.0, r_good, p_good),
            Atom::new(0.0, r_bad, 1.0 - p_good),
        ],
        0.0,
    )?;
    let opts = RootFindOptions {
        grid_points,
        tol: 1e-4,
        ..RootFindOptions::default()
    };
    log_grid(v_min, v_max, points)?
        .into_iter()
        .map(|v| {
            let k = DispersalKernel::new(family, v)?;
            Ok([
                v,
                critical_speed_rootfind(k, &suitability, &env, opts)?.c_star,
            ])
        })
        .collect()
}

/// One nonlinear trajectory from a uniform start of `initial_density`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub mass: Vec<f64>,
    pub nodes: Vec<f64>,
    pub final_density: Vec<f64>,
    pub outcome: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryParams {
    pub variance: f64,
    pub patch_length: f64,
    pub c: f64,
    pub sigma_spread: f64,
    pub r_good: f64,
    pub r_bad: f64,
    pub carrying_capacity: f64,
    pub initial_density: f64,
    pub horizon: usize,
    pub grid_points: usize,
    pub seed: u64,
}

/// Beverton–Holt dynamics under the two-state environment: the good year
/// shifts the patch by `−sigma_spread`, the bad year by `+sigma_spread`.
pub fn trajectory(kernel: &str, p: &TrajectoryParams) -> Result<Trajectory> {
    let k = DispersalKernel::new(family(kernel)?, p.variance)?;
    let suitability = patch(p.patch_length)?;
    let env = EnvironmentModel::good_bad(-p.sigma_spread, p.sigma_spread, p.r_bad, p.r_good, p.c)?;
    let growth = GrowthMap::beverton_holt(p.carrying_capacity)?;
    let op = IdeOperator::for_environment(k, &suitability, &env, p.grid_points)?;
    if !(p.initial_density.is_finite() && p.initial_density > 0.0) {
        return Err(ModelError::invalid(
            "initial_density",
            "must be finite and > 0",
        ));
    }
    let u0 = vec![p.initial_density; op.len()];
    let rules = ClassificationRules::default();
    let opts = SimulationOptions {
        horizon: p.horizon,
        snapshot_times: vec![p.horizon],
        rules,
    };
    let mut record = run_trajectory(&op, &growth, &env, &u0, &opts, p.seed, 0)?;
    let final_density = record.snapshots.pop().map(|(_, u)| u).unwrap_or_default();
    Ok(Trajectory {
        mass: record.mass,
        nodes: op.habitat().nodes().to_vec(),
        final_density,
        outcome: record.outcome.name(),
    })
}

fn js(err: ModelError) -> JsError {
    JsError::new(&err.to_string())
}

/// Flattened `[v, λ₀, λ̄₀, λ̂₀, v, …]`.
#[wasm_bindgen(js_name = eigenCurve)]
pub fn eigen_curve(
    kernel: &str,
    patch_length: f64,
    v_min: f64,
    v_max: f64,
    points: usize,
    grid_points: usize,
) -> std::result::Result<Vec<f64>, JsError> {
    eigen_rows(kernel, patch_length, v_min, v_max, points, grid_points)
        .map(|rows| rows.concat())
        .map_err(js)
}

/// Flattened `[v, c*, v, …]`.
#[wasm_bindgen(js_name = criticalSpeedCurve)]
#[allow(clippy::too_many_arguments)]
pub fn critical_speed_curve(
    kernel: &str,
    patch_length: f64,
    r_good: f64,
    r_bad: f64,
    p_good: f64,
    v_min: f64,
    v_max: f64,
    points: usize,
    grid_points: usize,
) -> std::result::Result<Vec<f64>, JsError> {
    critical_speed_rows(
        kernel,
        patch_length,
        r_good,
        r_bad,
        p_good,
        v_min,
        v_max,
        points,
        grid_points,
    )
    .map(|rows| rows.concat())
    .map_err(js)
}

#[wasm_bindgen]
pub struct Simulation(Trajectory);

#[wasm_bindgen]
impl Simulation {
    #[wasm_bindgen(getter)]
    pub fn mass(&self) -> Vec<f64> {
        self.0.mass.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn nodes(&self) -> Vec<f64> {
        self.0.nodes.clone()
    }

    #[wasm_bindgen(getter, js_name = finalDensity)]
    pub fn final_density(&self) -> Vec<f64> {
        self.0.final_density.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn outcome(&self) -> String {
        self.0.outcome.to_string()
    }
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn simulate(
    kernel: &str,
    variance: f64,
    patch_length: f64,
    c: f64,
    sigma_spread: f64,
    r_good: f64,
    r_bad: f64,
    horizon: usize,
    grid_points: usize,
    seed: u64,
) -> std::result::Result<Simulation, JsError> {
    let params = TrajectoryParams {
        variance,
        patch_length,
        c,
        sigma_spread,
        r_good,
        r_bad,
        carrying_capacity: 1.0,
        initial_density: 0.5,
        horizon,
        grid_points,
        seed,
    };
    trajectory(kernel, &params).map(Simulation).map_err(js)
}
