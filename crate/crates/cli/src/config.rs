//! Experiment configuration: TOML with dotted sections, per-command defaults,
//! flag overrides and validation with field paths.

use ide_persist::{
    Atom, ClassificationRules, DispersalKernel, EnvironmentModel, GrowthFamily, GrowthMap,
    Interval, KernelFamily, LambdaOptions, PowerOptions, Suitability,
};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Eigen,
    CriticalSpeed,
    LambdaSweep,
    VarianceEffect,
    Simulate,
}

impl Command {
    pub const ALL: [Command; 5] = [
        Command::Eigen,
        Command::CriticalSpeed,
        Command::LambdaSweep,
        Command::VarianceEffect,
        Command::Simulate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Eigen => "eigen",
            Command::CriticalSpeed => "critical-speed",
            Command::LambdaSweep => "lambda-sweep",
            Command::VarianceEffect => "variance-effect",
            Command::Simulate => "simulate",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelChoice {
    Gaussian,
    Laplace,
}

impl From<KernelChoice> for KernelFamily {
    fn from(k: KernelChoice) -> Self {
        match k {
            KernelChoice::Gaussian => KernelFamily::Gaussian,
            KernelChoice::Laplace => KernelFamily::Laplace,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthChoice {
    BevertonHolt,
    Ricker,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    Log,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    pub family: KernelChoice,
    /// Variance for single-variance commands.
    pub variance_km2: f64,
    /// Explicit sweep; when empty the min/max/points range is used.
    pub variances_km2: Vec<f64>,
    pub variance_min_km2: f64,
    pub variance_max_km2: f64,
    pub variance_points: usize,
    pub variance_spacing: Spacing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthSection {
    pub family: GrowthChoice,
    pub carrying_capacity_per_km: f64,
}

/// Atoms are given column-wise: atom `i` is
/// `(sigma_km_per_gen[i], r_per_gen[i], prob[i])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSection {
    pub c_km_per_gen: f64,
    pub sigma_km_per_gen: Vec<f64>,
    pub r_per_gen: Vec<f64>,
    pub prob: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HabitatSection {
    pub patch_start_km: f64,
    pub patch_end_km: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsSection {
    pub grid_points: usize,
    pub horizon: usize,
    pub replicates: usize,
    pub seed: u64,
    pub eigen_tol: f64,
    pub eigen_max_iter: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub initial_density_per_km: f64,
    pub extinction_floor_per_km: f64,
    pub extinction_window_gen: usize,
    pub persistence_window_gen: usize,
    pub persistence_floor_per_km: f64,
    pub persistence_tolerance: f64,
    pub snapshot_times_gen: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarianceEffectSection {
    pub sigma_spreads_km_per_gen: Vec<f64>,
    pub r_spreads_per_gen: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
    pub csv: bool,
    pub svg: bool,
    pub snapshots: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub kernel: KernelSection,
    pub growth: GrowthSection,
    pub env: EnvSection,
    pub habitat: HabitatSection,
    pub numerics: NumericsSection,
    pub simulate: SimulateSection,
    pub variance_effect: VarianceEffectSection,
    pub output: OutputSection,
}

impl Config {
    /// Defaults for `command`: the butterfly environment on a 10 km patch.
    pub fn defaults(command: Command) -> Self {
        let mut cfg = Config {
            kernel: KernelSection {
                family: KernelChoice::Gaussian,
                variance_km2: 25.0,
                variances_km2: Vec::new(),
                variance_min_km2: 0.01,
                variance_max_km2: 150.0,
                variance_points: 60,
                variance_spacing: Spacing::Log,
            },
            growth: GrowthSection {
                family: GrowthChoice::BevertonHolt,
                carrying_capacity_per_km: 1.0,
            },
            env: EnvSection {
                c_km_per_gen: 3.25,
                sigma_km_per_gen: vec![-1.36, 1.36],
                r_per_gen: vec![4.85, 2.07],
                prob: vec![0.5, 0.5],
            },
            habitat: HabitatSection {
                patch_start_km: -5.0,
                patch_end_km: 5.0,
            },
            numerics: NumericsSection {
                grid_points: 512,
                horizon: 2000,
                replicates: 30,
                seed: 0,
                eigen_tol: 1e-10,
                eigen_max_iter: 100_000,
            },
            simulate: SimulateSection {
                initial_density_per_km: 0.5,
                extinction_floor_per_km: 1e-10,
                extinction_window_gen: 50,
                persistence_window_gen: 500,
                persistence_floor_per_km: 1e-6,
                persistence_tolerance: 0.10,
                snapshot_times_gen: Vec::new(),
            },
            variance_effect: VarianceEffectSection {
                sigma_spreads_km_per_gen: vec![0.0, 0.5, 1.0, 1.36, 2.0, 2.5, 3.0],
                r_spreads_per_gen: vec![0.0, 0.5, 1.0, 1.39, 2.0, 2.5, 3.0, 3.3],
            },
            output: OutputSection {
                dir: "out".into(),
                csv: true,
                svg: true,
                snapshots: false,
            },
        };
        match command {
            Command::Eigen | Command::VarianceEffect => {}
            Command::CriticalSpeed => cfg.env.sigma_km_per_gen = vec![0.0, 0.0],
            Command::LambdaSweep => {
                cfg.kernel.variance_min_km2 = 0.1;
                cfg.kernel.variance_points = 20;
            }
            Command::Simulate => {
                cfg.numerics.horizon = 3000;
                cfg.numerics.replicates = 10;
            }
        }
        cfg
    }

    pub fn variances(&self) -> Vec<f64> {
        let k = &self.kernel;
        if !k.variances_km2.is_empty() {
            return k.variances_km2.clone();
        }
        let n = k.variance_points;
        if n == 1 {
            return vec![k.variance_min_km2];
        }
        (0..n)
            .map(|i| {
                if i == 0 {
                    return k.variance_min_km2;
                }
                if i == n - 1 {
                    return k.variance_max_km2;
                }
                let t = i as f64 / (n - 1) as f64;
                match k.variance_spacing {
                    Spacing::Log => {
                        let (a, b) = (k.variance_min_km2.ln(), k.variance_max_km2.ln());
                        (a + t * (b - a)).exp()
                    }
                    Spacing::Linear => {
                        k.variance_min_km2 + t * (k.variance_max_km2 - k.variance_min_km2)
                    }
                }
            })
            .collect()
    }

    pub fn patch(&self) -> Result<Interval, CliError> {
        Interval::new(self.habitat.patch_start_km, self.habitat.patch_end_km)
            .map_err(CliError::compute)
    }

    pub fn suitability(&self) -> Result<Suitability, CliError> {
        Ok(Suitability::indicator(self.patch()?))
    }

    pub fn environment(&self) -> Result<EnvironmentModel, CliError> {
        let e = &self.env;
        let atoms = e
            .sigma_km_per_gen
            .iter()
            .zip(&e.r_per_gen)
            .zip(&e.prob)
            .map(|((&s, &r), &p)| Atom::new(s, r, p))
            .collect();
        EnvironmentModel::new(atoms, e.c_km_per_gen).map_err(CliError::compute)
    }

    pub fn kernel(&self, family: KernelFamily, variance: f64) -> Result<DispersalKernel, CliError> {
        DispersalKernel::new(family, variance).map_err(CliError::compute)
    }

    pub fn growth_map(&self) -> Result<GrowthMap, CliError> {
        let family = match self.growth.family {
            GrowthChoice::BevertonHolt => GrowthFamily::BevertonHolt,
            GrowthChoice::Ricker => GrowthFamily::Ricker,
        };
        GrowthMap::new(family, self.growth.carrying_capacity_per_km).map_err(CliError::compute)
    }

    pub fn power(&self) -> PowerOptions {
        PowerOptions {
            tol: self.numerics.eigen_tol,
            max_iter: self.numerics.eigen_max_iter,
        }
    }

    pub fn lambda_options(&self) -> LambdaOptions {
        LambdaOptions {
            horizon: self.numerics.horizon,
            replicates: self.numerics.replicates,
            base_seed: self.numerics.seed,
            ..LambdaOptions::default()
        }
    }

    pub fn rules(&self) -> ClassificationRules {
        let s = &self.simulate;
        ClassificationRules {
            extinction_floor: s.extinction_floor_per_km,
            extinction_window: s.extinction_window_gen,
            persistence_window: s.persistence_window_gen,
            persistence_floor: s.persistence_floor_per_km,
            persistence_tolerance: s.persistence_tolerance,
        }
    }

    /// Every field that affects results, as TOML. The output directory is
    /// left out so a rerun can write elsewhere.
    pub fn reproducible_toml(&self) -> String {
        let mut table = Table::try_from(self).expect("config serializes");
        if let Some(Value::Table(output)) = table.get_mut("output") {
            output.remove("dir");
        }
        toml::to_string(&table).expect("config serializes")
    }

    pub fn validate(&self, command: Command) -> Result<(), CliError> {
        let mut v = Validator::default();
        let k = &self.kernel;
        v.positive("kernel.variance_km2", k.variance_km2);
        for (i, &x) in k.variances_km2.iter().enumerate() {
            v.positive(&format!("kernel.variances_km2[{i}]"), x);
        }
        if k.variances_km2.is_empty() {
            v.positive("kernel.variance_min_km2", k.variance_min_km2);
            v.check(
                "kernel.variance_max_km2",
                k.variance_max_km2 >= k.variance_min_km2,
                || {
                    format!(
                        "must be ≥ kernel.variance_min_km2, got {}",
                        k.variance_max_km2
                    )
                },
            );
            v.check("kernel.variance_points", k.variance_points >= 1, || {
                "must be ≥ 1".into()
            });
        }

        v.positive(
            "growth.carrying_capacity_per_km",
            self.growth.carrying_capacity_per_km,
        );

        let e = &self.env;
        v.check(
            "env.c_km_per_gen",
            e.c_km_per_gen.is_finite() && e.c_km_per_gen >= 0.0,
            || format!("must be finite and ≥ 0, got {}", e.c_km_per_gen),
        );
        v.check(
            "env.sigma_km_per_gen",
            !e.sigma_km_per_gen.is_empty(),
            || "needs at least one atom".into(),
        );
        v.check(
            "env.r_per_gen",
            e.r_per_gen.len() == e.sigma_km_per_gen.len(),
            || {
                format!(
                    "has {} entries, env.sigma_km_per_gen has {}",
                    e.r_per_gen.len(),
                    e.sigma_km_per_gen.len()
                )
            },
        );
        v.check("env.prob", e.prob.len() == e.sigma_km_per_gen.len(), || {
            format!(
                "has {} entries, env.sigma_km_per_gen has {}",
                e.prob.len(),
                e.sigma_km_per_gen.len()
            )
        });
        for (i, &s) in e.sigma_km_per_gen.iter().enumerate() {
            v.check(&format!("env.sigma_km_per_gen[{i}]"), s.is_finite(), || {
                "must be finite".into()
            });
        }
        for (i, &r) in e.r_per_gen.iter().enumerate() {
            v.positive(&format!("env.r_per_gen[{i}]"), r);
        }
        for (i, &p) in e.prob.iter().enumerate() {
            v.check(&format!("env.prob[{i}]"), p.is_finite() && p >= 0.0, || {
                format!("must be ≥ 0, got {p}")
            });
        }
        let total: f64 = e.prob.iter().sum();
        v.check("env.prob", (total - 1.0).abs() <= 1e-12, || {
            format!("must sum to 1, sums to {total}")
        });

        let h = &self.habitat;
        v.check(
            "habitat.patch_end_km",
            h.patch_end_km > h.patch_start_km && h.patch_end_km.is_finite(),
            || format!("must exceed habitat.patch_start_km, got {}", h.patch_end_km),
        );
        v.check(
            "habitat.patch_start_km",
            h.patch_start_km.is_finite(),
            || "must be finite".into(),
        );

        let n = &self.numerics;
        v.check(
            "numerics.grid_points",
            n.grid_points >= ide_persist::habitat::MIN_GRID_POINTS,
            || {
                format!(
                    "must be ≥ {}, got {}",
                    ide_persist::habitat::MIN_GRID_POINTS,
                    n.grid_points
                )
            },
        );
        let min_horizon = match command {
            Command::Simulate => 1,
            _ => ide_persist::persistence::MIN_HORIZON,
        };
        v.check("numerics.horizon", n.horizon >= min_horizon, || {
            format!("must be ≥ {min_horizon}, got {}", n.horizon)
        });
        v.check("numerics.replicates", n.replicates >= 1, || {
            "must be ≥ 1".into()
        });
        v.check("numerics.seed", i64::try_from(n.seed).is_ok(), || {
            format!("must be ≤ {}, got {}", i64::MAX, n.seed)
        });
        v.positive("numerics.eigen_tol", n.eigen_tol);
        v.check("numerics.eigen_max_iter", n.eigen_max_iter >= 1, || {
            "must be ≥ 1".into()
        });

        let s = &self.simulate;
        v.positive("simulate.initial_density_per_km", s.initial_density_per_km);
        v.positive(
            "simulate.extinction_floor_per_km",
            s.extinction_floor_per_km,
        );
        v.check(
            "simulate.extinction_window_gen",
            s.extinction_window_gen >= 1,
            || "must be ≥ 1".into(),
        );
        v.check(
            "simulate.persistence_window_gen",
            s.persistence_window_gen >= 1,
            || "must be ≥ 1".into(),
        );
        v.positive(
            "simulate.persistence_floor_per_km",
            s.persistence_floor_per_km,
        );
        v.check(
            "simulate.persistence_tolerance",
            s.persistence_tolerance >= 0.0,
            || "must be ≥ 0".into(),
        );
        for (i, &t) in s.snapshot_times_gen.iter().enumerate() {
            v.check(
                &format!("simulate.snapshot_times_gen[{i}]"),
                t <= n.horizon,
                || format!("{t} is past numerics.horizon = {}", n.horizon),
            );
        }

        let ve = &self.variance_effect;
        for (i, &x) in ve.sigma_spreads_km_per_gen.iter().enumerate() {
            v.check(
                &format!("variance_effect.sigma_spreads_km_per_gen[{i}]"),
                x.is_finite() && x >= 0.0,
                || format!("must be ≥ 0, got {x}"),
            );
        }
        for (i, &x) in ve.r_spreads_per_gen.iter().enumerate() {
            v.check(
                &format!("variance_effect.r_spreads_per_gen[{i}]"),
                x.is_finite() && x >= 0.0,
                || format!("must be ≥ 0, got {x}"),
            );
        }

        match command {
            Command::CriticalSpeed => {
                v.check("kernel.family", k.family == KernelChoice::Gaussian, || {
                    "critical-speed uses the Gaussian closed form; set it to \"gaussian\"".into()
                });
                v.check(
                    "env.sigma_km_per_gen",
                    e.sigma_km_per_gen.iter().all(|&s| s == 0.0),
                    || "critical-speed needs σ ≡ 0; set every shift to 0".into(),
                );
            }
            Command::VarianceEffect => {
                let two_halves = e.prob.len() == 2 && e.prob.iter().all(|&p| p == 0.5);
                v.check("env.prob", two_halves, || {
                    "variance-effect needs two atoms with probability 0.5".into()
                });
                if two_halves && e.r_per_gen.len() == 2 {
                    let mean = 0.5 * (e.r_per_gen[0] + e.r_per_gen[1]);
                    for (i, &x) in ve.r_spreads_per_gen.iter().enumerate() {
                        v.check(
                            &format!("variance_effect.r_spreads_per_gen[{i}]"),
                            x < mean,
                            || format!("{x} would push a growth rate to ≤ 0 (mean r is {mean})"),
                        );
                    }
                }
            }
            _ => {}
        }
        v.finish()
    }
}

#[derive(Default)]
struct Validator {
    errors: Vec<String>,
}

impl Validator {
    fn check(&mut self, path: &str, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.errors.push(format!("{path}: {}", msg()));
        }
    }

    fn positive(&mut self, path: &str, x: f64) {
        self.check(path, x.is_finite() && x > 0.0, || {
            format!("must be finite and > 0, got {x}")
        });
    }

    fn finish(self) -> Result<(), CliError> {
        if self.errors.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(self.errors.join("\n")))
        }
    }
}

/// Overrides coming from command-line flags, applied after the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<String>,
    pub replicates: Option<usize>,
    pub horizon: Option<usize>,
    pub grid_points: Option<usize>,
    pub no_svg: bool,
    /// `key=value` pairs with dotted keys and TOML values.
    pub set: Vec<String>,
}

/// Parses `text` as a config file.
pub fn parse_table(text: &str, origin: &str) -> Result<Table, CliError> {
    text.parse::<Table>()
        .map_err(|e| CliError::Config(format!("{origin}: {}", e.to_string().trim_end())))
}

/// Defaults for `command`, overlaid with `file` and then `overrides`.
pub fn resolve(
    command: Command,
    file: Option<Table>,
    overrides: &Overrides,
) -> Result<Config, CliError> {
    let defaults = Table::try_from(Config::defaults(command)).expect("defaults serialize");
    let mut merged = defaults.clone();
    if let Some(file) = file {
        check_keys(&file, &defaults, "")?;
        merge(&mut merged, file);
    }
    for assignment in &overrides.set {
        let (path, value) = parse_assignment(assignment)?;
        set_path(&mut merged, &defaults, &path, value)?;
    }
    let mut flags = Vec::new();
    if let Some(s) = overrides.seed {
        let s = i64::try_from(s)
            .map_err(|_| CliError::Config(format!("--seed: must be ≤ {}, got {s}", i64::MAX)))?;
        flags.push(("numerics.seed", Value::Integer(s)));
    }
    for (key, val) in [
        ("numerics.replicates", overrides.replicates),
        ("numerics.horizon", overrides.horizon),
        ("numerics.grid_points", overrides.grid_points),
    ] {
        if let Some(v) = val {
            flags.push((key, Value::Integer(v as i64)));
        }
    }
    if let Some(dir) = &overrides.out {
        flags.push(("output.dir", Value::String(dir.clone())));
    }
    if overrides.no_svg {
        flags.push(("output.svg", Value::Boolean(false)));
    }
    for (key, value) in flags {
        set_path(&mut merged, &defaults, key, value)?;
    }

    let cfg: Config = Value::Table(merged)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(e.to_string().trim_end().to_string()))?;
    cfg.validate(command)?;
    Ok(cfg)
}

fn check_keys(user: &Table, reference: &Table, prefix: &str) -> Result<(), CliError> {
    for (key, value) in user {
        let path = if prefix.is_empty() {
            key.clone()
        } else {
            format!("{prefix}.{key}")
        };
        match (reference.get(key), value) {
            (None, _) => return Err(unknown_key(&path, reference)),
            (Some(Value::Table(r)), Value::Table(u)) => check_keys(u, r, &path)?,
            (Some(Value::Table(_)), _) => {
                return Err(CliError::Config(format!("{path}: expected a table")));
            }
            _ => {}
        }
    }
    Ok(())
}

fn unknown_key(path: &str, reference: &Table) -> CliError {
    let known: Vec<&str> = reference.keys().map(String::as_str).collect();
    CliError::Config(format!(
        "{path}: unknown key (expected one of: {})",
        known.join(", ")
    ))
}

fn merge(base: &mut Table, overlay: Table) {
    for (key, value) in overlay {
        match (base.get_mut(&key), value) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

fn parse_assignment(text: &str) -> Result<(String, Value), CliError> {
    let (key, raw) = text
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set {text}: expected KEY=VALUE")))?;
    let key = key.trim().to_string();
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => Value::String(raw.to_string()),
    };
    Ok((key, value))
}

fn set_path(
    table: &mut Table,
    reference: &Table,
    path: &str,
    value: Value,
) -> Result<(), CliError> {
    let parts: Vec<&str> = path.split('.').collect();
    let (last, sections) = parts.split_last().expect("split yields one part");
    let mut node = table;
    let mut reference = reference;
    for (depth, part) in sections.iter().enumerate() {
        let here = parts[..=depth].join(".");
        reference = match reference.get(*part) {
            Some(Value::Table(t)) => t,
            _ => return Err(unknown_key(&here, reference)),
        };
        node = match node.get_mut(*part) {
            Some(Value::Table(t)) => t,
            _ => return Err(CliError::Config(format!("{here}: expected a table"))),
        };
    }
    match reference.get(*last) {
        Some(Value::Table(_)) => Err(CliError::Config(format!("{path}: is a section, not a key"))),
        Some(_) => {
            node.insert(last.to_string(), value);
            Ok(())
        }
        None => Err(unknown_key(path, reference)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_for_every_command() {
        for c in Command::ALL {
            Config::defaults(c).validate(c).unwrap();
        }
    }

    #[test]
    fn default_sweep_is_sixty_log_points_with_exact_ends() {
        let v = Config::defaults(Command::Eigen).variances();
        assert_eq!(v.len(), 60);
        assert_eq!((v[0], v[59]), (0.01, 150.0));
        assert!(v.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn file_and_flags_override_defaults() {
        let file = parse_table(
            "[kernel]\nvariance_km2 = 4.0\n[numerics]\nseed = 9\n",
            "test",
        )
        .unwrap();
        let overrides = Overrides {
            seed: Some(11),
            replicates: Some(3),
            set: vec!["env.c_km_per_gen=1.5".into()],
            ..Overrides::default()
        };
        let cfg = resolve(Command::Eigen, Some(file), &overrides).unwrap();
        assert_eq!(cfg.kernel.variance_km2, 4.0);
        assert_eq!(cfg.numerics.seed, 11);
        assert_eq!(cfg.numerics.replicates, 3);
        assert_eq!(cfg.env.c_km_per_gen, 1.5);
    }

    #[test]
    fn unknown_keys_report_their_path() {
        let file = parse_table("[kernel]\nvarience_km2 = 4.0\n", "test").unwrap();
        let err = resolve(Command::Eigen, Some(file), &Overrides::default()).unwrap_err();
        assert!(err.to_string().contains("kernel.varience_km2"), "{err}");
        assert_eq!(err.exit_code(), 2);

        let overrides = Overrides {
            set: vec!["numerics.gridpoints=3".into()],
            ..Overrides::default()
        };
        let err = resolve(Command::Eigen, None, &overrides).unwrap_err();
        assert!(err.to_string().contains("numerics.gridpoints"), "{err}");
    }

    #[test]
    fn invalid_values_report_their_path() {
        let file = parse_table("[env]\nr_per_gen = [4.85, -1.0]\n", "test").unwrap();
        let err = resolve(Command::LambdaSweep, Some(file), &Overrides::default()).unwrap_err();
        assert!(err.to_string().contains("env.r_per_gen[1]"), "{err}");
    }

    #[test]
    fn critical_speed_rejects_shifts() {
        let overrides = Overrides {
            set: vec!["env.sigma_km_per_gen=[-1.0, 1.0]".into()],
            ..Overrides::default()
        };
        let err = resolve(Command::CriticalSpeed, None, &overrides).unwrap_err();
        assert!(err.to_string().contains("env.sigma_km_per_gen"), "{err}");
    }

    #[test]
    fn wrong_types_are_config_errors() {
        let file = parse_table("[numerics]\ngrid_points = \"many\"\n", "test").unwrap();
        let err = resolve(Command::Eigen, Some(file), &Overrides::default()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn reproducible_toml_round_trips() {
        let cfg = Config::defaults(Command::Simulate);
        let text = cfg.reproducible_toml();
        assert!(!text.contains("dir ="));
        let back = resolve(
            Command::Simulate,
            Some(parse_table(&text, "t").unwrap()),
            &Overrides::default(),
        )
        .unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.reproducible_toml(), text);
    }
}
