//! Parameter sweeps and the forward simulation.

use std::fs;
use std::path::PathBuf;

use ide_persist::habitat::DiscretizedHabitat;
use ide_persist::persistence::{
    critical_speed_gaussian, estimate_lambda, spreading_speed, ShiftedGrowth,
};
use ide_persist::simulate::run_replicates;
use ide_persist::spectral::{dispersal_success_approx, modified_dispersal_success_approx};
use ide_persist::{
    EnvironmentModel, IdeOperator, KernelFamily, LambdaEstimate, SimulationOptions, SpreadTarget,
};
use rayon::prelude::*;

use crate::config::{Command, Config};
use crate::error::CliError;
use crate::svg::{Chart, Series};
use crate::table::{header, Cell, Table};

const FAMILIES: [KernelFamily; 2] = [KernelFamily::Gaussian, KernelFamily::Laplace];

/// Files written by one command, in the order they were produced.
#[derive(Debug, Clone, Default)]
pub struct Written {
    pub files: Vec<PathBuf>,
    /// One-line human summaries printed after the run.
    pub notes: Vec<String>,
}

struct Sink<'a> {
    dir: PathBuf,
    header: String,
    cfg: &'a Config,
    written: Written,
}

impl<'a> Sink<'a> {
    fn new(command: Command, cfg: &'a Config) -> Result<Self, CliError> {
        let dir = PathBuf::from(&cfg.output.dir);
        fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;
        Ok(Self {
            dir,
            header: header(command, cfg),
            cfg,
            written: Written::default(),
        })
    }

    fn table(&mut self, name: &str, table: &Table) -> Result<(), CliError> {
        if self.cfg.output.csv {
            let path = self.dir.join(format!("{name}.csv"));
            table.write(&path, &self.header)?;
            self.written.files.push(path);
        }
        Ok(())
    }

    fn text(&mut self, file: &str, body: &str) -> Result<(), CliError> {
        let path = self.dir.join(file);
        fs::write(&path, format!("{}{body}", self.header)).map_err(CliError::io(&path))?;
        self.written.files.push(path);
        Ok(())
    }

    fn chart(&mut self, name: &str, chart: &Chart) -> Result<(), CliError> {
        if self.cfg.output.svg {
            let path = self.dir.join(format!("{name}.svg"));
            fs::write(&path, chart.render()).map_err(CliError::io(&path))?;
            self.written.files.push(path);
        }
        Ok(())
    }
}

pub fn run(command: Command, cfg: &Config) -> Result<Written, CliError> {
    cfg.validate(command)?;
    match command {
        Command::Eigen => eigen(cfg),
        Command::CriticalSpeed => critical_speed(cfg),
        Command::LambdaSweep => lambda_sweep(cfg),
        Command::VarianceEffect => variance_effect(cfg),
        Command::Simulate => simulate(cfg),
    }
}

fn column(rows: &[Vec<f64>], x: usize, y: usize) -> Vec<(f64, f64)> {
    rows.iter().map(|r| (r[x], r[y])).collect()
}

fn float_table(columns: &[&str], rows: &[Vec<f64>]) -> Table {
    let mut t = Table::new(columns.iter().copied());
    for r in rows {
        t.push(r.iter().map(|&v| Cell::from(v)).collect());
    }
    t
}

fn eigen(cfg: &Config) -> Result<Written, CliError> {
    let suit = cfg.suitability()?;
    let patch = cfg.patch()?;
    let family = KernelFamily::from(cfg.kernel.family);
    let rows = cfg
        .variances()
        .into_par_iter()
        .map(|v| {
            let kernel = cfg.kernel(family, v)?;
            let habitat = DiscretizedHabitat::unshifted(&suit, cfg.numerics.grid_points)?;
            let lambda0 = IdeOperator::new(kernel, habitat, 0.0)
                .principal_eigen(0.0, cfg.power())?
                .eigenvalue;
            Ok(vec![
                v,
                lambda0,
                dispersal_success_approx(&kernel, patch),
                modified_dispersal_success_approx(&kernel, patch),
            ])
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let mut sink = Sink::new(Command::Eigen, cfg)?;
    let columns = ["variance_km2", "lambda0", "lambda0_bar", "lambda0_hat"];
    sink.table("eigen", &float_table(&columns, &rows))?;
    sink.chart(
        "eigen",
        &Chart {
            title: format!(
                "Principal eigenvalue and approximations ({} kernel)",
                family.name()
            ),
            x_label: "kernel variance (km²)".into(),
            y_label: "eigenvalue".into(),
            x_log: true,
            series: vec![
                Series::new("λ₀", column(&rows, 0, 1)),
                Series::new("λ̄₀", column(&rows, 0, 2)).dashed(),
                Series::new("λ̂₀", column(&rows, 0, 3)).dashed(),
            ],
            ..Chart::default()
        },
    )?;
    sink.written.notes.push(format!("{} variances", rows.len()));
    Ok(sink.written)
}

/// Points where `values − level` changes sign, interpolated in `ln x`.
pub fn crossings(xs: &[f64], values: &[f64], level: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 1..xs.len() {
        let (a, b) = (values[i - 1] - level, values[i] - level);
        if a == 0.0 && (i == 1 || values[i - 2] != level) {
            out.push(xs[i - 1]);
        } else if a * b < 0.0 {
            let t = a / (a - b);
            out.push((xs[i - 1].ln() + t * (xs[i].ln() - xs[i - 1].ln())).exp());
        }
    }
    out
}

fn critical_speed(cfg: &Config) -> Result<Written, CliError> {
    let suit = cfg.suitability()?;
    let patch = cfg.patch()?;
    let env = cfg.environment()?;
    let rows = cfg
        .variances()
        .into_par_iter()
        .map(|v| {
            let kernel = cfg.kernel(KernelFamily::Gaussian, v)?;
            let lambda0 =
                ShiftedGrowth::new(kernel, &suit, &env, cfg.numerics.grid_points, cfg.power())?
                    .eigenvalue(0.0)?;
            let exact = critical_speed_gaussian(lambda0, v, &env)?.c_star;
            let approx =
                critical_speed_gaussian(dispersal_success_approx(&kernel, patch), v, &env)?.c_star;
            Ok(vec![v, exact, approx])
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let c = env.c();
    let xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let cs: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let cross = crossings(&xs, &cs, c);

    let mut sink = Sink::new(Command::CriticalSpeed, cfg)?;
    let columns = [
        "variance_km2",
        "c_star_exact",
        "c_star_dispersal_success_approx",
    ];
    sink.table("critical_speed", &float_table(&columns, &rows))?;
    let mut ct = Table::new(["crossing", "variance_km2", "c_km_per_gen"]);
    for (k, &x) in cross.iter().enumerate() {
        ct.push(vec![(k + 1).into(), x.into(), c.into()]);
    }
    sink.table("critical_speed_crossings", &ct)?;

    let labels = ["A", "B", "C", "D", "E", "F"];
    sink.chart(
        "critical_speed",
        &Chart {
            title: "Critical shifting speed, Gaussian kernel, σ ≡ 0".into(),
            x_label: "kernel variance (km²)".into(),
            y_label: "c* (km/generation)".into(),
            x_log: true,
            series: vec![
                Series::new("c* (eigenvalue)", column(&rows, 0, 1)),
                Series::new("c* (dispersal success)", column(&rows, 0, 2)).dashed(),
            ],
            hlines: vec![(c, format!("c = {c}"))],
            markers: cross
                .iter()
                .enumerate()
                .map(|(k, &x)| (x, c, labels.get(k).copied().unwrap_or("•").to_string()))
                .collect(),
            ..Chart::default()
        },
    )?;
    let listed: Vec<String> = cross.iter().map(|x| format!("{x:.4}")).collect();
    sink.written.notes.push(format!(
        "c* crosses {c} at variance {} km²",
        listed.join(", ")
    ));
    Ok(sink.written)
}

fn lambda_for(
    cfg: &Config,
    family: KernelFamily,
    v: f64,
    env: &EnvironmentModel,
) -> Result<LambdaEstimate, CliError> {
    let op = IdeOperator::for_environment(
        cfg.kernel(family, v)?,
        &cfg.suitability()?,
        env,
        cfg.numerics.grid_points,
    )?;
    Ok(estimate_lambda(&op, env, &cfg.lambda_options())?)
}

fn lambda_sweep(cfg: &Config) -> Result<Written, CliError> {
    let env = cfg.environment()?;
    let flat = env.without_shifts();
    let suit = cfg.suitability()?;
    let rows = cfg
        .variances()
        .into_par_iter()
        .map(|v| {
            let mut row = vec![v];
            let mut extra = Vec::new();
            for family in FAMILIES {
                let est = lambda_for(cfg, family, v, &env)?;
                row.push(est.lambda);
                extra.extend([est.min, est.max, est.log_sd, est.log_se]);
            }
            row.extend(extra);
            for family in FAMILIES {
                row.push(lambda_for(cfg, family, v, &flat)?.lambda);
                let exact = ShiftedGrowth::new(
                    cfg.kernel(family, v)?,
                    &suit,
                    &flat,
                    cfg.numerics.grid_points,
                    cfg.power(),
                )?
                .lambda(env.c())?;
                row.push(exact);
            }
            for family in FAMILIES {
                row.push(spreading_speed(&cfg.kernel(family, v)?, &env).speed);
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let mut sink = Sink::new(Command::LambdaSweep, cfg)?;
    let columns = [
        "variance_km2",
        "lambda_gaussian",
        "lambda_laplace",
        "lambda_gaussian_min",
        "lambda_gaussian_max",
        "log_sd_gaussian",
        "log_se_gaussian",
        "lambda_laplace_min",
        "lambda_laplace_max",
        "log_sd_laplace",
        "log_se_laplace",
        "lambda_gaussian_sigma0",
        "lambda_gaussian_sigma0_exact",
        "lambda_laplace_sigma0",
        "lambda_laplace_sigma0_exact",
        "spreading_speed_gaussian_km_per_gen",
        "spreading_speed_laplace_km_per_gen",
    ];
    sink.table("lambda_sweep", &float_table(&columns, &rows))?;
    sink.chart(
        "lambda_sweep",
        &Chart {
            title: format!("Stochastic growth rate Λ, c = {} km/generation", env.c()),
            x_label: "kernel variance (km²)".into(),
            y_label: "Λ".into(),
            x_log: true,
            series: vec![
                Series::new("Gaussian", column(&rows, 0, 1)),
                Series::new("Laplace", column(&rows, 0, 2)).dashed(),
            ],
            hlines: vec![(1.0, "Λ = 1".into())],
            ..Chart::default()
        },
    )?;
    let below_spread = rows.iter().filter(|r| env.c() >= r[15]).count();
    sink.written.notes.push(format!(
        "{} variances; c ≥ Gaussian spreading speed at {below_spread} of them",
        rows.len()
    ));
    Ok(sink.written)
}

fn variance_effect(cfg: &Config) -> Result<Written, CliError> {
    let env = cfg.environment()?;
    let v = cfg.kernel.variance_km2;
    let mut sink = Sink::new(Command::VarianceEffect, cfg)?;
    let panels = [
        (
            SpreadTarget::Shift,
            &cfg.variance_effect.sigma_spreads_km_per_gen,
            "variance_effect_sigma",
            ["sigma_spread_km_per_gen", "sigma_variance_km2"],
            "Var(σ) (km²)",
        ),
        (
            SpreadTarget::Growth,
            &cfg.variance_effect.r_spreads_per_gen,
            "variance_effect_r",
            ["r_spread_per_gen", "r_variance"],
            "Var(r)",
        ),
    ];
    for (target, spreads, name, [spread_col, var_col], x_label) in panels {
        let rows = spreads
            .par_iter()
            .map(|&s| {
                let e = env.mean_preserving_spread(target, s)?;
                let var = variance_of(&e, target);
                let mut row = vec![s, var];
                for family in FAMILIES {
                    let est = lambda_for(cfg, family, v, &e)?;
                    row.extend([est.lambda, est.log_se]);
                }
                Ok(row)
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let columns = [
            spread_col,
            var_col,
            "lambda_gaussian",
            "log_se_gaussian",
            "lambda_laplace",
            "log_se_laplace",
        ];
        sink.table(name, &float_table(&columns, &rows))?;
        sink.chart(
            name,
            &Chart {
                title: format!("Λ under mean-preserving spreads, variance {v} km²"),
                x_label: x_label.into(),
                y_label: "Λ".into(),
                series: vec![
                    Series::new("Gaussian", column(&rows, 1, 2)),
                    Series::new("Laplace", column(&rows, 1, 4)).dashed(),
                ],
                hlines: vec![(1.0, "Λ = 1".into())],
                ..Chart::default()
            },
        )?;
    }
    Ok(sink.written)
}

fn variance_of(env: &EnvironmentModel, target: SpreadTarget) -> f64 {
    let pick = |a: &ide_persist::Atom| match target {
        SpreadTarget::Shift => a.sigma,
        SpreadTarget::Growth => a.r,
    };
    let mean: f64 = env.atoms().iter().map(|a| a.prob * pick(a)).sum();
    env.atoms()
        .iter()
        .map(|a| a.prob * (pick(a) - mean).powi(2))
        .sum()
}

fn simulate(cfg: &Config) -> Result<Written, CliError> {
    let env = cfg.environment()?;
    let family = KernelFamily::from(cfg.kernel.family);
    let op = IdeOperator::for_environment(
        cfg.kernel(family, cfg.kernel.variance_km2)?,
        &cfg.suitability()?,
        &env,
        cfg.numerics.grid_points,
    )?;
    let growth = cfg.growth_map()?;
    let u0 = vec![cfg.simulate.initial_density_per_km; op.len()];
    let opts = SimulationOptions {
        horizon: cfg.numerics.horizon,
        snapshot_times: if cfg.output.snapshots {
            cfg.simulate.snapshot_times_gen.clone()
        } else {
            Vec::new()
        },
        rules: cfg.rules(),
    };
    let records = run_replicates(
        &op,
        &growth,
        &env,
        &u0,
        &opts,
        cfg.numerics.seed,
        cfg.numerics.replicates,
    )?;

    let mut sink = Sink::new(Command::Simulate, cfg)?;
    let mut traj = Table::new(["replicate", "t", "mass", "sup"]);
    for rec in &records {
        for (t, (&m, &s)) in rec.mass.iter().zip(&rec.sup).enumerate() {
            traj.push(vec![rec.replicate.into(), t.into(), m.into(), s.into()]);
        }
    }
    sink.table("simulate_trajectory", &traj)?;

    if cfg.output.snapshots && !cfg.simulate.snapshot_times_gen.is_empty() {
        let mut snaps = Table::new(["replicate", "t", "x_km", "density_per_km"]);
        for rec in &records {
            for (t, u) in &rec.snapshots {
                for (&x, &d) in op.habitat().nodes().iter().zip(u) {
                    snaps.push(vec![rec.replicate.into(), (*t).into(), x.into(), d.into()]);
                }
            }
        }
        sink.table("simulate_snapshots", &snaps)?;
    }

    let mut summary = String::new();
    let rules = cfg.rules();
    let count = |name: &str| records.iter().filter(|r| r.outcome.name() == name).count();
    summary.push_str(&format!(
        "[rules]\nextinction_floor_per_km = {:e}\nextinction_window_gen = {}\npersistence_window_gen = {}\npersistence_floor_per_km = {:e}\npersistence_tolerance = {}\n\n",
        rules.extinction_floor,
        rules.extinction_window,
        rules.persistence_window,
        rules.persistence_floor,
        rules.persistence_tolerance
    ));
    summary.push_str(&format!(
        "[counts]\npersisted = {}\nextinct = {}\nundecided = {}\n",
        count("persisted"),
        count("extinct"),
        count("undecided")
    ));
    for rec in &records {
        let final_mass = *rec.mass.last().expect("mass has T+1 entries");
        let min_mass = rec.mass.iter().copied().fold(f64::INFINITY, f64::min);
        summary.push_str(&format!(
            "\n[[replicate]]\nid = {}\nbase_seed = {}\nclassification = \"{}\"\nfinal_mass = {}\nmin_mass = {}\n",
            rec.replicate,
            rec.base_seed,
            rec.outcome.name(),
            fmt_toml_float(final_mass),
            fmt_toml_float(min_mass)
        ));
    }
    sink.text("simulate_summary.toml", &summary)?;

    sink.chart(
        "simulate_mass",
        &Chart {
            title: format!("Total mass, {} replicates", records.len()),
            x_label: "generation".into(),
            y_label: "∫u (individuals)".into(),
            y_log: true,
            series: records
                .iter()
                .take(12)
                .map(|r| {
                    Series::new(
                        format!("rep {} ({})", r.replicate, r.outcome.name()),
                        r.mass
                            .iter()
                            .enumerate()
                            .map(|(t, &m)| (t as f64, m))
                            .collect(),
                    )
                })
                .collect(),
            ..Chart::default()
        },
    )?;
    sink.written.notes.push(format!(
        "persisted {}, extinct {}, undecided {}",
        count("persisted"),
        count("extinct"),
        count("undecided")
    ));
    Ok(sink.written)
}

fn fmt_toml_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "nan".into()
    }
}
