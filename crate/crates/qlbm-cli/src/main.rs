//! `qlbm` command-line front end.

mod config;
mod manifest;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use qlbm::carleman::{self, Variant, ASSEMBLY_CAP};
use qlbm::instances::{self, derive_lattice, LatticeInstance, PhysicalInstance};
use qlbm::lattice::{GeometryOracle, GridSpec, SolidMask};
use qlbm::lbm_sim::{self, Scaling, SimConfig};
use qlbm::qre::{self, CostModelConfig, Encoding, ResourceEstimate};
use qlbm::{Error, Result};

use config::{ModelSpec, RunConfig};
use manifest::{Output, RunManifest};

const LONG_ABOUT: &str = "\
Carleman-linearized lattice Boltzmann toolkit.

Instance tables: the lattice spacing is dx = L / Re for spheres and a fixed
value for hulls; dt = (tau - 1/2) dx^2 / (3 nu); the step count T is the
advective time L / (1.05 u) over dt. Reported table values are rounded to one
significant figure (half away from zero on the leading digit) only for
display; every downstream quantity uses the unrounded value.

Exit codes: 0 success, 2 configuration error, 3 capacity refusal,
4 numerical failure. QLBM_THREADS sets the worker thread count.";

#[derive(Parser, Debug)]
#[command(name = "qlbm", version, about = "Carleman-linearized lattice Boltzmann toolkit", long_about = LONG_ABOUT)]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Report format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Relaxation time, in (0.5, 1].
    #[arg(long, global = true)]
    tau: Option<f64>,
    /// Block-encoding family: bespoke or unstructured.
    #[arg(long, global = true)]
    encoding: Option<Encoding>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classical simulation with drag series and snapshots.
    Simulate(SimulateArgs),
    /// Explicit Carleman blocks in coordinate format plus censuses.
    Matrices(MatricesArgs),
    /// Block norms, spectral bound and convergence window.
    Analyze(AnalyzeArgs),
    /// Resource estimate for one instance.
    Estimate(EstimateArgs),
    /// Resource estimates over a catalog subset with a power-law fit.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Catalog instance id.
    #[arg(long)]
    instance: Option<String>,
    #[arg(long)]
    steps: Option<u64>,
    /// Snapshot period in steps; 0 keeps the initial state only.
    #[arg(long)]
    snapshot_every: Option<u64>,
    /// Cubic grid edge, overriding the instance grid.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    no_snapshots: bool,
}

#[derive(Args, Debug)]
struct MatricesArgs {
    #[arg(long)]
    instance: Option<String>,
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    /// Largest first-order dimension to assemble.
    #[arg(long)]
    cap: Option<usize>,
    /// Cubic grid edge.
    #[arg(long)]
    grid: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Dense,
    Sparse,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Dense => Variant::Dense,
            VariantArg::Sparse => Variant::Sparse,
        }
    }
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// Infinity norm of the initial Carleman vector.
    #[arg(long)]
    phi0: Option<f64>,
    /// Instance whose time step converts the window to seconds.
    #[arg(long)]
    instance: Option<String>,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[arg(long)]
    instance: Option<String>,
    /// `linear[:c0]` or `constant:<calls>`.
    #[arg(long)]
    model: Option<ModelSpec>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Comma-separated instance ids; defaults to the eight spheres.
    #[arg(long, value_delimiter = ',')]
    instances: Option<Vec<String>>,
    #[arg(long)]
    model: Option<ModelSpec>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Capacity(_) => 3,
        Error::Numerical(_) => 4,
        Error::Config(_) | Error::OutOfRange(_) | Error::Dimension(_) => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(n) = std::env::var("QLBM_THREADS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: QLBM_THREADS must be a positive integer");
                return ExitCode::from(2);
            }
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

struct Context {
    config: RunConfig,
    manifest: RunManifest,
    tau: f64,
}

impl Context {
    fn new(cli: &Cli, command: &str) -> Result<Self> {
        let (config, config_sha) = match &cli.config {
            Some(p) => {
                let (c, h) = RunConfig::load(p)?;
                (c, Some(h))
            }
            None => (RunConfig::default(), None),
        };
        let tau = cli.tau.or(config.tau).unwrap_or(instances::DEFAULT_TAU);
        lbm_sim::validate_tau(tau)?;
        let mut overrides = BTreeMap::new();
        if let Some(t) = cli.tau {
            overrides.insert("tau".into(), format!("{t}"));
        }
        if let Some(e) = cli.encoding {
            overrides.insert("encoding".into(), encoding_name(e).into());
        }
        if let Some(f) = cli.format {
            overrides.insert("format".into(), format!("{f:?}").to_lowercase());
        }
        let manifest = RunManifest {
            command: command.into(),
            instance: None,
            config_path: cli.config.as_ref().map(|p| p.display().to_string()),
            config_sha256: config_sha,
            overrides,
            outputs: Vec::new(),
            seed: None,
            tool_version: env!("CARGO_PKG_VERSION").into(),
        };
        Ok(Self { config, manifest, tau })
    }

    fn set(&mut self, key: &str, value: impl std::fmt::Display) {
        self.manifest.overrides.insert(key.into(), value.to_string());
    }

    /// The instance named on the command line, else the one in the config.
    fn physical(&mut self, flag: Option<&str>) -> Result<Option<PhysicalInstance>> {
        let p = match flag {
            Some(id) => Some(instances::find(id)?),
            None => self.config.physical()?,
        };
        if let Some(p) = &p {
            p.validate()?;
            self.manifest.instance = Some(p.id.clone());
        }
        Ok(p)
    }

    fn lattice(&self, p: &PhysicalInstance) -> Result<LatticeInstance> {
        derive_lattice(p, self.tau)
    }

    fn finish(mut self, out: &Path, outputs: Vec<Output>) -> Result<()> {
        self.manifest.outputs = outputs.iter().map(|o| o.name.clone()).collect();
        self.manifest.outputs.push("manifest.json".into());
        manifest::write_all(out, &self.manifest, &outputs)
    }
}

fn encoding_name(e: Encoding) -> &'static str {
    match e {
        Encoding::Bespoke => "bespoke",
        Encoding::Unstructured => "unstructured",
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(cli, a),
        Command::Matrices(a) => cmd_matrices(cli, a),
        Command::Analyze(a) => cmd_analyze(cli, a),
        Command::Estimate(a) => cmd_estimate(cli, a),
        Command::Sweep(a) => cmd_sweep(cli, a),
    }
}

/// Sphere geometry in grid coordinates.
fn instance_oracle(p: &PhysicalInstance, dx: f64) -> Result<GeometryOracle> {
    match p.geometry {
        instances::GeometryDescriptor::Sphere { center, radius } => Ok(GeometryOracle::Sphere {
            center: [0, 1, 2].map(|d| (center[d] - p.domain[d][0]) / dx),
            radius: radius / dx,
        }),
        instances::GeometryDescriptor::Hull { .. } => Err(Error::Config(format!(
            "instance {} carries no grid geometry; give 'geometry' in the config",
            p.id
        ))),
    }
}

/// Grid and mask from explicit settings or from an instance.
fn resolve_mask(
    grid: Option<[usize; 3]>,
    geometry: Option<GeometryOracle>,
    lattice: Option<&LatticeInstance>,
    physical: Option<&PhysicalInstance>,
    max_nodes: f64,
) -> Result<SolidMask> {
    let grid = match (grid, lattice) {
        (Some([x, y, z]), _) => GridSpec::new(x, y, z)?,
        (None, Some(l)) => l.grid(max_nodes)?,
        (None, None) => return Err(Error::Config("no grid: give an instance or 'grid'".into())),
    };
    if grid.n() as f64 > max_nodes {
        return Err(Error::Capacity(format!("grid has {} nodes (limit {max_nodes:e})", grid.n())));
    }
    let oracle = match (geometry, physical, lattice) {
        (Some(g), _, _) => g,
        (None, Some(p), Some(l)) => instance_oracle(p, l.dx)?,
        _ => GeometryOracle::Empty,
    };
    Ok(SolidMask::from_oracle(grid, &oracle))
}

fn cmd_simulate(cli: &Cli, a: &SimulateArgs) -> Result<()> {
    let mut ctx = Context::new(cli, "simulate")?;
    let sec = ctx.config.simulation.clone().unwrap_or_default();
    let physical = ctx.physical(a.instance.as_deref())?;
    let lattice = physical.as_ref().map(|p| ctx.lattice(p)).transpose()?;
    let steps = a.steps.or(sec.steps).unwrap_or(0);
    let every = a.snapshot_every.or(sec.snapshot_every).unwrap_or(0);
    let grid = a.grid.map(|n| [n; 3]).or(sec.grid);
    let max_nodes = sec.max_nodes.unwrap_or(2e6);
    ctx.set("steps", steps);
    ctx.set("snapshot_every", every);
    if let Some(n) = a.grid {
        ctx.set("grid", n);
    }
    let mask = resolve_mask(grid, sec.geometry.clone(), lattice.as_ref(), physical.as_ref(), max_nodes)?;
    let velocity = sec
        .initial_velocity
        .or_else(|| lattice.as_ref().map(|l| [l.lattice_velocity, 0.0, 0.0]))
        .unwrap_or([0.0; 3]);
    let sim = SimConfig {
        tau: ctx.tau,
        initial_velocity: velocity,
        epsilon_rho: ctx.config.epsilon_rho.unwrap_or(1e-3),
    };
    let scaling = sec
        .scaling
        .or_else(|| lattice.as_ref().map(|l| Scaling { dx: l.dx, dt: l.dt }))
        .unwrap_or_default();
    let traj = lbm_sim::run(&sim, &mask, steps, scaling, every)?;

    let mut outputs = vec![Output::csv("drag.csv", lbm_sim::drag_series_csv(&traj.samples))];
    if !a.no_snapshots && !sec.no_snapshots.unwrap_or(false) {
        let mut snaps: Vec<u64> = vec![0];
        if every > 0 {
            snaps.extend((1..=steps).filter(|s| s % every == 0));
        }
        for (s, f) in snaps.iter().zip(&traj.snapshots) {
            outputs.push(Output::csv(&format!("snapshot_{s:06}.csv"), lbm_sim::snapshot_csv(f)));
        }
    }
    let last = traj.samples.last();
    let summary = json!({
        "grid": [mask.grid.nx, mask.grid.ny, mask.grid.nz],
        "solid_nodes": mask.solid_count(),
        "tau": ctx.tau,
        "initial_velocity": velocity,
        "scaling": scaling,
        "steps": steps,
        "initial_mass": traj.snapshots[0].total_mass(),
        "final_mass": traj.final_field.total_mass(),
        "final_drag_n": last.map(|s| s.drag_n),
        "density_warnings": traj.density_warnings,
        "speed_warning": sim.speed_warning(),
        "instance_warnings": lattice.as_ref().map(|l| l.warnings.clone()).unwrap_or_default(),
    });
    outputs.push(Output::json("simulate.json", summary));
    println!(
        "simulated {steps} steps on {}x{}x{}; final drag {}",
        mask.grid.nx,
        mask.grid.ny,
        mask.grid.nz,
        last.map_or("n/a".into(), |s| format!("{:e} N", s.drag_n))
    );
    ctx.finish(&cli.out, outputs)
}

fn cmd_matrices(cli: &Cli, a: &MatricesArgs) -> Result<()> {
    let mut ctx = Context::new(cli, "matrices")?;
    let sec = ctx.config.matrices.clone().unwrap_or_default();
    let variant: Variant = a.variant.map(Into::into).or(sec.variant).unwrap_or(Variant::Dense);
    let cap = a.cap.or(sec.cap).unwrap_or(ASSEMBLY_CAP);
    ctx.set("variant", format!("{variant:?}").to_lowercase());
    ctx.set("cap", cap);
    let physical = ctx.physical(a.instance.as_deref())?;
    let lattice = physical.as_ref().map(|p| ctx.lattice(p)).transpose()?;
    let grid = a.grid.map(|n| [n; 3]).or(sec.grid).or(if lattice.is_none() { Some([1, 1, 1]) } else { None });
    if let Some(n) = a.grid {
        ctx.set("grid", n);
    }
    let max_nodes = (cap / qlbm::lattice::Q) as f64;
    let mask = resolve_mask(grid, sec.geometry.clone(), lattice.as_ref(), physical.as_ref(), max_nodes)?;
    let blocks = carleman::assemble_first_order(&mask, ctx.tau, variant, cap)?;
    let census = carleman::census(variant);
    let assembled = json!({
        "s": blocks.s.nnz(),
        "s_plus_f1": blocks.s_plus_f1.nnz(),
        "f2": blocks.f2.nnz(),
        "f3": blocks.f3.nnz(),
    });
    let report = json!({
        "grid": [mask.grid.nx, mask.grid.ny, mask.grid.nz],
        "tau": ctx.tau,
        "variant": variant,
        "census": census,
        "assembled_nonzeros": assembled,
    });
    let mut outputs = vec![
        Output::coo("s.coo", blocks.s.to_coo_text()),
        Output::coo("s_plus_f1.coo", blocks.s_plus_f1.to_coo_text()),
        Output::coo("f2.coo", blocks.f2.to_coo_text()),
        Output::coo("f3.coo", blocks.f3.to_coo_text()),
    ];
    match cli.format.unwrap_or(Format::Json) {
        Format::Json => outputs.push(Output::json("census.json", report)),
        Format::Csv => {
            let mut s = String::from("variant,block,local_nonzeros,local_unique,assembled_nonzeros\n");
            let v = format!("{variant:?}").to_lowercase();
            for (b, nz, u, asm) in [
                ("f1", census.f1_nonzeros, census.f1_unique, blocks.s_plus_f1.nnz()),
                ("f2", census.f2_nonzeros, census.f2_unique, blocks.f2.nnz()),
                ("f3", census.f3_nonzeros, census.f3_unique, blocks.f3.nnz()),
            ] {
                s.push_str(&format!("{v},{b},{nz},{u},{asm}\n"));
            }
            outputs.push(Output::csv("census.csv", s));
        }
    }
    println!(
        "{variant:?} census: F1 {} nonzeros ({} unique), F2 {} ({} unique), F3 {} ({} unique)",
        census.f1_nonzeros, census.f1_unique, census.f2_nonzeros, census.f2_unique, census.f3_nonzeros, census.f3_unique
    );
    ctx.finish(&cli.out, outputs)
}

fn cmd_analyze(cli: &Cli, a: &AnalyzeArgs) -> Result<()> {
    let mut ctx = Context::new(cli, "analyze")?;
    let phi0 = a
        .phi0
        .or(ctx.config.analyze.as_ref().and_then(|s| s.phi0_inf))
        .unwrap_or(config::DEFAULT_PHI0_INF);
    ctx.set("phi0_inf", phi0);
    let norms = carleman::norm_report(ctx.tau)?;
    let window = carleman::convergence_window(phi0, ctx.tau)?;
    let ic = norms.integer_coefficients;
    let range = [spectral_bound_at(1.0, &ic), spectral_bound_at(0.5, &ic)];
    let physical = ctx.physical(a.instance.as_deref())?;
    let seconds = match &physical {
        Some(p) => {
            let l = ctx.lattice(p)?;
            Some(json!({
                "instance": l.id,
                "dt": l.dt,
                "t_c_lower": l.dt * window.t_c_lower,
                "t_c_upper": l.dt * window.t_c_upper,
                "t_c": l.dt * window.t_c,
            }))
        }
        None => None,
    };
    let outputs = match cli.format.unwrap_or(Format::Json) {
        Format::Json => vec![Output::json(
            "analyze.json",
            json!({
                "norms": norms,
                "convergence": window,
                "spectral_bound_over_tau": {"tau_1": range[0], "tau_half_limit": range[1]},
                "physical_window": seconds,
            }),
        )],
        Format::Csv => {
            let mut rows: Vec<(String, f64)> = vec![
                ("tau".into(), ctx.tau),
                ("phi0_inf".into(), phi0),
                ("s_inf".into(), norms.s_inf),
                ("f1_inf".into(), norms.f1_inf),
                ("f1_one".into(), norms.f1_one),
                ("f2_inf".into(), norms.f2_inf),
                ("f2_one".into(), norms.f2_one),
                ("f3_inf".into(), norms.f3_inf),
                ("f3_one".into(), norms.f3_one),
                ("a_one_bound".into(), norms.a_one_bound),
                ("a_inf_bound".into(), norms.a_inf_bound),
                ("spectral_bound".into(), norms.spectral_bound),
                ("spectral_bound_tau_1".into(), range[0]),
                ("spectral_bound_tau_half_limit".into(), range[1]),
                ("t_c_lower".into(), window.t_c_lower),
                ("t_c_upper".into(), window.t_c_upper),
                ("t_c".into(), window.t_c),
            ];
            if let Some(s) = &seconds {
                for k in ["dt", "t_c_lower", "t_c_upper", "t_c"] {
                    rows.push((format!("physical_{k}"), s[k].as_f64().unwrap_or(f64::NAN)));
                }
            }
            let mut s = String::from("quantity,value\n");
            for (k, v) in rows {
                s.push_str(&format!("{k},{v:e}\n"));
            }
            vec![Output::csv("analyze.csv", s)]
        }
    };
    println!(
        "tau {}: spectral bound {}; convergence window [{:.4e}, {:.4e}], T_c {:.4e}",
        ctx.tau, norms.spectral_bound, window.t_c_lower, window.t_c_upper, window.t_c
    );
    ctx.finish(&cli.out, outputs)
}

/// Spectral bound from the integer coefficients at a given `tau`.
fn spectral_bound_at(tau: f64, ic: &[f64; 6]) -> f64 {
    let a1 = carleman::NormReport::a_one_bound_formula(tau, ic);
    let ai = carleman::NormReport::a_inf_bound_formula(tau, ic);
    (a1 * ai).sqrt()
}

fn cost_config(ctx: &Context, cli: &Cli, base: Option<CostModelConfig>) -> CostModelConfig {
    let mut c = base.unwrap_or_default();
    c.tau = ctx.tau;
    if let Some(e) = cli.encoding {
        c.encoding = e;
    }
    if let Some(eps) = ctx.config.epsilon_rho {
        c.epsilon_rho = eps;
    }
    c
}

fn estimate_row(e: &ResourceEstimate, l: &LatticeInstance) -> String {
    format!(
        "{},{:e},{:e},{:e},{},{:e},{:e},{:e}",
        e.instance,
        e.reynolds,
        l.n,
        l.nq,
        e.logical_qubits,
        e.t_gate_total,
        e.logical_qubits * e.t_gate_total,
        e.per_encoding.a_encoding_t_gates
    )
}

const ESTIMATE_HEADER: &str = "instance,reynolds,n,nq,logical_qubits,t_gates,qubits_x_t_gates,t_gates_per_a_encoding";

fn cmd_estimate(cli: &Cli, a: &EstimateArgs) -> Result<()> {
    let mut ctx = Context::new(cli, "estimate")?;
    let sec = ctx.config.estimate.clone().unwrap_or_default();
    let physical = ctx
        .physical(a.instance.as_deref())?
        .ok_or_else(|| Error::Config("estimate needs an instance".into()))?;
    let model = a.model.clone().or(sec.model).unwrap_or_default();
    ctx.set("model", &model);
    let lattice = ctx.lattice(&physical)?;
    let config = cost_config(&ctx, cli, sec.cost);
    let est = qre::estimate_instance(&lattice, &config, model.build().as_ref())?;
    let outputs = match cli.format.unwrap_or(Format::Json) {
        Format::Json => vec![Output::json(
            "estimate.json",
            json!({"lattice": lattice, "estimate": est}),
        )],
        Format::Csv => vec![Output::csv(
            "estimate.csv",
            format!("{ESTIMATE_HEADER}\n{}\n", estimate_row(&est, &lattice)),
        )],
    };
    println!(
        "{}: {} logical qubits, {:.4e} T gates ({})",
        est.instance, est.logical_qubits, est.t_gate_total, est.model_id
    );
    ctx.finish(&cli.out, outputs)
}

fn cmd_sweep(cli: &Cli, a: &SweepArgs) -> Result<()> {
    let mut ctx = Context::new(cli, "sweep")?;
    let sec = ctx.config.sweep.clone().unwrap_or_default();
    let ids: Vec<String> = match a.instances.clone().or(sec.ids) {
        Some(v) => v,
        None => instances::sphere_catalog().into_iter().map(|p| p.id).collect(),
    };
    if ids.is_empty() {
        return Err(Error::Config("sweep needs at least one instance".into()));
    }
    ctx.set("instances", ids.join(","));
    let model = a.model.clone().or(sec.model).unwrap_or_default();
    ctx.set("model", &model);
    let config = cost_config(&ctx, cli, sec.cost);
    let mut other = config.clone();
    other.encoding = match config.encoding {
        Encoding::Bespoke => Encoding::Unstructured,
        Encoding::Unstructured => Encoding::Bespoke,
    };
    let tau = ctx.tau;
    let results: Vec<Result<(LatticeInstance, ResourceEstimate, ResourceEstimate)>> = ids
        .par_iter()
        .map(|id| {
            let p = instances::find(id)?;
            p.validate()?;
            let l = derive_lattice(&p, tau)?;
            let m = model.build();
            let primary = qre::estimate_instance(&l, &config, m.as_ref())?;
            let alt = qre::estimate_instance(&l, &other, m.as_ref())?;
            Ok((l, primary, alt))
        })
        .collect();
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;
    let split = |p: &ResourceEstimate, q: &ResourceEstimate| -> (f64, f64) {
        if config.encoding == Encoding::Bespoke {
            (p.t_gate_total, q.t_gate_total)
        } else {
            (q.t_gate_total, p.t_gate_total)
        }
    };
    let points: Vec<(f64, f64)> =
        results.iter().map(|(_, e, _)| (e.reynolds, e.logical_qubits * e.t_gate_total)).collect();
    let fit = if points.len() >= 2 { Some(qre::fit_power_law(&points)?) } else { None };

    let outputs = match cli.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut s = format!("{ESTIMATE_HEADER},t_gates_bespoke,t_gates_unstructured,unstructured_over_bespoke\n");
            for (l, e, alt) in &results {
                let (b, u) = split(e, alt);
                s.push_str(&format!("{},{b:e},{u:e},{:e}\n", estimate_row(e, l), u / b));
            }
            if let Some(f) = fit {
                s.push_str(&format!(
                    "# fit qubits_x_t_gates ~ reynolds^slope: slope={:.6},intercept={:.6},residual={:.3e}\n",
                    f.slope, f.intercept, f.residual
                ));
            }
            vec![Output::csv("sweep.csv", s)]
        }
        Format::Json => {
            let rows: Vec<Value> = results
                .iter()
                .map(|(l, e, alt)| {
                    let (b, u) = split(e, alt);
                    json!({
                        "instance": e.instance,
                        "reynolds": e.reynolds,
                        "n": l.n,
                        "nq": l.nq,
                        "logical_qubits": e.logical_qubits,
                        "t_gates": e.t_gate_total,
                        "qubits_x_t_gates": e.logical_qubits * e.t_gate_total,
                        "t_gates_bespoke": b,
                        "t_gates_unstructured": u,
                        "unstructured_over_bespoke": u / b,
                    })
                })
                .collect();
            vec![Output::json(
                "sweep.json",
                json!({"encoding": config.encoding, "model": results[0].1.model_id, "rows": rows, "fit": fit}),
            )]
        }
    };
    match fit {
        Some(f) => println!("{} instances; fitted slope {:.4} (residual {:.3e})", results.len(), f.slope, f.residual),
        None => println!("{} instance; no fit", results.len()),
    }
    ctx.finish(&cli.out, outputs)
}
