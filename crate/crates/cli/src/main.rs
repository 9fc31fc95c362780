//! `elastica`: command-line front end for Sobolev metrics on curves in
//! constant-curvature manifolds.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use elastica::analysis::{self, FieldSampler, Preset, ScanConfig};
use elastica::bvp::{self, BvpOptions, InitMode};
use elastica::io::{self, CurveFile, PathFile, VelocityFile};
use elastica::ivp::{ivp_integrate, GeodesicState};
use elastica::{holonomy, ManifoldSpec, Result};
use serde_json::json;

use output::{emit, num, opt, Artifact, Format, Header, Table};

#[derive(Parser, Debug)]
#[command(name = "elastica", version, about = "Sobolev metrics on spaces of curves in constant-curvature manifolds")]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file (default: standard output).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format (default: csv for a `.csv` output file, json otherwise).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Derived quantities of a manifold JSON fragment (file path or inline JSON).
    ManifoldInfo { manifold: String },
    /// Geodesic distance between two curves.
    Distance(BvpArgs),
    /// Minimizing geodesic between two curves, written as a path.
    GeodesicBvp(BvpArgs),
    /// Integrates the geodesic equation of a first-order metric.
    GeodesicIvp(IvpArgs),
    /// Holonomy defect of closed curves against the curvature bound.
    Holonomy {
        #[arg(required = true)]
        curves: Vec<PathBuf>,
    },
    /// Interpolation-inequality scan.
    IneqScan {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = ScanKind::General)]
        kind: ScanKind,
    },
    /// The vanishing-length path of open planar curves.
    Incompleteness(DemoArgs),
    /// Ratios of the G norm to the fixed-parameter H^n norm on random fields.
    Equivalence {
        #[arg(long)]
        metric: PathBuf,
        curve: PathBuf,
        #[arg(long, default_value_t = 64)]
        samples: usize,
        #[arg(long, default_value_t = 4)]
        max_mode: usize,
    },
    /// Length control `|l^{3/2}(a) - l^{3/2}(b)|` against path length.
    Shrinkage {
        path: PathBuf,
        /// Metric to measure with (default: the one stored in the path file).
        #[arg(long)]
        metric: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-3)]
        threshold: f64,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScanKind {
    General,
    Periodic,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Init {
    PointwiseGeodesic,
    StraightEmbedding,
}

#[derive(Args, Debug)]
struct BvpArgs {
    #[arg(long)]
    metric: PathBuf,
    a: PathBuf,
    b: PathBuf,
    #[arg(long, default_value_t = 16)]
    time_steps: usize,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-7)]
    gtol: f64,
    #[arg(long, value_enum, default_value_t = Init::PointwiseGeodesic)]
    init: Init,
    /// Amplitude of a random perturbation of the initial path.
    #[arg(long, default_value_t = 0.0)]
    init_noise: f64,
    /// Constant for the informational radius `C l^{3/2} / (1 + l^{3/2})`.
    #[arg(long)]
    c_hat: Option<f64>,
}

#[derive(Args, Debug)]
struct IvpArgs {
    #[arg(long)]
    metric: PathBuf,
    #[arg(long)]
    curve: PathBuf,
    #[arg(long)]
    velocity: PathBuf,
    /// Final time.
    #[arg(long = "T", default_value_t = 1.0)]
    t_end: f64,
    #[arg(long, default_value_t = 200)]
    steps: usize,
    /// Also write the per-step diagnostics as CSV.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DemoArgs {
    #[arg(long, default_value = "f0g0")]
    preset: Preset,
    /// `NxM`: samples per curve and time steps.
    #[arg(long, default_value = "512x200", value_parser = parse_grid)]
    grid: (usize, usize),
    #[arg(long)]
    metric: PathBuf,
    /// Second preset for the affine-homotopy distance bound.
    #[arg(long)]
    partner: Option<Preset>,
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.6,0.7,0.8,0.9,0.95,0.99")]
    homotopy_times: Vec<f64>,
}

fn parse_grid(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once('x').ok_or_else(|| format!("expected NxM, got '{s}'"))?;
    let p = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("'{x}': {e}"));
    Ok((p(a)?, p(b)?))
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn run(cli: &Cli) -> Result<Vec<u8>> {
    let seed = cli.seed.unwrap_or(0);
    let (command, args, artifact) = match &cli.command {
        Command::ManifoldInfo { manifold } => {
            let m: ManifoldSpec = if manifold.trim_start().starts_with('{') {
                io::from_json(manifold)?
            } else {
                io::read_json(Path::new(manifold))?
            };
            m.validate()?;
            let info = json!({
                "manifold": m,
                "ambient_dim": m.ambient_dim(),
                "sectional_curvature": m.sectional_curvature(),
                "curvature_bound": m.curvature_bound(),
                "injectivity_radius": m.injectivity_radius(),
            });
            let mut t = Table::new(&["kind", "dim", "ambient_dim", "sectional_curvature", "curvature_bound", "injectivity_radius"]);
            t.push(vec![
                format!("{:?}", m.kind).to_lowercase(),
                m.dim.to_string(),
                m.ambient_dim().to_string(),
                num(m.sectional_curvature()),
                num(m.curvature_bound()),
                num(m.injectivity_radius()),
            ]);
            ("manifold-info", json!({ "manifold": manifold }), Artifact { json: info, table: t })
        }
        Command::Distance(a) | Command::GeodesicBvp(a) => {
            let is_distance = matches!(cli.command, Command::Distance(_));
            let metric = io::read_metric(&a.metric)?;
            let (c0, c1) = (io::read_curve(&a.a)?, io::read_curve(&a.b)?);
            let opts = BvpOptions {
                time_steps: a.time_steps,
                max_iters: a.max_iters,
                gtol: a.gtol,
                init: match a.init {
                    Init::PointwiseGeodesic => InitMode::PointwiseGeodesic,
                    Init::StraightEmbedding => InitMode::StraightEmbedding,
                },
                init_noise: a.init_noise,
                seed,
                ..BvpOptions::default()
            };
            let args = json!({
                "metric": path_str(&a.metric), "a": path_str(&a.a), "b": path_str(&a.b),
                "metric_spec": metric, "options": opts, "c_hat": a.c_hat,
            });
            let r = bvp::minimize(&metric, &c0, &c1, &opts)?;
            let l = c0.length().powf(1.5);
            let summary = json!({
                "distance": r.distance,
                "energy": r.energy,
                "iterations": r.iterations,
                "converged": r.converged,
                "grad_norm": r.grad_norm,
                "initial_energy": r.initial_energy,
                "r0_hat": a.c_hat.map(|c| c * l / (1.0 + l)),
            });
            if is_distance {
                let mut t = Table::new(&["distance", "energy", "iterations", "converged", "grad_norm"]);
                t.push(vec![num(r.distance), num(r.energy), r.iterations.to_string(), r.converged.to_string(), num(r.grad_norm)]);
                ("distance", args, Artifact { json: summary, table: t })
            } else {
                let mut t = Table::new(&["j", "t", "length"]);
                for (j, (c, tj)) in r.path.curves().iter().zip(r.path.times()).enumerate() {
                    t.push(vec![j.to_string(), num(*tj), num(c.length())]);
                }
                let mut doc = serde_json::to_value(PathFile::of(&metric, &r.path)).expect("path");
                doc["summary"] = summary;
                doc["energy_history"] = json!(r.energy_history);
                ("geodesic-bvp", args, Artifact { json: doc, table: t })
            }
        }
        Command::GeodesicIvp(a) => {
            let metric = io::read_metric(&a.metric)?;
            let c = io::read_curve(&a.curve)?;
            let w = io::read_json::<VelocityFile>(&a.velocity)?.into_field(&c)?;
            let args = json!({
                "metric": path_str(&a.metric), "curve": path_str(&a.curve), "velocity": path_str(&a.velocity),
                "metric_spec": metric, "T": a.t_end, "steps": a.steps,
            });
            let r = ivp_integrate(&metric, &GeodesicState::new(c, w)?, a.t_end, a.steps)?;
            let mut t = Table::new(&["step", "t", "energy", "length", "min_speed"]);
            for d in &r.diagnostics {
                t.push(vec![d.step.to_string(), num(d.t), num(d.energy), num(d.length), num(d.min_speed)]);
            }
            if let Some(p) = &a.diagnostics {
                let header = Header { command: "geodesic-ivp", seed, args: args.clone() };
                let bytes = Artifact { json: json!({}), table: Table { columns: t.columns.clone(), rows: t.rows.clone() } }
                    .render(&header, Format::Csv)?;
                emit(&bytes, Some(p))?;
            }
            let doc = json!({
                "metric": metric,
                "curves": r.curves.iter().map(CurveFile::of).collect::<Vec<_>>(),
                "times": r.times,
                "velocities": r.velocities.iter().map(VelocityFile::of).collect::<Vec<_>>(),
                "diagnostics": r.diagnostics,
                "summary": {
                    "steps_completed": r.curves.len() - 1,
                    "energy_drift": r.energy_drift(),
                    "aborted": r.aborted.as_ref().map(|e| e.to_string()),
                },
            });
            ("geodesic-ivp", args, Artifact { json: doc, table: t })
        }
        Command::Holonomy { curves } => {
            let cs = curves.iter().map(|p| io::read_curve(p)).collect::<Result<Vec<_>>>()?;
            let probe = holonomy::bound_probe(&cs)?;
            let mut t = Table::new(&["curve_id", "length", "defect", "defect_per_length2", "cap", "pass"]);
            for r in &probe.reports {
                t.push(vec![r.curve_id.to_string(), num(r.length), num(r.defect), num(r.ratio), num(r.cap), r.pass.to_string()]);
            }
            let args = json!({ "curves": curves.iter().map(|p| path_str(p)).collect::<Vec<_>>() });
            ("holonomy", args, Artifact::new(&probe, t))
        }
        Command::IneqScan { config, kind } => {
            let mut cfg: ScanConfig = io::read_json(config)?;
            if let Some(s) = cli.seed {
                cfg.fields.seed = s;
            }
            let report = match kind {
                ScanKind::General => analysis::ineq_scan_general(&cfg)?,
                ScanKind::Periodic => analysis::ineq_scan_periodic(&cfg)?,
            };
            let mut t = Table::new(&["curve_id", "scale", "length", "field_id", "a", "lhs", "rhs", "ratio", "ratio_inf"]);
            for s in &report.samples {
                t.push(vec![
                    s.curve_id.to_string(),
                    num(s.scale),
                    num(s.length),
                    s.field_id.to_string(),
                    opt(s.a),
                    num(s.lhs),
                    num(s.rhs),
                    num(s.ratio),
                    opt(s.ratio_inf),
                ]);
            }
            let args = json!({ "config": path_str(config), "kind": format!("{kind:?}").to_lowercase(), "scan": cfg });
            let header_seed = cfg.fields.seed;
            return render(cli, Header { command: "ineq-scan", seed: header_seed, args }, Artifact::new(&report, t));
        }
        Command::Incompleteness(a) => {
            let metric = io::read_metric(&a.metric)?;
            let (n, m) = a.grid;
            let r = analysis::incompleteness_demo(a.preset, n, m, &metric, a.partner, &a.homotopy_times)?;
            let mut t = Table::new(&["t", "length", "length_exact", "path_length", "max_speed"]);
            for row in &r.rows {
                t.push(vec![num(row.t), num(row.length), num(row.length_exact), num(row.path_length), num(row.max_speed)]);
            }
            let args = json!({
                "preset": a.preset.to_string(), "grid": format!("{n}x{m}"), "metric": path_str(&a.metric),
                "metric_spec": metric, "partner": a.partner.map(|p| p.to_string()), "homotopy_times": a.homotopy_times,
            });
            ("incompleteness", args, Artifact::new(&r, t))
        }
        Command::Equivalence { metric, curve, samples, max_mode } => {
            let spec = io::read_metric(metric)?;
            let c = io::read_curve(curve)?;
            let fields = FieldSampler { count: *samples, max_mode: *max_mode, seed };
            let r = analysis::equivalence_probe(&spec, &c, &fields)?;
            let mut t = Table::new(&["field_id", "ratio"]);
            for (i, x) in r.ratios.iter().enumerate() {
                t.push(vec![i.to_string(), num(*x)]);
            }
            let args = json!({ "metric": path_str(metric), "curve": path_str(curve), "samples": samples, "max_mode": max_mode });
            ("equivalence", args, Artifact::new(&r, t))
        }
        Command::Shrinkage { path, metric, threshold } => {
            let (stored, p) = io::read_path(path)?;
            let spec = match metric {
                Some(m) => io::read_metric(m)?,
                None => stored,
            };
            let r = analysis::shrinkage_probe(&spec, &p, *threshold)?;
            let mut t = Table::new(&["j", "t", "length", "path_length", "flagged"]);
            for j in 0..r.times.len() {
                t.push(vec![
                    j.to_string(),
                    num(r.times[j]),
                    num(r.lengths[j]),
                    num(r.path_lengths[j]),
                    r.flagged.contains(&j).to_string(),
                ]);
            }
            let args = json!({
                "path": path_str(path), "metric": metric.as_deref().map(path_str), "metric_spec": spec, "threshold": threshold,
            });
            ("shrinkage", args, Artifact::new(&r, t))
        }
    };
    render(cli, Header { command, seed, args }, artifact)
}

fn render(cli: &Cli, header: Header, artifact: Artifact) -> Result<Vec<u8>> {
    let by_extension = match cli.out.as_deref().and_then(Path::extension) {
        Some(e) if e.eq_ignore_ascii_case("csv") => Format::Csv,
        _ => Format::Json,
    };
    artifact.render(&header, cli.format.unwrap_or(by_extension))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 || rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            eprintln!("error: could not start {n} worker threads");
            return ExitCode::from(2);
        }
    }
    match run(&cli).and_then(|bytes| emit(&bytes, cli.out.as_deref())) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
