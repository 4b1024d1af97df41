//! Command-line front end: generate domains, compute traces, run report
//! suites and export artifacts.
//!
//! Exit codes: 0 on success (and all checks passing), 1 when a check or
//! acceptance criterion fails, 2 on usage or data errors. Every artifact is
//! written to a temporary file in the target directory and renamed into
//! place, so a failed run never leaves a partial file behind.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::besov::{boundary_samples, comparability_report, ls_report, vd_report, ScaleFunction, ThetaField};
use crate::error::{Error, Result};
use crate::estimates::{
    cap_density_report, cap_doubling_report, exit_time_report, green_hm_report, harmonic_measure_from, hk_report,
    hm_doubling_report, jump_kernel_report, killing_report,
};
use crate::generators::{
    gen_attenuated_strip, gen_grid_slit, gen_half_strip, gen_path, gen_sg_slit, gen_skewed_comb, gen_star, FarMode,
    GeneratedDomain,
};
use crate::geometry::{BoundaryGeometry, GeometrySidecar, RadiusGrid};
use crate::linalg::SolverConfig;
use crate::network::{NetworkSpec, ResistanceNetwork};
use crate::potential::DirichletSolver;
use crate::report::{csv_field, Report};
use crate::suite::{run_criterion, CriterionResult, SuiteConfig, CRITERIA, GASKET_WALK_DIM, LATTICE_WALK_DIM};
use crate::trace::{schur_trace, TraceForm, TraceFormJson};
use crate::whitney::{build_cover, cover_stats, extension_report, partition_of_unity, restriction_report};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "KRON_TRACE_THREADS";

/// Exit code for a successful run.
pub const EXIT_OK: i32 = 0;
/// Exit code when a check or acceptance criterion fails.
pub const EXIT_CHECK_FAILED: i32 = 1;
/// Exit code for usage and data errors.
pub const EXIT_USAGE: i32 = 2;

/// Dilation at which Whitney overlap counts are reported.
const OVERLAP_DILATION: f64 = 2.0;

#[derive(Debug, Parser)]
#[command(name = "kron-trace", version, about = "Boundary trace forms of resistance networks")]
struct Cli {
    /// Also write a run manifest to this path.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Relative residual tolerance of the linear solvers.
    #[arg(long, global = true, default_value_t = 1e-12)]
    tol: f64,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a domain: network JSON plus a `.geom.json` geometry sidecar.
    Gen(GenArgs),
    /// Compute the trace form of a network.
    Trace(TraceArgs),
    /// Run one family of estimate reports on a network.
    Report(ReportArgs),
    /// Run the reports on a domain family and every acceptance criterion.
    Suite(SuiteArgs),
    /// Convert artifacts to exchange formats.
    Export(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GenKind {
    Star,
    Path,
    SgSlit,
    HalfStrip,
    GridSlit,
    SkewedComb,
    AttenuatedStrip,
}

#[derive(Debug, Args)]
struct GenArgs {
    kind: GenKind,
    #[arg(long)]
    level: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    /// Comma-separated leaf (star) or edge (path) conductances.
    #[arg(long, value_delimiter = ',')]
    conductances: Option<Vec<f64>>,
    /// Number of path edges.
    #[arg(long)]
    edges: Option<usize>,
    #[arg(long, value_enum, default_value = "reflecting")]
    far: FarArg,
    #[arg(long)]
    slit_len: Option<usize>,
    #[arg(long)]
    teeth: Option<usize>,
    #[arg(long)]
    depth: Option<u32>,
    #[arg(short = 'o', long = "output")]
    output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FarArg {
    Reflecting,
    Absorbing,
}

impl From<FarArg> for FarMode {
    fn from(f: FarArg) -> Self {
        match f {
            FarArg::Reflecting => FarMode::Reflecting,
            FarArg::Absorbing => FarMode::Absorbing,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MeasureArg {
    Uniform,
    Harmonic,
}

/// Options shared by commands that read a network.
#[derive(Debug, Args)]
struct DomainArgs {
    /// Network JSON; a sibling `<stem>.geom.json` sidecar is used if present.
    network: PathBuf,
    /// Reference boundary measure.
    #[arg(long, value_enum, default_value = "harmonic")]
    measure: MeasureArg,
    /// Interior vertex for harmonic measure (default: most central deepest vertex).
    #[arg(long)]
    pole: Option<String>,
}

#[derive(Debug, Args)]
struct TraceArgs {
    #[command(flatten)]
    domain: DomainArgs,
    #[arg(short = 'o', long = "output")]
    output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportKind {
    Besov,
    Whitney,
    Doubling,
    Capdensity,
    Jump,
    Killing,
    Exit,
    Heatkernel,
    GreenHm,
}

#[derive(Debug, Args)]
struct ReportArgs {
    kind: ReportKind,
    #[command(flatten)]
    domain: DomainArgs,
    /// Exponent of `Ψ(r) = r^β`.
    #[arg(long, default_value_t = LATTICE_WALK_DIM)]
    psi_exponent: f64,
    /// Whitney parameter ε.
    #[arg(long, default_value_t = 0.125)]
    eps: f64,
    /// Number of random test functions.
    #[arg(long, default_value_t = 50)]
    samples: usize,
    /// Number of heat-kernel times across the window.
    #[arg(long, default_value_t = 12)]
    times: usize,
    /// Report JSON; the CSV goes next to it with extension `.csv`.
    #[arg(short = 'o', long = "output")]
    output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    SgSlit,
    HalfStrip,
}

#[derive(Debug, Args)]
struct SuiteArgs {
    family: Family,
    /// Gasket levels as `a..b` (inclusive).
    #[arg(long, default_value = "3..6")]
    levels: String,
    /// Half-strip widths.
    #[arg(long, value_delimiter = ',', default_value = "8,16,32")]
    widths: Vec<usize>,
    #[arg(long, default_value_t = 0.125)]
    eps: f64,
    #[arg(long, default_value_t = 50)]
    samples: usize,
    /// Output directory.
    #[arg(short = 'o', long = "output")]
    output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExportKind {
    /// Network edges as CSV.
    Edges,
    /// Trace-form jumps and killing weights as CSV.
    Jumps,
    /// Whitney cover JSON of a network.
    Cover,
    /// Geometry sidecar of a network (graph metric when none exists).
    Sidecar,
}

#[derive(Debug, Args)]
struct ExportArgs {
    kind: ExportKind,
    input: PathBuf,
    #[arg(long, default_value_t = 0.125)]
    eps: f64,
    #[arg(short = 'o', long = "output")]
    output: PathBuf,
}

/// Network summary recorded in manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainMeta {
    pub label: String,
    pub vertices: usize,
    pub boundary: usize,
    pub edges: usize,
    pub ghost: bool,
}

impl DomainMeta {
    fn of(label: impl Into<String>, net: &ResistanceNetwork) -> Self {
        Self {
            label: label.into(),
            vertices: net.vertex_count(),
            boundary: net.boundary().len(),
            edges: net.edges().len(),
            ghost: net.has_ghost(),
        }
    }
}

/// Everything needed to reproduce a run; wall-clock timings live only here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub seed: u64,
    pub solver: SolverConfig,
    pub threads: usize,
    pub domains: Vec<DomainMeta>,
    pub reports: Vec<Report>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub criteria: Vec<CriterionResult>,
    /// Seconds per stage.
    pub timings: BTreeMap<String, f64>,
    pub artifacts: Vec<PathBuf>,
    pub exit_code: i32,
}

/// A set of reports on one domain, as written by `report` and `suite`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub domain: String,
    pub reports: Vec<Report>,
    /// Reports that could not be evaluated on this domain, with the reason.
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub skipped: BTreeMap<String, String>,
}

impl ReportBundle {
    fn pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass != Some(false))
    }

    fn to_csv(&self) -> String {
        let mut out = String::from("report,location,scale,lhs,rhs,ratio\r\n");
        for r in &self.reports {
            out.extend(r.to_csv().split_inclusive("\r\n").skip(1));
        }
        out
    }
}

/// Writes `contents` to `path` atomically (temporary file + rename).
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T, artifacts: &mut Vec<PathBuf>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())?;
    artifacts.push(path.to_path_buf());
    Ok(())
}

fn write_text(path: &Path, text: &str, artifacts: &mut Vec<PathBuf>) -> Result<()> {
    write_atomic(path, text.as_bytes())?;
    artifacts.push(path.to_path_buf());
    Ok(())
}

/// `<dir>/<stem>.geom.json` for a network path `<dir>/<stem>.json`.
pub fn sidecar_path(network: &Path) -> PathBuf {
    let stem = network.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    network.with_file_name(format!("{stem}.geom.json"))
}

fn with_extension(path: &Path, ext: &str) -> PathBuf {
    path.with_extension(ext)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Json(format!("{}: {e}", path.display())))
}

/// Integer radii when the metric is integral at unit edge length, dyadic
/// radii below the diameter otherwise.
fn infer_grid(side: &GeometrySidecar) -> RadiusGrid {
    let edge = side.d_d.values().copied().filter(|&d| d > 0.0).fold(f64::INFINITY, f64::min);
    let integral = side.rho_boundary.iter().flatten().all(|&r| r.fract() == 0.0);
    if edge == 1.0 && integral {
        RadiusGrid::Integer
    } else {
        let diam = side.rho_boundary.iter().flatten().copied().fold(0.0, f64::max);
        RadiusGrid::Dyadic { base: diam }
    }
}

/// A network read from disk with its geometry.
pub struct LoadedDomain {
    pub label: String,
    pub net: ResistanceNetwork,
    pub geom: BoundaryGeometry,
}

/// Reads a network and its sidecar (graph metric at unit edge length when
/// no sidecar exists).
pub fn load_domain(path: &Path) -> Result<LoadedDomain> {
    let spec: NetworkSpec = read_json(path)?;
    let net = spec.build()?;
    let side_path = sidecar_path(path);
    let geom = if side_path.exists() {
        let side: GeometrySidecar = read_json(&side_path)?;
        BoundaryGeometry::from_sidecar(&net, &side, infer_grid(&side))?
    } else {
        BoundaryGeometry::graph_metric(&net, 1.0, RadiusGrid::Integer)?
    };
    let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(LoadedDomain { label, net, geom })
}

/// The deepest interior vertex that is most central: maximal `d_D`, then
/// minimal distance to the farthest boundary point, then lowest index.
pub fn central_pole(net: &ResistanceNetwork, geom: &BoundaryGeometry) -> Result<usize> {
    let depth = net.interior().iter().map(|&v| geom.d_boundary(v)).fold(0.0, f64::max);
    let reach = |v: usize| (0..geom.boundary_len()).map(|a| geom.to_vertex(a, v)).fold(0.0, f64::max);
    net.interior()
        .iter()
        .copied()
        .filter(|&v| geom.d_boundary(v) >= depth)
        .min_by(|&a, &b| reach(a).total_cmp(&reach(b)).then(a.cmp(&b)))
        .ok_or(Error::EmptyInterior)
}

fn pick_pole(d: &LoadedDomain, pole: Option<&str>) -> Result<usize> {
    match pole {
        Some(id) => {
            let v = d.net.index_of(id)?;
            if d.net.is_boundary(v) {
                return Err(Error::NotInterior(id.to_string()));
            }
            Ok(v)
        }
        None => central_pole(&d.net, &d.geom),
    }
}

fn reference_measure(
    d: &LoadedDomain,
    args: &DomainArgs,
    solver: &SolverConfig,
) -> Result<Vec<f64>> {
    match args.measure {
        MeasureArg::Uniform => {
            let nb = d.net.boundary().len();
            Ok(vec![1.0 / nb as f64; nb])
        }
        MeasureArg::Harmonic => harmonic_measure_from(&d.net, pick_pole(d, args.pole.as_deref())?, solver),
    }
}

struct Context {
    solver: SolverConfig,
    seed: u64,
    artifacts: Vec<PathBuf>,
    domains: Vec<DomainMeta>,
    reports: Vec<Report>,
    criteria: Vec<CriterionResult>,
    timings: BTreeMap<String, f64>,
}

impl Context {
    fn time<T>(&mut self, stage: impl Into<String>, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f(self);
        self.timings.insert(stage.into(), start.elapsed().as_secs_f64());
        out
    }
}

fn generate(args: &GenArgs) -> Result<GeneratedDomain> {
    let need = |v: Option<usize>, flag: &str| v.ok_or_else(|| Error::InvalidParameter(format!("--{flag} is required")));
    match args.kind {
        GenKind::Star => {
            let c = args
                .conductances
                .clone()
                .ok_or_else(|| Error::InvalidParameter("--conductances is required".into()))?;
            gen_star(&c)
        }
        GenKind::Path => gen_path(need(args.edges, "edges")?, args.conductances.as_deref()),
        GenKind::SgSlit => gen_sg_slit(need(args.level, "level")?),
        GenKind::HalfStrip => {
            let w = need(args.width, "width")?;
            gen_half_strip(w, args.height.unwrap_or(w), args.far.into())
        }
        GenKind::GridSlit => gen_grid_slit(need(args.width, "width")?, need(args.slit_len, "slit-len")?),
        GenKind::SkewedComb => gen_skewed_comb(need(args.teeth, "teeth")?),
        GenKind::AttenuatedStrip => {
            let w = need(args.width, "width")?;
            let depth = args.depth.ok_or_else(|| Error::InvalidParameter("--depth is required".into()))?;
            gen_attenuated_strip(w, args.height.unwrap_or(w), depth)
        }
    }
}

fn cmd_gen(ctx: &mut Context, args: &GenArgs) -> Result<i32> {
    let d = generate(args)?;
    ctx.domains.push(DomainMeta::of(d.label.clone(), &d.net));
    write_json(&args.output, &d.net.to_spec(), &mut ctx.artifacts)?;
    write_json(&sidecar_path(&args.output), &d.geom.to_sidecar(&d.net), &mut ctx.artifacts)?;
    Ok(EXIT_OK)
}

fn cmd_trace(ctx: &mut Context, args: &TraceArgs) -> Result<i32> {
    let d = load_domain(&args.domain.network)?;
    ctx.domains.push(DomainMeta::of(d.label.clone(), &d.net));
    let solver = ctx.solver;
    let tf = ctx.time("trace", |_| schur_trace(&d.net, &solver))?;
    let measure = reference_measure(&d, &args.domain, &solver)?;
    let tf = tf.with_measure(&measure)?;
    let killing = killing_report(&tf, &measure)?;
    write_json(&args.output, &tf.to_json(), &mut ctx.artifacts)?;
    let pass = killing.pass != Some(false);
    ctx.reports.push(killing.summary());
    Ok(if pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

/// Inputs of the per-domain reports.
struct ReportInputs<'a> {
    net: &'a ResistanceNetwork,
    geom: &'a BoundaryGeometry,
    tf: &'a TraceForm,
    measure: &'a [f64],
    pole: usize,
    psi: ScaleFunction,
    eps: f64,
    samples: usize,
    times: usize,
    seed: u64,
}

fn run_report(kind: ReportKind, inp: &ReportInputs<'_>, solver: &SolverConfig) -> Result<Vec<Report>> {
    let field = ThetaField::from_network(inp.psi.clone(), inp.measure, inp.net, inp.geom)?;
    let samples = || boundary_samples(inp.geom, inp.samples, inp.seed);
    Ok(match kind {
        ReportKind::Besov => vec![
            vd_report(inp.measure, inp.geom)?,
            ls_report(&field)?,
            comparability_report(inp.tf, &samples(), &field)?,
        ],
        ReportKind::Whitney => {
            let cover = build_cover(inp.net, inp.geom, inp.eps)?;
            let pou = partition_of_unity(inp.net, inp.geom, &cover, &inp.psi)?;
            let kernel = crate::besov::BesovKernel::new(&field)?;
            let us = samples();
            let solver = DirichletSolver::interior(inp.net, solver)?;
            let hus: Vec<Vec<f64>> = us
                .iter()
                .map(|u| solver.extend(&inp.net.lift_boundary(u)?))
                .collect::<Result<_>>()?;
            vec![
                cover_stats(&cover, OVERLAP_DILATION)?,
                extension_report(inp.net, &cover, &pou, inp.measure, &kernel, &us)?,
                restriction_report(inp.net, &kernel, &hus)?,
            ]
        }
        ReportKind::Doubling => vec![
            hm_doubling_report(inp.net, inp.geom, &[inp.pole], solver)?,
            cap_doubling_report(inp.net, inp.geom, solver)?,
        ],
        ReportKind::Capdensity => vec![cap_density_report(inp.net, inp.geom, &field, solver)?],
        ReportKind::Jump => vec![jump_kernel_report(inp.tf, inp.measure, &field)?],
        ReportKind::Killing => vec![killing_report(inp.tf, inp.measure)?],
        ReportKind::Exit => vec![exit_time_report(inp.tf, inp.measure, &field)?],
        ReportKind::Heatkernel => vec![hk_report(inp.tf, inp.measure, &field, inp.times)?],
        ReportKind::GreenHm => vec![green_hm_report(inp.net, inp.geom, &field, inp.pole, solver)?],
    })
}

const ALL_REPORTS: [ReportKind; 9] = [
    ReportKind::Besov,
    ReportKind::Whitney,
    ReportKind::Doubling,
    ReportKind::Capdensity,
    ReportKind::Jump,
    ReportKind::Killing,
    ReportKind::Exit,
    ReportKind::Heatkernel,
    ReportKind::GreenHm,
];

fn report_name(kind: ReportKind) -> String {
    kind.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
}

fn write_bundle(ctx: &mut Context, json_path: &Path, bundle: &ReportBundle) -> Result<()> {
    write_json(json_path, bundle, &mut ctx.artifacts)?;
    write_text(&with_extension(json_path, "csv"), &bundle.to_csv(), &mut ctx.artifacts)?;
    ctx.reports.extend(bundle.reports.iter().map(|r| {
        let mut s = r.summary();
        s.name = format!("{}:{}", bundle.domain, s.name);
        s
    }));
    Ok(())
}

fn cmd_report(ctx: &mut Context, args: &ReportArgs) -> Result<i32> {
    let d = load_domain(&args.domain.network)?;
    ctx.domains.push(DomainMeta::of(d.label.clone(), &d.net));
    let solver = ctx.solver;
    let tf = ctx.time("trace", |_| schur_trace(&d.net, &solver))?;
    let measure = reference_measure(&d, &args.domain, &solver)?;
    let inputs = ReportInputs {
        net: &d.net,
        geom: &d.geom,
        tf: &tf,
        measure: &measure,
        pole: pick_pole(&d, args.domain.pole.as_deref())?,
        psi: ScaleFunction::power(args.psi_exponent)?,
        eps: args.eps,
        samples: args.samples,
        times: args.times,
        seed: ctx.seed,
    };
    let reports = ctx.time(report_name(args.kind), |_| run_report(args.kind, &inputs, &solver))?;
    let bundle = ReportBundle {
        domain: d.label.clone(),
        reports,
        skipped: BTreeMap::new(),
    };
    write_bundle(ctx, &args.output, &bundle)?;
    Ok(if bundle.pass() { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn parse_levels(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidParameter(format!("levels must look like `3..6`, got `{s}`"));
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
    if a > b {
        return Err(bad());
    }
    Ok((a..=b).collect())
}

fn cmd_suite(ctx: &mut Context, args: &SuiteArgs) -> Result<i32> {
    let domains: Vec<(GeneratedDomain, f64)> = match args.family {
        Family::SgSlit => parse_levels(&args.levels)?
            .into_iter()
            .map(|l| Ok((gen_sg_slit(l)?, GASKET_WALK_DIM)))
            .collect::<Result<_>>()?,
        Family::HalfStrip => args
            .widths
            .iter()
            .map(|&w| Ok((gen_half_strip(w, w, FarMode::Reflecting)?, LATTICE_WALK_DIM)))
            .collect::<Result<_>>()?,
    };
    std::fs::create_dir_all(&args.output)?;
    let solver = ctx.solver;
    for (d, psi_exponent) in &domains {
        ctx.domains.push(DomainMeta::of(d.label.clone(), &d.net));
        let tf = ctx.time(format!("{}:trace", d.label), |_| schur_trace(&d.net, &solver))?;
        let omega = harmonic_measure_from(&d.net, d.pole, &solver)?;
        let inputs = ReportInputs {
            net: &d.net,
            geom: &d.geom,
            tf: &tf,
            measure: &omega,
            pole: d.pole,
            psi: ScaleFunction::power(*psi_exponent)?,
            eps: args.eps,
            samples: args.samples,
            times: crate::suite::HK_TIMES,
            seed: ctx.seed,
        };
        let mut bundle = ReportBundle {
            domain: d.label.clone(),
            reports: Vec::new(),
            skipped: BTreeMap::new(),
        };
        for kind in ALL_REPORTS {
            let name = report_name(kind);
            match ctx.time(format!("{}:{name}", d.label), |_| run_report(kind, &inputs, &solver)) {
                Ok(reps) => bundle.reports.extend(reps),
                Err(e) => {
                    bundle.skipped.insert(name, e.to_string());
                }
            }
        }
        write_bundle(ctx, &args.output.join(format!("{}.reports.json", d.label)), &bundle)?;
    }
    let cfg = SuiteConfig {
        seed: ctx.seed,
        solver,
    };
    for (id, name, _) in CRITERIA {
        let res = ctx.time(format!("criterion:{id}:{name}"), |_| Ok(run_criterion(id, &cfg)))?;
        ctx.criteria.push(res);
    }
    write_json(&args.output.join("acceptance.json"), &ctx.criteria, &mut ctx.artifacts)?;
    let all_pass = ctx.criteria.iter().all(|c| c.pass);
    Ok(if all_pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn cmd_export(ctx: &mut Context, args: &ExportArgs) -> Result<i32> {
    match args.kind {
        ExportKind::Edges => {
            let d = load_domain(&args.input)?;
            let mut out = String::from("u,v,c\r\n");
            for e in d.net.edges() {
                let _ = write!(out, "{},{},{:.16e}\r\n", csv_field(d.net.id(e.u)), csv_field(d.net.id(e.v)), e.c);
            }
            for (v, &g) in d.net.ghost_conductance().iter().enumerate().filter(|(_, &g)| g > 0.0) {
                let _ = write!(out, "{},,{:.16e}\r\n", csv_field(d.net.id(v)), g);
            }
            write_text(&args.output, &out, &mut ctx.artifacts)?;
        }
        ExportKind::Jumps => {
            let json: TraceFormJson = read_json(&args.input)?;
            let tf = TraceForm::from_json(&json)?;
            let ids = tf.boundary();
            let mut out = String::from("kind,x,y,value\r\n");
            for x in 0..tf.len() {
                for y in x + 1..tf.len() {
                    if tf.jump(x, y) > 0.0 {
                        let _ = write!(out, "jump,{},{},{:.16e}\r\n", csv_field(&ids[x]), csv_field(&ids[y]), tf.jump(x, y));
                    }
                }
            }
            for x in 0..tf.len() {
                let _ = write!(out, "kappa,{},,{:.16e}\r\n", csv_field(&ids[x]), tf.kappa()[x]);
            }
            write_text(&args.output, &out, &mut ctx.artifacts)?;
        }
        ExportKind::Cover => {
            let d = load_domain(&args.input)?;
            let cover = build_cover(&d.net, &d.geom, args.eps)?;
            write_json(&args.output, &cover.to_json(&d.net), &mut ctx.artifacts)?;
        }
        ExportKind::Sidecar => {
            let d = load_domain(&args.input)?;
            write_json(&args.output, &d.geom.to_sidecar(&d.net), &mut ctx.artifacts)?;
        }
    }
    Ok(EXIT_OK)
}

/// Configures the global worker pool from `KRON_TRACE_THREADS` and returns
/// the thread count in effect.
pub fn init_threads() -> Result<usize> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::InvalidParameter(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
        // a pool configured earlier in this process stays in effect
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(rayon::current_num_threads())
}

fn dispatch(ctx: &mut Context, cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Gen(a) => cmd_gen(ctx, a),
        Command::Trace(a) => cmd_trace(ctx, a),
        Command::Report(a) => cmd_report(ctx, a),
        Command::Suite(a) => cmd_suite(ctx, a),
        Command::Export(a) => cmd_export(ctx, a),
    }
}

/// Runs the command line `argv` (including the program name) and returns
/// the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let threads = match init_threads() {
        Ok(n) => n,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let solver = match SolverConfig::with_tolerance(cli.tol) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let mut ctx = Context {
        solver,
        seed: cli.seed,
        artifacts: Vec::new(),
        domains: Vec::new(),
        reports: Vec::new(),
        criteria: Vec::new(),
        timings: BTreeMap::new(),
    };
    let code = match dispatch(&mut ctx, &cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    };
    for c in &ctx.criteria {
        println!("{}", c.line());
    }
    for a in &ctx.artifacts {
        println!("wrote {}", a.display());
    }
    let manifest_path = match &cli.command {
        Command::Suite(a) => Some(a.output.join("manifest.json")),
        _ => cli.manifest.clone(),
    };
    if let Some(path) = manifest_path {
        let manifest = RunManifest {
            command_line: argv.iter().map(|a| a.to_string_lossy().into_owned()).collect(),
            seed: cli.seed,
            solver,
            threads,
            domains: ctx.domains,
            reports: ctx.reports,
            criteria: ctx.criteria,
            timings: ctx.timings,
            artifacts: ctx.artifacts,
            exit_code: code,
        };
        let mut sink = Vec::new();
        if let Err(e) = write_json(&path, &manifest, &mut sink) {
            eprintln!("error: cannot write manifest: {e}");
            return EXIT_USAGE;
        }
    }
    code
}
