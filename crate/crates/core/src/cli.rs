//! Command-line driver. Every subcommand reads an optional JSON run
//! configuration, applies flag overrides and writes CSV/JSON files with a
//! provenance header into the output directory.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::certificate::{certify_system, min_eig_curve, DEFAULT_EPS};
use crate::components::{gfm_default_admittance, line_admittance, make_multiplier, GfmParams, LineParams, MultiplierFilter, MultiplierSpec, OMEGA0_50HZ};
use crate::error::{Error, Result};
use crate::io::{fmt_f64, read_json, short_hash, write_csv, write_json, ModelJson, OutputHeader};
use crate::lti::{hermitian_min_eig, FrequencyGrid, StateSpaceModel};
use crate::network::{
    alpha_samples, bundled_network, component_admittances, device_models, droop_sweep, homotopy_trajectory, load_network,
    random_allocation_experiment, NetworkTopology, LOCI_COLUMNS, STABILITY_MARGIN, SWEEP_COLUMNS,
};
use crate::synthesis::{synthesize, MultiplierTheta, SynthesisConfig, SynthesisResult};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;
pub const EXIT_CERTIFICATE_FAILED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "pnpcert", version, about = "Plug-and-play small-signal stability certificates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Frequency responses and Hermitian margins of each component.
    Model(CommonArgs),
    /// Synthesize a rational multiplier for the component set.
    Synth(CommonArgs),
    /// Evaluate the per-component certificate for a multiplier.
    Certify(CommonArgs),
    /// Certificate and eigenvalue verdicts over a droop grid.
    Sweep(CommonArgs),
    /// Random inverter allocations and full-network spectra.
    Eig(CommonArgs),
    /// Eigenvalue loci along the homotopy from the passive reference.
    Homotopy(CommonArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub grid_min: Option<f64>,
    #[arg(long)]
    pub grid_max: Option<f64>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Multiplier order for synthesis.
    #[arg(long)]
    pub order: Option<usize>,
    /// Random starts for synthesis.
    #[arg(long)]
    pub starts: Option<usize>,
    /// Certificate strictness margin.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Multiplier JSON (a multiplier spec or a `synth` output).
    #[arg(long)]
    pub multiplier: Option<PathBuf>,
    /// Use the piecewise rotation/identity multiplier with this breakpoint (rad/s).
    #[arg(long, conflicts_with = "multiplier")]
    pub piecewise: Option<f64>,
}

// ---------------------------------------------------------------------------
// Run configuration

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { min: 1e-2, max: 1e5, points: 2000 }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<FrequencyGrid> {
        FrequencyGrid::with_bounds(self.min, self.max, self.points)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl RangeSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        if self.points == 0 || !(self.min <= self.max) || !(self.min > 0.0) {
            return Err(Error::Validation(format!("bad range [{}, {}] x {}", self.min, self.max, self.points)));
        }
        if self.points == 1 {
            return Ok(vec![self.min]);
        }
        Ok((0..self.points).map(|i| self.min + (self.max - self.min) * i as f64 / (self.points - 1) as f64).collect())
    }
}

/// Explicit component entry (alternative to taking a network's components).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ComponentSpec {
    Gfm {
        id: String,
        #[serde(default)]
        params: GfmParams,
    },
    Line {
        id: String,
        r: f64,
        x: f64,
        #[serde(default = "default_omega0")]
        omega0: f64,
    },
    Model {
        id: String,
        model: ModelJson,
    },
}

fn default_omega0() -> f64 {
    OMEGA0_50HZ
}

impl ComponentSpec {
    pub fn build(&self) -> Result<(String, StateSpaceModel)> {
        match self {
            ComponentSpec::Gfm { id, params } => Ok((id.clone(), gfm_default_admittance(params)?)),
            ComponentSpec::Line { id, r, x, omega0 } => Ok((id.clone(), line_admittance(&LineParams::from_rx(*r, *x, *omega0)?)?)),
            ComponentSpec::Model { id, model } => {
                let m = model.to_model()?;
                if m.inputs() != 2 || m.outputs() != 2 {
                    return Err(Error::DimensionMismatch(format!("component `{id}` is not 2x2")));
                }
                Ok((id.clone(), m))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub m_p: RangeSpec,
    pub n_q: RangeSpec,
}

impl Default for SweepSpec {
    fn default() -> Self {
        let r = RangeSpec { min: 0.01, max: 0.05, points: 17 };
        Self { m_p: r.clone(), n_q: r }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigSpec {
    pub trials: usize,
    /// Inverter counts; one experiment per entry.
    pub devices: Vec<usize>,
    pub margin: f64,
}

impl Default for EigSpec {
    fn default() -> Self {
        Self { trials: 50, devices: vec![8, 10], margin: STABILITY_MARGIN }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HomotopySpec {
    pub samples: usize,
    /// Passive RL shunt replacing each inverter at alpha = 0.
    pub reference_r: f64,
    pub reference_x: f64,
    /// Optional explicit reference network instead of the RL replacement.
    pub reference_network: Option<String>,
}

impl Default for HomotopySpec {
    fn default() -> Self {
        Self { samples: 21, reference_r: 1.0, reference_x: 0.2, reference_network: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub max_iters: usize,
    pub temperatures: Vec<f64>,
    pub omega_scale: f64,
    pub warm_start: bool,
    pub refine_rounds: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        let c = SynthesisConfig::default();
        Self {
            max_iters: c.max_iters,
            temperatures: c.temperatures,
            omega_scale: c.omega_scale,
            warm_start: c.warm_start,
            refine_rounds: c.refine_rounds,
        }
    }
}

/// Fully resolved run configuration; its JSON form is hashed into every
/// output header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Bundled network name (`two_bus`, `ieee39`) or path to a network JSON.
    pub network: String,
    /// Droop override `[m_p, n_q]` applied to every inverter of the network.
    pub droop: Option<[f64; 2]>,
    /// Explicit components; when absent the network's components are used.
    pub components: Option<Vec<ComponentSpec>>,
    pub multiplier: Option<MultiplierSpec>,
    pub grid: GridSpec,
    pub eps: f64,
    pub seed: u64,
    pub order: usize,
    pub starts: usize,
    pub synthesis: SynthSpec,
    pub sweep: SweepSpec,
    pub eig: EigSpec,
    pub homotopy: HomotopySpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            network: "two_bus".into(),
            droop: None,
            components: None,
            multiplier: None,
            grid: GridSpec::default(),
            eps: DEFAULT_EPS,
            seed: 1,
            order: 6,
            starts: 16,
            synthesis: SynthSpec::default(),
            sweep: SweepSpec::default(),
            eig: EigSpec::default(),
            homotopy: HomotopySpec::default(),
        }
    }
}

/// Resolved config plus the directory relative paths are taken from.
struct Ctx {
    cfg: RunConfig,
    base: PathBuf,
    out: PathBuf,
    hash: String,
}

fn resolve(args: &CommonArgs) -> Result<Ctx> {
    let (mut cfg, base) = match &args.config {
        Some(p) => {
            if !p.is_file() {
                return Err(Error::Validation(format!("config file {} does not exist", p.display())));
            }
            let c: RunConfig = read_json(p)?;
            (c, p.parent().map(Path::to_path_buf).unwrap_or_default())
        }
        None => (RunConfig::default(), PathBuf::from(".")),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(v) = args.grid_min {
        cfg.grid.min = v;
    }
    if let Some(v) = args.grid_max {
        cfg.grid.max = v;
    }
    if let Some(v) = args.grid_points {
        cfg.grid.points = v;
    }
    if let Some(v) = args.order {
        cfg.order = v;
    }
    if let Some(v) = args.starts {
        cfg.starts = v;
    }
    if let Some(v) = args.eps {
        cfg.eps = v;
    }
    if let Some(p) = &args.multiplier {
        cfg.multiplier = Some(read_multiplier_file(p)?);
    }
    if let Some(w) = args.piecewise {
        cfg.multiplier = Some(MultiplierSpec::Piecewise { omega_f: w });
    }
    if !(cfg.eps >= 0.0 && cfg.eps.is_finite()) {
        return Err(Error::Validation(format!("eps must be finite and non-negative (got {})", cfg.eps)));
    }
    cfg.grid.build()?;
    let hash = short_hash(serde_json::to_string(&cfg)?.as_bytes());
    fs::create_dir_all(&args.out)?;
    Ok(Ctx { cfg, base, out: args.out.clone(), hash })
}

/// Accepts a bare multiplier spec or any output file whose body carries one.
pub fn read_multiplier_file(path: &Path) -> Result<MultiplierSpec> {
    if !path.is_file() {
        return Err(Error::Validation(format!("multiplier file {} does not exist", path.display())));
    }
    let v: serde_json::Value = read_json(path)?;
    let inner = v.pointer("/body/multiplier").cloned().unwrap_or(v);
    serde_json::from_value(inner).map_err(|e| Error::Parse { location: path.display().to_string(), message: e.to_string() })
}

impl Ctx {
    fn network(&self) -> Result<NetworkTopology> {
        self.network_named(&self.cfg.network)
    }

    fn network_named(&self, name: &str) -> Result<NetworkTopology> {
        let t = match bundled_network(name) {
            Ok(t) => t,
            Err(_) => {
                let p = self.base.join(name);
                if !p.is_file() {
                    return Err(Error::Validation(format!("network `{name}` is neither bundled nor a file")));
                }
                load_network(&p)?
            }
        };
        Ok(match self.cfg.droop {
            Some([m_p, n_q]) => t.with_droop(m_p, n_q),
            None => t,
        })
    }

    fn components(&self) -> Result<Vec<(String, StateSpaceModel)>> {
        if let Some(list) = &self.cfg.components {
            return list.iter().map(ComponentSpec::build).collect();
        }
        let t = self.network()?;
        Ok(component_admittances(&t, &device_models(&t)?))
    }

    fn multiplier(&self) -> Result<Option<MultiplierFilter>> {
        self.cfg.multiplier.as_ref().map(make_multiplier).transpose()
    }

    fn header(&self, m: Option<&MultiplierFilter>) -> OutputHeader {
        OutputHeader::new(self.hash.clone(), m.map_or_else(|| "none".to_string(), MultiplierFilter::fingerprint))
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

// ---------------------------------------------------------------------------
// Commands

/// Result of one subcommand: exit code plus summary lines for stdout.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub summary: Vec<String>,
}

fn sanitize(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn cmd_model(ctx: &Ctx) -> Result<Outcome> {
    let comps = ctx.components()?;
    if comps.is_empty() {
        return Err(Error::Validation("no components".into()));
    }
    let grid = ctx.cfg.grid.build()?;
    let header = ctx.header(None);
    let cols = ["omega", "y11_re", "y11_im", "y12_re", "y12_im", "y21_re", "y21_im", "y22_re", "y22_im", "herm_min_eig"];
    let mut summary = Vec::new();
    for (id, y) in &comps {
        let mut rows = Vec::with_capacity(grid.len());
        let mut lo = f64::INFINITY;
        for &w in grid.points() {
            let r = y.freq_response(w)?;
            let h = hermitian_min_eig(&r);
            lo = lo.min(h);
            let mut row = vec![fmt_f64(w)];
            for i in 0..2 {
                for j in 0..2 {
                    row.push(fmt_f64(r[(i, j)].re));
                    row.push(fmt_f64(r[(i, j)].im));
                }
            }
            row.push(fmt_f64(h));
            rows.push(row);
        }
        let file = format!("model_{}.csv", sanitize(id));
        write_csv(&ctx.path(&file), &header, &cols, &rows)?;
        summary.push(format!("{id}: order {} min herm eig {:.6e} -> {file}", y.order(), lo));
    }
    Ok(Outcome { code: EXIT_OK, summary })
}

#[derive(Debug, Clone, Serialize)]
struct SynthBody<'a> {
    multiplier: MultiplierSpec,
    order: usize,
    theta: &'a MultiplierTheta,
    success: bool,
    grid_objective: f64,
    verified_objective: f64,
    components: &'a [crate::synthesis::ComponentNorm],
    best_start: usize,
    starts: &'a [crate::synthesis::StartSummary],
    trace_len: usize,
    trace_first: Option<f64>,
    trace_last: Option<f64>,
    certificate: &'a Option<crate::certificate::Certificate>,
}

fn cmd_synth(ctx: &Ctx) -> Result<Outcome> {
    let comps = ctx.components()?;
    if comps.is_empty() {
        return Err(Error::Validation("no components".into()));
    }
    let s = &ctx.cfg.synthesis;
    let cfg = SynthesisConfig {
        grid: ctx.cfg.grid.build()?,
        starts: ctx.cfg.starts,
        max_iters: s.max_iters,
        temperatures: s.temperatures.clone(),
        seed: ctx.cfg.seed,
        omega_scale: s.omega_scale,
        warm_start: s.warm_start,
        refine_rounds: s.refine_rounds,
        ..SynthesisConfig::default()
    };
    let r: SynthesisResult = synthesize(&comps, ctx.cfg.order, &cfg)?;
    let m = r.multiplier()?;
    let header = ctx.header(Some(&m));
    let body = SynthBody {
        multiplier: m.to_spec(),
        order: r.theta.order,
        theta: &r.theta,
        success: r.success,
        grid_objective: r.grid_objective,
        verified_objective: r.verified_objective,
        components: &r.components,
        best_start: r.best_start,
        starts: &r.starts,
        trace_len: r.trace.len(),
        trace_first: r.trace.first().copied(),
        trace_last: r.trace.last().copied(),
        certificate: &r.certificate,
    };
    write_json(&ctx.path("multiplier.json"), &header, &body)?;
    let rows: Vec<Vec<String>> = r.trace.iter().enumerate().map(|(i, v)| vec![i.to_string(), fmt_f64(*v)]).collect();
    write_csv(&ctx.path("synthesis_trace.csv"), &header, &["step", "smoothed_objective"], &rows)?;
    let mut summary = vec![format!(
        "order {} from start {}: grid objective {:.9}, verified {:.9} -> {}",
        r.theta.order,
        r.best_start,
        r.grid_objective,
        r.verified_objective,
        if r.success { "certified" } else { "inconclusive" }
    )];
    for c in &r.components {
        summary.push(format!("  {}: verified norm {:.9} minimum phase {}", c.id, c.verified_norm, c.minimum_phase));
    }
    Ok(Outcome { code: if r.success { EXIT_OK } else { EXIT_INCONCLUSIVE }, summary })
}

fn cmd_certify(ctx: &Ctx) -> Result<Outcome> {
    let comps = ctx.components()?;
    if comps.is_empty() {
        return Err(Error::Validation("no components".into()));
    }
    let m = ctx.multiplier()?.ok_or_else(|| Error::Validation("certify needs a multiplier (--multiplier or --piecewise)".into()))?;
    let grid = ctx.cfg.grid.build()?;
    let cert = certify_system(&m, &comps, &grid, ctx.cfg.eps)?;
    let header = ctx.header(Some(&m));
    write_json(&ctx.path("certificate.json"), &header, &serde_json::json!({ "multiplier": m.to_spec(), "certificate": cert }))?;
    let curves: Vec<Vec<(f64, f64)>> = comps.iter().map(|(_, y)| min_eig_curve(&m, y, &grid)).collect::<Result<_>>()?;
    let mut cols = vec!["omega".to_string()];
    cols.extend(comps.iter().map(|(id, _)| id.clone()));
    let rows: Vec<Vec<String>> = (0..grid.len())
        .map(|i| {
            let mut row = vec![fmt_f64(grid.points()[i])];
            row.extend(curves.iter().map(|c| fmt_f64(c[i].1)));
            row
        })
        .collect();
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    write_csv(&ctx.path("certificate_curve.csv"), &header, &col_refs, &rows)?;
    let mut summary: Vec<String> = cert
        .reports
        .iter()
        .map(|r| format!("{}: min eig {:.6e} at {:.6e} rad/s -> {}", r.id, r.min_eig, r.argmin_omega, if r.pass { "pass" } else { "fail" }))
        .collect();
    summary.push(format!("certificate {}", if cert.pass { "PASS" } else { "FAIL" }));
    Ok(Outcome { code: if cert.pass { EXIT_OK } else { EXIT_CERTIFICATE_FAILED }, summary })
}

fn cmd_sweep(ctx: &Ctx) -> Result<Outcome> {
    let t = ctx.network()?;
    let m = ctx.multiplier()?.unwrap_or(MultiplierFilter::piecewise(OMEGA0_50HZ)?);
    let grid = ctx.cfg.grid.build()?;
    let pts = droop_sweep(&t, &m, &ctx.cfg.sweep.m_p.values()?, &ctx.cfg.sweep.n_q.values()?, &grid, ctx.cfg.eps)?;
    let rows: Vec<Vec<String>> = pts.iter().map(|p| p.csv_row()).collect();
    write_csv(&ctx.path("sweep.csv"), &ctx.header(Some(&m)), &SWEEP_COLUMNS, &rows)?;
    let certified = pts.iter().filter(|p| p.certified).count();
    let stable = pts.iter().filter(|p| p.stable).count();
    let unsound = pts.iter().filter(|p| p.certified && !p.stable).count();
    Ok(Outcome {
        code: EXIT_OK,
        summary: vec![format!(
            "{} points: {certified} certified, {stable} stable, {unsound} certified-but-unstable",
            pts.len()
        )],
    })
}

fn cmd_eig(ctx: &Ctx) -> Result<Outcome> {
    let t = ctx.network()?;
    let spec = &ctx.cfg.eig;
    let header = ctx.header(None);
    let mut summary = Vec::new();
    for &n in &spec.devices {
        let reps = random_allocation_experiment(&t, spec.trials, n, ctx.cfg.seed, spec.margin)?;
        let rows: Vec<Vec<String>> = reps
            .iter()
            .map(|r| {
                let alloc: Vec<String> = r.allocation.iter().map(u32::to_string).collect();
                vec![
                    r.trial.unwrap_or(0).to_string(),
                    alloc.join(" "),
                    fmt_f64(r.abscissa),
                    u8::from(r.stable).to_string(),
                    r.eigenvalues.len().to_string(),
                ]
            })
            .collect();
        write_csv(&ctx.path(&format!("eig_{n}.csv")), &header, &["trial", "allocation", "abscissa", "stable", "n_eig"], &rows)?;
        let spectra: Vec<Vec<String>> = reps
            .iter()
            .flat_map(|r| {
                let trial = r.trial.unwrap_or(0).to_string();
                r.eigenvalues.iter().map(move |z| vec![trial.clone(), fmt_f64(z.re), fmt_f64(z.im)])
            })
            .collect();
        write_csv(&ctx.path(&format!("eig_{n}_spectra.csv")), &header, &["trial", "re", "im"], &spectra)?;
        let stable = reps.iter().filter(|r| r.stable).count();
        let worst = reps.iter().map(|r| r.abscissa).fold(f64::NEG_INFINITY, f64::max);
        summary.push(format!("{n} inverters: {stable}/{} stable (worst abscissa {:.6e})", reps.len(), worst));
    }
    Ok(Outcome { code: EXIT_OK, summary })
}

fn cmd_homotopy(ctx: &Ctx) -> Result<Outcome> {
    let t = ctx.network()?;
    let h = &ctx.cfg.homotopy;
    let reference = match &h.reference_network {
        Some(name) => ctx.network_named(name)?,
        None => t.passive_reference(h.reference_r, h.reference_x),
    };
    let alphas = alpha_samples(h.samples);
    let pts = homotopy_trajectory(&reference, &t, &alphas)?;
    let mut rows = Vec::new();
    for p in &pts {
        for (z, c) in p.eigenvalues.iter().zip(&p.crossing) {
            rows.push(vec![fmt_f64(p.alpha), fmt_f64(z.re), fmt_f64(z.im), u8::from(*c).to_string()]);
        }
    }
    write_csv(&ctx.path("homotopy.csv"), &ctx.header(None), &LOCI_COLUMNS, &rows)?;
    let crossings: usize = pts.iter().map(|p| p.crossings()).sum();
    let mut summary = vec![format!("{} alpha samples, {crossings} axis crossing(s) flagged", pts.len())];
    for p in pts.iter().filter(|p| p.crossings() > 0) {
        summary.push(format!("  crossing between alpha samples ending at {:.4}", p.alpha));
    }
    Ok(Outcome { code: EXIT_OK, summary })
}

fn is_input_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Parse { .. }
            | Error::Validation(_)
            | Error::Io(_)
            | Error::Json(_)
            | Error::InvalidParams(_)
            | Error::InvalidGrid(_)
            | Error::InvalidOrder(_)
            | Error::DimensionMismatch(_)
            | Error::FrameMismatch(_)
            | Error::MissingDeviceModel(_)
            | Error::OutOfRange(_)
            | Error::NonHurwitzA
            | Error::NonFinite(_)
    )
}

fn configure_threads() {
    if let Some(n) = std::env::var("PNPCERT_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if n > 0 {
            // Fails only if a global pool already exists, which is harmless.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

/// Executes a parsed command.
pub fn execute(cmd: &Command) -> Result<Outcome> {
    let (args, f): (&CommonArgs, fn(&Ctx) -> Result<Outcome>) = match cmd {
        Command::Model(a) => (a, cmd_model),
        Command::Synth(a) => (a, cmd_synth),
        Command::Certify(a) => (a, cmd_certify),
        Command::Sweep(a) => (a, cmd_sweep),
        Command::Eig(a) => (a, cmd_eig),
        Command::Homotopy(a) => (a, cmd_homotopy),
    };
    f(&resolve(args)?)
}

/// Parses arguments, runs, prints and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    configure_threads();
    match execute(&cli.command) {
        Ok(o) => {
            for line in &o.summary {
                println!("{line}");
            }
            o.code
        }
        Err(e) => {
            eprintln!("error: {e}");
            if is_input_error(&e) {
                EXIT_INPUT
            } else {
                EXIT_FAILURE
            }
        }
    }
}
