//! Command-line front end.
//!
//! Exit codes: 0 success, 2 precondition / input failure, 3 numerical or
//! tolerance failure, 64 usage error (unknown command or bad flag).
//!
//! `--config <path>` names a JSON object with optional keys `seed`, `out` and
//! `command` (an argument vector such as `["verify", "--suite", "holo"]`).
//! Flags given on the command line take precedence. Reports go to `--out <dir>`
//! when set (written atomically) and to stdout otherwise.
//!
//! Region CSV: `j,theta,polygon_id,open`, one row per polygon vertex in order;
//! `open` flags the edge leaving that vertex. The dense grid CSV (`--grid NJ,NT`)
//! has columns `j,theta,member`.
//!
//! Function specs use the grammar `sgp`, `chi+`, `chi-`, `power(λ)`, `bump(N,M)`,
//! `resolvent(k)`, `eta(δ)`, `scale(c,f)`, `dilate(t,f)`, `tilde(f)`, `mul(f,g)`,
//! `add(f,g)`.

use crate::atoms::z_decompose;
use crate::bvp::{self, BvpSetup, Component, Problem};
use crate::calculus::{self, CoefficientMatrix, MultiplierOp, OpKind};
use crate::exponents::Exponent;
use crate::grid::{random_boundary, random_field, BoundaryField, BoundarySpec, Field, GridSpec, WhitneyParam};
use crate::holo::HoloFn;
use crate::io;
use crate::quasinorms::{l2s_norm, tent_norm, z_norm, z_norm_dyadic};
use crate::region::{region_heart, region_imax, region_imin, region_decay, Region};
use crate::verify;
use crate::{Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PRECONDITION: i32 = 2;
pub const EXIT_TOLERANCE: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser, Debug)]
#[command(name = "hslab", version, about = "Tent spaces, Z-spaces and first-order boundary value problems on a discretised half-space")]
pub struct Cli {
    /// JSON config with optional `seed`, `out` and `command` keys
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random field
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for reports and fields
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Negate χ⁺ in the functional calculus (mutation testing)
    #[arg(long, global = true, hide = true)]
    inject_chi_flip: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Export exponent regions as CSV
    Regions(RegionsArgs),
    /// Tent, Z, dyadic Z or weighted L² quasinorm of a field
    Norm(NormArgs),
    /// Atomic Z-space decomposition of a field
    Atoms(AtomsArgs),
    /// Apply f(DB) or f(BD) to a boundary field
    Calc(CalcArgs),
    /// Solve a regularity or Neumann problem from a problem file
    Solve(SolveArgs),
    /// Single or double layer potential at height t
    Layer(LayerArgs),
    /// Well-posedness, decay and perturbation probes
    Probe(ProbeArgs),
    /// Run verification suites
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Clone)]
pub struct RegionsArgs {
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// The region I_max
    #[arg(long, conflicts_with_all = ["imin", "decay"])]
    imax: bool,
    /// The identification region I_min(ε, ε′)
    #[arg(long, conflicts_with = "decay")]
    imin: bool,
    /// The decay half-plane with parameter λ
    #[arg(long)]
    decay: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    #[arg(long, default_value_t = 0.0)]
    eps_prime: f64,
    /// Export the ♥-image instead
    #[arg(long)]
    heart: bool,
    /// Also emit a dense membership grid with NJ×NT samples
    #[arg(long, value_parser = parse_pair)]
    grid: Option<(usize, usize)>,
}

fn parse_pair(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected NJ,NT")?;
    Ok((a.trim().parse().map_err(|e| format!("{e}"))?, b.trim().parse().map_err(|e| format!("{e}"))?))
}

/// Grid used when no input file is given: a seeded complex Gaussian field.
#[derive(Args, Debug, Clone)]
pub struct GridArgs {
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    m: usize,
    #[arg(long = "L", default_value_t = 8.0)]
    l: f64,
    #[arg(long, default_value_t = 64)]
    nx: usize,
    #[arg(long, default_value_t = 0.05)]
    t_min: f64,
    #[arg(long, default_value_t = 1.0)]
    t_max: f64,
    #[arg(long, default_value_t = 32)]
    levels: usize,
    /// Random fields are scaled by t^γ
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    gamma: f64,
}

impl GridArgs {
    fn spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.n, self.m, self.l, self.nx, self.t_min, self.t_max, self.levels)
    }
}

/// Exponent either as (p, s) / (∞, s, α) or as (j, θ).
#[derive(Args, Debug, Clone)]
pub struct ExponentArgs {
    /// Integrability index; `inf` for p = ∞
    #[arg(long, value_parser = parse_p)]
    p: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    s: f64,
    /// Hölder index for p = ∞
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long, allow_hyphen_values = true, conflicts_with = "p")]
    j: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
}

fn parse_p(s: &str) -> std::result::Result<f64, String> {
    match s {
        "inf" | "infinity" | "∞" => Ok(f64::INFINITY),
        _ => s.parse::<f64>().map_err(|e| e.to_string()),
    }
}

impl ExponentArgs {
    fn at(&self, n: usize) -> Result<Exponent> {
        match (self.p, self.j) {
            (Some(p), _) if p.is_infinite() => Ok(Exponent::infinite(n, self.s, self.alpha)),
            (Some(p), _) if p > 0.0 => Ok(Exponent::finite(n, p, self.s)),
            (Some(p), _) => Err(Error::Precondition(format!("integrability index must be positive, got {p}"))),
            (None, Some(j)) => Ok(Exponent::from_views(n, j, self.theta.unwrap_or(0.0))),
            (None, None) => Ok(Exponent::finite(n, 2.0, self.s)),
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    Tent,
    Z,
    Dyadic,
    L2s,
}

#[derive(Args, Debug, Clone)]
pub struct NormArgs {
    /// HSF half-space field (a seeded random field when absent)
    #[arg(long)]
    field: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = NormKind::Tent)]
    kind: NormKind,
    #[command(flatten)]
    exponent: ExponentArgs,
    /// Cone aperture
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 1.0)]
    c0: f64,
    #[arg(long, default_value_t = 2.0)]
    c1: f64,
    /// Dyadic scale offset
    #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
    k: i32,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args, Debug, Clone)]
pub struct AtomsArgs {
    #[arg(long)]
    field: Option<PathBuf>,
    #[command(flatten)]
    exponent: ExponentArgs,
    #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
    k: i32,
    #[arg(long, default_value_t = 1.0)]
    c0: f64,
    #[arg(long, default_value_t = 2.0)]
    c1: f64,
    #[command(flatten)]
    grid: GridArgs,
}

/// Coefficient source: a JSON file, a seeded random accretive matrix, or the identity.
#[derive(Args, Debug, Clone)]
pub struct CoeffArgs {
    /// Coefficient JSON (matrix A, transformed to Â internally)
    #[arg(long)]
    coefficients: Option<PathBuf>,
    /// Use a seeded random accretive matrix instead of the identity
    #[arg(long)]
    random: bool,
}

impl CoeffArgs {
    fn load(&self, m: usize, n: usize, seed: u64) -> Result<CoefficientMatrix> {
        match &self.coefficients {
            Some(p) => {
                let a = io::read_coefficients(p)?;
                if a.m != m || a.n != n {
                    return Err(Error::Precondition(format!("coefficients are for (m, n) = ({}, {}), grid has ({m}, {n})", a.m, a.n)));
                }
                Ok(a)
            }
            None if self.random => Ok(CoefficientMatrix::random_accretive(m, n, seed, 0.5)),
            None => Ok(CoefficientMatrix::identity(m, n)),
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum KindArg {
    Db,
    Bd,
}

#[derive(Args, Debug, Clone)]
pub struct CalcArgs {
    /// Function spec, e.g. `bump(1,0)` or `chi+`
    #[arg(long = "fn", default_value = "chi+")]
    func: String,
    #[arg(long, value_enum, default_value_t = KindArg::Db)]
    kind: KindArg,
    #[command(flatten)]
    coeff: CoeffArgs,
    /// HSF boundary field with m(1+n) channels (seeded random when absent)
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args, Debug, Clone)]
pub struct SolveArgs {
    /// Problem JSON: coefficients, grid, problem, exponent, datum
    #[arg(long)]
    problem: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Single,
    Double,
}

#[derive(Args, Debug, Clone)]
pub struct LayerArgs {
    #[arg(long, value_enum, default_value_t = LayerKind::Single)]
    kind: LayerKind,
    /// Height; negative values give the lower half-space
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    t: f64,
    #[command(flatten)]
    coeff: CoeffArgs,
    /// HSF boundary field with m channels (seeded random when absent)
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ProbeKind {
    Wp,
    Decay,
    Perturb,
}

#[derive(Args, Debug, Clone)]
pub struct ProbeArgs {
    #[arg(long, value_enum, default_value_t = ProbeKind::Wp)]
    kind: ProbeKind,
    #[arg(long, value_enum, default_value_t = ComponentArg::Perp)]
    component: ComponentArg,
    #[command(flatten)]
    coeff: CoeffArgs,
    /// Second coefficient file for the perturbation probe
    #[arg(long)]
    perturbed: Option<PathBuf>,
    /// Size of the random perturbation when no file is given
    #[arg(long, default_value_t = 1e-2)]
    delta: f64,
    /// HSF half-space field for the decay probe
    #[arg(long)]
    field: Option<PathBuf>,
    #[command(flatten)]
    exponent: ExponentArgs,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ComponentArg {
    Perp,
    Par,
}

#[derive(Args, Debug, Clone)]
pub struct VerifyArgs {
    /// Suite name (exponents, regions, quasinorms, atoms, holo, calculus, bvp)
    #[arg(long, required_unless_present = "all")]
    suite: Option<String>,
    /// Run every suite
    #[arg(long)]
    all: bool,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    seed: Option<u64>,
    out: Option<PathBuf>,
    command: Option<Vec<String>>,
}

struct Ctx<'a> {
    seed: u64,
    out: Option<PathBuf>,
    stdout: &'a mut dyn Write,
}

impl Ctx<'_> {
    /// Report to `<out>/<name>` when an output directory is set, else to stdout.
    fn emit(&mut self, name: &str, text: &str) -> Result<()> {
        match &self.out {
            Some(dir) => io::write_atomic(&dir.join(name), text.as_bytes()),
            None => Ok(self.stdout.write_all(text.as_bytes())?),
        }
    }
    fn emit_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
        text.push('\n');
        self.emit(name, &text)
    }
    /// Fields are only written with an output directory.
    fn field_path(&self, name: &str) -> Option<PathBuf> {
        self.out.as_ref().map(|d| d.join(name))
    }
}

/// Parse and dispatch; returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => return usage_error(e, stdout, stderr),
    };
    crate::init_threads();
    let config = match &cli.config {
        Some(p) => match read_config(p) {
            Ok(c) => c,
            Err(e) => return report_error(e, stderr),
        },
        None => ConfigFile::default(),
    };
    let command = match (cli.command, config.command) {
        (Some(c), _) => c,
        (None, Some(argv)) => {
            let full = std::iter::once("hslab".to_string()).chain(argv);
            match Cli::try_parse_from(full) {
                Ok(Cli { command: Some(c), .. }) => c,
                Ok(_) => return missing_command(stderr),
                Err(e) => return usage_error(e, stdout, stderr),
            }
        }
        (None, None) => return missing_command(stderr),
    };
    calculus::set_chi_plus_fault(cli.inject_chi_flip);
    let mut ctx = Ctx { seed: cli.seed.or(config.seed).unwrap_or(42), out: cli.out.or(config.out), stdout };
    if let Some(dir) = &ctx.out {
        if let Err(e) = std::fs::create_dir_all(dir) {
            return report_error(e.into(), stderr);
        }
    }
    let result = dispatch(&command, &mut ctx);
    calculus::set_chi_plus_fault(false);
    match result {
        Ok(code) => code,
        Err(e) => report_error(e, stderr),
    }
}

fn usage_error(e: clap::Error, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    use clap::error::ErrorKind;
    match e.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
            let _ = write!(stdout, "{}", e.render());
            EXIT_OK
        }
        _ => {
            let _ = write!(stderr, "{}", e.render());
            EXIT_USAGE
        }
    }
}

fn missing_command(stderr: &mut dyn Write) -> i32 {
    use clap::CommandFactory;
    let _ = writeln!(stderr, "error: no command given\n\n{}", Cli::command().render_usage());
    EXIT_USAGE
}

fn report_error(e: Error, stderr: &mut dyn Write) -> i32 {
    let _ = writeln!(stderr, "error: {e}");
    match e {
        Error::Numeric(_) => EXIT_TOLERANCE,
        _ => EXIT_PRECONDITION,
    }
}

fn read_config(p: &Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(p)?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", p.display())))
}

fn dispatch(cmd: &Command, ctx: &mut Ctx) -> Result<i32> {
    match cmd {
        Command::Regions(a) => regions(a, ctx),
        Command::Norm(a) => norm(a, ctx),
        Command::Atoms(a) => atoms(a, ctx),
        Command::Calc(a) => calc(a, ctx),
        Command::Solve(a) => solve(a, ctx),
        Command::Layer(a) => layer(a, ctx),
        Command::Probe(a) => probe(a, ctx),
        Command::Verify(a) => verify_cmd(a, ctx),
    }
}

fn regions(a: &RegionsArgs, ctx: &mut Ctx) -> Result<i32> {
    let mut r: Region = if a.imin {
        region_imin(a.n, a.eps, a.eps_prime)?
    } else if let Some(l) = a.decay {
        region_decay(a.n, l)?
    } else {
        region_imax(a.n)
    };
    if a.heart {
        r = region_heart(&r);
    }
    ctx.emit("regions.csv", &r.vertex_csv())?;
    if let Some((nj, nt)) = a.grid {
        ctx.emit("regions_grid.csv", &r.grid_csv((-1.0, 2.0), (-2.0, 1.0), nj, nt))?;
    }
    Ok(EXIT_OK)
}

fn load_field(path: &Option<PathBuf>, grid: &GridArgs, seed: u64) -> Result<Field> {
    match path {
        Some(p) => io::read_hsf(p)?.into_field(),
        None => {
            let spec = grid.spec()?;
            Ok(random_field(&spec, spec.m, seed, grid.gamma))
        }
    }
}

fn norm(a: &NormArgs, ctx: &mut Ctx) -> Result<i32> {
    let f = load_field(&a.field, &a.grid, ctx.seed)?;
    let p = a.exponent.at(f.spec().n)?;
    let c = WhitneyParam::new(a.c0, a.c1)?;
    let rep = match a.kind {
        NormKind::Tent => serde_json::to_value(tent_norm(&f, &p, a.beta)?),
        NormKind::Z => serde_json::to_value(z_norm(&f, &p, c)?),
        NormKind::Dyadic => serde_json::to_value(z_norm_dyadic(&f, &p, a.k)?),
        NormKind::L2s => Ok(json!({ "op": "l2s_norm", "exponent": p, "value": l2s_norm(&f, p.theta) })),
    }
    .map_err(|e| Error::Format(e.to_string()))?;
    ctx.emit_json("norm.json", &rep)?;
    Ok(EXIT_OK)
}

fn atoms(a: &AtomsArgs, ctx: &mut Ctx) -> Result<i32> {
    let f = load_field(&a.field, &a.grid, ctx.seed)?;
    let spec = *f.spec();
    let p = a.exponent.at(spec.n)?;
    let c = WhitneyParam::new(a.c0, a.c1)?;
    let d = z_decompose(&f, &p, a.k, c)?;
    let recon = d.reconstruct(&spec)?.sub(&f)?.max_abs() / f.max_abs().max(f64::MIN_POSITIVE);
    let rep = json!({
        "exponent": p,
        "k": a.k,
        "atoms": d.atoms.len(),
        "nonzero": d.nonzero(),
        "lambda_norm": d.lambda_norm(),
        "mu_norm": d.mu_norm(),
        "dyadic_norm": z_norm_dyadic(&f, &p, a.k)?.value,
        "reconstruction_error": recon,
    });
    ctx.emit_json("atoms.json", &rep)?;
    if ctx.out.is_some() {
        ctx.emit("atoms.csv", &d.coefficient_csv())?;
    }
    Ok(EXIT_OK)
}

fn load_boundary(path: &Option<PathBuf>, spec: BoundarySpec, channels: usize, seed: u64) -> Result<BoundaryField> {
    match path {
        Some(p) => {
            let g = io::read_hsf(p)?.into_boundary()?;
            if g.channels != channels {
                return Err(Error::Precondition(format!("input has {} channels, expected {channels}", g.channels)));
            }
            Ok(g)
        }
        None => Ok(random_boundary(&spec, channels, seed)),
    }
}

fn boundary_spec(path: &Option<PathBuf>, grid: &GridArgs) -> Result<(BoundarySpec, usize)> {
    match path {
        Some(p) => {
            let text = std::fs::read(p)?;
            let end = text.iter().position(|&b| b == b'\n').ok_or_else(|| Error::Format("HSF header line missing".into()))?;
            let h: io::HsfHeader = serde_json::from_slice(&text[..end]).map_err(|e| Error::Format(e.to_string()))?;
            Ok((BoundarySpec { n: h.n, l: h.l, nx: h.nx }, h.m))
        }
        None => Ok((BoundarySpec { n: grid.n, l: grid.l, nx: grid.nx }, grid.m)),
    }
}

fn calc(a: &CalcArgs, ctx: &mut Ctx) -> Result<i32> {
    let f = HoloFn::parse(&a.func)?;
    let (bs, m) = boundary_spec(&a.input, &a.grid)?;
    let coeff = a.coeff.load(m, bs.n, ctx.seed)?;
    let b = coeff.hat()?;
    let kind = match a.kind {
        KindArg::Db => OpKind::DB,
        KindArg::Bd => OpKind::BD,
    };
    let op = MultiplierOp::build(kind, &b, bs.l, bs.nx)?;
    let g = load_boundary(&a.input, bs, op.channels(), ctx.seed)?;
    let h = op.apply_fn_field(&f, &g)?;
    if let Some(p) = ctx.field_path("calc.hsf") {
        io::write_boundary(&p, &h, m)?;
    }
    let rep = json!({
        "function": f.to_string(),
        "kind": format!("{:?}", kind),
        "input_l2": g.l2(),
        "output_l2": h.l2(),
        "omega": op.omega(),
    });
    ctx.emit_json("calc.json", &rep)?;
    Ok(EXIT_OK)
}

fn solve(a: &SolveArgs, ctx: &mut Ctx) -> Result<i32> {
    let pf = io::read_problem(&a.problem)?;
    let coeff = io::read_coefficients(&pf.coefficients)?;
    let p = pf.exponent.at(pf.grid.n);
    let setup = BvpSetup::new(coeff, pf.grid, pf.problem, p)?;
    let datum = io::read_hsf(&pf.datum)?.into_boundary()?;
    let (f0, field, rep) = bvp::solve(&setup, &datum)?;
    if let Some(path) = ctx.field_path("solution.hsf") {
        io::write_field(&path, &field)?;
    }
    if let Some(path) = ctx.field_path("boundary.hsf") {
        io::write_boundary(&path, &f0, setup.m())?;
    }
    ctx.emit_json("solve.json", &json!({ "report": rep, "warnings": setup.warnings }))?;
    Ok(EXIT_OK)
}

fn layer(a: &LayerArgs, ctx: &mut Ctx) -> Result<i32> {
    let (bs, m) = boundary_spec(&a.input, &a.grid)?;
    let coeff = a.coeff.load(m, bs.n, ctx.seed)?;
    let grid = GridSpec::new(bs.n, m, bs.l, bs.nx, 1e-3, 1.0, 2)?;
    let setup = BvpSetup::new(coeff, grid, Problem::Neumann, Exponent::finite(bs.n, 2.0, 0.0))?;
    let f = load_boundary(&a.input, bs, m, ctx.seed)?;
    let v = match a.kind {
        LayerKind::Single => bvp::single_layer(&setup, &f, a.t)?,
        LayerKind::Double => bvp::double_layer(&setup, &f, a.t)?,
    };
    if let Some(p) = ctx.field_path("layer.hsf") {
        io::write_boundary(&p, &v, m)?;
    }
    let jumps = bvp::layer_jumps(&setup, &f)?;
    ctx.emit_json("layer.json", &json!({ "kind": a.kind, "t": a.t, "output_l2": v.l2(), "jumps": jumps }))?;
    Ok(EXIT_OK)
}

fn probe(a: &ProbeArgs, ctx: &mut Ctx) -> Result<i32> {
    let g = &a.grid;
    match a.kind {
        ProbeKind::Wp => {
            let coeff = a.coeff.load(g.m, g.n, ctx.seed)?;
            let spec = GridSpec::new(g.n, g.m, g.l, g.nx, 1e-3, 1.0, 2)?;
            let p = a.exponent.at(g.n)?;
            let setup = BvpSetup::new(coeff, spec, Problem::Regularity, p)?;
            let comp = match a.component {
                ComponentArg::Perp => Component::Perp,
                ComponentArg::Par => Component::Par,
            };
            let rep = bvp::wp_probe(&setup, comp, None)?;
            ctx.emit_json(
                "probe.json",
                &json!({
                    "component": rep.component,
                    "label": rep.label,
                    "min_singular": rep.min_singular,
                    "max_condition": rep.max_condition,
                    "obstructions": rep.obstructions,
                    "warnings": setup.warnings,
                }),
            )?;
        }
        ProbeKind::Decay => {
            let f = load_field(&a.field, g, ctx.seed)?;
            let p = a.exponent.at(f.spec().n)?;
            ctx.emit_json("probe.json", &bvp::decay_probe(&f, &p)?)?;
        }
        ProbeKind::Perturb => {
            let a0 = a.coeff.load(g.m, g.n, ctx.seed)?;
            let a1 = match &a.perturbed {
                Some(p) => io::read_coefficients(p)?,
                None => {
                    let dir = CoefficientMatrix::random_accretive(g.m, g.n, ctx.seed.wrapping_add(1), 0.5);
                    CoefficientMatrix::new(g.m, g.n, &a0.a + &dir.a * crate::C64::new(a.delta, 0.0))?
                }
            };
            let (lhs, rhs) = calculus::perturb_probe(&a0.hat()?, &a1.hat()?, g.l, g.nx)?;
            ctx.emit_json("probe.json", &json!({ "chi_plus_difference": lhs, "coefficient_difference": rhs, "ratio": lhs / rhs }))?;
        }
    }
    Ok(EXIT_OK)
}

fn verify_cmd(a: &VerifyArgs, ctx: &mut Ctx) -> Result<i32> {
    let reports = if a.all {
        verify::run_all(ctx.seed)?
    } else {
        vec![verify::run_suite(a.suite.as_deref().unwrap_or_default(), ctx.seed)?]
    };
    let name = if a.all { "verify-all.json".to_string() } else { format!("verify-{}.json", reports[0].suite) };
    if a.all {
        ctx.emit_json(&name, &reports)?;
    } else {
        ctx.emit_json(&name, &reports[0])?;
    }
    Ok(if reports.iter().all(|r| r.passed) { EXIT_OK } else { EXIT_TOLERANCE })
}
