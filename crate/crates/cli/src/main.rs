//! `ringbody`: simulation, verification and orbit search for a body on a
//! fixed axis and a rotating ring of equal masses.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod manifest;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use manifest::{seed_tokens, Manifest};
use ringbody::dynamics::{no_collision_certificate, radial_bounds, radial_discriminant};
use ringbody::error::Error;
use ringbody::integrate::{integrate, IntegratorSettings};
use ringbody::model::{conserved_from_seed, make_constants, validate_family, PiRational, SeedConfig};
use ringbody::nbody::{self, cross_validate, reconstruct_full};
use ringbody::output::sig17;
use ringbody::record::{parse_fixture, parse_seed, FixtureRow};
use ringbody::search::{
    read_catalog, refine, sweep, verify_recurrence, write_catalog, GridSpec, PeriodicCandidate, SearchSettings,
};

const PAPER_TABLES: &str = include_str!("../../../fixtures/paper_tables");
const KEPLER_19BODY: &str = include_str!("../../../fixtures/kepler_19body");
const DEMO_SEED: &str = include_str!("../../../fixtures/demo_seed");

#[derive(Parser)]
#[command(name = "ringbody", version, about = "Axial-plus-ring n-body solutions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the ring constants a_n and b_n.
    Constants {
        #[arg(long)]
        n: usize,
    },
    /// Integrate the reduced system and write a trajectory CSV.
    Simulate(SimulateArgs),
    /// Check periodicity and the Cartesian oracle for a fixture or a seed.
    Verify(VerifyArgs),
    /// Grid sweep or single-seed refinement of periodic candidates.
    Search(SearchArgs),
    /// Write the full-body Cartesian motion of a seed.
    Reconstruct(ReconstructArgs),
}

#[derive(Args, Clone, Default)]
struct SeedArgs {
    /// Seed record (`key = value` lines or JSON); flags override its keys.
    /// `demo` selects the bundled demonstration seed.
    #[arg(long)]
    config: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    m1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    m2: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    y10: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    dy20: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    df0: Option<f64>,
    /// Target angle as `p/q`, meaning (p/q) pi.
    #[arg(long, allow_hyphen_values = true)]
    theta0: Option<PiRational>,
    #[arg(long, allow_hyphen_values = true)]
    t0: Option<f64>,
}

impl SeedArgs {
    fn given(&self) -> bool {
        self.config.is_some()
            || self.n.is_some()
            || self.m1.is_some()
            || self.m2.is_some()
            || self.y10.is_some()
            || self.dy20.is_some()
            || self.df0.is_some()
            || self.theta0.is_some()
            || self.t0.is_some()
    }

    /// The seed and a description of where it came from.
    fn resolve(&self) -> Result<(SeedConfig, String), Failure> {
        let (base, source) = match &self.config {
            Some(name) if name == "demo" => (Some(parse_seed(DEMO_SEED)?), "bundled demo seed (not a published orbit)".to_string()),
            Some(path) => (Some(parse_seed(&read(Path::new(path))?)?), format!("config {path}")),
            None => (None, "flags".to_string()),
        };
        let missing = |k: &str| Failure::Usage(format!("--{k} is required without --config"));
        let mut q = match base {
            Some(q) => q,
            None => SeedConfig::new(
                self.n.ok_or_else(|| missing("n"))?,
                self.m1.ok_or_else(|| missing("m1"))?,
                self.m2.ok_or_else(|| missing("m2"))?,
                self.y10.ok_or_else(|| missing("y10"))?,
                self.dy20.ok_or_else(|| missing("dy20"))?,
                self.df0.ok_or_else(|| missing("df0"))?,
            ),
        };
        macro_rules! over {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { q.$f = v; } )* };
        }
        over!(n, m1, m2, y10, dy20, df0);
        if self.theta0.is_some() {
            q.theta0 = self.theta0;
        }
        if self.t0.is_some() {
            q.t0 = self.t0;
        }
        q.validate()?;
        let overridden = self.config.is_some() && Self { config: None, ..self.clone() }.given();
        Ok((q, if overridden { format!("{source} with flag overrides") } else { source }))
    }
}

#[derive(Args)]
struct IntegrationArgs {
    /// Relative and absolute tolerance of the integrator.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
}

impl IntegrationArgs {
    fn settings(&self) -> Result<IntegratorSettings, Failure> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Failure::Usage(format!("--tol must be in (0, 1), got {}", self.tol)));
        }
        Ok(IntegratorSettings::with_tolerance(self.tol))
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    seed: SeedArgs,
    #[command(flatten)]
    integration: IntegrationArgs,
    /// End time; defaults to t0.
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    /// Integrate seeds outside the collisionless family.
    #[arg(long)]
    allow_unbounded: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Fixture file, or one of the bundled names `paper_tables`, `kepler_19body`.
    #[arg(long, conflicts_with = "config")]
    fixture: Option<String>,
    #[command(flatten)]
    seed: SeedArgs,
    #[command(flatten)]
    integration: IntegrationArgs,
    #[arg(long, default_value_t = 1e-3)]
    xi_max: f64,
    /// Bound on the deviation from the initial state after the full-turn period.
    #[arg(long, default_value_t = 5e-2)]
    closure_max: f64,
    /// Bound on the reduced-versus-Cartesian position deviation over [0, t0].
    #[arg(long, default_value_t = 1e-6)]
    deviation_max: f64,
    /// One JSON object per row instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SearchArgs {
    /// Grid spec as a JSON object with fields n, m1, m2, theta0 [p, q] and
    /// axes y10, dy20, df0, t0 given as {start, stop, count}.
    #[arg(long, conflicts_with_all = ["from", "config"])]
    grid: Option<PathBuf>,
    /// Refine the candidates of a catalog instead of sweeping.
    #[arg(long, conflicts_with = "config")]
    from: Option<PathBuf>,
    /// Or refine a single seed given by flags or --config.
    #[command(flatten)]
    seed: SeedArgs,
    #[command(flatten)]
    integration: IntegrationArgs,
    /// Grid points with a residual below this are refined.
    #[arg(long, default_value_t = 1e-2)]
    threshold: f64,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReconstructArgs {
    #[command(flatten)]
    seed: SeedArgs,
    #[command(flatten)]
    integration: IntegrationArgs,
    /// End time; defaults to t0.
    #[arg(long)]
    t_end: Option<f64>,
    /// Number of uniformly spaced output times.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    allow_unbounded: bool,
}

#[derive(Debug)]
enum Failure {
    Verify(String),
    Usage(String),
    Numeric(String),
    Family(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Verify(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Numeric(_) => 3,
            Failure::Family(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Verify(m) | Failure::Usage(m) | Failure::Numeric(m) | Failure::Family(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) | Error::Parse(_) => Failure::Usage(e.to_string()),
            Error::OutsideFamily(_) => Failure::Family(e.to_string()),
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Usage(format!("cannot create {}: {e}", path.display())))
}

fn io_failure(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Usage(format!("cannot write {}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Constants { n } => cmd_constants(n),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Search(a) => cmd_search(a),
        Command::Reconstruct(a) => cmd_reconstruct(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn cmd_constants(n: usize) -> Result<(), Failure> {
    if n < 2 {
        return Err(Failure::Usage(format!("--n must be at least 2, got {n}")));
    }
    let c = make_constants(n, 1.0, 1.0)?;
    println!("n = {n}");
    println!("a_n = {}", sig17(c.a_n));
    println!("b_n = {}", sig17(c.b_n));
    println!("a_n - b_n/2 = {}", sig17(c.a_n - c.b_n / 2.0));
    let (s2, s5) = (2f64.sqrt(), 5f64.sqrt());
    type Closed = Option<(&'static str, f64)>;
    let closed: (Closed, Closed) = match n {
        2 => (Some(("1/4", 0.25)), Some(("1/2", 0.5))),
        3 => (Some(("1/sqrt(3)", 1.0 / 3f64.sqrt())), Some(("2/sqrt(3)", 2.0 / 3f64.sqrt()))),
        4 => (Some(("1/4 + 1/sqrt(2)", 0.25 + 1.0 / s2)), Some(("1/2 + sqrt(2)", 0.5 + s2))),
        5 => (None, Some(("2 sqrt(1 + 2/sqrt(5))", 2.0 * (1.0 + 2.0 / s5).sqrt()))),
        _ => (None, None),
    };
    if let Some((form, v)) = closed.0 {
        println!("closed form a_n = {form} = {}, difference {}", sig17(v), sig17(c.a_n - v));
    }
    if let Some((form, v)) = closed.1 {
        println!("closed form b_n = {form} = {}, difference {}", sig17(v), sig17(c.b_n - v));
    }
    Ok(())
}

fn end_time(t_end: Option<f64>, q: &SeedConfig) -> Result<f64, Failure> {
    let t = t_end.or(q.t0).ok_or_else(|| Failure::Usage("--t-end is required when the seed has no t0".into()))?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Failure::Usage(format!("end time must be positive, got {t}")));
    }
    Ok(t)
}

fn require_family(q: &SeedConfig, allow: bool) -> Result<bool, Failure> {
    let m = validate_family(q)?;
    if !m.in_l && !allow {
        let c = conserved_from_seed(q)?;
        return Err(Failure::Family(format!(
            "seed is outside the collisionless family (c1 = {}, c2 = {}); pass --allow-unbounded to integrate anyway",
            sig17(c.c1),
            sig17(c.c2)
        )));
    }
    Ok(m.in_l)
}

fn cmd_simulate(a: SimulateArgs) -> Result<(), Failure> {
    let (q, source) = a.seed.resolve()?;
    q.validate()?;
    let settings = a.integration.settings()?;
    let t_end = end_time(a.t_end, &q)?;
    let in_l = require_family(&q, a.allow_unbounded)?;
    let membership = validate_family(&q)?;
    let c = conserved_from_seed(&q)?;

    let traj = integrate(&q, t_end, &settings)?;
    let mut manifest = Manifest::new("simulate")
        .setting("tol", format!("{:e}", a.integration.tol))
        .setting("t_end", t_end)
        .setting("allow_unbounded", a.allow_unbounded);
    manifest.seed_source = Some(source);
    manifest.seed = Some(q);
    manifest.outputs.push(a.out.display().to_string());
    let mut out = create(&a.out)?;
    traj.write_csv(&mut out, &manifest.lines()).map_err(io_failure(&a.out))?;
    out.flush().map_err(io_failure(&a.out))?;

    println!("c1 = {}", sig17(c.c1));
    println!("c2 = {}", sig17(c.c2));
    println!("note: c2 includes the axial kinetic term with df0 squared");
    println!("in_L = {}", membership.in_l);
    println!("in_B = {}", membership.in_b);
    println!("turning points = {}", traj.events().len());
    println!("max c2 drift = {}", sig17(traj.max_drift()));
    if !in_l {
        println!("radial bounds: none (seed outside the family)");
        return Ok(());
    }
    let (d, scale) = radial_discriminant(&c, traj.system());
    if d <= 1e-12 * scale {
        let r_dev = traj.samples().iter().fold(0.0f64, |m, s| m.max((s.r - q.y10).abs()));
        println!("D = {}", sig17(d));
        println!("radial band: degenerate (circular orbit), max |r - y10| = {}", sig17(r_dev));
        return Ok(());
    }
    let rb = radial_bounds(&c, traj.system())?;
    println!("D = {}", sig17(rb.d));
    println!("r_lo = {}", sig17(rb.r_lo));
    println!("r_hi = {}", sig17(rb.r_hi));
    match no_collision_certificate(&traj, &rb) {
        Ok(cert) => {
            println!("observed r in [{}, {}]", sig17(cert.r_min), sig17(cert.r_max));
            Ok(())
        }
        Err(e) => Err(Failure::Numeric(format!(
            "{e} (max c2 drift {:e}; the integration is not accurate enough, try a smaller --tol)",
            traj.max_drift()
        ))),
    }
}

#[derive(Serialize)]
struct VerifyRow {
    id: String,
    xi: Option<f64>,
    radius_mismatch: Option<f64>,
    full_period_multiplier: Option<u64>,
    closure: Option<f64>,
    max_position_deviation: Option<f64>,
    pass: bool,
    problems: Vec<String>,
}

fn verify_row(id: &str, q: &SeedConfig, a: &VerifyArgs, settings: &IntegratorSettings) -> VerifyRow {
    let mut row = VerifyRow {
        id: id.to_string(),
        xi: None,
        radius_mismatch: None,
        full_period_multiplier: None,
        closure: None,
        max_position_deviation: None,
        pass: false,
        problems: Vec::new(),
    };
    let t0 = match q.period() {
        Ok((t0, _)) => t0,
        Err(e) => {
            row.problems.push(e.to_string());
            return row;
        }
    };
    let search = SearchSettings { integrator: *settings, ..SearchSettings::default() };
    match verify_recurrence(q, &search) {
        Ok(rep) => {
            row.xi = Some(rep.xi);
            row.radius_mismatch = Some(rep.radius_mismatch);
            row.full_period_multiplier = Some(rep.full_period_multiplier);
            row.closure = rep.closure;
            if !(rep.xi < a.xi_max) {
                row.problems.push(format!("xi = {:e} >= {:e}", rep.xi, a.xi_max));
            }
            match rep.closure {
                Some(c) if c < a.closure_max => {}
                Some(c) => row.problems.push(format!("closure after {} periods = {c:e} >= {:e}", rep.full_period_multiplier, a.closure_max)),
                None => row.problems.push("closure not checked (residual above gate)".into()),
            }
        }
        Err(e) => row.problems.push(e.to_string()),
    }
    match cross_validate(q, t0, settings, f64::INFINITY) {
        Ok(cv) => {
            row.max_position_deviation = Some(cv.max_position_deviation);
            if !(cv.max_position_deviation < a.deviation_max) {
                row.problems.push(format!(
                    "Cartesian deviation {:e} >= {:e}",
                    cv.max_position_deviation, a.deviation_max
                ));
            }
        }
        Err(e) => row.problems.push(e.to_string()),
    }
    row.pass = row.problems.is_empty();
    row
}

fn load_fixture(name: &str) -> Result<(Vec<FixtureRow>, String), Failure> {
    let path = Path::new(name);
    if path.exists() {
        return Ok((parse_fixture(&read(path)?)?, format!("fixture {name}")));
    }
    let text = match name {
        "paper_tables" => PAPER_TABLES,
        "kepler_19body" => KEPLER_19BODY,
        _ => return Err(Failure::Usage(format!("no fixture file or bundled fixture named {name:?}"))),
    };
    Ok((parse_fixture(text)?, format!("bundled fixture {name}")))
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.3e}"))
}

fn cmd_verify(a: VerifyArgs) -> Result<(), Failure> {
    let settings = a.integration.settings()?;
    let (rows, source) = match &a.fixture {
        Some(name) => {
            if a.seed.given() {
                return Err(Failure::Usage("give either --fixture or a seed, not both".into()));
            }
            load_fixture(name)?
        }
        None if a.seed.given() => {
            let (q, source) = a.seed.resolve()?;
            q.validate()?;
            (vec![FixtureRow { id: "seed".into(), seed: q, line: 0 }], source)
        }
        None => return Err(Failure::Usage("nothing to verify: give --fixture or a seed".into())),
    };

    let mut manifest = Manifest::new("verify")
        .setting("tol", format!("{:e}", a.integration.tol))
        .setting("xi_max", format!("{:e}", a.xi_max))
        .setting("closure_max", format!("{:e}", a.closure_max))
        .setting("deviation_max", format!("{:e}", a.deviation_max));
    manifest.seed_source = Some(source);
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let w = |e: std::io::Error| Failure::Usage(format!("cannot write to stdout: {e}"));
    for line in manifest.lines() {
        writeln!(out, "# {line}").map_err(w)?;
    }
    if !a.json {
        writeln!(out, "{:<8} {:>10} {:>11} {:>3} {:>10} {:>10} status", "id", "xi", "dr(t0)", "s", "closure", "deviation")
            .map_err(w)?;
    }
    let mut failed = Vec::new();
    for r in &rows {
        let v = verify_row(&r.id, &r.seed, &a, &settings);
        if a.json {
            writeln!(out, "{}", serde_json::to_string(&v).expect("row serializes")).map_err(w)?;
        } else {
            writeln!(
                out,
                "{:<8} {:>10} {:>11} {:>3} {:>10} {:>10} {}",
                v.id,
                opt(v.xi),
                opt(v.radius_mismatch),
                v.full_period_multiplier.map_or("-".into(), |s| s.to_string()),
                opt(v.closure),
                opt(v.max_position_deviation),
                if v.pass { "pass".to_string() } else { format!("FAIL: {}", v.problems.join("; ")) }
            )
            .map_err(w)?;
        }
        if !v.pass {
            failed.push(v.id);
        }
    }
    if failed.is_empty() {
        eprintln!("{} of {} rows pass", rows.len(), rows.len());
        Ok(())
    } else {
        Err(Failure::Verify(format!("{} of {} rows failed: {}", failed.len(), rows.len(), failed.join(", "))))
    }
}

fn cmd_search(a: SearchArgs) -> Result<(), Failure> {
    let integrator = a.integration.settings()?;
    let settings = SearchSettings { integrator, ..SearchSettings::default() };
    if a.jobs == 0 {
        return Err(Failure::Usage("--jobs must be at least 1".into()));
    }
    let mut manifest = Manifest::new("search").setting("tol", format!("{:e}", a.integration.tol));
    let candidates = if let Some(path) = &a.grid {
        let grid: GridSpec = serde_json::from_str(&read(path)?)
            .map_err(|e| Failure::Usage(format!("invalid grid spec {}: {e}", path.display())))?;
        grid.validate().map_err(|e| Failure::Usage(format!("invalid grid spec: {e}")))?;
        manifest.seed_source = Some(format!("grid {}", path.display()));
        manifest = manifest.setting("threshold", format!("{:e}", a.threshold));
        let rep = sweep(&grid, a.threshold, &settings, a.jobs)?;
        eprintln!(
            "{} grid points: {} outside the family, {} failed, {} below threshold",
            rep.evaluated, rep.out_of_family, rep.failed, rep.below_threshold
        );
        rep.candidates
    } else {
        let starts = if let Some(path) = &a.from {
            manifest.seed_source = Some(format!("catalog {}", path.display()));
            read_catalog(&read(path)?)?
        } else if a.seed.given() {
            let (q, source) = a.seed.resolve()?;
            q.validate()?;
            manifest.seed_source = Some(source);
            manifest.seed = Some(q);
            vec![PeriodicCandidate::evaluate(q, &settings.integrator)?]
        } else {
            return Err(Failure::Usage("give --grid, --from or a seed".into()));
        };
        starts
            .iter()
            .map(|c| refine(c, &settings))
            .collect::<Result<Vec<_>, _>>()?
    };
    manifest.outputs.push(a.out.display().to_string());

    let mut out = create(&a.out)?;
    let wr = io_failure(&a.out);
    for line in manifest.lines() {
        writeln!(out, "# {line}").map_err(&wr)?;
    }
    write_catalog(&mut out, &candidates).map_err(&wr)?;
    out.flush().map_err(&wr)?;
    println!("{} candidates", candidates.len());
    for c in &candidates {
        println!("xi = {:.3e}  {}", c.xi, seed_tokens(&c.seed));
    }
    Ok(())
}

fn cmd_reconstruct(a: ReconstructArgs) -> Result<(), Failure> {
    let (q, source) = a.seed.resolve()?;
    q.validate()?;
    let settings = a.integration.settings()?;
    let t_end = end_time(a.t_end, &q)?;
    require_family(&q, a.allow_unbounded)?;
    if a.samples < 2 {
        return Err(Failure::Usage("--samples must be at least 2".into()));
    }
    let traj = integrate(&q, t_end, &settings)?;
    let sys = q.system()?;
    let states = traj
        .uniform_samples(a.samples)?
        .iter()
        .map(|s| reconstruct_full(s, &sys))
        .collect::<Result<Vec<_>, _>>()?;

    let mut manifest = Manifest::new("reconstruct")
        .setting("tol", format!("{:e}", a.integration.tol))
        .setting("t_end", t_end)
        .setting("samples", a.samples);
    manifest.seed_source = Some(source);
    manifest.seed = Some(q);
    manifest.outputs.push(a.out.display().to_string());
    let mut out = create(&a.out)?;
    nbody::write_csv(&mut out, &manifest.lines(), &states).map_err(io_failure(&a.out))?;
    out.flush().map_err(io_failure(&a.out))?;
    println!("{} bodies, {} times written to {}", q.n + 1, states.len(), a.out.display());
    Ok(())
}
