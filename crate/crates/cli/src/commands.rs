use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use transparent_core::backlund::{
    backlund_transform_with, holomorphic_line_residual, lower_degree_with, weierstrass_seed,
    BacklundParams, LineSeed,
};
use transparent_core::container::{Container, Kind};
use transparent_core::descent::{find_holomorphic_line_with, DescentOptions, DEFAULT_ITERATIONS};
use transparent_core::operators::{f_from_u, mypde_residual, transport_pde_residual};
use transparent_core::thetafield::DEGREE_TOL;
use transparent_core::transport::{enumerate_loops, holonomy_defect_with};
use transparent_core::{degree_of, parity_of, Complex64, Connection, Error, ThetaField};

use crate::config::{check_distinct, RunConfig};

/// A named threshold that a measured value exceeded.
#[derive(Debug)]
pub struct GateFailure {
    pub gate: String,
    pub value: f64,
    pub threshold: f64,
}

impl fmt::Display for GateFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "gate `{}` failed: measured {:.3e} > {:.1e}",
            self.gate, self.value, self.threshold
        )
    }
}

impl std::error::Error for GateFailure {}

fn check(gate: &str, value: f64, threshold: f64) -> Result<()> {
    if value <= threshold {
        Ok(())
    } else {
        Err(GateFailure {
            gate: gate.into(),
            value,
            threshold,
        }
        .into())
    }
}

/// Whether a core error reports a failed numerical gate rather than bad input.
pub fn is_gate_error(e: &Error) -> bool {
    matches!(
        e,
        Error::SeedNotHolomorphic { .. }
            | Error::PipelineResidual { .. }
            | Error::EquivalenceViolated { .. }
            | Error::DegreeNotLowered { .. }
            | Error::VanishingSection { .. }
            | Error::RankDefect { .. }
            | Error::NoLineFound { .. }
    )
}

/// `key = value` lines printed after each command.
#[derive(Default)]
struct Report(Vec<(String, String)>);

impl Report {
    fn num(&mut self, key: &str, v: f64) {
        self.0.push((key.into(), format!("{v:.6e}")));
    }

    fn int(&mut self, key: &str, v: i64) {
        self.0.push((key.into(), v.to_string()));
    }

    fn text(&mut self, key: &str, v: &str) {
        self.0.push((key.into(), format!("{v:?}")));
    }

    fn print(&self, mut out: impl Write) -> io::Result<()> {
        for (k, v) in &self.0 {
            writeln!(out, "{k} = {v}")?;
        }
        Ok(())
    }
}

fn load(path: &Path) -> Result<Container> {
    Container::load(path).with_context(|| format!("reading {}", path.display()))
}

fn save(c: &Container, path: &Path) -> Result<()> {
    c.save(path).with_context(|| format!("writing {}", path.display()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SeedKind {
    /// A constant line.
    Constant,
    /// The line `[℘(z − shift) : scale]`.
    Weierstrass,
    /// Search for a holomorphic line by gradient descent.
    Solver,
}

#[derive(Debug, Args)]
pub struct SeedArgs {
    #[arg(long, value_enum)]
    pub kind: SeedKind,
    /// Connection the line should be holomorphic for (default: trivial).
    #[arg(long)]
    pub connection: Option<PathBuf>,
    /// Spanning vector of a constant line as `re0,im0,re1,im1`.
    #[arg(long, default_value = "1,0,0,0")]
    pub line: String,
    #[arg(long, default_value_t = 0.0)]
    pub shift_x: f64,
    #[arg(long, default_value_t = 0.0)]
    pub shift_y: f64,
    /// Chart balance of the ℘ line (default: |℘(1/2)|).
    #[arg(long)]
    pub scale: Option<f64>,
    /// Descent starts for the solver.
    #[arg(long, default_value_t = 4)]
    pub attempts: usize,
    /// Iterations per descent start.
    #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
    pub iterations: usize,
    /// Where to write the descent curve CSV.
    #[arg(long)]
    pub curve: Option<PathBuf>,
    /// Involution container to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_line(s: &str) -> Result<[Complex64; 2]> {
    let v = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .with_context(|| format!("--line expects four numbers, got {s:?}"))?;
    if v.len() != 4 {
        bail!("--line expects four numbers, got {}", v.len());
    }
    Ok([Complex64::new(v[0], v[1]), Complex64::new(v[2], v[3])])
}

fn write_curve(report: &transparent_core::descent::DescentReport, path: &Path) -> Result<()> {
    report
        .write_csv(BufWriter::new(File::create(path)?))
        .with_context(|| format!("writing {}", path.display()))
}

pub fn cmd_seed(config: &RunConfig, args: &SeedArgs) -> Result<()> {
    let inputs: Vec<&Path> = args.connection.iter().map(|p| p.as_path()).collect();
    let outputs: Vec<&Path> = args.out.iter().chain(&args.curve).map(|p| p.as_path()).collect();
    check_distinct(&inputs, &outputs)?;
    let a = match &args.connection {
        Some(p) => load(p)?.into_connection()?,
        None => Connection::trivial(config.metric()?),
    };
    let metric = a.metric().clone();
    let seed = match args.kind {
        SeedKind::Constant => LineSeed::constant(metric, parse_line(&args.line)?)?,
        SeedKind::Weierstrass => {
            weierstrass_seed(metric, Complex64::new(args.shift_x, args.shift_y), args.scale)?
        }
        SeedKind::Solver => {
            let mut opts = DescentOptions::new(args.attempts, config.rng_seed);
            opts.iterations = args.iterations;
            opts.target = config.tol_seed;
            match find_holomorphic_line_with(&a, &opts) {
                Ok((seed, report)) => {
                    if let Some(p) = &args.curve {
                        write_curve(&report, p)?;
                    }
                    seed
                }
                Err(Error::NoLineFound {
                    best_residual,
                    report,
                }) => {
                    if let Some(p) = &args.curve {
                        write_curve(&report, p)?;
                    }
                    return check("line_search", best_residual, config.tol_seed);
                }
                Err(e) => return Err(e.into()),
            }
        }
    };
    let residual = holomorphic_line_residual(&a, &seed)?;
    let mut report = Report::default();
    report.text("provenance", seed.provenance().as_str());
    report.int("grid", a.metric().grid().nx as i64);
    report.num("residual_r1", residual.r1);
    report.num("residual_r3", residual.r3);
    report.num("gate", config.tol_seed);
    report.print(io::stdout().lock())?;
    if let Some(p) = &args.out {
        let mut c = Container::from_seed(&seed, Default::default());
        c.set_meta("residual_r1", residual.r1);
        c.set_meta("residual_r3", residual.r3);
        save(&c, p)?;
    }
    check("seed_holomorphicity", residual.r3, config.tol_seed)
}

#[derive(Debug, Args)]
pub struct BacklundArgs {
    /// Input connection (default: trivial).
    #[arg(long)]
    pub connection: Option<PathBuf>,
    /// Input transport solution (default: identity).
    #[arg(long)]
    pub field: Option<PathBuf>,
    /// Involution container of the holomorphic line.
    #[arg(long)]
    pub seed: PathBuf,
    /// Directory receiving `connection.tfc` and `field.tfc`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LowerArgs {
    #[arg(long)]
    pub connection: PathBuf,
    #[arg(long)]
    pub field: PathBuf,
    /// Directory receiving `connection.tfc`, `field.tfc` and `seed.tfc`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

struct OutputDir {
    connection: PathBuf,
    field: PathBuf,
    seed: PathBuf,
}

impl OutputDir {
    fn new(dir: &Path) -> Self {
        OutputDir {
            connection: dir.join("connection.tfc"),
            field: dir.join("field.tfc"),
            seed: dir.join("seed.tfc"),
        }
    }

    fn paths(&self) -> [&Path; 3] {
        [&self.connection, &self.field, &self.seed]
    }
}

fn check_mode_cap(config: &RunConfig, u: &ThetaField) -> Result<i32> {
    let degree = degree_of(u, DEGREE_TOL);
    check("mode_cap", degree as f64, config.mode_cap as f64)?;
    Ok(degree)
}

pub fn cmd_backlund(config: &RunConfig, args: &BacklundArgs) -> Result<()> {
    let out = args.out.as_deref().map(OutputDir::new);
    let inputs: Vec<&Path> = args
        .connection
        .iter()
        .chain(&args.field)
        .map(|p| p.as_path())
        .chain([args.seed.as_path()])
        .collect();
    check_distinct(&inputs, out.as_ref().map(|o| o.paths().to_vec()).unwrap_or_default().as_slice())?;
    let seed = load(&args.seed)?.into_seed()?;
    let a = match &args.connection {
        Some(p) => load(p)?.into_connection()?,
        None => Connection::trivial(seed.metric().clone()),
    };
    let b = match &args.field {
        Some(p) => load(p)?.into_field()?,
        None => ThetaField::identity(a.metric().clone()),
    };
    let params = BacklundParams::standard(seed.metric());
    let output = backlund_transform_with(&a, &b, &seed, &params, &config.gates())?;
    let r = &output.report;
    let mut report = Report::default();
    report.num("seed_r1", r.seed.r1);
    report.num("seed_r3", r.seed.r3);
    report.num("input_transport_pde", r.input_transport);
    report.num("transport_pde", r.transport);
    report.num("connection", r.connection);
    report.num("mypde", r.mypde);
    report.num("j_symmetry", r.j_symmetry);
    report.int("degree_before", r.degree_before as i64);
    report.int("degree_after", r.degree_after as i64);
    report.print(io::stdout().lock())?;
    check_mode_cap(config, &output.u)?;
    if let Some(o) = &out {
        fs::create_dir_all(o.connection.parent().unwrap_or(Path::new(".")))?;
        let mut c = Container::from_connection(&output.connection, Default::default());
        c.set_meta("connection", r.connection);
        c.set_meta("degree", r.degree_after as i64);
        save(&c, &o.connection)?;
        let mut f = Container::new(Kind::Field, output.u.clone(), Default::default());
        f.set_meta("transport_pde", r.transport);
        f.set_meta("mypde", r.mypde);
        f.set_meta("degree", r.degree_after as i64);
        save(&f, &o.field)?;
        save(&Container::from_seed(&seed, Default::default()), &o.seed)?;
    }
    Ok(())
}

pub fn cmd_lower(config: &RunConfig, args: &LowerArgs) -> Result<()> {
    let out = args.out.as_deref().map(OutputDir::new);
    check_distinct(
        &[&args.connection, &args.field],
        out.as_ref().map(|o| o.paths().to_vec()).unwrap_or_default().as_slice(),
    )?;
    let a = load(&args.connection)?.into_connection()?;
    let b = load(&args.field)?.into_field()?;
    let output = lower_degree_with(&a, &b, &config.gates())?;
    let r = &output.report;
    let mut report = Report::default();
    report.num("tail", r.tail);
    report.num("transport_pde", r.transport);
    report.num("connection", r.connection);
    report.int("degree_before", r.degree_before as i64);
    report.int("degree_after", r.degree_after as i64);
    report.print(io::stdout().lock())?;
    if let Some(o) = &out {
        fs::create_dir_all(o.connection.parent().unwrap_or(Path::new(".")))?;
        let mut c = Container::from_connection(&output.connection, Default::default());
        c.set_meta("connection", r.connection);
        c.set_meta("degree", r.degree_after as i64);
        save(&c, &o.connection)?;
        let mut f = Container::new(Kind::Field, output.u.clone(), Default::default());
        f.set_meta("transport_pde", r.transport);
        f.set_meta("degree", r.degree_after as i64);
        save(&f, &o.field)?;
        save(&Container::from_seed(&output.seed, Default::default()), &o.seed)?;
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub connection: PathBuf,
    /// Transport solution whose residuals are checked as well.
    #[arg(long)]
    pub field: Option<PathBuf>,
    /// Holonomy CSV destination; without it the CSV goes to stdout and the
    /// summary to stderr.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn cmd_verify(config: &RunConfig, args: &VerifyArgs) -> Result<()> {
    let inputs: Vec<&Path> = [args.connection.as_path()]
        .into_iter()
        .chain(args.field.as_deref())
        .collect();
    check_distinct(&inputs, args.out.as_deref().as_slice())?;
    let a = load(&args.connection)?.into_connection()?;
    let loops = enumerate_loops(
        a.metric().grid(),
        config.max_pq,
        config.loops_per_dir,
        config.rng_seed,
    )?;
    let holonomy = holonomy_defect_with(&a, &loops, config.tol_truncation)?;
    let mut report = Report::default();
    report.int("loops", holonomy.loops.len() as i64);
    report.num("max_defect", holonomy.max);
    report.num("mean_defect", holonomy.mean);
    if let Some(w) = holonomy.worst() {
        report.text("worst_loop", &format!("({}, {})", w.geodesic.p, w.geodesic.q));
    }
    report.num("threshold", config.tol_holonomy);
    let mut residuals = Vec::new();
    if let Some(p) = &args.field {
        let u = load(p)?.into_field()?;
        let transport = transport_pde_residual(a.as_field(), &u)?.total;
        let mypde = mypde_residual(&f_from_u(&u)?)?;
        report.num("transport_pde", transport);
        report.num("mypde", mypde);
        residuals.push(("transport_pde", transport));
        residuals.push(("mypde", mypde));
    }
    match &args.out {
        Some(p) => {
            holonomy
                .write_csv(BufWriter::new(File::create(p)?))
                .with_context(|| format!("writing {}", p.display()))?;
            report.print(io::stdout().lock())?;
        }
        None => {
            holonomy.write_csv(io::stdout().lock())?;
            report.print(io::stderr().lock())?;
        }
    }
    check("holonomy_defect", holonomy.max, config.tol_holonomy)?;
    for (gate, value) in residuals {
        check(gate, value, config.tol_pde)?;
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Container file.
    pub input: PathBuf,
}

pub fn cmd_degree(config: &RunConfig, args: &InputArgs) -> Result<()> {
    let c = load(&args.input)?;
    let degree = degree_of(&c.field, DEGREE_TOL);
    let parity = parity_of(&c.field, DEGREE_TOL);
    let mut report = Report::default();
    report.int("degree", degree as i64);
    report.text("parity", &format!("{parity:?}").to_lowercase());
    report.int("mode_min", c.field.mode_min() as i64);
    report.int("mode_max", c.field.mode_max() as i64);
    report.print(io::stdout().lock())?;
    if c.kind == Kind::Field {
        check("mode_cap", degree as f64, config.mode_cap as f64)?;
    }
    Ok(())
}

pub fn cmd_info(args: &InputArgs) -> Result<()> {
    let c = load(&args.input)?;
    let g = c.field.grid();
    let mut out = io::stdout().lock();
    let kind = format!("{:?}", c.kind).to_lowercase();
    writeln!(out, "kind = {kind:?}")?;
    writeln!(out, "grid = [{}, {}]", g.nx, g.ny)?;
    writeln!(out, "periods = [{}, {}]", g.lx, g.ly)?;
    writeln!(out, "modes = [{}, {}]", c.field.mode_min(), c.field.mode_max())?;
    writeln!(out, "flat = {}", c.field.metric().is_flat())?;
    writeln!(out, "unitary = {}", c.unitary)?;
    for (k, v) in &c.meta {
        writeln!(out, "meta.{k} = {v}")?;
    }
    Ok(())
}
