//! Command-line frontend: `mesh`, `solve`, `convergence` and
//! `epsilon-study`, driven by flags and an optional JSON config file.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::analysis::{convergence_study, l2_error, StudyPlan};
use crate::error::{Error, Result};
use crate::hypergraph::HyperGraph;
use crate::limit::{epsilon_sweep, LimitWeighting, MeshRule, ThinDomainSpec};
use crate::mesh::{cube_filling_guarded, single_edge, star_graph, with_kappa, FillingSpec, MeshGuard};
use crate::problem::{ExactSolution, NodalData, ProblemData};
use crate::solve::{assemble_problem, solve_problem, SolveOptions};
use crate::sparse::SolverMethod;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Mesh,
    Solve,
    Convergence,
    EpsilonStudy,
}

/// Inclusive range of levels written `a..b`, or a single level `a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Levels {
    pub first: u32,
    pub last: u32,
}

impl Levels {
    pub fn single(level: u32) -> Self {
        Self { first: level, last: level }
    }

    pub fn is_single(&self) -> bool {
        self.first == self.last
    }
}

impl std::str::FromStr for Levels {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse = |t: &str| {
            t.trim()
                .parse::<u32>()
                .map_err(|_| Error::Invalid(format!("bad level '{t}' in '{s}'")))
        };
        let levels = match s.split_once("..") {
            Some((a, b)) => Levels {
                first: parse(a)?,
                last: parse(b.trim_start_matches('='))?,
            },
            None => Levels::single(parse(s)?),
        };
        if levels.first > levels.last {
            return Err(Error::Invalid(format!("empty level range '{s}'")));
        }
        Ok(levels)
    }
}

impl TryFrom<String> for Levels {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Levels> for String {
    fn from(l: Levels) -> String {
        if l.is_single() {
            l.first.to_string()
        } else {
            format!("{}..{}", l.first, l.last)
        }
    }
}

/// Effective configuration of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    /// Hyperedge dimension of filling meshes.
    pub d: usize,
    pub filling: Levels,
    pub refinement: Levels,
    pub p: usize,
    pub tau: f64,
    pub kappa: f64,
    pub method: SolverMethod,
    pub tol: f64,
    /// Exact-solution catalog key, or "star-oracle".
    pub exact: String,
    /// "filling", "star3", "single-edge" or "file".
    pub mesh: String,
    /// Interchange file read when `mesh` is "file".
    pub mesh_file: Option<PathBuf>,
    /// CSV (studies) or interchange JSON (mesh) destination.
    pub output: Option<PathBuf>,
    /// Matrix Market dump of the assembled skeletal system.
    pub matrix_market: Option<PathBuf>,
    pub jobs: usize,
    pub record_walltime: bool,
    pub scenario: String,
    pub eps: Vec<f64>,
    pub weighting: LimitWeighting,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: Command::Solve,
            d: 3,
            filling: Levels::single(2),
            refinement: Levels::single(0),
            p: 1,
            tau: 1.0,
            kappa: 1.0,
            method: SolverMethod::CgJacobi,
            tol: 1e-10,
            exact: "paper_quadratic".into(),
            mesh: "filling".into(),
            mesh_file: None,
            output: None,
            matrix_market: None,
            jobs: 0,
            record_walltime: false,
            scenario: "cross".into(),
            eps: vec![0.2, 0.1, 0.05, 0.025],
            weighting: LimitWeighting::Weighted,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.d) {
            return Err(Error::Invalid(format!("d must be 1, 2 or 3, got {}", self.d)));
        }
        if self.p > 8 {
            return Err(Error::Invalid(format!("polynomial degree {} too large (max 8)", self.p)));
        }
        for (name, v) in [("tau", self.tau), ("kappa", self.kappa), ("tol", self.tol)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Invalid(format!("{name} must be positive, got {v}")));
            }
        }
        match self.command {
            Command::Convergence => {
                if !self.filling.is_single() && !self.refinement.is_single() {
                    return Err(Error::Invalid("sweep either filling or refinement, not both".into()));
                }
            }
            Command::Mesh => {
                if !self.filling.is_single() || !self.refinement.is_single() {
                    return Err(Error::Invalid("mesh takes single filling and refinement levels".into()));
                }
            }
            Command::Solve => {
                if self.mesh == "filling" && (!self.filling.is_single() || !self.refinement.is_single()) {
                    return Err(Error::Invalid("solve takes single filling and refinement levels".into()));
                }
                if self.mesh == "file" && self.mesh_file.is_none() {
                    return Err(Error::Invalid("mesh 'file' needs --mesh-file".into()));
                }
                if !["filling", "star3", "single-edge", "file"].contains(&self.mesh.as_str()) {
                    return Err(Error::Invalid(format!("unknown mesh kind '{}'", self.mesh)));
                }
            }
            Command::EpsilonStudy => {
                if !ThinDomainSpec::scenario_names().contains(&self.scenario.as_str()) {
                    return Err(Error::Invalid(format!("unknown scenario '{}'", self.scenario)));
                }
            }
        }
        Ok(())
    }

    fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            degree: self.p,
            tau: self.tau,
            method: self.method,
            tol: self.tol,
            jobs: self.jobs,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "hyperhdg", version, about = "LDG-H diffusion solver on geometric hypergraphs")]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Subcommand, Debug)]
enum CliCommand {
    /// Write the interchange file of a cube-filling mesh.
    Mesh(Overrides),
    /// Solve one problem and print a summary.
    Solve(Overrides),
    /// Run a filling or refinement convergence study.
    Convergence(Overrides),
    /// Sweep the thin-domain limit over eps.
    EpsilonStudy(Overrides),
}

#[derive(Args, Debug, Default)]
struct Overrides {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the effective configuration as JSON and exit.
    #[arg(long)]
    dump_config: bool,
    #[arg(long)]
    d: Option<usize>,
    /// Filling level `i` or range `a..b`.
    #[arg(long)]
    filling: Option<String>,
    /// Refinement level `r` or range `a..b`.
    #[arg(long)]
    refinement: Option<String>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    /// cg_jacobi or direct.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    exact: Option<String>,
    /// filling, star3, single-edge or file.
    #[arg(long)]
    mesh: Option<String>,
    #[arg(long)]
    mesh_file: Option<PathBuf>,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long)]
    matrix_market: Option<PathBuf>,
    /// Worker threads (0: all cores).
    #[arg(long, env = "HYPERHDG_JOBS")]
    jobs: Option<usize>,
    #[arg(long)]
    record_walltime: bool,
    #[arg(long)]
    scenario: Option<String>,
    /// Comma-separated, strictly decreasing eps values.
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    /// weighted or unweighted.
    #[arg(long)]
    weighting: Option<String>,
}

fn parse_weighting(s: &str) -> Result<LimitWeighting> {
    match s {
        "weighted" => Ok(LimitWeighting::Weighted),
        "unweighted" => Ok(LimitWeighting::Unweighted),
        other => Err(Error::Invalid(format!("unknown weighting '{other}'"))),
    }
}

fn effective_config(command: Command, o: &Overrides) -> Result<RunConfig> {
    let mut cfg = match &o.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str::<RunConfig>(&text).map_err(|e| Error::Invalid(format!("config {}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    cfg.command = command;
    if let Some(v) = o.d {
        cfg.d = v;
    }
    if let Some(v) = &o.filling {
        cfg.filling = v.parse()?;
    }
    if let Some(v) = &o.refinement {
        cfg.refinement = v.parse()?;
    }
    if let Some(v) = o.p {
        cfg.p = v;
    }
    if let Some(v) = o.tau {
        cfg.tau = v;
    }
    if let Some(v) = o.kappa {
        cfg.kappa = v;
    }
    if let Some(v) = &o.method {
        cfg.method = v.parse()?;
    }
    if let Some(v) = o.tol {
        cfg.tol = v;
    }
    if let Some(v) = &o.exact {
        cfg.exact = v.clone();
    }
    if let Some(v) = &o.mesh {
        cfg.mesh = v.clone();
    }
    if let Some(v) = &o.mesh_file {
        cfg.mesh_file = Some(v.clone());
    }
    if let Some(v) = &o.output {
        cfg.output = Some(v.clone());
    }
    if let Some(v) = &o.matrix_market {
        cfg.matrix_market = Some(v.clone());
    }
    if let Some(v) = o.jobs {
        cfg.jobs = v;
    }
    if o.record_walltime {
        cfg.record_walltime = true;
    }
    if let Some(v) = &o.scenario {
        cfg.scenario = v.clone();
    }
    if let Some(v) = &o.eps {
        cfg.eps = v.clone();
    }
    if let Some(v) = &o.weighting {
        cfg.weighting = parse_weighting(v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Exit code of an error: 2 for invalid input, 1 for solver failures.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::NoConvergence { .. }
        | Error::SolveFailure(_)
        | Error::SingularLocalSystem { .. }
        | Error::Io(_) => 1,
        _ => 2,
    }
}

/// Runs the CLI on `argv` (including the program name).
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if code == 0 { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    let (command, overrides) = match &cli.command {
        CliCommand::Mesh(o) => (Command::Mesh, o),
        CliCommand::Solve(o) => (Command::Solve, o),
        CliCommand::Convergence(o) => (Command::Convergence, o),
        CliCommand::EpsilonStudy(o) => (Command::EpsilonStudy, o),
    };
    let result = effective_config(command, overrides).and_then(|cfg| {
        if overrides.dump_config {
            writeln!(out, "{}", serde_json::to_string_pretty(&cfg)?)?;
            Ok(())
        } else {
            dispatch(&cfg, out)
        }
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn write_or_print(path: &Option<PathBuf>, text: &str, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn filling_spec(cfg: &RunConfig) -> FillingSpec {
    FillingSpec::new(cfg.d, cfg.filling.first, cfg.refinement.first)
}

fn dispatch(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    match cfg.command {
        Command::Mesh => run_mesh(cfg, out),
        Command::Solve => run_solve(cfg, out),
        Command::Convergence => run_convergence(cfg, out),
        Command::EpsilonStudy => run_epsilon(cfg, out),
    }
}

fn run_mesh(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let spec = filling_spec(cfg);
    let graph = with_kappa(&cube_filling_guarded(spec, &MeshGuard::default())?, cfg.kappa)?;
    let mut json = graph.to_json()?;
    json.push('\n');
    match &cfg.output {
        Some(p) => std::fs::write(p, &json)?,
        None => out.write_all(json.as_bytes())?,
    }
    writeln!(
        out,
        "mesh d={} i={} r={} edges={} nodes={} dirichlet_nodes={}",
        spec.edge_dim,
        spec.filling,
        spec.refinement,
        graph.edges().len(),
        graph.nodes().len(),
        graph.nodes().iter().filter(|n| n.kind == crate::NodeKind::Dirichlet).count()
    )?;
    Ok(())
}

fn load_graph(cfg: &RunConfig) -> Result<HyperGraph> {
    let graph = match cfg.mesh.as_str() {
        "filling" => cube_filling_guarded(filling_spec(cfg), &MeshGuard::default())?,
        "star3" => star_graph(&[1.0; 3], &[true; 3])?,
        "single-edge" => single_edge(1.0, 1.0)?,
        "file" => {
            let path = cfg.mesh_file.as_ref().ok_or_else(|| Error::Invalid("missing mesh file".into()))?;
            HyperGraph::from_json(&std::fs::read_to_string(path)?)?
        }
        other => return Err(Error::Invalid(format!("unknown mesh kind '{other}'"))),
    };
    with_kappa(&graph, cfg.kappa)
}

fn run_solve(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let start = Instant::now();
    let graph = load_graph(cfg)?;
    let exact = if cfg.exact == "star-oracle" {
        None
    } else {
        Some(ExactSolution::from_catalog(&cfg.exact, graph.ambient_dim())?)
    };
    let oracle = NodalData::star_oracle();
    if exact.is_none() && graph.nodes().len() != oracle.dirichlet.len() {
        return Err(Error::Invalid("star-oracle data needs the star3 mesh".into()));
    }
    let data: &dyn ProblemData = match &exact {
        Some(e) => e,
        None => &oracle,
    };
    let opts = cfg.solve_options();
    if let Some(path) = &cfg.matrix_market {
        std::fs::write(path, assemble_problem(&graph, data, &opts)?.to_matrix_market())?;
    }
    let fields = solve_problem(&graph, data, &opts)?;
    let error = exact
        .as_ref()
        .map_or("n/a".to_string(), |e| format!("{:.6e}", l2_error(&graph, &fields, e)));
    let walltime = if cfg.record_walltime { start.elapsed().as_secs_f64() } else { 0.0 };
    write!(
        out,
        "solve mesh={} edges={} p={} dofs={} free={} l2_error={} iterations={} conservation_defect={:.3e}",
        cfg.mesh,
        graph.edges().len(),
        cfg.p,
        fields.dofmap.total,
        fields.dofmap.n_free(),
        error,
        fields.stats.iterations,
        fields.conservation.defect(),
    )?;
    if exact.is_none() {
        write!(out, " center_lambda={:.12}", fields.node_trace(0)[0])?;
    }
    writeln!(out, " walltime_s={walltime:.3}")?;
    Ok(())
}

fn run_convergence(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let start = Instant::now();
    let meshes: Vec<FillingSpec> = if cfg.filling.is_single() {
        (cfg.refinement.first..=cfg.refinement.last)
            .map(|r| FillingSpec::new(cfg.d, cfg.filling.first, r))
            .collect()
    } else {
        (cfg.filling.first..=cfg.filling.last)
            .map(|i| FillingSpec::new(cfg.d, i, cfg.refinement.first))
            .collect()
    };
    let mut plan = StudyPlan::new(meshes, cfg.solve_options());
    plan.exact = cfg.exact.clone();
    plan.kappa = cfg.kappa;
    plan.record_walltime = cfg.record_walltime;
    let report = convergence_study(&plan)?;
    write_or_print(&cfg.output, &report.to_csv(), out)?;
    let last = report.rows.last().expect("plan has at least one mesh");
    let walltime = if cfg.record_walltime { start.elapsed().as_secs_f64() } else { 0.0 };
    let eoc = last.eoc.map_or("n/a".to_string(), |e| format!("{e:.4}"));
    let iterations: usize = report.rows.iter().map(|r| r.iterations).sum();
    writeln!(
        out,
        "convergence d={} p={} rows={} dofs={} l2_error={:.6e} last_eoc={} iterations={} walltime_s={:.3}",
        cfg.d,
        cfg.p,
        report.rows.len(),
        last.dofs,
        last.l2_error,
        eoc,
        iterations,
        walltime
    )?;
    Ok(())
}

fn run_epsilon(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let start = Instant::now();
    let first = *cfg.eps.first().ok_or_else(|| Error::Invalid("empty eps list".into()))?;
    let mut spec = ThinDomainSpec::scenario(&cfg.scenario, first)?;
    for arm in &mut spec.arms {
        arm.kappa = cfg.kappa;
    }
    spec.kappa_node = cfg.kappa;
    let run = || epsilon_sweep(&spec, &cfg.eps, &MeshRule::default(), cfg.weighting);
    let report = crate::solve::with_jobs(cfg.jobs, run)??;
    write_or_print(&cfg.output, &report.to_csv(), out)?;
    let totals = report.total_discrepancy();
    let walltime = if cfg.record_walltime { start.elapsed().as_secs_f64() } else { 0.0 };
    writeln!(
        out,
        "epsilon-study scenario={} eps_count={} first_discrepancy={:.6e} last_discrepancy={:.6e} walltime_s={:.3}",
        cfg.scenario,
        totals.len(),
        totals.first().copied().unwrap_or(0.0),
        totals.last().copied().unwrap_or(0.0),
        walltime
    )?;
    Ok(())
}
