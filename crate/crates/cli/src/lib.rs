//! Command-line front end: argument parsing, command dispatch, artifact
//! writing and the exit-code contract.
//!
//! Every command prints a `key=value` summary on stdout. Failures print one
//! line `error kind=<kind> reason="<text>"` on stderr and exit with 2 (parse),
//! 3 (precondition), 4 (non-convergence) or 5 (verification).

use clap::{Parser, Subcommand};
use slopeforge::approximation::{
    check_shadowing, markov_approx, normalize, sup_dist_f64, NormalizeConfig,
};
use slopeforge::coding::{psm_reduce, DEFAULT_MAX_POINTS};
use slopeforge::entropy::{entropy, entropy_lapcount, EntropyConfig};
use slopeforge::graphmap::{flatten, normalize_graph, parse_graph_map};
use slopeforge::markov::{is_markov, markov_closure, MarkovStructure, DEFAULT_TOL};
use slopeforge::operator::{phi, PhiConfig};
use slopeforge::pwmap::{parse_pwa, serialize_pwa, serialize_pwa_decimal, DEFAULT_NODE_LIMIT};
use slopeforge::rational::{
    format_rational, format_rational_decimal, format_real, int, parse_rational, to_f64,
    DEFAULT_SIG_DIGITS,
};
use slopeforge::semiconjugacy::{verify_on_table, verify_semiconjugacy, PsiTable, COLLAPSE_EPS};
use slopeforge::{Error, PwaMap, Rational, Side};
use std::path::{Path, PathBuf};

/// Mantissa bits of the arithmetic actually used for real values.
pub const MANTISSA_BITS: u32 = 53;

#[derive(Parser, Debug)]
#[command(name = "slopeforge", version, about = "Constant-slope normal forms of interval and graph maps")]
pub struct Cli {
    /// Significant digits in decimal output.
    #[arg(long, global = true, default_value_t = DEFAULT_SIG_DIGITS)]
    pub digits: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Lap-count and spectral entropy.
    Entropy {
        file: PathBuf,
        #[arg(long, default_value_t = 12)]
        depth: usize,
        #[arg(long, default_value_t = DEFAULT_NODE_LIMIT)]
        node_limit: usize,
        /// Write the per-depth report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a point set for the Markov property, or search for one.
    MarkovCheck {
        file: PathBuf,
        /// Comma-separated rationals; omitted means closing the lap endpoints.
        #[arg(long, value_delimiter = ',')]
        points: Vec<String>,
        #[arg(long, default_value_t = 2000)]
        max_points: usize,
    },
    /// Semiconjugacy onto a map of constant slope.
    Normalize {
        file: PathBuf,
        /// Stopping threshold for successive psi differences.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Residual accepted by the final check; defaults to `tol` for Markov
        /// input and 1e-3 for approximated input.
        #[arg(long)]
        residual_tol: Option<f64>,
        #[arg(long, default_value_t = 4096)]
        grid: usize,
        /// Comma-separated approximation indices.
        #[arg(long, value_delimiter = ',')]
        schedule: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        psi: Option<PathBuf>,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Markov approximation within 1/n.
    Approx {
        file: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 6)]
        shadow_cap: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        points: Option<PathBuf>,
    },
    /// Residual of psi∘f = g∘psi on a grid.
    Verify {
        f: PathBuf,
        g: PathBuf,
        psi: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        grid: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Quotient of a map with flat pieces to a strictly monotone one.
    Reduce {
        file: PathBuf,
        #[arg(long, default_value_t = 16)]
        depth: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_POINTS)]
        max_points: usize,
        #[arg(long)]
        intervals: Option<PathBuf>,
        #[arg(long)]
        psi0: Option<PathBuf>,
        #[arg(long)]
        fhat: Option<PathBuf>,
    },
    /// Normal form of a continuous map with conjugacy evidence.
    Phi {
        file: PathBuf,
        #[arg(long, default_value = "phi_out")]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 16)]
        reduce_depth: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 4096)]
        grid: usize,
    },
    /// Interval map of a graph map; optionally normalize and lift back.
    Flatten {
        graph: PathBuf,
        /// Defaults to `<graph stem>.pwa` in the working directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        chart: Option<PathBuf>,
        #[arg(long)]
        normalize: bool,
        #[arg(long)]
        quotient: Option<PathBuf>,
        #[arg(long)]
        g: Option<PathBuf>,
    },
    /// Sampled values `x<TAB>f(x)`, both sides at jumps.
    Plot {
        file: PathBuf,
        #[arg(long, default_value_t = 256)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommandResult {
    pub exit_code: i32,
    pub artifacts: Vec<PathBuf>,
    pub summary: Vec<(String, String)>,
    /// The single stderr line of a failure.
    pub reason: Option<String>,
    pub warnings: Vec<String>,
    /// Data printed before the summary (plot without `--out`).
    pub stdout: Option<String>,
}

impl CommandResult {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.summary
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn summary_text(&self) -> String {
        self.summary
            .iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }
}

#[derive(Debug)]
pub struct Failure {
    pub kind: &'static str,
    pub code: i32,
    pub reason: String,
}

impl Failure {
    fn new(kind: &'static str, code: i32, reason: impl Into<String>) -> Self {
        Failure {
            kind,
            code,
            reason: reason.into(),
        }
    }

    fn verification(reason: impl Into<String>) -> Self {
        Failure::new("verification", 5, reason)
    }

    fn line(&self) -> String {
        format!("error kind={} reason=\"{}\"", self.kind, self.reason.replace('"', "'"))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (kind, code) = match &e {
            Error::Parse { .. }
            | Error::NonIncreasing { .. }
            | Error::OutOfDomain { .. }
            | Error::TooFewNodes(_)
            | Error::BadNode { .. }
            | Error::Graph(_) => ("parse", 2),
            Error::EntropyNotPositive => ("entropy_not_positive", 3),
            Error::Discontinuous => ("discontinuous", 3),
            Error::UndefinedSide(_)
            | Error::DomainMismatch
            | Error::Budget(_)
            | Error::NotPsm(_)
            | Error::Precondition(_) => ("precondition", 3),
            Error::NonConvergence(_) => ("non_convergence", 4),
            Error::Verification(_) => ("verification", 5),
        };
        Failure::new(kind, code, e.to_string())
    }
}

struct Ctx {
    sig: usize,
    summary: Vec<(String, String)>,
    artifacts: Vec<PathBuf>,
    warnings: Vec<String>,
    stdout: Option<String>,
}

impl Ctx {
    fn put(&mut self, key: &str, value: impl ToString) {
        self.summary.push((key.to_string(), value.to_string()));
    }

    fn real(&mut self, key: &str, x: f64) {
        let s = format_real(x, self.sig);
        self.put(key, s);
    }

    fn write(&mut self, path: &Path, text: &str) -> Result<(), Failure> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)
                .map_err(|e| Failure::new("io", 2, format!("{}: {e}", dir.display())))?;
        }
        std::fs::write(path, text)
            .map_err(|e| Failure::new("io", 2, format!("{}: {e}", path.display())))?;
        self.artifacts.push(path.to_path_buf());
        Ok(())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::new("io", 2, format!("{}: {e}", path.display())))
}

fn read_pwa(path: &Path) -> Result<PwaMap, Failure> {
    parse_pwa(&read(path)?).map_err(|e| {
        let mut f = Failure::from(e);
        f.reason = format!("{}: {}", path.display(), f.reason);
        f
    })
}

/// Reads `SLOPEFORGE_PRECISION`; only binary64 is implemented, so larger
/// requests produce a warning.
fn precision_warning() -> Option<String> {
    let raw = std::env::var("SLOPEFORGE_PRECISION").ok()?;
    match raw.trim().parse::<u32>() {
        Ok(bits) if bits > MANTISSA_BITS => Some(format!(
            "SLOPEFORGE_PRECISION={bits} exceeds the {MANTISSA_BITS}-bit mantissa in use; continuing with {MANTISSA_BITS} bits"
        )),
        Ok(_) => None,
        Err(_) => Some(format!("ignoring SLOPEFORGE_PRECISION={raw:?}: not an integer")),
    }
}

pub fn run(cli: &Cli) -> CommandResult {
    let mut ctx = Ctx {
        sig: cli.digits.clamp(1, 17),
        summary: Vec::new(),
        artifacts: Vec::new(),
        warnings: precision_warning().into_iter().collect(),
        stdout: None,
    };
    let outcome = dispatch(&cli.command, &mut ctx);
    if !ctx.artifacts.is_empty() {
        let list: Vec<String> = ctx.artifacts.iter().map(|p| p.display().to_string()).collect();
        ctx.put("artifacts", list.join(","));
    }
    let (exit_code, reason) = match outcome {
        Ok(()) => (0, None),
        Err(f) => (f.code, Some(f.line())),
    };
    CommandResult {
        exit_code,
        artifacts: ctx.artifacts,
        summary: ctx.summary,
        reason,
        warnings: ctx.warnings,
        stdout: ctx.stdout,
    }
}

fn dispatch(cmd: &Command, ctx: &mut Ctx) -> Result<(), Failure> {
    match cmd {
        Command::Entropy {
            file,
            depth,
            node_limit,
            out,
        } => cmd_entropy(ctx, file, *depth, *node_limit, out.as_deref()),
        Command::MarkovCheck {
            file,
            points,
            max_points,
        } => cmd_markov_check(ctx, file, points, *max_points),
        Command::Normalize {
            file,
            tol,
            residual_tol,
            grid,
            schedule,
            out,
            psi,
            trace,
        } => {
            let mut cfg = NormalizeConfig {
                target: *tol,
                grid: *grid,
                ..NormalizeConfig::default()
            };
            if !schedule.is_empty() {
                cfg.schedule = schedule.clone();
            }
            let paths = [out.as_deref(), psi.as_deref(), trace.as_deref()];
            cmd_normalize(ctx, file, &cfg, *residual_tol, paths)
        }
        Command::Approx {
            file,
            n,
            shadow_cap,
            out,
            points,
        } => cmd_approx(ctx, file, *n, *shadow_cap, out.as_deref(), points.as_deref()),
        Command::Verify {
            f,
            g,
            psi,
            grid,
            tol,
        } => cmd_verify(ctx, f, g, psi, *grid, *tol),
        Command::Reduce {
            file,
            depth,
            max_points,
            intervals,
            psi0,
            fhat,
        } => cmd_reduce(
            ctx,
            file,
            *depth,
            *max_points,
            [intervals.as_deref(), psi0.as_deref(), fhat.as_deref()],
        ),
        Command::Phi {
            file,
            out_dir,
            reduce_depth,
            tol,
            grid,
        } => {
            let mut cfg = PhiConfig {
                reduce_depth: *reduce_depth,
                ..PhiConfig::default()
            };
            cfg.normalize.target = *tol;
            cfg.normalize.grid = *grid;
            cmd_phi(ctx, file, out_dir, &cfg)
        }
        Command::Flatten {
            graph,
            out,
            chart,
            normalize,
            quotient,
            g,
        } => cmd_flatten(ctx, graph, out.as_deref(), chart.as_deref(), *normalize, quotient.as_deref(), g.as_deref()),
        Command::Plot { file, samples, out } => cmd_plot(ctx, file, *samples, out.as_deref()),
    }
}

fn cmd_entropy(ctx: &mut Ctx, file: &Path, depth: usize, node_limit: usize, out: Option<&Path>) -> Result<(), Failure> {
    let f = read_pwa(file)?;
    let cfg = EntropyConfig {
        depth,
        node_limit,
        ..EntropyConfig::default()
    };
    let r = entropy(&f, &cfg)?;
    ctx.put("depth", r.lap_counts.len());
    ctx.put(
        "c_n",
        r.lap_counts.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(","),
    );
    ctx.real("h_est", r.trend);
    ctx.real("fekete", r.fekete);
    match r.spectral {
        Some(h) => ctx.real("h_spectral", h),
        None => ctx.put("h_spectral", "-"),
    }
    if let Some(a) = r.agreed {
        ctx.put("agreed", a);
    }
    ctx.put("truncated", r.truncated);
    if !r.positive() {
        ctx.warnings.push("entropy not positive; normalization undefined".into());
    }
    if let Some(p) = out {
        let text = r.to_tsv(ctx.sig);
        ctx.write(p, &text)?;
    }
    Ok(())
}

fn parse_points(raw: &[String]) -> Result<Vec<Rational>, Failure> {
    raw.iter()
        .map(|s| {
            parse_rational(s.trim()).ok_or_else(|| Failure::new("parse", 2, format!("bad point '{s}'")))
        })
        .collect()
}

fn describe_structure(ctx: &mut Ctx, s: &MarkovStructure) {
    ctx.put("markov", true);
    ctx.put("points_count", s.points.len());
    if s.points.len() <= 64 {
        let pts: Vec<String> = s.points.iter().map(format_rational).collect();
        ctx.put("points", pts.join(","));
    }
    ctx.put("cells", s.num_cells());
    ctx.real("beta", s.beta());
    ctx.real("h_spectral", s.entropy());
    let m = s.matrix.mixing();
    ctx.put("irreducible", m.irreducible);
    ctx.put("primitive", m.primitive);
}

fn cmd_markov_check(ctx: &mut Ctx, file: &Path, points: &[String], max_points: usize) -> Result<(), Failure> {
    let f = read_pwa(file)?;
    if points.is_empty() {
        return match markov_closure(&f, max_points, DEFAULT_TOL) {
            Ok(s) => {
                describe_structure(ctx, &s);
                Ok(())
            }
            Err(e @ Error::Budget(_)) => {
                ctx.put("markov", false);
                Err(Failure::verification(e.to_string()))
            }
            Err(e) => Err(e.into()),
        };
    }
    let pts = parse_points(points)?;
    if let Err(v) = is_markov(&f, &pts) {
        ctx.put("markov", false);
        ctx.put("violation", v.to_string());
        return Err(Failure::verification(format!("not a Markov set: {v}")));
    }
    let s = MarkovStructure::new(f, pts, DEFAULT_TOL)?;
    describe_structure(ctx, &s);
    Ok(())
}

fn cmd_normalize(
    ctx: &mut Ctx,
    file: &Path,
    cfg: &NormalizeConfig,
    residual_tol: Option<f64>,
    [out, psi_out, trace_out]: [Option<&Path>; 3],
) -> Result<(), Failure> {
    let f = read_pwa(file)?;
    let t = normalize(&f, cfg)?;
    let residual = t.residual();
    let rtol = residual_tol.unwrap_or(if t.exact { cfg.target } else { 1e-3 });
    let conjugacy = t.psi.collapse_intervals().is_empty()
        && t.psi.min_gap() > COLLAPSE_EPS
        && residual < rtol;
    ctx.real("beta", t.g.slope);
    ctx.real("gamma", t.gamma);
    ctx.real("log_gamma", t.gamma.ln());
    ctx.real("h_lapcount", t.entropy_estimate);
    ctx.put("exact", t.exact);
    ctx.put("converged", t.converged);
    ctx.put("steps", t.steps.len());
    if let Some(gap) = t.steps.last().and_then(|s| s.cauchy_gap) {
        ctx.real("cauchy_gap", gap);
    }
    ctx.real("residual", residual);
    ctx.put("conjugacy", conjugacy);
    ctx.put("psi_depth", t.psi.depth);
    ctx.real("psi_error_bound", t.psi.error_bound);
    if t.non_monotone_betas {
        ctx.warnings.push("approximant slopes were not monotone along the schedule".into());
    }
    if let Some(p) = out {
        let text = serialize_pwa_decimal(&t.g.map, ctx.sig);
        ctx.write(p, &text)?;
    }
    if let Some(p) = psi_out {
        let text = t.psi.to_tsv(ctx.sig);
        ctx.write(p, &text)?;
    }
    if let Some(p) = trace_out {
        let text = t.to_tsv(ctx.sig);
        ctx.write(p, &text)?;
    }
    if !t.converged {
        return Err(Failure::new(
            "non_convergence",
            4,
            format!("psi did not settle below {} along the schedule", cfg.target),
        ));
    }
    if residual >= rtol {
        return Err(Failure::verification(format!("residual {residual} not below {rtol}")));
    }
    Ok(())
}

fn cmd_approx(
    ctx: &mut Ctx,
    file: &Path,
    n: usize,
    shadow_cap: usize,
    out: Option<&Path>,
    points_out: Option<&Path>,
) -> Result<(), Failure> {
    if n == 0 {
        return Err(Failure::new("precondition", 3, "n must be at least 1"));
    }
    let f = read_pwa(file)?;
    let (g, ac) = markov_approx(&f, n, shadow_cap)?;
    let dist = f.sup_dist(&g)?;
    let bound = int(1) / int(n as i64);
    let within = dist < bound;
    let shadow = check_shadowing(&f, &g, ac.shadow_depth);
    ctx.put("n", n);
    ctx.put("delta", format_rational(&ac.delta));
    ctx.put("points_count", ac.points.len());
    ctx.put("sup_dist", format_rational(&dist));
    ctx.real("sup_dist_decimal", to_f64(&dist));
    ctx.put("within_bound", within);
    ctx.put("shadow_depth", ac.shadow_depth);
    ctx.put("shadowing", shadow.is_ok());
    if let Some(p) = out {
        ctx.write(p, &serialize_pwa(&g))?;
    }
    if let Some(p) = points_out {
        let mut text = String::from("x\n");
        for x in &ac.points {
            text.push_str(&format_rational(x));
            text.push('\n');
        }
        ctx.write(p, &text)?;
    }
    if !within {
        return Err(Failure::verification(format!(
            "sup_dist {} not below 1/{n}",
            format_rational(&dist)
        )));
    }
    if let Err(why) = shadow {
        return Err(Failure::verification(format!("shadowing failed: {why}")));
    }
    Ok(())
}

fn cmd_verify(ctx: &mut Ctx, f: &Path, g: &Path, psi: &Path, grid: usize, tol: f64) -> Result<(), Failure> {
    let f = read_pwa(f)?;
    let g = read_pwa(g)?;
    let psi = PsiTable::from_tsv(&read(psi)?)?;
    // a table read from disk is only known at its points; between them it is
    // interpolated, which the grid residual reports for information
    let r = verify_on_table(&f, &g, &psi, grid);
    let on_grid = verify_semiconjugacy(&f, &g, &psi, grid);
    ctx.real("residual", r.residual);
    ctx.put("probes", "table");
    ctx.real("grid_residual", on_grid.residual);
    ctx.real("worst_x", r.worst_x);
    let slopes: Vec<String> = r
        .slopes
        .iter()
        .map(|(s, c)| format!("{}:{c}", format_real(*s, ctx.sig)))
        .collect();
    ctx.put("slopes", slopes.join(","));
    ctx.put("grid", grid);
    if r.residual >= tol {
        return Err(Failure::verification(format!("residual {} not below {tol}", r.residual)));
    }
    Ok(())
}

fn cmd_reduce(
    ctx: &mut Ctx,
    file: &Path,
    depth: usize,
    max_points: usize,
    [intervals, psi0, fhat]: [Option<&Path>; 3],
) -> Result<(), Failure> {
    let f = read_pwa(file)?;
    let q = psm_reduce(&f, depth, max_points)?;
    ctx.put("depth", q.depth);
    ctx.put("collapse_intervals", q.collapse_intervals.len());
    ctx.put("collapsed_length", format_rational(&q.collapsed_length()));
    if q.collapse_intervals.len() <= 16 {
        let list: Vec<String> = q
            .collapse_intervals
            .iter()
            .map(|(a, b)| format!("[{},{}]", format_rational(a), format_rational(b)))
            .collect();
        ctx.put("intervals", list.join(";"));
    }
    ctx.put("fhat_laps", q.fhat.laps().len());
    ctx.put("fhat_psm", !q.fhat.has_constant_lap());
    ctx.real("factor_residual", q.factor_residual(&f, 4096));
    let depth10 = |m: &PwaMap| entropy_lapcount(m, 10, DEFAULT_NODE_LIMIT).map(|r| r.trend);
    ctx.real("h_in", depth10(&f)?);
    ctx.real("h_out", depth10(&q.fhat)?);
    if let Some(p) = intervals {
        ctx.write(p, &q.intervals_tsv())?;
    }
    if let Some(p) = psi0 {
        ctx.write(p, &serialize_pwa(&q.psi0))?;
    }
    if let Some(p) = fhat {
        ctx.write(p, &serialize_pwa(&q.fhat))?;
    }
    Ok(())
}

fn cmd_phi(ctx: &mut Ctx, file: &Path, out_dir: &Path, cfg: &PhiConfig) -> Result<(), Failure> {
    let f = read_pwa(file)?;
    let nf = phi(&f, cfg)?;
    let evidence = nf.evidence_text(ctx.sig);
    for line in evidence.lines() {
        if let Some((k, v)) = line.split_once('=') {
            ctx.put(k, v);
        }
    }
    if let Some(q) = &nf.quotient {
        ctx.put("collapse_intervals", q.collapse_intervals.len());
    }
    if let Ok(d) = sup_dist_f64(&f, &nf.g.map) {
        ctx.real("sup_dist_input", d);
    }
    let g_text = serialize_pwa_decimal(&nf.g.map, ctx.sig);
    let psi_text = nf.psi.to_tsv(ctx.sig);
    ctx.write(&out_dir.join("g.pwa"), &g_text)?;
    ctx.write(&out_dir.join("psi.tsv"), &psi_text)?;
    ctx.write(&out_dir.join("evidence.txt"), &evidence)?;
    Ok(())
}

fn cmd_flatten(
    ctx: &mut Ctx,
    graph: &Path,
    out: Option<&Path>,
    chart_out: Option<&Path>,
    run_normalize: bool,
    quotient_out: Option<&Path>,
    g_out: Option<&Path>,
) -> Result<(), Failure> {
    let gm = parse_graph_map(&read(graph)?)?;
    let (f, chart) = flatten(&gm)?;
    ctx.put("edges", gm.graph.edges.len());
    ctx.put("vertices", gm.graph.vertices.len());
    let cuts: Vec<String> = chart.cut_points.iter().map(format_rational).collect();
    ctx.put("cut_points", if cuts.is_empty() { "-".to_string() } else { cuts.join(",") });
    ctx.put("jumps", f.jump_points().len());
    ctx.put("laps", f.laps().len());
    let out = out.map(Path::to_path_buf).unwrap_or_else(|| {
        let stem = graph.file_stem().map_or("flat".into(), |s| s.to_string_lossy().into_owned());
        PathBuf::from(format!("{stem}.pwa"))
    });
    ctx.write(&out, &serialize_pwa(&f))?;
    if let Some(p) = chart_out {
        ctx.write(p, &chart.to_tsv())?;
    }
    if !run_normalize {
        return Ok(());
    }
    let r = normalize_graph(&gm, &NormalizeConfig::default())?;
    ctx.real("slope", r.slope());
    ctx.put("exact", r.trace.exact);
    ctx.real("residual", r.trace.residual());
    ctx.put(
        "collapsed_edges",
        if r.collapsed_edges.is_empty() { "-".to_string() } else { r.collapsed_edges.join(",") },
    );
    ctx.put("quotient_vertices", r.quotient.vertices.len());
    ctx.put("quotient_edges", r.quotient.edges.len());
    ctx.put("continuity", r.continuity_ok);
    if let Some(p) = quotient_out {
        ctx.write(p, &r.quotient.to_text())?;
    }
    if let Some(p) = g_out {
        let text = serialize_pwa_decimal(r.g(), ctx.sig);
        ctx.write(p, &text)?;
    }
    if !r.continuity_ok {
        let bad: Vec<&str> = r.checks.iter().filter(|c| !c.ok).map(|c| c.vertex.as_str()).collect();
        return Err(Failure::verification(format!(
            "lifted map discontinuous at {}",
            bad.join(",")
        )));
    }
    Ok(())
}

/// `x<TAB>f(x)` lines on `samples + 1` equispaced points plus every jump,
/// where both one-sided values get a line.
pub fn plot_tsv(f: &PwaMap, samples: usize, sig: usize) -> String {
    let (lo, hi) = (f.lo().clone(), f.hi().clone());
    let m = int(samples.max(1) as i64);
    let mut xs: Vec<Rational> = (0..=samples.max(1))
        .map(|i| &lo + (&hi - &lo) * int(i as i64) / &m)
        .collect();
    xs.extend(f.jump_points());
    xs.sort();
    xs.dedup();
    let jumps = f.jump_points();
    let mut out = String::new();
    let mut line = |x: &Rational, side: Side| {
        let y = f.eval_clamped(x, side);
        out.push_str(&format!(
            "{}\t{}\n",
            format_rational_decimal(x, sig),
            format_rational_decimal(&y, sig)
        ));
    };
    for x in &xs {
        if jumps.binary_search(x).is_ok() {
            line(x, Side::Left);
            line(x, Side::Right);
        } else {
            line(x, if x == &hi { Side::Left } else { Side::Right });
        }
    }
    out
}

fn cmd_plot(ctx: &mut Ctx, file: &Path, samples: usize, out: Option<&Path>) -> Result<(), Failure> {
    let f = read_pwa(file)?;
    let text = plot_tsv(&f, samples, ctx.sig);
    match out {
        Some(p) => {
            ctx.put("lines", text.lines().count());
            ctx.write(p, &text)?;
        }
        None => ctx.stdout = Some(text),
    }
    Ok(())
}
