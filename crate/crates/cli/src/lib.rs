//! `hll`: command-line front end for `halin-core`.
//!
//! [`run`] takes the full argument vector (program name first) and returns
//! the exit code together with everything that would be printed, so tests
//! drive it without spawning a process.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use halin_core::bijection::{exhaustive_round_trip, phi, phi_inverse, pushforward_distribution};
use halin_core::experiments::{cell_seed, lukasiewicz_profile, sample_marked, scaling_run, Family, ScalingRunConfig};
use halin_core::gh_metric::{check_lemma_bound, gh_exact_with_budget, gh_lower_bound, FiniteMetricSpace, Verdict};
use halin_core::gw::{Conditioning, ConditionedSampler, OffspringDistribution};
use halin_core::halin::{build_halin, enumerate_halin, HalinMap, Weights, MAX_HALIN_ENUMERATION};
use halin_core::looptree::{loop_graph, tree_stats};
use halin_core::planar_map::PlanarMap;
use halin_core::plane_tree::{binomial, enumerate_marked, random_tree, MarkedTree, PlaneTree};
use halin_core::render::{self, render_halin, render_looptree, render_tree};
use halin_core::{seeded_rng, Error};

pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (", env!("HLL_BUILD_INFO"), ")");

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;
pub const EXIT_BUDGET: i32 = 4;

/// Largest `n` for which the closed-form count fits comfortably in `u128`.
const MAX_CLOSED_FORM: usize = 40;

#[derive(Debug, Parser, Serialize)]
#[command(name = "hll", version = VERSION, about = "Halin maps, marked plane trees, looptrees and Gromov-Hausdorff checks")]
struct Cli {
    /// Master seed; every random choice derives from it.
    #[arg(long, global = true, env = "HLL_SEED", default_value_t = 0)]
    seed: u64,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the main artifact here (atomically) instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format; inferred from the --out extension when omitted.
    #[arg(long, global = true, value_enum)]
    format: Option<Fmt>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Fmt {
    Json,
    Csv,
    Dot,
    Svg,
    Text,
}

impl Fmt {
    fn name(self) -> &'static str {
        match self {
            Fmt::Json => "json",
            Fmt::Csv => "csv",
            Fmt::Dot => "dot",
            Fmt::Svg => "svg",
            Fmt::Text => "text",
        }
    }

    fn from_extension(p: &Path) -> Option<Fmt> {
        match p.extension()?.to_str()? {
            "json" => Some(Fmt::Json),
            "csv" => Some(Fmt::Csv),
            "dot" | "gv" => Some(Fmt::Dot),
            "svg" => Some(Fmt::Svg),
            "txt" => Some(Fmt::Text),
            _ => None,
        }
    }
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
enum Command {
    /// Enumerate or count the Halin maps with n bounded faces.
    Enumerate(EnumerateArgs),
    /// Build the Halin map of a plane tree satisfying (H*).
    Build(BuildArgs),
    /// Halin-map commands (build, enumerate).
    Halin {
        #[command(subcommand)]
        cmd: HalinCmd,
    },
    /// Sample Galton-Watson trees conditioned on their size.
    Sample(SampleArgs),
    /// Offspring-law commands (sample, mu).
    Gw {
        #[command(subcommand)]
        cmd: GwCmd,
    },
    /// The bijection between Halin maps and marked plane trees.
    Bij {
        #[command(subcommand)]
        cmd: BijCmd,
    },
    /// Gromov-Hausdorff distances and the height bound.
    Gh {
        #[command(subcommand)]
        cmd: GhCmd,
    },
    /// Looptrees of plane trees.
    Loop {
        #[command(subcommand)]
        cmd: LoopCmd,
    },
    /// Scaling experiments.
    Exp {
        #[command(subcommand)]
        cmd: ExpCmd,
    },
    /// Draw a tree, looptree or Halin map as DOT or SVG.
    Render(RenderArgs),
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
enum HalinCmd {
    /// Build the Halin map of a plane tree satisfying (H*).
    Build(BuildArgs),
    /// Enumerate or count the Halin maps with n bounded faces.
    Enumerate(EnumerateArgs),
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
enum GwCmd {
    /// Sample Galton-Watson trees conditioned on their size.
    Sample(SampleArgs),
    /// The critical offspring law induced by face weights (or the stable law).
    Mu(MuArgs),
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
enum BijCmd {
    /// Marked tree of a Halin map given as JSON.
    Phi(PhiArgs),
    /// Halin map of a marked tree.
    #[command(alias = "inverse")]
    Inv(InvArgs),
    /// Check φ⁻¹ ∘ φ and φ ∘ φ⁻¹.
    Roundtrip(RoundtripArgs),
    /// Exact law of the shape of φ(H) under Boltzmann weights.
    Pushforward(PushforwardArgs),
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
enum GhCmd {
    /// Exact distance between two metric spaces given as CSV matrices.
    Exact(GhExactArgs),
    /// Check d_GH(H, Loop(T)) ≤ Height(T) + 3/2.
    Lemma(LemmaArgs),
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
enum LoopCmd {
    /// Build Loop(T); csv gives the distance matrix, dot/svg a drawing.
    Build(TreeArg),
    /// Height, looptree diameter and Łukasiewicz extremes.
    Stats(TreeArg),
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
enum ExpCmd {
    /// Height and looptree diameter across sizes; csv gives one row per sample.
    Scaling(ExpArgs),
    /// Rescaled Łukasiewicz extremes across sizes.
    Profile(ExpArgs),
}

#[derive(Debug, Args, Serialize)]
struct EnumerateArgs {
    #[arg(short)]
    n: usize,
    /// Print only the number of maps.
    #[arg(long)]
    count_only: bool,
}

#[derive(Debug, Args, Serialize)]
struct BuildArgs {
    /// Child counts in depth-first order, e.g. "3 1 0 0 1 0 0".
    #[arg(long)]
    tree: String,
}

#[derive(Debug, Args, Serialize)]
#[group(id = "law", required = true, multiple = false, args = ["alpha", "weights"])]
struct LawArgs {
    /// Stable offspring law μ(k) ∝ k^(-1-α), α ∈ (1, 2).
    #[arg(long)]
    alpha: Option<f64>,
    /// Face weights: ones, degree, power:<s> or table:<k>=<w>,...
    #[arg(long)]
    weights: Option<String>,
}

impl LawArgs {
    fn family(&self) -> Result<Family, Failure> {
        match (self.alpha, &self.weights) {
            (Some(a), None) => Ok(Family::Stable(a)),
            (None, Some(w)) => Ok(Family::Weights(parse_weights(w)?)),
            _ => Err(Failure::Usage("exactly one of --alpha and --weights is required".into())),
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Method {
    Split,
    Rejection,
}

impl From<Method> for Conditioning {
    fn from(m: Method) -> Conditioning {
        match m {
            Method::Split => Conditioning::Split,
            Method::Rejection => Conditioning::Rejection,
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct SampleArgs {
    #[arg(short)]
    n: usize,
    #[command(flatten)]
    law: LawArgs,
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, value_enum, default_value_t = Method::Split)]
    method: Method,
    /// Attach uniform marks (the marked tree of a Boltzmann Halin map).
    #[arg(long)]
    marked: bool,
}

#[derive(Debug, Args, Serialize)]
#[group(skip)]
struct MuArgs {
    #[arg(long, conflicts_with = "weights", required_unless_present = "weights")]
    alpha: Option<f64>,
    #[arg(long)]
    weights: Option<String>,
    /// Number of pmf entries to print.
    #[arg(long, default_value_t = 10)]
    head: usize,
}

#[derive(Debug, Args, Serialize)]
struct PhiArgs {
    /// Planar-map JSON file.
    #[arg(long)]
    map: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct InvArgs {
    /// Marked tree, e.g. "2:1 1:0 0:0 0:0".
    #[arg(long)]
    marked: String,
}

#[derive(Debug, Args, Serialize)]
struct RoundtripArgs {
    #[arg(short)]
    n: usize,
    /// Every Halin map and every marked tree of size n.
    #[arg(long, conflicts_with = "random")]
    exhaustive: bool,
    /// This many random marked trees instead.
    #[arg(long)]
    random: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
struct PushforwardArgs {
    #[arg(short)]
    n: usize,
    #[arg(long, default_value = "ones")]
    weights: String,
}

#[derive(Debug, Args, Serialize)]
struct GhExactArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    /// Maximum number of function pairs the search may consider.
    #[arg(long, default_value_t = halin_core::gh_metric::DEFAULT_BUDGET)]
    budget: f64,
}

#[derive(Debug, Args, Serialize)]
struct LemmaArgs {
    #[arg(short)]
    n: usize,
    /// Every Halin map with n bounded faces.
    #[arg(long)]
    exhaustive: bool,
    /// Number of uniform random Halin maps otherwise.
    #[arg(long, default_value_t = 10)]
    samples: usize,
    #[arg(long, default_value_t = halin_core::gh_metric::DEFAULT_BUDGET)]
    budget: f64,
}

#[derive(Debug, Args, Serialize)]
struct TreeArg {
    #[arg(long)]
    tree: String,
}

#[derive(Debug, Args, Serialize)]
struct ExpArgs {
    #[command(flatten)]
    law: LawArgs,
    /// Comma-separated sizes; "a,b,...,z" extends a geometric (or arithmetic) progression.
    #[arg(long)]
    sizes: String,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, value_enum, default_value_t = Method::Split)]
    method: Method,
    /// Also measure the Halin-map diameter (n ≤ 10000).
    #[arg(long)]
    halin: bool,
    /// Write the summary JSON here as well.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
#[group(skip)]
struct RenderArgs {
    #[arg(long, conflicts_with_all = ["marked", "map"], required_unless_present_any = ["marked", "map"])]
    tree: Option<String>,
    /// Marked tree; drawn as its Halin map.
    #[arg(long, conflicts_with = "map")]
    marked: Option<String>,
    /// Planar-map JSON file of a Halin map.
    #[arg(long)]
    map: Option<PathBuf>,
    /// What to draw for --tree.
    #[arg(long = "as", value_enum, default_value_t = Drawing::Halin)]
    draw: Drawing,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Drawing {
    Tree,
    Loop,
    Halin,
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Invariant(String),
    Budget(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Invariant(_) => EXIT_INVARIANT,
            Failure::Budget(_) => EXIT_BUDGET,
            Failure::Io(_) => EXIT_IO,
        }
    }

    fn json(&self) -> String {
        let (kind, msg) = match self {
            Failure::Usage(m) => ("usage", m),
            Failure::Invariant(m) => ("invariant", m),
            Failure::Budget(m) => ("budget", m),
            Failure::Io(m) => ("io", m),
        };
        json!({ "error": kind, "code": self.code(), "message": msg }).to_string()
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let msg = e.to_string();
        match e {
            Error::Invariant(_) | Error::NotHalin(_) | Error::HstarViolated(_) => Failure::Invariant(msg),
            Error::BudgetExceeded { .. } | Error::SizeGuard { .. } => Failure::Budget(msg),
            _ => Failure::Usage(msg),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Failure {
        Failure::Io(e.to_string())
    }
}

/// What a command produced: a human summary, a JSON value, and optional
/// alternative renderings. `failure` is set when the computation finished
/// but found a violated invariant; the artifact is still emitted.
struct Report {
    text: String,
    json: Value,
    alt: Vec<(Fmt, String)>,
    default: Fmt,
    failure: Option<Failure>,
}

impl Report {
    fn new(text: impl Into<String>, json: Value) -> Report {
        Report {
            text: text.into(),
            json,
            alt: Vec::new(),
            default: Fmt::Text,
            failure: None,
        }
    }

    fn with(mut self, fmt: Fmt, body: String) -> Report {
        self.alt.push((fmt, body));
        self
    }

    fn render(&self, fmt: Fmt) -> Result<String, Failure> {
        match fmt {
            Fmt::Text => Ok(ensure_newline(self.text.clone())),
            Fmt::Json => Ok(ensure_newline(serde_json::to_string_pretty(&self.json).unwrap())),
            other => self
                .alt
                .iter()
                .find(|(f, _)| *f == other)
                .map(|(_, s)| ensure_newline(s.clone()))
                .ok_or_else(|| Failure::Usage(format!("this command has no {} output", other.name()))),
        }
    }
}

fn ensure_newline(mut s: String) -> String {
    if !s.ends_with('\n') {
        s.push('\n');
    }
    s
}

/// Runs `hll` on `argv` (program name first).
pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            return if code == EXIT_OK {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            };
        }
    };
    let mut stderr = format!("config: {}\n", serde_json::to_string(&cli).unwrap());
    let result = match cli.threads {
        Some(0) => Err((String::new(), Failure::Usage("--threads must be positive".into()))),
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| execute(&cli)),
            Err(e) => Err((String::new(), Failure::Io(e.to_string()))),
        },
        None => execute(&cli),
    };
    match result {
        Ok((stdout, None)) => Outcome { code: EXIT_OK, stdout, stderr },
        Ok((stdout, Some(f))) | Err((stdout, f)) => {
            stderr.push_str(&f.json());
            stderr.push('\n');
            Outcome { code: f.code(), stdout, stderr }
        }
    }
}

type Executed = Result<(String, Option<Failure>), (String, Failure)>;

fn execute(cli: &Cli) -> Executed {
    let report = dispatch(cli).map_err(|f| (String::new(), f))?;
    let fmt = cli
        .format
        .or_else(|| cli.out.as_deref().and_then(Fmt::from_extension))
        .unwrap_or(report.default);
    let body = report.render(fmt).map_err(|f| (String::new(), f))?;
    let stdout = match &cli.out {
        None => body,
        Some(path) => {
            write_atomic(path, &body).map_err(|f| (String::new(), f))?;
            let mut s = if fmt == Fmt::Text { String::new() } else { ensure_newline(report.text.clone()) };
            s.push_str(&format!("wrote {}\n", path.display()));
            s
        }
    };
    Ok((stdout, report.failure))
}

fn write_atomic(path: &Path, body: &str) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(body.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Failure::Io(e.to_string()))?;
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<Report, Failure> {
    let seed = cli.seed;
    match &cli.command {
        Command::Enumerate(a) | Command::Halin { cmd: HalinCmd::Enumerate(a) } => enumerate(a),
        Command::Build(a) | Command::Halin { cmd: HalinCmd::Build(a) } => build(a),
        Command::Sample(a) | Command::Gw { cmd: GwCmd::Sample(a) } => sample(a, seed),
        Command::Gw { cmd: GwCmd::Mu(a) } => mu(a),
        Command::Bij { cmd } => match cmd {
            BijCmd::Phi(a) => bij_phi(a),
            BijCmd::Inv(a) => bij_inv(a),
            BijCmd::Roundtrip(a) => bij_roundtrip(a, seed),
            BijCmd::Pushforward(a) => bij_pushforward(a),
        },
        Command::Gh { cmd } => match cmd {
            GhCmd::Exact(a) => gh_exact_cmd(a, seed),
            GhCmd::Lemma(a) => gh_lemma(a, seed),
        },
        Command::Loop { cmd } => match cmd {
            LoopCmd::Build(a) => loop_build(a),
            LoopCmd::Stats(a) => loop_stats(a),
        },
        Command::Exp { cmd } => match cmd {
            ExpCmd::Scaling(a) => exp_scaling(a, seed),
            ExpCmd::Profile(a) => exp_profile(a, seed),
        },
        Command::Render(a) => render_cmd(a),
    }
}

fn parse_weights(s: &str) -> Result<Weights, Failure> {
    Ok(s.parse::<Weights>()?)
}

fn parse_tree(s: &str) -> Result<PlaneTree, Failure> {
    Ok(s.parse::<PlaneTree>()?)
}

fn read_map(path: &Path) -> Result<HalinMap, Failure> {
    let text = std::fs::read_to_string(path)?;
    let map = PlanarMap::from_json(&text)?;
    Ok(HalinMap::from_map(&map, None)?)
}

fn map_json(h: &HalinMap) -> Value {
    serde_json::from_str(&h.map().to_json()).unwrap()
}

/// `|ℍₙ| = (1/n) C(3n−2, n−1)`, the number of marked trees with n vertices.
fn closed_form_count(n: usize) -> u128 {
    if n == 0 {
        return 0;
    }
    binomial(3 * n as u64 - 2, n as u64 - 1) / n as u128
}

fn enumerate(a: &EnumerateArgs) -> Result<Report, Failure> {
    let n = a.n;
    if n == 0 {
        return Err(Failure::Usage("n must be at least 1".into()));
    }
    if a.count_only && n > MAX_HALIN_ENUMERATION {
        if n > MAX_CLOSED_FORM {
            return Err(Error::SizeGuard { what: "count", n, max: MAX_CLOSED_FORM }.into());
        }
        let c = closed_form_count(n);
        return Ok(Report::new(c.to_string(), json!({ "n": n, "count": c.to_string(), "method": "closed form" })));
    }
    let maps = enumerate_halin(n)?;
    let marked: Vec<MarkedTree> = maps.iter().map(phi).collect::<Result<_, _>>()?;
    let count = maps.len();
    let marked_count = enumerate_marked(n).map(|v| v.len()).ok();
    let closed = closed_form_count(n);
    let mut report = if a.count_only {
        Report::new(
            count.to_string(),
            json!({ "n": n, "count": count, "marked_trees": marked_count, "closed_form": closed.to_string() }),
        )
    } else {
        let mut text = format!("{count} Halin maps with {n} bounded faces (marked trees shown)\n");
        for t in &marked {
            text.push_str(&format!("{t}\n"));
        }
        Report::new(
            text,
            json!({
                "n": n,
                "count": count,
                "marked": marked.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
                "maps": maps.iter().map(map_json).collect::<Vec<_>>(),
            }),
        )
    };
    if count as u128 != closed || marked_count.is_some_and(|m| m != count) {
        report.failure = Some(Failure::Invariant(format!(
            "counts disagree: {count} maps, {marked_count:?} marked trees, closed form {closed}"
        )));
    }
    Ok(report)
}

fn build(a: &BuildArgs) -> Result<Report, Failure> {
    let tree = parse_tree(&a.tree)?;
    let h = build_halin(&tree)?;
    h.validate(false)?;
    let m = h.map();
    let text = format!(
        "Halin map: {} vertices, {} edges, {} faces, {} bounded faces\n",
        m.vertex_count(),
        m.edge_count(),
        m.face_count(),
        h.size()
    );
    Ok(Report::new(text, map_json(&h))
        .with(Fmt::Dot, render_halin(&h, render::Format::Dot)?)
        .with(Fmt::Svg, render_halin(&h, render::Format::Svg)?))
}

fn sample(a: &SampleArgs, seed: u64) -> Result<Report, Failure> {
    let mu = a.law.family()?.offspring()?;
    let sampler = ConditionedSampler::new(&mu, a.n, a.method.into())?;
    let mut lines = Vec::with_capacity(a.count);
    for i in 0..a.count {
        let mut rng = seeded_rng(cell_seed(seed, a.n, i));
        let s = if a.marked {
            sample_marked(&sampler, &mut rng).to_string()
        } else {
            sampler.sample(&mut rng).to_string()
        };
        lines.push(s);
    }
    let text = lines.join("\n");
    Ok(Report::new(
        text,
        json!({ "n": a.n, "seed": seed, "marked": a.marked, "trees": lines }),
    ))
}

fn mu(a: &MuArgs) -> Result<Report, Failure> {
    let (mu, ab) = match (a.alpha, &a.weights) {
        (Some(alpha), None) => (OffspringDistribution::stable(alpha)?, None),
        (None, Some(w)) => {
            let wm = OffspringDistribution::from_weights(&parse_weights(w)?)?;
            (wm.mu, Some((wm.a, wm.b)))
        }
        _ => return Err(Failure::Usage("exactly one of --alpha and --weights is required".into())),
    };
    let head: Vec<f64> = (0..a.head).map(|k| mu.pmf(k)).collect();
    let mut text = String::new();
    if let Some((x, y)) = ab {
        text.push_str(&format!("a = {x}\nb = {y}\n"));
    }
    text.push_str(&format!("mean = {}\n", mu.mean()));
    for (k, p) in head.iter().enumerate() {
        text.push_str(&format!("mu({k}) = {p}\n"));
    }
    Ok(Report::new(
        text,
        json!({
            "a": ab.map(|p| p.0),
            "b": ab.map(|p| p.1),
            "mean": mu.mean(),
            "alpha": mu.alpha(),
            "tail_constant": mu.tail_constant(),
            "period": mu.period(),
            "truncated_mass": mu.truncated_mass(),
            "pmf_head": head,
        }),
    ))
}

fn bij_phi(a: &PhiArgs) -> Result<Report, Failure> {
    let h = read_map(&a.map)?;
    let t = phi(&h)?;
    Ok(Report::new(t.to_string(), json!({ "marked": t.to_string() })))
}

fn bij_inv(a: &InvArgs) -> Result<Report, Failure> {
    let t: MarkedTree = a.marked.parse()?;
    let h = phi_inverse(&t)?;
    h.validate(true)?;
    let mut report = Report::new(h.map().to_json(), map_json(&h))
        .with(Fmt::Dot, render_halin(&h, render::Format::Dot)?)
        .with(Fmt::Svg, render_halin(&h, render::Format::Svg)?);
    if phi(&h)? != t {
        report.failure = Some(Failure::Invariant("φ(φ⁻¹(t)) ≠ t".into()));
    }
    Ok(report)
}

fn bij_roundtrip(a: &RoundtripArgs, seed: u64) -> Result<Report, Failure> {
    let (total, ok, failures) = match (a.exhaustive, a.random) {
        (true, _) => {
            let r = exhaustive_round_trip(a.n)?;
            (r.total, r.ok, r.failures)
        }
        (false, Some(k)) => {
            let mut failures = Vec::new();
            for i in 0..k {
                let mut rng = seeded_rng(cell_seed(seed, a.n, i));
                let t = MarkedTree::random_marks(random_tree(a.n, &mut rng)?, &mut rng);
                let back = phi_inverse(&t).and_then(|h| {
                    h.validate(true)?;
                    phi(&h)
                });
                match back {
                    Ok(b) if b == t => {}
                    Ok(b) => failures.push(format!("{t} -> {b}")),
                    Err(e) => failures.push(format!("{t}: {e}")),
                }
            }
            (k, k - failures.len(), failures)
        }
        (false, None) => return Err(Failure::Usage("pass --exhaustive or --random <K>".into())),
    };
    let verdict = if ok == total && failures.is_empty() { "OK" } else { "FAILED" };
    let mut text = format!("{ok}/{total} {verdict}");
    for f in failures.iter().take(20) {
        text.push_str(&format!("\n  {f}"));
    }
    let mut report = Report::new(
        text,
        json!({ "n": a.n, "total": total, "ok": ok, "failures": failures }),
    );
    if verdict != "OK" {
        report.failure = Some(Failure::Invariant(format!("{} round trips failed", total - ok)));
    }
    Ok(report)
}

fn bij_pushforward(a: &PushforwardArgs) -> Result<Report, Failure> {
    let w = parse_weights(&a.weights)?;
    let r = pushforward_distribution(a.n, &w)?;
    let mut text = format!("{:<24} {:>16} {:>16}\n", "shape", "boltzmann", "galton-watson");
    let mut csv = String::from("shape,boltzmann,galton_watson\n");
    for s in &r.shapes {
        text.push_str(&format!("{:<24} {:>16} {:>16}\n", s.shape, s.boltzmann, s.galton_watson));
        csv.push_str(&format!("\"{}\",{},{}\n", s.shape, s.boltzmann, s.galton_watson));
    }
    text.push_str(&format!("exact match: {}", if r.exact_match { "yes" } else { "no" }));
    let mut report = Report::new(text, serde_json::to_value(&r).unwrap()).with(Fmt::Csv, csv);
    if !r.exact_match {
        report.failure = Some(Failure::Invariant(format!(
            "pushforward differs from the conditioned law by {}",
            r.max_discrepancy
        )));
    }
    Ok(report)
}

fn read_space(path: &Path) -> Result<FiniteMetricSpace, Failure> {
    Ok(FiniteMetricSpace::from_csv(&std::fs::read_to_string(path)?)?)
}

fn gh_exact_cmd(a: &GhExactArgs, seed: u64) -> Result<Report, Failure> {
    let x = read_space(&a.a)?;
    let y = read_space(&a.b)?;
    let lower = gh_lower_bound(&x, &y, 64, seed);
    let gh = gh_exact_with_budget(&x, &y, a.budget)?;
    Ok(Report::new(
        format!("GH={gh}"),
        json!({ "gh": gh, "lower_bound": lower, "sizes": [x.size(), y.size()] }),
    ))
}

/// A uniform element of ℍₙ: under unit weights the shape is the
/// conditioned Galton-Watson tree and the marks are uniform.
fn uniform_halin(sampler: &ConditionedSampler, seed: u64) -> Result<HalinMap, Failure> {
    let mut rng = seeded_rng(seed);
    Ok(phi_inverse(&sample_marked(sampler, &mut rng))?)
}

fn gh_lemma(a: &LemmaArgs, seed: u64) -> Result<Report, Failure> {
    if a.n == 0 {
        return Err(Failure::Usage("n must be at least 1".into()));
    }
    let maps: Vec<HalinMap> = if a.exhaustive || a.n == 1 {
        enumerate_halin(a.n)?
    } else {
        let mu = OffspringDistribution::from_weights(&Weights::Ones)?.mu;
        let sampler = ConditionedSampler::new(&mu, a.n, Conditioning::Split)?;
        (0..a.samples)
            .map(|i| uniform_halin(&sampler, cell_seed(seed, a.n, i)))
            .collect::<Result<_, _>>()?
    };
    let mut lines = Vec::new();
    let mut reports = Vec::new();
    let (mut holds, mut violated) = (0usize, 0usize);
    for h in &maps {
        let r = check_lemma_bound(h, a.budget)?;
        let gh = match r.gh {
            Some(g) => format!("GH={g}"),
            None => format!("GH<={}", r.upper),
        };
        let verdict = match r.verdict {
            Verdict::Holds => {
                holds += 1;
                "OK"
            }
            Verdict::Violated => {
                violated += 1;
                "VIOLATED"
            }
            Verdict::Inconclusive => "INCONCLUSIVE",
        };
        lines.push(format!("{gh}, bound={}, {verdict}", r.bound));
        reports.push(r);
    }
    if maps.len() > 1 {
        lines.push(format!("{holds}/{} OK", maps.len()));
    }
    let mut report = Report::new(
        lines.join("\n"),
        json!({ "n": a.n, "maps": maps.len(), "holds": holds, "violated": violated, "reports": reports }),
    );
    if violated > 0 {
        report.failure = Some(Failure::Invariant(format!("height bound violated on {violated} maps")));
    }
    Ok(report)
}

fn loop_build(a: &TreeArg) -> Result<Report, Failure> {
    let tree = parse_tree(&a.tree)?;
    let l = loop_graph(&tree);
    let d = l.all_distances();
    let mut csv = String::new();
    for row in &d {
        let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        csv.push_str(&cells.join(","));
        csv.push('\n');
    }
    let diameter = d.iter().flatten().copied().max().unwrap_or(0);
    let text = format!(
        "Loop(T): {} vertices, {} edges, diameter {}",
        l.vertex_count(),
        l.edge_count(),
        diameter
    );
    Ok(Report::new(
        text,
        json!({ "vertices": l.vertex_count(), "edges": l.edges(), "diameter": diameter, "distances": d }),
    )
    .with(Fmt::Csv, csv)
    .with(Fmt::Dot, render_looptree(&tree, render::Format::Dot)?)
    .with(Fmt::Svg, render_looptree(&tree, render::Format::Svg)?))
}

fn loop_stats(a: &TreeArg) -> Result<Report, Failure> {
    let tree = parse_tree(&a.tree)?;
    let s = tree_stats(&tree)?;
    Ok(Report::new(
        format!(
            "vertices {}, height {}, looptree diameter {}, max jump {}, max W {}",
            tree.zeta(),
            s.height,
            s.diam_loop,
            s.max_jump,
            s.max_w
        ),
        serde_json::to_value(s).unwrap(),
    ))
}

/// Parses "a,b,c" or "a,b,...,z"; the ellipsis continues the progression
/// geometrically when `b` is a multiple of `a`, arithmetically otherwise.
fn parse_sizes(s: &str) -> Result<Vec<usize>, Failure> {
    let bad = |m: String| Failure::Usage(format!("--sizes {s:?}: {m}"));
    let parts: Vec<&str> = s.split(',').map(str::trim).filter(|p| !p.is_empty()).collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < parts.len() {
        if parts[i] == "..." {
            let (Some(&a), Some(&b)) = (out.len().checked_sub(2).map(|j| &out[j]), out.last()) else {
                return Err(bad("an ellipsis needs two preceding sizes".into()));
            };
            let end: usize = parts
                .get(i + 1)
                .ok_or_else(|| bad("an ellipsis needs a final size".into()))?
                .parse()
                .map_err(|e| bad(format!("{e}")))?;
            if b <= a || end < b {
                return Err(bad("sizes must increase".into()));
            }
            let mut x: usize = b;
            loop {
                x = if a > 0 && b % a == 0 { x * (b / a) } else { x + (b - a) };
                if x >= end {
                    break;
                }
                out.push(x);
            }
            if x != end {
                return Err(bad(format!("{end} is not on the progression")));
            }
            out.push(end);
            i += 2;
        } else {
            out.push(parts[i].parse().map_err(|e| bad(format!("{e}")))?);
            i += 1;
        }
    }
    if out.is_empty() {
        return Err(bad("no sizes".into()));
    }
    Ok(out)
}

fn exp_config(a: &ExpArgs, seed: u64) -> Result<ScalingRunConfig, Failure> {
    Ok(ScalingRunConfig {
        family: a.law.family()?,
        sizes: parse_sizes(&a.sizes)?,
        samples: a.samples,
        seed,
        halin: a.halin,
        method: a.method.into(),
    })
}

fn exp_scaling(a: &ExpArgs, seed: u64) -> Result<Report, Failure> {
    let cfg = exp_config(a, seed)?;
    let r = scaling_run(&cfg)?;
    let summary = r.summary_json();
    if let Some(p) = &a.summary {
        write_atomic(p, &serde_json::to_string_pretty(&summary).unwrap())?;
    }
    let mut text = format!("{:>8} {:>10} {:>8} {:>10} {:>12}\n", "n", "b_n", "height", "diam_loop", "height/b_n");
    for s in &r.sizes {
        text.push_str(&format!(
            "{:>8} {:>10.2} {:>8} {:>10} {:>12.4}\n",
            s.n, s.b_n, s.height.median, s.diam_loop.median, s.height_over_b_n.median
        ));
    }
    if let Some(reg) = &r.diam_slope {
        text.push_str(&format!(
            "diam slope {:.4} (95% CI {:.4}..{:.4}), 1/alpha = {:.4}\n",
            reg.slope,
            reg.ci_low,
            reg.ci_high,
            cfg.validate()?.alpha().map_or(f64::NAN, |x| 1.0 / x)
        ));
    }
    if let Some(d) = r.height_decay_ratio {
        text.push_str(&format!("height/b_n decay ratio {d:.4}\n"));
    }
    let gaps: usize = r.sizes.iter().map(|s| s.diameter_gap_violations).sum();
    let mut report = Report::new(text, summary).with(Fmt::Csv, r.to_csv());
    if gaps > 0 {
        report.failure = Some(Failure::Invariant(format!(
            "{gaps} samples with |diam H - diam Loop(T)| > 2 Height(T) + 3"
        )));
    }
    Ok(report)
}

fn exp_profile(a: &ExpArgs, seed: u64) -> Result<Report, Failure> {
    let cfg = exp_config(a, seed)?;
    let r = lukasiewicz_profile(&cfg)?;
    let mut text = format!("{:>8} {:>10} {:>14} {:>14}\n", "n", "b_n", "maxW/b_n", "maxjump/b_n");
    for s in &r.sizes {
        text.push_str(&format!(
            "{:>8} {:>10.2} {:>14.4} {:>14.4}\n",
            s.n, s.b_n, s.max_w_over_b_n.median, s.max_jump_over_b_n.median
        ));
    }
    text.push_str(&format!("KS(max jump) between consecutive sizes: {:?}\n", r.ks_max_jump));
    let violations: usize = r.sizes.iter().map(|s| s.violations).sum();
    let mut report = Report::new(text, serde_json::to_value(&r).unwrap());
    if violations > 0 {
        report.failure = Some(Failure::Invariant(format!("{violations} invalid Łukasiewicz paths")));
    }
    Ok(report)
}

fn render_cmd(a: &RenderArgs) -> Result<Report, Failure> {
    let draw = |f: render::Format| -> Result<String, Failure> {
        Ok(if let Some(t) = &a.tree {
            let tree = parse_tree(t)?;
            match a.draw {
                Drawing::Tree => render_tree(&tree, f)?,
                Drawing::Loop => render_looptree(&tree, f)?,
                Drawing::Halin => render_halin(&build_halin(&tree)?, f)?,
            }
        } else if let Some(m) = &a.marked {
            render_halin(&phi_inverse(&m.parse()?)?, f)?
        } else if let Some(p) = &a.map {
            render_halin(&read_map(p)?, f)?
        } else {
            return Err(Failure::Usage("nothing to draw".into()));
        })
    };
    let dot = draw(render::Format::Dot)?;
    let svg = draw(render::Format::Svg)?;
    let mut report = Report::new(dot.clone(), json!({ "dot": dot, "svg": svg }))
        .with(Fmt::Dot, dot)
        .with(Fmt::Svg, svg);
    report.default = Fmt::Dot;
    Ok(report)
}
