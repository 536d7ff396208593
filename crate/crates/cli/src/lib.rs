//! Command-line front end: argument parsing and the verbs behind
//! `rigidity-lab`.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use rigidity_core::contexts::{bar_margin, random_placement, trivial_flex_basis};
use rigidity_core::harness::{
    cross_check_reduction, sphere_colour_indifference, verify_theorem, CampaignOptions, TheoremId,
};
use rigidity_core::numeric::{generic_placement, DEFAULT_TOL, DEFAULT_TRIALS, FD_STEP};
use rigidity_core::sparsity::is_sparse;
use rigidity_core::{
    assemble, class_check, decide_rigidity, fd_check, nullspace_basis, numerical_rank, random_construct,
    reduce_fully, BiColouredGraph, Colour, ContextSpec, Error, Placement, SparsityClass,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "rigidity-lab", version, about = "Sparsity certificates and rigidity checks for bi-coloured frameworks")]
pub struct Cli {
    /// Master seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Relative singular-value threshold.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct FrameworkArgs {
    /// Graph file, or `-` for standard input.
    pub graph: PathBuf,
    /// Context name: cylinder, sphere, mixed:<q>, dl-euclid, dl-lq:<q>, separable:<d0>,<d1>.
    #[arg(long)]
    pub context: ContextSpec,
    /// Placement file; a seeded random placement is used otherwise.
    #[arg(long)]
    pub placement: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certify (2,l)-sparsity or membership in a named class.
    Sparsity {
        graph: PathBuf,
        #[arg(long, conflicts_with = "l")]
        class: Option<SparsityClass>,
        #[arg(short, long, default_value_t = 2)]
        l: u8,
    },
    /// Build a random class member by construction moves.
    Construct {
        #[arg(long)]
        class: SparsityClass,
        #[arg(short, long)]
        n: usize,
        #[arg(long)]
        graph_out: Option<PathBuf>,
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Reduce a class member to a base and print the trace.
    Reduce {
        graph: PathBuf,
        #[arg(long)]
        class: SparsityClass,
    },
    /// Numerical rank of the rigidity matrix at one placement.
    Rank {
        #[command(flatten)]
        framework: FrameworkArgs,
        /// Include the labelled matrix.
        #[arg(long)]
        dump: bool,
    },
    /// Infinitesimal flexes at one placement.
    Flex {
        #[command(flatten)]
        framework: FrameworkArgs,
    },
    /// Minimal rigidity by maximum rank over random placements.
    Decide {
        graph: PathBuf,
        #[arg(long)]
        context: ContextSpec,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
    },
    /// Compare analytic bar rows with central differences.
    Fdcheck {
        #[arg(long)]
        context: ContextSpec,
        /// Bar colour: b or r.
        #[arg(long)]
        colour: Colour,
        #[arg(long, default_value_t = 1000)]
        bars: usize,
        #[arg(long, default_value_t = FD_STEP)]
        step: f64,
        #[arg(long, default_value_t = 1e-5)]
        threshold: f64,
    },
    /// Run a verification campaign.
    Verify {
        /// Theorem, named by its context.
        #[arg(long)]
        theorem: TheoremId,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 2)]
        n_min: usize,
        #[arg(long, default_value_t = 10)]
        n_max: usize,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        /// Reduce every sample instead of testing rigidity directly.
        #[arg(long, conflicts_with = "colour_indifference")]
        reduction: bool,
        /// Sphere only: rank must not depend on the colouring.
        #[arg(long)]
        colour_indifference: bool,
    },
}

/// The result of one verb: text for the terminal, JSON for `--json`, and
/// the exit status.
pub struct Outcome {
    pub text: String,
    pub json: Value,
    pub status: i32,
}

impl Outcome {
    fn ok(text: String, json: Value) -> Self {
        Outcome { text, json, status: EXIT_OK }
    }
}

fn read_input(path: &Path) -> Result<String, Error> {
    let mut text = String::new();
    if path == Path::new("-") {
        io::stdin().read_to_string(&mut text).map_err(|e| Error::Parse(format!("stdin: {e}")))?;
    } else {
        text = fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    }
    Ok(text)
}

fn write_output(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn read_graph(path: &Path) -> Result<BiColouredGraph, Error> {
    BiColouredGraph::parse(&read_input(path)?)
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report serialization is infallible")
}

fn placement_for(f: &FrameworkArgs, g: &BiColouredGraph, seed: u64) -> Result<Placement, Error> {
    match &f.placement {
        Some(path) => {
            let (ctx, p) = Placement::parse(&read_input(path)?)?;
            if ctx != f.context {
                return Err(Error::PlacementMismatch(format!("placement is for {ctx}, not {}", f.context)));
            }
            Ok(p)
        }
        None => generic_placement(&f.context, g, seed),
    }
}

fn fmt_values(values: &[f64]) -> String {
    values.iter().map(|s| format!("{s:.6e}")).collect::<Vec<_>>().join(" ")
}

/// Executes a parsed command line.
pub fn execute(cli: &Cli) -> Result<Outcome, Error> {
    let seed = cli.seed;
    let tol = cli.tol;
    match &cli.command {
        Command::Sparsity { graph, class, l } => {
            let g = read_graph(graph)?;
            let (label, report) = match class {
                Some(c) => (c.name(), class_check(&g, c)?),
                None => (format!("(2,{l})-sparse"), is_sparse(&g, *l)?),
            };
            let mut text = format!("{label}: {}\n", report.verdict);
            if let Some(w) = &report.witness {
                text.push_str(&format!("witness: {}\n", serde_json::to_string(w)?));
            }
            Ok(Outcome::ok(text, json!({ "test": label, "verdict": report.verdict, "witness": report.witness })))
        }
        Command::Construct { class, n, graph_out, trace_out } => {
            let (g, trace) = random_construct(class, *n, seed)?;
            if let Some(path) = graph_out {
                write_output(path, &g.to_json())?;
            }
            if let Some(path) = trace_out {
                write_output(path, &trace.to_json())?;
            }
            let text = format!("{}\n{} moves from a base on {} vertices\n", g.to_json(), trace.steps.len(), trace.base.n());
            Ok(Outcome::ok(text, json!({ "graph": g, "trace": trace })))
        }
        Command::Reduce { graph, class } => {
            let g = read_graph(graph)?;
            let trace = reduce_fully(&g, class)?;
            let mut text = format!("base: {}\n", trace.base.to_json());
            for mv in &trace.steps {
                text.push_str(&format!("{}: {}\n", mv.kind(), serde_json::to_string(mv)?));
            }
            Ok(Outcome::ok(text, to_value(&trace)))
        }
        Command::Rank { framework, dump } => {
            let g = read_graph(&framework.graph)?;
            let p = placement_for(framework, &g, seed)?;
            let m = assemble(&framework.context, &g, &p)?;
            let r = numerical_rank(&m.matrix, tol)?;
            let mut text = format!(
                "rank {} of {}x{} (required {})\nsingular values: {}\n",
                r.rank,
                m.matrix.nrows(),
                m.matrix.ncols(),
                framework.context.required_rank(g.n()),
                fmt_values(&r.singular_values)
            );
            let mut report = json!({
                "context": framework.context,
                "rows": m.matrix.nrows(),
                "cols": m.matrix.ncols(),
                "required_rank": framework.context.required_rank(g.n()),
                "rank": r,
            });
            if *dump {
                text.push_str(&m.dump());
                report["matrix"] = Value::String(m.dump());
            }
            Ok(Outcome::ok(text, report))
        }
        Command::Flex { framework } => {
            let g = read_graph(&framework.graph)?;
            let p = placement_for(framework, &g, seed)?;
            let m = assemble(&framework.context, &g, &p)?;
            let kernel = nullspace_basis(&m.matrix, tol)?;
            let trivial = trivial_flex_basis(&framework.context, &p)?.ncols();
            let flexes: Vec<Vec<f64>> = kernel.column_iter().map(|c| c.iter().copied().collect()).collect();
            let text = format!(
                "kernel dimension {} ({} trivial, {} non-trivial)\n",
                kernel.ncols(),
                trivial,
                kernel.ncols().saturating_sub(trivial)
            );
            Ok(Outcome::ok(
                text,
                json!({
                    "context": framework.context,
                    "kernel_dim": kernel.ncols(),
                    "trivial_dim": trivial,
                    "nontrivial_dim": kernel.ncols().saturating_sub(trivial),
                    "flexes": flexes,
                }),
            ))
        }
        Command::Decide { graph, context, trials } => {
            let g = read_graph(graph)?;
            let v = decide_rigidity(context, &g, *trials, seed, tol)?;
            let text = format!(
                "{} (rank {} / required {}, {} edges / Maxwell {}, gap {:.3e})\n",
                v.status,
                v.rank,
                v.required_rank,
                v.edge_count,
                v.maxwell_count,
                v.gap()
            );
            Ok(Outcome::ok(text, to_value(&v)))
        }
        Command::Fdcheck { context, colour, bars, step, threshold } => {
            let report = fd_campaign(context, *colour, *bars, *step, seed)?;
            let passed = report.max_error < *threshold;
            let text = format!(
                "{} {} bars: max relative error {:.3e} over {} bars ({} skipped) -> {}\n",
                context,
                colour.symbol(),
                report.max_error,
                report.checked,
                report.skipped,
                if passed { "pass" } else { "FAIL" }
            );
            let mut value = to_value(&report);
            value["threshold"] = json!(threshold);
            value["passed"] = json!(passed);
            Ok(Outcome { text, json: value, status: if passed { EXIT_OK } else { EXIT_FAILED } })
        }
        Command::Verify { theorem, samples, n_min, n_max, trials, reduction, colour_indifference } => {
            let opts = CampaignOptions { trials: *trials, tol };
            let range = *n_min..=*n_max;
            if *colour_indifference {
                if *theorem != TheoremId::Sphere23 {
                    return Err(Error::InvalidContext("colour indifference applies to the sphere only".into()));
                }
                let r = sphere_colour_indifference(*samples, range, seed, opts)?;
                let text = format!(
                    "sphere colour indifference: {}/{} samples, {} single-edge recolourings -> {}\n",
                    r.pass,
                    r.samples,
                    r.recolourings_checked,
                    if r.passed() { "pass" } else { "FAIL" }
                );
                let status = if r.passed() { EXIT_OK } else { EXIT_FAILED };
                return Ok(Outcome { text, json: to_value(&r), status });
            }
            let r = if *reduction {
                cross_check_reduction(theorem, *samples, range, seed, opts)?
            } else {
                verify_theorem(theorem, *samples, range, seed, opts)?
            };
            let mut text = format!(
                "{}{}: positive {}/{}, negative {}/{}",
                r.theorem,
                if r.supplementary { " (supplementary)" } else { "" },
                r.positive_pass,
                r.positive_samples,
                r.negative_pass,
                r.negative_samples
            );
            if let Some(gap) = r.min_gap {
                text.push_str(&format!(", min gap {gap:.3e}"));
            }
            text.push_str(if r.passed() { " -> pass\n" } else { " -> FAIL\n" });
            for f in &r.failures {
                text.push_str(&format!("  {:?} #{}: {}\n", f.direction, f.index, f.detail));
            }
            let status = if r.passed() { EXIT_OK } else { EXIT_FAILED };
            Ok(Outcome { text, json: to_value(&r), status })
        }
    }
}

#[derive(Debug, Serialize)]
pub struct FdReport {
    pub context: ContextSpec,
    pub colour: Colour,
    pub step: f64,
    pub checked: usize,
    pub skipped: usize,
    pub max_error: f64,
}

/// Finite-difference check of `bars` random bars, each between two joints of
/// a fresh seeded placement.
pub fn fd_campaign(ctx: &ContextSpec, colour: Colour, bars: usize, step: f64, seed: u64) -> Result<FdReport, Error> {
    let mut checked = 0;
    let mut skipped = 0;
    let mut max_error = 0.0f64;
    for i in 0..bars as u64 {
        let p = random_placement(ctx, 2, seed.wrapping_mul(1_000_003).wrapping_add(i))?;
        let (a, b) = (p.point(0), p.point(1));
        if !(bar_margin(ctx, colour, a, b) > 10.0 * step) {
            skipped += 1;
            continue;
        }
        max_error = max_error.max(fd_check(ctx, colour, a, b, step)?);
        checked += 1;
    }
    Ok(FdReport { context: ctx.clone(), colour, step, checked, skipped, max_error })
}

/// Parses `args`, runs the verb, writes to `out`/`err`, and returns the exit
/// status.
pub fn run<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    match execute(&cli) {
        Ok(outcome) => {
            let _ = if cli.json {
                writeln!(out, "{}", serde_json::to_string_pretty(&outcome.json).expect("JSON values serialize"))
            } else {
                write!(out, "{}", outcome.text)
            };
            outcome.status
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn invoke(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("rigidity-lab").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    fn scratch(name: &str, contents: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("rigidity-lab-unit-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join(name);
        fs::write(&path, contents).unwrap();
        path
    }

    const RED_K4: &str = r#"{"n": 4, "edges": [[0,1,"r"],[0,2,"r"],[0,3,"r"],[1,2,"r"],[1,3,"r"],[2,3,"b"]]}"#;

    #[test]
    fn sparsity_reports_a_witness() {
        let g = scratch("k4-sparsity.json", RED_K4);
        let (code, out, _) = invoke(&["--json", "sparsity", "-l", "3", g.to_str().unwrap()]);
        assert_eq!(code, EXIT_OK);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["verdict"], false);
        assert_eq!(v["witness"]["edges"].as_array().unwrap().len(), 6);
        let (_, out, _) = invoke(&["sparsity", "--class", "tight22", g.to_str().unwrap()]);
        assert!(out.ends_with("true\n"), "{out}");
    }

    #[test]
    fn construct_then_reduce_round_trips() {
        let dir = std::env::temp_dir().join(format!("rigidity-lab-unit-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let (graph, trace) = (dir.join("built.json"), dir.join("built-trace.json"));
        let (code, _, err) = invoke(&[
            "--seed", "3", "construct", "--class", "mixed", "-n", "7",
            "--graph-out", graph.to_str().unwrap(), "--trace-out", trace.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_OK, "{err}");
        let g = BiColouredGraph::parse(&fs::read_to_string(&graph).unwrap()).unwrap();
        assert_eq!((g.n(), g.edge_count()), (7, 12));
        let (code, out, _) = invoke(&["--json", "reduce", "--class", "mixed", graph.to_str().unwrap()]);
        assert_eq!(code, EXIT_OK);
        let t = rigidity_core::ConstructionTrace::parse(&out).unwrap();
        assert_eq!(t.replay().unwrap(), g);
    }

    #[test]
    fn rank_and_flex_agree() {
        let g = scratch("k4-rank.json", RED_K4);
        let path = g.to_str().unwrap();
        let (_, out, _) = invoke(&["--json", "rank", "--context", "mixed:3", path]);
        let rank: Value = serde_json::from_str(&out).unwrap();
        let (_, out, _) = invoke(&["--json", "flex", "--context", "mixed:3", path]);
        let flex: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(rank["rank"]["rank"], 6);
        assert_eq!(flex["kernel_dim"], 2);
        assert_eq!(flex["nontrivial_dim"], 0);
        let (_, out, _) = invoke(&["rank", "--context", "mixed:3", "--dump", path]);
        assert!(out.contains("bar(0,1,r)"), "{out}");
    }

    #[test]
    fn decide_uses_the_placement_free_path() {
        let g = scratch("k4-decide.json", RED_K4);
        let (code, out, _) = invoke(&["decide", "--context", "mixed:3", g.to_str().unwrap()]);
        assert_eq!(code, EXIT_OK);
        assert!(out.starts_with("MINIMALLY_RIGID"), "{out}");
    }

    #[test]
    fn placement_context_must_match() {
        let g = scratch("k4-mismatch.json", RED_K4);
        let p = random_placement(&ContextSpec::Sphere, 4, 1).unwrap();
        let pf = scratch("k4-sphere-placement.json", &p.to_json(&ContextSpec::Sphere));
        let (code, _, err) =
            invoke(&["rank", "--context", "cylinder", "--placement", pf.to_str().unwrap(), g.to_str().unwrap()]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("sphere"), "{err}");
    }

    #[test]
    fn fdcheck_threshold_sets_the_status() {
        let (code, out, _) = invoke(&["fdcheck", "--context", "cylinder", "--colour", "r", "--bars", "50"]);
        assert_eq!(code, EXIT_OK, "{out}");
        let (code, _, _) =
            invoke(&["fdcheck", "--context", "cylinder", "--colour", "r", "--bars", "50", "--threshold", "0"]);
        assert_eq!(code, EXIT_FAILED);
    }

    #[test]
    fn verify_small_campaigns() {
        let (code, out, _) = invoke(&["verify", "--theorem", "mixed:3", "--samples", "8", "--n-max", "7"]);
        assert_eq!(code, EXIT_OK, "{out}");
        assert!(out.contains("positive 8/8, negative 8/8"), "{out}");
        let (code, _, err) =
            invoke(&["verify", "--theorem", "cylinder", "--samples", "2", "--colour-indifference"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("sphere"));
    }

    #[test]
    fn usage_errors_exit_with_two() {
        assert_eq!(invoke(&["rank"]).0, EXIT_USAGE);
        assert_eq!(invoke(&["decide", "--context", "mixed:2", "missing.json"]).0, EXIT_USAGE);
        assert_eq!(invoke(&["sparsity", "/nonexistent/graph.json"]).0, EXIT_USAGE);
        assert_eq!(invoke(&["--help"]).0, EXIT_OK);
    }
}
