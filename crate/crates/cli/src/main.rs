use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use metric_distortion::fmt::sig;
use metric_distortion::lab::{
    evaluate, generate_lower_bound, rule3_counterexample, DistortionReport, Exactness, LowerBoundKind,
};
use metric_distortion::rules::{bound_value, CandidateCount, RuleId};
use metric_distortion::search::{adversarial_search, verify_suite, SearchConfig, SpaceChoice, Suite};
use metric_distortion::tournament::majority_graph;
use metric_distortion::MetricInstance;

mod svg;

#[derive(Parser)]
#[command(name = "mdvote", version, about = "Metric-distortion voting with preference strengths")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a rule on an instance file and report its distortion.
    Evaluate {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        rule: RuleArgs,
        /// Print the report as csv or json instead of a table.
        #[arg(long)]
        format: Option<Format>,
        /// Also write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a worst-case instance file.
    Lowerbound {
        #[arg(long)]
        kind: Kind,
        /// Threshold for `smallest`, `largest` and `rule3`.
        #[arg(long)]
        tau: Option<f64>,
        /// Adjacent thresholds `a,b` for `pair`.
        #[arg(long, value_delimiter = ',')]
        taus: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1e-6)]
        epsilon: f64,
        /// Voters per group.
        #[arg(long, default_value_t = 1)]
        n: usize,
        /// Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate a rule's distortion bound as its threshold varies.
    Curve {
        /// rule1, rule2, rule3, rule4 (single threshold) or rule5.
        #[arg(long)]
        rule: String,
        /// Threshold range `lo,hi`.
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 10.0])]
        range: Vec<f64>,
        #[arg(long, default_value_t = 181)]
        steps: usize,
        #[arg(long, default_value_t = 2)]
        candidates: usize,
        #[arg(long, default_value = "csv")]
        format: Format,
        /// Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search for the worst two-candidate instance for a rule.
    Search {
        #[command(flatten)]
        rule: RuleArgs,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Random restarts of the hill-climbing phase.
        #[arg(long, default_value_t = 2000)]
        instances: usize,
        #[arg(long, default_value_t = 8)]
        voters_max: usize,
        #[arg(long, default_value = "line")]
        space: Space,
        #[arg(long, default_value_t = 400)]
        grid: usize,
        /// Write the worst instance found here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a seeded verification suite; exits 1 if any check fails.
    Verify {
        /// bounds, lambda, condition1, tradeoff, lowerbounds or all.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 20_240_611)]
        seed: u64,
        /// Write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RuleArgs {
    #[arg(long)]
    rule: String,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    taus: Option<Vec<f64>>,
}

impl RuleArgs {
    fn parse(&self) -> Result<RuleId> {
        Ok(RuleId::parse(&self.rule, self.tau, self.taus.as_deref())?)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Svg,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum Kind {
    ExactSqrt2,
    Smallest,
    Largest,
    Pair,
    Rule3,
}

#[derive(Clone, Copy, ValueEnum)]
enum Space {
    Line,
    Euclidean2d,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Evaluate { instance, rule, format, out } => {
            let rule = rule.parse()?;
            let text = fs::read_to_string(&instance).with_context(|| format!("reading {}", instance.display()))?;
            let inst = MetricInstance::from_json(&text).with_context(|| format!("in {}", instance.display()))?;
            let report = evaluate(&inst, &rule)?;
            let stem = instance.file_stem().and_then(|s| s.to_str()).unwrap_or("instance");
            let shown = match format {
                None => evaluate_table(&inst, &rule, &report)?,
                Some(Format::Json) => report.to_json() + "\n",
                Some(Format::Csv) => format!("{}\n{}\n", DistortionReport::CSV_HEADER, report.to_csv_line(stem)),
                Some(Format::Svg) => bail!("evaluate supports --format csv or json"),
            };
            print!("{shown}");
            if let Some(path) = out {
                write_atomic(&path, &(report.to_json() + "\n"))?;
            }
        }
        Command::Lowerbound { kind, tau, taus, epsilon, n, out } => {
            let need_tau = || tau.context("this kind requires --tau");
            let inst = match kind {
                Kind::ExactSqrt2 => generate_lower_bound(LowerBoundKind::ExactSqrt2, epsilon, n)?,
                Kind::Smallest => generate_lower_bound(LowerBoundKind::Smallest(need_tau()?), epsilon, n)?,
                Kind::Largest => generate_lower_bound(LowerBoundKind::Largest(need_tau()?), epsilon, n)?,
                Kind::Pair => match taus.as_deref() {
                    Some(&[a, b]) => generate_lower_bound(LowerBoundKind::Pair(a, b), epsilon, n)?,
                    _ => bail!("pair requires --taus a,b"),
                },
                Kind::Rule3 => rule3_counterexample(need_tau()?, epsilon)?,
            };
            emit(out.as_deref(), &(inst.to_json() + "\n"))?;
        }
        Command::Curve { rule, range, steps, candidates, format, out } => {
            let &[lo, hi] = range.as_slice() else {
                bail!("--range takes two values `lo,hi`");
            };
            let text = curve(&rule, lo, hi, steps, candidates, format)?;
            emit(out.as_deref(), &text)?;
        }
        Command::Search { rule, seed, instances, voters_max, space, grid, out } => {
            let rule = rule.parse()?;
            let cfg = SearchConfig {
                rng_seed: seed,
                n_instances: instances,
                voters_max,
                space_kind: match space {
                    Space::Line => SpaceChoice::Line,
                    Space::Euclidean2d => SpaceChoice::Euclidean2d,
                },
                grid_resolution: grid,
                tau_grid: Vec::new(),
            };
            let found = adversarial_search(&rule, &cfg)?;
            println!("rule       {rule}");
            println!("achieved   {}", sig(found.distortion));
            println!("bound      {}", sig(found.bound));
            println!("winner     {}", found.winner);
            println!("voters     {}", found.instance.voters().len());
            println!("evaluated  {}", found.evaluated);
            if let Some(path) = out {
                write_atomic(&path, &(found.instance.to_json() + "\n"))?;
            }
        }
        Command::Verify { suite, seed, out } => {
            let suite: Suite = suite.parse()?;
            let report = verify_suite(suite, seed);
            print!("{}", report.to_table());
            if let Some(path) = out {
                write_atomic(&path, &(report.to_json() + "\n"))?;
            }
            if !report.passed() {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn evaluate_table(inst: &MetricInstance, rule: &RuleId, r: &DistortionReport) -> Result<String> {
    let mut s = String::new();
    writeln!(s, "rule       {rule}")?;
    writeln!(s, "winner     {}", r.winner)?;
    let width = r.social_costs.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max(9);
    writeln!(s, "\n{:<width$}  social cost", "candidate")?;
    for (name, cost) in &r.social_costs {
        writeln!(s, "{name:<width$}  {}", sig(*cost))?;
    }
    writeln!(s)?;
    writeln!(s, "best       {}", r.best)?;
    writeln!(s, "delta      {}", sig(r.delta))?;
    writeln!(s, "rho        {} ({})", sig(r.rho), exactness(&r.ideal_exactness))?;
    writeln!(s, "bound      {}", sig(r.bound))?;
    writeln!(s, "margin     {}", sig(r.margin))?;
    writeln!(s, "rho bound  {}", sig(r.rho_bound))?;
    if r.degenerate {
        writeln!(s, "note       best candidate has zero cost")?;
    }
    if let Some(unc) = &r.uncovered_set {
        let g = majority_graph(inst, rule)?;
        writeln!(s, "uncovered  {}", unc.join(","))?;
        writeln!(s, "copeland   {}", g.names()[g.copeland_winner()])?;
    }
    Ok(s)
}

fn exactness(e: &Exactness) -> String {
    match e {
        Exactness::Exact => "exact".into(),
        Exactness::Iterative { tolerance, iterations, converged } => format!(
            "iterative, tolerance {}, {iterations} iterations{}",
            sig(*tolerance),
            if *converged { "" } else { ", not converged" }
        ),
        Exactness::RestrictedToNamedPoints => "restricted to named points".into(),
    }
}

fn curve(rule: &str, lo: f64, hi: f64, steps: usize, candidates: usize, format: Format) -> Result<String> {
    if !(lo.is_finite() && hi.is_finite() && lo >= 1.0 && hi > lo) {
        bail!("--range needs 1 <= lo < hi, got {lo},{hi}");
    }
    if steps < 2 {
        bail!("--steps must be at least 2");
    }
    if candidates < 2 {
        bail!("--candidates must be at least 2");
    }
    let count = CandidateCount::of(candidates);
    let mut points = Vec::with_capacity(steps);
    for i in 0..steps {
        let tau = if i + 1 == steps { hi } else { lo + (hi - lo) * i as f64 / (steps - 1) as f64 };
        let id = RuleId::parse(rule, Some(tau), None).with_context(|| format!("at tau = {}", sig(tau)))?;
        points.push((tau, bound_value(&id, count)?));
    }
    Ok(match format {
        Format::Csv => {
            let mut s = String::from("tau,bound\n");
            for (t, b) in &points {
                writeln!(s, "{},{}", sig(*t), sig(*b))?;
            }
            s
        }
        Format::Svg => {
            let title = format!("{rule}, {} candidates", if candidates == 2 { "2" } else { ">=3" });
            svg::line_plot(&title, "tau", "distortion bound", &points)
        }
        Format::Json => bail!("curve supports --format csv or svg"),
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_atomic(path, text),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

/// Writes through a sibling temp file and a rename so readers never see a
/// partial file.
fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let name = path.file_name().with_context(|| format!("{} is not a file path", path.display()))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".{}.tmp", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, text).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming onto {}", path.display()))?;
    Ok(())
}
