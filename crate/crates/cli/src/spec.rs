//! Experiment specifications: the command line, parsed and canonicalized.

use std::path::PathBuf;

use clap::error::{ContextKind, ContextValue, ErrorKind};
use clap::{Args, Parser, Subcommand, ValueEnum};
use growthlab::{FunctionSpec, GroupDescriptor, SubgroupOracle};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// How growth tables are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Breadth-first enumeration of the ambient ball.
    Enumerate,
    /// Direct counting where the oracle shape allows it.
    Count,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DeltaModeArg {
    Exhaustive,
    Random,
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, PartialEq, Args)]
pub struct RunArgs {
    /// Output format; tables default to csv, reports to json.
    #[arg(long, value_enum)]
    pub format: Option<Format>,

    /// Directory for artifacts; stdout when unset.
    #[arg(long, env = "GROWTHLAB_OUT")]
    pub out: Option<PathBuf>,

    /// Worker threads.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..=1024))]
    pub workers: u16,

    /// Cap on elements visited by one enumeration.
    #[arg(long = "budget-elements", default_value_t = 10_000_000, value_parser = clap::value_parser!(u64).range(1..=1_000_000_000))]
    pub budget_elements: u64,
}

fn radius_parser() -> clap::builder::RangedU64ValueParser<usize> {
    clap::builder::RangedU64ValueParser::<usize>::new().range(0..=64)
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct GrowthArgs {
    #[arg(long)]
    pub group: GroupDescriptor,
    #[arg(long = "max-radius", value_parser = radius_parser())]
    pub max_radius: usize,
    #[arg(long, value_enum, default_value_t = Method::Enumerate)]
    pub method: Method,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct RelgrowthArgs {
    #[arg(long)]
    pub group: GroupDescriptor,
    #[arg(long)]
    pub subgroup: String,
    #[arg(long = "max-radius", value_parser = radius_parser())]
    pub max_radius: usize,
    #[arg(long, value_enum, default_value_t = Method::Enumerate)]
    pub method: Method,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct DistortionArgs {
    #[arg(long)]
    pub group: GroupDescriptor,
    /// Subgroup spec; its generators form `Y`.
    #[arg(long)]
    pub subgroup: String,
    #[arg(long = "max-radius", value_parser = radius_parser())]
    pub max_radius: usize,
    /// Cap on `|h|_Y` in the search.
    #[arg(long = "max-depth", default_value_t = 64, value_parser = radius_parser())]
    pub max_depth: usize,
    /// Cap on search-tree nodes.
    #[arg(long = "max-nodes", default_value_t = 200_000_000)]
    pub max_nodes: u64,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct DeltaArgs {
    /// Sample the ball `B(max-radius)` of this group.
    #[arg(long, requires = "max_radius", conflicts_with = "metric_csv")]
    pub group: Option<GroupDescriptor>,
    /// Restrict the sample to a subgroup.
    #[arg(long, requires = "group")]
    pub subgroup: Option<String>,
    #[arg(long = "max-radius", value_parser = radius_parser(), requires = "group")]
    pub max_radius: Option<usize>,
    /// A distance matrix instead of a group ball.
    #[arg(long = "metric-csv")]
    pub metric_csv: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = DeltaModeArg::Exhaustive)]
    pub mode: DeltaModeArg,
    /// Random quadruples (random mode) and equivariance checks.
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct AcylArgs {
    #[arg(long)]
    pub group: GroupDescriptor,
    #[arg(long, default_value = "1")]
    pub x: String,
    #[arg(long)]
    pub y: String,
    #[arg(long, value_parser = clap::value_parser!(u64).range(0..=16))]
    pub epsilon: u64,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct AmbiguityArgs {
    #[arg(long)]
    pub group: GroupDescriptor,
    /// Enumerate pairs inside this subgroup.
    #[arg(long)]
    pub subgroup: Option<String>,
    #[arg(long, required_unless_present = "naive")]
    pub g: Option<String>,
    #[arg(long, required_unless_present = "naive")]
    pub h: Option<String>,
    /// Connector exponent; repeat or comma-separate to sweep.
    #[arg(short = 'n', long = "connector-power", value_delimiter = ',', default_value = "2",
          value_parser = clap::value_parser!(u32).range(1..=64))]
    pub connector_power: Vec<u32>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(0..=32))]
    pub smax: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(0..=32))]
    pub tmax: u64,
    /// Fit the envelope on `t ≤ fit-tmax`.
    #[arg(long = "fit-tmax", default_value_t = 3)]
    pub fit_tmax: u64,
    /// Plain multiplication, no connectors.
    #[arg(long, conflicts_with_all = ["g", "h", "componentwise"])]
    pub naive: bool,
    /// Split `g` and `h` into one kit per free factor.
    #[arg(long)]
    pub componentwise: bool,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct RateArgs {
    /// A growth CSV artifact (`radius,count`).
    #[arg(long, conflicts_with = "group")]
    pub table: Option<PathBuf>,
    #[arg(long, requires = "max_radius")]
    pub group: Option<GroupDescriptor>,
    #[arg(long, requires = "group")]
    pub subgroup: Option<String>,
    #[arg(long = "max-radius", value_parser = radius_parser(), requires = "group")]
    pub max_radius: Option<usize>,
    /// `ε(n)`: const:<x> | affine:<slope>,<intercept> | table:<x0>,<x1>,…
    #[arg(long, default_value = "const:1")]
    pub epsilon: FunctionSpec,
    /// `l(n)`, same syntax; values must be natural numbers.
    #[arg(long, default_value = "const:0")]
    pub shift: FunctionSpec,
    /// Hypothesis threshold `C`.
    #[arg(long, default_value_t = 1)]
    pub threshold: usize,
    /// Growth bound `B` with `f(n) ≤ B^n`.
    #[arg(long)]
    pub bound: Option<f64>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, PartialEq, Subcommand)]
pub enum Command {
    /// Ball sizes of the whole group.
    Growth(GrowthArgs),
    /// Ball sizes of a subgroup in the ambient word metric.
    Relgrowth(RelgrowthArgs),
    /// Subgroup distortion `Δ(n)`.
    Distortion(DistortionArgs),
    /// Four-point hyperbolicity constant of a finite sample.
    Delta(DeltaArgs),
    /// Acylindricity witnesses for a pair of points.
    Acyl(AcylArgs),
    /// Fiber sizes of a concatenation map.
    Ambiguity(AmbiguityArgs),
    /// Growth-rate bracket of a table.
    Rate(RateArgs),
}

/// A parsed, validated experiment.
#[derive(Debug, Clone, PartialEq, Parser)]
#[command(
    name = "growthlab",
    version,
    about = "Growth experiments on free groups and their products"
)]
pub struct ExperimentSpec {
    #[command(subcommand)]
    pub command: Command,
}

impl ExperimentSpec {
    pub fn name(&self) -> &'static str {
        match self.command {
            Command::Growth(_) => "growth",
            Command::Relgrowth(_) => "relgrowth",
            Command::Distortion(_) => "distortion",
            Command::Delta(_) => "delta",
            Command::Acyl(_) => "acyl",
            Command::Ambiguity(_) => "ambiguity",
            Command::Rate(_) => "rate",
        }
    }

    pub fn run_args(&self) -> &RunArgs {
        match &self.command {
            Command::Growth(a) => &a.run,
            Command::Relgrowth(a) => &a.run,
            Command::Distortion(a) => &a.run,
            Command::Delta(a) => &a.run,
            Command::Acyl(a) => &a.run,
            Command::Ambiguity(a) => &a.run,
            Command::Rate(a) => &a.run,
        }
    }

    pub fn run_args_mut(&mut self) -> &mut RunArgs {
        match &mut self.command {
            Command::Growth(a) => &mut a.run,
            Command::Relgrowth(a) => &mut a.run,
            Command::Distortion(a) => &mut a.run,
            Command::Delta(a) => &mut a.run,
            Command::Acyl(a) => &mut a.run,
            Command::Ambiguity(a) => &mut a.run,
            Command::Rate(a) => &mut a.run,
        }
    }

    /// Tables default to CSV, reports to JSON.
    pub fn format(&self) -> Format {
        self.run_args().format.unwrap_or(match self.command {
            Command::Growth(_) | Command::Relgrowth(_) | Command::Distortion(_) => Format::Csv,
            _ => Format::Json,
        })
    }

    /// The canonical command line, every option spelled out.
    pub fn render(&self) -> String {
        self.render_with(true)
    }

    /// The canonical command line without `--workers` and `--out`, which
    /// do not affect results; embedded in every artifact.
    pub fn render_for_artifact(&self) -> String {
        self.render_with(false)
    }

    fn render_with(&self, runtime: bool) -> String {
        let mut t = Tokens(vec![self.name().to_string()]);
        match &self.command {
            Command::Growth(a) => {
                t.opt("--group", &a.group);
                t.opt("--max-radius", a.max_radius);
                t.opt("--method", method_name(a.method));
            }
            Command::Relgrowth(a) => {
                t.opt("--group", &a.group);
                t.opt("--subgroup", &a.subgroup);
                t.opt("--max-radius", a.max_radius);
                t.opt("--method", method_name(a.method));
            }
            Command::Distortion(a) => {
                t.opt("--group", &a.group);
                t.opt("--subgroup", &a.subgroup);
                t.opt("--max-radius", a.max_radius);
                t.opt("--max-depth", a.max_depth);
                t.opt("--max-nodes", a.max_nodes);
            }
            Command::Delta(a) => {
                if let Some(g) = &a.group {
                    t.opt("--group", g);
                }
                if let Some(s) = &a.subgroup {
                    t.opt("--subgroup", s);
                }
                if let Some(r) = a.max_radius {
                    t.opt("--max-radius", r);
                }
                if let Some(p) = &a.metric_csv {
                    t.opt("--metric-csv", p.display());
                }
                t.opt(
                    "--mode",
                    match a.mode {
                        DeltaModeArg::Exhaustive => "exhaustive",
                        DeltaModeArg::Random => "random",
                    },
                );
                t.opt("--trials", a.trials);
                t.opt("--seed", a.seed);
            }
            Command::Acyl(a) => {
                t.opt("--group", &a.group);
                t.opt("--x", &a.x);
                t.opt("--y", &a.y);
                t.opt("--epsilon", a.epsilon);
            }
            Command::Ambiguity(a) => {
                t.opt("--group", &a.group);
                if let Some(s) = &a.subgroup {
                    t.opt("--subgroup", s);
                }
                if a.naive {
                    t.flag("--naive");
                } else {
                    if let Some(g) = &a.g {
                        t.opt("--g", g);
                    }
                    if let Some(h) = &a.h {
                        t.opt("--h", h);
                    }
                    let ns: Vec<String> = a.connector_power.iter().map(|n| n.to_string()).collect();
                    t.opt("--connector-power", ns.join(","));
                    if a.componentwise {
                        t.flag("--componentwise");
                    }
                }
                t.opt("--smax", a.smax);
                t.opt("--tmax", a.tmax);
                t.opt("--fit-tmax", a.fit_tmax);
            }
            Command::Rate(a) => {
                if let Some(p) = &a.table {
                    t.opt("--table", p.display());
                }
                if let Some(g) = &a.group {
                    t.opt("--group", g);
                }
                if let Some(s) = &a.subgroup {
                    t.opt("--subgroup", s);
                }
                if let Some(r) = a.max_radius {
                    t.opt("--max-radius", r);
                }
                t.opt("--epsilon", &a.epsilon);
                t.opt("--shift", &a.shift);
                t.opt("--threshold", a.threshold);
                if let Some(b) = a.bound {
                    t.opt("--bound", b);
                }
            }
        }
        let run = self.run_args();
        if let Some(f) = run.format {
            t.opt(
                "--format",
                match f {
                    Format::Csv => "csv",
                    Format::Json => "json",
                },
            );
        }
        t.opt("--budget-elements", run.budget_elements);
        if runtime {
            t.opt("--workers", run.workers);
            if let Some(o) = &run.out {
                t.opt("--out", o.display());
            }
        }
        t.0.join(" ")
    }
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Enumerate => "enumerate",
        Method::Count => "count",
    }
}

struct Tokens(Vec<String>);

impl Tokens {
    fn opt(&mut self, name: &str, value: impl std::fmt::Display) {
        self.0.push(name.to_string());
        let v = value.to_string();
        self.0
            .push(shlex::try_quote(&v).map(|q| q.into_owned()).unwrap_or(v));
    }

    fn flag(&mut self, name: &str) {
        self.0.push(name.to_string());
    }
}

/// 1-based line and column of byte `offset` in `text`.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

/// Position of `needle` in `text`, preferring an occurrence after `after`.
fn locate(text: &str, needle: &str, after: Option<&str>) -> Option<usize> {
    if needle.is_empty() {
        return None;
    }
    let start = after
        .and_then(|a| text.find(a).map(|i| i + a.len()))
        .unwrap_or(0);
    text[start..]
        .find(needle)
        .map(|i| i + start)
        .or_else(|| text.find(needle))
}

fn parse_error_at(text: &str, offset: Option<usize>, message: String) -> CliError {
    let (line, column) = offset.map_or((1, 1), |o| line_col(text, o));
    CliError::Parse {
        line,
        column,
        message,
    }
}

fn clap_error(text: &str, err: clap::Error) -> CliError {
    let context = |kind| match err.get(kind) {
        Some(ContextValue::String(s)) => Some(s.as_str()),
        _ => None,
    };
    let flag = context(ContextKind::InvalidArg).map(|a| a.split_whitespace().next().unwrap_or(a));
    let offset = match (
        context(ContextKind::InvalidValue),
        context(ContextKind::InvalidSubcommand),
    ) {
        (Some(v), _) if !v.is_empty() => locate(text, v, flag),
        (_, Some(sub)) => locate(text, sub, None),
        _ => flag.and_then(|f| locate(text, f, None)),
    };
    let message = err
        .render()
        .to_string()
        .lines()
        .next()
        .unwrap_or("invalid arguments")
        .trim_start_matches("error: ")
        .to_string();
    parse_error_at(text, offset, message)
}

/// Parses a command line such as
/// `growth --group free:2 --max-radius 10`, with shell quoting.
pub fn parse_spec(text: &str) -> Result<ExperimentSpec, CliError> {
    let words = shlex::split(text)
        .ok_or_else(|| parse_error_at(text, Some(text.len()), "unbalanced quotes".to_string()))?;
    let argv = std::iter::once("growthlab".to_string()).chain(words);
    let spec = ExperimentSpec::try_parse_from(argv).map_err(|e| clap_error(text, e))?;
    canonicalize(spec, text)
}

/// Parses process arguments (`argv[0]` included). Help and version requests
/// come back as the clap error so the caller can print them.
pub fn parse_args<I, T>(args: I) -> Result<ExperimentSpec, Result<clap::Error, CliError>>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let text = args
        .iter()
        .skip(1)
        .map(|a| {
            let s = a.to_string_lossy();
            shlex::try_quote(&s)
                .map(|q| q.into_owned())
                .unwrap_or(s.into_owned())
        })
        .collect::<Vec<_>>()
        .join(" ");
    match ExperimentSpec::try_parse_from(&args) {
        Ok(spec) => canonicalize(spec, &text).map_err(Err),
        Err(e)
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp
                    | ErrorKind::DisplayVersion
                    | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) =>
        {
            Err(Ok(e))
        }
        Err(e) => Err(Err(clap_error(&text, e))),
    }
}

/// Validates the group-dependent strings and rewrites them canonically.
fn canonicalize(mut spec: ExperimentSpec, text: &str) -> Result<ExperimentSpec, CliError> {
    let value_err = |flag: &str, raw: &str, e: growthlab::Error| {
        let base = locate(text, raw, Some(flag));
        let offset = match (&e, base) {
            (growthlab::Error::Parse { column, .. }, Some(b)) => Some(b + column - 1),
            (_, b) => b,
        };
        parse_error_at(text, offset, format!("{flag}: {e}"))
    };
    let subgroup = |flag: &str, raw: &str, g: &GroupDescriptor| -> Result<String, CliError> {
        SubgroupOracle::parse(raw, g)
            .map(|o| o.to_string())
            .map_err(|e| value_err(flag, raw, e))
    };
    let element = |flag: &str, raw: &str, g: &GroupDescriptor| -> Result<String, CliError> {
        g.parse_element(raw)
            .map(|e| e.to_string())
            .map_err(|e| value_err(flag, raw, e))
    };
    match &mut spec.command {
        Command::Growth(_) => {}
        Command::Relgrowth(a) => a.subgroup = subgroup("--subgroup", &a.subgroup, &a.group)?,
        Command::Distortion(a) => a.subgroup = subgroup("--subgroup", &a.subgroup, &a.group)?,
        Command::Delta(a) => {
            if a.group.is_none() && a.metric_csv.is_none() {
                return Err(parse_error_at(
                    text,
                    None,
                    "delta needs --group with --max-radius, or --metric-csv".into(),
                ));
            }
            if let (Some(s), Some(g)) = (&a.subgroup, &a.group) {
                a.subgroup = Some(subgroup("--subgroup", s, g)?);
            }
        }
        Command::Acyl(a) => {
            a.x = element("--x", &a.x, &a.group)?;
            a.y = element("--y", &a.y, &a.group)?;
        }
        Command::Ambiguity(a) => {
            if let Some(s) = &a.subgroup {
                a.subgroup = Some(subgroup("--subgroup", s, &a.group)?);
            }
            if let Some(g) = &a.g {
                a.g = Some(element("--g", g, &a.group)?);
            }
            if let Some(h) = &a.h {
                a.h = Some(element("--h", h, &a.group)?);
            }
            if a.fit_tmax > a.tmax {
                a.fit_tmax = a.tmax;
            }
            if a.naive {
                a.connector_power = vec![2];
            }
        }
        Command::Rate(a) => {
            if a.table.is_none() && a.group.is_none() {
                return Err(parse_error_at(
                    text,
                    None,
                    "rate needs --table, or --group with --max-radius".into(),
                ));
            }
            if let (Some(s), Some(g)) = (&a.subgroup, &a.group) {
                a.subgroup = Some(subgroup("--subgroup", s, g)?);
            }
            if let Some(b) = a.bound {
                if !(b > 0.0 && b.is_finite()) {
                    return Err(parse_error_at(
                        text,
                        locate(text, "--bound", None),
                        "--bound must be positive".into(),
                    ));
                }
            }
        }
    }
    let run = spec.run_args_mut();
    if run.out.as_ref().is_some_and(|p| p.as_os_str().is_empty()) {
        run.out = None;
    }
    Ok(spec)
}
