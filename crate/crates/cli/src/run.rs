//! Executes a spec and renders its artifacts.

use std::path::Path;

use growthlab::cayley::{
    self, distortion_table, growth_by_counting, growth_sequence, relative_ball,
};
use growthlab::concat::{measure_ambiguity, AmbiguityReport, Concatenation};
use growthlab::hyperbolic::{
    acylindricity_witnesses, check_equivariance, estimate_delta, DeltaMode,
};
use growthlab::rate::{check_hypothesis, fekete_lower_bound};
use growthlab::{
    Budget, ConnectorKit, Element, FiniteMetric, GroupDescriptor, GrowthTable, RateHypothesis,
    SubgroupOracle,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{CliError, EXIT_VIOLATION};
use crate::spec::{
    AcylArgs, AmbiguityArgs, Command, DeltaArgs, DeltaModeArg, DistortionArgs, ExperimentSpec,
    Format, GrowthArgs, Method, RateArgs, RelgrowthArgs,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// One output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub file_name: String,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub artifacts: Vec<Artifact>,
    /// 0, or 3 when the run detected a violated hypothesis or bound.
    pub exit_code: i32,
}

struct Ctx<'a> {
    spec: &'a ExperimentSpec,
    format: Format,
    spec_line: String,
}

impl Ctx<'_> {
    fn budget(&self) -> Budget {
        Budget::with_max_elements(self.spec.run_args().budget_elements as usize)
    }

    fn header(&self) -> String {
        format!("# growthlab {VERSION}\n# spec: {}\n", self.spec_line)
    }

    fn csv(&self, name: &str, body: &str) -> Artifact {
        Artifact {
            file_name: format!("{name}.csv"),
            contents: format!("{}{body}", self.header()),
        }
    }

    fn json(&self, name: &str, result: impl Serialize) -> Artifact {
        #[derive(Serialize)]
        struct Doc<'a, T> {
            tool: &'a str,
            version: &'a str,
            spec: &'a str,
            result: T,
        }
        let doc = Doc {
            tool: "growthlab",
            version: VERSION,
            spec: &self.spec_line,
            result,
        };
        Artifact {
            file_name: format!("{name}.json"),
            contents: format!(
                "{}\n",
                serde_json::to_string_pretty(&doc).expect("artifact serializes")
            ),
        }
    }

    /// `csv_body` is only evaluated for CSV output.
    fn emit(
        &self,
        name: &str,
        result: impl Serialize,
        csv_body: impl FnOnce() -> String,
    ) -> Artifact {
        match self.format {
            Format::Csv => self.csv(name, &csv_body()),
            Format::Json => self.json(name, result),
        }
    }
}

/// Runs the spec on a pool of `--workers` threads.
pub fn run(spec: &ExperimentSpec) -> Result<RunOutput, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.run_args().workers as usize)
        .build()?;
    pool.install(|| run_here(spec))
}

/// Runs the spec on the current rayon pool.
pub fn run_here(spec: &ExperimentSpec) -> Result<RunOutput, CliError> {
    let ctx = Ctx {
        spec,
        format: spec.format(),
        spec_line: spec.render_for_artifact(),
    };
    match &spec.command {
        Command::Growth(a) => growth(&ctx, a),
        Command::Relgrowth(a) => relgrowth(&ctx, a),
        Command::Distortion(a) => distortion(&ctx, a),
        Command::Delta(a) => delta(&ctx, a),
        Command::Acyl(a) => acyl(&ctx, a),
        Command::Ambiguity(a) => ambiguity(&ctx, a),
        Command::Rate(a) => rate(&ctx, a),
    }
}

/// Writes artifacts into `dir`, creating it if needed.
pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<String>, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io {
        path: dir.display().to_string(),
        source: e,
    })?;
    let mut written = Vec::new();
    for a in artifacts {
        let path = dir.join(&a.file_name);
        std::fs::write(&path, &a.contents).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        written.push(path.display().to_string());
    }
    Ok(written)
}

fn ok(artifacts: Vec<Artifact>) -> RunOutput {
    RunOutput {
        artifacts,
        exit_code: 0,
    }
}

fn table_output(ctx: &Ctx, name: &str, table: &GrowthTable) -> Artifact {
    ctx.emit(name, table, || {
        let mut body = String::new();
        if table.unknown > 0 {
            body.push_str(&format!("# unknown-membership: {}\n", table.unknown));
        }
        body.push_str(&table.to_csv());
        body
    })
}

/// On a budget error, returns the partial table as an artifact.
fn budget_failure(ctx: &Ctx, name: &str, e: growthlab::Error) -> CliError {
    match &e {
        growthlab::Error::BudgetExceeded { partial, .. } => {
            let table = GrowthTable::from_counts(partial.clone());
            let artifact = table_output(ctx, &format!("{name}.partial"), &table);
            CliError::Budget {
                source: e,
                partial: vec![artifact],
            }
        }
        _ => CliError::Core(e),
    }
}

fn growth(ctx: &Ctx, a: &GrowthArgs) -> Result<RunOutput, CliError> {
    let table = match a.method {
        Method::Enumerate => growth_sequence(&a.group, None, a.max_radius, ctx.budget()),
        Method::Count => growth_by_counting(&a.group, None, a.max_radius),
    }
    .map_err(|e| budget_failure(ctx, "growth", e))?;
    let violated = table
        .milnor_violations
        .as_ref()
        .is_some_and(|v| !v.is_empty());
    Ok(RunOutput {
        artifacts: vec![table_output(ctx, "growth", &table)],
        exit_code: if violated { EXIT_VIOLATION } else { 0 },
    })
}

fn relgrowth(ctx: &Ctx, a: &RelgrowthArgs) -> Result<RunOutput, CliError> {
    let oracle = SubgroupOracle::parse(&a.subgroup, &a.group)?;
    let table = match a.method {
        Method::Enumerate => growth_sequence(&a.group, Some(&oracle), a.max_radius, ctx.budget()),
        Method::Count => growth_by_counting(&a.group, Some(&oracle), a.max_radius),
    }
    .map_err(|e| budget_failure(ctx, "relgrowth", e))?;
    Ok(ok(vec![table_output(ctx, "relgrowth", &table)]))
}

fn distortion(ctx: &Ctx, a: &DistortionArgs) -> Result<RunOutput, CliError> {
    let oracle = SubgroupOracle::parse(&a.subgroup, &a.group)?;
    let budget = Budget {
        max_depth: a.max_depth,
        max_search_nodes: a.max_nodes,
        ..ctx.budget()
    };
    let table = distortion_table(
        &a.group,
        oracle.generators(),
        Some(&oracle),
        a.max_radius,
        budget,
    )?;
    #[derive(Serialize)]
    struct Out<'a> {
        distortion: &'a [usize],
    }
    let artifact = ctx.emit("distortion", Out { distortion: &table }, || {
        let mut s = String::from("radius,distortion\n");
        for (r, d) in table.iter().enumerate() {
            s.push_str(&format!("{r},{d}\n"));
        }
        s
    });
    Ok(ok(vec![artifact]))
}

/// Reads a square distance matrix. A first row that is not all integers is
/// taken as point labels.
pub fn read_metric_csv(path: &Path) -> Result<FiniteMetric, CliError> {
    let io = |e: std::io::Error| CliError::Io {
        path: path.display().to_string(),
        source: e,
    };
    let text = std::fs::read_to_string(path).map_err(io)?;
    parse_metric_csv(&text)
}

pub fn parse_metric_csv(text: &str) -> Result<FiniteMetric, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<String>> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| CliError::Input(format!("metric csv: {e}")))?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    let numeric = |r: &[String]| r.iter().all(|c| c.parse::<u64>().is_ok());
    let labels = match rows.first() {
        Some(r) if !numeric(r) => {
            let r = rows.remove(0);
            Some(r)
        }
        _ => None,
    };
    let mut matrix = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        let parsed: Result<Vec<u64>, _> = r.iter().map(|c| c.parse::<u64>()).collect();
        matrix.push(parsed.map_err(|_| {
            CliError::Input(format!("metric csv: row {} has a non-integer entry", i + 1))
        })?);
    }
    let labels = labels.unwrap_or_else(|| (0..matrix.len()).map(|i| format!("p{i}")).collect());
    Ok(FiniteMetric::from_matrix(labels, matrix)?)
}

fn delta(ctx: &Ctx, a: &DeltaArgs) -> Result<RunOutput, CliError> {
    let mode = match a.mode {
        DeltaModeArg::Exhaustive => DeltaMode::Exhaustive,
        DeltaModeArg::Random => DeltaMode::Random {
            trials: a.trials,
            seed: a.seed,
        },
    };
    let (metric, points) = match (&a.metric_csv, &a.group) {
        (Some(path), _) => (read_metric_csv(path)?, None),
        (None, Some(g)) => {
            let radius = a.max_radius.unwrap_or(0);
            let ball = match &a.subgroup {
                Some(s) => relative_ball(g, &SubgroupOracle::parse(s, g)?, radius, ctx.budget())?,
                None => cayley::enumerate_ball(g, radius, ctx.budget())?,
            };
            (
                FiniteMetric::from_elements(g, &ball.elements)?,
                Some(ball.elements),
            )
        }
        (None, None) => return Err(CliError::Input("no sample".into())),
    };
    let estimate = estimate_delta(&metric, mode)?;
    let witness: Option<Vec<&str>> = estimate
        .witness
        .map(|q| q.iter().map(|&i| metric.labels()[i].as_str()).collect());

    // Equivariance on random quadruples of the sample.
    let equivariance = match &points {
        Some(pts) if !pts.is_empty() => {
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            let mut failures = 0u64;
            for _ in 0..a.trials {
                let pick = |rng: &mut ChaCha8Rng| pts[rng.gen_range(0..pts.len())].clone();
                let (h, x, y, z) = (
                    pick(&mut rng),
                    pick(&mut rng),
                    pick(&mut rng),
                    pick(&mut rng),
                );
                if !check_equivariance(&h, &x, &y, &z)? {
                    failures += 1;
                }
            }
            Some(json!({ "checked": a.trials, "failures": failures }))
        }
        _ => None,
    };
    let result = json!({
        "points": metric.len(),
        "delta": estimate.delta,
        "witness": witness,
        "quadruples": estimate.quadruples as u64,
        "equivariance": equivariance,
    });
    let artifact = ctx.emit("delta", &result, || {
        let mut s = String::from("points,quadruples,delta,witness\n");
        s.push_str(&format!(
            "{},{},{},{}\n",
            metric.len(),
            estimate.quadruples,
            estimate.delta,
            witness.map(|w| w.join(" ")).unwrap_or_default()
        ));
        s
    });
    let failed = equivariance
        .as_ref()
        .is_some_and(|e| e["failures"].as_u64() != Some(0));
    Ok(RunOutput {
        artifacts: vec![artifact],
        exit_code: if failed { EXIT_VIOLATION } else { 0 },
    })
}

fn acyl(ctx: &Ctx, a: &AcylArgs) -> Result<RunOutput, CliError> {
    let x = a.group.parse_element(&a.x)?;
    let y = a.group.parse_element(&a.y)?;
    let witnesses = acylindricity_witnesses(&a.group, &x, &y, a.epsilon as usize)?;
    let result = json!({
        "distance": x.distance(&y),
        "count": witnesses.len(),
        "witnesses": witnesses,
    });
    let artifact = ctx.emit("acyl", &result, || {
        let mut s = String::from("witness\n");
        for w in &witnesses {
            s.push_str(&format!("{w}\n"));
        }
        s
    });
    Ok(ok(vec![artifact]))
}

fn build_concat(a: &AmbiguityArgs, n: u32) -> Result<Concatenation, CliError> {
    if a.naive {
        return Ok(Concatenation::Naive);
    }
    let d = &a.group;
    let (g, h) = match (&a.g, &a.h) {
        (Some(g), Some(h)) => (d.parse_element(g)?, d.parse_element(h)?),
        _ => return Err(CliError::Input("--g and --h are required".into())),
    };
    if !a.componentwise {
        return Ok(Concatenation::Kit(ConnectorKit::new(d, g, h, n)?));
    }
    let mut kits = Vec::with_capacity(d.num_factors());
    for i in 0..d.num_factors() {
        let factor = d.restrict(&[i])?;
        let gi = Element::from_word(g.component(i).clone());
        let hi = Element::from_word(h.component(i).clone());
        kits.push(ConnectorKit::new(&factor, gi, hi, n)?);
    }
    Ok(Concatenation::Product(kits))
}

fn ambiguity(ctx: &Ctx, a: &AmbiguityArgs) -> Result<RunOutput, CliError> {
    let oracle = a
        .subgroup
        .as_deref()
        .map(|s| SubgroupOracle::parse(s, &a.group))
        .transpose()?;
    let sweep = a.connector_power.len() > 1;
    let mut artifacts = Vec::new();
    let mut reports: Vec<(u32, AmbiguityReport)> = Vec::new();
    for &n in &a.connector_power {
        let concat = build_concat(a, n)?;
        let report = match measure_ambiguity(
            &concat,
            &a.group,
            oracle.as_ref(),
            a.smax as usize,
            a.tmax as usize,
            a.fit_tmax as usize,
            ctx.budget(),
        ) {
            Ok(r) => r,
            Err(growthlab::Error::AmbiguityBudgetExceeded { limit, partial }) => {
                let name = format!("ambiguity{}.partial", suffix(sweep, n));
                let art = ctx.emit(&name, &*partial, || partial.to_csv());
                return Err(CliError::Budget {
                    source: growthlab::Error::AmbiguityBudgetExceeded { limit, partial },
                    partial: vec![art],
                });
            }
            Err(e) => return Err(e.into()),
        };
        if ctx.format == Format::Csv {
            let name = format!("ambiguity{}", suffix(sweep, n));
            artifacts.push(ctx.csv(&name, &report.to_csv()));
        }
        reports.push((n, report));
    }
    let violated = reports
        .iter()
        .any(|(_, r)| !r.violations.is_empty() || r.containment_failures > 0);
    if ctx.format == Format::Json {
        let result: Value = if sweep {
            Value::Array(
                reports
                    .iter()
                    .map(|(n, r)| json!({ "n": n, "report": r }))
                    .collect(),
            )
        } else {
            serde_json::to_value(&reports[0].1).expect("report serializes")
        };
        artifacts.push(ctx.json("ambiguity", result));
    }
    Ok(RunOutput {
        artifacts,
        exit_code: if violated { EXIT_VIOLATION } else { 0 },
    })
}

fn suffix(sweep: bool, n: u32) -> String {
    if sweep {
        format!("_n{n}")
    } else {
        String::new()
    }
}

/// Reads a `radius,count` table, skipping `#` comment lines. Radii must run
/// 0, 1, 2, … in order.
pub fn parse_growth_csv(text: &str) -> Result<GrowthTable, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| CliError::Input(format!("growth csv: {e}")))?
        .clone();
    if headers.len() < 2 || &headers[0] != "radius" || &headers[1] != "count" {
        return Err(CliError::Input(
            "growth csv: expected a `radius,count` header".into(),
        ));
    }
    let mut counts = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Input(format!("growth csv: {e}")))?;
        let radius: usize = rec[0]
            .parse()
            .map_err(|_| CliError::Input(format!("growth csv: bad radius on row {}", i + 1)))?;
        if radius != i {
            return Err(CliError::Input(format!(
                "growth csv: expected radius {i}, found {radius}"
            )));
        }
        counts.push(
            rec[1]
                .parse()
                .map_err(|_| CliError::Input(format!("growth csv: bad count on row {}", i + 1)))?,
        );
    }
    if counts.is_empty() {
        return Err(CliError::Input("growth csv: no rows".into()));
    }
    Ok(GrowthTable::from_counts(counts))
}

fn rate(ctx: &Ctx, a: &RateArgs) -> Result<RunOutput, CliError> {
    let table = match (&a.table, &a.group) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
                path: path.display().to_string(),
                source: e,
            })?;
            parse_growth_csv(&text)?
        }
        (None, Some(g)) => {
            let oracle = a
                .subgroup
                .as_deref()
                .map(|s| SubgroupOracle::parse(s, g))
                .transpose()?;
            let radius = a.max_radius.unwrap_or(0);
            exact_growth(g, oracle.as_ref(), radius, ctx.budget())
                .map_err(|e| budget_failure(ctx, "rate", e))?
        }
        (None, None) => return Err(CliError::Input("no growth table".into())),
    };
    let hyp = RateHypothesis {
        epsilon: a.epsilon.clone(),
        shift: a.shift.clone(),
        threshold: a.threshold,
        growth_bound: a.bound,
    };
    let estimate = fekete_lower_bound(&table, &hyp)?;
    let check = check_hypothesis(&table, &hyp).ok();
    let hypothesis_ok = estimate.hypothesis_ok;
    let result = json!({
        "lower": estimate.lower,
        "upper": estimate.upper,
        "witness_s": estimate.witness_s,
        "hypothesis_ok": hypothesis_ok,
        "violations": estimate.violations,
        "bound_violations": check.map(|c| c.bound_violations).unwrap_or_default(),
        "hypothesis": hyp,
        "counts": table.counts,
        "roots": estimate.roots,
        "walk": estimate.walk,
    });
    let artifact = ctx.emit("rate", &result, || {
        let mut s = format!(
            "# lower: {}\n# upper: {}\n# hypothesis_ok: {hypothesis_ok}\nn,count,root,walk_root\n",
            estimate.lower, estimate.upper
        );
        for (i, &c) in table.counts.iter().enumerate() {
            let root = estimate
                .roots
                .iter()
                .find(|r| r.0 == i)
                .map(|r| r.1.to_string())
                .unwrap_or_default();
            let walk = estimate
                .walk
                .iter()
                .find(|w| w.n == i)
                .map(|w| w.implied_root.to_string())
                .unwrap_or_default();
            s.push_str(&format!("{i},{c},{root},{walk}\n"));
        }
        s
    });
    Ok(RunOutput {
        artifacts: vec![artifact],
        exit_code: if hypothesis_ok { 0 } else { EXIT_VIOLATION },
    })
}

/// Growth table of `oracle` (or the whole group) by counting when the oracle
/// shape allows it, by enumeration otherwise.
pub fn exact_growth(
    group: &GroupDescriptor,
    oracle: Option<&SubgroupOracle>,
    radius: usize,
    budget: Budget,
) -> Result<GrowthTable, growthlab::Error> {
    match growth_by_counting(group, oracle, radius) {
        Err(growthlab::Error::Unsupported(_)) => growth_sequence(group, oracle, radius, budget),
        other => other,
    }
}
