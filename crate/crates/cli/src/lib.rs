//! Config-driven experiment runner.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use secbid::information::{check_dependence, default_dependence_grids, make_model, DependenceProperty};
use secbid::plot::{density_slices, equilibrium_payoffs, family_payoffs, Table};
use secbid::revenue::{rank_families, RankOptions, RevenueReport, SCHEMA_VERSION};
use secbid::securities::{check_steepness, steepness_value_grid, SteepnessMode};
use secbid::theory::{example1_mlr_witness, mlr_trials, ohlin_trials, OhlinPart};
use secbid::{
    best_response_gain, bid_curve, AuctionInstance, BidCurve, Grid, InformationModel, LinearTilt, ModelSpec,
    SecurityFamily, UtilityFunction,
};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub mod config;

pub use config::ExperimentConfig;

/// Largest best-response gain accepted as equilibrium.
pub const GAIN_TOL: f64 = 1e-6;
/// Accepted distance from the published Example 1 revenues.
pub const REVENUE_TOL: f64 = 5e-4;
/// Published Example 1 revenues at I = 0.2.
pub const EXAMPLE1_REVENUES: [(&str, f64); 4] = [
    ("cash", 0.3062),
    ("debt", 0.3123),
    ("equity", 0.3099),
    ("call_option", 0.3078),
];

#[derive(Debug, Parser)]
#[command(
    name = "secbid",
    version,
    about = "Experiments on second-price auctions with security bids"
)]
pub struct Cli {
    /// Experiment file (TOML); built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `out_dir` from the config.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Signal grid size of bid curves.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Absolute quadrature tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Expected revenues, Monte Carlo checks, ranking and dominance matrix.
    Rank,
    /// Equilibrium bid curve per family.
    BidCurve,
    /// Dependence-order check of the model.
    CheckDependence {
        #[arg(long, value_enum)]
        property: PropertyArg,
    },
    /// Steepness checks between families.
    CheckSteepness {
        #[arg(long, value_enum)]
        mode: ModeArg,
        /// Two family names, `a,b`, checking whether `a` is steeper than `b`.
        #[arg(long)]
        pair: Option<String>,
    },
    /// Largest gain from deviating from the equilibrium bid.
    BestResponse,
    /// Example 1 revenue table at I = 0.2 against the published values.
    ReproduceExample1,
    /// Randomized lemma checks, one JSON record per trial.
    Lemma {
        #[arg(long, value_enum)]
        which: LemmaArg,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Plot data: family payoffs or conditional density slices.
    FigureData {
        #[arg(long, value_enum)]
        which: FigureArg,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PropertyArg {
    Affiliation,
    Mlr,
    Fosd,
}

impl From<PropertyArg> for DependenceProperty {
    fn from(p: PropertyArg) -> Self {
        match p {
            PropertyArg::Affiliation => DependenceProperty::Affiliation,
            PropertyArg::Mlr => DependenceProperty::PdMlr,
            PropertyArg::Fosd => DependenceProperty::PdFosd,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Steep,
    Strong,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LemmaArg {
    Ohlin1,
    Ohlin2,
    MlrPreserve,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FigureArg {
    Families,
    Densities,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] secbid::Error),
    #[error("cannot write {path}: {reason}")]
    Output { path: PathBuf, reason: String },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() || matches!(e, secbid::Error::Invariant(_)) => 3,
            _ => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Output { .. } => "output",
            CliError::Core(_) if self.exit_code() == 3 => "numerical",
            CliError::Core(_) => "validation",
        }
    }

    /// One-line `key=value` description for the diagnostic stream.
    pub fn diagnostic(&self) -> String {
        format!(
            "error code={} kind={} reason={}",
            self.exit_code(),
            self.kind(),
            one_line(&self.to_string())
        )
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Result of a successful run; property failures map to exit code 2.
#[derive(Debug, Default)]
pub struct Outcome {
    pub written: Vec<PathBuf>,
    pub failures: Vec<String>,
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        if self.failures.is_empty() {
            0
        } else {
            2
        }
    }

    fn fail(&mut self, reason: String) {
        self.failures.push(reason);
    }
}

#[derive(Serialize)]
struct Versioned<T: Serialize> {
    schema_version: u32,
    #[serde(flatten)]
    inner: T,
}

fn versioned<T: Serialize>(inner: T) -> Versioned<T> {
    Versioned {
        schema_version: SCHEMA_VERSION,
        inner,
    }
}

struct Context {
    cfg: ExperimentConfig,
    base_dir: PathBuf,
    out_dir: PathBuf,
    outcome: Outcome,
}

/// Runs one subcommand; files go only under the output directory.
pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let (mut cfg, base_dir) = match &cli.config {
        Some(path) => (
            ExperimentConfig::load(path)?,
            path.parent().map(Path::to_path_buf).unwrap_or_default(),
        ),
        None => (ExperimentConfig::default(), PathBuf::from(".")),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(n) = cli.grid {
        cfg.grids.signal = n;
    }
    if let Some(tol) = cli.tol {
        cfg.tolerances.quadrature = tol;
    }
    let out_dir = match &cli.out_dir {
        Some(d) => d.clone(),
        None if cfg.out_dir.is_absolute() => cfg.out_dir.clone(),
        None => base_dir.join(&cfg.out_dir),
    };
    validate(&cfg)?;
    let mut ctx = Context {
        cfg,
        base_dir,
        out_dir,
        outcome: Outcome::default(),
    };
    fs::create_dir_all(&ctx.out_dir).map_err(|e| output_error(&ctx.out_dir, e))?;
    match &cli.command {
        Command::Rank => cmd_rank(&mut ctx)?,
        Command::BidCurve => cmd_bid_curve(&mut ctx)?,
        Command::CheckDependence { property } => cmd_dependence(&mut ctx, (*property).into())?,
        Command::CheckSteepness { mode, pair } => cmd_steepness(&mut ctx, *mode, pair.as_deref())?,
        Command::BestResponse => cmd_best_response(&mut ctx)?,
        Command::ReproduceExample1 => cmd_example1(&mut ctx)?,
        Command::Lemma { which, trials } => cmd_lemma(&mut ctx, *which, *trials)?,
        Command::FigureData { which } => cmd_figures(&mut ctx, *which)?,
    }
    for r in &ctx.outcome.failures {
        eprintln!("error code=2 kind=property reason={}", one_line(r));
    }
    Ok(ctx.outcome)
}

fn validate(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let g = &cfg.grids;
    for (name, n, min) in [
        ("grids.signal", g.signal, 2),
        ("grids.value", g.value, 2),
        ("grids.dependence", g.dependence, 2),
        ("grids.bid", g.bid, 1),
        ("grids.deviation", g.deviation, 1),
        ("grids.dominance", g.dominance, 2),
        ("grids.best_response", g.best_response, 1),
    ] {
        if n < min {
            return Err(CliError::Config(format!("{name} = {n} must be at least {min}")));
        }
    }
    let t = &cfg.tolerances;
    if ![t.quadrature, t.root, t.residual]
        .iter()
        .all(|v| *v > 0.0 && v.is_finite())
    {
        return Err(CliError::Config("tolerances must be positive and finite".into()));
    }
    if cfg.families.is_empty() {
        return Err(CliError::Config("at least one [[families]] entry is required".into()));
    }
    cfg.utility.validate()?;
    Ok(())
}

fn output_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Output {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}

impl Context {
    fn model(&self) -> Result<Arc<dyn InformationModel>, CliError> {
        Ok(make_model(&self.cfg.model, &self.base_dir)?)
    }

    fn families(&self, model: &dyn InformationModel) -> Result<Vec<SecurityFamily>, CliError> {
        let cap = model.value_support().1;
        let fams = self
            .cfg
            .families
            .iter()
            .map(|f| f.build(cap, &self.base_dir))
            .collect::<secbid::Result<Vec<_>>>()?;
        for (i, f) in fams.iter().enumerate() {
            if fams[..i].iter().any(|g| g.name() == f.name()) {
                return Err(CliError::Config(format!("duplicate family name {}", f.name())));
            }
        }
        Ok(fams)
    }

    fn signal_grid(&self, model: &dyn InformationModel, n: usize) -> Grid {
        let (lo, hi) = model.signal_support();
        Grid::uniform(lo, hi, n)
    }

    fn solve(
        &self,
        model: &Arc<dyn InformationModel>,
        fam: &SecurityFamily,
    ) -> Result<(AuctionInstance, BidCurve), CliError> {
        let inst = AuctionInstance::with_tolerances(
            model.clone(),
            fam.clone(),
            self.cfg.utility,
            self.cfg.investment,
            self.cfg.tolerances,
        )?;
        let curve = bid_curve(&inst, &self.signal_grid(model.as_ref(), self.cfg.grids.signal))?;
        if let Some(w) = &curve.warning {
            eprintln!("warning family={} reason={}", fam.name(), one_line(w));
        }
        Ok((inst, curve))
    }

    fn rank_options(&self, model: &dyn InformationModel) -> RankOptions {
        RankOptions {
            signal_grid: self.signal_grid(model, self.cfg.grids.signal),
            dominance_grid: self.signal_grid(model, self.cfg.grids.dominance),
            mc_draws: self.cfg.monte_carlo.draws,
            seed: self.cfg.seed,
            tolerances: self.cfg.tolerances,
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value).map_err(|e| output_error(&path, e))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| output_error(&path, e))?;
        self.written(path);
        Ok(())
    }

    fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| output_error(&path, e))?;
        w.write_record(header).map_err(|e| output_error(&path, e))?;
        for r in rows {
            w.write_record(r).map_err(|e| output_error(&path, e))?;
        }
        w.flush().map_err(|e| output_error(&path, e))?;
        self.written(path);
        Ok(())
    }

    fn write_table(&mut self, name: &str, table: &Table) -> Result<(), CliError> {
        let path = self.path(name);
        let file = File::create(&path).map_err(|e| output_error(&path, e))?;
        table.write_csv(BufWriter::new(file))?;
        self.written(path);
        Ok(())
    }

    fn write_lines(&mut self, name: &str, lines: &[String]) -> Result<(), CliError> {
        let path = self.path(name);
        let file = File::create(&path).map_err(|e| output_error(&path, e))?;
        let mut w = BufWriter::new(file);
        for l in lines {
            writeln!(w, "{l}").map_err(|e| output_error(&path, e))?;
        }
        w.flush().map_err(|e| output_error(&path, e))?;
        self.written(path);
        Ok(())
    }

    fn written(&mut self, path: PathBuf) {
        println!("{}", path.display());
        self.outcome.written.push(path);
    }
}

/// Six significant digits.
pub fn sig6(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let decimals = (5 - v.abs().log10().floor() as i32).max(0) as usize;
    format!("{v:.decimals$}")
}

fn opt6(v: Option<f64>) -> String {
    v.map(sig6).unwrap_or_default()
}

fn summary_rows(report: &RevenueReport) -> Vec<Vec<String>> {
    report
        .families
        .iter()
        .map(|f| {
            vec![
                f.name.clone(),
                sig6(f.revenue),
                opt6(f.mc.as_ref().map(|m| m.mean)),
                opt6(f.mc.as_ref().map(|m| m.std_error)),
            ]
        })
        .collect()
}

fn check_mc(outcome: &mut Outcome, report: &RevenueReport) {
    for f in &report.families {
        if f.mc_agrees == Some(false) {
            let mc = f.mc.as_ref().expect("agreement implies an estimate");
            outcome.fail(format!(
                "family={} quadrature={} monte_carlo={} stderr={}",
                f.name, f.revenue, mc.mean, mc.std_error
            ));
        }
    }
}

fn cmd_rank(ctx: &mut Context) -> Result<(), CliError> {
    let model = ctx.model()?;
    let fams = ctx.families(model.as_ref())?;
    let opts = ctx.rank_options(model.as_ref());
    let report = rank_families(model, ctx.cfg.utility, ctx.cfg.investment, &fams, &opts)?;
    ctx.write_json("revenue_report.json", &report)?;
    ctx.write_csv(
        "revenue_summary.csv",
        &["family", "revenue", "mc_mean", "mc_stderr"],
        &summary_rows(&report),
    )?;
    check_mc(&mut ctx.outcome, &report);
    Ok(())
}

fn cmd_example1(ctx: &mut Context) -> Result<(), CliError> {
    let model: Arc<dyn InformationModel> = Arc::new(secbid::Example1);
    let fams = SecurityFamily::standard_set(1.0);
    let opts = ctx.rank_options(model.as_ref());
    let report = rank_families(model, UtilityFunction::Linear, 0.2, &fams, &opts)?;
    let mut rows = Vec::new();
    for (name, paper) in EXAMPLE1_REVENUES {
        let f = report
            .families
            .iter()
            .find(|f| f.name == name)
            .expect("standard family");
        let diff = f.revenue - paper;
        rows.push(vec![
            name.to_string(),
            sig6(f.revenue),
            format!("{paper}"),
            sig6(diff),
            opt6(f.mc.as_ref().map(|m| m.mean)),
            opt6(f.mc.as_ref().map(|m| m.std_error)),
        ]);
        if diff.abs() > REVENUE_TOL {
            ctx.outcome
                .fail(format!("family={name} revenue={} published={paper}", f.revenue));
        }
    }
    let expected = ["debt", "equity", "call_option", "cash"];
    if report.ranking != expected {
        ctx.outcome
            .fail(format!("ranking {:?} differs from {:?}", report.ranking, expected));
    }
    // Adjacent gaps must exceed the combined error bounds.
    for w in expected.windows(2) {
        let get = |n: &str| report.families.iter().find(|f| f.name == n).expect("standard family");
        let (hi, lo) = (get(w[0]), get(w[1]));
        if hi.revenue - lo.revenue <= hi.quad_error + lo.quad_error {
            ctx.outcome
                .fail(format!("gap between {} and {} within error bounds", w[0], w[1]));
        }
    }
    ctx.write_json("example1_report.json", &report)?;
    ctx.write_csv(
        "example1_revenues.csv",
        &["family", "revenue", "published", "difference", "mc_mean", "mc_stderr"],
        &rows,
    )?;
    check_mc(&mut ctx.outcome, &report);
    Ok(())
}

fn cmd_bid_curve(ctx: &mut Context) -> Result<(), CliError> {
    let model = ctx.model()?;
    for fam in ctx.families(model.as_ref())? {
        let (_, curve) = ctx.solve(&model, &fam)?;
        let rows: Vec<Vec<String>> = curve
            .signals
            .iter()
            .zip(&curve.bids)
            .zip(&curve.residuals)
            .map(|((y, b), r)| vec![format!("{y}"), format!("{b}"), format!("{r}")])
            .collect();
        ctx.write_csv(
            &format!("bid_curve_{}.csv", fam.name()),
            &["y", "bid", "residual"],
            &rows,
        )?;
    }
    Ok(())
}

fn cmd_dependence(ctx: &mut Context, property: DependenceProperty) -> Result<(), CliError> {
    let model = ctx.model()?;
    let (xg, yg, zg) = default_dependence_grids(model.as_ref(), ctx.cfg.grids.dependence);
    let report = check_dependence(model.as_ref(), property, &xg, &yg, &zg)?;
    ctx.write_json(&format!("dependence_{}.json", property.as_str()), &versioned(&report))?;
    if !report.verdict {
        let w = &report.witnesses[0];
        ctx.outcome.fail(format!(
            "property={} violations={} first_witness=x{:?},y{:?},z{:?}",
            property.as_str(),
            report.total_violations,
            w.x,
            w.y,
            w.z
        ));
    }
    Ok(())
}

#[derive(Serialize)]
struct SteepnessFile {
    mode: SteepnessMode,
    reports: Vec<secbid::SteepnessReport>,
}

fn cmd_steepness(ctx: &mut Context, mode: ModeArg, pair: Option<&str>) -> Result<(), CliError> {
    let mode = match mode {
        ModeArg::Steep => SteepnessMode::Steep,
        ModeArg::Strong => SteepnessMode::Strong,
    };
    let model = ctx.model()?;
    let fams = ctx.families(model.as_ref())?;
    let find = |name: &str| {
        fams.iter()
            .position(|f| f.name() == name.trim())
            .ok_or_else(|| CliError::Config(format!("no family named {name} in the config")))
    };
    let pairs: Vec<(usize, usize)> = match pair {
        Some(p) => {
            let (a, b) = p
                .split_once(',')
                .ok_or_else(|| CliError::Config(format!("--pair expects `a,b`, got {p}")))?;
            vec![(find(a)?, find(b)?)]
        }
        None => (0..fams.len())
            .flat_map(|i| (0..fams.len()).filter(move |&j| j != i).map(move |j| (i, j)))
            .collect(),
    };
    let mut reports = Vec::new();
    for (i, j) in pairs {
        let (a, b) = (&fams[i], &fams[j]);
        let (ga, gb) = (a.bid_grid(ctx.cfg.grids.bid), b.bid_grid(ctx.cfg.grids.bid));
        let xg = steepness_value_grid(a, b, &ga, &gb, ctx.cfg.grids.value);
        reports.push(check_steepness(a, b, mode, &xg, &ga, &gb)?);
    }
    if pair.is_some() && !reports[0].verdict {
        let r = &reports[0];
        ctx.outcome.fail(format!(
            "{} is not {} than {}: {} violations",
            r.family_a,
            if mode == SteepnessMode::Strong {
                "strongly steeper"
            } else {
                "steeper"
            },
            r.family_b,
            r.total_violations
        ));
    }
    let name = format!(
        "steepness_{}.json",
        if mode == SteepnessMode::Strong {
            "strong"
        } else {
            "steep"
        }
    );
    ctx.write_json(&name, &versioned(SteepnessFile { mode, reports }))?;
    Ok(())
}

fn cmd_best_response(ctx: &mut Context) -> Result<(), CliError> {
    let model = ctx.model()?;
    let signals = ctx.signal_grid(model.as_ref(), ctx.cfg.grids.best_response);
    let mut rows = Vec::new();
    for fam in ctx.families(model.as_ref())? {
        let (inst, curve) = ctx.solve(&model, &fam)?;
        let deviations = fam.bid_grid(ctx.cfg.grids.deviation);
        for &y in signals.iter() {
            let br = best_response_gain(&inst, y, &curve, &deviations)?;
            if br.gain > GAIN_TOL {
                ctx.outcome
                    .fail(format!("family={} y={y} gain={}", fam.name(), br.gain));
            }
            rows.push(vec![
                fam.name().to_string(),
                format!("{y}"),
                format!("{}", br.equilibrium_bid),
                format!("{}", br.equilibrium_utility),
                format!("{}", br.best_deviation),
                format!("{}", br.best_deviation_utility),
                format!("{}", br.gain),
            ]);
        }
    }
    ctx.write_csv(
        "best_response.csv",
        &[
            "family",
            "y",
            "equilibrium_bid",
            "equilibrium_utility",
            "best_deviation",
            "best_deviation_utility",
            "gain",
        ],
        &rows,
    )
}

fn digest<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("serializable inputs");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn json_line<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("serializable record")
}

#[derive(Serialize)]
struct TrialRecord<'a, I: Serialize, R: Serialize> {
    schema_version: u32,
    trial: usize,
    digest: String,
    inputs: &'a I,
    report: &'a R,
    verdict: Option<bool>,
}

fn cmd_lemma(ctx: &mut Context, which: LemmaArg, trials: Option<usize>) -> Result<(), CliError> {
    let trials = trials.unwrap_or(ctx.cfg.lemmas.trials);
    let seed = ctx.cfg.seed;
    let mut lines = Vec::with_capacity(trials + 1);
    let mut failed = 0;
    let name = match which {
        LemmaArg::Ohlin1 | LemmaArg::Ohlin2 => {
            let part = if which == LemmaArg::Ohlin1 {
                OhlinPart::One
            } else {
                OhlinPart::Two
            };
            for t in ohlin_trials(part, trials, seed)? {
                failed += usize::from(!t.report.verdict);
                lines.push(json_line(&TrialRecord {
                    schema_version: SCHEMA_VERSION,
                    trial: t.trial,
                    digest: digest(&t.inputs),
                    inputs: &t.inputs,
                    report: &t.report,
                    verdict: Some(t.report.verdict),
                }));
            }
            if which == LemmaArg::Ohlin1 {
                "lemma_ohlin1.jsonl"
            } else {
                "lemma_ohlin2.jsonl"
            }
        }
        LemmaArg::MlrPreserve => {
            let tilt = match ctx.cfg.model {
                ModelSpec::LinearTilt { n_buyers, kappa } => LinearTilt::new(n_buyers, kappa)?,
                _ => LinearTilt::new(2, 1.0)?,
            };
            for t in mlr_trials(&tilt, trials, seed)? {
                failed += usize::from(t.report.verdict == Some(false));
                lines.push(json_line(&TrialRecord {
                    schema_version: SCHEMA_VERSION,
                    trial: t.trial,
                    digest: digest(&t.g),
                    inputs: &t.g,
                    report: &t.report,
                    verdict: t.report.verdict,
                }));
            }
            let w = example1_mlr_witness(0.2)?;
            lines.push(json_line(&serde_json::json!({
                "schema_version": SCHEMA_VERSION,
                "example1_witness": w,
            })));
            "lemma_mlr_preserve.jsonl"
        }
    };
    if failed > 0 {
        ctx.outcome.fail(format!("{failed} of {trials} trials failed"));
    }
    ctx.write_lines(name, &lines)
}

fn cmd_figures(ctx: &mut Context, which: FigureArg) -> Result<(), CliError> {
    let model = ctx.model()?;
    let (lo, hi) = model.value_support();
    let xg = Grid::uniform(lo, hi, ctx.cfg.grids.value).with_points(model.value_landmarks());
    match which {
        FigureArg::Families => {
            let fams = ctx.families(model.as_ref())?;
            ctx.write_table("figure_families.csv", &family_payoffs(&fams, &xg)?)?;
            let solved = fams
                .iter()
                .map(|f| ctx.solve(&model, f))
                .collect::<Result<Vec<_>, _>>()?;
            let table = equilibrium_payoffs(&solved, ctx.cfg.figures.z1, &xg)?;
            ctx.write_table("figure_equilibrium_payoffs.csv", &table)?;
        }
        FigureArg::Densities => {
            let table = density_slices(model.as_ref(), ctx.cfg.figures.y1, ctx.cfg.figures.z1, &xg)?;
            ctx.write_table("figure_densities.csv", &table)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.30617283), "0.306173");
        assert_eq!(sig6(6.2345678e-6), "0.00000623457");
        assert_eq!(sig6(-0.0074074074), "-0.00740741");
        assert_eq!(sig6(123.4567), "123.457");
        assert_eq!(sig6(0.0), "0");
    }

    #[test]
    fn error_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 1);
        let root = secbid::Error::Root {
            reason: "r".into(),
            best: 0.0,
        };
        assert_eq!(CliError::from(root).exit_code(), 3);
        let e = CliError::from(secbid::Error::Validation("a\nb".into()));
        assert_eq!(
            e.diagnostic(),
            "error code=1 kind=validation reason=validation failed: a b"
        );
    }
}
