//! Command-line front end: load a run configuration, drive the library, and
//! write plot-ready JSON/CSV artifacts.
//!
//! Four subcommands cover the workflow: `eval` scores one configuration
//! (cost report + per-stage fidelity), `search` runs the evolutionary
//! search and exports the Pareto front, `sqnr-map` dumps per-window
//! fidelity maps for a configuration against a baseline, and `sample`
//! emits drawn ratio configurations as JSON lines.
//!
//! Every command is deterministic given (config file, seed): reruns produce
//! byte-identical outputs. All files for a command are assembled in memory
//! and written together at the end, so a failing run leaves no partial
//! output behind.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::backbone::{ForwardOptions, Model, ModelSpec, QuantSettings, StageOutputs};
use crate::cost::{total_bops, CostModel, CostReport};
use crate::error::{Error, Result};
use crate::quant::sqnr_db;
use crate::ratio::{CompressionConfig, ExecMode};
use crate::sampling::{sum_range_from_cost_targets, uniform_sum_sample, SamplerConfig};
use crate::search::{nsga2_search, CandidateEvaluator, InitSampler, ParetoPoint, SearchParams};
use crate::seeding::{derive_seed, rng_from_seed};
use crate::windowing::partition;

/// Accepted run-configuration schema version.
pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "mixaq",
    version,
    about = "Mixed-precision window routing: evaluate, search, and export"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score one ratio configuration: cost report plus per-stage fidelity.
    Eval(EvalArgs),
    /// Run the evolutionary search and export the Pareto front.
    Search(SearchArgs),
    /// Export per-window fidelity maps for a configuration and a baseline.
    SqnrMap(SqnrMapArgs),
    /// Draw ratio configurations and emit them as JSON lines.
    Sample(SampleArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Run configuration file (JSON).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Override the seed from the configuration file.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Worker threads for candidate evaluation (1 keeps runs fully serial).
    #[arg(long, value_name = "N", default_value_t = 1)]
    threads: usize,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Per-pair ratios `r1,...,rn`, optionally with pruning shares
    /// appended as `:p1,...,pn`.
    #[arg(long, value_name = "LIST")]
    ratios: String,
    /// How ratios are spent: mixaq, prune, or mixaq+prune.
    #[arg(long, value_name = "MODE", value_parser = parse_exec_mode, default_value = "mixaq+prune")]
    mode: ExecMode,
    /// Route the least important windows to the high branch (worst case).
    #[arg(long)]
    reversed_selection: bool,
}

#[derive(Debug, Args)]
struct SearchArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// How ratios are spent during candidate evaluation.
    #[arg(long, value_name = "MODE", value_parser = parse_exec_mode, default_value = "mixaq+prune")]
    mode: ExecMode,
    /// Evaluate candidates with worst-case window selection.
    #[arg(long)]
    reversed_selection: bool,
    /// Also write the running front after every generation.
    #[arg(long)]
    snapshots: bool,
}

#[derive(Debug, Args)]
struct SqnrMapArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Configuration to map, as `r1,...,rn[:p1,...,pn]`.
    #[arg(long, value_name = "LIST")]
    ratios: String,
    /// Baseline configuration (defaults to all zeros).
    #[arg(long, value_name = "LIST")]
    baseline_ratios: Option<String>,
    /// How ratios are spent: mixaq, prune, or mixaq+prune.
    #[arg(long, value_name = "MODE", value_parser = parse_exec_mode, default_value = "mixaq+prune")]
    mode: ExecMode,
    /// Map worst-case window selection instead of importance order.
    #[arg(long)]
    reversed_selection: bool,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of configurations to draw.
    #[arg(long, value_name = "N", default_value_t = 16)]
    count: usize,
}

fn parse_exec_mode(s: &str) -> std::result::Result<ExecMode, String> {
    s.parse::<ExecMode>().map_err(|e| e.to_string())
}

/// Which MAC budget the cost model uses.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostMode {
    /// Built-in per-pair GMAC table of the reference backbone (six pairs).
    SwinTiny,
    /// MACs counted from the configured model's own shape.
    #[default]
    Analytic,
}

/// Sampler section of the run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerSection {
    /// Lowest relative cost the drawn configurations may reach.
    pub cost_lo: f64,
    /// Highest relative cost the drawn configurations may reach.
    pub cost_hi: f64,
    /// Per-ratio cap.
    pub upper: f64,
    /// Dirichlet concentration.
    pub alpha: f64,
    /// Rejection budget per draw.
    pub max_rejects: usize,
}

impl Default for SamplerSection {
    fn default() -> Self {
        Self { cost_lo: 0.65, cost_hi: 0.95, upper: 0.8, alpha: 1.0, max_rejects: 1_000_000 }
    }
}

impl SamplerSection {
    /// Concrete sampler for a model with `n` block pairs.
    pub fn sampler_config(&self, n: usize) -> Result<SamplerConfig> {
        let (s_min, s_max) = sum_range_from_cost_targets(self.cost_lo, self.cost_hi, n)?;
        let mut cfg = SamplerConfig::new(n, s_min, s_max);
        cfg.upper = self.upper;
        cfg.alpha = self.alpha;
        cfg.max_rejects = self.max_rejects;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Initial-population sampler named in the run configuration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    #[default]
    UniformSum,
    Naive,
}

/// Search section of the run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSection {
    pub pop_size: usize,
    pub generations: usize,
    pub init: InitKind,
    /// Seeded inputs per candidate evaluation.
    pub eval_batch: usize,
    /// Search per-pair pruning shares alongside the ratios.
    pub with_pruning: bool,
}

impl Default for SearchSection {
    fn default() -> Self {
        Self {
            pop_size: 32,
            generations: 20,
            init: InitKind::UniformSum,
            eval_batch: 8,
            with_pruning: false,
        }
    }
}

/// The versioned run-configuration file. Unknown fields are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub model: ModelSpec,
    pub quant: QuantSettings,
    #[serde(default)]
    pub cost_mode: CostMode,
    #[serde(default)]
    pub sampler: SamplerSection,
    #[serde(default)]
    pub search: SearchSection,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("invalid config {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "config version {} is not supported (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        self.model.validate()?;
        self.quant.validate()?;
        if self.search.eval_batch == 0 {
            return Err(Error::Config("eval_batch must be at least 1".into()));
        }
        Ok(())
    }

    /// Cost model matching the configured mode.
    pub fn cost_model(&self) -> Result<CostModel> {
        match self.cost_mode {
            CostMode::SwinTiny => {
                let cm = CostModel::swin_tiny(self.quant.weight_bits, self.quant.act_high_bits)?;
                if cm.n_pairs() != self.model.n_pairs() {
                    return Err(Error::Config(format!(
                        "built-in cost table covers {} block pairs but the model has {}",
                        cm.n_pairs(),
                        self.model.n_pairs()
                    )));
                }
                Ok(cm)
            }
            CostMode::Analytic => CostModel::analytic(&self.model, &self.quant),
        }
    }
}

/// Parse `r1,...,rn[:p1,...,pn]` into a configuration.
pub fn parse_ratio_list(s: &str) -> Result<CompressionConfig> {
    let (r_part, p_part) = match s.split_once(':') {
        Some((a, b)) => (a, Some(b)),
        None => (s, None),
    };
    let parse_part = |part: &str| -> Result<Vec<f64>> {
        part.split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("bad ratio value '{}': {e}", t.trim())))
            })
            .collect()
    };
    let r = parse_part(r_part)?;
    let p = match p_part {
        Some(part) => parse_part(part)?,
        None => vec![0.0; r.len()],
    };
    CompressionConfig::from_ratios(&r, &p)
}

/// Files for one command, assembled in memory and written together so a
/// failing run leaves nothing behind.
struct OutputSet {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl OutputSet {
    fn new(dir: PathBuf) -> Self {
        Self { dir, files: Vec::new() }
    }

    fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)
            .map_err(|e| Error::Internal(format!("cannot serialize {name}: {e}")))?;
        bytes.push(b'\n');
        self.files.push((name.to_string(), bytes));
        Ok(())
    }

    fn add_text(&mut self, name: &str, text: String) {
        self.files.push((name.to_string(), text.into_bytes()));
    }

    fn write_all(self) -> Result<()> {
        std::fs::create_dir_all(&self.dir)?;
        for (name, bytes) in self.files {
            std::fs::write(self.dir.join(name), bytes)?;
        }
        Ok(())
    }
}

/// Shared per-command setup: parsed config, effective seed, calibrated model.
struct Workbench {
    cfg: RunConfig,
    seed: u64,
    out_dir: PathBuf,
}

impl Workbench {
    fn open(common: &CommonArgs) -> Result<Self> {
        if common.threads == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        // The global pool can only be configured once per process; later
        // calls keep the first configuration, which is what a single CLI
        // invocation needs.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(common.threads).build_global();
        let cfg = RunConfig::load(&common.config)?;
        let seed = common.seed.unwrap_or(cfg.seed);
        Ok(Self { cfg, seed, out_dir: common.out.clone() })
    }

    /// Build and calibrate the configured model under the effective seed.
    fn calibrated_model(&self) -> Result<Model> {
        let mut spec = self.cfg.model.clone();
        spec.seed = self.seed;
        let mut model = Model::build(spec, self.cfg.quant)?;
        model.calibrate_default()?;
        Ok(model)
    }
}

/// Run a parsed command line to completion.
pub fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Eval(args) => cmd_eval(args),
        Command::Search(args) => cmd_search(args),
        Command::SqnrMap(args) => cmd_sqnr_map(args),
        Command::Sample(args) => cmd_sample(args),
    }
}

#[derive(Serialize)]
struct StageSqnr {
    stage: usize,
    sqnr_db: f64,
}

#[derive(Serialize)]
struct EvalSqnrDoc {
    seed: u64,
    mode: String,
    reversed: bool,
    inputs: usize,
    config: CompressionConfig,
    stages: Vec<StageSqnr>,
    final_sqnr_db: f64,
}

/// Mean per-stage SQNR of `mixed` forwards against `float` forwards.
fn mean_stage_sqnr(floats: &[StageOutputs], mixed: &[StageOutputs]) -> Result<Vec<f64>> {
    let n_stages = floats[0].stages.len();
    let mut sums = vec![0.0; n_stages];
    for (f, m) in floats.iter().zip(mixed) {
        for s in 0..n_stages {
            sums[s] += sqnr_db(&f.stages[s].output.data, &m.stages[s].output.data)?;
        }
    }
    Ok(sums.into_iter().map(|v| v / floats.len() as f64).collect())
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let bench = Workbench::open(&args.common)?;
    let config = parse_ratio_list(&args.ratios)?;
    let cost = bench.cfg.cost_model()?;
    let report: CostReport = total_bops(&cost, &config, args.mode)?;

    let model = bench.calibrated_model()?;
    let opts = ForwardOptions { mode: args.mode, reversed: args.reversed_selection };
    let inputs = bench.cfg.search.eval_batch;
    let mut floats = Vec::with_capacity(inputs);
    let mut mixed = Vec::with_capacity(inputs);
    for i in 0..inputs {
        let fm = model.eval_input(i)?;
        floats.push(model.forward_float(&fm)?);
        mixed.push(model.forward_mixed(&fm, &config, opts)?);
    }
    let per_stage = mean_stage_sqnr(&floats, &mixed)?;
    let doc = EvalSqnrDoc {
        seed: bench.seed,
        mode: args.mode.to_string(),
        reversed: args.reversed_selection,
        inputs,
        config: config.clone(),
        stages: per_stage.iter().enumerate().map(|(s, &v)| StageSqnr { stage: s, sqnr_db: v }).collect(),
        final_sqnr_db: *per_stage.last().expect("a model has at least one stage"),
    };

    let mut out = OutputSet::new(bench.out_dir.clone());
    out.add_json("cost_report.json", &report)?;
    out.add_json("sqnr.json", &doc)?;
    out.write_all()
}

#[derive(Serialize)]
struct FrontDoc {
    seed: u64,
    mode: String,
    reversed: bool,
    generations: usize,
    evaluations: usize,
    points: Vec<ParetoPoint>,
}

#[derive(Serialize)]
struct SnapshotsDoc {
    seed: u64,
    snapshots: Vec<Vec<ParetoPoint>>,
}

fn front_csv(points: &[ParetoPoint], n_pairs: usize) -> String {
    let mut csv = String::from("saving,relative_cost,quality_db");
    for i in 1..=n_pairs {
        csv.push_str(&format!(",r{i}"));
    }
    for i in 1..=n_pairs {
        csv.push_str(&format!(",p{i}"));
    }
    csv.push('\n');
    for p in points {
        csv.push_str(&format!("{},{},{}", p.saving, 1.0 - p.saving, p.quality));
        for v in p.config.r_ratios() {
            csv.push_str(&format!(",{v}"));
        }
        for v in p.config.p_ratios() {
            csv.push_str(&format!(",{v}"));
        }
        csv.push('\n');
    }
    csv
}

fn cmd_search(args: &SearchArgs) -> Result<()> {
    let bench = Workbench::open(&args.common)?;
    let cost = bench.cfg.cost_model()?;
    let model = bench.calibrated_model()?;
    let n_pairs = model.n_pairs();
    let evaluator = CandidateEvaluator::new(
        model,
        cost,
        args.mode,
        args.reversed_selection,
        bench.cfg.search.eval_batch,
    )?;

    let init = match bench.cfg.search.init {
        InitKind::UniformSum => InitSampler::UniformSum(bench.cfg.sampler.sampler_config(n_pairs)?),
        InitKind::Naive => InitSampler::Naive,
    };
    let mut params = SearchParams::new(
        bench.cfg.search.pop_size,
        bench.cfg.search.generations,
        n_pairs,
        init,
    );
    params.with_pruning = bench.cfg.search.with_pruning;
    params.keep_snapshots = args.snapshots;

    let mut rng = rng_from_seed(derive_seed(bench.seed, 4));
    let outcome = nsga2_search(&evaluator, &params, &mut rng)?;

    let mut out = OutputSet::new(bench.out_dir.clone());
    out.add_text("front.csv", front_csv(&outcome.front, n_pairs));
    out.add_json(
        "front.json",
        &FrontDoc {
            seed: bench.seed,
            mode: args.mode.to_string(),
            reversed: args.reversed_selection,
            generations: params.generations,
            evaluations: outcome.evaluations,
            points: outcome.front,
        },
    )?;
    if args.snapshots {
        out.add_json(
            "generations.json",
            &SnapshotsDoc { seed: bench.seed, snapshots: outcome.snapshots },
        )?;
    }
    out.write_all()
}

#[derive(Serialize)]
struct WindowSqnr {
    index: usize,
    origin: [usize; 2],
    score: f64,
    sqnr_db: f64,
    baseline_sqnr_db: f64,
    delta_db: f64,
}

#[derive(Serialize)]
struct StageMap {
    stage: usize,
    height: usize,
    width: usize,
    window_size: usize,
    windows: Vec<WindowSqnr>,
}

#[derive(Serialize)]
struct SqnrMapDoc {
    seed: u64,
    mode: String,
    reversed: bool,
    inputs: usize,
    config: CompressionConfig,
    baseline: CompressionConfig,
    stages: Vec<StageMap>,
}

fn cmd_sqnr_map(args: &SqnrMapArgs) -> Result<()> {
    let bench = Workbench::open(&args.common)?;
    let config = parse_ratio_list(&args.ratios)?;
    let baseline = match &args.baseline_ratios {
        Some(s) => parse_ratio_list(s)?,
        None => CompressionConfig::zeros(bench.cfg.model.n_pairs())?,
    };
    let model = bench.calibrated_model()?;
    let opts = ForwardOptions { mode: args.mode, reversed: args.reversed_selection };
    let window_size = model.spec().window_size;
    let inputs = bench.cfg.search.eval_batch;
    let n_stages = model.n_stages();

    // Per stage: per-window SQNR sums for both configs, plus score sums
    // from the evaluated config's forwards.
    let mut sums: Vec<Vec<(f64, f64, f64)>> = Vec::new();
    let mut grids: Vec<(usize, usize, Vec<(usize, usize)>)> = Vec::new();
    for i in 0..inputs {
        let fm = model.eval_input(i)?;
        let float = model.forward_float(&fm)?;
        let main = model.forward_mixed(&fm, &config, opts)?;
        let base = model.forward_mixed(&fm, &baseline, opts)?;
        for s in 0..n_stages {
            let f_ws = partition(&float.stages[s].output, window_size)?;
            let m_ws = partition(&main.stages[s].output, window_size)?;
            let b_ws = partition(&base.stages[s].output, window_size)?;
            if i == 0 {
                sums.push(vec![(0.0, 0.0, 0.0); f_ws.n_win()]);
                let o = &float.stages[s].output;
                grids.push((o.height, o.width, f_ws.origins.clone()));
            }
            for w in 0..f_ws.n_win() {
                let cell = &mut sums[s][w];
                cell.0 += sqnr_db(f_ws.window(w), m_ws.window(w))?;
                cell.1 += sqnr_db(f_ws.window(w), b_ws.window(w))?;
                cell.2 += main.stages[s].scores.scores[w];
            }
        }
    }

    let stages = sums
        .iter()
        .zip(&grids)
        .enumerate()
        .map(|(s, (cells, (h, w, origins)))| StageMap {
            stage: s,
            height: *h,
            width: *w,
            window_size,
            windows: cells
                .iter()
                .zip(origins)
                .enumerate()
                .map(|(idx, (&(mq, bq, sc), &(r, c)))| {
                    let sqnr = mq / inputs as f64;
                    let base = bq / inputs as f64;
                    WindowSqnr {
                        index: idx,
                        origin: [r, c],
                        score: sc / inputs as f64,
                        sqnr_db: sqnr,
                        baseline_sqnr_db: base,
                        delta_db: sqnr - base,
                    }
                })
                .collect(),
        })
        .collect();

    let doc = SqnrMapDoc {
        seed: bench.seed,
        mode: args.mode.to_string(),
        reversed: args.reversed_selection,
        inputs,
        config,
        baseline,
        stages,
    };
    let mut out = OutputSet::new(bench.out_dir.clone());
    out.add_json("sqnr_map.json", &doc)?;
    out.write_all()
}

fn cmd_sample(args: &SampleArgs) -> Result<()> {
    let bench = Workbench::open(&args.common)?;
    let n_pairs = bench.cfg.model.n_pairs();
    let sampler = bench.cfg.sampler.sampler_config(n_pairs)?;
    let base = derive_seed(bench.seed, 3);
    let mut lines = String::new();
    for i in 0..args.count {
        let mut rng = rng_from_seed(base.wrapping_add(i as u64));
        let ratios = uniform_sum_sample(&sampler, &mut rng)?;
        let config = CompressionConfig::from_ratios(&ratios, &vec![0.0; n_pairs])?;
        lines.push_str(
            &serde_json::to_string(&config)
                .map_err(|e| Error::Internal(format!("cannot serialize draw {i}: {e}")))?,
        );
        lines.push('\n');
    }
    let mut out = OutputSet::new(bench.out_dir.clone());
    out.add_text("samples.jsonl", lines);
    out.write_all()
}
