//! Bi-objective evolutionary search over compression configurations.
//!
//! The search maximizes two objectives at once — computational saving and
//! output fidelity — with the classic NSGA-II machinery: fast non-dominated
//! sorting, crowding distances, binary tournaments, uniform crossover, and
//! per-gene mutation on the tenths grid. Candidate evaluations are pure and
//! may run in parallel; every random decision happens sequentially on the
//! caller's generator, so a fixed seed reproduces the search exactly
//! regardless of thread count.

use std::collections::{HashMap, HashSet};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::backbone::{ForwardOptions, Model};
use crate::cost::{total_bops, CostModel};
use crate::error::{Error, Result};
use crate::numerics::FeatureMap;
use crate::quant::sqnr_db;
use crate::ratio::{CompressionConfig, ExecMode};
use crate::sampling::{naive_uniform_sample, uniform_sum_sample, SamplerConfig};

/// Genes live on the tenths grid `0..=8` (ratios 0.0..=0.8).
const GENE_MAX: u8 = 8;

/// One evaluated configuration. Both coordinates are maximized.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParetoPoint {
    pub config: CompressionConfig,
    /// `1 − relative_cost`; 0 for the uncompressed configuration.
    pub saving: f64,
    /// Mean final-output SQNR (dB) against the float reference batch.
    pub quality: f64,
}

/// Anything that can score a configuration. Implementations must be pure:
/// the same config maps to the same point every time, which lets the search
/// cache scores and parallelize batches without changing its result.
pub trait Evaluator: Sync {
    fn evaluate(&self, config: &CompressionConfig) -> Result<ParetoPoint>;
}

/// Scores configurations against a calibrated model: quality is the mean
/// final-output SQNR over a fixed batch of seeded inputs (float forward as
/// the reference), saving comes from the cost model. The model is calibrated
/// once up front and never re-calibrated between candidates.
pub struct CandidateEvaluator {
    model: Model,
    cost: CostModel,
    mode: ExecMode,
    reversed: bool,
    inputs: Vec<FeatureMap>,
    float_refs: Vec<Vec<f64>>,
}

impl CandidateEvaluator {
    pub fn new(
        model: Model,
        cost: CostModel,
        mode: ExecMode,
        reversed: bool,
        n_inputs: usize,
    ) -> Result<Self> {
        if !model.is_calibrated() {
            return Err(Error::Config("candidate evaluation needs a calibrated model".into()));
        }
        if n_inputs == 0 {
            return Err(Error::Config("candidate evaluation needs at least one input".into()));
        }
        if cost.n_pairs() != model.n_pairs() {
            return Err(Error::Config(format!(
                "cost model covers {} pairs but the model has {}",
                cost.n_pairs(),
                model.n_pairs()
            )));
        }
        let inputs: Vec<FeatureMap> =
            (0..n_inputs).map(|i| model.eval_input(i)).collect::<Result<_>>()?;
        let mut float_refs = Vec::with_capacity(n_inputs);
        for fm in &inputs {
            float_refs.push(model.forward_float(fm)?.final_output().data.clone());
        }
        Ok(Self { model, cost, mode, reversed, inputs, float_refs })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn n_pairs(&self) -> usize {
        self.model.n_pairs()
    }
}

impl Evaluator for CandidateEvaluator {
    fn evaluate(&self, config: &CompressionConfig) -> Result<ParetoPoint> {
        let report = total_bops(&self.cost, config, self.mode)?;
        let opts = ForwardOptions { mode: self.mode, reversed: self.reversed };
        let mut total = 0.0;
        for (fm, reference) in self.inputs.iter().zip(&self.float_refs) {
            let out = self.model.forward_mixed(fm, config, opts)?;
            total += sqnr_db(reference, &out.final_output().data)?;
        }
        Ok(ParetoPoint {
            config: config.clone(),
            saving: 1.0 - report.relative_cost,
            quality: total / self.inputs.len() as f64,
        })
    }
}

/// Where the initial population comes from.
#[derive(Debug, Clone)]
pub enum InitSampler {
    /// Budget-first draws spreading the population across the whole cost
    /// range.
    UniformSum(SamplerConfig),
    /// Independent per-pair draws (concentrate near the mean budget).
    Naive,
}

#[derive(Debug, Clone)]
pub struct SearchParams {
    /// Population size; even and at least 4.
    pub pop_size: usize,
    /// Offspring generations after the initial population.
    pub generations: usize,
    /// Genes per objective vector (one ratio per block pair).
    pub n_pairs: usize,
    pub init: InitSampler,
    /// Also search per-pair pruning shares (doubles the genome; the joint
    /// bound r + p <= 1 is repaired by clamping p).
    pub with_pruning: bool,
    /// Probability that a parent pair exchanges genes at all.
    pub crossover_prob: f64,
    /// Record the running front after initialization and every generation.
    pub keep_snapshots: bool,
}

impl SearchParams {
    pub fn new(pop_size: usize, generations: usize, n_pairs: usize, init: InitSampler) -> Self {
        Self {
            pop_size,
            generations,
            n_pairs,
            init,
            with_pruning: false,
            crossover_prob: 0.9,
            keep_snapshots: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pop_size < 4 || self.pop_size % 2 != 0 {
            return Err(Error::Config(format!(
                "population size {} must be even and at least 4",
                self.pop_size
            )));
        }
        if self.n_pairs == 0 {
            return Err(Error::Config("search needs at least one block pair".into()));
        }
        if !(0.0..=1.0).contains(&self.crossover_prob) {
            return Err(Error::Config(format!(
                "crossover probability {} outside [0, 1]",
                self.crossover_prob
            )));
        }
        if let InitSampler::UniformSum(cfg) = &self.init {
            cfg.validate()?;
            if cfg.n != self.n_pairs {
                return Err(Error::Config(format!(
                    "init sampler draws {} ratios but the search genome has {} pairs",
                    cfg.n, self.n_pairs
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    /// Non-dominated set over every configuration evaluated, deduplicated
    /// by config and sorted by ascending saving.
    pub front: Vec<ParetoPoint>,
    /// Running front after initialization and after each generation
    /// (`generations + 1` entries when snapshots were requested).
    pub snapshots: Vec<Vec<ParetoPoint>>,
    /// Distinct evaluator calls made (repeat configs are served from a
    /// cache).
    pub evaluations: usize,
}

fn dominates(a: &ParetoPoint, b: &ParetoPoint) -> bool {
    a.saving >= b.saving
        && a.quality >= b.quality
        && (a.saving > b.saving || a.quality > b.quality)
}

/// O(n²) non-dominated filter, both coordinates maximized: a point survives
/// iff no other point is at least as good in both and strictly better in
/// one. Ties (exact duplicates) all survive.
pub fn pareto_filter(points: &[ParetoPoint]) -> Vec<ParetoPoint> {
    points
        .iter()
        .enumerate()
        .filter(|(i, p)| !points.iter().enumerate().any(|(j, q)| j != *i && dominates(q, p)))
        .map(|(_, p)| p.clone())
        .collect()
}

fn dedup_by_config(mut points: Vec<ParetoPoint>) -> Vec<ParetoPoint> {
    let mut seen = HashSet::new();
    points.retain(|p| seen.insert(p.config.clone()));
    points
}

/// Stable presentation order: cheapest saving first, quality breaking ties.
fn sorted_front(mut points: Vec<ParetoPoint>) -> Vec<ParetoPoint> {
    points.sort_by(|a, b| {
        a.saving
            .partial_cmp(&b.saving)
            .expect("objectives are finite")
            .then(b.quality.partial_cmp(&a.quality).expect("objectives are finite"))
            .then(a.config.cmp(&b.config))
    });
    points
}

/// Fronts of equal domination rank, best first (standard fast
/// non-dominated sort).
fn fast_nondominated_sort(points: &[ParetoPoint]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut beats: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut dominated_by = vec![0usize; n];
    let mut fronts: Vec<Vec<usize>> = vec![Vec::new()];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if dominates(&points[i], &points[j]) {
                beats[i].push(j);
            } else if dominates(&points[j], &points[i]) {
                dominated_by[i] += 1;
            }
        }
        if dominated_by[i] == 0 {
            fronts[0].push(i);
        }
    }
    let mut k = 0;
    while !fronts[k].is_empty() {
        let mut next = Vec::new();
        for &i in &fronts[k] {
            for &j in &beats[i] {
                dominated_by[j] -= 1;
                if dominated_by[j] == 0 {
                    next.push(j);
                }
            }
        }
        fronts.push(next);
        k += 1;
    }
    fronts.pop();
    fronts
}

/// Crowding distance within one front (parallel to `front`'s order);
/// boundary points get infinity.
fn crowding_distances(points: &[ParetoPoint], front: &[usize]) -> Vec<f64> {
    let m = front.len();
    if m <= 2 {
        return vec![f64::INFINITY; m];
    }
    let mut dist = vec![0.0f64; m];
    let keys: [fn(&ParetoPoint) -> f64; 2] = [|p| p.saving, |p| p.quality];
    for key in keys {
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| {
            key(&points[front[a]])
                .partial_cmp(&key(&points[front[b]]))
                .expect("objectives are finite")
                .then(a.cmp(&b))
        });
        let lo = key(&points[front[order[0]]]);
        let hi = key(&points[front[order[m - 1]]]);
        dist[order[0]] = f64::INFINITY;
        dist[order[m - 1]] = f64::INFINITY;
        if hi - lo <= 0.0 {
            continue;
        }
        for w in 1..m - 1 {
            let gap = key(&points[front[order[w + 1]]]) - key(&points[front[order[w - 1]]]);
            dist[order[w]] += gap / (hi - lo);
        }
    }
    dist
}

#[derive(Clone)]
struct Ranked {
    rank: usize,
    crowding: f64,
}

fn rank_population(points: &[ParetoPoint]) -> Vec<Ranked> {
    let fronts = fast_nondominated_sort(points);
    let mut out = vec![Ranked { rank: 0, crowding: 0.0 }; points.len()];
    for (rank, front) in fronts.iter().enumerate() {
        let dist = crowding_distances(points, front);
        for (slot, &i) in front.iter().enumerate() {
            out[i] = Ranked { rank, crowding: dist[slot] };
        }
    }
    out
}

/// Binary tournament: lower rank wins, then larger crowding; a full tie
/// keeps the first pick.
fn tournament<R: Rng>(ranked: &[Ranked], rng: &mut R) -> usize {
    let a = rng.gen_range(0..ranked.len());
    let b = rng.gen_range(0..ranked.len());
    let b_wins = ranked[b].rank < ranked[a].rank
        || (ranked[b].rank == ranked[a].rank && ranked[b].crowding > ranked[a].crowding);
    if b_wins {
        b
    } else {
        a
    }
}

/// Uniform crossover: with probability `prob` the pair mixes at all, and
/// then each gene swaps with probability 1/2.
fn crossover<R: Rng>(a: &mut [u8], b: &mut [u8], prob: f64, rng: &mut R) {
    if !rng.gen_bool(prob) {
        return;
    }
    for i in 0..a.len() {
        if rng.gen_bool(0.5) {
            std::mem::swap(&mut a[i], &mut b[i]);
        }
    }
}

/// Each gene redrawn from the grid with probability `1 / genome length`.
fn mutate<R: Rng>(genes: &mut [u8], rng: &mut R) {
    let rate = 1.0 / genes.len() as f64;
    for g in genes.iter_mut() {
        if rng.gen_bool(rate) {
            *g = rng.gen_range(0..=GENE_MAX);
        }
    }
}

/// Restore the joint bound r + p <= 1 by clamping the pruning share.
fn repair(genes: &mut [u8], n_pairs: usize, with_pruning: bool) {
    if !with_pruning {
        return;
    }
    for i in 0..n_pairs {
        let cap = 10 - genes[i];
        if genes[n_pairs + i] > cap {
            genes[n_pairs + i] = cap;
        }
    }
}

fn genes_to_config(genes: &[u8], n_pairs: usize, with_pruning: bool) -> Result<CompressionConfig> {
    if with_pruning {
        let (r, p) = genes.split_at(n_pairs);
        CompressionConfig::from_tenths(r.to_vec(), p.to_vec())
    } else {
        CompressionConfig::from_tenths(genes.to_vec(), vec![0; genes.len()])
    }
}

fn ratios_to_genes(ratios: &[f64]) -> Vec<u8> {
    ratios.iter().map(|&r| (r * 10.0).round() as u8).collect()
}

/// Score a batch of genomes, serving repeats from the cache and running
/// fresh configurations in parallel. Results line up with `genomes`.
fn evaluate_genomes<E: Evaluator + ?Sized>(
    evaluator: &E,
    genomes: &[Vec<u8>],
    params: &SearchParams,
    cache: &mut HashMap<CompressionConfig, ParetoPoint>,
    evaluations: &mut usize,
) -> Result<Vec<ParetoPoint>> {
    let configs: Vec<CompressionConfig> = genomes
        .iter()
        .map(|g| genes_to_config(g, params.n_pairs, params.with_pruning))
        .collect::<Result<_>>()?;
    let mut fresh: Vec<CompressionConfig> = Vec::new();
    for c in &configs {
        if !cache.contains_key(c) && !fresh.contains(c) {
            fresh.push(c.clone());
        }
    }
    let scored: Vec<ParetoPoint> =
        fresh.par_iter().map(|c| evaluator.evaluate(c)).collect::<Result<_>>()?;
    *evaluations += scored.len();
    for point in scored {
        cache.insert(point.config.clone(), point);
    }
    Ok(configs.iter().map(|c| cache[c].clone()).collect())
}

/// Elitist environmental selection: keep the best `target` of the combined
/// parent + offspring pool by (rank, crowding).
fn select_survivors(
    genomes: Vec<Vec<u8>>,
    points: Vec<ParetoPoint>,
    target: usize,
) -> (Vec<Vec<u8>>, Vec<ParetoPoint>) {
    let fronts = fast_nondominated_sort(&points);
    let mut keep: Vec<usize> = Vec::with_capacity(target);
    for front in fronts {
        if keep.len() == target {
            break;
        }
        let remaining = target - keep.len();
        if front.len() <= remaining {
            keep.extend(front);
        } else {
            let dist = crowding_distances(&points, &front);
            let mut order: Vec<usize> = (0..front.len()).collect();
            order.sort_by(|&a, &b| {
                dist[b].partial_cmp(&dist[a]).expect("crowding is comparable").then(a.cmp(&b))
            });
            keep.extend(order.into_iter().take(remaining).map(|w| front[w]));
        }
    }
    let mut g = Vec::with_capacity(target);
    let mut p = Vec::with_capacity(target);
    for &i in &keep {
        g.push(genomes[i].clone());
        p.push(points[i].clone());
    }
    (g, p)
}

/// Run the full search and return the accumulated non-dominated front.
///
/// The front is tracked as an archive over every evaluation, so adding
/// generations can only extend or improve it; in particular the best
/// quality at any saving level never degrades as the search runs longer.
pub fn nsga2_search<E: Evaluator + ?Sized, R: Rng>(
    evaluator: &E,
    params: &SearchParams,
    rng: &mut R,
) -> Result<SearchOutcome> {
    params.validate()?;
    let genome_len = if params.with_pruning { params.n_pairs * 2 } else { params.n_pairs };
    let mut cache: HashMap<CompressionConfig, ParetoPoint> = HashMap::new();
    let mut evaluations = 0usize;

    let mut genomes: Vec<Vec<u8>> = Vec::with_capacity(params.pop_size);
    for _ in 0..params.pop_size {
        let ratios = match &params.init {
            InitSampler::UniformSum(cfg) => uniform_sum_sample(cfg, rng)?,
            InitSampler::Naive => naive_uniform_sample(params.n_pairs, rng),
        };
        let mut genes = ratios_to_genes(&ratios);
        genes.resize(genome_len, 0);
        genomes.push(genes);
    }
    let mut points = evaluate_genomes(evaluator, &genomes, params, &mut cache, &mut evaluations)?;

    let mut archive = dedup_by_config(pareto_filter(&points));
    let mut snapshots = Vec::new();
    if params.keep_snapshots {
        snapshots.push(sorted_front(archive.clone()));
    }

    for _ in 0..params.generations {
        let ranked = rank_population(&points);
        let mut children: Vec<Vec<u8>> = Vec::with_capacity(params.pop_size);
        while children.len() < params.pop_size {
            let pa = tournament(&ranked, rng);
            let pb = tournament(&ranked, rng);
            let mut ga = genomes[pa].clone();
            let mut gb = genomes[pb].clone();
            crossover(&mut ga, &mut gb, params.crossover_prob, rng);
            for g in [&mut ga, &mut gb] {
                mutate(g, rng);
                repair(g, params.n_pairs, params.with_pruning);
            }
            children.push(ga);
            children.push(gb);
        }
        let child_points =
            evaluate_genomes(evaluator, &children, params, &mut cache, &mut evaluations)?;

        archive.extend(child_points.iter().cloned());
        archive = dedup_by_config(pareto_filter(&archive));

        let mut pool_genomes = genomes;
        pool_genomes.extend(children);
        let mut pool_points = points;
        pool_points.extend(child_points);
        let (g, p) = select_survivors(pool_genomes, pool_points, params.pop_size);
        genomes = g;
        points = p;

        if params.keep_snapshots {
            snapshots.push(sorted_front(archive.clone()));
        }
    }

    Ok(SearchOutcome { front: sorted_front(archive), snapshots, evaluations })
}
