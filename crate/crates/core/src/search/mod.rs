//! Constrained evolutionary search over split-aware architectures.
//!
//! Candidates are gene vectors (one choice index per field, gate position
//! last, see [`SearchSpace::radices`]). Each generation breeds children by
//! crossover and mutation, pools them with the current survivors, drops every
//! candidate that breaks the sensor memory bound and keeps the `top_k` best by
//! the soft objective. Survivors persist, so the incumbent is never lost.

mod brute;
pub mod oracle;

use std::collections::{BTreeMap, BTreeSet};

use ordered_float::OrderedFloat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hwmodel::{evaluate_split, CostReport, HardwareConfig};
use crate::par::Exec;
use crate::splitspace::{SearchSpace, SubNetDescriptor};

pub use brute::brute_force_best;
pub use oracle::{AccuracyOracle, SurrogateOracle, SurrogateParams, TableOracle};

/// Soft objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Fastest network whose accuracy reaches the floor.
    MinLatency { accuracy_floor: f64 },
    /// Most accurate network within the latency cap (seconds).
    MaxAccuracy { latency_cap: f64 },
}

impl Default for Objective {
    fn default() -> Self {
        Objective::MinLatency { accuracy_floor: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub population: usize,
    pub generations: usize,
    pub mutation_rate: f64,
    pub crossover_rate: f64,
    /// Survivors per generation; `None` means half the population.
    pub top_k: Option<usize>,
    pub seed: u64,
    pub objective: Objective,
    /// Overrides the hardware memory bound when set.
    pub mem_sen: Option<u64>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            population: 512,
            generations: 20,
            mutation_rate: 0.1,
            crossover_rate: 0.5,
            top_k: None,
            seed: 0,
            objective: Objective::default(),
            mem_sen: None,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.population < 2 {
            return bad("population must be at least 2");
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) || !(0.0..=1.0).contains(&self.crossover_rate) {
            return bad("rates must lie in [0, 1]");
        }
        if self.top_k == Some(0) {
            return bad("top_k must be positive");
        }
        match self.objective {
            Objective::MinLatency { accuracy_floor } if !accuracy_floor.is_finite() => bad("accuracy floor must be finite"),
            Objective::MaxAccuracy { latency_cap } if latency_cap.is_nan() || latency_cap <= 0.0 => bad("latency cap must be positive"),
            _ => Ok(()),
        }
    }

    pub fn survivors(&self) -> usize {
        self.top_k.unwrap_or(self.population / 2).max(1)
    }
}

/// A scored candidate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluated {
    pub descriptor: SubNetDescriptor,
    #[serde(skip)]
    pub genes: Vec<usize>,
    pub split_index: usize,
    pub report: CostReport,
    pub accuracy: f64,
}

impl Evaluated {
    pub fn feasible(&self) -> bool {
        self.report.mem_ok
    }

    /// Ranking key, smaller is better: candidates meeting the soft constraint
    /// first, then the objective value, then the descriptor for a total order.
    pub fn key(&self, objective: Objective) -> (u8, OrderedFloat<f64>, &SubNetDescriptor) {
        let (tier, value) = match objective {
            Objective::MinLatency { accuracy_floor } if self.accuracy >= accuracy_floor => (0, self.report.overall),
            Objective::MinLatency { accuracy_floor } => (1, accuracy_floor - self.accuracy),
            Objective::MaxAccuracy { latency_cap } if self.report.overall <= latency_cap => (0, -self.accuracy),
            Objective::MaxAccuracy { .. } => (1, self.report.overall),
        };
        (tier, OrderedFloat(value), &self.descriptor)
    }

    /// Fraction of all operations executed on the sensor.
    pub fn sensor_op_share(&self) -> f64 {
        let total = self.report.head_ops + self.report.tail_ops;
        if total == 0 {
            0.0
        } else {
            self.report.head_ops as f64 / total as f64
        }
    }
}

/// Evaluate one descriptor: cost at its gated split plus oracle accuracy.
pub fn evaluate(
    space: &SearchSpace,
    hw: &HardwareConfig,
    oracle: &dyn AccuracyOracle,
    desc: &SubNetDescriptor,
) -> Result<Evaluated> {
    let genes = space.encode(desc)?;
    let net = space.materialize(desc)?;
    let split_index = space.split_index(desc)?;
    let report = evaluate_split(&net, split_index, hw)?;
    let accuracy = oracle.query(desc)?;
    Ok(Evaluated { descriptor: desc.clone(), genes, split_index, report, accuracy })
}

fn mutate_genes<R: Rng + ?Sized>(genes: &mut [usize], radices: &[usize], rate: f64, rng: &mut R) {
    for (g, &r) in genes.iter_mut().zip(radices) {
        if rng.random_bool(rate) {
            *g = rng.random_range(0..r);
        }
    }
}

fn crossover_genes<R: Rng + ?Sized>(a: &[usize], b: &[usize], rng: &mut R) -> Vec<usize> {
    a.iter().zip(b).map(|(x, y)| if rng.random_bool(0.5) { *x } else { *y }).collect()
}

/// Resample every field (the gate position as one field) with probability `rate`.
pub fn mutate<R: Rng + ?Sized>(
    desc: &SubNetDescriptor,
    space: &SearchSpace,
    rate: f64,
    rng: &mut R,
) -> Result<SubNetDescriptor> {
    let mut genes = space.encode(desc)?;
    mutate_genes(&mut genes, &space.radices(), rate, rng);
    Ok(space.decode(&genes))
}

/// Draw every field from either parent; the gate comes whole from one of them.
pub fn crossover<R: Rng + ?Sized>(
    a: &SubNetDescriptor,
    b: &SubNetDescriptor,
    space: &SearchSpace,
    rng: &mut R,
) -> Result<SubNetDescriptor> {
    let (ga, gb) = (space.encode(a)?, space.encode(b)?);
    Ok(space.decode(&crossover_genes(&ga, &gb, rng)))
}

/// Drop hard-infeasible candidates, then keep the best `k` by the objective.
pub fn select(children: &[Evaluated], k: usize, objective: Objective) -> Result<Vec<Evaluated>> {
    let mut feasible: Vec<&Evaluated> = children.iter().filter(|c| c.feasible()).collect();
    if feasible.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    feasible.sort_by(|a, b| a.key(objective).cmp(&b.key(objective)));
    Ok(feasible.into_iter().take(k).cloned().collect())
}

/// Non-dominated set in (overall latency, accuracy), sorted by latency.
pub fn pareto_front(candidates: &[Evaluated]) -> Vec<Evaluated> {
    let mut sorted: Vec<&Evaluated> = candidates.iter().filter(|c| c.feasible()).collect();
    sorted.sort_by(|a, b| {
        a.report
            .overall
            .total_cmp(&b.report.overall)
            .then(b.accuracy.total_cmp(&a.accuracy))
            .then(a.descriptor.cmp(&b.descriptor))
    });
    let mut front: Vec<Evaluated> = Vec::new();
    for c in sorted {
        let dominated = front.iter().any(|f| {
            f.report.overall <= c.report.overall
                && f.accuracy >= c.accuracy
                && (f.report.overall < c.report.overall || f.accuracy > c.accuracy)
        });
        if !dominated {
            front.push(c.clone());
        }
    }
    front
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationLog {
    pub generation: usize,
    /// Overall latency (ms) or accuracy, depending on the objective.
    pub best_objective: f64,
    pub best_accuracy: f64,
    pub best_latency_ms: f64,
    /// Hard-feasible candidates in this generation's pool.
    pub feasible_count: usize,
    /// Largest sensor memory among the survivors.
    pub survivor_peak_mem: u64,
    /// Whether the best candidate meets the accuracy floor or latency cap.
    pub on_target: bool,
}

pub const LOG_HEADER: &str = "generation,best_objective,best_accuracy,best_latency_ms,feasible_count";

impl GenerationLog {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.9},{:.9},{:.9},{}",
            self.generation, self.best_objective, self.best_accuracy, self.best_latency_ms, self.feasible_count
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    pub best: Evaluated,
    pub front: Vec<Evaluated>,
    pub log: Vec<GenerationLog>,
}

impl SearchResult {
    pub fn log_csv(&self) -> String {
        let mut out = String::from(LOG_HEADER);
        out.push('\n');
        for g in &self.log {
            out.push_str(&g.csv_row());
            out.push('\n');
        }
        out
    }

    pub fn front_json(&self) -> String {
        serde_json::to_string_pretty(&self.front).expect("front serializes")
    }
}

struct Searcher<'a> {
    space: &'a SearchSpace,
    hw: HardwareConfig,
    oracle: &'a dyn AccuracyOracle,
    exec: Exec,
    cache: BTreeMap<Vec<usize>, Evaluated>,
}

impl Searcher<'_> {
    /// Evaluate every gene vector not seen before, in parallel.
    fn fill(&mut self, genes: &BTreeSet<Vec<usize>>) -> Result<()> {
        let fresh: Vec<&Vec<usize>> = genes.iter().filter(|g| !self.cache.contains_key(*g)).collect();
        let (space, hw, oracle) = (self.space, &self.hw, self.oracle);
        let results = self.exec.map(&fresh, |g| evaluate(space, hw, oracle, &space.decode(g)));
        for r in results {
            let e = r?;
            self.cache.insert(e.genes.clone(), e);
        }
        Ok(())
    }

    fn pool(&self, genes: &BTreeSet<Vec<usize>>) -> Vec<Evaluated> {
        genes.iter().map(|g| self.cache[g].clone()).collect()
    }
}

fn log_entry(generation: usize, pool: &[Evaluated], survivors: &[Evaluated], objective: Objective) -> GenerationLog {
    let best = &survivors[0];
    let best_objective = match objective {
        Objective::MinLatency { .. } => best.report.overall * 1e3,
        Objective::MaxAccuracy { .. } => best.accuracy,
    };
    GenerationLog {
        generation,
        best_objective,
        best_accuracy: best.accuracy,
        best_latency_ms: best.report.overall * 1e3,
        feasible_count: pool.iter().filter(|c| c.feasible()).count(),
        survivor_peak_mem: survivors.iter().map(|s| s.report.peak_mem_sen).max().unwrap_or(0),
        on_target: best.key(objective).0 == 0,
    }
}

/// Seeded evolutionary search. The result does not depend on `exec`.
pub fn run(
    space: &SearchSpace,
    hw: &HardwareConfig,
    oracle: &dyn AccuracyOracle,
    cfg: &SearchConfig,
    exec: Exec,
) -> Result<SearchResult> {
    cfg.validate()?;
    space.validate()?;
    let hw = HardwareConfig { mem_sen: cfg.mem_sen.unwrap_or(hw.mem_sen), ..*hw };
    hw.validate()?;
    let radices = space.radices();
    let k = cfg.survivors();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut s = Searcher { space, hw, oracle, exec, cache: BTreeMap::new() };

    let initial: BTreeSet<Vec<usize>> =
        (0..cfg.population).map(|_| radices.iter().map(|&r| rng.random_range(0..r)).collect()).collect();
    s.fill(&initial)?;
    let pool = s.pool(&initial);
    let mut survivors = select(&pool, k, cfg.objective)?;
    let mut log = vec![log_entry(0, &pool, &survivors, cfg.objective)];

    for generation in 1..=cfg.generations {
        let mut next: BTreeSet<Vec<usize>> = survivors.iter().map(|e| e.genes.clone()).collect();
        for _ in 0..cfg.population {
            let a = &survivors[rng.random_range(0..survivors.len())].genes;
            let mut child = if rng.random_bool(cfg.crossover_rate) {
                let b = &survivors[rng.random_range(0..survivors.len())].genes;
                crossover_genes(a, b, &mut rng)
            } else {
                a.clone()
            };
            mutate_genes(&mut child, &radices, cfg.mutation_rate, &mut rng);
            next.insert(child);
        }
        s.fill(&next)?;
        let pool = s.pool(&next);
        survivors = select(&pool, k, cfg.objective)?;
        log.push(log_entry(generation, &pool, &survivors, cfg.objective));
    }

    let archive: Vec<Evaluated> = s.cache.into_values().collect();
    Ok(SearchResult { best: survivors[0].clone(), front: pareto_front(&archive), log })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hwmodel::CostReport;
    use crate::splitspace::SearchSpace;

    fn fake(overall_ms: f64, accuracy: f64, peak: u64, tag: u64) -> Evaluated {
        let space = SearchSpace::default_single_view();
        let mut descriptor = space.min_descriptor(vec![true, false, false, false]);
        descriptor.resolution = tag;
        Evaluated {
            descriptor,
            genes: vec![tag as usize],
            split_index: 1,
            report: CostReport {
                t_sen: overall_ms / 1e3,
                t_comm: 0.0,
                t_agg: 0.0,
                overall: overall_ms / 1e3,
                peak_mem_sen: peak,
                head_params: 0,
                head_ops: 0,
                tail_params: 0,
                tail_ops: 0,
                comm_bytes: 0,
                mem_ok: peak <= 2_000_000,
                feature: None,
            },
            accuracy,
        }
    }

    #[test]
    fn memory_violators_are_dropped_even_when_fastest() {
        let kids = vec![fake(0.1, 0.9, 2_100_000, 1), fake(1.0, 0.7, 1_000_000, 2)];
        let s = select(&kids, 2, Objective::MinLatency { accuracy_floor: 0.0 }).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].genes, vec![2]);
    }

    #[test]
    fn all_infeasible_is_an_error() {
        let kids = vec![fake(0.1, 0.9, 2_100_000, 1)];
        assert_eq!(select(&kids, 1, Objective::default()), Err(Error::EmptyPopulation));
    }

    #[test]
    fn hand_sorted_top_two() {
        // latency-minimizing with floor 0.7: d (0.5 ms, 0.75) < b (0.8 ms, 0.71);
        // a and c miss the floor
        let kids = vec![fake(0.3, 0.65, 10, 1), fake(0.8, 0.71, 10, 2), fake(0.2, 0.5, 10, 3), fake(0.5, 0.75, 10, 4)];
        let s = select(&kids, 2, Objective::MinLatency { accuracy_floor: 0.7 }).unwrap();
        assert_eq!(s.iter().map(|e| e.genes[0]).collect::<Vec<_>>(), vec![4, 2]);
        let s = select(&kids, 2, Objective::MaxAccuracy { latency_cap: 0.6e-3 }).unwrap();
        assert_eq!(s.iter().map(|e| e.genes[0]).collect::<Vec<_>>(), vec![4, 1]);
    }

    #[test]
    fn full_k_keeps_everyone() {
        let kids = vec![fake(0.3, 0.65, 10, 1), fake(0.8, 0.71, 10, 2)];
        assert_eq!(select(&kids, 2, Objective::default()).unwrap().len(), 2);
    }

    #[test]
    fn pareto_front_drops_dominated_points() {
        let c = vec![fake(1.0, 0.7, 10, 1), fake(2.0, 0.6, 10, 2), fake(2.0, 0.8, 10, 3), fake(0.5, 0.6, 10, 4)];
        let front: Vec<_> = pareto_front(&c).iter().map(|e| e.genes[0]).collect();
        assert_eq!(front, vec![4, 1, 3]);
    }

    #[test]
    fn config_validation() {
        assert!(SearchConfig { population: 1, ..Default::default() }.validate().is_err());
        assert!(SearchConfig { mutation_rate: 1.5, ..Default::default() }.validate().is_err());
        assert_eq!(SearchConfig::default().survivors(), 256);
    }

    #[test]
    fn rate_zero_mutation_is_identity() {
        let space = SearchSpace::default_single_view();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = space.random_descriptor(&mut rng);
        assert_eq!(mutate(&d, &space, 0.0, &mut rng).unwrap(), d);
        assert_eq!(crossover(&d, &d, &space, &mut rng).unwrap(), d);
    }
}
