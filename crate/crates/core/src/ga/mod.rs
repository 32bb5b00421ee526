//! Real-coded genetic algorithm over mixed continuous/binary genomes.
//!
//! Continuous genes live in [0, 1] and are mapped onto physical bounds by the
//! codec; bits carry on/off and mode decisions. Variation is BLX-alpha on the
//! continuous part and uniform crossover on the bits, selection is by
//! tournament, and the best few individuals survive unchanged.

mod codec;

pub use codec::{decode, decode_period_into, encode, horizon_layout, GENES_PER_CHILLER, PERIOD_BITS_EXTRA, PERIOD_GENES_EXTRA};

use rand::seq::index::sample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaError {
    #[error("invalid GA configuration: {0}")]
    Config(String),
    #[error("genome layout mismatch: expected {expected:?}, got {got:?}")]
    Layout { expected: Layout, got: Layout },
    #[error("empty population")]
    EmptyPopulation,
}

/// Gene counts of a problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub continuous: usize,
    pub binary: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    /// Normalised genes in [0, 1].
    pub continuous: Vec<f64>,
    pub binary: Vec<bool>,
}

impl Genome {
    pub fn layout(&self) -> Layout {
        Layout { continuous: self.continuous.len(), binary: self.binary.len() }
    }

    pub fn random<R: Rng + ?Sized>(layout: Layout, rng: &mut R) -> Self {
        let continuous = (0..layout.continuous).map(|_| rng.gen::<f64>()).collect();
        let binary = (0..layout.binary).map(|_| rng.gen::<bool>()).collect();
        Self { continuous, binary }
    }

    /// True when every continuous gene lies in [0, 1].
    pub fn in_bounds(&self) -> bool {
        self.continuous.iter().all(|g| (0.0..=1.0).contains(g))
    }

    fn check(&self, layout: Layout) -> Result<(), GaError> {
        if self.layout() == layout {
            Ok(())
        } else {
            Err(GaError::Layout { expected: layout, got: self.layout() })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaConfig {
    pub population: usize,
    pub tournament: usize,
    /// Fraction of the population mutated each generation.
    pub mutation_rate: f64,
    pub alpha: f64,
    pub generations: usize,
    /// Individuals copied unchanged into the next generation.
    pub elitism: usize,
    /// Stop after this many generations without improvement; 0 never stops early.
    pub stall_generations: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl GaConfig {
    /// Small profile for tests and quick runs.
    pub fn desk() -> Self {
        Self {
            population: 200,
            tournament: 5,
            mutation_rate: 0.1,
            alpha: 0.5,
            generations: 150,
            elitism: 2,
            stall_generations: 30,
        }
    }

    /// Population and tournament size of the original study.
    pub fn paper_scale() -> Self {
        Self { population: 3000, tournament: 69, elitism: 30, ..Self::desk() }
    }

    pub fn validate(&self) -> Result<(), GaError> {
        let bad = |m: String| Err(GaError::Config(m));
        if self.tournament < 1 || self.population <= self.tournament {
            return bad(format!(
                "need population > tournament >= 1, got {} and {}",
                self.population, self.tournament
            ));
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return bad(format!("alpha must be >= 0, got {}", self.alpha));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return bad(format!("mutation rate must be in [0, 1], got {}", self.mutation_rate));
        }
        if self.elitism >= self.population {
            return bad(format!("elitism {} must be below the population {}", self.elitism, self.population));
        }
        Ok(())
    }

    fn mutants(&self) -> usize {
        (self.mutation_rate * self.population as f64).ceil() as usize
    }
}

/// Builds the initial population: warm starts first, verbatim, then uniform
/// random genomes.
pub fn init_population<R: Rng + ?Sized>(
    cfg: &GaConfig,
    layout: Layout,
    rng: &mut R,
    warm_starts: &[Genome],
) -> Result<Vec<Genome>, GaError> {
    let mut pop = Vec::with_capacity(cfg.population);
    for g in warm_starts.iter().take(cfg.population) {
        g.check(layout)?;
        pop.push(g.clone());
    }
    while pop.len() < cfg.population {
        pop.push(Genome::random(layout, rng));
    }
    Ok(pop)
}

/// Index of the cheapest of `k` distinct contestants drawn uniformly. Ties go
/// to the lower index.
pub fn tournament_select<R: Rng + ?Sized>(costs: &[f64], k: usize, rng: &mut R) -> Result<usize, GaError> {
    if costs.is_empty() {
        return Err(GaError::EmptyPopulation);
    }
    let k = k.clamp(1, costs.len());
    sample(rng, costs.len(), k)
        .into_iter()
        .min_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(a.cmp(&b)))
        .ok_or(GaError::EmptyPopulation)
}

/// One BLX-alpha draw from the alpha-extended interval spanned by `a` and `b`,
/// before clamping.
pub fn blx_gene<R: Rng + ?Sized>(a: f64, b: f64, alpha: f64, rng: &mut R) -> f64 {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let d = hi - lo;
    if d == 0.0 {
        return lo;
    }
    rng.gen_range((lo - alpha * d)..=(hi + alpha * d))
}

/// BLX-alpha on the continuous genes, uniform crossover on the bits.
pub fn blx_alpha_crossover<R: Rng + ?Sized>(
    p1: &Genome,
    p2: &Genome,
    alpha: f64,
    rng: &mut R,
) -> Result<Genome, GaError> {
    p2.check(p1.layout())?;
    let continuous = p1
        .continuous
        .iter()
        .zip(&p2.continuous)
        .map(|(&a, &b)| blx_gene(a, b, alpha, rng).clamp(0.0, 1.0))
        .collect();
    let binary = p1
        .binary
        .iter()
        .zip(&p2.binary)
        .map(|(&a, &b)| if rng.gen::<bool>() { a } else { b })
        .collect();
    Ok(Genome { continuous, binary })
}

/// Resamples one continuous gene or flips one bit, each branch with equal
/// probability.
pub fn mutate<R: Rng + ?Sized>(g: &mut Genome, rng: &mut R) {
    let (nc, nb) = (g.continuous.len(), g.binary.len());
    let continuous_branch = match (nc, nb) {
        (0, 0) => return,
        (_, 0) => true,
        (0, _) => false,
        _ => rng.gen::<bool>(),
    };
    if continuous_branch {
        let i = rng.gen_range(0..nc);
        g.continuous[i] = rng.gen::<f64>();
    } else {
        let i = rng.gen_range(0..nb);
        g.binary[i] = !g.binary[i];
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationStats {
    pub generation: usize,
    /// Best cost found so far.
    pub best_cost: f64,
    /// Mean of the finite costs in the current population.
    pub mean_cost: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evolution {
    pub best: Genome,
    pub best_cost: f64,
    pub history: Vec<GenerationStats>,
}

fn evaluate<F>(fitness: &F, pop: &[Genome]) -> Vec<f64>
where
    F: Fn(&Genome) -> f64 + Sync,
{
    pop.par_iter()
        .map(|g| {
            let c = fitness(g);
            if c.is_nan() {
                f64::INFINITY
            } else {
                c
            }
        })
        .collect()
}

fn stats(generation: usize, best_cost: f64, costs: &[f64], evaluations: usize) -> GenerationStats {
    let finite: Vec<f64> = costs.iter().copied().filter(|c| c.is_finite()).collect();
    let mean_cost = if finite.is_empty() {
        f64::INFINITY
    } else {
        finite.iter().sum::<f64>() / finite.len() as f64
    };
    GenerationStats { generation, best_cost, mean_cost, evaluations }
}

/// Minimises `fitness` over genomes of `layout`.
///
/// Fitness values are computed in parallel but always gathered in population
/// order, so the result depends only on `seed`.
pub fn evolve<F>(
    fitness: F,
    cfg: &GaConfig,
    layout: Layout,
    seed: u64,
    warm_starts: &[Genome],
) -> Result<Evolution, GaError>
where
    F: Fn(&Genome) -> f64 + Sync,
{
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pop = init_population(cfg, layout, &mut rng, warm_starts)?;
    let mut costs = evaluate(&fitness, &pop);
    let mut evaluations = pop.len();

    let mut order: Vec<usize> = (0..pop.len()).collect();
    let rank = |order: &mut Vec<usize>, costs: &[f64]| {
        order.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(a.cmp(&b)));
    };
    rank(&mut order, &costs);
    let mut best = pop[order[0]].clone();
    let mut best_cost = costs[order[0]];
    let mut history = vec![stats(0, best_cost, &costs, evaluations)];
    let mut stalled = 0;

    for generation in 1..=cfg.generations {
        let elite = cfg.elitism;
        let mut next: Vec<Genome> = order[..elite].iter().map(|&i| pop[i].clone()).collect();
        let mut next_costs: Vec<f64> = order[..elite].iter().map(|&i| costs[i]).collect();
        while next.len() < cfg.population {
            let a = tournament_select(&costs, cfg.tournament, &mut rng)?;
            let b = tournament_select(&costs, cfg.tournament, &mut rng)?;
            next.push(blx_alpha_crossover(&pop[a], &pop[b], cfg.alpha, &mut rng)?);
        }
        let free = cfg.population - elite;
        for i in sample(&mut rng, free, cfg.mutants().min(free)) {
            mutate(&mut next[elite + i], &mut rng);
        }
        next_costs.extend(evaluate(&fitness, &next[elite..]));
        evaluations += free;

        pop = next;
        costs = next_costs;
        rank(&mut order, &costs);
        if costs[order[0]] < best_cost {
            best_cost = costs[order[0]];
            best = pop[order[0]].clone();
            stalled = 0;
        } else {
            stalled += 1;
        }
        history.push(stats(generation, best_cost, &costs, evaluations));
        if cfg.stall_generations > 0 && stalled >= cfg.stall_generations {
            break;
        }
    }
    Ok(Evolution { best, best_cost, history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    const L: Layout = Layout { continuous: 6, binary: 4 };

    #[test]
    fn init_sizes_and_warm_start() {
        let cfg = GaConfig { population: 10, ..GaConfig::desk() };
        let pop = init_population(&cfg, L, &mut rng(1), &[]).unwrap();
        assert_eq!(pop.len(), 10);
        assert!(pop.iter().all(|g| g.in_bounds() && g.layout() == L));

        let warm = Genome { continuous: vec![0.123456789; 6], binary: vec![true, false, true, false] };
        let pop = init_population(&cfg, L, &mut rng(1), std::slice::from_ref(&warm)).unwrap();
        assert!(pop.contains(&warm));

        let a = init_population(&cfg, L, &mut rng(7), &[]).unwrap();
        let b = init_population(&cfg, L, &mut rng(7), &[]).unwrap();
        assert_eq!(a, b);

        let wrong = Genome { continuous: vec![0.5; 5], binary: vec![false; 4] };
        assert!(matches!(init_population(&cfg, L, &mut rng(1), &[wrong]), Err(GaError::Layout { .. })));
    }

    #[test]
    fn tournament_rules() {
        let costs = [5.0, 3.0, 9.0, 1.0, 7.0];
        for s in 0..20 {
            assert_eq!(tournament_select(&costs, 5, &mut rng(s)).unwrap(), 3);
        }
        let ties = [2.0, 2.0];
        assert_eq!(tournament_select(&ties, 2, &mut rng(0)).unwrap(), 0);
        let mut hits = [0usize; 5];
        let mut r = rng(3);
        for _ in 0..5000 {
            hits[tournament_select(&costs, 1, &mut r).unwrap()] += 1;
        }
        assert!(hits.iter().all(|&h| (850..1150).contains(&h)), "{hits:?}");
        assert_eq!(tournament_select(&[], 3, &mut r), Err(GaError::EmptyPopulation));
    }

    #[test]
    fn crossover_examples() {
        let p = Genome { continuous: vec![0.3, 0.9], binary: vec![true, false] };
        assert_eq!(blx_alpha_crossover(&p, &p, 0.5, &mut rng(0)).unwrap(), p);

        let mut r = rng(11);
        for _ in 0..10_000 {
            let x = blx_gene(0.2, 0.6, 0.5, &mut r);
            assert!((0.0..=0.8).contains(&x));
        }

        let a = Genome { continuous: vec![], binary: vec![false] };
        let b = Genome { continuous: vec![], binary: vec![true] };
        let ones = (0..10_000).filter(|_| blx_alpha_crossover(&a, &b, 0.5, &mut r).unwrap().binary[0]).count();
        assert!((4800..5200).contains(&ones), "{ones}");
        assert!(blx_alpha_crossover(&a, &p, 0.5, &mut r).is_err());
    }

    #[test]
    fn mutation_touches_one_gene() {
        let mut r = rng(5);
        for _ in 0..1000 {
            let g = Genome::random(L, &mut r);
            let mut m = g.clone();
            mutate(&mut m, &mut r);
            let changed = g.continuous.iter().zip(&m.continuous).filter(|(a, b)| a != b).count()
                + g.binary.iter().zip(&m.binary).filter(|(a, b)| a != b).count();
            assert_eq!(changed, 1);
            assert!(m.in_bounds());
        }
        let mut zeros = Genome { continuous: vec![], binary: vec![false; 8] };
        mutate(&mut zeros, &mut r);
        assert_eq!(zeros.binary.iter().filter(|&&b| b).count(), 1);
    }

    #[test]
    fn sphere_converges() {
        let layout = Layout { continuous: 5, binary: 0 };
        let cfg = GaConfig { population: 100, generations: 200, elitism: 1, stall_generations: 0, ..GaConfig::desk() };
        // optimum at 0.5 in every gene
        let sphere = |g: &Genome| g.continuous.iter().map(|x| (x - 0.5).powi(2)).sum::<f64>();
        let e = evolve(sphere, &cfg, layout, 42, &[]).unwrap();
        assert!(e.best_cost < 1e-3, "{}", e.best_cost);
        assert!(e.history.windows(2).all(|w| w[1].best_cost <= w[0].best_cost));
    }

    #[test]
    fn onemax_found_reliably() {
        let layout = Layout { continuous: 0, binary: 20 };
        let cfg = GaConfig { population: 100, generations: 200, elitism: 1, stall_generations: 0, ..GaConfig::desk() };
        let zeros = |g: &Genome| g.binary.iter().filter(|&&b| !b).count() as f64;
        let solved = (0..20).filter(|&s| evolve(zeros, &cfg, layout, s, &[]).unwrap().best_cost == 0.0).count();
        assert_eq!(solved, 20);
    }

    #[test]
    fn zero_generations_returns_initial_best() {
        let cfg = GaConfig { population: 30, generations: 0, ..GaConfig::desk() };
        let f = |g: &Genome| g.continuous[0];
        let e = evolve(f, &cfg, L, 9, &[]).unwrap();
        let pop = init_population(&cfg, L, &mut rng(9), &[]).unwrap();
        let best = pop.iter().map(|g| g.continuous[0]).fold(f64::INFINITY, f64::min);
        assert_eq!(e.best_cost, best);
        assert_eq!(e.history.len(), 1);
    }

    #[test]
    fn seeded_runs_repeat() {
        let cfg = GaConfig { population: 40, generations: 20, ..GaConfig::desk() };
        let f = |g: &Genome| g.continuous.iter().sum::<f64>() + g.binary.iter().filter(|&&b| b).count() as f64;
        assert_eq!(evolve(f, &cfg, L, 3, &[]).unwrap(), evolve(f, &cfg, L, 3, &[]).unwrap());
    }

    #[test]
    fn config_validation() {
        assert!(GaConfig::desk().validate().is_ok());
        assert!(GaConfig::paper_scale().validate().is_ok());
        for bad in [
            GaConfig { tournament: 0, ..GaConfig::desk() },
            GaConfig { population: 5, tournament: 5, ..GaConfig::desk() },
            GaConfig { alpha: -0.1, ..GaConfig::desk() },
            GaConfig { mutation_rate: 1.5, ..GaConfig::desk() },
            GaConfig { elitism: 200, ..GaConfig::desk() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn operators_stay_in_bounds(seed in any::<u64>(), alpha in 0.0f64..2.0) {
            let mut r = rng(seed);
            let layout = Layout { continuous: 12, binary: 6 };
            let mut a = Genome::random(layout, &mut r);
            let mut b = Genome::random(layout, &mut r);
            for _ in 0..1500 {
                let mut c = blx_alpha_crossover(&a, &b, alpha, &mut r).unwrap();
                mutate(&mut c, &mut r);
                prop_assert!(c.in_bounds());
                prop_assert_eq!(c.layout(), layout);
                a = b;
                b = c;
            }
        }

        #[test]
        fn blx_draws_inside_extended_interval(a in 0.0f64..1.0, b in 0.0f64..1.0, alpha in 0.0f64..1.0, seed in any::<u64>()) {
            let x = blx_gene(a, b, alpha, &mut rng(seed));
            let d = (a - b).abs();
            prop_assert!(x >= a.min(b) - alpha * d && x <= a.max(b) + alpha * d);
        }
    }
}
