//! Verification campaigns: random class members must be minimally rigid,
//! count-preserving class-breaking mutants must be flexible, and every
//! member must reduce to a base through rigid intermediates.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contexts::{assemble, ContextSpec};
use crate::error::{Error, Result};
use crate::graph::{BiColouredGraph, Colour, ColouredEdge};
use crate::moves::{find_reduction, random_construct, reduce_fully, Reduction};
use crate::numeric::{
    decide_rigidity, generic_placement, numerical_rank, trial_seed, RigidityStatus, RigidityVerdict, DEFAULT_TRIALS,
};
use crate::sparsity::{class_check, SparsityClass, BRUTE_FORCE_LIMIT};

/// Largest graph a campaign may sample.
pub const CAMPAIGN_LIMIT: usize = BRUTE_FORCE_LIMIT;
/// Draws allowed per negative sample or per rejection-sampled member.
pub const MUTATION_ATTEMPTS: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "theorem", rename_all = "snake_case")]
pub enum TheoremId {
    Sphere23,
    Cylinder22,
    MixedPlane { q: f64 },
    DirectionLengthLq { q: f64 },
    /// Supplementary: checked alongside the main characterisations but not one of them.
    DirectionLengthEuclidean,
    Separable { blocks: Vec<u8> },
}

impl TheoremId {
    pub fn context(&self) -> ContextSpec {
        match self {
            TheoremId::Sphere23 => ContextSpec::Sphere,
            TheoremId::Cylinder22 => ContextSpec::Cylinder,
            TheoremId::MixedPlane { q } => ContextSpec::MixedLqPlane { q: *q },
            TheoremId::DirectionLengthLq { q } => ContextSpec::DirectionLengthLq { q: *q },
            TheoremId::DirectionLengthEuclidean => ContextSpec::DirectionLengthEuclidean,
            TheoremId::Separable { blocks } => ContextSpec::Separable { blocks: blocks.clone() },
        }
    }

    pub fn class(&self) -> SparsityClass {
        self.context().class()
    }

    pub fn supplementary(&self) -> bool {
        matches!(self, TheoremId::DirectionLengthEuclidean)
    }

    pub fn name(&self) -> String {
        match self {
            TheoremId::Sphere23 => "sphere".into(),
            TheoremId::Cylinder22 => "cylinder".into(),
            other => other.context().name(),
        }
    }

    fn validate(&self) -> Result<()> {
        self.context().validate()
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for TheoremId {
    type Err = Error;

    /// Accepts the context names: `sphere`, `cylinder`, `mixed:<q>`,
    /// `dl-lq:<q>`, `dl-euclid`, `separable:<d0>,<d1>`.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.parse::<ContextSpec>()? {
            ContextSpec::Sphere => TheoremId::Sphere23,
            ContextSpec::Cylinder => TheoremId::Cylinder22,
            ContextSpec::MixedLqPlane { q } => TheoremId::MixedPlane { q },
            ContextSpec::DirectionLengthLq { q } => TheoremId::DirectionLengthLq { q },
            ContextSpec::DirectionLengthEuclidean => TheoremId::DirectionLengthEuclidean,
            ContextSpec::Separable { blocks } => TheoremId::Separable { blocks },
        })
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Positive,
    Negative,
    Reduction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub direction: Direction,
    pub index: usize,
    pub detail: String,
    pub graph: Option<BiColouredGraph>,
    /// First trial placement, as a placement file.
    pub placement: Option<String>,
    pub verdict: Option<RigidityVerdict>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub theorem: String,
    pub context: ContextSpec,
    pub class: SparsityClass,
    pub supplementary: bool,
    pub seed: u64,
    pub n_min: usize,
    pub n_max: usize,
    pub positive_samples: usize,
    pub positive_pass: usize,
    pub negative_samples: usize,
    pub negative_pass: usize,
    /// Smallest `sigma_rank / sigma_1` over passing positive samples.
    pub min_gap: Option<f64>,
    /// Largest `sigma_{rank+1} / sigma_1` over passing negative samples.
    pub max_negative_tail: Option<f64>,
    pub failures: Vec<Failure>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
            && self.positive_pass == self.positive_samples
            && self.negative_pass == self.negative_samples
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization is infallible")
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct CampaignOptions {
    pub trials: usize,
    pub tol: f64,
}

impl Default for CampaignOptions {
    fn default() -> Self {
        CampaignOptions { trials: DEFAULT_TRIALS, tol: crate::numeric::DEFAULT_TOL }
    }
}

fn check_range(range: &RangeInclusive<usize>) -> Result<()> {
    if range.is_empty() || *range.start() == 0 {
        return Err(Error::IllegalMove(format!("empty size range {range:?}")));
    }
    if *range.end() > CAMPAIGN_LIMIT {
        return Err(Error::GuardExceeded { n: *range.end(), limit: CAMPAIGN_LIMIT });
    }
    Ok(())
}

fn stream_seed(seed: u64, stream: u64, index: usize) -> u64 {
    trial_seed(seed ^ stream.wrapping_mul(0xA076_1D64_78BD_642F), index as u64)
}

const POSITIVE: u64 = 1;
const NEGATIVE: u64 = 2;
const RECOLOUR: u64 = 3;

fn smallest_size(id: &TheoremId) -> usize {
    match id {
        TheoremId::Sphere23 => 2,
        TheoremId::Separable { blocks } if blocks.contains(&2) => 2,
        _ => 1,
    }
}

fn random_tree(n: usize, colour: Colour, rng: &mut ChaCha8Rng) -> Vec<ColouredEdge> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    (1..n).map(|i| ColouredEdge::new(order[i], order[rng.random_range(0..i)], colour)).collect()
}

fn monochrome_block(n: usize, dim: u8, colour: Colour, rng: &mut ChaCha8Rng) -> Result<Vec<ColouredEdge>> {
    if dim == 1 {
        return Ok(random_tree(n, colour, rng));
    }
    let (g, _) = random_construct(&SparsityClass::Tight23, n, rng.random())?;
    Ok(g.edges().map(|e| ColouredEdge::new(e.u, e.v, colour)).collect())
}

/// The class member used as positive sample `index` of a campaign on `n`
/// vertices.
pub fn class_member(id: &TheoremId, n: usize, seed: u64) -> Result<BiColouredGraph> {
    id.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match id {
        TheoremId::Sphere23 => Ok(random_construct(&SparsityClass::Tight23, n, seed)?.0),
        TheoremId::Cylinder22 => Ok(random_construct(&SparsityClass::Tight22, n, seed)?.0),
        TheoremId::MixedPlane { .. } | TheoremId::DirectionLengthLq { .. } => {
            Ok(random_construct(&SparsityClass::Tight22BlueLimited, n, seed)?.0)
        }
        TheoremId::DirectionLengthEuclidean => {
            for _ in 0..MUTATION_ATTEMPTS {
                let (g, _) = random_construct(&SparsityClass::Tight22BlueLimited, n, rng.random())?;
                if class_check(&g, &SparsityClass::Tight22MonoLimited)?.verdict {
                    return Ok(g);
                }
            }
            Err(Error::SamplingFailed(MUTATION_ATTEMPTS))
        }
        TheoremId::Separable { blocks } => {
            let mut edges = monochrome_block(n, blocks[0], Colour::Blue, &mut rng)?;
            edges.extend(monochrome_block(n, blocks[1], Colour::Red, &mut rng)?);
            BiColouredGraph::from_edges(n, edges)
        }
    }
}

fn absent_edge(g: &BiColouredGraph, rng: &mut ChaCha8Rng) -> Option<ColouredEdge> {
    let absent: Vec<ColouredEdge> = BiColouredGraph::complete(g.n(), false).edges().filter(|e| !g.contains(e)).copied().collect();
    absent.choose(rng).copied()
}

/// Moves one edge of `g` to a random absent position.
pub fn replace_edge(g: &BiColouredGraph, rng: &mut ChaCha8Rng) -> Option<BiColouredGraph> {
    let edges: Vec<ColouredEdge> = g.edges().copied().collect();
    let removed = *edges.choose(rng)?;
    let mut h = g.clone();
    h.remove_edge(&removed);
    let added = absent_edge(&h, rng).filter(|e| *e != removed)?;
    h.add_edge(added).ok()?;
    Some(h)
}

/// Makes the four given vertices span a monochrome `colour` K4, then restores
/// the edge count of `g` using edges outside that K4.
pub fn plant_k4(g: &BiColouredGraph, quad: [usize; 4], colour: Colour, rng: &mut ChaCha8Rng) -> Option<BiColouredGraph> {
    let mut h = g.clone();
    let mut k4 = Vec::new();
    for (i, &a) in quad.iter().enumerate() {
        for &b in &quad[i + 1..] {
            let e = ColouredEdge::new(a, b, colour);
            if !h.contains(&e) {
                h.add_edge(e).ok()?;
            }
            k4.push(e);
        }
    }
    while h.edge_count() > g.edge_count() {
        let spare: Vec<ColouredEdge> = h.edges().filter(|e| !k4.contains(e)).copied().collect();
        let e = *spare.choose(rng)?;
        h.remove_edge(&e);
    }
    while h.edge_count() < g.edge_count() {
        let e = absent_edge(&h, rng)?;
        h.add_edge(e).ok()?;
    }
    Some(h)
}

fn mutant_colours(id: &TheoremId) -> Option<&'static [Colour]> {
    match id {
        TheoremId::MixedPlane { .. } | TheoremId::DirectionLengthLq { .. } => Some(&[Colour::Blue]),
        TheoremId::DirectionLengthEuclidean => Some(&Colour::ALL),
        _ => None,
    }
}

fn negative_range(id: &TheoremId, range: &RangeInclusive<usize>) -> RangeInclusive<usize> {
    let floor = match id {
        TheoremId::Separable { blocks } if blocks == &[1, 1] => 3,
        _ => 4,
    };
    (*range.start()).max(floor)..=(*range.end()).max(floor)
}

/// A graph with the class's Maxwell count that fails the class predicate:
/// a planted monochrome K4 for the limited classes, one edge moved elsewhere
/// for the others.
pub fn class_breaking_mutant(id: &TheoremId, n: usize, seed: u64) -> Result<BiColouredGraph> {
    let class = id.class();
    let ctx = id.context();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MUTATION_ATTEMPTS {
        let base = class_member(id, n, rng.random())?;
        let mutant = match mutant_colours(id) {
            Some(colours) if n >= 4 => {
                let mut vertices: Vec<usize> = (0..n).collect();
                vertices.shuffle(&mut rng);
                let colour = *colours.choose(&mut rng).expect("nonempty colour list");
                plant_k4(&base, [vertices[0], vertices[1], vertices[2], vertices[3]], colour, &mut rng)
            }
            _ => replace_edge(&base, &mut rng),
        };
        let Some(mutant) = mutant else { continue };
        if ctx.maxwell_count(n) == mutant.edge_count() as i64 && !class_check(&mutant, &class)?.verdict {
            return Ok(mutant);
        }
    }
    Err(Error::SamplingFailed(MUTATION_ATTEMPTS))
}

fn pick_size(range: &RangeInclusive<usize>, seed: u64) -> usize {
    ChaCha8Rng::seed_from_u64(seed).random_range(range.clone())
}

fn failure_dump(
    ctx: &ContextSpec,
    direction: Direction,
    index: usize,
    detail: String,
    graph: Option<&BiColouredGraph>,
    verdict: Option<RigidityVerdict>,
    seed: u64,
) -> Failure {
    let placement = graph.and_then(|g| generic_placement(ctx, g, trial_seed(seed, 0)).ok()).map(|p| p.to_json(ctx));
    Failure { direction, index, detail, graph: graph.cloned(), placement, verdict }
}

enum Outcome {
    Pass(f64),
    Fail(Failure),
}

fn judge(
    ctx: &ContextSpec,
    direction: Direction,
    index: usize,
    g: Result<BiColouredGraph>,
    want: RigidityStatus,
    seed: u64,
    opts: CampaignOptions,
) -> Outcome {
    let g = match g {
        Ok(g) => g,
        Err(e) => return Outcome::Fail(failure_dump(ctx, direction, index, format!("sampling: {e}"), None, None, seed)),
    };
    match decide_rigidity(ctx, &g, opts.trials, seed, opts.tol) {
        Ok(v) if v.status == want => {
            let measure = if want == RigidityStatus::Flexible { v.best.tail() } else { v.gap() };
            Outcome::Pass(measure)
        }
        Ok(v) => Outcome::Fail(failure_dump(
            ctx,
            direction,
            index,
            format!("expected {want}, got {}", v.status),
            Some(&g),
            Some(v),
            seed,
        )),
        Err(e) => Outcome::Fail(failure_dump(ctx, direction, index, format!("decision: {e}"), Some(&g), None, seed)),
    }
}

fn fold_measures(outcomes: &[Outcome], pick: fn(f64, f64) -> f64) -> Option<f64> {
    outcomes.iter().filter_map(|o| if let Outcome::Pass(m) = o { Some(*m) } else { None }).reduce(pick)
}

/// Runs `samples` positive and `samples` negative trials for `id` with sizes
/// drawn from `range`.
pub fn verify_theorem(
    id: &TheoremId,
    samples: usize,
    range: RangeInclusive<usize>,
    seed: u64,
    opts: CampaignOptions,
) -> Result<VerificationReport> {
    id.validate()?;
    check_range(&range)?;
    let ctx = id.context();
    let positive_range = (*range.start()).max(smallest_size(id))..=*range.end();
    let negative_range = negative_range(id, &range);
    check_range(&negative_range)?;

    let positives: Vec<Outcome> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let s = stream_seed(seed, POSITIVE, i);
            let g = class_member(id, pick_size(&positive_range, s), s);
            judge(&ctx, Direction::Positive, i, g, RigidityStatus::MinimallyRigid, s, opts)
        })
        .collect();
    let negatives: Vec<Outcome> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let s = stream_seed(seed, NEGATIVE, i);
            let g = class_breaking_mutant(id, pick_size(&negative_range, s), s);
            judge(&ctx, Direction::Negative, i, g, RigidityStatus::Flexible, s, opts)
        })
        .collect();

    let count = |o: &[Outcome]| o.iter().filter(|x| matches!(x, Outcome::Pass(_))).count();
    let min_gap = fold_measures(&positives, f64::min);
    let max_negative_tail = fold_measures(&negatives, f64::max);
    let (positive_pass, negative_pass) = (count(&positives), count(&negatives));
    let failures = positives.into_iter().chain(negatives).filter_map(|o| if let Outcome::Fail(f) = o { Some(f) } else { None }).collect();
    Ok(VerificationReport {
        theorem: id.name(),
        context: ctx,
        class: id.class(),
        supplementary: id.supplementary(),
        seed,
        n_min: *range.start(),
        n_max: *range.end(),
        positive_samples: samples,
        positive_pass,
        negative_samples: samples,
        negative_pass,
        min_gap,
        max_negative_tail,
        failures,
    })
}

/// Reduces every positive sample of [`verify_theorem`] (same seed, same
/// sizes) to a base, checking the class and minimal rigidity of every
/// intermediate graph and that the trace replays to the sample.
pub fn cross_check_reduction(
    id: &TheoremId,
    samples: usize,
    range: RangeInclusive<usize>,
    seed: u64,
    opts: CampaignOptions,
) -> Result<VerificationReport> {
    id.validate()?;
    check_range(&range)?;
    let ctx = id.context();
    let class = id.class();
    let positive_range = (*range.start()).max(smallest_size(id))..=*range.end();
    let outcomes: Vec<Option<Failure>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let s = stream_seed(seed, POSITIVE, i);
            let fail = |detail: String, g: Option<&BiColouredGraph>, v: Option<RigidityVerdict>| {
                Some(failure_dump(&ctx, Direction::Reduction, i, detail, g, v, s))
            };
            let g = match class_member(id, pick_size(&positive_range, s), s) {
                Ok(g) => g,
                Err(e) => return fail(format!("sampling: {e}"), None, None),
            };
            let trace = match reduce_fully(&g, &class) {
                Ok(t) => t,
                Err(e) => return fail(format!("reduction: {e}"), Some(&g), None),
            };
            if !matches!(find_reduction(&trace.base, &class), Ok(Reduction::Base)) {
                return fail(format!("reduction stopped at a non-base graph {}", trace.base), Some(&g), None);
            }
            let chain = match trace.replay_all() {
                Ok(c) => c,
                Err(e) => return fail(format!("replay: {e}"), Some(&g), None),
            };
            if chain.last() != Some(&g) {
                return fail("trace replay differs from the sample".into(), Some(&g), None);
            }
            for (step, h) in chain.iter().enumerate() {
                match class_check(h, &class) {
                    Ok(r) if r.verdict => {}
                    _ => return fail(format!("intermediate {step} leaves the class"), Some(h), None),
                }
                match decide_rigidity(&ctx, h, opts.trials, s ^ step as u64, opts.tol) {
                    Ok(v) if v.status == RigidityStatus::MinimallyRigid => {}
                    Ok(v) => return fail(format!("intermediate {step} is {}", v.status), Some(h), Some(v)),
                    Err(e) => return fail(format!("intermediate {step}: {e}"), Some(h), None),
                }
            }
            None
        })
        .collect();
    let failures: Vec<Failure> = outcomes.into_iter().flatten().collect();
    Ok(VerificationReport {
        theorem: id.name(),
        context: ctx,
        class,
        supplementary: id.supplementary(),
        seed,
        n_min: *range.start(),
        n_max: *range.end(),
        positive_samples: samples,
        positive_pass: samples - failures.len(),
        negative_samples: 0,
        negative_pass: 0,
        min_gap: None,
        max_negative_tail: None,
        failures,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColourIndifferenceReport {
    pub seed: u64,
    pub samples: usize,
    pub pass: usize,
    pub recolourings_checked: usize,
    pub failures: Vec<Failure>,
}

impl ColourIndifferenceReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.pass == self.samples
    }
}

fn recolour(g: &BiColouredGraph, target: &ColouredEdge) -> Result<BiColouredGraph> {
    BiColouredGraph::from_edges(
        g.n(),
        g.edges().map(|e| if e == target { ColouredEdge::new(e.u, e.v, e.colour.other()) } else { *e }),
    )
}

/// On the sphere, random (2,3)-tight graphs with random colourings have rank
/// `3n - 3` at every trial placement, and recolouring any single edge leaves
/// the rank unchanged.
pub fn sphere_colour_indifference(
    samples: usize,
    range: RangeInclusive<usize>,
    seed: u64,
    opts: CampaignOptions,
) -> Result<ColourIndifferenceReport> {
    check_range(&range)?;
    let range = (*range.start()).max(2)..=*range.end();
    let ctx = ContextSpec::Sphere;
    let outcomes: Vec<(usize, Option<Failure>)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let s = stream_seed(seed, RECOLOUR, i);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let n = rng.random_range(range.clone());
            let fail = |detail: String, g: Option<&BiColouredGraph>| {
                Some(failure_dump(&ctx, Direction::Positive, i, detail, g, None, s))
            };
            let g = match random_construct(&SparsityClass::Tight23, n, rng.random()) {
                Ok((g, _)) => g,
                Err(e) => return (0, fail(format!("sampling: {e}"), None)),
            };
            let g = match BiColouredGraph::from_edges(
                n,
                g.edges().map(|e| ColouredEdge::new(e.u, e.v, if rng.random_bool(0.5) { Colour::Blue } else { Colour::Red })),
            ) {
                Ok(g) => g,
                Err(e) => return (0, fail(format!("recolouring: {e}"), Some(&g))),
            };
            let required = ctx.required_rank(n);
            let mut checked = 0;
            for t in 0..opts.trials.max(1) {
                let p = match generic_placement(&ctx, &g, trial_seed(s, t as u64)) {
                    Ok(p) => p,
                    Err(e) => return (checked, fail(format!("placement: {e}"), Some(&g))),
                };
                let rank = |h: &BiColouredGraph| assemble(&ctx, h, &p).and_then(|m| numerical_rank(&m.matrix, opts.tol));
                match rank(&g) {
                    Ok(r) if r.rank == required => {}
                    Ok(r) => return (checked, fail(format!("trial {t}: rank {} != {required}", r.rank), Some(&g))),
                    Err(e) => return (checked, fail(format!("trial {t}: {e}"), Some(&g))),
                }
                for e in g.edges() {
                    let h = match recolour(&g, e) {
                        Ok(h) => h,
                        Err(err) => return (checked, fail(format!("recolouring {e}: {err}"), Some(&g))),
                    };
                    match rank(&h) {
                        Ok(r) if r.rank == required => checked += 1,
                        Ok(r) => return (checked, fail(format!("trial {t}: recolouring {e} gives rank {}", r.rank), Some(&g))),
                        Err(err) => return (checked, fail(format!("trial {t}: recolouring {e}: {err}"), Some(&g))),
                    }
                }
            }
            (checked, None)
        })
        .collect();
    let recolourings_checked = outcomes.iter().map(|(c, _)| c).sum();
    let failures: Vec<Failure> = outcomes.into_iter().filter_map(|(_, f)| f).collect();
    Ok(ColourIndifferenceReport { seed, samples, pass: samples - failures.len(), recolourings_checked, failures })
}
