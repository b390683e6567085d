//! Seeded random instances, brute-force oracles, adversarial search,
//! threshold optimization and the verification suites.

use std::f64::consts::SQRT_2;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lab::{
    evaluate, generate_lower_bound, ideal_point, ideal_tradeoff_bound, lambda_coefficients, select_winner,
    LowerBoundKind,
};
use crate::metric::{MetricInstance, PointId, Side};
use crate::rules::{
    bound_value, condition1_holds, decide, decide_tally, rule4_decide, rule4_delta, rule5_decide, CandidateCount,
    PairwiseDecision, RuleId, ONE_PLUS_SQRT2,
};
use crate::tally::{Boundary, ExactProfile, PairwiseTally, ThresholdScheme};

/// Slack allowed when comparing a distortion against its bound.
pub const BOUND_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceChoice {
    Line,
    Euclidean2d,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub rng_seed: u64,
    /// Random restarts of the hill-climbing phase.
    pub n_instances: usize,
    pub voters_max: usize,
    pub space_kind: SpaceChoice,
    pub grid_resolution: usize,
    /// Extra strength values whose line boundaries refine the grid.
    pub tau_grid: Vec<f64>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            rng_seed: 42,
            n_instances: 2000,
            voters_max: 8,
            space_kind: SpaceChoice::Line,
            grid_resolution: 400,
            tau_grid: Vec::new(),
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_resolution < 2 {
            return Err(Error::InvalidParams("grid_resolution must be at least 2".into()));
        }
        if self.voters_max == 0 || self.n_instances == 0 {
            return Err(Error::InvalidParams("voters_max and n_instances must be positive".into()));
        }
        Ok(())
    }
}

/// Independent random stream for task `index` of a run seeded with `seed`.
pub fn task_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Shape of a random instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomSpec {
    pub space: SpaceChoice,
    pub candidates: usize,
    pub voters_max: usize,
    /// Adds a non-voter, non-candidate point named `z`.
    pub extra_point: bool,
}

/// Draws an instance: line points uniform on `[-1, 2]`, plane points uniform
/// in the unit square. Candidates are `c0, c1, ...`, voters `v0, v1, ...`.
pub fn random_instance(rng: &mut impl Rng, spec: &RandomSpec) -> MetricInstance {
    let n_voters = rng.gen_range(1..=spec.voters_max);
    let mut names: Vec<String> = (0..spec.candidates).map(|i| format!("c{i}")).collect();
    names.extend((0..n_voters).map(|i| format!("v{i}")));
    if spec.extra_point {
        names.push("z".into());
    }
    let voters: Vec<&str> = names[spec.candidates..spec.candidates + n_voters]
        .iter()
        .map(String::as_str)
        .collect();
    let cands: Vec<&str> = names[..spec.candidates].iter().map(String::as_str).collect();
    loop {
        let built = match spec.space {
            SpaceChoice::Line => {
                let pts = names.iter().map(|n| (n.as_str(), rng.gen_range(-1.0..2.0)));
                MetricInstance::line(pts.collect::<Vec<_>>(), &voters, &cands)
            }
            SpaceChoice::Euclidean2d => {
                let pts = names.iter().map(|n| (n.as_str(), vec![rng.gen::<f64>(), rng.gen::<f64>()]));
                MetricInstance::euclidean(2, pts.collect::<Vec<_>>(), &voters, &cands)
            }
        };
        if let Ok(inst) = built {
            return inst;
        }
    }
}

/// Candidate of minimum social cost, ties to the smallest id.
pub fn brute_force_best(inst: &MetricInstance) -> (PointId, f64) {
    brute_force_best_among(inst, inst.candidates()).expect("instances have candidates")
}

/// Minimum social cost over an arbitrary set of points.
pub fn brute_force_best_among(inst: &MetricInstance, points: &[PointId]) -> Option<(PointId, f64)> {
    let mut best: Option<(PointId, f64)> = None;
    for &c in points {
        let cost: f64 = inst.voters().iter().map(|&v| inst.distance(v, c)).sum();
        best = match best {
            Some((b, bc)) if bc < cost || (bc == cost && inst.name(b) <= inst.name(c)) => Some((b, bc)),
            _ => Some((c, cost)),
        };
    }
    best
}

/// Worst instance found by [`adversarial_search`].
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub instance: MetricInstance,
    pub winner: String,
    pub distortion: f64,
    pub bound: f64,
    pub evaluated: u64,
}

/// Decision procedure for the fixed pair `P = 0`, `Q = 1` on a line.
struct LineJudge {
    rule: RuleId,
    scheme: Option<(ThresholdScheme, Boundary)>,
}

impl LineJudge {
    fn new(rule: &RuleId) -> Result<Self> {
        Ok(LineJudge {
            rule: rule.clone(),
            scheme: rule.tally_scheme()?,
        })
    }

    fn distortion(&self, xs: &[f64]) -> f64 {
        self.distortion_of_pairs(xs.iter().map(|&x| (x.abs(), (x - 1.0).abs())))
    }

    /// Distortion for voters given by their distances to `P` and `Q`.
    fn distortion_of_pairs(&self, pairs: impl Iterator<Item = (f64, f64)> + Clone) -> f64 {
        let d = match &self.scheme {
            None => rule5_decide(&ExactProfile::from_distance_pairs(pairs.clone(), Side::P)),
            Some((s, b)) => {
                let t = PairwiseTally::from_distance_pairs(pairs.clone(), s, *b, Side::P);
                decide_tally(&t, &self.rule).expect("scheme matches rule")
            }
        };
        let (sp, sq) = pairs.fold((0.0, 0.0), |(a, b), (dp, dq)| (a + dp, b + dq));
        let sw = if d.side == Side::P { sp } else { sq };
        ratio(sw, sp.min(sq))
    }

    /// Distortion for voters at flattened coordinates in `dim` dimensions,
    /// with `P` at the origin and `Q` at the first unit vector.
    fn distortion_at(&self, coords: &[f64], dim: usize) -> f64 {
        if dim == 1 {
            return self.distortion(coords);
        }
        self.distortion_of_pairs(coords.chunks(dim).map(|c| {
            let rest: f64 = c[1..].iter().map(|x| x * x).sum();
            ((c[0] * c[0] + rest).sqrt(), ((c[0] - 1.0).powi(2) + rest).sqrt())
        }))
    }

    /// Strength values at which this rule's classification can change.
    fn breakpoints(&self) -> Vec<f64> {
        match &self.rule {
            RuleId::Rule5 => vec![SQRT_2, ONE_PLUS_SQRT2],
            r => r.params(),
        }
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        1.0
    }
}

/// Points of the line where a voter's strength between `0` and `1` equals `t`.
fn boundary_positions(t: f64) -> Vec<f64> {
    let mut xs = vec![1.0 / (t + 1.0), t / (t + 1.0)];
    if t > 1.0 {
        xs.push(-1.0 / (t - 1.0));
        xs.push(t / (t - 1.0));
    }
    xs
}

/// Candidate voter positions explored by the exhaustive phase.
fn search_positions(judge: &LineJudge, cfg: &SearchConfig) -> Vec<f64> {
    let res = cfg.grid_resolution;
    let mut xs: Vec<f64> = (0..res).map(|i| -1.0 + 3.0 * i as f64 / (res - 1) as f64).collect();
    xs.extend([0.0, 0.5, 1.0]);
    let extra = cfg.tau_grid.iter().copied().filter(|t| t.is_finite() && *t >= 1.0);
    for t in judge.breakpoints().into_iter().chain(extra) {
        for x in boundary_positions(t) {
            for off in [0.0, 1e-7, -1e-7, 1e-9, -1e-9] {
                xs.push(x + off);
            }
        }
    }
    xs.retain(|x| x.is_finite() && x.abs() <= 1e6);
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

/// Single-voter class of a position: `(a, b, c)` tally contributions or an
/// exact preference.
#[derive(Clone)]
enum Class {
    Tally { a: Vec<u64>, b: Vec<u64>, c: u64 },
    Exact { p: bool, strength: crate::metric::Strength },
}

fn classify(judge: &LineJudge, x: f64) -> Class {
    let pair = (x.abs(), (x - 1.0).abs());
    match &judge.scheme {
        Some((s, b)) => {
            let t = PairwiseTally::from_distance_pairs([pair], s, *b, Side::P);
            Class::Tally { a: t.a, b: t.b, c: t.c }
        }
        None => {
            let prof = ExactProfile::from_distance_pairs([pair], Side::P);
            match prof.a.first() {
                Some(&s) => Class::Exact { p: true, strength: s },
                None => Class::Exact { p: false, strength: prof.b[0] },
            }
        }
    }
}

fn two_cluster_decision(judge: &LineJudge, ci: &Class, n1: u64, cj: &Class, n2: u64) -> PairwiseDecision {
    match (ci, cj, &judge.scheme) {
        (Class::Tally { a: a1, b: b1, c: c1 }, Class::Tally { a: a2, b: b2, c: c2 }, Some((s, bd))) => {
            let comb = |u: &[u64], v: &[u64]| u.iter().zip(v).map(|(x, y)| n1 * x + n2 * y).collect();
            let t = PairwiseTally::from_counts(s.clone(), *bd, comb(a1, a2), comb(b1, b2), n1 * c1 + n2 * c2, Side::P)
                .expect("consistent counts");
            decide_tally(&t, &judge.rule).expect("scheme matches rule")
        }
        (Class::Exact { p: p1, strength: s1 }, Class::Exact { p: p2, strength: s2 }, None) => {
            let mut prof = ExactProfile::from_strengths(Vec::new(), Vec::new(), Side::P);
            for (p, s, n) in [(p1, s1, n1), (p2, s2, n2)] {
                let side = if *p { &mut prof.a } else { &mut prof.b };
                side.extend(std::iter::repeat_n(*s, n as usize));
            }
            rule5_decide(&prof)
        }
        _ => unreachable!("classes come from the same judge"),
    }
}

/// Best candidate found so far, ordered by distortion and then by the
/// smallest key so that parallel reduction is deterministic.
#[derive(Debug, Clone, PartialEq)]
struct Found {
    distortion: f64,
    key: (u8, u64, u64),
    /// Flattened voter coordinates.
    voters: Vec<f64>,
    dim: usize,
}

fn better(a: Found, b: Found) -> Found {
    match a.distortion.total_cmp(&b.distortion) {
        std::cmp::Ordering::Greater => a,
        std::cmp::Ordering::Less => b,
        std::cmp::Ordering::Equal => {
            if a.key <= b.key {
                a
            } else {
                b
            }
        }
    }
}

/// Searches two-candidate line instances (`P = 0`, `Q = 1`) for the largest
/// distortion of the rule's winner.
///
/// Three phases: every two-cluster profile over a grid refined at the rule's
/// decision boundaries and at `tau_grid`, the lower-bound families clipped to
/// `voters_max`, and seeded random restarts improved by hill climbing. Only
/// the random phase honors `space_kind`; the first two stay on the line. Output depends only
/// on `rule` and `cfg`, not on the thread count.
pub fn adversarial_search(rule: &RuleId, cfg: &SearchConfig) -> Result<SearchOutcome> {
    cfg.validate()?;
    let judge = LineJudge::new(rule)?;
    let positions = search_positions(&judge, cfg);
    let classes: Vec<Class> = positions.iter().map(|&x| classify(&judge, x)).collect();
    let v = cfg.voters_max as u64;

    let exhaustive = (0..positions.len())
        .into_par_iter()
        .map(|i| {
            let mut best: Option<Found> = None;
            let mut count = 0u64;
            for j in i..positions.len() {
                let (xi, xj) = (positions[i], positions[j]);
                for n1 in 1..=v {
                    let n2_max = if j == i { 0 } else { v - n1 };
                    for n2 in 0..=n2_max {
                        count += 1;
                        let d = two_cluster_decision(&judge, &classes[i], n1, &classes[j], n2);
                        let sp = n1 as f64 * xi.abs() + n2 as f64 * xj.abs();
                        let sq = n1 as f64 * (xi - 1.0).abs() + n2 as f64 * (xj - 1.0).abs();
                        let sw = if d.side == Side::P { sp } else { sq };
                        let dist = ratio(sw, sp.min(sq));
                        if best.as_ref().is_none_or(|b| dist > b.distortion) {
                            let mut voters = vec![xi; n1 as usize];
                            voters.extend(std::iter::repeat_n(xj, n2 as usize));
                            best = Some(Found {
                                distortion: dist,
                                key: (0, i as u64, j as u64 * 1024 + n1 * 32 + n2),
                                voters,
                                dim: 1,
                            });
                        }
                    }
                }
            }
            (best, count)
        })
        .reduce(
            || (None, 0),
            |(a, ca), (b, cb)| {
                let m = match (a, b) {
                    (Some(a), Some(b)) => Some(better(a, b)),
                    (a, b) => a.or(b),
                };
                (m, ca + cb)
            },
        );
    let (mut best, mut evaluated) = exhaustive;

    for (k, voters) in generator_seeds(&judge, cfg.voters_max).into_iter().enumerate() {
        evaluated += 1;
        let f = Found {
            distortion: judge.distortion(&voters),
            key: (1, k as u64, 0),
            voters,
            dim: 1,
        };
        best = Some(match best {
            Some(b) => better(b, f),
            None => f,
        });
    }

    let random = (0..cfg.n_instances as u64)
        .into_par_iter()
        .map(|idx| hill_climb(&judge, cfg, idx))
        .reduce(|| None, |a, b| match (a, b) {
            (Some(a), Some(b)) => Some(better(a, b)),
            (a, b) => a.or(b),
        });
    evaluated += cfg.n_instances as u64 * (HILL_STEPS as u64 + 1);
    if let Some(r) = random {
        best = Some(match best {
            Some(b) => better(b, r),
            None => r,
        });
    }

    let best = best.expect("search explores at least one instance");
    let instance = pair_instance(&best.voters, best.dim)?;
    let report = evaluate(&instance, rule)?;
    Ok(SearchOutcome {
        winner: report.winner,
        distortion: report.delta,
        bound: report.bound,
        instance,
        evaluated,
    })
}

const HILL_STEPS: usize = 200;

fn hill_climb(judge: &LineJudge, cfg: &SearchConfig, idx: u64) -> Option<Found> {
    let mut rng = task_rng(cfg.rng_seed, idx);
    let dim = match cfg.space_kind {
        SpaceChoice::Line => 1,
        SpaceChoice::Euclidean2d => 2,
    };
    let n = rng.gen_range(1..=cfg.voters_max);
    let mut xs: Vec<f64> = (0..n * dim).map(|_| rng.gen_range(-1.0..2.0)).collect();
    let mut cur = judge.distortion_at(&xs, dim);
    for step in 0..HILL_STEPS {
        let width = 0.5 * (1.0 - step as f64 / HILL_STEPS as f64) + 1e-4;
        let k = rng.gen_range(0..n * dim);
        let old = xs[k];
        xs[k] = (old + rng.gen_range(-width..width)).clamp(-1.0, 2.0);
        let d = judge.distortion_at(&xs, dim);
        if d >= cur {
            cur = d;
        } else {
            xs[k] = old;
        }
    }
    Some(Found {
        distortion: cur,
        key: (2, idx, 0),
        voters: xs,
        dim,
    })
}

/// Lower-bound constructions relevant to the rule, clipped to `voters_max`.
fn generator_seeds(judge: &LineJudge, voters_max: usize) -> Vec<Vec<f64>> {
    let per_group = (voters_max / 2).max(1);
    let mut kinds = vec![LowerBoundKind::ExactSqrt2];
    let mut ts = judge.breakpoints();
    if matches!(judge.rule, RuleId::Rule1(_) | RuleId::Rule2(_)) && !ts.contains(&1.0) {
        ts.insert(0, 1.0);
    }
    for (i, &t) in ts.iter().enumerate() {
        if t > 1.0 {
            kinds.push(LowerBoundKind::Smallest(t));
        }
        kinds.push(LowerBoundKind::Largest(t));
        if let Some(&next) = ts.get(i + 1) {
            kinds.push(LowerBoundKind::Pair(t, next));
        }
    }
    let mut seeds = Vec::new();
    for kind in kinds {
        for eps in [1e-7, 1e-9] {
            let n = if matches!(kind, LowerBoundKind::Smallest(_)) { voters_max } else { per_group };
            if let Ok(inst) = generate_lower_bound(kind, eps, n) {
                seeds.push(inst.voters().iter().map(|&v| inst.line_position(v).expect("line")).collect());
            }
        }
    }
    seeds
}

/// Two-candidate instance with voters `v0, v1, ...` at flattened `coords`:
/// a line with `P = 0`, `Q = 1` for `dim == 1`, otherwise Euclidean with `P`
/// at the origin and `Q` at the first unit vector.
pub fn pair_instance(coords: &[f64], dim: usize) -> Result<MetricInstance> {
    if dim == 1 {
        return line_instance(coords);
    }
    let mut q = vec![0.0; dim];
    q[0] = 1.0;
    let mut pts = vec![("P".to_string(), vec![0.0; dim]), ("Q".to_string(), q)];
    let names: Vec<String> = (0..coords.len() / dim).map(|i| format!("v{i}")).collect();
    pts.extend(names.iter().cloned().zip(coords.chunks(dim).map(<[f64]>::to_vec)));
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    MetricInstance::euclidean(dim, pts, &refs, &["P", "Q"])
}

/// Line instance with `P = 0`, `Q = 1` and voters `v0, v1, ...` at `xs`.
pub fn line_instance(xs: &[f64]) -> Result<MetricInstance> {
    let names: Vec<String> = (0..xs.len()).map(|i| format!("v{i}")).collect();
    let mut pts = vec![("P".to_string(), 0.0), ("Q".to_string(), 1.0)];
    pts.extend(names.iter().cloned().zip(xs.iter().copied()));
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    MetricInstance::line(pts, &refs, &["P", "Q"])
}

/// Result of [`optimize_thresholds`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdOptimum {
    pub taus: Vec<f64>,
    pub bound: f64,
    pub converged: bool,
}

/// Greedy chain of `m` thresholds keeping every bound term at most `delta`,
/// or `None` when no scheme of size `m` reaches `delta`.
///
/// Each next threshold is the largest one allowed by its pair term; a larger
/// predecessor only loosens that limit, so the greedy chain is optimal.
fn threshold_chain(m: usize, delta: f64) -> Option<Vec<f64>> {
    if delta <= 1.0 {
        return None;
    }
    let far = 2.0 / (delta - 1.0);
    let mut taus = vec![delta];
    while taus.len() < m {
        let prev = *taus.last().unwrap();
        let denom = prev * (1.0 - delta) + 2.0;
        let next = if denom <= 0.0 {
            (2.0 * prev).max(far)
        } else {
            (delta + 1.0) / denom
        };
        if next <= prev {
            return None;
        }
        taus.push(next);
    }
    (*taus.last().unwrap() >= far).then_some(taus)
}

/// Minimizes the two-candidate bound over schemes with `m` thresholds by
/// bisection on the achievable bound.
pub fn optimize_thresholds(m: usize) -> Result<ThresholdOptimum> {
    if m == 0 {
        return Err(Error::InvalidParams("m must be at least 1".into()));
    }
    let (mut lo, mut hi) = (1.0f64, 3.0f64);
    let mut iters = 0;
    while hi - lo > 1e-13 && iters < 200 {
        let mid = 0.5 * (lo + hi);
        if threshold_chain(m, mid).is_some() {
            hi = mid;
        } else {
            lo = mid;
        }
        iters += 1;
    }
    let taus = threshold_chain(m, hi).ok_or_else(|| Error::InvalidParams("no feasible scheme".into()))?;
    let bound = rule4_delta(&ThresholdScheme::new(taus.clone())?);
    Ok(ThresholdOptimum {
        taus,
        bound,
        converged: hi - lo <= 1e-12,
    })
}

/// Outcome of one batch of property checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub cases: u64,
    pub violations: u64,
    /// Smallest `bound - observed` seen; negative values are violations.
    pub worst_margin: f64,
    pub first_violation: Option<String>,
}

impl CheckResult {
    fn new(name: impl Into<String>) -> Self {
        CheckResult {
            name: name.into(),
            cases: 0,
            violations: 0,
            worst_margin: f64::INFINITY,
            first_violation: None,
        }
    }

    /// Records one case whose slack is `margin`; a case fails when `ok` is
    /// false.
    fn record(&mut self, margin: f64, ok: bool, describe: impl FnOnce() -> String) {
        self.cases += 1;
        if margin < self.worst_margin {
            self.worst_margin = margin;
        }
        if !ok {
            self.violations += 1;
            if self.first_violation.is_none() {
                self.first_violation = Some(describe());
            }
        }
    }

    fn merge(mut self, other: CheckResult) -> Self {
        self.cases += other.cases;
        self.violations += other.violations;
        self.worst_margin = self.worst_margin.min(other.worst_margin);
        if self.first_violation.is_none() {
            self.first_violation = other.first_violation;
        }
        self
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Runs `body` for `n` seeded tasks in parallel and merges the per-task
/// results in task order.
fn batch<F>(names: &[String], n: u64, seed: u64, body: F) -> Vec<CheckResult>
where
    F: Fn(&mut ChaCha8Rng, &mut [CheckResult]) + Sync,
{
    let parts: Vec<Vec<CheckResult>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = task_rng(seed, i);
            let mut res: Vec<CheckResult> = names.iter().map(CheckResult::new).collect();
            body(&mut rng, &mut res);
            res
        })
        .collect();
    let init: Vec<CheckResult> = names.iter().map(CheckResult::new).collect();
    parts
        .into_iter()
        .fold(init, |acc, part| acc.into_iter().zip(part).map(|(a, b)| a.merge(b)).collect())
}

/// The rules exercised for a threshold value.
pub fn rules_for_tau(tau: f64) -> Vec<RuleId> {
    let mut rules = vec![RuleId::Rule1(tau)];
    if tau > 1.0 {
        rules.push(RuleId::Rule2(tau));
    }
    rules.push(RuleId::Rule3(tau));
    rules.push(RuleId::Rule4(ThresholdScheme::single(tau).expect("valid tau")));
    if tau > 1.0 {
        rules.push(RuleId::Rule4(ThresholdScheme::ordinal_with(tau).expect("valid tau")));
    }
    rules
}

/// Every rule exercised by the suites for a threshold grid.
pub fn rule_grid(taus: &[f64]) -> Vec<RuleId> {
    let mut rules: Vec<RuleId> = taus.iter().flat_map(|&t| rules_for_tau(t)).collect();
    rules.push(RuleId::Rule4(ThresholdScheme::new(vec![5.0 / 3.0, 3.0]).expect("valid scheme")));
    rules.push(RuleId::Rule5);
    rules
}

fn describe_instance(inst: &MetricInstance) -> String {
    inst.to_json().split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Distortion of every rule's winner against its bound on random instances.
///
/// Two-candidate instances are drawn `n_two` times per space; multi-candidate
/// instances with `candidates` candidates `n_multi` times on the line and in
/// the plane alternately.
pub fn check_bounds(seed: u64, n_two: u64, n_multi: u64, candidates: usize, voters_max: usize, taus: &[f64]) -> Vec<CheckResult> {
    let rules = rule_grid(taus);
    let mut out = Vec::new();
    for (space, stream) in [(SpaceChoice::Line, 0u64), (SpaceChoice::Euclidean2d, 1)] {
        let names: Vec<String> = rules.iter().map(|r| format!("bound/2/{space:?}/{r}").to_lowercase()).collect();
        let spec = RandomSpec {
            space,
            candidates: 2,
            voters_max,
            extra_point: false,
        };
        out.extend(batch(&names, n_two, seed.wrapping_add(stream), |rng, res| {
            let inst = random_instance(rng, &spec);
            for (rule, r) in rules.iter().zip(res.iter_mut()) {
                envelope(&inst, rule, CandidateCount::Two, r);
            }
        }));
    }
    let names: Vec<String> = rules.iter().map(|r| format!("bound/{candidates}/{r}")).collect();
    out.extend(batch(&names, n_multi, seed.wrapping_add(2), |rng, res| {
        let space = if rng.gen::<bool>() { SpaceChoice::Line } else { SpaceChoice::Euclidean2d };
        let spec = RandomSpec {
            space,
            candidates,
            voters_max,
            extra_point: false,
        };
        let inst = random_instance(rng, &spec);
        for (rule, r) in rules.iter().zip(res.iter_mut()) {
            envelope(&inst, rule, CandidateCount::of(candidates), r);
        }
    }));
    out
}

fn envelope(inst: &MetricInstance, rule: &RuleId, n: CandidateCount, r: &mut CheckResult) {
    let bound = bound_value(rule, n).expect("valid rule");
    let (winner, _) = select_winner(inst, rule).expect("valid rule");
    let sc = inst.point_cost(winner);
    let (_, best) = brute_force_best(inst);
    let delta = ratio(sc, best);
    let margin = bound - delta;
    r.record(margin, delta <= bound + BOUND_TOL, || {
        format!("delta {delta} > bound {bound} on {}", describe_instance(inst))
    });
}

/// `SC(P) <= mu SC(Q) + lambda SC(Z)` for pairwise winners `P` and a random
/// extra point `Z`.
pub fn check_lambda(seed: u64, n: u64, voters_max: usize, taus: &[f64]) -> Vec<CheckResult> {
    let rules: Vec<RuleId> = rule_grid(taus)
        .into_iter()
        .filter(|r| lambda_coefficients(r).is_some())
        .collect();
    let names: Vec<String> = rules.iter().map(|r| format!("lambda/{r}")).collect();
    batch(&names, n, seed.wrapping_add(10), |rng, res| {
        let space = if rng.gen::<bool>() { SpaceChoice::Line } else { SpaceChoice::Euclidean2d };
        let inst = random_instance(
            rng,
            &RandomSpec {
                space,
                candidates: 2,
                voters_max,
                extra_point: true,
            },
        );
        let (c0, c1) = (inst.candidates()[0], inst.candidates()[1]);
        let z = inst.resolve("z").expect("extra point");
        for (rule, r) in rules.iter().zip(res.iter_mut()) {
            let (mu, lambda) = lambda_coefficients(rule).expect("filtered");
            let d = decide(&inst, c0, c1, rule).expect("valid rule");
            let (p, q) = if d.side == Side::P { (c0, c1) } else { (c1, c0) };
            let lhs = inst.point_cost(p);
            let rhs = mu * inst.point_cost(q) + lambda * inst.point_cost(z);
            r.record(rhs - lhs, lhs <= rhs + crate::lab::LAMBDA_TOL, || {
                format!("SC(P) = {lhs} > {rhs} on {}", describe_instance(&inst))
            });
        }
    })
}

fn random_scheme(rng: &mut impl Rng) -> ThresholdScheme {
    let m = rng.gen_range(1..=4);
    let mut t = if rng.gen_bool(0.2) { 1.0 } else { rng.gen_range(1.0..3.0) };
    let mut taus = vec![t];
    for _ in 1..m {
        t += rng.gen_range(0.01..3.0);
        taus.push(t);
    }
    ThresholdScheme::new(taus).expect("increasing thresholds")
}

/// Random tally for `scheme` with bucket counts below `max_count`.
pub fn random_tally(rng: &mut impl Rng, scheme: &ThresholdScheme, max_count: u64) -> PairwiseTally {
    let m = scheme.m();
    let mut draw = |k| (0..k).map(|_| rng.gen_range(0..=max_count)).collect::<Vec<u64>>();
    let a = draw(m);
    let b = draw(m);
    let c = if scheme.tau(1) == 1.0 { 0 } else { draw(1)[0] };
    PairwiseTally::from_counts(scheme.clone(), Boundary::Inclusive, a, b, c, Side::P).expect("consistent tally")
}

/// At least one side satisfies the selection condition and the Rule 4
/// winner always does.
pub fn check_condition1(seed: u64, n: u64) -> Vec<CheckResult> {
    let names = vec!["condition1/feasible".to_string(), "condition1/rule4-winner".to_string()];
    batch(&names, n, seed.wrapping_add(20), |rng, res| {
        let scheme = random_scheme(rng);
        let t = random_tally(rng, &scheme, 20);
        let p = condition1_holds(&t, &scheme, Side::P).expect("matching scheme");
        let q = condition1_holds(&t, &scheme, Side::Q).expect("matching scheme");
        res[0].record(0.0, p || q, || format!("neither side feasible: {t:?}"));
        let d = rule4_decide(&t, &scheme).expect("matching scheme");
        let w = if d.side == Side::P { p } else { q };
        res[1].record(0.0, w, || format!("winner infeasible: {t:?}"));
    })
}

/// Ideal candidate distortion of winners against the tradeoff bounds on
/// random line instances.
pub fn check_tradeoff(seed: u64, n: u64, n_multi: u64, voters_max: usize, taus: &[f64]) -> Vec<CheckResult> {
    let rules = rule_grid(taus);
    let names: Vec<String> = rules.iter().map(|r| format!("tradeoff/2/{r}")).collect();
    let mut out = batch(&names, n, seed.wrapping_add(30), |rng, res| {
        let inst = random_instance(
            rng,
            &RandomSpec {
                space: SpaceChoice::Line,
                candidates: 2,
                voters_max,
                extra_point: false,
            },
        );
        for (rule, r) in rules.iter().zip(res.iter_mut()) {
            tradeoff_case(&inst, rule, CandidateCount::Two, r);
        }
    });
    let multi: Vec<RuleId> = rules
        .iter()
        .filter(|r| matches!(r, RuleId::Rule1(_) | RuleId::Rule5))
        .cloned()
        .collect();
    let names: Vec<String> = multi.iter().map(|r| format!("tradeoff/4/{r}")).collect();
    out.extend(batch(&names, n_multi, seed.wrapping_add(31), |rng, res| {
        let inst = random_instance(
            rng,
            &RandomSpec {
                space: SpaceChoice::Line,
                candidates: 4,
                voters_max,
                extra_point: false,
            },
        );
        for (rule, r) in multi.iter().zip(res.iter_mut()) {
            tradeoff_case(&inst, rule, CandidateCount::Many, r);
        }
    }));
    out
}

fn tradeoff_case(inst: &MetricInstance, rule: &RuleId, n: CandidateCount, r: &mut CheckResult) {
    let (winner, _) = select_winner(inst, rule).expect("valid rule");
    let sc = inst.point_cost(winner);
    let delta = ratio(sc, brute_force_best(inst).1);
    if matches!(rule, RuleId::Rule1(_)) && delta <= 1.01 {
        return;
    }
    if !delta.is_finite() {
        return;
    }
    let bound = ideal_tradeoff_bound(rule, delta, n).expect("delta >= 1");
    let rho = ratio(sc, ideal_point(inst).cost);
    r.record(bound - rho, rho <= bound + 1e-6, || {
        format!("rho {rho} > {bound} at delta {delta} on {}", describe_instance(inst))
    });
}

/// First-order sensitivity of a family's distortion to its offset.
fn epsilon_sensitivity(kind: LowerBoundKind) -> f64 {
    match kind {
        LowerBoundKind::ExactSqrt2 => 0.0,
        LowerBoundKind::Smallest(t) => (t + 1.0).powi(2),
        LowerBoundKind::Largest(t) => 2.0 * (t + 1.0).powi(2) / (t * t),
        LowerBoundKind::Pair(a, b) => {
            let sq = b / (b - 1.0) - 1.0 / (a + 1.0);
            2.0 * kind.target() / sq
        }
    }
}

/// All lower-bound families over a threshold grid.
pub fn lower_bound_grid(taus: &[f64]) -> Vec<LowerBoundKind> {
    let mut kinds = vec![LowerBoundKind::ExactSqrt2];
    for &t in taus {
        kinds.push(LowerBoundKind::Smallest(t));
        kinds.push(LowerBoundKind::Largest(t));
    }
    for (i, &a) in taus.iter().enumerate() {
        for &b in &taus[i + 1..] {
            kinds.push(LowerBoundKind::Pair(a, b));
        }
    }
    kinds
}

/// Tie-broken winner of each family reaches its target within `10 epsilon`
/// scaled by the family's offset sensitivity.
pub fn check_lower_bounds(epsilon: f64, taus: &[f64]) -> Vec<CheckResult> {
    let mut res = CheckResult::new("lowerbounds");
    for kind in lower_bound_grid(taus) {
        let outcome = generate_lower_bound(kind, epsilon, 4)
            .and_then(|inst| Ok((evaluate(&inst, &kind.matching_rule()?)?, inst)));
        match outcome {
            Ok((report, _)) => {
                let tol = 10.0 * epsilon * epsilon_sensitivity(kind).max(1.0);
                let err = (report.delta - kind.target()).abs();
                res.record(tol - err, report.winner == "P" && err <= tol, || {
                    format!("{kind:?}: delta {} vs target {}", report.delta, kind.target())
                });
            }
            Err(e) => res.record(f64::NEG_INFINITY, false, || format!("{kind:?}: {e}")),
        }
    }
    vec![res]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Bounds,
    Lambda,
    Condition1,
    Tradeoff,
    LowerBounds,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "bounds" => Suite::Bounds,
            "lambda" => Suite::Lambda,
            "condition1" => Suite::Condition1,
            "tradeoff" => Suite::Tradeoff,
            "lowerbounds" => Suite::LowerBounds,
            "all" => Suite::All,
            other => {
                return Err(Error::InvalidParams(format!(
                    "unknown suite `{other}`; expected bounds, lambda, condition1, tradeoff, lowerbounds or all"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckResult::passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_table(&self) -> String {
        use crate::fmt::sig;
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(5).max(5);
        let mut out = format!("{:<width$}  {:>8}  {:>10}  {:>16}  status\n", "check", "cases", "violations", "worst margin");
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{:<width$}  {:>8}  {:>10}  {:>16}  {}",
                c.name,
                c.cases,
                c.violations,
                sig(c.worst_margin),
                if c.passed() { "pass" } else { "FAIL" }
            );
        }
        out
    }
}

/// Runs a named suite at full size with a fixed seed.
pub fn verify_suite(suite: Suite, seed: u64) -> SuiteReport {
    let taus = [1.0, 2.0, ONE_PLUS_SQRT2, 5.0];
    let mut checks = Vec::new();
    let all = suite == Suite::All;
    if all || suite == Suite::Bounds {
        checks.extend(check_bounds(seed, 10_000, 2_000, 4, 20, &taus));
    }
    if all || suite == Suite::Lambda {
        checks.extend(check_lambda(seed, 5_000, 20, &taus));
    }
    if all || suite == Suite::Condition1 {
        checks.extend(check_condition1(seed, 100_000));
    }
    if all || suite == Suite::Tradeoff {
        checks.extend(check_tradeoff(seed, 5_000, 2_000, 20, &taus));
    }
    if all || suite == Suite::LowerBounds {
        checks.extend(check_lower_bounds(1e-6, &[1.5, 2.0, ONE_PLUS_SQRT2, 4.0]));
    }
    let name = match suite {
        Suite::Bounds => "bounds",
        Suite::Lambda => "lambda",
        Suite::Condition1 => "condition1",
        Suite::Tradeoff => "tradeoff",
        Suite::LowerBounds => "lowerbounds",
        Suite::All => "all",
    };
    SuiteReport {
        suite: name.into(),
        seed,
        checks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let a = hi - g * (hi - lo);
            let b = lo + g * (hi - lo);
            if f(a) <= f(b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        let x = 0.5 * (lo + hi);
        (x, f(x))
    }

    fn delta_of(taus: &[f64]) -> f64 {
        ThresholdScheme::new(taus.to_vec()).map_or(f64::INFINITY, |s| rule4_delta(&s))
    }

    #[test]
    fn single_threshold_optimum_matches_golden_section() {
        let opt = optimize_thresholds(1).unwrap();
        let (x, v) = golden(|t| delta_of(&[t]), 1.0, 10.0);
        assert!((opt.taus[0] - x).abs() < 1e-6);
        assert!((opt.bound - v).abs() < 1e-9);
        assert!((opt.bound - 2.0).abs() < 1e-9);
    }

    #[test]
    fn two_threshold_optimum_matches_nested_search() {
        let opt = optimize_thresholds(2).unwrap();
        let inner = |t1: f64| golden(|t2| delta_of(&[t1, t1 + t2]), 1e-6, 20.0).1;
        let (_, v) = golden(inner, 1.0, 3.0);
        assert!((opt.bound - v).abs() < 1e-7, "{} vs {v}", opt.bound);
        assert!((opt.taus[0] - 5.0 / 3.0).abs() < 1e-6 && (opt.taus[1] - 3.0).abs() < 1e-5);
    }

    #[test]
    fn optimum_is_monotone_and_above_sqrt2() {
        let mut prev = f64::INFINITY;
        for m in 1..=10 {
            let opt = optimize_thresholds(m).unwrap();
            assert!(opt.converged);
            assert!(opt.bound <= prev + 1e-12);
            assert!(opt.bound >= SQRT_2);
            prev = opt.bound;
        }
    }

    #[test]
    fn brute_force_best_on_sqrt2_instance() {
        let inst = generate_lower_bound(LowerBoundKind::ExactSqrt2, 1e-6, 3).unwrap();
        let (c, cost) = brute_force_best(&inst);
        assert_eq!(inst.name(c), "Q");
        assert!((cost - 3.0 * SQRT_2).abs() < 1e-12);
        let p = inst.resolve("P").unwrap();
        assert_eq!(brute_force_best_among(&inst, &[p]).unwrap().0, p);
        assert!(brute_force_best_among(&inst, &[]).is_none());
    }

    #[test]
    fn random_instances_are_reproducible() {
        let spec = RandomSpec {
            space: SpaceChoice::Euclidean2d,
            candidates: 3,
            voters_max: 6,
            extra_point: true,
        };
        let a = random_instance(&mut task_rng(9, 3), &spec);
        let b = random_instance(&mut task_rng(9, 3), &spec);
        assert_eq!(a, b);
        assert_eq!(a.candidates().len(), 3);
    }

    #[test]
    fn small_search_is_deterministic_and_within_bound() {
        let cfg = SearchConfig {
            n_instances: 50,
            voters_max: 4,
            grid_resolution: 40,
            ..SearchConfig::default()
        };
        let a = adversarial_search(&RuleId::Rule3(2.0), &cfg).unwrap();
        let b = adversarial_search(&RuleId::Rule3(2.0), &cfg).unwrap();
        assert_eq!(a.instance, b.instance);
        assert!(a.distortion <= a.bound + BOUND_TOL);
        assert!(a.distortion >= 0.95 * a.bound);
    }

    #[test]
    fn plane_random_phase_stays_within_bound() {
        let cfg = SearchConfig {
            n_instances: 40,
            voters_max: 5,
            grid_resolution: 20,
            space_kind: SpaceChoice::Euclidean2d,
            tau_grid: vec![3.0],
            ..SearchConfig::default()
        };
        let out = adversarial_search(&RuleId::Rule5, &cfg).unwrap();
        assert!(out.distortion <= out.bound + BOUND_TOL);
        let inst = pair_instance(&[0.2, 0.3, 1.5, -0.5], 2).unwrap();
        assert_eq!(inst.voters().len(), 2);
    }

    #[test]
    fn suite_names_parse() {
        assert_eq!("all".parse::<Suite>().unwrap(), Suite::All);
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn lower_bound_suite_passes() {
        let r = check_lower_bounds(1e-6, &[1.5, 2.0, ONE_PLUS_SQRT2, 4.0]);
        assert!(r[0].passed(), "{:?}", r[0].first_violation);
    }
}
