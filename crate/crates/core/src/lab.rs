//! Distortion measurement, ideal points, lambda-bounded checks and
//! worst-case instance generators.

use std::f64::consts::SQRT_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::{euclid, Location, MetricInstance, PointId, SpaceKind};
use crate::rules::{bound_value, decide, CandidateCount, RuleId, ONE_PLUS_SQRT2};
use crate::tally::{pairwise_tally, ThresholdScheme};
use crate::tournament::majority_graph;

/// Tolerance used by the lambda-bounded inequality checks.
pub const LAMBDA_TOL: f64 = 1e-9;

/// `SC(winner) / min_c SC(c)`. Infinite when the best cost is zero and the
/// winner's is not; 1 when both are zero.
pub fn actual_distortion(inst: &MetricInstance, winner: PointId) -> Result<f64> {
    let sc = inst.social_cost(winner)?;
    let best = inst
        .candidates()
        .iter()
        .map(|&c| inst.point_cost(c))
        .fold(f64::INFINITY, f64::min);
    Ok(ratio(sc, best))
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

/// How an ideal point was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Exactness {
    Exact,
    Iterative {
        tolerance: f64,
        iterations: usize,
        converged: bool,
    },
    /// Minimum over the named points of an abstract metric only.
    RestrictedToNamedPoints,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdealPoint {
    pub location: Location,
    pub cost: f64,
    pub exactness: Exactness,
}

/// Relative step tolerance of the geometric-median iteration.
pub const MEDIAN_TOL: f64 = 1e-10;
/// Iteration cap of the geometric-median iteration.
pub const MEDIAN_MAX_ITER: usize = 10_000;

/// Point of the space minimizing the total voter distance.
///
/// Lines return the lower median. Euclidean spaces run a Weiszfeld iteration
/// with the Vardi-Zhang correction at voter points; hitting the iteration cap
/// is reported through [`Exactness::Iterative`] rather than as an error.
/// Abstract metrics return the best named point.
pub fn ideal_point(inst: &MetricInstance) -> IdealPoint {
    match inst.kind() {
        SpaceKind::Line => {
            let mut xs: Vec<f64> = inst
                .voters()
                .iter()
                .map(|&v| inst.line_position(v).expect("line"))
                .collect();
            xs.sort_by(f64::total_cmp);
            let med = xs[(xs.len() - 1) / 2];
            IdealPoint {
                location: Location::Line { x: med },
                cost: xs.iter().map(|x| (x - med).abs()).sum(),
                exactness: Exactness::Exact,
            }
        }
        SpaceKind::Euclidean(dim) => {
            let pts: Vec<&[f64]> = inst
                .voters()
                .iter()
                .map(|&v| inst.coordinates(v).expect("euclidean"))
                .collect();
            let (mut y, iterations, converged) = geometric_median(&pts, dim);
            let mut cost = pts.iter().map(|p| euclid(p, &y)).sum::<f64>();
            let exactness = Exactness::Iterative {
                tolerance: MEDIAN_TOL,
                iterations,
                converged,
            };
            // Keeps the ideal cost at or below every candidate cost when the
            // iterate is off by rounding.
            for p in inst.point_ids() {
                let c = inst.point_cost(p);
                if c < cost {
                    cost = c;
                    y = inst.coordinates(p).expect("euclidean").to_vec();
                }
            }
            IdealPoint {
                location: Location::Euclidean { coords: y },
                cost,
                exactness,
            }
        }
        SpaceKind::Matrix => {
            let (best, cost) = inst
                .point_ids()
                .map(|p| (p, inst.point_cost(p)))
                .fold((PointId(0), f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
            IdealPoint {
                location: inst.location(best),
                cost,
                exactness: Exactness::RestrictedToNamedPoints,
            }
        }
    }
}

/// Weiszfeld iteration with the Vardi-Zhang step at data points. Returns the
/// final iterate, the iteration count and whether the step tolerance was met.
pub fn geometric_median(pts: &[&[f64]], dim: usize) -> (Vec<f64>, usize, bool) {
    let n = pts.len() as f64;
    let mut y: Vec<f64> = (0..dim).map(|k| pts.iter().map(|p| p[k]).sum::<f64>() / n).collect();
    let scale = pts.iter().map(|p| euclid(p, &y)).fold(0.0, f64::max);
    if scale == 0.0 {
        return (y, 0, true);
    }
    let coincide = 1e-14 * scale;
    for it in 1..=MEDIAN_MAX_ITER {
        let mut num = vec![0.0; dim];
        let mut den = 0.0;
        let mut resid = vec![0.0; dim];
        let mut eta = 0.0;
        for p in pts {
            let d = euclid(p, &y);
            if d <= coincide {
                eta += 1.0;
                continue;
            }
            for k in 0..dim {
                num[k] += p[k] / d;
                resid[k] += (p[k] - y[k]) / d;
            }
            den += 1.0 / d;
        }
        if den == 0.0 {
            return (y, it, true);
        }
        let t: Vec<f64> = num.iter().map(|x| x / den).collect();
        let next = if eta == 0.0 {
            t
        } else {
            let r = resid.iter().map(|x| x * x).sum::<f64>().sqrt();
            if r <= eta {
                return (y, it, true);
            }
            let g = eta / r;
            t.iter().zip(&y).map(|(tk, yk)| (1.0 - g) * tk + g * yk).collect()
        };
        let step = euclid(&next, &y);
        y = next;
        if step <= MEDIAN_TOL * scale {
            return (y, it, true);
        }
    }
    (y, MEDIAN_MAX_ITER, false)
}

/// `SC(winner) / SC(Z*)` together with the exactness of `Z*`.
pub fn ideal_distortion(inst: &MetricInstance, winner: PointId) -> Result<(f64, Exactness)> {
    let sc = inst.social_cost(winner)?;
    let z = ideal_point(inst);
    Ok((ratio(sc, z.cost), z.exactness))
}

/// Whether `SC(P) <= SC(Q) + lambda * SC(Z)` up to [`LAMBDA_TOL`].
pub fn lambda_check(inst: &MetricInstance, p: PointId, q: PointId, z: PointId, lambda: f64) -> Result<bool> {
    scaled_lambda_check(inst, p, q, z, 1.0, lambda)
}

/// Whether `SC(P) <= mu * SC(Q) + lambda * SC(Z)` up to [`LAMBDA_TOL`].
pub fn scaled_lambda_check(
    inst: &MetricInstance,
    p: PointId,
    q: PointId,
    z: PointId,
    mu: f64,
    lambda: f64,
) -> Result<bool> {
    if p == q {
        return Err(Error::SameCandidate(inst.name(p).to_string()));
    }
    Ok(inst.point_cost(p) <= mu * inst.point_cost(q) + lambda * inst.point_cost(z) + LAMBDA_TOL)
}

/// Coefficients `(mu, lambda)` with `SC(P) <= mu SC(Q) + lambda SC(Z)` for
/// every pairwise winner `P` of the rule. `None` if no such guarantee is
/// known for the rule.
pub fn lambda_coefficients(rule: &RuleId) -> Option<(f64, f64)> {
    match rule {
        RuleId::Rule1(_) => Some((1.0, 2.0)),
        RuleId::Rule5 => Some((1.0, ONE_PLUS_SQRT2)),
        RuleId::Rule3(t) => Some((*t, 2.0)),
        RuleId::Rule4(s) => Some((s.top(), 2.0)),
        RuleId::Rule2(_) => None,
    }
}

/// Upper bound on the ideal candidate distortion of the rule's winner given
/// its actual distortion `delta`.
///
/// Returns `+inf` when `delta` is at or below the rule's pole and for the
/// combinations that carry no guarantee: Rule 2, and Rules 3 and 4 with
/// three or more candidates.
pub fn ideal_tradeoff_bound(rule: &RuleId, delta: f64, n: CandidateCount) -> Result<f64> {
    rule.validate()?;
    let (mu, lambda) = match lambda_coefficients(rule) {
        Some(c) => c,
        None => return Ok(f64::INFINITY),
    };
    if !delta.is_finite() || delta < 1.0 {
        return Err(Error::PoleViolation { delta, pole: mu });
    }
    let multi = n == CandidateCount::Many;
    if multi && mu != 1.0 {
        return Ok(f64::INFINITY);
    }
    if delta <= mu {
        return Ok(f64::INFINITY);
    }
    let two = lambda * delta / (delta - mu);
    Ok(if multi { 2.0 * two } else { two })
}

/// Full evaluation of one rule on one instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistortionReport {
    pub rule: String,
    pub params: Vec<f64>,
    pub winner: String,
    pub social_costs: Vec<(String, f64)>,
    pub best: String,
    pub sc_winner: f64,
    pub sc_best: f64,
    pub sc_ideal: f64,
    pub ideal_exactness: Exactness,
    pub delta: f64,
    pub rho: f64,
    pub bound: f64,
    pub margin: f64,
    pub rho_bound: f64,
    pub degenerate: bool,
    /// Present for three or more candidates.
    pub uncovered_set: Option<Vec<String>>,
}

impl DistortionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// `instance,rule,params,winner,delta,rho,bound,margin`.
    pub fn to_csv_line(&self, instance_id: &str) -> String {
        use crate::fmt::sig;
        let params: Vec<String> = self.params.iter().map(|&t| sig(t)).collect();
        format!(
            "{instance_id},{},{},{},{},{},{},{}",
            self.rule,
            params.join(";"),
            self.winner,
            sig(self.delta),
            sig(self.rho),
            sig(self.bound),
            sig(self.margin)
        )
    }

    pub const CSV_HEADER: &'static str = "instance,rule,params,winner,delta,rho,bound,margin";
}

/// Winner of `rule` on `inst`: the pairwise winner for two candidates, the
/// Copeland winner of the majority graph otherwise. Also returns the
/// uncovered set when there are three or more candidates.
pub fn select_winner(inst: &MetricInstance, rule: &RuleId) -> Result<(PointId, Option<Vec<PointId>>)> {
    let cands = inst.candidates();
    if cands.len() == 2 {
        let d = decide(inst, cands[0], cands[1], rule)?;
        return Ok((d.winner(cands[0], cands[1]), None));
    }
    let g = majority_graph(inst, rule)?;
    let unc = g.uncovered_set().into_iter().map(|i| cands[i]).collect();
    Ok((cands[g.copeland_winner()], Some(unc)))
}

pub fn evaluate(inst: &MetricInstance, rule: &RuleId) -> Result<DistortionReport> {
    let (winner, unc) = select_winner(inst, rule)?;
    let costs: Vec<(PointId, f64)> = inst.candidates().iter().map(|&c| (c, inst.point_cost(c))).collect();
    let (best, sc_best) = brute_best(inst, &costs);
    let sc_winner = inst.point_cost(winner);
    let delta = ratio(sc_winner, sc_best);
    let z = ideal_point(inst);
    let n = CandidateCount::of(inst.candidates().len());
    let bound = bound_value(rule, n)?;
    let rho_bound = ideal_tradeoff_bound(rule, delta, n).unwrap_or(f64::INFINITY);
    Ok(DistortionReport {
        rule: rule.name().to_string(),
        params: rule.params(),
        winner: inst.name(winner).to_string(),
        social_costs: costs.iter().map(|&(c, s)| (inst.name(c).to_string(), s)).collect(),
        best: inst.name(best).to_string(),
        sc_winner,
        sc_best,
        sc_ideal: z.cost,
        ideal_exactness: z.exactness,
        delta,
        rho: ratio(sc_winner, z.cost),
        bound,
        margin: bound - delta,
        rho_bound,
        degenerate: sc_best == 0.0,
        uncovered_set: unc.map(|u| u.iter().map(|&c| inst.name(c).to_string()).collect()),
    })
}

fn brute_best(inst: &MetricInstance, costs: &[(PointId, f64)]) -> (PointId, f64) {
    let mut best = costs[0];
    for &(c, s) in &costs[1..] {
        if s < best.1 || (s == best.1 && inst.name(c) < inst.name(best.0)) {
            best = (c, s);
        }
    }
    best
}

/// Families of worst-case instances on the line with `P = 0`, `Q = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LowerBoundKind {
    /// Two groups of strength `1 + sqrt 2` on opposite sides.
    ExactSqrt2,
    /// Every voter just short of the smallest threshold `tau_1`.
    Smallest(f64),
    /// Half on `Q`, half just past the largest threshold `tau_m` toward `P`.
    Largest(f64),
    /// Two groups inside the bucket `[tau_l, tau_{l+1})`.
    Pair(f64, f64),
}

impl LowerBoundKind {
    /// Distortion the family approaches as `epsilon -> 0`.
    pub fn target(&self) -> f64 {
        match *self {
            LowerBoundKind::ExactSqrt2 => SQRT_2,
            LowerBoundKind::Smallest(t) => t,
            LowerBoundKind::Largest(t) => (t + 2.0) / t,
            LowerBoundKind::Pair(a, b) => (a * b + 2.0 * b - 1.0) / (a * b + 1.0),
        }
    }

    /// The rule whose tally cannot separate the two candidates on this
    /// family.
    pub fn matching_rule(&self) -> Result<RuleId> {
        Ok(match *self {
            LowerBoundKind::ExactSqrt2 => RuleId::Rule5,
            LowerBoundKind::Smallest(t) | LowerBoundKind::Largest(t) => {
                RuleId::Rule4(ThresholdScheme::single(t)?)
            }
            LowerBoundKind::Pair(a, b) => RuleId::Rule4(ThresholdScheme::new(vec![a, b])?),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            LowerBoundKind::ExactSqrt2 => "exact_sqrt2",
            LowerBoundKind::Smallest(_) => "smallest",
            LowerBoundKind::Largest(_) => "largest",
            LowerBoundKind::Pair(..) => "pair",
        }
    }
}

/// Builds a lower-bound instance with `n_per_group` voters per group (the
/// `Smallest` family has a single group).
pub fn generate_lower_bound(kind: LowerBoundKind, epsilon: f64, n_per_group: usize) -> Result<MetricInstance> {
    if n_per_group == 0 {
        return Err(Error::InvalidParams("n_per_group must be positive".into()));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) && kind != LowerBoundKind::ExactSqrt2 {
        return Err(Error::InvalidParams(format!("epsilon must be positive, got {epsilon}")));
    }
    let groups: Vec<f64> = match kind {
        LowerBoundKind::ExactSqrt2 => {
            let d = 2.0 + SQRT_2;
            vec![1.0 / d, (3.0 + 2.0 * SQRT_2) / d]
        }
        LowerBoundKind::Smallest(t) => {
            if !(t > 1.0 && t.is_finite()) {
                return Err(Error::InvalidParams(format!("smallest needs tau_1 > 1, got {t}")));
            }
            if epsilon >= (t - 1.0) / (2.0 * (t + 1.0)) {
                return Err(Error::InvalidParams(format!(
                    "epsilon {epsilon} moves the voters past the midpoint"
                )));
            }
            vec![t / (t + 1.0) - epsilon]
        }
        LowerBoundKind::Largest(t) => {
            ThresholdScheme::single(t)?;
            if epsilon >= 1.0 / (t + 1.0) {
                return Err(Error::InvalidParams(format!("epsilon {epsilon} moves the voters past P")));
            }
            vec![1.0, 1.0 / (t + 1.0) - epsilon]
        }
        LowerBoundKind::Pair(a, b) => {
            ThresholdScheme::new(vec![a, b])?;
            vec![1.0 / (a + 1.0) - epsilon, 1.0 + 1.0 / (b - 1.0) + epsilon]
        }
    };
    let mut points = vec![("P".to_string(), 0.0), ("Q".to_string(), 1.0)];
    let mut names = Vec::new();
    for x in &groups {
        for _ in 0..n_per_group {
            let name = format!("v{}", names.len());
            points.push((name.clone(), *x));
            names.push(name);
        }
    }
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let inst = MetricInstance::line(points, &refs, &["P", "Q"])?;
    check_lower_bound_buckets(&inst, kind, epsilon)?;
    Ok(inst)
}

fn check_lower_bound_buckets(inst: &MetricInstance, kind: LowerBoundKind, epsilon: f64) -> Result<()> {
    let (p, q) = (inst.resolve("P")?, inst.resolve("Q")?);
    let n = inst.voters().len() as u64;
    let ok = match kind {
        LowerBoundKind::ExactSqrt2 => true,
        LowerBoundKind::Smallest(t) => pairwise_tally(inst, p, q, &ThresholdScheme::single(t)?)?.c == n,
        LowerBoundKind::Largest(t) => {
            let tl = pairwise_tally(inst, p, q, &ThresholdScheme::single(t)?)?;
            tl.c == 0 && tl.a == tl.b
        }
        LowerBoundKind::Pair(a, b) => {
            let tl = pairwise_tally(inst, p, q, &ThresholdScheme::new(vec![a, b])?)?;
            tl.c == 0 && tl.a == vec![n / 2, 0] && tl.b == vec![n / 2, 0]
        }
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!(
            "epsilon {epsilon} is too large: voters leave their intended buckets"
        )))
    }
}

/// Single-voter, three-candidate metric on which every pairwise contest is
/// undecided under Rule 3 with threshold `tau`, so `P` wins every tie while
/// `SC(P) = tau - epsilon` and `SC(Q) = SC(Z) = 1`.
pub fn rule3_counterexample(tau: f64, epsilon: f64) -> Result<MetricInstance> {
    if !(tau > 1.0 && tau.is_finite()) || !(epsilon > 0.0 && epsilon < tau - 1.0) {
        return Err(Error::InvalidParams(format!(
            "need tau > 1 and 0 < epsilon < tau - 1, got tau = {tau}, epsilon = {epsilon}"
        )));
    }
    let far = tau - epsilon;
    // Point order: P, Q, Z, i.
    #[rustfmt::skip]
    let d = vec![
        0.0, far, far, far,
        far, 0.0, 1.0, 1.0,
        far, 1.0, 0.0, 1.0,
        far, 1.0, 1.0, 0.0,
    ];
    MetricInstance::matrix(["P", "Q", "Z", "i"], d, &["i"], &["P", "Q", "Z"])
}
