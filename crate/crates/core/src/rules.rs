//! The five pairwise decision rules and their distortion bounds.
//!
//! Every rule is a weighted majority vote over one ordered pair. Exact score
//! ties, detected with a relative tolerance, go to the tally's tie side.
//!
//! Rules 1 and 2 count a strength equal to `tau` as weak, so their tallies use
//! [`Boundary::Exclusive`]. Rules 3 and 4 count it in the higher bucket.

use std::f64::consts::SQRT_2;
use std::fmt;

use crate::error::{Error, Result};
use crate::metric::{MetricInstance, PointId, Side, Strength};
use crate::tally::{exact_profile, pairwise_tally_with, Boundary, ExactProfile, PairwiseTally, ThresholdScheme};

/// Crossover threshold for Rule 1's strong weight.
pub const ONE_PLUS_SQRT2: f64 = 1.0 + SQRT_2;

#[derive(Debug, Clone, PartialEq)]
pub enum RuleId {
    Rule1(f64),
    Rule2(f64),
    Rule3(f64),
    Rule4(ThresholdScheme),
    Rule5,
}

/// Number of candidates a bound refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateCount {
    Two,
    Many,
}

impl CandidateCount {
    pub fn of(n: usize) -> Self {
        if n <= 2 {
            CandidateCount::Two
        } else {
            CandidateCount::Many
        }
    }
}

impl RuleId {
    /// Builds a rule from its CLI name and parameters.
    pub fn parse(name: &str, tau: Option<f64>, taus: Option<&[f64]>) -> Result<Self> {
        let need_tau = || {
            tau.ok_or_else(|| Error::InvalidParams(format!("{name} requires --tau")))
        };
        let rule = match name {
            "rule1" => RuleId::Rule1(need_tau()?),
            "rule2" => RuleId::Rule2(need_tau()?),
            "rule3" => RuleId::Rule3(need_tau()?),
            "rule4" => match (taus, tau) {
                (Some(ts), _) => RuleId::Rule4(ThresholdScheme::new(ts.to_vec())?),
                (None, Some(t)) => RuleId::Rule4(ThresholdScheme::single(t)?),
                (None, None) => {
                    return Err(Error::InvalidParams("rule4 requires --taus".into()))
                }
            },
            "rule5" => RuleId::Rule5,
            other => {
                return Err(Error::InvalidParams(format!(
                    "unknown rule `{other}`; expected rule1..rule5"
                )))
            }
        };
        rule.validate()?;
        Ok(rule)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            RuleId::Rule1(t) | RuleId::Rule3(t) if !(t.is_finite() && t >= 1.0) => Err(
                Error::InvalidThreshold(format!("tau must be finite and at least 1, got {t}")),
            ),
            RuleId::Rule2(t) if !(t.is_finite() && t > 1.0) => Err(Error::InvalidThreshold(
                format!("rule2 needs tau > 1, got {t}"),
            )),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RuleId::Rule1(_) => "rule1",
            RuleId::Rule2(_) => "rule2",
            RuleId::Rule3(_) => "rule3",
            RuleId::Rule4(_) => "rule4",
            RuleId::Rule5 => "rule5",
        }
    }

    /// Threshold parameters as a flat list (empty for Rule 5).
    pub fn params(&self) -> Vec<f64> {
        match self {
            RuleId::Rule1(t) | RuleId::Rule2(t) | RuleId::Rule3(t) => vec![*t],
            RuleId::Rule4(s) => s.taus().to_vec(),
            RuleId::Rule5 => Vec::new(),
        }
    }

    /// The scheme and boundary a rule's tallies are built with. `None` for
    /// Rule 5, which reads exact strengths.
    pub fn tally_scheme(&self) -> Result<Option<(ThresholdScheme, Boundary)>> {
        self.validate()?;
        Ok(match self {
            RuleId::Rule1(t) | RuleId::Rule2(t) => {
                Some((ThresholdScheme::ordinal_with(*t)?, Boundary::Exclusive))
            }
            RuleId::Rule3(t) => Some((ThresholdScheme::single(*t)?, Boundary::Inclusive)),
            RuleId::Rule4(s) => Some((s.clone(), Boundary::Inclusive)),
            RuleId::Rule5 => None,
        })
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params = self.params();
        if params.is_empty() {
            write!(f, "{}", self.name())
        } else {
            let ps: Vec<String> = params.iter().map(|t| crate::fmt::sig(*t)).collect();
            write!(f, "{}({})", self.name(), ps.join(","))
        }
    }
}

/// Outcome of one pairwise contest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairwiseDecision {
    pub side: Side,
    pub p_score: f64,
    pub q_score: f64,
    pub tie: bool,
}

impl PairwiseDecision {
    pub fn from_scores(p_score: f64, q_score: f64, tie_side: Side) -> Self {
        let tie = scores_tied(p_score, q_score);
        let side = if tie {
            tie_side
        } else if p_score > q_score {
            Side::P
        } else {
            Side::Q
        };
        PairwiseDecision {
            side,
            p_score,
            q_score,
            tie,
        }
    }

    pub fn winner(&self, p: PointId, q: PointId) -> PointId {
        match self.side {
            Side::P => p,
            Side::Q => q,
        }
    }
}

/// Scores within `1e-9` relative of each other count as tied.
pub fn scores_tied(p: f64, q: f64) -> bool {
    (p - q).abs() <= 1e-9 * (p.abs() + q.abs()).max(1.0)
}

fn dot(counts: &[u64], weights: &[f64]) -> f64 {
    counts.iter().zip(weights).map(|(&c, &w)| c as f64 * w).sum()
}

fn check_scheme(t: &PairwiseTally, scheme: &ThresholdScheme, boundary: Boundary) -> Result<()> {
    if &t.scheme != scheme || t.boundary != boundary {
        return Err(Error::SchemeMismatch {
            expected: format!("{:?} {:?}", scheme.taus(), boundary),
            found: format!("{:?} {:?}", t.scheme.taus(), t.boundary),
        });
    }
    Ok(())
}

/// Rule 1's strong-bucket weight.
pub fn rule1_strong_weight(tau: f64) -> f64 {
    if tau >= ONE_PLUS_SQRT2 {
        (tau + 1.0) / (tau - 1.0)
    } else {
        tau
    }
}

fn two_level(t: &PairwiseTally, strong: f64) -> PairwiseDecision {
    let weights: &[f64] = if t.scheme.m() == 1 { &[1.0] } else { &[1.0, strong] };
    PairwiseDecision::from_scores(dot(&t.a, weights), dot(&t.b, weights), t.tie_side)
}

/// Weighted majority with weak weight 1 and strong weight `tau` below
/// `1 + sqrt 2`, `(tau + 1)/(tau - 1)` from there on.
pub fn rule1_decide(t: &PairwiseTally, tau: f64) -> Result<PairwiseDecision> {
    RuleId::Rule1(tau).validate()?;
    check_scheme(t, &ThresholdScheme::ordinal_with(tau)?, Boundary::Exclusive)?;
    Ok(two_level(t, rule1_strong_weight(tau)))
}

/// Weighted majority with strong weight `(tau + 1)/(tau - 1)` for every `tau`.
pub fn rule2_decide(t: &PairwiseTally, tau: f64) -> Result<PairwiseDecision> {
    RuleId::Rule2(tau).validate()?;
    check_scheme(t, &ThresholdScheme::ordinal_with(tau)?, Boundary::Exclusive)?;
    Ok(two_level(t, (tau + 1.0) / (tau - 1.0)))
}

/// Majority among voters with strength at least `tau`; undecided voters
/// carry no weight.
pub fn rule3_decide(t: &PairwiseTally, tau: f64) -> Result<PairwiseDecision> {
    RuleId::Rule3(tau).validate()?;
    check_scheme(t, &ThresholdScheme::single(tau)?, Boundary::Inclusive)?;
    Ok(PairwiseDecision::from_scores(t.a[0] as f64, t.b[0] as f64, t.tie_side))
}

/// `max over l of (tau_l tau_{l+1} + 2 tau_{l+1} - 1)/(tau_l tau_{l+1} + 1)`.
pub fn rule4_delta(scheme: &ThresholdScheme) -> f64 {
    let m = scheme.m();
    let mut best = scheme.tau(1);
    for l in 1..m {
        let (lo, hi) = (scheme.tau(l), scheme.tau(l + 1));
        best = best.max((lo * hi + 2.0 * hi - 1.0) / (lo * hi + 1.0));
    }
    let top = scheme.top();
    best.max((top + 2.0) / top)
}

/// Largest `k` with `tau_k <= delta`, at least 1.
fn split_index(scheme: &ThresholdScheme, delta: f64) -> usize {
    let cut = delta * (1.0 + 1e-12);
    scheme.taus().partition_point(|&t| t <= cut).max(1)
}

/// `(tau_{l+1} - delta)/(tau_{l+1} - 1)`, tending to 1 as `tau_{l+1} -> inf`.
fn upper_ratio(hi: f64, delta: f64) -> f64 {
    if hi.is_infinite() {
        1.0
    } else {
        (hi - delta) / (hi - 1.0)
    }
}

/// Per-bucket weights of Rule 4, indexed `0..m` for buckets `1..=m`.
pub fn rule4_weights(scheme: &ThresholdScheme) -> Vec<f64> {
    let delta = rule4_delta(scheme);
    let k = split_index(scheme, delta);
    (1..=scheme.m())
        .map(|l| {
            let (lo, hi) = (scheme.tau(l), scheme.tau(l + 1));
            if l < k {
                (delta + 1.0) * (lo * hi - 1.0) / ((lo + 1.0) * (hi + 1.0))
            } else {
                upper_ratio(hi, delta) + (delta * lo - 1.0) / (lo + 1.0)
            }
        })
        .collect()
}

/// Right-hand side minus left-hand side of the selection condition for
/// `side`. The side may be chosen iff this is nonnegative.
pub fn condition1_slack(t: &PairwiseTally, scheme: &ThresholdScheme, side: Side) -> Result<f64> {
    check_scheme(t, scheme, Boundary::Inclusive)?;
    let delta = rule4_delta(scheme);
    let k = split_index(scheme, delta);
    let (own, opp) = t.sides(side);
    let mut slack = 0.0;
    for l in 1..=scheme.m() {
        let (lo, hi) = (scheme.tau(l), scheme.tau(l + 1));
        slack += own[l - 1] as f64 * (delta * lo - 1.0) / (lo + 1.0);
        if l < k {
            slack += opp[l - 1] as f64 * (delta - hi) / (hi + 1.0);
        } else {
            slack -= opp[l - 1] as f64 * upper_ratio(hi, delta);
        }
    }
    Ok(slack)
}

fn slack_tolerance(t: &PairwiseTally) -> f64 {
    1e-9 * (t.total() as f64).max(1.0)
}

pub fn condition1_holds(t: &PairwiseTally, scheme: &ThresholdScheme, side: Side) -> Result<bool> {
    Ok(condition1_slack(t, scheme, side)? >= -slack_tolerance(t))
}

/// Weighted majority using [`rule4_weights`]; undecided voters carry no
/// weight. The winner always satisfies the selection condition.
pub fn rule4_decide(t: &PairwiseTally, scheme: &ThresholdScheme) -> Result<PairwiseDecision> {
    check_scheme(t, scheme, Boundary::Inclusive)?;
    let w = rule4_weights(scheme);
    let decision = PairwiseDecision::from_scores(dot(&t.a, &w), dot(&t.b, &w), t.tie_side);
    #[cfg(debug_assertions)]
    {
        let dp = condition1_slack(t, scheme, Side::P)?;
        let dq = condition1_slack(t, scheme, Side::Q)?;
        let diff = decision.p_score - decision.q_score;
        debug_assert!(
            ((dp - dq) - diff).abs() <= 1e-7 * (t.total() as f64).max(1.0),
            "weights disagree with the condition difference: {} vs {diff}",
            dp - dq
        );
    }
    Ok(decision)
}

/// Rule 5's weight for one voter.
pub fn rule5_weight(s: Strength) -> f64 {
    if s.is_infinite() {
        SQRT_2
    } else if s.value() > SQRT_2 {
        (SQRT_2 * s.value() - 1.0) / (s.value() + 1.0)
    } else {
        s.value() - 1.0
    }
}

pub fn rule5_decide(prof: &ExactProfile) -> PairwiseDecision {
    let score = |ss: &[Strength]| ss.iter().map(|&s| rule5_weight(s)).sum::<f64>();
    PairwiseDecision::from_scores(score(&prof.a), score(&prof.b), prof.tie_side)
}

/// Runs `rule` on the ordered pair `(p, q)` of `inst`.
pub fn decide(inst: &MetricInstance, p: PointId, q: PointId, rule: &RuleId) -> Result<PairwiseDecision> {
    match rule.tally_scheme()? {
        None => Ok(rule5_decide(&exact_profile(inst, p, q)?)),
        Some((scheme, boundary)) => {
            let t = pairwise_tally_with(inst, p, q, &scheme, boundary)?;
            decide_tally(&t, rule)
        }
    }
}

/// Runs a threshold rule on a prepared tally.
pub fn decide_tally(t: &PairwiseTally, rule: &RuleId) -> Result<PairwiseDecision> {
    match rule {
        RuleId::Rule1(tau) => rule1_decide(t, *tau),
        RuleId::Rule2(tau) => rule2_decide(t, *tau),
        RuleId::Rule3(tau) => rule3_decide(t, *tau),
        RuleId::Rule4(s) => rule4_decide(t, s),
        RuleId::Rule5 => Err(Error::SchemeMismatch {
            expected: "exact strengths".into(),
            found: "thresholded tally".into(),
        }),
    }
}

fn rule1_two(tau: f64) -> f64 {
    ((tau + 2.0) / tau).max((3.0 * tau - 1.0) / (tau + 1.0))
}

/// Worst-case distortion guaranteed for `rule`.
///
/// For three or more candidates this is the bound for any member of the
/// uncovered set of the rule's majority graph.
pub fn bound_value(rule: &RuleId, n: CandidateCount) -> Result<f64> {
    rule.validate()?;
    let two = match rule {
        RuleId::Rule1(t) | RuleId::Rule2(t) => rule1_two(*t),
        RuleId::Rule3(t) => ((t + 2.0) / t).max(*t),
        RuleId::Rule4(s) => rule4_delta(s),
        RuleId::Rule5 => SQRT_2,
    };
    Ok(match (rule, n) {
        (_, CandidateCount::Two) => two,
        (RuleId::Rule1(_), CandidateCount::Many) => (two + 2.0).min(two * two),
        (RuleId::Rule5, CandidateCount::Many) => 2.0,
        (_, CandidateCount::Many) => two * two,
    })
}
