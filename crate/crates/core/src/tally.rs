//! Threshold schemes and per-pair bucket counts.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::metric::{MetricInstance, PointId, Preference, Side, Strength};

/// Sorted thresholds `1 <= tau_1 < ... < tau_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdScheme {
    taus: Vec<f64>,
}

impl ThresholdScheme {
    pub fn new(taus: Vec<f64>) -> Result<Self> {
        if taus.is_empty() {
            return Err(Error::InvalidThreshold("a scheme needs at least one threshold".into()));
        }
        for (i, &t) in taus.iter().enumerate() {
            if !t.is_finite() || t < 1.0 {
                return Err(Error::InvalidThreshold(format!(
                    "threshold {t} must be finite and at least 1"
                )));
            }
            if i > 0 && t <= taus[i - 1] {
                return Err(Error::InvalidThreshold(format!(
                    "thresholds must be strictly increasing, got {} then {t}",
                    taus[i - 1]
                )));
            }
        }
        Ok(ThresholdScheme { taus })
    }

    pub fn single(tau: f64) -> Result<Self> {
        Self::new(vec![tau])
    }

    /// `{1, tau}`, or just `{1}` when `tau == 1`.
    pub fn ordinal_with(tau: f64) -> Result<Self> {
        if tau == 1.0 {
            Self::new(vec![1.0])
        } else {
            Self::new(vec![1.0, tau])
        }
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    pub fn m(&self) -> usize {
        self.taus.len()
    }

    /// `tau_l` for `l` in `0..=m+1`, with `tau_0 = 1/tau_1` and
    /// `tau_{m+1} = inf`.
    pub fn tau(&self, l: usize) -> f64 {
        match l {
            0 => 1.0 / self.taus[0],
            l if l <= self.m() => self.taus[l - 1],
            l if l == self.m() + 1 => f64::INFINITY,
            _ => panic!("threshold index {l} out of range for m = {}", self.m()),
        }
    }

    pub fn top(&self) -> f64 {
        self.taus[self.m() - 1]
    }

    /// Bucket index `1..=m` for a strength, or `None` for the undecided set.
    pub fn bucket(&self, s: Strength, boundary: Boundary) -> Option<usize> {
        let s = s.value();
        if s < self.taus[0] {
            return None;
        }
        let count = match boundary {
            Boundary::Inclusive => self.taus.partition_point(|&t| t <= s),
            Boundary::Exclusive => self.taus.partition_point(|&t| t < s),
        };
        Some(count.max(1))
    }
}

/// How a strength equal to a threshold is classified.
///
/// `Inclusive` puts `s == tau_l` in bucket `l`. `Exclusive` puts it in
/// bucket `l - 1`, so only strengths strictly above `tau_l` reach bucket
/// `l`. A strength equal to `tau_1` is never undecided.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Inclusive,
    Exclusive,
}

/// Bucket counts `|A_l|`, `|B_l|`, `|C|` for an ordered pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseTally {
    pub pair: Option<(PointId, PointId)>,
    /// Side that wins an exact tie in any rule applied to this tally.
    pub tie_side: Side,
    pub scheme: ThresholdScheme,
    pub boundary: Boundary,
    /// `a[l - 1] = |A_l|`.
    pub a: Vec<u64>,
    /// `b[l - 1] = |B_l|`.
    pub b: Vec<u64>,
    pub c: u64,
}

impl PairwiseTally {
    pub fn from_counts(
        scheme: ThresholdScheme,
        boundary: Boundary,
        a: Vec<u64>,
        b: Vec<u64>,
        c: u64,
        tie_side: Side,
    ) -> Result<Self> {
        if a.len() != scheme.m() || b.len() != scheme.m() {
            return Err(Error::SchemeMismatch {
                expected: format!("{} buckets per side", scheme.m()),
                found: format!("{} and {}", a.len(), b.len()),
            });
        }
        if scheme.tau(1) == 1.0 && c != 0 {
            return Err(Error::InvalidParams(
                "no voter can be undecided when the smallest threshold is 1".into(),
            ));
        }
        Ok(PairwiseTally {
            pair: None,
            tie_side,
            scheme,
            boundary,
            a,
            b,
            c,
        })
    }

    /// Tallies voters given their distances `(d(i,P), d(i,Q))`.
    pub fn from_distance_pairs(
        pairs: impl IntoIterator<Item = (f64, f64)>,
        scheme: &ThresholdScheme,
        boundary: Boundary,
        tie_side: Side,
    ) -> Self {
        let m = scheme.m();
        let mut t = PairwiseTally {
            pair: None,
            tie_side,
            scheme: scheme.clone(),
            boundary,
            a: vec![0; m],
            b: vec![0; m],
            c: 0,
        };
        for (dp, dq) in pairs {
            t.add(Preference::from_distances(dp, dq, tie_side));
        }
        t
    }

    fn add(&mut self, pref: Preference) {
        match self.scheme.bucket(pref.strength, self.boundary) {
            None => self.c += 1,
            Some(l) => match pref.side {
                Side::P => self.a[l - 1] += 1,
                Side::Q => self.b[l - 1] += 1,
            },
        }
    }

    pub fn total(&self) -> u64 {
        self.a.iter().sum::<u64>() + self.b.iter().sum::<u64>() + self.c
    }

    /// The tally for `(Q, P)`.
    pub fn swapped(&self) -> Self {
        PairwiseTally {
            pair: self.pair.map(|(p, q)| (q, p)),
            tie_side: self.tie_side.other(),
            scheme: self.scheme.clone(),
            boundary: self.boundary,
            a: self.b.clone(),
            b: self.a.clone(),
            c: self.c,
        }
    }

    /// Counts of the given side, `(own, opponent)`.
    pub fn sides(&self, side: Side) -> (&[u64], &[u64]) {
        match side {
            Side::P => (&self.a, &self.b),
            Side::Q => (&self.b, &self.a),
        }
    }

    /// CSV rows `pair,l,a,b,c`, one per bucket, with a header.
    pub fn to_csv(&self, pair_label: &str) -> String {
        let mut out = String::from("pair,l,a,b,c\n");
        for l in 0..self.scheme.m() {
            let _ = writeln!(out, "{pair_label},{},{},{},{}", l + 1, self.a[l], self.b[l], self.c);
        }
        out
    }
}

/// Tally of `inst` for the ordered pair `(p, q)` with inclusive buckets.
pub fn pairwise_tally(
    inst: &MetricInstance,
    p: PointId,
    q: PointId,
    scheme: &ThresholdScheme,
) -> Result<PairwiseTally> {
    pairwise_tally_with(inst, p, q, scheme, Boundary::Inclusive)
}

pub fn pairwise_tally_with(
    inst: &MetricInstance,
    p: PointId,
    q: PointId,
    scheme: &ThresholdScheme,
    boundary: Boundary,
) -> Result<PairwiseTally> {
    if p == q {
        return Err(Error::SameCandidate(inst.name(p).to_string()));
    }
    let mut t = PairwiseTally::from_distance_pairs(
        inst.voter_distances(p, q),
        scheme,
        boundary,
        inst.tie_side(p, q),
    );
    t.pair = Some((p, q));
    Ok(t)
}

/// Exact strengths per side for an ordered pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactProfile {
    pub pair: Option<(PointId, PointId)>,
    pub tie_side: Side,
    pub a: Vec<Strength>,
    pub b: Vec<Strength>,
}

impl ExactProfile {
    pub fn from_strengths(a: Vec<Strength>, b: Vec<Strength>, tie_side: Side) -> Self {
        ExactProfile {
            pair: None,
            tie_side,
            a,
            b,
        }
    }

    pub fn from_distance_pairs(pairs: impl IntoIterator<Item = (f64, f64)>, tie_side: Side) -> Self {
        let mut prof = ExactProfile::from_strengths(Vec::new(), Vec::new(), tie_side);
        for (dp, dq) in pairs {
            let pref = Preference::from_distances(dp, dq, tie_side);
            match pref.side {
                Side::P => prof.a.push(pref.strength),
                Side::Q => prof.b.push(pref.strength),
            }
        }
        prof
    }

    pub fn len(&self) -> usize {
        self.a.len() + self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn exact_profile(inst: &MetricInstance, p: PointId, q: PointId) -> Result<ExactProfile> {
    if p == q {
        return Err(Error::SameCandidate(inst.name(p).to_string()));
    }
    let mut prof = ExactProfile::from_distance_pairs(inst.voter_distances(p, q), inst.tie_side(p, q));
    prof.pair = Some((p, q));
    Ok(prof)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_line(voters: &[f64]) -> MetricInstance {
        let mut pts = vec![("P".to_string(), 0.0), ("Q".to_string(), 1.0)];
        let names: Vec<String> = (0..voters.len()).map(|i| format!("v{i}")).collect();
        pts.extend(names.iter().cloned().zip(voters.iter().copied()));
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        MetricInstance::line(pts, &refs, &["P", "Q"]).unwrap()
    }

    fn pq(inst: &MetricInstance) -> (PointId, PointId) {
        (inst.resolve("P").unwrap(), inst.resolve("Q").unwrap())
    }

    #[test]
    fn scheme_validation_and_sentinels() {
        assert!(ThresholdScheme::new(vec![]).is_err());
        assert!(ThresholdScheme::new(vec![0.5]).is_err());
        assert!(ThresholdScheme::new(vec![2.0, 2.0]).is_err());
        let s = ThresholdScheme::new(vec![1.5, 3.0]).unwrap();
        assert_eq!(s.tau(0), 1.0 / 1.5);
        assert_eq!(s.tau(2), 3.0);
        assert!(s.tau(3).is_infinite());
    }

    #[test]
    fn bucket_edges() {
        let s = ThresholdScheme::new(vec![1.5, 3.0]).unwrap();
        let st = |v| Strength::new(v).unwrap();
        assert_eq!(s.bucket(st(1.2), Boundary::Inclusive), None);
        assert_eq!(s.bucket(st(1.5), Boundary::Inclusive), Some(1));
        assert_eq!(s.bucket(st(3.0), Boundary::Inclusive), Some(2));
        assert_eq!(s.bucket(st(3.0), Boundary::Exclusive), Some(1));
        assert_eq!(s.bucket(st(1.5), Boundary::Exclusive), Some(1));
        assert_eq!(s.bucket(Strength::INFINITE, Boundary::Inclusive), Some(2));
    }

    #[test]
    fn ordinal_scheme_has_no_undecided() {
        let inst = random_line(&[0.1, 0.5, 0.9, -0.3, 1.7]);
        let (p, q) = pq(&inst);
        let t = pairwise_tally(&inst, p, q, &ThresholdScheme::single(1.0).unwrap()).unwrap();
        assert_eq!(t.c, 0);
        assert_eq!(t.a, vec![3]);
        assert_eq!(t.b, vec![2]);
    }

    #[test]
    fn smallest_threshold_construction_is_all_undecided() {
        let tau = 2.0;
        let x = tau / (tau + 1.0) - 1e-6;
        let inst = random_line(&[x; 6]);
        let (p, q) = pq(&inst);
        let t = pairwise_tally(&inst, p, q, &ThresholdScheme::single(tau).unwrap()).unwrap();
        assert_eq!(t.c, 6);
    }

    #[test]
    fn exact_profile_of_sqrt2_construction() {
        let r = 2f64.sqrt();
        let inst = random_line(&[1.0 / (2.0 + r), 1.0 / (2.0 + r), (3.0 + 2.0 * r) / (2.0 + r), (3.0 + 2.0 * r) / (2.0 + r)]);
        let (p, q) = pq(&inst);
        let prof = exact_profile(&inst, p, q).unwrap();
        assert_eq!((prof.a.len(), prof.b.len()), (2, 2));
        for s in prof.a.iter().chain(&prof.b) {
            assert!((s.value() - (1.0 + r)).abs() < 1e-12);
        }
    }

    #[test]
    fn equidistant_voters_go_to_tie_side() {
        let inst = random_line(&[0.5, 0.5, 0.5]);
        let (p, q) = pq(&inst);
        let prof = exact_profile(&inst, q, p).unwrap();
        assert_eq!(prof.b.len(), 3);
        assert!(prof.b.iter().all(|&s| s == Strength::ONE));
    }

    #[test]
    fn csv_dump() {
        let t = PairwiseTally::from_counts(
            ThresholdScheme::new(vec![1.5, 3.0]).unwrap(),
            Boundary::Inclusive,
            vec![1, 2],
            vec![3, 4],
            5,
            Side::P,
        )
        .unwrap();
        assert_eq!(t.to_csv("P|Q"), "pair,l,a,b,c\nP|Q,1,1,3,5\nP|Q,2,2,4,5\n");
        assert!(PairwiseTally::from_counts(
            ThresholdScheme::single(1.0).unwrap(),
            Boundary::Inclusive,
            vec![1],
            vec![1],
            1,
            Side::P
        )
        .is_err());
    }

    proptest! {
        #[test]
        fn tally_matches_direct_rebucketing(
            voters in prop::collection::vec(-1.0f64..2.0, 1..20),
        ) {
            let inst = random_line(&voters);
            let (p, q) = pq(&inst);
            let scheme = ThresholdScheme::new(vec![1.5, 3.0]).unwrap();
            let t = pairwise_tally(&inst, p, q, &scheme).unwrap();
            let (mut a, mut b, mut c) = (vec![0u64; 2], vec![0u64; 2], 0u64);
            for &v in inst.voters() {
                let (x, s) = inst.preference_strength(v, p, q).unwrap();
                let s = s.value();
                let l = if s < 1.5 { None } else if s < 3.0 { Some(0) } else { Some(1) };
                match l {
                    None => c += 1,
                    Some(l) if x == p => a[l] += 1,
                    Some(l) => b[l] += 1,
                }
            }
            prop_assert_eq!(&t.a, &a);
            prop_assert_eq!(&t.b, &b);
            prop_assert_eq!(t.c, c);
            prop_assert_eq!(t.total() as usize, voters.len());
        }

        #[test]
        fn swapping_the_pair_swaps_sides(
            voters in prop::collection::vec(-1.0f64..2.0, 1..20),
            t1 in 1.0f64..3.0,
            gap in 0.1f64..4.0,
        ) {
            let inst = random_line(&voters);
            let (p, q) = pq(&inst);
            let scheme = ThresholdScheme::new(vec![t1, t1 + gap]).unwrap();
            let fwd = pairwise_tally(&inst, p, q, &scheme).unwrap();
            let rev = pairwise_tally(&inst, q, p, &scheme).unwrap();
            prop_assert_eq!(fwd.swapped(), rev);
        }

        #[test]
        fn refinement_preserves_ground_truth_split(
            voters in prop::collection::vec(-1.0f64..2.0, 1..20),
            t1 in 1.0f64..3.0,
            extra in 3.5f64..8.0,
        ) {
            let inst = random_line(&voters);
            let (p, q) = pq(&inst);
            let coarse = pairwise_tally(&inst, p, q, &ThresholdScheme::single(t1).unwrap()).unwrap();
            let fine = pairwise_tally(&inst, p, q, &ThresholdScheme::new(vec![t1, extra]).unwrap()).unwrap();
            let prof = exact_profile(&inst, p, q).unwrap();
            let undecided_p = prof.a.iter().filter(|s| s.value() < t1).count() as u64;
            prop_assert_eq!(coarse.a.iter().sum::<u64>() + undecided_p, prof.a.len() as u64);
            prop_assert_eq!(fine.a.iter().sum::<u64>() + undecided_p, prof.a.len() as u64);
            prop_assert_eq!(coarse.c, fine.c);
        }
    }
}
