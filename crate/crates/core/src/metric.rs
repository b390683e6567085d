//! Voters and candidates as points of a validated metric space.
//!
//! A [`MetricInstance`] owns a set of named points, a distance oracle over
//! them, and the lists of voter and candidate ids. Every metric axiom is
//! checked when the instance is built; after that the instance is immutable.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for metric-axiom validation and float equality tests.
pub const METRIC_TOL: f64 = 1e-9;

/// Index of a named point inside one [`MetricInstance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PointId(pub(crate) usize);

impl PointId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Which candidate of an ordered pair `(P, Q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    P,
    Q,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::P => Side::Q,
            Side::Q => Side::P,
        }
    }
}

/// Preference strength of a voter for the candidate it prefers.
///
/// Always at least 1. `+inf` encodes a voter sitting on its preferred
/// candidate.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Strength(f64);

impl Strength {
    pub const ONE: Strength = Strength(1.0);
    pub const INFINITE: Strength = Strength(f64::INFINITY);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || value < 1.0 {
            return Err(Error::InvalidParams(format!(
                "preference strength must be >= 1, got {value}"
            )));
        }
        Ok(Strength(value))
    }

    /// Ratio `far / near` of the two distances, `+inf` when `near` is zero.
    pub fn from_distances(near: f64, far: f64) -> Self {
        debug_assert!(near <= far);
        if near == far {
            Strength::ONE
        } else if near == 0.0 {
            Strength::INFINITE
        } else {
            Strength((far / near).max(1.0))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }
}

/// One voter's report for an ordered pair: the side it prefers and how
/// strongly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preference {
    pub side: Side,
    pub strength: Strength,
}

impl Preference {
    /// Classifies a voter from its distances to `P` and `Q`. Exact
    /// equidistance goes to `tie_side` with strength 1.
    pub fn from_distances(to_p: f64, to_q: f64, tie_side: Side) -> Self {
        if to_p < to_q {
            Preference {
                side: Side::P,
                strength: Strength::from_distances(to_p, to_q),
            }
        } else if to_q < to_p {
            Preference {
                side: Side::Q,
                strength: Strength::from_distances(to_q, to_p),
            }
        } else {
            Preference {
                side: tie_side,
                strength: Strength::ONE,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Space {
    Line(Vec<f64>),
    Euclidean { dim: usize, coords: Vec<f64> },
    Matrix { n: usize, distances: Vec<f64> },
}

/// The kind of space an instance lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    Line,
    Euclidean(usize),
    Matrix,
}

/// A location in an instance's space, used for ideal points and extra
/// witnesses.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Location {
    Line { x: f64 },
    Euclidean { coords: Vec<f64> },
    Point { id: String },
}

/// Serializable description of an instance. This is the on-disk format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub space: SpaceSpec,
    pub voters: Vec<String>,
    pub candidates: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum SpaceSpec {
    Line {
        positions: BTreeMap<String, f64>,
    },
    Euclidean {
        dim: usize,
        coordinates: BTreeMap<String, Vec<f64>>,
    },
    Matrix {
        ids: Vec<String>,
        distances: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct MetricInstance {
    names: Vec<String>,
    index: HashMap<String, PointId>,
    space: Space,
    voters: Vec<PointId>,
    candidates: Vec<PointId>,
}

impl PartialEq for MetricInstance {
    fn eq(&self, other: &Self) -> bool {
        self.names == other.names
            && self.space == other.space
            && self.voters == other.voters
            && self.candidates == other.candidates
    }
}

impl MetricInstance {
    /// Validates a description and builds the instance.
    pub fn build(spec: InstanceSpec) -> Result<Self> {
        let (names, space) = match spec.space {
            SpaceSpec::Line { positions } => {
                let (names, xs): (Vec<_>, Vec<_>) = positions.into_iter().unzip();
                (names, Space::Line(xs))
            }
            SpaceSpec::Euclidean { dim, coordinates } => {
                if dim == 0 {
                    return Err(Error::InvalidInstance(
                        "space.dim: euclidean dimension must be at least 1".into(),
                    ));
                }
                let mut names = Vec::with_capacity(coordinates.len());
                let mut coords = Vec::with_capacity(coordinates.len() * dim);
                for (name, c) in coordinates {
                    if c.len() != dim {
                        return Err(Error::InvalidInstance(format!(
                            "space.coordinates.{name}: expected {dim} coordinates, got {}",
                            c.len()
                        )));
                    }
                    names.push(name);
                    coords.extend(c);
                }
                (names, Space::Euclidean { dim, coords })
            }
            SpaceSpec::Matrix { ids, distances } => {
                let n = ids.len();
                if distances.len() != n * n {
                    return Err(Error::InvalidInstance(format!(
                        "space.distances: expected {} entries for {n} ids, got {}",
                        n * n,
                        distances.len()
                    )));
                }
                (ids, Space::Matrix { n, distances })
            }
        };
        Self::assemble(names, space, &spec.voters, &spec.candidates)
    }

    /// Parses the JSON instance format.
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: InstanceSpec = serde_json::from_str(text).map_err(|e| {
            Error::Parse(format!("line {} column {}: {e}", e.line(), e.column()))
        })?;
        Self::build(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_spec()).expect("instance spec serializes")
    }

    pub fn to_spec(&self) -> InstanceSpec {
        let space = match &self.space {
            Space::Line(xs) => SpaceSpec::Line {
                positions: self.names.iter().cloned().zip(xs.iter().copied()).collect(),
            },
            Space::Euclidean { dim, coords } => SpaceSpec::Euclidean {
                dim: *dim,
                coordinates: self
                    .names
                    .iter()
                    .cloned()
                    .zip(coords.chunks(*dim).map(<[f64]>::to_vec))
                    .collect(),
            },
            Space::Matrix { distances, .. } => SpaceSpec::Matrix {
                ids: self.names.clone(),
                distances: distances.clone(),
            },
        };
        InstanceSpec {
            space,
            voters: self.voters.iter().map(|&v| self.name(v).to_string()).collect(),
            candidates: self
                .candidates
                .iter()
                .map(|&c| self.name(c).to_string())
                .collect(),
        }
    }

    /// Points on a line.
    pub fn line<S: Into<String>>(
        points: impl IntoIterator<Item = (S, f64)>,
        voters: &[&str],
        candidates: &[&str],
    ) -> Result<Self> {
        let (names, xs): (Vec<String>, Vec<f64>) =
            points.into_iter().map(|(n, x)| (n.into(), x)).unzip();
        Self::assemble(names, Space::Line(xs), voters, candidates)
    }

    /// Points in `dim`-dimensional Euclidean space.
    pub fn euclidean<S: Into<String>>(
        dim: usize,
        points: impl IntoIterator<Item = (S, Vec<f64>)>,
        voters: &[&str],
        candidates: &[&str],
    ) -> Result<Self> {
        let coordinates = points.into_iter().map(|(n, c)| (n.into(), c)).collect();
        Self::build(InstanceSpec {
            space: SpaceSpec::Euclidean { dim, coordinates },
            voters: voters.iter().map(|s| s.to_string()).collect(),
            candidates: candidates.iter().map(|s| s.to_string()).collect(),
        })
    }

    /// An explicit distance matrix, row-major over `ids`.
    pub fn matrix<S: Into<String>>(
        ids: impl IntoIterator<Item = S>,
        distances: Vec<f64>,
        voters: &[&str],
        candidates: &[&str],
    ) -> Result<Self> {
        let ids: Vec<String> = ids.into_iter().map(Into::into).collect();
        Self::build(InstanceSpec {
            space: SpaceSpec::Matrix { ids, distances },
            voters: voters.iter().map(|s| s.to_string()).collect(),
            candidates: candidates.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn assemble<S: AsRef<str>>(
        names: Vec<String>,
        space: Space,
        voters: &[S],
        candidates: &[S],
    ) -> Result<Self> {
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if index.insert(name.clone(), PointId(i)).is_some() {
                return Err(Error::InvalidInstance(format!("duplicate point id `{name}`")));
            }
        }
        let resolve = |id: &str| index.get(id).copied().ok_or_else(|| Error::UnknownId(id.into()));
        let voters = voters
            .iter()
            .map(|v| resolve(v.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        let candidates = candidates
            .iter()
            .map(|c| resolve(c.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        if voters.is_empty() {
            return Err(Error::InvalidInstance("voters: at least one voter is required".into()));
        }
        if candidates.len() < 2 {
            return Err(Error::InvalidInstance(
                "candidates: at least two candidates are required".into(),
            ));
        }
        let inst = MetricInstance {
            names,
            index,
            space,
            voters,
            candidates,
        };
        inst.validate()?;
        Ok(inst)
    }

    fn validate(&self) -> Result<()> {
        match &self.space {
            Space::Line(xs) => {
                for (name, x) in self.names.iter().zip(xs) {
                    if !x.is_finite() {
                        return Err(Error::InvalidInstance(format!(
                            "space.positions.{name}: position must be finite"
                        )));
                    }
                }
            }
            Space::Euclidean { dim, coords } => {
                for (name, c) in self.names.iter().zip(coords.chunks(*dim)) {
                    if c.iter().any(|x| !x.is_finite()) {
                        return Err(Error::InvalidInstance(format!(
                            "space.coordinates.{name}: coordinates must be finite"
                        )));
                    }
                }
            }
            Space::Matrix { n, distances } => self.validate_matrix(*n, distances)?,
        }
        for (i, &a) in self.candidates.iter().enumerate() {
            for &b in &self.candidates[i + 1..] {
                if a == b || self.distance(a, b) <= 0.0 {
                    return Err(Error::DuplicateCandidatePoint(
                        self.name(a).into(),
                        self.name(b).into(),
                    ));
                }
            }
        }
        Ok(())
    }

    fn validate_matrix(&self, n: usize, d: &[f64]) -> Result<()> {
        let name = |i: usize| self.names[i].clone();
        for i in 0..n {
            for j in 0..n {
                let v = d[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::MetricViolation {
                        points: vec![name(i), name(j)],
                        reason: format!("distance {v} is negative or not finite"),
                    });
                }
                if i == j && v > METRIC_TOL {
                    return Err(Error::MetricViolation {
                        points: vec![name(i)],
                        reason: format!("self-distance {v} is not zero"),
                    });
                }
                if (v - d[j * n + i]).abs() > METRIC_TOL {
                    return Err(Error::MetricViolation {
                        points: vec![name(i), name(j)],
                        reason: format!("asymmetric: {v} vs {}", d[j * n + i]),
                    });
                }
            }
        }
        for x in 0..n {
            for y in 0..n {
                let direct = d[x * n + y];
                for z in 0..n {
                    let via = d[x * n + z] + d[z * n + y];
                    if direct > via + METRIC_TOL {
                        return Err(Error::MetricViolation {
                            points: vec![name(x), name(z), name(y)],
                            reason: format!(
                                "d({},{}) = {direct} > d({},{}) + d({},{}) = {via}",
                                self.names[x],
                                self.names[y],
                                self.names[x],
                                self.names[z],
                                self.names[z],
                                self.names[y]
                            ),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn resolve(&self, id: &str) -> Result<PointId> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownId(id.to_string()))
    }

    /// Resolves an id that must name a candidate.
    pub fn candidate(&self, id: &str) -> Result<PointId> {
        let p = self.resolve(id)?;
        if self.is_candidate(p) {
            Ok(p)
        } else {
            Err(Error::NotACandidate(id.to_string()))
        }
    }

    pub fn name(&self, p: PointId) -> &str {
        &self.names[p.0]
    }

    pub fn point_ids(&self) -> impl Iterator<Item = PointId> + '_ {
        (0..self.names.len()).map(PointId)
    }

    pub fn num_points(&self) -> usize {
        self.names.len()
    }

    pub fn voters(&self) -> &[PointId] {
        &self.voters
    }

    pub fn candidates(&self) -> &[PointId] {
        &self.candidates
    }

    pub fn is_candidate(&self, p: PointId) -> bool {
        self.candidates.contains(&p)
    }

    pub fn kind(&self) -> SpaceKind {
        match &self.space {
            Space::Line(_) => SpaceKind::Line,
            Space::Euclidean { dim, .. } => SpaceKind::Euclidean(*dim),
            Space::Matrix { .. } => SpaceKind::Matrix,
        }
    }

    /// Coordinate of a point on a line instance.
    pub fn line_position(&self, p: PointId) -> Option<f64> {
        match &self.space {
            Space::Line(xs) => Some(xs[p.0]),
            _ => None,
        }
    }

    /// Coordinates of a point in a Euclidean instance.
    pub fn coordinates(&self, p: PointId) -> Option<&[f64]> {
        match &self.space {
            Space::Euclidean { dim, coords } => Some(&coords[p.0 * dim..(p.0 + 1) * dim]),
            _ => None,
        }
    }

    pub fn location(&self, p: PointId) -> Location {
        match &self.space {
            Space::Line(xs) => Location::Line { x: xs[p.0] },
            Space::Euclidean { .. } => Location::Euclidean {
                coords: self.coordinates(p).expect("euclidean").to_vec(),
            },
            Space::Matrix { .. } => Location::Point {
                id: self.name(p).to_string(),
            },
        }
    }

    pub fn distance(&self, a: PointId, b: PointId) -> f64 {
        match &self.space {
            Space::Line(xs) => (xs[a.0] - xs[b.0]).abs(),
            Space::Euclidean { dim, coords } => euclid(
                &coords[a.0 * dim..(a.0 + 1) * dim],
                &coords[b.0 * dim..(b.0 + 1) * dim],
            ),
            Space::Matrix { n, distances } => distances[a.0 * n + b.0],
        }
    }

    pub fn distance_by_id(&self, a: &str, b: &str) -> Result<f64> {
        Ok(self.distance(self.resolve(a)?, self.resolve(b)?))
    }

    /// Sum of voter distances to any point (candidate or not).
    pub fn point_cost(&self, p: PointId) -> f64 {
        self.voters.iter().map(|&v| self.distance(v, p)).sum()
    }

    /// Social cost of a candidate.
    pub fn social_cost(&self, c: PointId) -> Result<f64> {
        if !self.is_candidate(c) {
            return Err(Error::NotACandidate(self.name(c).to_string()));
        }
        Ok(self.point_cost(c))
    }

    /// Side that wins exact ties between `p` and `q`: the lexicographically
    /// smaller id.
    pub fn tie_side(&self, p: PointId, q: PointId) -> Side {
        if self.name(p) <= self.name(q) {
            Side::P
        } else {
            Side::Q
        }
    }

    /// Voter distances `(d(i,P), d(i,Q))` for every voter.
    pub fn voter_distances(
        &self,
        p: PointId,
        q: PointId,
    ) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.voters
            .iter()
            .map(move |&v| (self.distance(v, p), self.distance(v, q)))
    }

    /// Which of `p`, `q` the voter prefers and with what strength.
    pub fn preference_strength(
        &self,
        voter: PointId,
        p: PointId,
        q: PointId,
    ) -> Result<(PointId, Strength)> {
        if p == q {
            return Err(Error::SameCandidate(self.name(p).to_string()));
        }
        let pref = Preference::from_distances(
            self.distance(voter, p),
            self.distance(voter, q),
            self.tie_side(p, q),
        );
        let winner = match pref.side {
            Side::P => p,
            Side::Q => q,
        };
        Ok((winner, pref.strength))
    }

    /// The same instance with every distance multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "scale factor must be positive and finite, got {factor}"
            )));
        }
        let space = match &self.space {
            Space::Line(xs) => Space::Line(xs.iter().map(|x| x * factor).collect()),
            Space::Euclidean { dim, coords } => Space::Euclidean {
                dim: *dim,
                coords: coords.iter().map(|x| x * factor).collect(),
            },
            Space::Matrix { n, distances } => Space::Matrix {
                n: *n,
                distances: distances.iter().map(|x| x * factor).collect(),
            },
        };
        Ok(MetricInstance {
            space,
            ..self.clone()
        })
    }

    /// The instance restricted to a subset of its candidates.
    pub fn with_candidates(&self, candidates: &[PointId]) -> Result<Self> {
        if candidates.len() < 2 {
            return Err(Error::InvalidInstance(
                "candidates: at least two candidates are required".into(),
            ));
        }
        let inst = MetricInstance {
            candidates: candidates.to_vec(),
            ..self.clone()
        };
        inst.validate()?;
        Ok(inst)
    }
}

pub(crate) fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

impl fmt::Display for MetricInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind() {
            SpaceKind::Line => "line".to_string(),
            SpaceKind::Euclidean(d) => format!("euclidean{d}d"),
            SpaceKind::Matrix => "matrix".to_string(),
        };
        write!(
            f,
            "{kind} instance: {} voters, {} candidates",
            self.voters.len(),
            self.candidates.len()
        )
    }
}
