//! Pairwise-winner graphs, Copeland winners and the uncovered set.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metric::{MetricInstance, PointId};
use crate::rules::{decide, RuleId};

/// One decided pair, oriented from winner to loser.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub winner: usize,
    pub loser: usize,
    pub winner_score: f64,
    pub loser_score: f64,
    pub tie: bool,
}

/// Complete, antisymmetric tournament over named nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct TournamentGraph {
    names: Vec<String>,
    beats: Vec<Vec<bool>>,
    edges: Vec<Edge>,
}

impl TournamentGraph {
    /// Builds a graph from an adjacency matrix, checking completeness and
    /// antisymmetry.
    pub fn from_beats(names: Vec<String>, beats: Vec<Vec<bool>>) -> Result<Self> {
        let n = names.len();
        if n == 0 || beats.len() != n || beats.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidParams(format!(
                "tournament over {n} nodes needs an {n}x{n} adjacency matrix"
            )));
        }
        let mut edges = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            if beats[i][i] {
                return Err(Error::InvalidParams(format!("{} beats itself", names[i])));
            }
            for j in i + 1..n {
                let (w, l) = match (beats[i][j], beats[j][i]) {
                    (true, false) => (i, j),
                    (false, true) => (j, i),
                    _ => {
                        return Err(Error::InvalidParams(format!(
                            "pair ({}, {}) must have exactly one winner",
                            names[i], names[j]
                        )))
                    }
                };
                edges.push(Edge {
                    winner: w,
                    loser: l,
                    winner_score: 1.0,
                    loser_score: 0.0,
                    tie: false,
                });
            }
        }
        Ok(TournamentGraph { names, beats, edges })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn beats(&self, i: usize, j: usize) -> bool {
        self.beats[i][j]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.beats[i].iter().filter(|&&b| b).count()
    }

    /// Indices of nodes that reach every other node in at most two steps,
    /// in node order.
    pub fn uncovered_set(&self) -> Vec<usize> {
        let n = self.len();
        (0..n)
            .filter(|&p| {
                (0..n).all(|z| {
                    z == p || self.beats[p][z] || (0..n).any(|q| self.beats[p][q] && self.beats[q][z])
                })
            })
            .collect()
    }

    /// Node with the largest out-degree; ties go to the smallest name.
    pub fn copeland_winner(&self) -> usize {
        (0..self.len())
            .max_by(|&a, &b| {
                self.out_degree(a)
                    .cmp(&self.out_degree(b))
                    .then_with(|| self.names[b].cmp(&self.names[a]))
            })
            .expect("nonempty tournament")
    }

    /// Edge list CSV `winner,loser,p_score,q_score`, scores given from the
    /// winner's side.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("winner,loser,p_score,q_score\n");
        for e in &self.edges {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                self.names[e.winner],
                self.names[e.loser],
                crate::fmt::sig(e.winner_score),
                crate::fmt::sig(e.loser_score)
            );
        }
        out
    }
}

/// Decides every candidate pair of `inst` under `rule`.
///
/// Pairs are oriented with the earlier candidate as `P`. The node order is
/// the instance's candidate order.
pub fn majority_graph(inst: &MetricInstance, rule: &RuleId) -> Result<TournamentGraph> {
    rule.validate()?;
    let cands: Vec<PointId> = inst.candidates().to_vec();
    let n = cands.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let decide_pair = |&(i, j): &(usize, usize)| -> Result<Edge> {
        let d = decide(inst, cands[i], cands[j], rule)?;
        Ok(if d.winner(cands[i], cands[j]) == cands[i] {
            Edge {
                winner: i,
                loser: j,
                winner_score: d.p_score,
                loser_score: d.q_score,
                tie: d.tie,
            }
        } else {
            Edge {
                winner: j,
                loser: i,
                winner_score: d.q_score,
                loser_score: d.p_score,
                tie: d.tie,
            }
        })
    };
    let edges: Vec<Edge> = if pairs.len() >= 16 {
        pairs.par_iter().map(decide_pair).collect::<Result<_>>()?
    } else {
        pairs.iter().map(decide_pair).collect::<Result<_>>()?
    };
    let mut beats = vec![vec![false; n]; n];
    for e in &edges {
        beats[e.winner][e.loser] = true;
    }
    Ok(TournamentGraph {
        names: cands.iter().map(|&c| inst.name(c).to_string()).collect(),
        beats,
        edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn graph(n: usize, wins: &[(usize, usize)]) -> TournamentGraph {
        let mut beats = vec![vec![false; n]; n];
        for &(w, l) in wins {
            beats[w][l] = true;
        }
        let names = (0..n).map(|i| format!("c{i}")).collect();
        TournamentGraph::from_beats(names, beats).unwrap()
    }

    fn random_graph(rng: &mut ChaCha8Rng, n: usize) -> TournamentGraph {
        let mut wins = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                wins.push(if rng.gen() { (i, j) } else { (j, i) });
            }
        }
        graph(n, &wins)
    }

    fn covers(g: &TournamentGraph, z: usize, p: usize) -> bool {
        g.beats(z, p) && (0..g.len()).all(|x| !g.beats(p, x) || g.beats(z, x))
    }

    #[test]
    fn three_cycle() {
        let g = graph(3, &[(0, 1), (1, 2), (2, 0)]);
        assert_eq!(g.uncovered_set(), vec![0, 1, 2]);
        assert_eq!(g.copeland_winner(), 0);
    }

    #[test]
    fn condorcet_winner_is_alone() {
        let g = graph(4, &[(2, 0), (2, 1), (2, 3), (0, 1), (1, 3), (3, 0)]);
        assert_eq!(g.uncovered_set(), vec![2]);
        assert_eq!(g.copeland_winner(), 2);
    }

    #[test]
    fn rejects_incomplete_graph() {
        let beats = vec![vec![false, false], vec![false, false]];
        assert!(TournamentGraph::from_beats(vec!["a".into(), "b".into()], beats).is_err());
    }

    #[test]
    fn uncovered_set_equals_uncovered_in_covering_relation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let n = rng.gen_range(1..=7);
            let g = random_graph(&mut rng, n);
            let oracle: Vec<usize> = (0..n).filter(|&p| !(0..n).any(|z| covers(&g, z, p))).collect();
            let unc = g.uncovered_set();
            assert_eq!(unc, oracle);
            assert!(unc.contains(&g.copeland_winner()));
        }
    }

    #[test]
    fn majority_graph_with_condorcet_winner_on_line() {
        let inst = MetricInstance::line(
            [("a", 0.0), ("b", 1.0), ("c", 2.0), ("v1", 0.9), ("v2", 1.1), ("v3", 1.5)],
            &["v1", "v2", "v3"],
            &["a", "b", "c"],
        )
        .unwrap();
        let g = majority_graph(&inst, &RuleId::Rule1(2.0)).unwrap();
        assert!(g.beats(1, 0) && g.beats(1, 2));
        assert_eq!(g.copeland_winner(), 1);
        assert!(g.to_csv().starts_with("winner,loser,p_score,q_score\nb,a,"));
    }
}
