//! Best-first branch and bound over elimination-order suffixes.

use crate::ballot::{first_preference, Ballot, CandidateIndex, CandidateSet, Profile};
use crate::distance::{DistanceError, DistanceModel, DistanceResult, EliminationSequence, Manipulation};
use crate::tabulate::{last_round_margin, run_election, tally, CountError, CountResult, TieRule};
use rayon::prelude::*;
use serde::Serialize;
use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashSet};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchOptions {
    /// Used to determine the actual winner.
    pub tie_rule: TieRule,
    /// Evaluate the children of a node on the rayon pool.
    pub parallel: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            tie_rule: TieRule::Fail,
            parallel: true,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    pub nodes_expanded: u64,
    pub nodes_pruned: u64,
    pub lps_solved: u64,
    pub ips_solved: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarginResult {
    pub value: u64,
    pub winner: CandidateIndex,
    pub last_round_margin: u64,
    pub witness_order: EliminationSequence,
    pub witness_manipulation: Manipulation,
    pub stats: SearchStats,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum MarginError {
    #[error("alternate set is empty")]
    EmptyAlternates,
    #[error("alternate {0} is the winner")]
    AlternateIsWinner(String),
    #[error("alternate #{0} is not a candidate")]
    UnknownAlternate(usize),
    #[error(transparent)]
    Count(#[from] CountError),
    #[error(transparent)]
    Distance(#[from] DistanceError),
    #[error("search ended without a witness")]
    NoWitness,
}

#[derive(Debug, PartialEq, Eq)]
struct Node {
    bound: u64,
    sequence: EliminationSequence,
}

impl Ord for Node {
    // BinaryHeap pops the greatest: smallest bound, then longest, then
    // lexicographically smallest order.
    fn cmp(&self, other: &Self) -> Ordering {
        (Reverse(self.bound), self.sequence.len(), Reverse(self.sequence.order())).cmp(&(
            Reverse(other.bound),
            other.sequence.len(),
            Reverse(other.sequence.order()),
        ))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

enum Evaluated {
    Bound(u64),
    Exact(Option<DistanceResult>),
}

fn evaluate(profile: &Profile, seq: &EliminationSequence, cutoff: Option<u64>) -> Result<Evaluated, DistanceError> {
    let model = DistanceModel::build(profile, seq);
    if seq.is_complete() {
        model.solve_exact(profile, cutoff).map(Evaluated::Exact)
    } else {
        model.relaxation_bound(profile).map(Evaluated::Bound)
    }
}

/// Smallest number of rewritten ballots after which some member of
/// `alternates` can win (ties for last place broken in the manipulator's
/// favor).
pub fn compute_movc(
    profile: &Profile,
    alternates: CandidateSet,
    options: &SearchOptions,
) -> Result<MarginResult, MarginError> {
    let count = run_election(profile, options.tie_rule)?;
    let winner = count.winner;
    if alternates.is_empty() {
        return Err(MarginError::EmptyAlternates);
    }
    if let Some(c) = alternates.iter().find(|c| c.0 >= profile.num_candidates()) {
        return Err(MarginError::UnknownAlternate(c.0));
    }
    if alternates.contains(winner) {
        return Err(MarginError::AlternateIsWinner(profile.id(winner).to_string()));
    }
    let lrm = last_round_margin(&count);
    let mut stats = SearchStats::default();

    // Against every non-winner the last-round margin is attainable, so it
    // seeds the incumbent bound. A narrower alternate set may need more.
    let everyone_else = alternates == profile.all_candidates().without(winner);
    let incumbent = if everyone_else {
        match branch_and_bound(profile, alternates, Some(lrm), options, &mut stats)? {
            Some(found) => Some(found),
            None => match last_round_witness(profile, &count, alternates, &mut stats)? {
                Some(found) => Some(found),
                None => branch_and_bound(profile, alternates, Some(lrm + 1), options, &mut stats)?,
            },
        }
    } else {
        branch_and_bound(profile, alternates, None, options, &mut stats)?
    };
    let (witness_order, found) = incumbent.ok_or(MarginError::NoWitness)?;
    Ok(MarginResult {
        value: found.value,
        winner,
        last_round_margin: lrm,
        witness_order,
        witness_manipulation: found.manipulation,
        stats,
    })
}

/// Returns the best order found strictly below `limit`.
fn branch_and_bound(
    profile: &Profile,
    alternates: CandidateSet,
    mut limit: Option<u64>,
    options: &SearchOptions,
    stats: &mut SearchStats,
) -> Result<Option<(EliminationSequence, DistanceResult)>, MarginError> {
    let mut incumbent = None;
    let mut frontier = BinaryHeap::new();
    for c in alternates.iter() {
        let seq = EliminationSequence::new(vec![c], profile.num_candidates())?;
        frontier.push(Node {
            bound: 0,
            sequence: seq,
        });
    }

    while let Some(node) = frontier.pop() {
        if limit.is_some_and(|l| node.bound >= l) {
            stats.nodes_pruned += 1 + frontier.len() as u64;
            break;
        }
        stats.nodes_expanded += 1;
        let present = node.sequence.members();
        let children: Vec<EliminationSequence> = (0..profile.num_candidates())
            .map(CandidateIndex)
            .filter(|&c| !present.contains(c))
            .map(|c| node.sequence.prepend(c))
            .collect();
        let cutoff = limit;
        let results: Vec<Result<Evaluated, DistanceError>> = if options.parallel {
            children.par_iter().map(|s| evaluate(profile, s, cutoff)).collect()
        } else {
            children.iter().map(|s| evaluate(profile, s, cutoff)).collect()
        };
        for (seq, result) in children.into_iter().zip(results) {
            match result? {
                Evaluated::Bound(bound) => {
                    stats.lps_solved += 1;
                    if limit.is_some_and(|l| bound >= l) {
                        stats.nodes_pruned += 1;
                    } else {
                        frontier.push(Node { bound, sequence: seq });
                    }
                }
                Evaluated::Exact(found) => {
                    stats.ips_solved += 1;
                    if let Some(found) = found {
                        stats.lps_solved += found.lps_solved;
                        if limit.is_none_or(|l| found.value < l) {
                            limit = Some(found.value);
                            incumbent = Some((seq, found));
                        }
                    }
                }
            }
        }
    }
    Ok(incumbent)
}

/// Rewrites last-round-margin many of the winner's final-round ballots to
/// rank only the runner-up, preferring ballots that started with the winner,
/// and scores the elimination order this produces. Returns `None` if that
/// rewrite does not let an alternate win.
fn last_round_witness(
    profile: &Profile,
    count: &CountResult,
    alternates: CandidateSet,
    stats: &mut SearchStats,
) -> Result<Option<(EliminationSequence, DistanceResult)>, MarginError> {
    let (winner, runner_up) = (count.winner, count.runner_up());
    let finalists = CandidateSet::empty().with(winner).with(runner_up);
    let mut to_move = last_round_margin(count);
    let mut ballots: Vec<Ballot> = profile.ballots().to_vec();
    let mut order: Vec<usize> = (0..ballots.len())
        .filter(|&i| first_preference(&ballots[i], finalists) == Some(winner))
        .collect();
    order.sort_by_key(|&i| ballots[i].ranking[0] != winner);
    let mut moved = 0;
    for i in order {
        let take = ballots[i].count.min(to_move);
        ballots[i].count -= take;
        to_move -= take;
        moved += take;
    }
    ballots.retain(|b| b.count > 0);
    if moved > 0 {
        ballots.push(Ballot::new(vec![runner_up], moved));
    }
    let rewritten = Profile::new(profile.candidates().to_vec(), ballots).expect("rewrite keeps the profile valid");

    let Some(order) = adversarial_order(&rewritten, alternates) else {
        return Ok(None);
    };
    let seq = EliminationSequence::new(order, profile.num_candidates())?;
    stats.ips_solved += 1;
    let found = DistanceModel::build(profile, &seq)
        .solve_exact(profile, Some(moved + 1))?
        .expect("the rewrite itself is a solution");
    stats.lps_solved += found.lps_solved;
    Ok(Some((seq, found)))
}

/// An elimination order, with ties for last broken freely, that elects an
/// alternate.
fn adversarial_order(profile: &Profile, alternates: CandidateSet) -> Option<Vec<CandidateIndex>> {
    fn go(
        profile: &Profile,
        standing: CandidateSet,
        alternates: CandidateSet,
        order: &mut Vec<CandidateIndex>,
        dead: &mut HashSet<CandidateSet>,
    ) -> bool {
        if standing.len() == 1 {
            let last = standing.iter().next().expect("one left");
            order.push(last);
            return alternates.contains(last) || {
                order.pop();
                false
            };
        }
        if dead.contains(&standing) {
            return false;
        }
        for c in tally(profile, standing).minima() {
            order.push(c);
            if go(profile, standing.without(c), alternates, order, dead) {
                return true;
            }
            order.pop();
        }
        dead.insert(standing);
        false
    }
    let mut order = Vec::new();
    go(
        profile,
        profile.all_candidates(),
        alternates,
        &mut order,
        &mut HashSet::new(),
    )
    .then_some(order)
}

/// Margin of victory: the smallest rewrite that lets anyone but the winner win.
pub fn compute_mov(profile: &Profile, options: &SearchOptions) -> Result<MarginResult, MarginError> {
    let count = run_election(profile, options.tie_rule)?;
    compute_movc(profile, profile.all_candidates().without(count.winner), options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::adversarial_winners;

    const THREE_WAY: &str = "# candidates: a,b,c\n55,a\n25,c>a\n41,b>c\n15,c\n";

    fn set(p: &Profile, ids: &[&str]) -> CandidateSet {
        ids.iter().map(|id| p.index_of(id).unwrap()).collect()
    }

    fn serial() -> SearchOptions {
        SearchOptions {
            parallel: false,
            ..SearchOptions::default()
        }
    }

    #[test]
    fn three_way_mov() {
        let p = Profile::parse(THREE_WAY).unwrap();
        let r = compute_mov(&p, &serial()).unwrap();
        assert_eq!(r.value, 1);
        assert_eq!(r.last_round_margin, 20);
        assert_eq!(p.format_order(r.witness_order.order()), vec!["b", "a", "c"]);
        let q = r.witness_manipulation.apply(&p);
        assert!(adversarial_winners(&q).contains(p.index_of("c").unwrap()));
    }

    #[test]
    fn three_way_movc() {
        let p = Profile::parse(THREE_WAY).unwrap();
        let r = compute_movc(&p, set(&p, &["b"]), &serial()).unwrap();
        assert_eq!(r.value, 10);
        assert_eq!(p.id(r.witness_order.winner()), "b");
        let q = r.witness_manipulation.apply(&p);
        assert!(adversarial_winners(&q).contains(p.index_of("b").unwrap()));
        assert_eq!(compute_movc(&p, set(&p, &["b", "c"]), &serial()).unwrap().value, 1);
        assert_eq!(compute_movc(&p, set(&p, &["c"]), &serial()).unwrap().value, 1);
    }

    #[test]
    fn alternate_errors() {
        let p = Profile::parse(THREE_WAY).unwrap();
        assert_eq!(
            compute_movc(&p, set(&p, &["a"]), &serial()),
            Err(MarginError::AlternateIsWinner("a".into()))
        );
        assert_eq!(
            compute_movc(&p, CandidateSet::empty(), &serial()),
            Err(MarginError::EmptyAlternates)
        );
    }

    #[test]
    fn two_candidates() {
        let p = Profile::parse("# candidates: a,b\n3,a\n2,b\n").unwrap();
        assert_eq!(compute_mov(&p, &serial()).unwrap().value, 1);
        assert_eq!(compute_movc(&p, set(&p, &["b"]), &serial()).unwrap().value, 1);
    }

    #[test]
    fn parallel_matches_serial() {
        let p = Profile::parse("# candidates: a,b,c,d\n30,a>b\n22,b>c>d\n18,c>a\n25,d>b>a\n9,c>d\n").unwrap();
        let s = compute_mov(&p, &serial()).unwrap();
        let q = compute_mov(&p, &SearchOptions::default()).unwrap();
        assert_eq!(s, q);
    }

    #[test]
    fn frontier_order() {
        let seq = |v: &[usize]| EliminationSequence::new(v.iter().map(|&i| CandidateIndex(i)).collect(), 4).unwrap();
        let mut heap = BinaryHeap::new();
        heap.push(Node {
            bound: 3,
            sequence: seq(&[0]),
        });
        heap.push(Node {
            bound: 1,
            sequence: seq(&[2]),
        });
        heap.push(Node {
            bound: 1,
            sequence: seq(&[1, 2]),
        });
        heap.push(Node {
            bound: 1,
            sequence: seq(&[0, 2]),
        });
        let order: Vec<Vec<usize>> = std::iter::from_fn(|| heap.pop())
            .map(|n| n.sequence.order().iter().map(|c| c.0).collect())
            .collect();
        assert_eq!(order, vec![vec![0, 2], vec![1, 2], vec![2], vec![0]]);
    }
}
