//! The instant-runoff count: tallies, round-by-round elimination, and the
//! last-round margin.

use crate::ballot::{first_preference, CandidateIndex, CandidateSet, Profile};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// How the official count resolves a tie for the lowest tally.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieRule {
    /// Refuse to pick; the count fails with [`CountError::UnresolvedTie`].
    #[default]
    Fail,
    /// Eliminate the tied candidate with the smallest id.
    #[serde(alias = "lex")]
    Lexicographic,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum CountError {
    #[error("round {round}: tie for elimination between {candidates:?}")]
    UnresolvedTie { round: usize, candidates: Vec<String> },
    #[error("an election needs at least two candidates")]
    TooFewCandidates,
}

/// Tallies for one standing set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TallyMap {
    pub standing: CandidateSet,
    /// Indexed by candidate; zero for candidates not standing.
    pub counts: Vec<u64>,
    pub exhausted: u64,
}

impl TallyMap {
    pub fn get(&self, c: CandidateIndex) -> u64 {
        self.counts[c.0]
    }

    /// Standing candidates holding the minimum tally, in index order.
    pub fn minima(&self) -> Vec<CandidateIndex> {
        let min = self.standing.iter().map(|c| self.get(c)).min();
        match min {
            Some(min) => self.standing.iter().filter(|&c| self.get(c) == min).collect(),
            None => Vec::new(),
        }
    }

    pub fn sum(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.exhausted
    }
}

/// Counts every ballot for its first standing preference.
pub fn tally(profile: &Profile, standing: CandidateSet) -> TallyMap {
    let mut counts = vec![0; profile.num_candidates()];
    let mut exhausted = 0;
    for b in profile.ballots() {
        match first_preference(b, standing) {
            Some(c) => counts[c.0] += b.count,
            None => exhausted += b.count,
        }
    }
    TallyMap {
        standing,
        counts,
        exhausted,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Round {
    pub tallies: TallyMap,
    pub eliminated: CandidateIndex,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountResult {
    pub rounds: Vec<Round>,
    pub winner: CandidateIndex,
    /// Eliminated candidates in order, followed by the winner.
    pub elimination_order: Vec<CandidateIndex>,
}

impl CountResult {
    /// The last round (two candidates standing).
    pub fn final_round(&self) -> &Round {
        self.rounds.last().expect("a count has at least one round")
    }

    /// The candidate eliminated in the last round.
    pub fn runner_up(&self) -> CandidateIndex {
        self.final_round().eliminated
    }

    /// Final tallies as (winner, runner-up).
    pub fn last_round_tallies(&self) -> (u64, u64) {
        let last = self.final_round();
        (last.tallies.get(self.winner), last.tallies.get(last.eliminated))
    }
}

pub fn run_election(profile: &Profile, tie_rule: TieRule) -> Result<CountResult, CountError> {
    if profile.num_candidates() < 2 {
        return Err(CountError::TooFewCandidates);
    }
    let mut standing = profile.all_candidates();
    let mut rounds = Vec::with_capacity(profile.num_candidates() - 1);
    let mut order = Vec::with_capacity(profile.num_candidates());
    while standing.len() > 1 {
        let tallies = tally(profile, standing);
        let minima = tallies.minima();
        let eliminated = match (minima.as_slice(), tie_rule) {
            ([only], _) => *only,
            (tied, TieRule::Lexicographic) => tied[0],
            (tied, TieRule::Fail) => {
                return Err(CountError::UnresolvedTie {
                    round: rounds.len() + 1,
                    candidates: tied.iter().map(|&c| profile.id(c).to_string()).collect(),
                })
            }
        };
        standing = standing.without(eliminated);
        order.push(eliminated);
        rounds.push(Round { tallies, eliminated });
    }
    let winner = standing.iter().next().expect("one candidate remains");
    order.push(winner);
    Ok(CountResult {
        rounds,
        winner,
        elimination_order: order,
    })
}

/// Half the gap between the final two tallies, rounded up.
pub fn last_round_margin(result: &CountResult) -> u64 {
    let (w, r) = result.last_round_tallies();
    w.abs_diff(r).div_ceil(2)
}
