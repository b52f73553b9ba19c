//! Exhaustive ground truth for tiny elections.
//!
//! The oracle never looks at chains or linear programs. For every order `σ`
//! ending in an alternate it works directly with full rankings: each ranking
//! has an *effect vector* holding, for every round `i` and later candidate
//! `σ_j`, the change its ballot makes to `t_i(σ_j) − t_i(σ_i)`. An order is
//! realizable after rewriting `k` ballots iff some choice of `k` removed
//! ballots and `k` added rankings leaves every entry nonnegative. Sums of `k`
//! vectors are enumerated exactly and thinned to their Pareto-maximal
//! elements, which preserves the answer because feasibility is monotone.

use crate::ballot::{first_preference, Ballot, CandidateIndex, CandidateSet, Profile};
use crate::tabulate::tally;
use std::collections::{BTreeSet, HashMap};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleConfig {
    /// Largest number of rewritten ballots tried.
    pub max_changes: u64,
    pub max_candidates: usize,
    /// Limit on distinct rankings in the input profile.
    pub max_distinct_types: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            max_changes: 100,
            max_candidates: 4,
            max_distinct_types: 64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleOutcome {
    Exact(u64),
    /// No manipulation of at most `max_changes` ballots works.
    AboveCap,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("{found} candidates exceeds the oracle limit of {limit}")]
    TooManyCandidates { found: usize, limit: usize },
    #[error("{found} distinct rankings exceeds the oracle limit of {limit}")]
    TooManyTypes { found: usize, limit: usize },
    #[error("the oracle needs at least two candidates")]
    TooFewCandidates,
    #[error("alternate set is empty")]
    EmptyAlternates,
}

// Hard ceiling regardless of configuration: rankings are enumerated.
const ABSOLUTE_MAX_CANDIDATES: usize = 6;

/// Every candidate that wins under some way of breaking ties for last place.
pub fn adversarial_winners(profile: &Profile) -> CandidateSet {
    fn walk(profile: &Profile, standing: CandidateSet, memo: &mut HashMap<CandidateSet, CandidateSet>) -> CandidateSet {
        if standing.len() <= 1 {
            return standing;
        }
        if let Some(&w) = memo.get(&standing) {
            return w;
        }
        let mut winners = CandidateSet::empty();
        for c in tally(profile, standing).minima() {
            for w in walk(profile, standing.without(c), memo).iter() {
                winners.insert(w);
            }
        }
        memo.insert(standing, winners);
        winners
    }
    walk(profile, profile.all_candidates(), &mut HashMap::new())
}

fn check_caps(profile: &Profile, config: &OracleConfig) -> Result<(), OracleError> {
    let n = profile.num_candidates();
    let limit = config.max_candidates.min(ABSOLUTE_MAX_CANDIDATES);
    if n > limit {
        return Err(OracleError::TooManyCandidates { found: n, limit });
    }
    if n < 2 {
        return Err(OracleError::TooFewCandidates);
    }
    if profile.ballots().len() > config.max_distinct_types {
        return Err(OracleError::TooManyTypes {
            found: profile.ballots().len(),
            limit: config.max_distinct_types,
        });
    }
    Ok(())
}

/// Minimum number of ballots to rewrite so that some alternate can win.
pub fn oracle_movc(
    profile: &Profile,
    alternates: CandidateSet,
    config: &OracleConfig,
) -> Result<OracleOutcome, OracleError> {
    check_caps(profile, config)?;
    let alternates = alternates.intersection(profile.all_candidates());
    if alternates.is_empty() {
        return Err(OracleError::EmptyAlternates);
    }

    let rankings = all_rankings(profile.num_candidates());
    let cap = config.max_changes.min(profile.total());
    let mut best: Option<u64> = None;
    for sigma in permutations(profile.num_candidates()) {
        if !alternates.contains(*sigma.last().expect("n >= 2")) {
            continue;
        }
        let limit = best.map_or(cap, |b| b.saturating_sub(1));
        if let Some(k) = smallest_for_order(profile, &sigma, &rankings, limit) {
            best = Some(k);
            if k == 0 {
                break;
            }
        }
    }
    Ok(best.map_or(OracleOutcome::AboveCap, OracleOutcome::Exact))
}

/// Minimum number of ballots to rewrite so that `order` is a possible
/// elimination order. `order` must list every candidate once.
pub fn oracle_distance(
    profile: &Profile,
    order: &[CandidateIndex],
    config: &OracleConfig,
) -> Result<OracleOutcome, OracleError> {
    check_caps(profile, config)?;
    assert!(
        order.len() == profile.num_candidates() && order.iter().copied().collect::<CandidateSet>().len() == order.len(),
        "order must be a permutation of the candidates"
    );
    let rankings = all_rankings(profile.num_candidates());
    let cap = config.max_changes.min(profile.total());
    Ok(smallest_for_order(profile, order, &rankings, cap).map_or(OracleOutcome::AboveCap, OracleOutcome::Exact))
}

type Effect = Vec<i64>;

fn effect(ranking: &[CandidateIndex], sigma: &[CandidateIndex]) -> Effect {
    let ballot = Ballot::new(ranking.to_vec(), 1);
    let mut v = Vec::new();
    for i in 0..sigma.len() - 1 {
        let standing: CandidateSet = sigma[i..].iter().copied().collect();
        let fp = first_preference(&ballot, standing);
        for &later in &sigma[i + 1..] {
            v.push(i64::from(fp == Some(later)) - i64::from(fp == Some(sigma[i])));
        }
    }
    v
}

fn smallest_for_order(
    profile: &Profile,
    sigma: &[CandidateIndex],
    rankings: &[Vec<CandidateIndex>],
    limit: u64,
) -> Option<u64> {
    let dims = sigma.len() * (sigma.len() - 1) / 2;
    let mut base = vec![0i64; dims];
    for b in profile.ballots() {
        for (x, e) in base.iter_mut().zip(effect(&b.ranking, sigma)) {
            *x += e * b.count as i64;
        }
    }
    if base.iter().all(|&x| x >= 0) {
        return Some(0);
    }
    if limit == 0 {
        return None;
    }
    let limit = limit as usize;

    let additions: BTreeSet<Effect> = rankings.iter().map(|r| effect(r, sigma)).collect();

    // removals[k]: Pareto-maximal sums over exactly k removed ballots
    let mut removals: Vec<Vec<Effect>> = vec![Vec::new(); limit + 1];
    removals[0].push(vec![0; dims]);
    for b in profile.ballots() {
        let neg: Effect = effect(&b.ranking, sigma).into_iter().map(|x| -x).collect();
        let mut next: Vec<Vec<Effect>> = vec![Vec::new(); limit + 1];
        for (k, slot) in next.iter_mut().enumerate() {
            let mut candidates = Vec::new();
            for m in 0..=(b.count as usize).min(k) {
                for r in &removals[k - m] {
                    candidates.push(r.iter().zip(&neg).map(|(x, y)| x + y * m as i64).collect());
                }
            }
            *slot = pareto_max(candidates);
        }
        removals = next;
    }

    let mut added: Vec<Effect> = vec![vec![0; dims]];
    for (k, removed) in removals.iter().enumerate().skip(1) {
        added = pareto_max(
            added
                .iter()
                .flat_map(|a| {
                    additions
                        .iter()
                        .map(move |v| a.iter().zip(v).map(|(x, y)| x + y).collect())
                })
                .collect(),
        );
        let feasible = removed
            .iter()
            .any(|r| added.iter().any(|a| (0..dims).all(|d| base[d] + r[d] + a[d] >= 0)));
        if feasible {
            return Some(k as u64);
        }
    }
    None
}

fn pareto_max(mut vs: Vec<Effect>) -> Vec<Effect> {
    vs.sort_unstable();
    vs.dedup();
    // Sorting descending lexicographically puts every dominator before the
    // vectors it dominates.
    vs.reverse();
    let mut kept: Vec<Effect> = Vec::new();
    for v in vs {
        if !kept.iter().any(|k| k.iter().zip(&v).all(|(a, b)| a >= b)) {
            kept.push(v);
        }
    }
    kept
}

/// Every ranking of distinct candidates, including the empty one.
fn all_rankings(n: usize) -> Vec<Vec<CandidateIndex>> {
    fn extend(prefix: &mut Vec<CandidateIndex>, n: usize, out: &mut Vec<Vec<CandidateIndex>>) {
        out.push(prefix.clone());
        for c in 0..n {
            if !prefix.contains(&CandidateIndex(c)) {
                prefix.push(CandidateIndex(c));
                extend(prefix, n, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::new(), n, &mut out);
    out
}

fn permutations(n: usize) -> Vec<Vec<CandidateIndex>> {
    all_rankings(n).into_iter().filter(|r| r.len() == n).collect()
}
