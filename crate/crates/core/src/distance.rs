//! Minimum number of rewritten ballots needed to make an elimination order
//! happen.
//!
//! For an order `π` (earliest elimination first, prospective winner last) a
//! ballot is reduced to its *chain*: the candidates of `π` it ranks whose
//! `π`-position exceeds that of every candidate it ranked before them. The
//! chain alone decides who the ballot counts for in every round of `π`, so
//! ballots with equal chains are interchangeable. The distance model is an
//! integer program over per-chain removals and additions:
//!
//! * remove `r_t ≤ n_t` ballots of chain `t`, add `a_t ≥ 0` ballots of chain `t`,
//! * as many ballots are added as removed,
//! * in every round `i`, the candidate `π_i` has a tally no larger than any
//!   later candidate (ties may go the manipulator's way),
//! * minimize `Σ r_t`.
//!
//! When `π` is only a suffix of an order, candidates outside it are treated as
//! already eliminated and the optimum is a lower bound for every completion.

use crate::ballot::{Ballot, CandidateIndex, CandidateSet, Profile};
use crate::lp::{solve_integer, LinearProgram, LpError, Relation};
use std::collections::BTreeMap;
use thiserror::Error;

/// Longest sequence the chain model accepts (it has `2^len` chains).
pub const MAX_SEQUENCE_LEN: usize = 16;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum DistanceError {
    #[error("elimination sequence is empty")]
    Empty,
    #[error("candidate #{0} appears twice in the elimination sequence")]
    DuplicateCandidate(usize),
    #[error("candidate #{0} is not in the profile")]
    UnknownCandidate(usize),
    #[error("elimination sequences longer than {MAX_SEQUENCE_LEN} are not supported")]
    TooLong,
    #[error("an exact distance needs a complete elimination order")]
    Incomplete,
    #[error("solver failure: {0}")]
    Solver(#[from] LpError),
}

/// An elimination order or a suffix of one; the last entry is the
/// prospective winner.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EliminationSequence {
    order: Vec<CandidateIndex>,
    num_candidates: usize,
}

impl EliminationSequence {
    pub fn new(order: Vec<CandidateIndex>, num_candidates: usize) -> Result<Self, DistanceError> {
        if order.is_empty() {
            return Err(DistanceError::Empty);
        }
        if order.len() > MAX_SEQUENCE_LEN {
            return Err(DistanceError::TooLong);
        }
        let mut seen = CandidateSet::empty();
        for &c in &order {
            if c.0 >= num_candidates {
                return Err(DistanceError::UnknownCandidate(c.0));
            }
            if seen.contains(c) {
                return Err(DistanceError::DuplicateCandidate(c.0));
            }
            seen.insert(c);
        }
        Ok(EliminationSequence { order, num_candidates })
    }

    /// Builds a sequence from candidate ids.
    pub fn from_ids(profile: &Profile, ids: &[&str]) -> Option<Self> {
        let order = ids.iter().map(|id| profile.index_of(id)).collect::<Option<Vec<_>>>()?;
        Self::new(order, profile.num_candidates()).ok()
    }

    pub fn order(&self) -> &[CandidateIndex] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// True iff every candidate of the profile appears.
    pub fn is_complete(&self) -> bool {
        self.order.len() == self.num_candidates
    }

    pub fn winner(&self) -> CandidateIndex {
        *self.order.last().expect("sequences are nonempty")
    }

    pub fn members(&self) -> CandidateSet {
        self.order.iter().copied().collect()
    }

    /// The sequence with `c` eliminated before everyone already in it.
    pub fn prepend(&self, c: CandidateIndex) -> Self {
        debug_assert!(!self.members().contains(c));
        let mut order = Vec::with_capacity(self.order.len() + 1);
        order.push(c);
        order.extend_from_slice(&self.order);
        EliminationSequence {
            order,
            num_candidates: self.num_candidates,
        }
    }

    fn positions(&self) -> Vec<Option<u32>> {
        let mut pos = vec![None; self.num_candidates];
        for (i, c) in self.order.iter().enumerate() {
            pos[c.0] = Some(i as u32);
        }
        pos
    }

    fn chain_of(&self, mask: u32) -> Vec<CandidateIndex> {
        (0..self.order.len())
            .filter(|&i| mask & (1 << i) != 0)
            .map(|i| self.order[i])
            .collect()
    }
}

/// Chain as a set of `π`-positions; the order is implied.
fn chain_mask(ranking: &[CandidateIndex], positions: &[Option<u32>]) -> u32 {
    let mut mask = 0u32;
    let mut last: Option<u32> = None;
    for c in ranking {
        if let Some(p) = positions[c.0] {
            if last.is_none_or(|l| p > l) {
                mask |= 1 << p;
                last = Some(p);
            }
        }
    }
    mask
}

/// Position of the candidate a chain counts for in round `round` (0-based),
/// when the candidates at positions `< round` are gone.
fn recipient(mask: u32, round: usize) -> Option<usize> {
    let rest = mask >> round;
    (rest != 0).then(|| round + rest.trailing_zeros() as usize)
}

/// The chain of `ballot` with respect to `seq`.
pub fn project_type(ballot: &Ballot, seq: &EliminationSequence) -> Vec<CandidateIndex> {
    seq.chain_of(chain_mask(&ballot.ranking, &seq.positions()))
}

/// Ballots sharing one chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BallotType {
    pub chain: Vec<CandidateIndex>,
    pub count: u64,
}

/// The integer program measuring the distance from a profile to an
/// elimination sequence.
#[derive(Clone, Debug)]
pub struct DistanceModel {
    sequence: EliminationSequence,
    /// Chains present in the profile, ascending by mask.
    present: Vec<(u32, u64)>,
    /// Chains that may receive rewritten ballots: those ending with the
    /// prospective winner. Any other chain is dominated by appending the
    /// winner, which only ever adds to the winner's tally.
    addable: Vec<u32>,
}

/// Removals and additions per chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeChange {
    pub chain: Vec<CandidateIndex>,
    pub removed: u64,
    pub added: u64,
}

/// A concrete rewrite of ballots, expressed per chain of `sequence`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Manipulation {
    pub sequence: EliminationSequence,
    pub changes: Vec<TypeChange>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceResult {
    pub value: u64,
    pub manipulation: Manipulation,
    pub lps_solved: u64,
}

impl DistanceModel {
    pub fn build(profile: &Profile, sequence: &EliminationSequence) -> Self {
        let positions = sequence.positions();
        let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
        for b in profile.ballots() {
            *counts.entry(chain_mask(&b.ranking, &positions)).or_insert(0) += b.count;
        }
        let last = 1u32 << (sequence.len() - 1);
        let addable = (0..last).map(|m| m | last).collect();
        DistanceModel {
            sequence: sequence.clone(),
            present: counts.into_iter().collect(),
            addable,
        }
    }

    pub fn sequence(&self) -> &EliminationSequence {
        &self.sequence
    }

    pub fn ballot_types(&self) -> Vec<BallotType> {
        self.present
            .iter()
            .map(|&(mask, count)| BallotType {
                chain: self.sequence.chain_of(mask),
                count,
            })
            .collect()
    }

    /// Tally of `candidate` in the round where `sequence[round]` is eliminated,
    /// before any manipulation.
    pub fn base_tally(&self, round: usize, candidate: CandidateIndex) -> u64 {
        let Some(pos) = self.sequence.order.iter().position(|&c| c == candidate) else {
            return 0;
        };
        self.present
            .iter()
            .filter(|&&(mask, _)| recipient(mask, round) == Some(pos))
            .map(|&(_, n)| n)
            .sum()
    }

    /// Pairs `(round, rival position)` whose tallies are ordered by the model.
    fn orderings(&self) -> impl Iterator<Item = (usize, usize)> {
        let len = self.sequence.len();
        (0..len.saturating_sub(1)).flat_map(move |i| (i + 1..len).map(move |j| (i, j)))
    }

    pub fn to_lp(&self, profile: &Profile) -> LinearProgram {
        let chain_name = |mask: u32| -> String {
            if mask == 0 {
                "exhausted".to_string()
            } else {
                profile.format_order(&self.sequence.chain_of(mask)).join("_")
            }
        };
        let mut lp = LinearProgram::default();
        let removed: Vec<(usize, u32)> = self
            .present
            .iter()
            .map(|&(mask, n)| {
                (
                    lp.add_var(format!("r_{}", chain_name(mask)), 1, 0, Some(n as i64)),
                    mask,
                )
            })
            .collect();
        // Additions match removals, so none can exceed the ballot total.
        let total: u64 = self.present.iter().map(|&(_, n)| n).sum();
        let added: Vec<(usize, u32)> = self
            .addable
            .iter()
            .map(|&mask| {
                (
                    lp.add_var(format!("a_{}", chain_name(mask)), 0, 0, Some(total as i64)),
                    mask,
                )
            })
            .collect();

        for (round, rival) in self.orderings() {
            let coef = |mask: u32| -> i64 {
                match recipient(mask, round) {
                    Some(p) if p == round => 1,
                    Some(p) if p == rival => -1,
                    _ => 0,
                }
            };
            let mut coeffs = Vec::new();
            let mut slack = 0i64;
            for (&(var, mask), &(_, n)) in removed.iter().zip(&self.present) {
                let c = coef(mask);
                if c != 0 {
                    coeffs.push((var, -c));
                    slack -= c * n as i64;
                }
            }
            for &(var, mask) in &added {
                let c = coef(mask);
                if c != 0 {
                    coeffs.push((var, c));
                }
            }
            let name = format!(
                "r{}_{}_le_{}",
                round + 1,
                profile.id(self.sequence.order[round]),
                profile.id(self.sequence.order[rival])
            );
            lp.add_row(name, coeffs, Relation::Le, slack);
        }
        let conserve = added
            .iter()
            .map(|&(v, _)| (v, 1))
            .chain(removed.iter().map(|&(v, _)| (v, -1)))
            .collect();
        lp.add_row("conserve", conserve, Relation::Eq, 0);
        lp
    }

    /// Ceiling of the LP relaxation optimum (possibly weaker when the
    /// relaxation is solved approximately, but always a valid bound).
    pub fn relaxation_bound(&self, profile: &Profile) -> Result<u64, DistanceError> {
        if self.sequence.len() < 2 {
            return Ok(0);
        }
        Ok(self.to_lp(profile).relaxation_bound()?.max(0) as u64)
    }

    /// Integer optimum, or `None` if it is not below `cutoff`.
    pub fn solve_exact(&self, profile: &Profile, cutoff: Option<u64>) -> Result<Option<DistanceResult>, DistanceError> {
        let lp = self.to_lp(profile);
        let Some(sol) = solve_integer(&lp, cutoff.map(|c| c as i64))? else {
            return Ok(None);
        };
        let mut changes: BTreeMap<u32, (u64, u64)> = BTreeMap::new();
        for (k, &(mask, _)) in self.present.iter().enumerate() {
            changes.entry(mask).or_default().0 = sol.values[k] as u64;
        }
        let offset = self.present.len();
        for (k, &mask) in self.addable.iter().enumerate() {
            changes.entry(mask).or_default().1 = sol.values[offset + k] as u64;
        }
        let changes = changes
            .into_iter()
            .filter(|(_, (r, a))| *r > 0 || *a > 0)
            .map(|(mask, (removed, added))| TypeChange {
                chain: self.sequence.chain_of(mask),
                removed,
                added,
            })
            .collect();
        Ok(Some(DistanceResult {
            value: sol.objective as u64,
            manipulation: Manipulation {
                sequence: self.sequence.clone(),
                changes,
            },
            lps_solved: sol.lps_solved,
        }))
    }
}

pub fn build_model(profile: &Profile, sequence: &EliminationSequence) -> DistanceModel {
    DistanceModel::build(profile, sequence)
}

/// A lower bound on the distance to every complete order ending in `sequence`.
pub fn lower_bound(profile: &Profile, sequence: &EliminationSequence) -> Result<u64, DistanceError> {
    DistanceModel::build(profile, sequence).relaxation_bound(profile)
}

/// The exact distance to a complete elimination order, with a witness.
pub fn exact_distance(profile: &Profile, sequence: &EliminationSequence) -> Result<DistanceResult, DistanceError> {
    if !sequence.is_complete() {
        return Err(DistanceError::Incomplete);
    }
    Ok(DistanceModel::build(profile, sequence)
        .solve_exact(profile, None)?
        .expect("every order is reachable by rewriting all ballots"))
}

impl Manipulation {
    /// Number of ballots rewritten.
    pub fn size(&self) -> u64 {
        self.changes.iter().map(|c| c.removed).sum()
    }

    /// Rewrites ballots of `profile`: removed ballots are taken from the
    /// profile's ballots of the right chain in profile order, and added
    /// ballots rank exactly their chain.
    pub fn apply(&self, profile: &Profile) -> Profile {
        let positions = self.sequence.positions();
        let mut need: BTreeMap<Vec<CandidateIndex>, u64> = self
            .changes
            .iter()
            .filter(|c| c.removed > 0)
            .map(|c| (c.chain.clone(), c.removed))
            .collect();
        let mut ballots = Vec::new();
        for b in profile.ballots() {
            let chain = self.sequence.chain_of(chain_mask(&b.ranking, &positions));
            let take = need.get(&chain).copied().unwrap_or(0).min(b.count);
            if take > 0 {
                *need.get_mut(&chain).expect("present") -= take;
            }
            if b.count > take {
                ballots.push(Ballot::new(b.ranking.clone(), b.count - take));
            }
        }
        debug_assert!(need.values().all(|&n| n == 0), "manipulation removes more than exists");
        for c in self.changes.iter().filter(|c| c.added > 0) {
            ballots.push(Ballot::new(c.chain.clone(), c.added));
        }
        Profile::new(profile.candidates().to_vec(), ballots).expect("rewritten profile is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ballot::first_preference;

    const THREE_WAY: &str = "# candidates: a,b,c\n55,a\n25,c>a\n41,b>c\n15,c\n";

    fn e1() -> Profile {
        Profile::parse(THREE_WAY).unwrap()
    }

    fn seq(p: &Profile, ids: &[&str]) -> EliminationSequence {
        EliminationSequence::from_ids(p, ids).unwrap()
    }

    fn ballot(p: &Profile, ids: &[&str]) -> Ballot {
        Ballot::new(ids.iter().map(|id| p.index_of(id).unwrap()).collect(), 1)
    }

    #[test]
    fn projection_examples() {
        let p = e1();
        let bac = seq(&p, &["b", "a", "c"]);
        assert_eq!(p.format_order(&project_type(&ballot(&p, &["c", "a"]), &bac)), vec!["c"]);
        assert_eq!(
            p.format_order(&project_type(&ballot(&p, &["b", "c"]), &bac)),
            vec!["b", "c"]
        );
        let bc = seq(&p, &["b", "c"]);
        assert!(project_type(&ballot(&p, &["a"]), &bc).is_empty());
    }

    #[test]
    fn sequence_validation() {
        let p = e1();
        let a = p.index_of("a").unwrap();
        assert_eq!(EliminationSequence::new(vec![], 3), Err(DistanceError::Empty));
        assert_eq!(
            EliminationSequence::new(vec![a, a], 3),
            Err(DistanceError::DuplicateCandidate(a.0))
        );
        assert_eq!(
            EliminationSequence::new(vec![CandidateIndex(7)], 3),
            Err(DistanceError::UnknownCandidate(7))
        );
        assert!(!seq(&p, &["a", "b"]).is_complete());
        assert!(seq(&p, &["c", "a", "b"]).is_complete());
        assert_eq!(
            exact_distance(&p, &seq(&p, &["a", "b"])),
            Err(DistanceError::Incomplete)
        );
    }

    #[test]
    fn suffix_model_projects_tallies() {
        let p = e1();
        let s = seq(&p, &["a", "b"]);
        let model = build_model(&p, &s);
        assert_eq!(model.base_tally(0, p.index_of("a").unwrap()), 80);
        assert_eq!(model.base_tally(0, p.index_of("b").unwrap()), 41);
        let lp = model.to_lp(&p);
        // one ordering constraint plus conservation
        assert_eq!(lp.rows.len(), 2);
        assert_eq!(lp.rows[0].name, "r1_a_le_b");
        assert_eq!(lp.rows[0].rhs, 41 - 80);
    }

    #[test]
    fn three_way_bounds() {
        let p = e1();
        assert_eq!(lower_bound(&p, &seq(&p, &["a", "b"])), Ok(20));
        assert_eq!(lower_bound(&p, &seq(&p, &["c", "b"])), Ok(0));
        assert_eq!(lower_bound(&p, &seq(&p, &["b"])), Ok(0));
    }

    #[test]
    fn three_way_exact_distances() {
        let p = e1();
        let d = exact_distance(&p, &seq(&p, &["b", "a", "c"])).unwrap();
        assert_eq!(d.value, 1);
        assert_eq!(d.manipulation.size(), 1);
        assert_eq!(exact_distance(&p, &seq(&p, &["a", "c", "b"])).unwrap().value, 10);
        let d = exact_distance(&p, &seq(&p, &["c", "b", "a"])).unwrap();
        assert_eq!(d.value, 0);
        assert!(d.manipulation.changes.is_empty());
    }

    #[test]
    fn witness_realizes_order() {
        let p = e1();
        for ids in [["b", "a", "c"], ["a", "c", "b"], ["c", "a", "b"], ["a", "b", "c"]] {
            let s = seq(&p, &ids);
            let d = exact_distance(&p, &s).unwrap();
            let q = d.manipulation.apply(&p);
            assert_eq!(q.total(), p.total());
            // every round's eliminated candidate is at the minimum
            let mut standing = p.all_candidates();
            for &c in &s.order()[..s.len() - 1] {
                let t = crate::tabulate::tally(&q, standing);
                assert!(standing.iter().all(|o| t.get(c) <= t.get(o)), "{ids:?}");
                standing = standing.without(c);
            }
        }
    }

    #[test]
    fn chains_agree_with_direct_first_preferences() {
        let p = Profile::parse("# candidates: a,b,c,d\n3,a>b>c>d\n2,d>c\n4,b>d>a\n1,c\n5,c>a>d>b\n2,b>a\n").unwrap();
        let s = seq(&p, &["b", "d", "a", "c"]);
        let positions = s.positions();
        for b in p.ballots() {
            let mask = chain_mask(&b.ranking, &positions);
            let mut standing = s.members();
            for round in 0..s.len() {
                let direct = first_preference(b, standing);
                assert_eq!(recipient(mask, round).map(|i| s.order()[i]), direct);
                standing = standing.without(s.order()[round]);
            }
        }
    }

    #[test]
    fn lp_dump_names_chains() {
        let p = e1();
        let text = build_model(&p, &seq(&p, &["c", "b", "a"])).to_lp(&p).to_lp_text();
        assert!(text.contains("r_c_a"));
        assert!(text.contains("a_b_a"));
        assert!(text.contains("r1_c_le_b"));
        assert!(text.contains("conserve"));
    }
}
