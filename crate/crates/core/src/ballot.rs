//! Candidates, ballots and election profiles, plus the plain-text ballot
//! file format.
//!
//! A ballot file starts with a roster header and then lists one ballot
//! type per line:
//!
//! ```text
//! # candidates: a:none,b:none,c:none
//! 55,a
//! 25,c>a
//! 41,b>c
//! 15,c
//! ```
//!
//! Any other line starting with `#` is a comment. Blank lines are ignored.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

/// Largest roster a [`CandidateSet`] can hold.
pub const MAX_CANDIDATES: usize = 64;

/// Party code used for candidates without an affiliation.
pub const NO_PARTY: &str = "none";

/// Position of a candidate in its profile's roster. Rosters are sorted by id,
/// so index order and id order agree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CandidateIndex(pub usize);

/// A set of candidates of one profile, stored as a bitmask.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CandidateSet(u64);

impl CandidateSet {
    pub fn empty() -> Self {
        CandidateSet(0)
    }

    /// The set `{0, .., n-1}`.
    pub fn all(n: usize) -> Self {
        assert!(n <= MAX_CANDIDATES);
        if n == MAX_CANDIDATES {
            CandidateSet(u64::MAX)
        } else {
            CandidateSet((1u64 << n) - 1)
        }
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn contains(self, c: CandidateIndex) -> bool {
        c.0 < MAX_CANDIDATES && self.0 & (1 << c.0) != 0
    }

    pub fn insert(&mut self, c: CandidateIndex) {
        self.0 |= 1 << c.0;
    }

    pub fn with(mut self, c: CandidateIndex) -> Self {
        self.insert(c);
        self
    }

    pub fn without(self, c: CandidateIndex) -> Self {
        CandidateSet(self.0 & !(1 << c.0))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset(self, other: CandidateSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn intersection(self, other: CandidateSet) -> Self {
        CandidateSet(self.0 & other.0)
    }

    pub fn iter(self) -> impl Iterator<Item = CandidateIndex> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(CandidateIndex(i))
            }
        })
    }
}

impl FromIterator<CandidateIndex> for CandidateSet {
    fn from_iter<I: IntoIterator<Item = CandidateIndex>>(iter: I) -> Self {
        let mut set = CandidateSet::empty();
        for c in iter {
            set.insert(c);
        }
        set
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: String,
    pub name: String,
    /// Upper-cased party code, or [`NO_PARTY`].
    pub party: String,
}

impl Candidate {
    pub fn new(id: impl Into<String>, party: &str) -> Self {
        let id = id.into();
        Candidate {
            name: id.clone(),
            id,
            party: normalize_party(party),
        }
    }
}

/// Canonical spelling of a party code: upper case, except `none`.
pub fn normalize_party(code: &str) -> String {
    let code = code.trim();
    if code.eq_ignore_ascii_case(NO_PARTY) || code.is_empty() {
        NO_PARTY.to_string()
    } else {
        code.to_ascii_uppercase()
    }
}

/// A ranking (most preferred first) with its multiplicity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ballot {
    pub ranking: Vec<CandidateIndex>,
    pub count: u64,
}

impl Ballot {
    pub fn new(ranking: Vec<CandidateIndex>, count: u64) -> Self {
        Ballot { ranking, count }
    }
}

/// The ranking of `ballot` restricted to the candidates in `standing`.
pub fn restrict(ballot: &Ballot, standing: CandidateSet) -> Vec<CandidateIndex> {
    ballot
        .ranking
        .iter()
        .copied()
        .filter(|&c| standing.contains(c))
        .collect()
}

/// The candidate `ballot` currently counts for, or `None` if it is exhausted.
pub fn first_preference(ballot: &Ballot, standing: CandidateSet) -> Option<CandidateIndex> {
    ballot.ranking.iter().copied().find(|&c| standing.contains(c))
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ProfileError {
    #[error("no candidates declared")]
    EmptyRoster,
    #[error("at least two candidates are required")]
    TooFewCandidates,
    #[error("at most {MAX_CANDIDATES} candidates are supported")]
    TooManyCandidates,
    #[error("candidate `{0}` is declared twice")]
    DuplicateCandidateId(String),
    #[error("invalid candidate id `{0}`")]
    InvalidCandidateId(String),
    #[error("candidate `{0}` appears twice in one ranking")]
    DuplicateInRanking(String),
    #[error("unknown candidate `{0}`")]
    UnknownCandidate(String),
    #[error("ballot count must be positive")]
    NonPositiveCount,
    #[error("ranking is empty")]
    EmptyRanking,
    #[error("ballot line before the `# candidates:` header")]
    MissingHeader,
    #[error("{0}")]
    Malformed(String),
}

/// A [`ProfileError`] tied to the ballot file line that caused it.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ProfileError,
}

/// An election: a roster and a multiset of ballots.
///
/// Profiles are always normalized: the roster is sorted by id, identical
/// rankings are merged and ballots are sorted by ranking.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Profile {
    candidates: Vec<Candidate>,
    ballots: Vec<Ballot>,
    total: u64,
}

impl Profile {
    /// Builds a profile from a roster and ballots indexing into it.
    ///
    /// Empty rankings are accepted here so that manipulated profiles can
    /// carry exhausted ballots; the file parser rejects them.
    pub fn new(candidates: Vec<Candidate>, ballots: Vec<Ballot>) -> Result<Self, ProfileError> {
        if candidates.is_empty() {
            return Err(ProfileError::EmptyRoster);
        }
        if candidates.len() < 2 {
            return Err(ProfileError::TooFewCandidates);
        }
        if candidates.len() > MAX_CANDIDATES {
            return Err(ProfileError::TooManyCandidates);
        }
        for c in &candidates {
            if !valid_id(&c.id) {
                return Err(ProfileError::InvalidCandidateId(c.id.clone()));
            }
        }

        let mut order: Vec<usize> = (0..candidates.len()).collect();
        order.sort_by(|&a, &b| candidates[a].id.cmp(&candidates[b].id));
        for w in order.windows(2) {
            if candidates[w[0]].id == candidates[w[1]].id {
                return Err(ProfileError::DuplicateCandidateId(candidates[w[0]].id.clone()));
            }
        }
        let mut remap = vec![0; candidates.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old] = new;
        }
        let sorted: Vec<Candidate> = order.iter().map(|&i| candidates[i].clone()).collect();

        let mut merged: BTreeMap<Vec<CandidateIndex>, u64> = BTreeMap::new();
        for ballot in ballots {
            if ballot.count == 0 {
                return Err(ProfileError::NonPositiveCount);
            }
            let mut seen = CandidateSet::empty();
            let mut ranking = Vec::with_capacity(ballot.ranking.len());
            for c in ballot.ranking {
                if c.0 >= remap.len() {
                    return Err(ProfileError::UnknownCandidate(format!("#{}", c.0)));
                }
                let c = CandidateIndex(remap[c.0]);
                if seen.contains(c) {
                    return Err(ProfileError::DuplicateInRanking(sorted[c.0].id.clone()));
                }
                seen.insert(c);
                ranking.push(c);
            }
            *merged.entry(ranking).or_insert(0) += ballot.count;
        }
        let ballots: Vec<Ballot> = merged
            .into_iter()
            .map(|(ranking, count)| Ballot { ranking, count })
            .collect();
        let total = ballots.iter().map(|b| b.count).sum();
        Ok(Profile {
            candidates: sorted,
            ballots,
            total,
        })
    }

    /// Parses the ballot file format described in the module docs.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut roster: Option<Vec<Candidate>> = None;
        let mut ids: BTreeMap<String, usize> = BTreeMap::new();
        let mut ballots = Vec::new();
        let mut last_line = 0;

        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            last_line = line;
            let err = |kind| ParseError { line, kind };
            let trimmed = raw.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(comment) = trimmed.strip_prefix('#') {
                if let Some(list) = comment.trim_start().strip_prefix("candidates:") {
                    if roster.is_some() {
                        return Err(err(ProfileError::Malformed("second `# candidates:` header".into())));
                    }
                    let candidates = parse_roster(list).map_err(err)?;
                    for (i, c) in candidates.iter().enumerate() {
                        if ids.insert(c.id.clone(), i).is_some() {
                            return Err(err(ProfileError::DuplicateCandidateId(c.id.clone())));
                        }
                    }
                    roster = Some(candidates);
                }
                continue;
            }
            if roster.is_none() {
                return Err(err(ProfileError::MissingHeader));
            }
            ballots.push(parse_ballot_line(trimmed, &ids).map_err(err)?);
        }

        let roster = roster.ok_or(ParseError {
            line: last_line,
            kind: ProfileError::EmptyRoster,
        })?;
        Profile::new(roster, ballots).map_err(|kind| ParseError { line: last_line, kind })
    }

    /// Canonical text form; `Profile::parse(&p.to_text()) == Ok(p)`.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# candidates: ");
        let roster: Vec<String> = self
            .candidates
            .iter()
            .map(|c| format!("{}:{}", c.id, c.party))
            .collect();
        out.push_str(&roster.join(","));
        out.push('\n');
        for b in &self.ballots {
            let ranking: Vec<&str> = b.ranking.iter().map(|&c| self.id(c)).collect();
            out.push_str(&format!("{},{}\n", b.count, ranking.join(">")));
        }
        out
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn ballots(&self) -> &[Ballot] {
        &self.ballots
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn num_candidates(&self) -> usize {
        self.candidates.len()
    }

    pub fn all_candidates(&self) -> CandidateSet {
        CandidateSet::all(self.candidates.len())
    }

    pub fn candidate(&self, c: CandidateIndex) -> &Candidate {
        &self.candidates[c.0]
    }

    pub fn id(&self, c: CandidateIndex) -> &str {
        &self.candidates[c.0].id
    }

    pub fn index_of(&self, id: &str) -> Option<CandidateIndex> {
        self.candidates
            .binary_search_by(|c| c.id.as_str().cmp(id))
            .ok()
            .map(CandidateIndex)
    }

    /// Candidates whose party is one of `parties` (compared case-insensitively).
    pub fn candidates_of_parties<S: AsRef<str>>(&self, parties: &[S]) -> CandidateSet {
        self.candidates
            .iter()
            .enumerate()
            .filter(|(_, c)| parties.iter().any(|p| c.party.eq_ignore_ascii_case(p.as_ref())))
            .map(|(i, _)| CandidateIndex(i))
            .collect()
    }

    /// Replaces candidate party codes using an id → party map. Unmapped
    /// candidates keep their party.
    pub fn with_parties(mut self, parties: &BTreeMap<String, String>) -> Result<Self, ProfileError> {
        for (id, party) in parties {
            let idx = self
                .index_of(id)
                .ok_or_else(|| ProfileError::UnknownCandidate(id.clone()))?;
            self.candidates[idx.0].party = normalize_party(party);
        }
        Ok(self)
    }

    /// Ids of a candidate set, in roster order.
    pub fn ids(&self, set: CandidateSet) -> Vec<String> {
        set.iter().map(|c| self.id(c).to_string()).collect()
    }

    pub fn format_order(&self, order: &[CandidateIndex]) -> Vec<String> {
        order.iter().map(|&c| self.id(c).to_string()).collect()
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && !id
            .chars()
            .any(|ch| ch == ',' || ch == '>' || ch == ':' || ch == '#' || ch.is_whitespace())
}

fn parse_roster(list: &str) -> Result<Vec<Candidate>, ProfileError> {
    let mut out = Vec::new();
    for entry in list.split(',') {
        let entry = entry.trim();
        if entry.is_empty() {
            continue;
        }
        let (id, party) = match entry.split_once(':') {
            Some((id, party)) => (id.trim(), party.trim()),
            None => (entry, NO_PARTY),
        };
        if !valid_id(id) {
            return Err(ProfileError::InvalidCandidateId(id.to_string()));
        }
        if party.is_empty() || party.contains(char::is_whitespace) {
            return Err(ProfileError::Malformed(format!("bad party code for `{id}`")));
        }
        out.push(Candidate::new(id, party));
    }
    if out.is_empty() {
        return Err(ProfileError::EmptyRoster);
    }
    Ok(out)
}

fn parse_ballot_line(line: &str, ids: &BTreeMap<String, usize>) -> Result<Ballot, ProfileError> {
    let (count, ranking) = line
        .split_once(',')
        .ok_or_else(|| ProfileError::Malformed("expected `count,c1>c2>...`".into()))?;
    let count: i64 = count
        .trim()
        .parse()
        .map_err(|_| ProfileError::Malformed(format!("bad ballot count `{}`", count.trim())))?;
    if count <= 0 {
        return Err(ProfileError::NonPositiveCount);
    }
    let ranking = ranking.trim();
    if ranking.is_empty() {
        return Err(ProfileError::EmptyRanking);
    }
    let mut seen = CandidateSet::empty();
    let mut out = Vec::new();
    for id in ranking.split('>') {
        let id = id.trim();
        let idx = *ids
            .get(id)
            .ok_or_else(|| ProfileError::UnknownCandidate(id.to_string()))?;
        let c = CandidateIndex(idx);
        if seen.contains(c) {
            return Err(ProfileError::DuplicateInRanking(id.to_string()));
        }
        seen.insert(c);
        out.push(c);
    }
    Ok(Ballot::new(out, count as u64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) const THREE_WAY: &str = "# candidates: a:none,b:none,c:none\n55,a\n25,c>a\n41,b>c\n15,c\n";

    fn idx(p: &Profile, ids: &[&str]) -> Vec<CandidateIndex> {
        ids.iter().map(|id| p.index_of(id).unwrap()).collect()
    }

    fn set(p: &Profile, ids: &[&str]) -> CandidateSet {
        idx(p, ids).into_iter().collect()
    }

    #[test]
    fn parses_three_way() {
        let p = Profile::parse(THREE_WAY).unwrap();
        assert_eq!(p.total(), 136);
        assert_eq!(p.num_candidates(), 3);
        assert_eq!(p.ballots().len(), 4);
    }

    #[test]
    fn merges_duplicate_rankings() {
        let p = Profile::parse("# candidates: a:x,b:y\n3,a>b\n2,a>b\n").unwrap();
        assert_eq!(p.ballots().len(), 1);
        assert_eq!(p.ballots()[0].count, 5);
        assert_eq!(p.total(), 5);
    }

    #[test]
    fn rejects_bad_lines() {
        let header = "# candidates: a,b\n";
        let e = Profile::parse(&format!("{header}4,a>b>a\n")).unwrap_err();
        assert_eq!(e.kind, ProfileError::DuplicateInRanking("a".into()));
        assert_eq!(e.line, 2);
        let e = Profile::parse(&format!("{header}1,a\n4,a>z\n")).unwrap_err();
        assert_eq!(e.kind, ProfileError::UnknownCandidate("z".into()));
        assert_eq!(e.line, 3);
        let e = Profile::parse(&format!("{header}0,a\n")).unwrap_err();
        assert_eq!(e.kind, ProfileError::NonPositiveCount);
        let e = Profile::parse(&format!("{header}-2,a\n")).unwrap_err();
        assert_eq!(e.kind, ProfileError::NonPositiveCount);
        let e = Profile::parse(&format!("{header}3,\n")).unwrap_err();
        assert_eq!(e.kind, ProfileError::EmptyRanking);
        let e = Profile::parse(&format!("{header}x,a\n")).unwrap_err();
        assert!(matches!(e.kind, ProfileError::Malformed(_)));
        let e = Profile::parse("# candidates:\n1,a\n").unwrap_err();
        assert_eq!(e.kind, ProfileError::EmptyRoster);
        let e = Profile::parse("1,a\n").unwrap_err();
        assert_eq!(e.kind, ProfileError::MissingHeader);
        let e = Profile::parse("# just a comment\n").unwrap_err();
        assert_eq!(e.kind, ProfileError::EmptyRoster);
        let e = Profile::parse("# candidates: a,a\n").unwrap_err();
        assert_eq!(e.kind, ProfileError::DuplicateCandidateId("a".into()));
        let e = Profile::parse("# candidates: a\n1,a\n").unwrap_err();
        assert_eq!(e.kind, ProfileError::TooFewCandidates);
    }

    #[test]
    fn ids_are_case_sensitive() {
        let p = Profile::parse("# candidates: A,a\n1,A\n2,a>A\n").unwrap();
        assert_eq!(p.num_candidates(), 2);
        assert_eq!(p.index_of("A"), Some(CandidateIndex(0)));
        assert_eq!(p.index_of("a"), Some(CandidateIndex(1)));
    }

    #[test]
    fn restrict_examples() {
        let p = Profile::parse(THREE_WAY).unwrap();
        let bc = Ballot::new(idx(&p, &["b", "c"]), 1);
        assert_eq!(restrict(&bc, set(&p, &["a", "c"])), idx(&p, &["c"]));
        let ca = Ballot::new(idx(&p, &["c", "a"]), 1);
        assert_eq!(restrict(&ca, set(&p, &["a", "b", "c"])), idx(&p, &["c", "a"]));
        let a = Ballot::new(idx(&p, &["a"]), 1);
        assert!(restrict(&a, set(&p, &["b", "c"])).is_empty());
    }

    #[test]
    fn first_preference_examples() {
        let p = Profile::parse(THREE_WAY).unwrap();
        let bc = Ballot::new(idx(&p, &["b", "c"]), 1);
        assert_eq!(first_preference(&bc, set(&p, &["a", "b", "c"])), p.index_of("b"));
        assert_eq!(first_preference(&bc, set(&p, &["a", "c"])), p.index_of("c"));
        let a = Ballot::new(idx(&p, &["a"]), 1);
        assert_eq!(first_preference(&a, set(&p, &["b", "c"])), None);
    }

    #[test]
    fn serialization_is_canonical() {
        let text = "# candidates: c:gre,a:LIB,b\n# a comment\n2,b\n1,a>c\n\n3,c>b>a\n1,a>c\n";
        let p = Profile::parse(text).unwrap();
        assert_eq!(p.to_text(), "# candidates: a:LIB,b:none,c:GRE\n2,a>c\n2,b\n3,c>b>a\n");
    }

    #[test]
    fn party_lookup() {
        let p = Profile::parse("# candidates: x:ALP,y:lib,z:CLP\n1,x\n").unwrap();
        let s = p.candidates_of_parties(&["alp", "CLP"]);
        assert_eq!(p.ids(s), vec!["x", "z"]);
    }

    fn arb_profile() -> impl Strategy<Value = Profile> {
        (2usize..6)
            .prop_flat_map(|n| {
                let ballot = (
                    Just(n),
                    proptest::sample::subsequence((0..n).collect::<Vec<_>>(), 1..=n),
                    Just(()),
                )
                    .prop_flat_map(|(_, sub, _)| (Just(sub.clone()).prop_shuffle(), 1u64..20));
                (Just(n), proptest::collection::vec(ballot, 1..12))
            })
            .prop_map(|(n, ballots)| {
                let candidates = (0..n).map(|i| Candidate::new(format!("c{i}"), "none")).collect();
                let ballots = ballots
                    .into_iter()
                    .map(|(r, count)| Ballot::new(r.into_iter().map(CandidateIndex).collect(), count))
                    .collect();
                Profile::new(candidates, ballots).unwrap()
            })
    }

    proptest! {
        #[test]
        fn text_round_trip(p in arb_profile()) {
            let text = p.to_text();
            let q = Profile::parse(&text).unwrap();
            prop_assert_eq!(&q, &p);
            prop_assert_eq!(q.to_text(), text);
        }

        #[test]
        fn restrict_composes(p in arb_profile(), s1 in any::<u64>(), s2 in any::<u64>()) {
            let all = p.all_candidates().bits();
            let outer = CandidateSet(s1 & all);
            let inner = CandidateSet(s1 & s2 & all);
            for b in p.ballots() {
                let once = restrict(&Ballot::new(restrict(b, outer), b.count), inner);
                prop_assert_eq!(once, restrict(b, inner));
            }
        }
    }
}
