#![allow(dead_code)]

use irv_margin::ballot::{Ballot, Candidate, CandidateIndex, CandidateSet, Profile};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const THREE_WAY: &str = "# candidates: a,b,c\n55,a\n25,c>a\n41,b>c\n15,c\n";

pub fn three_way() -> Profile {
    Profile::parse(THREE_WAY).unwrap()
}

pub fn set(p: &Profile, ids: &[&str]) -> CandidateSet {
    ids.iter().map(|id| p.index_of(id).unwrap()).collect()
}

pub fn order(p: &Profile, ids: &[&str]) -> Vec<CandidateIndex> {
    ids.iter().map(|id| p.index_of(id).unwrap()).collect()
}

/// 3 or 4 candidates, at most 30 ballots, at most 10 per ranking.
pub fn small_profile(seed: u64) -> Profile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(3..=4);
    let candidates = (0..n).map(|i| Candidate::new(format!("c{i}"), "none")).collect();
    let mut ballots = Vec::new();
    let mut total = 0;
    loop {
        let count = rng.gen_range(1..=10u64);
        if total + count > 30 {
            break;
        }
        let mut ranking: Vec<CandidateIndex> = (0..n).map(CandidateIndex).collect();
        ranking.shuffle(&mut rng);
        ranking.truncate(rng.gen_range(1..=n));
        ballots.push(Ballot::new(ranking, count));
        total += count;
        if ballots.len() >= 8 {
            break;
        }
    }
    Profile::new(candidates, ballots).unwrap()
}

/// A random nonempty subset of `pool`.
pub fn random_subset(pool: CandidateSet, seed: u64) -> CandidateSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let members: Vec<CandidateIndex> = pool.iter().collect();
    loop {
        let pick: CandidateSet = members.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
        if !pick.is_empty() {
            return pick;
        }
    }
}

/// Every ordering of every nonempty subset, as suffixes (last = winner).
pub fn all_suffixes(n: usize) -> Vec<Vec<CandidateIndex>> {
    fn extend(prefix: &mut Vec<CandidateIndex>, n: usize, out: &mut Vec<Vec<CandidateIndex>>) {
        if !prefix.is_empty() {
            out.push(prefix.clone());
        }
        for c in (0..n).map(CandidateIndex) {
            if !prefix.contains(&c) {
                prefix.push(c);
                extend(prefix, n, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::new(), n, &mut out);
    out
}
