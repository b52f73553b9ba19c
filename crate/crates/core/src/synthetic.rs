//! Seeded random elections for testing and benchmarking.

use crate::ballot::{Ballot, Candidate, CandidateIndex, Profile};
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SyntheticSeat {
    pub num_candidates: usize,
    pub num_ballots: u64,
    pub seed: u64,
}

const PARTIES: [&str; 8] = ["ALP", "LIB", "GRE", "NAT", "IND", "CDP", "AJP", "NLT"];

/// Ballots drawn from a Plackett-Luce model with random candidate weights and
/// random truncation, so some ballots exhaust.
pub fn generate(seat: &SyntheticSeat) -> Profile {
    let n = seat.num_candidates;
    let mut rng = ChaCha8Rng::seed_from_u64(seat.seed);
    let candidates: Vec<Candidate> = (0..n)
        .map(|i| Candidate::new(format!("c{i}"), PARTIES[i % PARTIES.len()]))
        .collect();
    // Two strong candidates and a tail, like a typical lower-house seat.
    let weights: Vec<f64> = (0..n)
        .map(|i| {
            let base = if i < 2 { 8.0 } else { 1.0 };
            base * rng.gen_range(0.5..1.5)
        })
        .collect();

    let mut ballots = Vec::new();
    for _ in 0..seat.num_ballots {
        let length = rng.gen_range(1..=n);
        let mut w = weights.clone();
        let mut ranking = Vec::with_capacity(length);
        for _ in 0..length {
            let pick = WeightedIndex::new(&w).expect("positive weights").sample(&mut rng);
            ranking.push(CandidateIndex(pick));
            w[pick] = 0.0;
        }
        ballots.push(Ballot::new(ranking, 1));
    }
    Profile::new(candidates, ballots).expect("generated profile is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_sized() {
        let seat = SyntheticSeat {
            num_candidates: 5,
            num_ballots: 2000,
            seed: 7,
        };
        let a = generate(&seat);
        assert_eq!(a.total(), 2000);
        assert_eq!(a.num_candidates(), 5);
        assert_eq!(a, generate(&seat));
        assert_ne!(a, generate(&SyntheticSeat { seed: 8, ..seat }));
    }
}
