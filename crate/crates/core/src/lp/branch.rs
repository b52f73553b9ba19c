//! Best-first branch and bound over the LP relaxation. Every variable is
//! integral and objective coefficients are integers, so a node whose
//! relaxation rounds up to the incumbent can be discarded.

use super::{LinearProgram, LpError, Outcome};
use std::cmp::Reverse;
use std::collections::BinaryHeap;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegerSolution {
    pub objective: i64,
    pub values: Vec<i64>,
    /// LP relaxations solved, including the root.
    pub lps_solved: u64,
}

struct Node {
    bound: i64,
    depth: usize,
    seq: u64,
    lower: Vec<i64>,
    upper: Vec<Option<i64>>,
}

impl Node {
    fn key(&self) -> (Reverse<i64>, usize, Reverse<u64>) {
        (Reverse(self.bound), self.depth, Reverse(self.seq))
    }
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key().cmp(&other.key())
    }
}

/// Minimizes `lp` over the integers. With `cutoff = Some(c)` only solutions
/// with objective strictly below `c` are sought; `Ok(None)` means none exists.
pub fn solve_integer(lp: &LinearProgram, cutoff: Option<i64>) -> Result<Option<IntegerSolution>, LpError> {
    let mut incumbent: Option<(i64, Vec<i64>)> = None;
    let mut limit = cutoff.unwrap_or(i64::MAX);
    let mut lps_solved = 0u64;
    let mut seq = 0u64;
    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: i64::MIN,
        depth: 0,
        seq,
        lower: lp.lower.clone(),
        upper: lp.upper.clone(),
    });

    while let Some(node) = heap.pop() {
        if node.bound >= limit {
            break;
        }
        lps_solved += 1;
        let Some(relaxed) = lp.relax(&node.lower, &node.upper)? else {
            continue;
        };
        let bound = relaxed.bound.max(node.bound);
        if bound >= limit {
            continue;
        }
        match relaxed.outcome {
            Outcome::Integral(values) => {
                limit = bound;
                incumbent = Some((bound, values));
            }
            Outcome::Branch((j, floor)) => {
                let mut down = node.upper.clone();
                down[j] = Some(floor);
                let mut up = node.lower.clone();
                up[j] = floor + 1;
                for (lower, upper) in [(node.lower.clone(), down), (up, node.upper.clone())] {
                    seq += 1;
                    heap.push(Node {
                        bound,
                        depth: node.depth + 1,
                        seq,
                        lower,
                        upper,
                    });
                }
            }
        }
    }

    Ok(incumbent.map(|(objective, values)| IntegerSolution {
        objective,
        values,
        lps_solved,
    }))
}
