//! Seat-level margins aggregated into parliament-level change totals.

use crate::ballot::{normalize_party, CandidateSet, Profile};
use crate::search::{compute_mov, compute_movc, MarginError, SearchOptions};
use crate::tabulate::{last_round_margin, run_election};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

/// A set of party codes, stored upper-case.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coalition(BTreeSet<String>);

impl Coalition {
    /// Parses `+`-separated party codes, case-insensitively.
    pub fn parse(text: &str) -> Result<Self, ParliamentError> {
        let parties: BTreeSet<String> = text
            .split('+')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(normalize_party)
            .collect();
        if parties.is_empty() {
            return Err(ParliamentError::EmptyCoalition);
        }
        Ok(Coalition(parties))
    }

    pub fn contains(&self, party: &str) -> bool {
        self.0.contains(&normalize_party(party))
    }

    pub fn parties(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    /// Sorted, `+`-joined form used in seat-record columns.
    pub fn key(&self) -> String {
        self.0.iter().cloned().collect::<Vec<_>>().join("+")
    }
}

impl fmt::Display for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

/// Changes needed in one seat, per target.
///
/// `movc_by_target` maps a coalition key to the number of ballot changes
/// needed to elect one of its candidates, or `None` when the seat has no such
/// candidate. A key prefixed with `!` means "anyone outside the coalition".
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SeatRecord {
    pub seat: String,
    pub num_candidates: usize,
    pub lrm: u64,
    pub mov: u64,
    pub winner: String,
    pub winner_party: String,
    pub movc_by_target: BTreeMap<String, Option<u64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    LoseMajority,
    WinMajority,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ChosenSeat {
    pub seat: String,
    pub changes: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ParliamentScenario {
    pub mode: Mode,
    pub coalition: String,
    pub threshold: usize,
    pub seats_held: usize,
    pub seats_needed: usize,
    pub chosen_seats: Vec<ChosenSeat>,
    pub total_changes: u64,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ParliamentError {
    #[error("coalition is empty")]
    EmptyCoalition,
    #[error("coalition holds {held} seats, short of the {threshold} needed for a majority")]
    CoalitionLacksMajority { held: usize, threshold: usize },
    #[error("seat {seat} has no value for target {target}")]
    MissingMovc { seat: String, target: String },
    #[error("{needed} seats are needed but only {available} can change hands")]
    NotEnoughSeats { needed: usize, available: usize },
    #[error("line {line}: {message}")]
    Records { line: usize, message: String },
}

/// Seats needed for a majority: more than half.
pub fn threshold(num_seats: usize) -> usize {
    num_seats / 2 + 1
}

fn choose(mut values: Vec<(u64, &str)>, needed: usize) -> Result<(Vec<ChosenSeat>, u64), ParliamentError> {
    if values.len() < needed {
        return Err(ParliamentError::NotEnoughSeats {
            needed,
            available: values.len(),
        });
    }
    values.sort_unstable();
    let chosen: Vec<ChosenSeat> = values[..needed]
        .iter()
        .map(|&(changes, seat)| ChosenSeat {
            seat: seat.to_string(),
            changes,
        })
        .collect();
    let total = chosen.iter().map(|c| c.changes).sum();
    Ok((chosen, total))
}

/// Cheapest way to take enough seats from `coalition` that it falls below
/// `threshold`. A seat's cost is its `!KEY` value when the records carry
/// one, otherwise its margin of victory.
pub fn seats_to_lose_majority(
    records: &[SeatRecord],
    coalition: &Coalition,
    threshold: usize,
) -> Result<ParliamentScenario, ParliamentError> {
    let held: Vec<&SeatRecord> = records.iter().filter(|r| coalition.contains(&r.winner_party)).collect();
    if held.len() < threshold {
        return Err(ParliamentError::CoalitionLacksMajority {
            held: held.len(),
            threshold,
        });
    }
    let needed = held.len() - threshold + 1;
    let outside = format!("!{}", coalition.key());
    let values = held
        .iter()
        .filter_map(|r| match r.movc_by_target.get(&outside) {
            Some(v) => v.map(|v| (v, r.seat.as_str())),
            None => Some((r.mov, r.seat.as_str())),
        })
        .collect();
    let (chosen_seats, total_changes) = choose(values, needed)?;
    Ok(ParliamentScenario {
        mode: Mode::LoseMajority,
        coalition: coalition.key(),
        threshold,
        seats_held: held.len(),
        seats_needed: needed,
        chosen_seats,
        total_changes,
    })
}

/// Cheapest way for `coalition` to reach `threshold` seats by winning seats
/// it does not hold. A coalition already at the threshold needs nothing.
pub fn seats_to_win(
    records: &[SeatRecord],
    coalition: &Coalition,
    threshold: usize,
) -> Result<ParliamentScenario, ParliamentError> {
    let key = coalition.key();
    let held = records.iter().filter(|r| coalition.contains(&r.winner_party)).count();
    let needed = threshold.saturating_sub(held);
    let mut values = Vec::new();
    if needed > 0 {
        for r in records.iter().filter(|r| !coalition.contains(&r.winner_party)) {
            match r.movc_by_target.get(&key) {
                Some(Some(v)) => values.push((*v, r.seat.as_str())),
                Some(None) => {}
                None => {
                    return Err(ParliamentError::MissingMovc {
                        seat: r.seat.clone(),
                        target: key,
                    })
                }
            }
        }
    }
    let (chosen_seats, total_changes) = choose(values, needed)?;
    Ok(ParliamentScenario {
        mode: Mode::WinMajority,
        coalition: key,
        threshold,
        seats_held: held,
        seats_needed: needed,
        chosen_seats,
        total_changes,
    })
}

/// A margin to compute for a live seat: electing a member of the coalition,
/// or with `outside`, electing anyone not in it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Target {
    pub coalition: Coalition,
    pub outside: bool,
}

impl Target {
    pub fn key(&self) -> String {
        if self.outside {
            format!("!{}", self.coalition.key())
        } else {
            self.coalition.key()
        }
    }
}

/// Builds a seat record by running the count and the margin searches.
pub fn seat_record(
    seat: &str,
    profile: &Profile,
    targets: &[Target],
    options: &SearchOptions,
) -> Result<SeatRecord, MarginError> {
    let count = run_election(profile, options.tie_rule)?;
    let winner = count.winner;
    let winner_party = profile.candidate(winner).party.clone();
    let mov = compute_mov(profile, options)?.value;
    let mut movc_by_target = BTreeMap::new();
    for target in targets {
        let members = profile.candidates_of_parties(&target.coalition.parties().collect::<Vec<_>>());
        let alternates: CandidateSet = if target.outside {
            profile
                .all_candidates()
                .iter()
                .filter(|&c| !members.contains(c))
                .collect()
        } else {
            members
        };
        let value = if alternates.contains(winner) {
            Some(0)
        } else if alternates.is_empty() {
            None
        } else if alternates == profile.all_candidates().without(winner) {
            Some(mov)
        } else {
            Some(compute_movc(profile, alternates, options)?.value)
        };
        movc_by_target.insert(target.key(), value);
    }
    Ok(SeatRecord {
        seat: seat.to_string(),
        num_candidates: profile.num_candidates(),
        lrm: last_round_margin(&count),
        mov,
        winner: profile.id(winner).to_string(),
        winner_party,
        movc_by_target,
    })
}

const FIXED_COLUMNS: [&str; 6] = ["seat", "num_candidates", "lrm", "mov", "winner", "winner_party"];

/// Reads seat records from CSV. Target columns are named `movc:KEY`; a cell
/// holding `-` marks a seat without any candidate of that target, and an
/// empty cell a value that was never computed.
pub fn parse_records(text: &str) -> Result<Vec<SeatRecord>, ParliamentError> {
    let err = |line: usize, message: String| ParliamentError::Records { line, message };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| err(1, e.to_string()))?.clone();
    if headers.len() < FIXED_COLUMNS.len() || headers.iter().zip(FIXED_COLUMNS).any(|(h, f)| h != f) {
        return Err(err(1, format!("header must start with {}", FIXED_COLUMNS.join(","))));
    }
    let mut targets = Vec::new();
    for h in headers.iter().skip(FIXED_COLUMNS.len()) {
        let Some(key) = h.strip_prefix("movc:") else {
            return Err(err(1, format!("unexpected column {h:?}")));
        };
        let (outside, body) = match key.strip_prefix('!') {
            Some(rest) => (true, rest),
            None => (false, key),
        };
        let coalition = Coalition::parse(body).map_err(|e| err(1, e.to_string()))?;
        targets.push(Target { coalition, outside }.key());
    }

    let mut records = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| err(line, e.to_string()))?;
        let int = |k: usize| -> Result<u64, ParliamentError> {
            row[k].parse().map_err(|_| {
                err(
                    line,
                    format!("{}: expected a count, found {:?}", FIXED_COLUMNS[k], &row[k]),
                )
            })
        };
        let seat = row[0].to_string();
        if !seen.insert(seat.clone()) {
            return Err(err(line, format!("duplicate seat {seat:?}")));
        }
        let mut movc_by_target = BTreeMap::new();
        for (k, key) in targets.iter().enumerate() {
            let cell = &row[FIXED_COLUMNS.len() + k];
            match cell {
                "" => {}
                "-" => {
                    movc_by_target.insert(key.clone(), None);
                }
                v => {
                    let v = v
                        .parse()
                        .map_err(|_| err(line, format!("movc:{key}: expected a count, found {v:?}")))?;
                    movc_by_target.insert(key.clone(), Some(v));
                }
            }
        }
        records.push(SeatRecord {
            seat,
            num_candidates: int(1)? as usize,
            lrm: int(2)?,
            mov: int(3)?,
            winner: row[4].to_string(),
            winner_party: normalize_party(&row[5]),
            movc_by_target,
        });
    }
    Ok(records)
}

pub fn write_records(records: &[SeatRecord]) -> String {
    let keys: BTreeSet<&String> = records.iter().flat_map(|r| r.movc_by_target.keys()).collect();
    let mut writer = csv::Writer::from_writer(Vec::new());
    let header = FIXED_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .chain(keys.iter().map(|k| format!("movc:{k}")));
    writer.write_record(header).expect("in-memory write");
    for r in records {
        let mut row = vec![
            r.seat.clone(),
            r.num_candidates.to_string(),
            r.lrm.to_string(),
            r.mov.to_string(),
            r.winner.clone(),
            r.winner_party.clone(),
        ];
        for k in &keys {
            row.push(match r.movc_by_target.get(*k) {
                Some(Some(v)) => v.to_string(),
                Some(None) => "-".to_string(),
                None => String::new(),
            });
        }
        writer.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory write")).expect("csv output is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(seat: &str, party: &str, mov: u64, movc: &[(&str, Option<u64>)]) -> SeatRecord {
        SeatRecord {
            seat: seat.into(),
            num_candidates: 3,
            lrm: mov,
            mov,
            winner: format!("{seat}-w"),
            winner_party: party.into(),
            movc_by_target: movc.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    #[test]
    fn thresholds() {
        assert_eq!(threshold(93), 47);
        assert_eq!(threshold(1), 1);
        assert_eq!(threshold(100), 51);
        assert_eq!(threshold(2), 2);
    }

    #[test]
    fn coalition_keys() {
        let c = Coalition::parse("nat+Lib").unwrap();
        assert_eq!(c.key(), "LIB+NAT");
        assert!(c.contains("lib"));
        assert!(!c.contains("ALP"));
        assert_eq!(Coalition::parse(" + "), Err(ParliamentError::EmptyCoalition));
    }

    #[test]
    fn lose_with_exact_majority_takes_one_seat() {
        let records = vec![
            record("A", "X", 30, &[]),
            record("B", "X", 10, &[]),
            record("C", "Y", 5, &[]),
        ];
        let s = seats_to_lose_majority(&records, &Coalition::parse("X").unwrap(), 2).unwrap();
        assert_eq!(s.seats_needed, 1);
        assert_eq!(s.total_changes, 10);
        assert_eq!(
            seats_to_lose_majority(&records, &Coalition::parse("Y").unwrap(), 2),
            Err(ParliamentError::CoalitionLacksMajority { held: 1, threshold: 2 })
        );
    }

    #[test]
    fn lose_prefers_outside_column() {
        let records = vec![
            record("A", "X", 30, &[("!X", Some(40))]),
            record("B", "X", 10, &[("!X", Some(50))]),
            record("C", "X", 5, &[("!X", None)]),
        ];
        let s = seats_to_lose_majority(&records, &Coalition::parse("X").unwrap(), 3).unwrap();
        assert_eq!(
            s.chosen_seats,
            vec![ChosenSeat {
                seat: "A".into(),
                changes: 40
            }]
        );
    }

    #[test]
    fn win_scenarios() {
        let y = Coalition::parse("y").unwrap();
        let records = vec![
            record("A", "X", 30, &[("Y", Some(30))]),
            record("B", "X", 10, &[("Y", Some(12))]),
            record("C", "X", 10, &[("Y", None)]),
            record("D", "Y", 5, &[("Y", Some(0))]),
        ];
        let s = seats_to_win(&records, &y, 3).unwrap();
        assert_eq!(s.seats_held, 1);
        assert_eq!(s.seats_needed, 2);
        assert_eq!(s.total_changes, 42);
        assert_eq!(
            seats_to_win(&records, &y, 4),
            Err(ParliamentError::NotEnoughSeats {
                needed: 3,
                available: 2
            })
        );
        let done = seats_to_win(&records, &y, 1).unwrap();
        assert_eq!((done.seats_needed, done.total_changes), (0, 0));

        let mut missing = records.clone();
        missing[0].movc_by_target.clear();
        assert_eq!(
            seats_to_win(&missing, &y, 3),
            Err(ParliamentError::MissingMovc {
                seat: "A".into(),
                target: "Y".into()
            })
        );
    }

    #[test]
    fn ties_break_by_seat_name() {
        let records = vec![
            record("Zed", "X", 7, &[]),
            record("Alpha", "X", 7, &[]),
            record("Mid", "X", 7, &[]),
        ];
        let s = seats_to_lose_majority(&records, &Coalition::parse("X").unwrap(), 2).unwrap();
        let seats: Vec<&str> = s.chosen_seats.iter().map(|c| c.seat.as_str()).collect();
        assert_eq!(seats, vec!["Alpha", "Mid"]);
    }

    #[test]
    fn csv_round_trip() {
        let text = "seat,num_candidates,lrm,mov,winner,winner_party,movc:grn+alp,movc:!LIB\n\
                    North,5,10,8,n1,lib,12,8\n\
                    \"South, Inner\",4,3,3,s1,ALP,0,-\n\
                    East,3,1,1,e1,GRN,,\n";
        let records = parse_records(text).unwrap();
        assert_eq!(records[0].movc_by_target.get("ALP+GRN"), Some(&Some(12)));
        assert_eq!(records[0].winner_party, "LIB");
        assert_eq!(records[1].seat, "South, Inner");
        assert_eq!(records[1].movc_by_target.get("!LIB"), Some(&None));
        assert!(records[2].movc_by_target.is_empty());
        let again = parse_records(&write_records(&records)).unwrap();
        assert_eq!(again, records);
    }

    #[test]
    fn csv_errors() {
        let bad_header = "seat,lrm\nA,1\n";
        assert!(matches!(
            parse_records(bad_header),
            Err(ParliamentError::Records { line: 1, .. })
        ));
        let bad_value = "seat,num_candidates,lrm,mov,winner,winner_party\nA,3,x,1,a,LIB\n";
        assert!(matches!(
            parse_records(bad_value),
            Err(ParliamentError::Records { line: 2, .. })
        ));
        let dup = "seat,num_candidates,lrm,mov,winner,winner_party\nA,3,1,1,a,LIB\nA,3,1,1,a,LIB\n";
        assert!(matches!(
            parse_records(dup),
            Err(ParliamentError::Records { line: 3, .. })
        ));
    }

    #[test]
    fn live_record() {
        let p = Profile::parse("# candidates: a:LIB,b:ALP,c:GRE\n55,a\n25,c>a\n41,b>c\n15,c\n").unwrap();
        let targets = vec![
            Target {
                coalition: Coalition::parse("ALP").unwrap(),
                outside: false,
            },
            Target {
                coalition: Coalition::parse("ALP+GRE").unwrap(),
                outside: false,
            },
            Target {
                coalition: Coalition::parse("LIB").unwrap(),
                outside: false,
            },
            Target {
                coalition: Coalition::parse("LIB").unwrap(),
                outside: true,
            },
            Target {
                coalition: Coalition::parse("NAT").unwrap(),
                outside: false,
            },
        ];
        let options = SearchOptions {
            parallel: false,
            ..SearchOptions::default()
        };
        let r = seat_record("E1", &p, &targets, &options).unwrap();
        assert_eq!(
            (r.lrm, r.mov, r.winner.as_str(), r.winner_party.as_str()),
            (20, 1, "a", "LIB")
        );
        assert_eq!(r.movc_by_target["ALP"], Some(10));
        assert_eq!(r.movc_by_target["ALP+GRE"], Some(1));
        assert_eq!(r.movc_by_target["LIB"], Some(0));
        assert_eq!(r.movc_by_target["!LIB"], Some(1));
        assert_eq!(r.movc_by_target["NAT"], None);
    }
}
