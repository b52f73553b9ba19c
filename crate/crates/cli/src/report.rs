//! Report payloads and their json, csv and table renderings.

use anyhow::Result;
use irv_margin::ballot::Profile;
use irv_margin::parliament::{Mode, ParliamentScenario};
use irv_margin::search::{MarginResult, SearchStats};
use irv_margin::tabulate::{last_round_margin, CountResult};
use serde::Serialize;
use std::fmt::Write;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Serialize)]
pub struct Tally {
    pub candidate: String,
    pub tally: u64,
}

#[derive(Serialize)]
pub struct RoundReport {
    pub round: usize,
    /// Standing candidates and their tallies, in roster order.
    pub tallies: Vec<Tally>,
    pub exhausted: u64,
    pub eliminated: String,
}

#[derive(Serialize)]
pub struct CountReport {
    pub candidates: Vec<String>,
    pub rounds: Vec<RoundReport>,
    pub elimination_order: Vec<String>,
    pub winner: String,
    pub last_round_margin: u64,
}

impl CountReport {
    pub fn new(profile: &Profile, count: &CountResult) -> Self {
        let rounds = count
            .rounds
            .iter()
            .enumerate()
            .map(|(i, r)| RoundReport {
                round: i + 1,
                tallies: r
                    .tallies
                    .standing
                    .iter()
                    .map(|c| Tally {
                        candidate: profile.id(c).to_string(),
                        tally: r.tallies.get(c),
                    })
                    .collect(),
                exhausted: r.tallies.exhausted,
                eliminated: profile.id(r.eliminated).to_string(),
            })
            .collect();
        CountReport {
            candidates: profile.ids(profile.all_candidates()),
            rounds,
            elimination_order: profile.format_order(&count.elimination_order),
            winner: profile.id(count.winner).to_string(),
            last_round_margin: last_round_margin(count),
        }
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => json(self),
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                let mut header = vec!["round".to_string()];
                header.extend(self.candidates.iter().cloned());
                header.extend(["exhausted".into(), "eliminated".into()]);
                w.write_record(&header)?;
                for r in &self.rounds {
                    let mut row = vec![r.round.to_string()];
                    for id in &self.candidates {
                        let cell = r
                            .tallies
                            .iter()
                            .find(|t| &t.candidate == id)
                            .map(|t| t.tally.to_string());
                        row.push(cell.unwrap_or_default());
                    }
                    row.extend([r.exhausted.to_string(), r.eliminated.clone()]);
                    w.write_record(&row)?;
                }
                finish(w)
            }
            Format::Table => {
                let mut out = String::new();
                for r in &self.rounds {
                    let cells: Vec<String> = r
                        .tallies
                        .iter()
                        .map(|t| format!("{} {}", t.candidate, t.tally))
                        .collect();
                    writeln!(
                        out,
                        "round {:>2}: {}; exhausted {}; eliminate {}",
                        r.round,
                        cells.join(", "),
                        r.exhausted,
                        r.eliminated
                    )?;
                }
                writeln!(out, "winner: {}", self.winner)?;
                writeln!(out, "last-round margin: {}", self.last_round_margin)?;
                Ok(out)
            }
        }
    }
}

#[derive(Serialize)]
pub struct ChainChange {
    /// Ranking written onto or taken from ballots; empty means exhausted.
    pub ranking: Vec<String>,
    pub removed: u64,
    pub added: u64,
}

#[derive(Serialize)]
pub struct MarginReport {
    pub winner: String,
    pub last_round_margin: u64,
    pub alternates: Vec<String>,
    pub margin: u64,
    pub witness_order: Vec<String>,
    pub witness_changes: Vec<ChainChange>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stats: Option<SearchStats>,
}

impl MarginReport {
    pub fn new(profile: &Profile, alternates: Vec<String>, result: &MarginResult, stats: bool) -> Self {
        let witness_changes = result
            .witness_manipulation
            .changes
            .iter()
            .filter(|c| c.removed > 0 || c.added > 0)
            .map(|c| ChainChange {
                ranking: profile.format_order(&c.chain),
                removed: c.removed,
                added: c.added,
            })
            .collect();
        MarginReport {
            winner: profile.id(result.winner).to_string(),
            last_round_margin: result.last_round_margin,
            alternates,
            margin: result.value,
            witness_order: profile.format_order(result.witness_order.order()),
            witness_changes,
            stats: stats.then_some(result.stats),
        }
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => json(self),
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                let mut header = vec!["winner", "last_round_margin", "alternates", "margin", "witness_order"];
                if self.stats.is_some() {
                    header.extend(["nodes_expanded", "nodes_pruned", "lps_solved", "ips_solved"]);
                }
                w.write_record(&header)?;
                let mut row = vec![
                    self.winner.clone(),
                    self.last_round_margin.to_string(),
                    self.alternates.join("+"),
                    self.margin.to_string(),
                    self.witness_order.join(">"),
                ];
                if let Some(s) = &self.stats {
                    row.extend([s.nodes_expanded, s.nodes_pruned, s.lps_solved, s.ips_solved].map(|v| v.to_string()));
                }
                w.write_record(&row)?;
                finish(w)
            }
            Format::Table => {
                let mut out = String::new();
                writeln!(out, "winner: {}", self.winner)?;
                writeln!(out, "last-round margin: {}", self.last_round_margin)?;
                writeln!(out, "alternates: {}", self.alternates.join(", "))?;
                writeln!(out, "margin: {}", self.margin)?;
                writeln!(out, "witness elimination order: {}", self.witness_order.join(" > "))?;
                for c in &self.witness_changes {
                    let ranking = if c.ranking.is_empty() {
                        "(exhausted)".to_string()
                    } else {
                        c.ranking.join(">")
                    };
                    writeln!(out, "  {ranking:<24} -{:<8} +{}", c.removed, c.added)?;
                }
                if let Some(s) = &self.stats {
                    writeln!(
                        out,
                        "search: {} nodes expanded, {} pruned, {} LPs, {} IPs",
                        s.nodes_expanded, s.nodes_pruned, s.lps_solved, s.ips_solved
                    )?;
                }
                Ok(out)
            }
        }
    }
}

pub fn render_scenario(s: &ParliamentScenario, format: Format) -> Result<String> {
    let mode = match s.mode {
        Mode::LoseMajority => "lose",
        Mode::WinMajority => "win",
    };
    match format {
        Format::Json => json(s),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["mode", "coalition", "seat", "changes"])?;
            for c in &s.chosen_seats {
                w.write_record([mode, &s.coalition, &c.seat, &c.changes.to_string()])?;
            }
            finish(w)
        }
        Format::Table => {
            let mut out = String::new();
            let verb = match s.mode {
                Mode::LoseMajority => "lose its majority",
                Mode::WinMajority => "win a majority",
            };
            writeln!(out, "{} to {verb}", s.coalition)?;
            writeln!(
                out,
                "threshold {}, seats held {}, seats to change {}",
                s.threshold, s.seats_held, s.seats_needed
            )?;
            let width = s.chosen_seats.iter().map(|c| c.seat.len()).max().unwrap_or(4).max(4);
            writeln!(out, "{:<width$}  {:>8}", "seat", "changes")?;
            for c in &s.chosen_seats {
                writeln!(out, "{:<width$}  {:>8}", c.seat, c.changes)?;
            }
            writeln!(out, "{:<width$}  {:>8}", "total", s.total_changes)?;
            Ok(out)
        }
    }
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    Ok(String::from_utf8(w.into_inner()?)?)
}
