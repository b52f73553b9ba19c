mod manifest;
mod report;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use irv_margin::ballot::{CandidateSet, Profile};
use irv_margin::distance::build_model;
use irv_margin::oracle::{oracle_movc, OracleConfig, OracleOutcome};
use irv_margin::parliament::{
    parse_records, seat_record, seats_to_lose_majority, seats_to_win, threshold, write_records, Coalition, SeatRecord,
    Target,
};
use irv_margin::search::{compute_mov, compute_movc, SearchOptions};
use irv_margin::synthetic::{generate, SyntheticSeat};
use irv_margin::tabulate::{run_election, TieRule};
use manifest::{read_profile, Manifest};
use report::{render_scenario, CountReport, Format, MarginReport};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "irvmargin",
    version,
    about = "Instant-runoff counts and exact margins of victory"
)]
struct Cli {
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Official tie rule for the count (default: fail).
    #[arg(long, global = true, value_enum)]
    tie_rule: Option<TieArg>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Include search statistics in the report.
    #[arg(long, global = true)]
    stats: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TieArg {
    Fail,
    Lex,
}

impl From<TieArg> for TieRule {
    fn from(t: TieArg) -> Self {
        match t {
            TieArg::Fail => TieRule::Fail,
            TieArg::Lex => TieRule::Lexicographic,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Lose,
    Win,
}

#[derive(Subcommand)]
enum Command {
    /// Run the count round by round.
    Tabulate { ballots: PathBuf },
    /// Margin of victory, or the margin for a set of alternate winners.
    Margin {
        ballots: PathBuf,
        /// Candidate ids or party codes, separated by `,` or `+`.
        #[arg(long)]
        alternates: Option<String>,
        /// Write the distance LP of the witness order to this file.
        #[arg(long)]
        dump_lp: Option<PathBuf>,
    },
    /// Same as `margin --alternates`.
    Movc {
        ballots: PathBuf,
        #[arg(long)]
        alternates: String,
        #[arg(long)]
        dump_lp: Option<PathBuf>,
    },
    /// Cheapest set of seats to flip to change who governs.
    Parliament {
        /// Seat-record CSV.
        #[arg(long, conflicts_with = "manifest", required_unless_present = "manifest")]
        records: Option<PathBuf>,
        /// JSON seat manifest; margins are computed from the ballots.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: ModeArg,
        /// Party codes separated by `+`.
        #[arg(long)]
        coalition: String,
        /// Seats needed to govern (default: more than half).
        #[arg(long)]
        threshold: Option<usize>,
        /// Save the computed seat records as CSV.
        #[arg(long, requires = "manifest")]
        write_records: Option<PathBuf>,
    },
    /// Exhaustive search over small elections.
    #[command(hide = true)]
    Oracle {
        ballots: PathBuf,
        #[arg(long)]
        alternates: Option<String>,
        #[arg(long, default_value_t = 100)]
        max_changes: u64,
    },
    /// Print a seeded random election in ballot-file form.
    #[command(hide = true)]
    Synth {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        candidates: usize,
        #[arg(long, default_value_t = 50_000)]
        ballots: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.as_bytes()).is_err() {
                return ExitCode::FAILURE;
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: &Cli) -> Result<String> {
    let tie_rule = cli.tie_rule.map(TieRule::from);
    let options = |rule: Option<TieRule>| SearchOptions {
        tie_rule: tie_rule.or(rule).unwrap_or_default(),
        parallel: true,
    };
    match &cli.command {
        Command::Tabulate { ballots } => {
            let profile = read_profile(ballots)?;
            let count = run_election(&profile, options(None).tie_rule)?;
            CountReport::new(&profile, &count).render(cli.format)
        }
        Command::Margin {
            ballots,
            alternates,
            dump_lp,
        } => with_workers(cli.workers, || {
            margin(cli, ballots, alternates.as_deref(), dump_lp.as_deref(), &options(None))
        }),
        Command::Movc {
            ballots,
            alternates,
            dump_lp,
        } => with_workers(cli.workers, || {
            margin(cli, ballots, Some(alternates), dump_lp.as_deref(), &options(None))
        }),
        Command::Parliament {
            records,
            manifest,
            mode,
            coalition,
            threshold: seats_needed,
            write_records: save,
        } => {
            let coalition = Coalition::parse(coalition)?;
            let records = match (records, manifest) {
                (Some(path), _) => {
                    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                    parse_records(&text).with_context(|| format!("{}", path.display()))?
                }
                (None, Some(path)) => {
                    let manifest = Manifest::read(path)?;
                    let target = Target {
                        coalition: coalition.clone(),
                        outside: matches!(mode, ModeArg::Lose),
                    };
                    let opts = options(manifest.options.tie_rule);
                    let base = path.parent().unwrap_or(Path::new("."));
                    let records = with_workers(cli.workers.or(manifest.options.workers), || {
                        compute_records(&manifest, base, &target, &opts)
                    })?;
                    if let Some(out) = save {
                        fs::write(out, write_records(&records))
                            .with_context(|| format!("writing {}", out.display()))?;
                    }
                    records
                }
                (None, None) => unreachable!("clap requires one source"),
            };
            let t = seats_needed.unwrap_or_else(|| threshold(records.len()));
            let scenario = match mode {
                ModeArg::Lose => seats_to_lose_majority(&records, &coalition, t)?,
                ModeArg::Win => seats_to_win(&records, &coalition, t)?,
            };
            render_scenario(&scenario, cli.format)
        }
        Command::Oracle {
            ballots,
            alternates,
            max_changes,
        } => {
            let profile = read_profile(ballots)?;
            let count = run_election(&profile, options(None).tie_rule)?;
            let set = match alternates {
                Some(text) => resolve_alternates(&profile, text)?,
                None => profile.all_candidates().without(count.winner),
            };
            let config = OracleConfig {
                max_changes: *max_changes,
                ..OracleConfig::default()
            };
            Ok(match oracle_movc(&profile, set, &config)? {
                OracleOutcome::Exact(v) => format!("{v}\n"),
                OracleOutcome::AboveCap => format!("more than {max_changes}\n"),
            })
        }
        Command::Synth {
            seed,
            candidates,
            ballots,
        } => Ok(generate(&SyntheticSeat {
            num_candidates: *candidates,
            num_ballots: *ballots,
            seed: *seed,
        })
        .to_text()),
    }
}

fn margin(
    cli: &Cli,
    ballots: &Path,
    alternates: Option<&str>,
    dump_lp: Option<&Path>,
    options: &SearchOptions,
) -> Result<String> {
    let profile = read_profile(ballots)?;
    let (set, result) = match alternates {
        Some(text) => {
            let set = resolve_alternates(&profile, text)?;
            (set, compute_movc(&profile, set, options)?)
        }
        None => {
            let result = compute_mov(&profile, options)?;
            (profile.all_candidates().without(result.winner), result)
        }
    };
    if let Some(path) = dump_lp {
        let lp = build_model(&profile, &result.witness_order).to_lp(&profile);
        fs::write(path, lp.to_lp_text()).with_context(|| format!("writing {}", path.display()))?;
    }
    MarginReport::new(&profile, profile.ids(set), &result, cli.stats).render(cli.format)
}

/// Each token is a candidate id or, failing that, a party code.
fn resolve_alternates(profile: &Profile, text: &str) -> Result<CandidateSet> {
    let mut set = CandidateSet::empty();
    for token in text.split([',', '+']).map(str::trim).filter(|t| !t.is_empty()) {
        if let Some(c) = profile.index_of(token) {
            set.insert(c);
            continue;
        }
        let members = profile.candidates_of_parties(&[token]);
        if members.is_empty() {
            bail!("`{token}` is neither a candidate nor a party in this election");
        }
        for c in members.iter() {
            set.insert(c);
        }
    }
    if set.is_empty() {
        bail!("no alternates given");
    }
    Ok(set)
}

fn compute_records(
    manifest: &Manifest,
    base: &Path,
    target: &Target,
    options: &SearchOptions,
) -> Result<Vec<SeatRecord>> {
    use rayon::prelude::*;
    let seats = manifest.load_seats(base)?;
    seats
        .par_iter()
        .map(|seat| {
            seat_record(&seat.name, &seat.profile, std::slice::from_ref(target), options)
                .with_context(|| format!("seat {}", seat.name))
        })
        .collect()
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match workers {
        None => f(),
        Some(0) => Err(anyhow!("--workers must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("starting worker pool")?
            .install(f),
    }
}
