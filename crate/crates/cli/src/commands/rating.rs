//! `cpeval rating`: Elo-style rating trajectory across contests.

use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use cpeval_core::contest::{estimate_rating, RatingParams, ScoreboardEntry};
use cpeval_core::corpus::io as corpus_io;

use crate::util::{header, print_table, CmdError};
use crate::Cli;

#[derive(Args, Serialize)]
pub struct RatingArgs {
    /// Contest list: {contest_id, scoreboard, achieved_rank} records, where
    /// `scoreboard` is a path to scoreboard records (relative paths resolve
    /// against the contest file's directory).
    #[arg(long)]
    pub contests: PathBuf,
    /// Starting rating.
    #[arg(long, default_value_t = 1500.0)]
    pub initial: f64,
    /// Rating trajectory output.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
struct ContestRef {
    contest_id: String,
    scoreboard: PathBuf,
    achieved_rank: u32,
}

#[derive(Debug, Serialize, Deserialize)]
struct TrajectoryRecord {
    contest_index: usize,
    contest_id: String,
    achieved_rank: u32,
    expected_seed: f64,
    performance: f64,
    rating_before: f64,
    rating_after: f64,
}

pub fn run(cli: &Cli, args: &RatingArgs) -> Result<(), CmdError> {
    let refs: Vec<ContestRef> = corpus_io::read_records(&args.contests)?;
    let base = args.contests.parent().map(PathBuf::from).unwrap_or_default();
    let mut placements = Vec::with_capacity(refs.len());
    for r in &refs {
        let path = if r.scoreboard.is_absolute() {
            r.scoreboard.clone()
        } else {
            base.join(&r.scoreboard)
        };
        let entries: Vec<ScoreboardEntry> = corpus_io::read_records(&path)?;
        placements.push((entries, r.achieved_rank));
    }

    let params = RatingParams {
        initial_rating: args.initial,
        ..Default::default()
    };
    let trajectory = estimate_rating(&placements, &params)?;

    let records: Vec<TrajectoryRecord> = trajectory
        .iter()
        .zip(&refs)
        .map(|(u, r)| TrajectoryRecord {
            contest_index: u.contest_index,
            contest_id: r.contest_id.clone(),
            achieved_rank: u.achieved_rank,
            expected_seed: u.expected_seed,
            performance: u.performance,
            rating_before: u.rating_before,
            rating_after: u.rating_after,
        })
        .collect();

    let args_json = serde_json::to_value(args).expect("serializable args");
    let hdr = header(cli.seed, "rating", &args_json);
    corpus_io::write_records(&args.out, Some(&hdr), records.iter())?;

    print_table(
        &["contest", "rank", "expected-seed", "performance", "rating"],
        &records
            .iter()
            .map(|r| {
                vec![
                    r.contest_id.clone(),
                    r.achieved_rank.to_string(),
                    format!("{:.2}", r.expected_seed),
                    format!("{:.0}", r.performance),
                    format!("{:.0}", r.rating_after),
                ]
            })
            .collect::<Vec<_>>(),
    );
    Ok(())
}
