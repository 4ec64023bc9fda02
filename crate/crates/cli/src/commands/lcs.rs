//! `cpeval lcs`: longest common substring of a candidate against a corpus,
//! ignoring whitespace.

use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use cpeval_core::corpus::{io as corpus_io, lcs_against_corpus};

use crate::util::{header, CmdError};
use crate::Cli;

#[derive(Args, Serialize)]
pub struct LcsArgs {
    /// File holding the candidate text.
    #[arg(long)]
    pub candidate: PathBuf,
    /// Corpus entries, one file each; index follows argument order.
    #[arg(long, required = true, num_args = 1..)]
    pub corpus: Vec<PathBuf>,
    /// Match record output (optional; the summary always prints).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LcsRecord {
    length: usize,
    matched: String,
    corpus_index: usize,
    corpus_path: String,
}

pub fn run(cli: &Cli, args: &LcsArgs) -> Result<(), CmdError> {
    let candidate = std::fs::read_to_string(&args.candidate)?;
    let mut corpus = Vec::with_capacity(args.corpus.len());
    for path in &args.corpus {
        corpus.push(std::fs::read_to_string(path)?);
    }
    let m = lcs_against_corpus(&candidate, &corpus)?;
    let record = LcsRecord {
        length: m.length,
        matched: m.matched,
        corpus_index: m.corpus_index,
        corpus_path: args.corpus[m.corpus_index].display().to_string(),
    };

    if let Some(out) = &args.out {
        let args_json = serde_json::to_value(args).expect("serializable args");
        let hdr = header(cli.seed, "lcs", &args_json);
        corpus_io::write_records(out, Some(&hdr), [&record])?;
    }

    println!(
        "longest common substring: {} chars with corpus[{}] ({})",
        record.length, record.corpus_index, record.corpus_path
    );
    let preview: String = record.matched.chars().take(80).collect();
    if !preview.is_empty() {
        println!("match preview: {preview}");
    }
    Ok(())
}
