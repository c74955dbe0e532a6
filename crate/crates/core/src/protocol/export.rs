//! Transcript export: JSON lines, one `RoundTranscript` per line, plus a
//! summary object with the check report and keys.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{CheckReport, ProtocolConfig, ProtocolOutcome, ProtocolRun, RoundTranscript};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: ProtocolConfig,
    pub accepted: bool,
    pub outcome: ProtocolOutcome,
    pub report: CheckReport,
}

impl From<&ProtocolRun> for RunSummary {
    fn from(run: &ProtocolRun) -> Self {
        Self {
            config: run.config.clone(),
            accepted: run.accepted(),
            outcome: run.outcome.clone(),
            report: run.report.clone(),
        }
    }
}

pub fn write_transcripts_jsonl<W: Write>(
    mut out: W,
    transcripts: &[RoundTranscript],
) -> io::Result<()> {
    for t in transcripts {
        serde_json::to_writer(&mut out, t)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_transcripts_jsonl<R: BufRead>(input: R) -> io::Result<Vec<RoundTranscript>> {
    input
        .lines()
        .filter(|l| l.as_ref().map_or(true, |s| !s.trim().is_empty()))
        .map(|line| Ok(serde_json::from_str(&line?)?))
        .collect()
}
