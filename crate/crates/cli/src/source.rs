//! Resolving beads and chains from command-line arguments.

use std::fs;
use std::path::Path;

use clap::Args;
use necklace::bead::{BeadAnalysis, BeadSpec};
use necklace::io::{parse_indicator_str, BeadFile, NecklaceFile};
use necklace::necklace::{indicator_gallery, NecklaceSpec, Pattern};

use crate::CliError;

/// Where the chain comes from.
#[derive(Debug, Clone, Args)]
pub struct ChainArgs {
    /// Bead: `simple:p`, inline JSON `{"rows": ...}` or a path to a JSON file.
    #[arg(long)]
    pub bead: Option<String>,
    /// Indicator pattern: alternating, block, all or fixed-count:m.
    #[arg(long, conflicts_with = "r")]
    pub pattern: Option<String>,
    /// Explicit indicator, e.g. `0101` or `0,1,0,1`.
    #[arg(long)]
    pub r: Option<String>,
    /// Number of link states (with --pattern).
    #[arg(long)]
    pub n: Option<usize>,
    /// Whole necklace as inline JSON or a JSON file.
    #[arg(long, conflicts_with_all = ["bead", "pattern", "r", "n"])]
    pub chain: Option<String>,
}

/// Inline JSON when the text starts with `{`, otherwise a file to read.
fn json_text(source: &str) -> Result<String, CliError> {
    if source.trim_start().starts_with('{') {
        return Ok(source.to_string());
    }
    let path = Path::new(source);
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read `{source}`: {e}")))
}

pub fn resolve_bead(source: &str) -> Result<BeadSpec<f64>, CliError> {
    if let Some(p) = source.strip_prefix("simple:") {
        let p: f64 = p
            .parse()
            .map_err(|_| CliError::Usage(format!("bad hold probability in `{source}`")))?;
        if !(p > 0.0 && p < 1.0) {
            return Err(CliError::Usage(format!("hold probability must lie in (0, 1), got {p}")));
        }
        return Ok(BeadSpec::simple(p)?);
    }
    let text = json_text(source)?;
    let file: BeadFile =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("bead JSON: {e}")))?;
    Ok(file.into_bead()?)
}

impl ChainArgs {
    /// Label for metadata lines.
    pub fn bead_label(&self) -> String {
        match (&self.bead, &self.chain) {
            (Some(b), _) if b.starts_with("simple:") => b.clone(),
            (Some(b), _) if !b.trim_start().starts_with('{') => b.clone(),
            (_, Some(c)) if !c.trim_start().starts_with('{') => c.clone(),
            _ => "inline".into(),
        }
    }

    pub fn resolve(&self) -> Result<NecklaceSpec<f64>, CliError> {
        let (bead, r) = if let Some(chain) = &self.chain {
            let text = json_text(chain)?;
            let file: NecklaceFile =
                serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("necklace JSON: {e}")))?;
            file.resolve()?
        } else {
            let source = self
                .bead
                .as_deref()
                .ok_or_else(|| CliError::Usage("one of --bead or --chain is required".into()))?;
            let bead = resolve_bead(source)?;
            let r = match (&self.pattern, &self.r, self.n) {
                (Some(p), None, Some(n)) => {
                    let pattern: Pattern = p.parse().map_err(|e| CliError::Usage(format!("{e}")))?;
                    indicator_gallery(pattern, n).map_err(|e| CliError::Usage(format!("{e}")))?
                }
                (None, Some(r), None) => parse_indicator_str(r).map_err(|e| CliError::Usage(format!("{e}")))?,
                (None, Some(r), Some(n)) => {
                    let r = parse_indicator_str(r).map_err(|e| CliError::Usage(format!("{e}")))?;
                    if r.len() != n {
                        return Err(CliError::Usage(format!("--r has {} entries but --n is {n}", r.len())));
                    }
                    r
                }
                _ => return Err(CliError::Usage("give --pattern with --n, or --r".into())),
            };
            (bead, r)
        };
        Ok(NecklaceSpec::new(BeadAnalysis::new(bead)?, r)?)
    }
}
