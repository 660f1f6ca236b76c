//! JSON chain descriptions and CSV output.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bead::{validate_bead, BeadSpec};
use crate::error::{Error, Result};
use crate::necklace::{indicator_gallery, NecklaceSpec, Pattern, StateId};

/// `{"rows": [[...], ...]}`: rows `0..b-1`, the exit row implied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeadFile {
    pub rows: Vec<Vec<f64>>,
}

impl BeadFile {
    pub fn into_bead(self) -> Result<BeadSpec<f64>> {
        validate_bead(self.rows)
    }
}

impl From<&BeadSpec<f64>> for BeadFile {
    fn from(bead: &BeadSpec<f64>) -> Self {
        Self { rows: bead.rows().to_vec() }
    }
}

/// `{"bead": ..., "r": [0, 1, ...]}` or `{"bead": ..., "pattern": "...", "n": 50}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NecklaceFile {
    pub bead: BeadFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

impl NecklaceFile {
    /// The bead and the indicator sequence.
    pub fn resolve(self) -> Result<(BeadSpec<f64>, Vec<bool>)> {
        let r = match (self.r, self.pattern, self.n) {
            (Some(r), None, None) => parse_indicator(&r)?,
            (None, Some(pattern), Some(n)) => indicator_gallery(pattern.parse::<Pattern>()?, n)?,
            _ => {
                return Err(Error::InvalidInput(
                    "necklace needs either `r` or both `pattern` and `n`".into(),
                ))
            }
        };
        Ok((self.bead.into_bead()?, r))
    }
}

fn parse_indicator(r: &[u8]) -> Result<Vec<bool>> {
    r.iter()
        .map(|&x| match x {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(Error::InvalidInput(format!("indicator entries must be 0 or 1, got {other}"))),
        })
        .collect()
}

pub fn parse_bead_json(text: &str) -> Result<BeadSpec<f64>> {
    let file: BeadFile = serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("bead JSON: {e}")))?;
    file.into_bead()
}

pub fn parse_necklace_json(text: &str) -> Result<(BeadSpec<f64>, Vec<bool>)> {
    let file: NecklaceFile =
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("necklace JSON: {e}")))?;
    file.resolve()
}

/// Parses `0101...` or `0,1,0,1`.
pub fn parse_indicator_str(text: &str) -> Result<Vec<bool>> {
    let digits: Vec<u8> = text
        .chars()
        .filter(|c| !c.is_whitespace() && *c != ',')
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(Error::InvalidInput(format!("bad indicator character `{other}`"))),
        })
        .collect::<Result<_>>()?;
    parse_indicator(&digits)
}

/// Seventeen significant digits, enough to round-trip an `f64`.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

/// `state_id, position, kind, k` for one state.
pub fn state_columns(state: StateId) -> String {
    let kind = if state.is_link() { "link" } else { "interior" };
    format!("{state},{},{kind},{}", state.position(), state.bead_index())
}

pub const DISTRIBUTION_HEADER: &str = "state_id,position,kind,k,probability";

/// Writes `# key=value` lines.
pub fn write_metadata<W: Write>(out: &mut W, pairs: &[(&str, String)]) -> std::io::Result<()> {
    for (k, v) in pairs {
        writeln!(out, "# {k}={v}")?;
    }
    Ok(())
}

/// One row per state with its probability.
pub fn write_distribution_csv<W: Write>(out: &mut W, spec: &NecklaceSpec<f64>, probs: &[f64]) -> std::io::Result<()> {
    writeln!(out, "{DISTRIBUTION_HEADER}")?;
    for (s, &p) in spec.states().iter().zip(probs) {
        writeln!(out, "{},{}", state_columns(*s), fmt_num(p))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bead::BeadAnalysis;

    #[test]
    fn bead_json_roundtrip() {
        let bead = parse_bead_json(r#"{"rows": [[0.2, 0.5, 0.3], [0.4, 0.1, 0.5]]}"#).unwrap();
        assert_eq!(bead.exit(), 2);
        let text = serde_json::to_string(&BeadFile::from(&bead)).unwrap();
        assert_eq!(parse_bead_json(&text).unwrap(), bead);
        assert!(parse_bead_json(r#"{"rows": [[0, 1, 0], [0, 0, 1]]}"#).is_err());
        assert!(matches!(parse_bead_json("{"), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn necklace_json_forms() {
        let (_, r) = parse_necklace_json(r#"{"bead": {"rows": [[0.5, 0.5]]}, "r": [1, 0, 1]}"#).unwrap();
        assert_eq!(r, vec![true, false, true]);
        let (_, r) =
            parse_necklace_json(r#"{"bead": {"rows": [[0.5, 0.5]]}, "pattern": "alternating", "n": 4}"#).unwrap();
        assert_eq!(r, vec![true, false, true, false]);
        assert!(parse_necklace_json(r#"{"bead": {"rows": [[0.5, 0.5]]}, "r": [2]}"#).is_err());
        assert!(parse_necklace_json(r#"{"bead": {"rows": [[0.5, 0.5]]}, "n": 4}"#).is_err());
    }

    #[test]
    fn indicator_strings() {
        assert_eq!(parse_indicator_str("1,0, 1").unwrap(), vec![true, false, true]);
        assert_eq!(parse_indicator_str("0110").unwrap(), vec![false, true, true, false]);
        assert!(parse_indicator_str("012").is_err());
    }

    #[test]
    fn numbers_roundtrip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 6.02e23] {
            assert_eq!(fmt_num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn distribution_csv_shape() {
        let bead = BeadAnalysis::new(parse_bead_json(r#"{"rows": [[0.0, 0.5, 0.5], [0.0, 0.0, 1.0]]}"#).unwrap()).unwrap();
        let spec = NecklaceSpec::new(bead, vec![true, false]).unwrap();
        let pi = spec.stationary();
        let mut buf = Vec::new();
        write_distribution_csv(&mut buf, &spec, pi.probs()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], DISTRIBUTION_HEADER);
        assert_eq!(lines.len(), spec.num_states() + 1);
        assert!(lines[2].starts_with("interior:0:1,0,interior,1,"));
    }
}
