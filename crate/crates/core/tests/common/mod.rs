#![allow(dead_code)]

use necklace::bead::{validate_bead, BeadAnalysis, BeadSpec};
use necklace::necklace::{indicator_gallery, NecklaceSpec, Pattern};

pub fn simple(p: f64) -> BeadAnalysis<f64> {
    BeadAnalysis::new(BeadSpec::simple(p).unwrap()).unwrap()
}

pub fn bead(rows: &[&[f64]]) -> BeadAnalysis<f64> {
    BeadAnalysis::new(validate_bead(rows.iter().map(|r| r.to_vec()).collect()).unwrap()).unwrap()
}

/// The b = 2 bead used throughout.
pub fn two_state() -> BeadAnalysis<f64> {
    bead(&[&[0.2, 0.5, 0.3], &[0.4, 0.1, 0.5]])
}

pub fn beads() -> Vec<(&'static str, BeadAnalysis<f64>)> {
    vec![
        ("simple:2/3", simple(2.0 / 3.0)),
        ("simple:1/2", simple(0.5)),
        ("simple:1/10", simple(0.1)),
        ("b2-mixed", two_state()),
        ("b2-skip", bead(&[&[0.0, 0.5, 0.5], &[0.0, 0.0, 1.0]])),
        ("b2-return", bead(&[&[0.0, 0.7, 0.3], &[0.5, 0.0, 0.5]])),
        ("b3", bead(&[&[0.1, 0.6, 0.1, 0.2], &[0.3, 0.0, 0.5, 0.2], &[0.0, 0.2, 0.3, 0.5]])),
    ]
}

pub const PATTERNS: [Pattern; 4] = [Pattern::Alternating, Pattern::Block, Pattern::All, Pattern::FixedCount(2)];

/// Every bead against every pattern at a few lengths.
pub fn chains() -> Vec<(String, NecklaceSpec<f64>)> {
    let mut out = Vec::new();
    for (name, b) in beads() {
        for pattern in PATTERNS {
            for n in [5, 9, 20] {
                let r = indicator_gallery(pattern, n).unwrap();
                out.push((format!("{name}/{pattern}/n={n}"), NecklaceSpec::new(b.clone(), r).unwrap()));
            }
        }
    }
    out
}

pub fn alternating(p: f64, n: usize) -> NecklaceSpec<f64> {
    NecklaceSpec::new(simple(p), indicator_gallery(Pattern::Alternating, n).unwrap()).unwrap()
}
