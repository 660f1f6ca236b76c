//! Necklace chains: link states on a directed cycle, adjacent links joined
//! either by a copy of a bead or by a deterministic edge.

use std::fmt;
use std::str::FromStr;

use crate::bead::BeadAnalysis;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::{ksum, Real};

/// A state of a necklace.
///
/// Bead state `k = 0` of the bead at position `i` is `Link(i)` and bead
/// state `b` is `Link(i + 1 mod n)`; only `1 <= k <= b - 1` are interiors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StateId {
    Link(usize),
    BeadInterior(usize, usize),
}

impl StateId {
    pub fn position(self) -> usize {
        match self {
            StateId::Link(i) | StateId::BeadInterior(i, _) => i,
        }
    }

    /// Index within the bead (0 for links).
    pub fn bead_index(self) -> usize {
        match self {
            StateId::Link(_) => 0,
            StateId::BeadInterior(_, k) => k,
        }
    }

    pub fn is_link(self) -> bool {
        matches!(self, StateId::Link(_))
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateId::Link(i) => write!(f, "link:{i}"),
            StateId::BeadInterior(i, k) => write!(f, "interior:{i}:{k}"),
        }
    }
}

impl FromStr for StateId {
    type Err = Error;

    /// Accepts `s0`, `link:i` and `interior:i:k`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("cannot parse state `{s}`"));
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |x: &str| x.parse::<usize>().map_err(|_| bad());
        match parts.as_slice() {
            ["s0"] => Ok(StateId::Link(0)),
            ["link", i] => Ok(StateId::Link(num(i)?)),
            ["interior", i, k] => Ok(StateId::BeadInterior(num(i)?, num(k)?)),
            _ => Err(bad()),
        }
    }
}

/// Named indicator vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pattern {
    /// Beads at even positions.
    Alternating,
    /// Beads at the first `n/2` positions.
    Block,
    /// A bead at every position.
    All,
    /// Beads at the first `m` positions.
    FixedCount(usize),
}

impl FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "alternating" => return Ok(Pattern::Alternating),
            "block" => return Ok(Pattern::Block),
            "all" => return Ok(Pattern::All),
            _ => {}
        }
        let count = s
            .strip_prefix("fixed-count:")
            .or_else(|| s.strip_prefix("fixed-count(").and_then(|r| r.strip_suffix(')')));
        count
            .and_then(|m| m.parse().ok())
            .map(Pattern::FixedCount)
            .ok_or_else(|| Error::UnknownPattern(s.to_string()))
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pattern::Alternating => f.write_str("alternating"),
            Pattern::Block => f.write_str("block"),
            Pattern::All => f.write_str("all"),
            Pattern::FixedCount(m) => write!(f, "fixed-count:{m}"),
        }
    }
}

/// Indicator vector for a named pattern on `n` positions.
pub fn indicator_gallery(pattern: Pattern, n: usize) -> Result<Vec<bool>> {
    if n < 2 {
        return Err(Error::OutOfRange { what: "n", value: n as f64 });
    }
    let r = match pattern {
        Pattern::Alternating => (0..n).map(|i| i % 2 == 0).collect(),
        Pattern::Block => (0..n).map(|i| i < n / 2).collect(),
        Pattern::All => vec![true; n],
        Pattern::FixedCount(m) => {
            if m > n {
                return Err(Error::OutOfRange { what: "bead count", value: m as f64 });
            }
            (0..n).map(|i| i < m).collect()
        }
    };
    Ok(r)
}

/// A bead, an indicator vector, and the canonical state indexing they induce.
#[derive(Debug, Clone, PartialEq)]
pub struct NecklaceSpec<F> {
    bead: BeadAnalysis<F>,
    r: Vec<bool>,
    prefix: Vec<usize>,
    link_index: Vec<usize>,
    states: Vec<StateId>,
}

impl<F: Real> NecklaceSpec<F> {
    pub fn new(bead: BeadAnalysis<F>, r: Vec<bool>) -> Result<Self> {
        if r.is_empty() {
            return Err(Error::OutOfRange { what: "n", value: 0.0 });
        }
        if !r.iter().any(|&x| x) {
            return Err(Error::NoBeads);
        }
        let interiors = bead.exit() - 1;
        let mut prefix = Vec::with_capacity(r.len() + 1);
        prefix.push(0);
        let mut link_index = Vec::with_capacity(r.len());
        let mut states = Vec::new();
        for (i, &has_bead) in r.iter().enumerate() {
            prefix.push(prefix[i] + usize::from(has_bead));
            link_index.push(states.len());
            states.push(StateId::Link(i));
            if has_bead {
                states.extend((1..=interiors).map(|k| StateId::BeadInterior(i, k)));
            }
        }
        Ok(Self { bead, r, prefix, link_index, states })
    }

    pub fn bead(&self) -> &BeadAnalysis<F> {
        &self.bead
    }

    /// Number of link states.
    pub fn n(&self) -> usize {
        self.r.len()
    }

    /// Number of beads.
    pub fn m(&self) -> usize {
        self.prefix[self.n()]
    }

    pub fn indicator(&self) -> &[bool] {
        &self.r
    }

    pub fn has_bead(&self, i: usize) -> bool {
        self.r[i]
    }

    /// `R_i`, the number of beads strictly before position `i` (`0 <= i <= n`).
    pub fn prefix(&self, i: usize) -> usize {
        self.prefix[i]
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[StateId] {
        &self.states
    }

    pub fn state(&self, index: usize) -> StateId {
        self.states[index]
    }

    /// Canonical index of a state, if it exists in this necklace.
    pub fn index(&self, state: StateId) -> Option<usize> {
        match state {
            StateId::Link(i) => self.link_index.get(i).copied(),
            StateId::BeadInterior(i, k) => {
                (i < self.n() && self.r[i] && k >= 1 && k < self.bead.exit()).then(|| self.link_index[i] + k)
            }
        }
    }

    /// The necklace state playing bead state `k` (`0..=b`) of the bead at position `i`.
    pub fn bead_state(&self, i: usize, k: usize) -> StateId {
        let b = self.bead.exit();
        if k == 0 {
            StateId::Link(i)
        } else if k == b {
            StateId::Link((i + 1) % self.n())
        } else {
            StateId::BeadInterior(i, k)
        }
    }

    /// Whether the state belongs to a bead (including the link at its entrance).
    pub fn in_bead(&self, state: StateId) -> bool {
        self.r[state.position()]
    }

    /// `n + (mu - 1) m`.
    pub fn effective_length(&self) -> F {
        F::count(self.n()) + (self.bead.mu() - F::one()) * F::count(self.m())
    }

    pub fn operator(&self) -> TransitionOperator<F> {
        let bead = self.bead.spec();
        let b = bead.exit();
        let mut rows = Vec::with_capacity(self.num_states());
        for &state in &self.states {
            let i = state.position();
            let mut row: Vec<(usize, F)> = Vec::new();
            if self.r[i] {
                let k = state.bead_index();
                for target in 0..=b {
                    let w = bead.prob(k, target);
                    if w > F::zero() {
                        let col = self.index(self.bead_state(i, target)).unwrap();
                        match row.iter_mut().find(|(c, _)| *c == col) {
                            Some((_, acc)) => *acc = *acc + w,
                            None => row.push((col, w)),
                        }
                    }
                }
            } else {
                row.push((self.link_index[(i + 1) % self.n()], F::one()));
            }
            row.sort_by_key(|&(c, _)| c);
            rows.push(row);
        }
        TransitionOperator::from_rows(rows)
    }

    /// Stationary distribution from the closed form in terms of the closure's
    /// stationary law and the mean passage time.
    pub fn stationary(&self) -> Distribution<F> {
        let denom = self.effective_length();
        let scale = self.bead.mu() + F::one();
        let pi = self.bead.stationary();
        let probs = self
            .states
            .iter()
            .map(|&s| if self.in_bead(s) { scale * pi[s.bead_index()] / denom } else { F::one() / denom })
            .collect();
        Distribution::new(probs)
    }
}

/// Builds the indexing and the transition operator in one go.
pub fn build_necklace<F: Real>(
    bead: BeadAnalysis<F>,
    r: Vec<bool>,
) -> Result<(NecklaceSpec<F>, TransitionOperator<F>)> {
    let spec = NecklaceSpec::new(bead, r)?;
    let op = spec.operator();
    Ok((spec, op))
}

/// Sparse row-stochastic operator in compressed-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionOperator<F> {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<F>,
}

impl<F: Real> TransitionOperator<F> {
    pub fn from_rows(rows: Vec<Vec<(usize, F)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for row in rows {
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Self { row_ptr, cols, vals }
    }

    pub fn from_dense(m: &DenseMatrix<F>) -> Self {
        let rows = (0..m.rows())
            .map(|i| {
                m.row(i)
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v != F::zero())
                    .map(|(j, &v)| (j, v))
                    .collect()
            })
            .collect();
        Self::from_rows(rows)
    }

    pub fn num_states(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, F)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> F {
        self.row(i).find(|&(c, _)| c == j).map_or(F::zero(), |(_, v)| v)
    }

    pub fn to_dense(&self) -> DenseMatrix<F> {
        let n = self.num_states();
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for (j, v) in self.row(i) {
                m[(i, j)] = m[(i, j)] + v;
            }
        }
        m
    }

    pub fn row_sums(&self) -> Vec<F> {
        (0..self.num_states()).map(|i| ksum(self.row(i).map(|(_, v)| v))).collect()
    }

    /// `dst = src * P`.
    pub fn step(&self, src: &[F], dst: &mut [F]) {
        dst.iter_mut().for_each(|x| *x = F::zero());
        for (i, &mass) in src.iter().enumerate() {
            if mass == F::zero() {
                continue;
            }
            for (j, v) in self.row(i) {
                dst[j] = dst[j] + mass * v;
            }
        }
    }

    /// `max_s |(pi P)(s) - pi(s)|`.
    pub fn stationarity_residual(&self, pi: &[F]) -> F {
        let mut next = vec![F::zero(); pi.len()];
        self.step(pi, &mut next);
        next.iter().zip(pi).fold(F::zero(), |acc, (&a, &b)| acc.max((a - b).abs()))
    }
}

/// Probability vector over necklace states in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution<F> {
    probs: Vec<F>,
}

impl<F: Real> Distribution<F> {
    pub fn new(probs: Vec<F>) -> Self {
        Self { probs }
    }

    pub fn point_mass(len: usize, index: usize) -> Self {
        let mut probs = vec![F::zero(); len];
        probs[index] = F::one();
        Self { probs }
    }

    pub fn probs(&self) -> &[F] {
        &self.probs
    }

    pub fn into_probs(self) -> Vec<F> {
        self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn total(&self) -> F {
        ksum(self.probs.iter().copied())
    }

    /// Clamps rounding negatives to zero and renormalizes.
    pub fn clamped(mut self) -> Self {
        for p in &mut self.probs {
            if *p < F::zero() {
                *p = F::zero();
            }
        }
        let total = self.total();
        if total > F::zero() {
            for p in &mut self.probs {
                *p = *p / total;
            }
        }
        self
    }
}

/// `start * P^t` by repeated sparse application. Output is clamped and
/// renormalized once at the end.
pub fn evolve<F: Real>(op: &TransitionOperator<F>, start: &Distribution<F>, t: u64) -> Distribution<F> {
    let mut cur = start.probs().to_vec();
    let mut next = vec![F::zero(); cur.len()];
    for _ in 0..t {
        op.step(&cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    Distribution::new(cur).clamped()
}

/// Half the L1 distance.
pub fn tv_distance<F: Real>(a: &Distribution<F>, b: &Distribution<F>) -> Result<F> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { left: a.len(), right: b.len() });
    }
    let l1 = ksum(a.probs().iter().zip(b.probs()).map(|(&x, &y)| (x - y).abs()));
    Ok(l1 / F::lit(2.0))
}
