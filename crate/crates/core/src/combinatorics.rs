//! Higher-order transition probabilities of a necklace from convolution
//! powers of the first-passage distribution, without touching the
//! necklace's transition operator.
//!
//! Starting at `s0`, the walk sits at link `s_i` (arriving from outside the
//! bead at `i`) at time `t` after `j` full loops exactly when
//! `S_{mj + R_i} + (n - m) j + (i - R_i) = t`, where `S_J` is a sum of `J`
//! independent passage times. Bead states add a sum over the time spent in
//! the current bead since the last arrival.

use crate::bead::{FirstPassagePmf, BeadSpec};
use crate::error::{Error, Result};
use crate::necklace::{NecklaceSpec, StateId};
use crate::scalar::{ksum, Real};

/// Survival mass below which bead trajectories are cut off.
const TRAJECTORY_EPS: f64 = 1e-17;

/// Exact convolution power: the full pmf of `X_1 + ... + X_j` over the
/// truncated support `0..=j * horizon`.
pub fn sum_pmf<F: Real>(f: &FirstPassagePmf<F>, j: usize) -> Vec<F> {
    let mut acc = vec![F::one()];
    for _ in 0..j {
        let window = acc.len() - 1 + f.horizon();
        acc = convolve(&acc, f.probs(), window);
    }
    acc
}

/// `(a * f)[x]` for `x <= window`.
fn convolve<F: Real>(a: &[F], f: &[F], window: usize) -> Vec<F> {
    let mut out = vec![F::zero(); window + 1];
    for (x, &ax) in a.iter().enumerate() {
        if ax == F::zero() {
            continue;
        }
        for (t, &ft) in f.iter().enumerate().skip(1) {
            let y = x + t;
            if y > window {
                break;
            }
            out[y] = out[y] + ax * ft;
        }
    }
    out
}

/// Pmfs of `S_0, ..., S_J` restricted to `0..=window`.
#[derive(Debug, Clone, PartialEq)]
pub struct SumPmfTable<F> {
    window: usize,
    sums: Vec<Vec<F>>,
}

impl<F: Real> SumPmfTable<F> {
    /// Builds `S_0..=S_max_count` incrementally, each from its predecessor.
    pub fn new(f: &FirstPassagePmf<F>, max_count: usize, window: usize) -> Self {
        let mut sums = Vec::with_capacity(max_count + 1);
        let mut base = vec![F::zero(); window + 1];
        base[0] = F::one();
        sums.push(base);
        for j in 1..=max_count {
            let next = convolve(&sums[j - 1], f.probs(), window);
            sums.push(next);
        }
        Self { window, sums }
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn max_count(&self) -> usize {
        self.sums.len() - 1
    }

    /// `Pr[S_j = x]`; zero for negative `x` and, by construction, for `x > window`.
    pub fn prob(&self, j: usize, x: i64) -> F {
        if x < 0 {
            return F::zero();
        }
        self.sums
            .get(j)
            .and_then(|s| s.get(x as usize))
            .copied()
            .unwrap_or_else(F::zero)
    }

    pub fn pmf(&self, j: usize) -> &[F] {
        &self.sums[j]
    }
}

/// Cached trajectories of the bead run from each of its non-exit states.
#[derive(Debug, Clone, PartialEq)]
struct BeadTrajectories<F> {
    /// `occupancy[l][a][k] = B^a(l, k)` for `k < b`.
    occupancy: Vec<Vec<Vec<F>>>,
    /// `first_hit[l][a]` = probability of first reaching the exit at step `a` from `l`.
    first_hit: Vec<Vec<F>>,
}

impl<F: Real> BeadTrajectories<F> {
    fn new(bead: &BeadSpec<F>, max_steps: usize) -> Self {
        let b = bead.exit();
        let eps = F::tol(TRAJECTORY_EPS);
        let mut occupancy = Vec::with_capacity(b);
        let mut first_hit = Vec::with_capacity(b);
        for l in 0..b {
            let mut current = vec![F::zero(); b];
            current[l] = F::one();
            let mut next = vec![F::zero(); b];
            let mut occ = vec![current.clone()];
            let mut hits = vec![F::zero()];
            for _ in 0..max_steps {
                let hit = bead.step_transient(&current, &mut next);
                std::mem::swap(&mut current, &mut next);
                hits.push(hit);
                occ.push(current.clone());
                if ksum(current.iter().copied()) < eps {
                    break;
                }
            }
            occupancy.push(occ);
            first_hit.push(hits);
        }
        Self { occupancy, first_hit }
    }

    fn occupancy(&self, l: usize, a: usize, k: usize) -> F {
        self.occupancy[l].get(a).map_or(F::zero(), |v| v[k])
    }

    fn horizon(&self, l: usize) -> usize {
        self.occupancy[l].len() - 1
    }
}

/// Evaluator for all higher-order transitions up to a fixed time horizon.
///
/// Builds the convolution table and bead trajectories once; every query with
/// `t <= t_max` reuses them.
#[derive(Debug, Clone)]
pub struct HigherOrder<'a, F> {
    spec: &'a NecklaceSpec<F>,
    t_max: usize,
    table: SumPmfTable<F>,
    bead: BeadTrajectories<F>,
}

impl<'a, F: Real> HigherOrder<'a, F> {
    pub fn new(spec: &'a NecklaceSpec<F>, t_max: usize) -> Self {
        let n = spec.n();
        let m = spec.m();
        let max_count = m * (t_max / n) + m;
        let table = SumPmfTable::new(spec.bead().pmf(), max_count, t_max);
        let bead = BeadTrajectories::new(spec.bead().spec(), t_max);
        Self { spec, t_max, table, bead }
    }

    pub fn t_max(&self) -> usize {
        self.t_max
    }

    pub fn table(&self) -> &SumPmfTable<F> {
        &self.table
    }

    fn check_time(&self, t: usize) -> Result<()> {
        if t > self.t_max {
            return Err(Error::OutOfRange { what: "t beyond evaluator horizon", value: t as f64 });
        }
        Ok(())
    }

    /// `sum_{j >= first_loop} Pr[S_{mj + R_i} = t - i + R_i - (n - m) j]`.
    fn loop_sum(&self, t: usize, i: usize, first_loop: usize) -> F {
        let n = self.spec.n();
        let m = self.spec.m();
        let ri = self.spec.prefix(i);
        let (t, i_, ri_, nm) = (t as i64, i as i64, ri as i64, (n - m) as i64);
        let last = if t >= i_ { (t - i_) as usize / n } else { return F::zero() };
        ksum((first_loop..=last).map(|j| {
            let count = m * j + ri;
            let target = t - i_ + ri_ - nm * j as i64;
            self.table.prob(count, target)
        }))
    }

    /// Probability of being at link `s_i` at time `t` having arrived from
    /// outside the bead at `i` (the full transition probability when `r_i = 0`).
    pub fn hot_link(&self, t: usize, i: usize) -> Result<F> {
        self.check_time(t)?;
        if i >= self.spec.n() {
            return Err(Error::OutOfRange { what: "position", value: i as f64 });
        }
        Ok(self.loop_sum(t, i, 0))
    }

    /// `P^t(s0, s_{i,k})` for a state of the bead at position `i`, `0 <= k < b`.
    pub fn hot_bead_state(&self, t: usize, i: usize, k: usize) -> Result<F> {
        self.check_time(t)?;
        if i >= self.spec.n() || !self.spec.has_bead(i) {
            return Err(Error::InvalidInput(format!("no bead at position {i}")));
        }
        if k >= self.spec.bead().exit() {
            return Err(Error::OutOfRange { what: "bead state", value: k as f64 });
        }
        // at position 0 the zero-loop arrival is the start itself; it is
        // carried by the explicit B^t(0, k) term instead
        let first_loop = usize::from(i == 0);
        let last_a = t.min(self.bead.horizon(0));
        let mut value = ksum((0..=last_a).map(|a| {
            let occ = self.bead.occupancy(0, a, k);
            if occ == F::zero() {
                F::zero()
            } else {
                occ * self.loop_sum(t - a, i, first_loop)
            }
        }));
        if i == 0 {
            value = value + self.bead.occupancy(0, t, k);
        }
        Ok(value)
    }

    /// `P^t(s0, target)`.
    pub fn from_s0(&self, t: usize, target: StateId) -> Result<F> {
        let i = target.position();
        match target {
            StateId::Link(_) if i < self.spec.n() && !self.spec.has_bead(i) => self.hot_link(t, i),
            _ => {
                self.spec
                    .index(target)
                    .ok_or_else(|| Error::InvalidInput(format!("no state {target}")))?;
                self.hot_bead_state(t, i, target.bead_index())
            }
        }
    }

    /// `P^t(s_{n-1,l}, target)` for a start in the bead at position `n - 1`.
    pub fn hot_from_bead_state(&self, t: usize, l: usize, target: StateId) -> Result<F> {
        self.check_time(t)?;
        let last = self.spec.n() - 1;
        if !self.spec.has_bead(last) || l >= self.spec.bead().exit() {
            return Err(Error::InvalidStart(format!("bead state {l} at position {last}")));
        }
        let horizon = t.min(self.bead.horizon(l));
        let mut terms = Vec::with_capacity(horizon + 1);
        for a in 1..=horizon {
            let w = self.bead.first_hit[l][a];
            if w != F::zero() {
                terms.push(w * self.from_s0(t - a, target)?);
            }
        }
        let mut value = ksum(terms);
        if target.position() == last && self.spec.index(target).is_some() {
            value = value + self.bead.occupancy(l, t, target.bead_index());
        }
        Ok(value)
    }

    /// `P^t(s0, .)` over all states in canonical order.
    pub fn distribution_from_s0(&self, t: usize) -> Result<Vec<F>> {
        self.spec.states().iter().map(|&s| self.from_s0(t, s)).collect()
    }

    /// Rows `P^t(start, .)` for `t = 0..=t_max`. `start` must be `s0` or a
    /// state of the bead at position `n - 1`.
    pub fn table_from(&self, start: StateId) -> Result<Vec<Vec<F>>> {
        let s0_rows: Vec<Vec<F>> =
            (0..=self.t_max).map(|t| self.distribution_from_s0(t)).collect::<Result<_>>()?;
        if start == StateId::Link(0) {
            return Ok(s0_rows);
        }
        let last = self.spec.n() - 1;
        if start.position() != last || !self.spec.has_bead(last) || self.spec.index(start).is_none() {
            return Err(Error::InvalidStart(start.to_string()));
        }
        let l = start.bead_index();
        let states = self.spec.states();
        let mut rows = Vec::with_capacity(self.t_max + 1);
        for t in 0..=self.t_max {
            let horizon = t.min(self.bead.horizon(l));
            let row = states
                .iter()
                .enumerate()
                .map(|(idx, &s)| {
                    let mut v = ksum(
                        (1..=horizon).map(|a| self.bead.first_hit[l][a] * s0_rows[t - a][idx]),
                    );
                    if s.position() == last {
                        v = v + self.bead.occupancy(l, t, s.bead_index());
                    }
                    v
                })
                .collect();
            rows.push(row);
        }
        Ok(rows)
    }

    /// Dispatches on the start state.
    pub fn transition(&self, t: usize, start: StateId, target: StateId) -> Result<F> {
        if start == StateId::Link(0) {
            self.from_s0(t, target)
        } else if start.position() == self.spec.n() - 1 && self.spec.index(start).is_some() {
            self.hot_from_bead_state(t, start.bead_index(), target)
        } else {
            Err(Error::InvalidStart(start.to_string()))
        }
    }
}

/// One-off `P^t(s0, s_i)` via the loop sum.
pub fn hot_link<F: Real>(spec: &NecklaceSpec<F>, t: usize, i: usize) -> Result<F> {
    HigherOrder::new(spec, t).hot_link(t, i)
}

/// One-off `P^t(s0, s_{i,k})`.
pub fn hot_bead_state<F: Real>(spec: &NecklaceSpec<F>, t: usize, i: usize, k: usize) -> Result<F> {
    HigherOrder::new(spec, t).hot_bead_state(t, i, k)
}

/// One-off `P^t(s_{n-1,l}, target)`.
pub fn hot_from_bead_state<F: Real>(
    spec: &NecklaceSpec<F>,
    t: usize,
    l: usize,
    target: StateId,
) -> Result<F> {
    HigherOrder::new(spec, t).hot_from_bead_state(t, l, target)
}
