//! Beads: small absorbing chains with entrance `0` and exit `b`, and every
//! bead-level quantity derived from them.

use crate::error::{Error, Result};
use crate::linalg::{stationary_dense, DenseMatrix};
use crate::scalar::{ksum, Real};

/// Default truncation mass for first-passage distributions.
pub const DEFAULT_EPS_TAIL: f64 = 1e-14;
/// Default hard cap on first-passage horizons.
pub const DEFAULT_HORIZON_CAP: usize = 1_000_000;

/// Number of support points inspected by the span check.
const SPAN_POINTS: usize = 64;

/// A validated bead on states `0..=b`; state `b` is absorbing.
#[derive(Debug, Clone, PartialEq)]
pub struct BeadSpec<F> {
    /// Rows `0..b`, each with `b + 1` entries.
    rows: Vec<Vec<F>>,
}

impl<F: Real> BeadSpec<F> {
    /// Exit state index `b`.
    pub fn exit(&self) -> usize {
        self.rows.len()
    }

    /// Number of states `b + 1`.
    pub fn size(&self) -> usize {
        self.rows.len() + 1
    }

    /// Transition probability, with the exit row absorbing.
    pub fn prob(&self, from: usize, to: usize) -> F {
        if from == self.exit() {
            if to == from {
                F::one()
            } else {
                F::zero()
            }
        } else {
            self.rows[from][to]
        }
    }

    /// Rows of the non-exit states.
    pub fn rows(&self) -> &[Vec<F>] {
        &self.rows
    }

    /// The two-state bead that holds with probability `p` and exits otherwise.
    pub fn simple(p: F) -> Result<Self> {
        if !(p > F::zero() && p < F::one()) {
            return Err(Error::OutOfRange { what: "hold probability", value: p.as_f64() });
        }
        validate_bead(vec![vec![p, F::one() - p]])
    }

    /// Full `(b+1) x (b+1)` matrix with the exit absorbing.
    pub fn matrix(&self) -> DenseMatrix<F> {
        let n = self.size();
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = self.prob(i, j);
            }
        }
        m
    }

    /// One step of the sub-stochastic chain on the non-exit states.
    /// Returns the mass that reached the exit during the step.
    pub(crate) fn step_transient(&self, current: &[F], next: &mut [F]) -> F {
        let b = self.exit();
        next.iter_mut().for_each(|x| *x = F::zero());
        let mut absorbed = F::zero();
        for (i, &mass) in current.iter().enumerate() {
            if mass == F::zero() {
                continue;
            }
            let row = &self.rows[i];
            for (j, slot) in next.iter_mut().enumerate() {
                *slot = *slot + mass * row[j];
            }
            absorbed = absorbed + mass * row[b];
        }
        absorbed
    }

    /// Exact support of the first-passage time, from boolean reachability,
    /// truncated to the first `limit` points.
    fn passage_support(&self, limit: usize) -> Vec<usize> {
        let b = self.exit();
        let mut alive = vec![false; b];
        alive[0] = true;
        let mut support = Vec::new();
        let max_steps = limit * (b + 1) + 1;
        for t in 1..=max_steps {
            if alive.iter().enumerate().any(|(i, &on)| on && self.rows[i][b] > F::zero()) {
                support.push(t);
                if support.len() == limit {
                    break;
                }
            }
            let mut next = vec![false; b];
            for i in (0..b).filter(|&i| alive[i]) {
                for (j, slot) in next.iter_mut().enumerate() {
                    *slot |= self.rows[i][j] > F::zero();
                }
            }
            if next.iter().all(|&on| !on) {
                break;
            }
            alive = next;
        }
        support
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Validates raw transition rows for states `0..b`.
///
/// `rows` may either omit the exit row or include it as all zeros or as the
/// absorbing unit row.
pub fn validate_bead<F: Real>(mut rows: Vec<Vec<F>>) -> Result<BeadSpec<F>> {
    let cols = rows.first().map_or(0, Vec::len);
    if cols < 2 {
        return Err(Error::InvalidInput("a bead needs at least two states".into()));
    }
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidInput("bead rows must all have length b + 1".into()));
    }
    if rows.len() == cols {
        let b = cols - 1;
        let last = rows.pop().unwrap();
        let zero_row = last.iter().all(|&x| x == F::zero());
        let unit_row = last.iter().enumerate().all(|(j, &x)| {
            if j == b {
                x == F::one()
            } else {
                x == F::zero()
            }
        });
        if !(zero_row || unit_row) {
            return Err(Error::InvalidInput("the exit row must be empty or absorbing".into()));
        }
    }
    if rows.len() + 1 != cols {
        return Err(Error::InvalidInput(format!(
            "expected {} rows of length {cols}, got {}",
            cols - 1,
            rows.len()
        )));
    }
    let b = cols - 1;
    let tol = F::tol(1e-12);
    for (i, row) in rows.iter().enumerate() {
        if row.iter().any(|&x| !x.is_finite() || x < F::zero() || x > F::one()) {
            return Err(Error::InvalidInput(format!("row {i} has an entry outside [0, 1]")));
        }
        let sum = ksum(row.iter().copied());
        if (sum - F::one()).abs() > tol {
            return Err(Error::NotStochastic { row: i, sum: sum.as_f64() });
        }
    }
    for (i, row) in rows.iter().enumerate() {
        if (row[i] - F::one()).abs() <= tol {
            return Err(Error::ExtraAbsorbing { state: i });
        }
    }

    // forward reachability from the entrance
    let mut from_entrance = vec![false; b + 1];
    from_entrance[0] = true;
    let mut stack = vec![0];
    while let Some(x) = stack.pop() {
        if x == b {
            continue;
        }
        for (y, &w) in rows[x].iter().enumerate() {
            if w > F::zero() && !from_entrance[y] {
                from_entrance[y] = true;
                stack.push(y);
            }
        }
    }
    // backward reachability to the exit
    let mut to_exit = vec![false; b + 1];
    to_exit[b] = true;
    let mut changed = true;
    while changed {
        changed = false;
        for x in 0..b {
            if !to_exit[x] && rows[x].iter().enumerate().any(|(y, &w)| w > F::zero() && to_exit[y]) {
                to_exit[x] = true;
                changed = true;
            }
        }
    }
    if let Some(state) = (0..=b).find(|&s| !(from_entrance[s] && to_exit[s])) {
        return Err(Error::Unreachable { state });
    }

    let spec = BeadSpec { rows };
    let support = spec.passage_support(SPAN_POINTS);
    let span = support.windows(2).fold(0, |g, w| gcd(g, w[1] - w[0]));
    if support.len() < 2 || span != 1 {
        return Err(Error::SpanViolation { support });
    }
    Ok(spec)
}

/// The closure: the bead with the exit sent back to the entrance.
pub fn closure<F: Real>(bead: &BeadSpec<F>) -> DenseMatrix<F> {
    let mut m = bead.matrix();
    let b = bead.exit();
    m[(b, b)] = F::zero();
    m[(b, 0)] = F::one();
    m
}

/// Geometric tail certificate: `Pr(X > t) < alpha^t` for `n0 < t <= horizon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailBound<F> {
    pub n0: usize,
    pub alpha: F,
}

/// Truncated distribution of the first-passage time from `0` to `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstPassagePmf<F> {
    /// `probs[t] = Pr(X = t)`; `probs[0] = 0`.
    probs: Vec<F>,
    eps_tail: F,
    mean: F,
    variance: F,
    tail: TailBound<F>,
}

impl<F: Real> FirstPassagePmf<F> {
    /// Wraps explicit values `f(1), f(2), ...`.
    pub fn from_values(values: &[F]) -> Result<Self> {
        if values.iter().any(|&v| v < F::zero() || !v.is_finite()) {
            return Err(Error::InvalidInput("pmf values must be nonnegative".into()));
        }
        let mut probs = Vec::with_capacity(values.len() + 1);
        probs.push(F::zero());
        probs.extend_from_slice(values);
        let missing = (F::one() - ksum(values.iter().copied())).max(F::zero());
        let survival = survival_curve(&probs);
        let (mean, variance) = fpt_moments(&probs)?;
        Ok(Self { tail: tail_bound(&survival), probs, eps_tail: missing, mean, variance })
    }

    /// `Pr(X = t)`; zero beyond the horizon.
    pub fn pmf(&self, t: usize) -> F {
        self.probs.get(t).copied().unwrap_or_else(F::zero)
    }

    /// `probs()[t] = Pr(X = t)` for `t <= horizon`.
    pub fn probs(&self) -> &[F] {
        &self.probs
    }

    pub fn horizon(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn eps_tail(&self) -> F {
        self.eps_tail
    }

    pub fn mean(&self) -> F {
        self.mean
    }

    pub fn variance(&self) -> F {
        self.variance
    }

    pub fn tail(&self) -> TailBound<F> {
        self.tail
    }

    pub fn total_mass(&self) -> F {
        ksum(self.probs.iter().copied())
    }

    /// Times with positive probability, up to the horizon.
    pub fn support(&self) -> Vec<usize> {
        (1..self.probs.len()).filter(|&t| self.probs[t] > F::zero()).collect()
    }

    /// gcd of differences of the first 64 support points.
    pub fn span(&self) -> usize {
        let support: Vec<usize> = self.support().into_iter().take(SPAN_POINTS).collect();
        support.windows(2).fold(0, |g, w| gcd(g, w[1] - w[0]))
    }
}

/// `Pr(X > t)` for `t = 0..=horizon`.
fn survival_curve<F: Real>(probs: &[F]) -> Vec<F> {
    let mut out = Vec::with_capacity(probs.len());
    let mut cdf = F::zero();
    let mut carry = F::zero();
    for &p in probs {
        let y = p - carry;
        let s = cdf + y;
        carry = (s - cdf) - y;
        cdf = s;
        out.push((F::one() - cdf).max(F::zero()));
    }
    out
}

fn tail_bound<F: Real>(survival: &[F]) -> TailBound<F> {
    let horizon = survival.len().saturating_sub(1);
    // suffix maxima of s(t)^(1/t)
    let mut rate = vec![F::zero(); horizon + 2];
    for t in (1..=horizon).rev() {
        let r = if survival[t] > F::zero() {
            survival[t].powf(F::one() / F::count(t))
        } else {
            F::zero()
        };
        rate[t] = rate[t + 1].max(r);
    }
    let n0 = (0..=horizon).find(|&n0| rate[n0 + 1] < F::one()).unwrap_or(horizon);
    let worst = rate[n0 + 1];
    let half = F::lit(0.5);
    let alpha = if worst > F::zero() { worst + (F::one() - worst) * F::lit(1e-3) } else { half };
    TailBound { n0, alpha }
}

/// Mean and variance of a pmf given as `probs[t] = Pr(X = t)`.
pub fn fpt_moments<F: Real>(probs: &[F]) -> Result<(F, F)> {
    let mass = ksum(probs.iter().copied());
    if mass <= F::zero() {
        return Err(Error::InvalidInput("pmf has no mass".into()));
    }
    let mean = ksum(probs.iter().enumerate().map(|(t, &p)| F::count(t) * p));
    let variance = ksum(probs.iter().enumerate().map(|(t, &p)| {
        let d = F::count(t) - mean;
        d * d * p
    }));
    if variance <= F::tol(1e-14) {
        return Err(Error::DegenerateVariance { variance: variance.as_f64() });
    }
    Ok((mean, variance))
}

/// First-passage pmf from `0` to `b`, truncated once the missing mass is below `eps_tail`.
pub fn first_passage_pmf<F: Real>(bead: &BeadSpec<F>, eps_tail: F) -> Result<FirstPassagePmf<F>> {
    first_passage_pmf_capped(bead, eps_tail, DEFAULT_HORIZON_CAP)
}

pub fn first_passage_pmf_capped<F: Real>(
    bead: &BeadSpec<F>,
    eps_tail: F,
    cap: usize,
) -> Result<FirstPassagePmf<F>> {
    if !(eps_tail > F::zero() && eps_tail <= F::tol(1e-10)) {
        return Err(Error::OutOfRange { what: "eps_tail", value: eps_tail.as_f64() });
    }
    let b = bead.exit();
    let mut current = vec![F::zero(); b];
    current[0] = F::one();
    let mut next = vec![F::zero(); b];
    let mut probs = vec![F::zero()];
    let mut absorbed = F::zero();
    loop {
        if probs.len() > cap {
            return Err(Error::HorizonExceeded { cap });
        }
        let hit = bead.step_transient(&current, &mut next);
        std::mem::swap(&mut current, &mut next);
        probs.push(hit);
        absorbed = absorbed + hit;
        let alive = ksum(current.iter().copied());
        if alive < eps_tail && absorbed >= F::one() - eps_tail - F::epsilon() {
            break;
        }
    }
    let survival = survival_curve(&probs);
    let (mean, variance) = fpt_moments(&probs)?;
    Ok(FirstPassagePmf { tail: tail_bound(&survival), probs, eps_tail, mean, variance })
}

/// Stationary distribution of the closure over `0..=b`.
pub fn closure_stationary<F: Real>(bead: &BeadSpec<F>) -> Result<Vec<F>> {
    stationary_dense(&closure(bead))
}

/// Expected visits to each non-exit state before absorption,
/// `G(k) = sum_a B^a(0, k)`, with neglected tail below `eps`.
pub fn taboo_sums<F: Real>(bead: &BeadSpec<F>, eps: F) -> Result<Vec<F>> {
    taboo_sums_capped(bead, eps, DEFAULT_HORIZON_CAP)
}

pub fn taboo_sums_capped<F: Real>(bead: &BeadSpec<F>, eps: F, cap: usize) -> Result<Vec<F>> {
    let b = bead.exit();
    let window = b.max(1);
    let mut current = vec![F::zero(); b];
    current[0] = F::one();
    let mut next = vec![F::zero(); b];
    let mut sums = current.clone();
    let mut carries = vec![F::zero(); b];
    let mut survival = vec![F::one()];
    for a in 1..=cap {
        bead.step_transient(&current, &mut next);
        std::mem::swap(&mut current, &mut next);
        for k in 0..b {
            let y = current[k] - carries[k];
            let s = sums[k] + y;
            carries[k] = (s - sums[k]) - y;
            sums[k] = s;
        }
        let s_a = ksum(current.iter().copied());
        survival.push(s_a);
        if s_a == F::zero() {
            return Ok(sums);
        }
        if a >= window {
            let earlier = survival[a - window];
            let ratio = (s_a / earlier).powf(F::one() / F::count(window));
            if ratio < F::one() && s_a * ratio / (F::one() - ratio) < eps {
                return Ok(sums);
            }
        }
    }
    Err(Error::HorizonExceeded { cap })
}

/// A bead together with everything downstream modules consume.
#[derive(Debug, Clone, PartialEq)]
pub struct BeadAnalysis<F> {
    spec: BeadSpec<F>,
    pmf: FirstPassagePmf<F>,
    stationary: Vec<F>,
    taboo: Vec<F>,
}

impl<F: Real> BeadAnalysis<F> {
    pub fn new(spec: BeadSpec<F>) -> Result<Self> {
        Self::with_eps(spec, F::tol(DEFAULT_EPS_TAIL))
    }

    pub fn with_eps(spec: BeadSpec<F>, eps_tail: F) -> Result<Self> {
        let pmf = first_passage_pmf(&spec, eps_tail)?;
        let stationary = closure_stationary(&spec)?;
        let taboo = taboo_sums(&spec, eps_tail)?;
        Ok(Self { spec, pmf, stationary, taboo })
    }

    pub fn spec(&self) -> &BeadSpec<F> {
        &self.spec
    }

    pub fn pmf(&self) -> &FirstPassagePmf<F> {
        &self.pmf
    }

    /// Exit index `b`.
    pub fn exit(&self) -> usize {
        self.spec.exit()
    }

    pub fn mu(&self) -> F {
        self.pmf.mean()
    }

    pub fn sigma2(&self) -> F {
        self.pmf.variance()
    }

    /// Closure stationary distribution over `0..=b`.
    pub fn stationary(&self) -> &[F] {
        &self.stationary
    }

    /// Taboo sums `G(k)` for `k < b`.
    pub fn taboo(&self) -> &[F] {
        &self.taboo
    }
}
