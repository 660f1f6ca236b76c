//! Classical convergence bounds for comparison: time reversal and
//! multiplicative symmetrization, the second-eigenvalue bound, a comparison
//! estimate for the second eigenvalue, moderate growth and a Nash-inequality
//! bound.

mod section4;

pub use section4::{build_section4, Section4};

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::limit::c_for_tv;
use crate::linalg::{components, symmetric_eigenvalues, DenseMatrix};
use crate::scalar::Real;

/// Stationarity residual accepted on input.
const STATIONARY_TOL: f64 = 1e-10;
/// Detailed-balance tolerance.
const BALANCE_TOL: f64 = 1e-10;
/// Relative slack in the moderate-growth comparison.
const GROWTH_RTOL: f64 = 1e-12;

fn check_stationary<F: Real>(p: &DenseMatrix<F>, pi: &[F]) -> Result<()> {
    if !p.is_square() || p.rows() != pi.len() {
        return Err(Error::DimensionMismatch { left: p.rows(), right: pi.len() });
    }
    if let Some(state) = pi.iter().position(|&x| !(x > F::zero())) {
        return Err(Error::ZeroMassState { state });
    }
    let moved = p.left_apply(pi);
    let residual = moved.iter().zip(pi).fold(F::zero(), |acc, (&a, &b)| acc.max((a - b).abs()));
    if residual >= F::lit(STATIONARY_TOL) {
        return Err(Error::NotStationary { residual: residual.as_f64() });
    }
    Ok(())
}

/// Time reversal `P_rev(x, y) = pi(y) P(y, x) / pi(x)`.
pub fn reverse<F: Real>(p: &DenseMatrix<F>, pi: &[F]) -> Result<DenseMatrix<F>> {
    check_stationary(p, pi)?;
    let n = pi.len();
    let mut out = DenseMatrix::zeros(n, n);
    for x in 0..n {
        for y in 0..n {
            out[(x, y)] = pi[y] * p[(y, x)] / pi[x];
        }
    }
    Ok(out)
}

/// An operator with a distribution it satisfies detailed balance against.
#[derive(Debug, Clone, PartialEq)]
pub struct ReversibleOperator<F> {
    matrix: DenseMatrix<F>,
    pi: Vec<F>,
}

impl<F: Real> ReversibleOperator<F> {
    pub fn new(matrix: DenseMatrix<F>, pi: Vec<F>) -> Result<Self> {
        check_stationary(&matrix, &pi)?;
        let n = pi.len();
        for x in 0..n {
            for y in x + 1..n {
                let gap = pi[x] * matrix[(x, y)] - pi[y] * matrix[(y, x)];
                if gap.abs() >= F::lit(BALANCE_TOL) {
                    return Err(Error::NotReversible { x, y });
                }
            }
        }
        Ok(Self { matrix, pi })
    }

    pub fn matrix(&self) -> &DenseMatrix<F> {
        &self.matrix
    }

    pub fn stationary(&self) -> &[F] {
        &self.pi
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    /// Edges `x != y` with positive weight.
    pub fn edges(&self) -> EdgeSet {
        EdgeSet::from_matrix(&self.matrix)
    }
}

/// `M(P) = P P_rev`.
pub fn mult_symmetrization<F: Real>(p: &DenseMatrix<F>, pi: &[F]) -> Result<ReversibleOperator<F>> {
    let rev = reverse(p, pi)?;
    ReversibleOperator::new(p.matmul(&rev)?, pi.to_vec())
}

/// Second largest eigenvalue. A disconnected graph gives 1 without solving;
/// a single state gives 0.
pub fn second_eigenvalue<F: Real>(k: &ReversibleOperator<F>) -> Result<F> {
    let n = k.len();
    if n < 2 {
        return Ok(F::zero());
    }
    if components(k.matrix()).iter().any(|&c| c != 0) {
        return Ok(F::one());
    }
    let conj = k.matrix().conjugate_by_sqrt(k.stationary());
    let mut sym = conj.clone();
    for i in 0..n {
        for j in 0..n {
            sym[(i, j)] = (conj[(i, j)] + conj[(j, i)]) / F::lit(2.0);
        }
    }
    Ok(symmetric_eigenvalues(&sym)?[1])
}

/// `beta1^(t/2) / (2 sqrt(pi(x0)))` before clamping.
pub fn fill_bound_raw<F: Real>(pi_x0: F, beta1: F, t: u64) -> F {
    beta1.powf(F::lit(t as f64) / F::lit(2.0)) / (F::lit(2.0) * pi_x0.sqrt())
}

/// Second-eigenvalue bound on the distance to stationarity after `t` steps from `x0`.
pub fn fill_bound<F: Real>(pi_x0: F, beta1: F, t: u64) -> F {
    fill_bound_raw(pi_x0, beta1, t).max(F::zero()).min(F::one())
}

/// Upper bound on `beta1(k)` by comparison with `k_tilde` on the same states.
pub fn comparison_bound<F: Real>(k: &ReversibleOperator<F>, k_tilde: &ReversibleOperator<F>) -> Result<F> {
    let n = k.len();
    if k_tilde.len() != n {
        return Err(Error::DimensionMismatch { left: n, right: k_tilde.len() });
    }
    let (pi, pt) = (k.stationary(), k_tilde.stationary());
    let mass = (0..n).map(|x| pt[x] / pi[x]).fold(F::infinity(), F::min);
    let mut edge = F::infinity();
    for x in 0..n {
        for y in 0..n {
            let w = k.matrix()[(x, y)];
            if x == y || w <= F::zero() {
                continue;
            }
            let wt = k_tilde.matrix()[(x, y)];
            if wt <= F::zero() {
                return Err(Error::SupportViolation { x, y });
            }
            edge = edge.min(pi[x] * w / (pt[x] * wt));
        }
    }
    if edge == F::infinity() {
        edge = F::one();
    }
    let beta = second_eigenvalue(k_tilde)?;
    Ok(F::one() - mass * edge * (F::one() - beta))
}

/// Undirected graph on `0..n` without self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeSet {
    adj: Vec<Vec<usize>>,
}

impl EdgeSet {
    pub fn from_matrix<F: Real>(m: &DenseMatrix<F>) -> Self {
        let n = m.rows();
        let adj = (0..n)
            .map(|x| (0..n).filter(|&y| y != x && (m[(x, y)] > F::zero() || m[(y, x)] > F::zero())).collect())
            .collect();
        Self { adj }
    }

    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Self {
        let mut adj = vec![Vec::new(); n];
        for &(x, y) in pairs {
            if x != y && !adj[x].contains(&y) {
                adj[x].push(y);
                adj[y].push(x);
            }
        }
        adj.iter_mut().for_each(|a| a.sort_unstable());
        Self { adj }
    }

    pub fn num_vertices(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, x: usize) -> &[usize] {
        &self.adj[x]
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.adj[x].binary_search(&y).is_ok()
    }

    /// All-pairs graph distances by breadth-first search.
    pub fn distances(&self) -> Result<Vec<Vec<usize>>> {
        let n = self.adj.len();
        let mut all = Vec::with_capacity(n);
        for s in 0..n {
            let mut d = vec![usize::MAX; n];
            d[s] = 0;
            let mut queue = VecDeque::from([s]);
            while let Some(x) = queue.pop_front() {
                for &y in &self.adj[x] {
                    if d[y] == usize::MAX {
                        d[y] = d[x] + 1;
                        queue.push_back(y);
                    }
                }
            }
            if d.contains(&usize::MAX) {
                return Err(Error::Disconnected);
            }
            all.push(d);
        }
        Ok(all)
    }
}

/// Minimiser of `V(x, r) A (gamma / (r + 1))^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthWitness {
    pub x: usize,
    pub r: usize,
    pub ratio: f64,
}

/// Exhaustive moderate-growth check.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthCertificate<F> {
    pub edges: EdgeSet,
    pub dist: Vec<Vec<usize>>,
    pub gamma: usize,
    /// `balls[x][r] = V(x, r)` for `0 <= r <= gamma`.
    pub balls: Vec<Vec<F>>,
    pub a: F,
    pub d: F,
    pub witness: GrowthWitness,
    pub passes: bool,
}

/// Checks `V(x, r) >= (1/A) ((r + 1) / gamma)^d` for every `x` and `0 <= r <= gamma`.
/// A single vertex is treated as having diameter 1.
pub fn moderate_growth<F: Real>(edges: &EdgeSet, pi: &[F], a: F, d: F) -> Result<GrowthCertificate<F>> {
    let n = edges.num_vertices();
    if pi.len() != n {
        return Err(Error::DimensionMismatch { left: n, right: pi.len() });
    }
    if let Some(state) = pi.iter().position(|&x| !(x > F::zero())) {
        return Err(Error::ZeroMassState { state });
    }
    let dist = edges.distances()?;
    let gamma = dist.iter().flatten().copied().max().unwrap_or(0);
    let scale = F::count(gamma.max(1));
    let mut balls = Vec::with_capacity(n);
    let mut witness = GrowthWitness { x: 0, r: 0, ratio: f64::INFINITY };
    for x in 0..n {
        let mut shell = vec![F::zero(); gamma + 1];
        for y in 0..n {
            shell[dist[x][y]] = shell[dist[x][y]] + pi[y];
        }
        let mut acc = F::zero();
        let mut row = Vec::with_capacity(gamma + 1);
        for (r, s) in shell.into_iter().enumerate() {
            acc = acc + s;
            row.push(acc);
            let ratio = (acc * a * (scale / F::count(r + 1)).powf(d)).as_f64();
            if ratio < witness.ratio {
                witness = GrowthWitness { x, r, ratio };
            }
        }
        balls.push(row);
    }
    let passes = witness.ratio >= 1.0 - GROWTH_RTOL;
    Ok(GrowthCertificate { edges: edges.clone(), dist, gamma, balls, a, d, witness, passes })
}

/// One path per ordered pair, as vertex sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathFamily {
    paths: Vec<Vec<Vec<usize>>>,
}

impl PathFamily {
    pub fn new(paths: Vec<Vec<Vec<usize>>>) -> Self {
        Self { paths }
    }

    pub fn path(&self, z: usize, w: usize) -> &[usize] {
        &self.paths[z][w]
    }

    pub fn num_vertices(&self) -> usize {
        self.paths.len()
    }

    fn validate(&self, edges: &EdgeSet) -> Result<()> {
        let n = edges.num_vertices();
        if self.paths.len() != n || self.paths.iter().any(|row| row.len() != n) {
            return Err(Error::DimensionMismatch { left: n, right: self.paths.len() });
        }
        for z in 0..n {
            for w in 0..n {
                let p = &self.paths[z][w];
                let ends = p.first() == Some(&z) && p.last() == Some(&w);
                if !ends || p.windows(2).any(|e| !edges.contains(e[0], e[1])) {
                    return Err(Error::InvalidPath { from: z, to: w });
                }
            }
        }
        Ok(())
    }

    /// Number of paths of length at most `r` crossing the oriented edge `x -> y`.
    pub fn load(&self, x: usize, y: usize, r: usize) -> usize {
        self.paths
            .iter()
            .flatten()
            .filter(|p| p.len() <= r + 1 && p.windows(2).any(|e| e[0] == x && e[1] == y))
            .count()
    }
}

/// Geodesics, choosing the lexicographically smallest vertex sequence on ties.
pub fn geodesic_paths(edges: &EdgeSet) -> Result<PathFamily> {
    let dist = edges.distances()?;
    let n = edges.num_vertices();
    let paths = (0..n)
        .map(|z| {
            (0..n)
                .map(|w| {
                    let mut path = vec![z];
                    let mut v = z;
                    while v != w {
                        v = edges.neighbors(v).iter().copied().filter(|&u| dist[u][w] + 1 == dist[v][w]).min().unwrap();
                        path.push(v);
                    }
                    path
                })
                .collect()
        })
        .collect();
    Ok(PathFamily { paths })
}

/// Constants of the Nash-inequality bound.
#[derive(Debug, Clone, PartialEq)]
pub struct NashConstants<F> {
    pub a: F,
    pub a1: F,
    pub gamma: usize,
    /// Edge `(x, y)` and radius `r` attaining `a`.
    pub argmax: (usize, usize, usize),
}

/// `(e (1 + d) A)^(1/2) (4 (2 + d))^(d/4)`.
pub fn nash_a1<F: Real>(a: F, d: F) -> F {
    let e = F::E();
    (e * (F::one() + d) * a).sqrt() * (F::lit(4.0) * (F::lit(2.0) + d)).powf(d / F::lit(4.0))
}

/// Path-congestion constant `a`, maximised over oriented edges and `1 <= r <= gamma`.
pub fn nash_constants<F: Real>(
    k: &ReversibleOperator<F>,
    growth: &GrowthCertificate<F>,
    paths: &PathFamily,
) -> Result<NashConstants<F>> {
    paths.validate(&growth.edges)?;
    let n = k.len();
    let gamma = growth.gamma;
    let pi = k.stationary();
    // load[x][y][r]: sum of |path| pi(z) pi(w) / V(z, r) over paths through x -> y with d(z, w) <= r
    let mut load = vec![vec![vec![F::zero(); gamma + 1]; n]; n];
    for z in 0..n {
        for w in 0..n {
            let p = paths.path(z, w);
            let len = p.len() - 1;
            if len == 0 {
                continue;
            }
            let dzw = growth.dist[z][w];
            for e in p.windows(2) {
                for r in dzw.max(1)..=gamma {
                    let add = F::count(len) * pi[z] * pi[w] / growth.balls[z][r];
                    load[e[0]][e[1]][r] = load[e[0]][e[1]][r] + add;
                }
            }
        }
    }
    let mut a = F::zero();
    let mut argmax = (0, 0, 0);
    for x in 0..n {
        for &y in growth.edges.neighbors(x) {
            let weight = pi[x] * k.matrix()[(x, y)];
            for r in 1..=gamma {
                let v = F::lit(2.0) * load[x][y][r] / (F::count(r * r) * weight);
                if v > a {
                    a = v;
                    argmax = (x, y, r);
                }
            }
        }
    }
    Ok(NashConstants { a, a1: nash_a1(growth.a, growth.d), gamma, argmax })
}

/// Nash bound at `t = ceil(a gamma^2) + m + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NashBound {
    pub t: u64,
    pub raw: f64,
    pub bound: f64,
}

pub fn nash_bound<F: Real>(consts: &NashConstants<F>, m: u64) -> NashBound {
    let scale = consts.a * F::count(consts.gamma * consts.gamma);
    let t = scale.ceil().to_u64().unwrap_or(u64::MAX) + m + 1;
    let raw = consts.a1 / F::lit(2.0) * (-F::lit(m as f64) / scale).exp();
    NashBound { t, raw: raw.as_f64(), bound: raw.max(F::zero()).min(F::one()).as_f64() }
}

/// Method behind a step-count estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Llt,
    Nash,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "llt" => Ok(Method::Llt),
            "nash" => Ok(Method::Nash),
            other => Err(Error::InvalidInput(format!("unknown method `{other}`"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Llt => "llt",
            Method::Nash => "nash",
        })
    }
}

/// `(1 - pq)^2 / (q min(q^2, pq))`.
pub fn nash_a_estimate<F: Real>(p: F) -> F {
    let q = F::one() - p;
    let pq = p * q;
    (F::one() - pq).powi(2) / (q * (q * q).min(pq))
}

/// Steps of `P_n^(n-1)` needed to come within `eps` of stationarity.
///
/// `Llt` takes the smallest `c` with limiting distance below `eps` and
/// returns `ceil(c (n - p)^3 / (pq (n - 1)))`. `Nash` returns the least
/// integer above `a_est (1 + log(48 e^2)/4 + log(1/q)/2 - log eps) (n - 1)^2 + 1`.
pub fn steps_needed<F: Real>(method: Method, eps: F, n: usize, p: F) -> Result<u64> {
    if !(eps > F::zero() && eps < F::one()) {
        return Err(Error::OutOfRange { what: "eps", value: eps.as_f64() });
    }
    if !(p > F::zero() && p < F::one()) {
        return Err(Error::OutOfRange { what: "hold probability", value: p.as_f64() });
    }
    if n < 2 {
        return Err(Error::OutOfRange { what: "n", value: n as f64 });
    }
    let q = F::one() - p;
    let t = match method {
        Method::Llt => {
            let c = c_for_tv(eps)?;
            (c * (F::count(n) - p).powi(3) / (p * q * F::count(n - 1))).ceil()
        }
        Method::Nash => {
            let e2 = F::E() * F::E();
            let inner = F::one() + (F::lit(48.0) * e2).ln() / F::lit(4.0) + q.recip().ln() / F::lit(2.0) - eps.ln();
            let real = nash_a_estimate(p) * inner * F::count((n - 1) * (n - 1)) + F::one();
            real.floor() + F::one()
        }
    };
    t.to_u64().ok_or(Error::OutOfRange { what: "step count", value: t.as_f64() })
}

/// Moderate-growth part of a [`BoundReport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthSummary {
    #[serde(rename = "A")]
    pub a: f64,
    pub d: f64,
    pub gamma: usize,
    pub passes: bool,
    pub witness: GrowthWitness,
}

/// Nash part of a [`BoundReport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NashSummary {
    pub a: f64,
    pub a1: f64,
    pub a_estimate: f64,
    pub t: u64,
    pub bound: f64,
    pub raw_bound: f64,
}

/// Step counts from both methods and the exact distance each one achieves.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepsSummary {
    pub method: Method,
    pub eps: f64,
    pub t: u64,
    pub exact_tv: f64,
}

/// All bounds for the `P_n^(n-1)` / `K_n` pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub n: usize,
    pub p: f64,
    /// `beta1(M(P_n))`.
    pub beta1_p_n: f64,
    /// Whether the graph of `M(P_n)` is disconnected.
    pub p_n_disconnected: bool,
    /// `beta1(K_n)`.
    pub beta1: f64,
    pub beta1_tilde: f64,
    pub fill_curve: Vec<(u64, f64)>,
    pub comparison_bound: f64,
    pub growth: GrowthSummary,
    pub nash: NashSummary,
    pub steps: Vec<StepsSummary>,
}

/// Builds the report; the Fill curve is sampled at `fill_times` from the
/// state of least stationary mass.
pub fn bound_report(n: usize, p: f64, eps: f64, fill_times: &[u64]) -> Result<BoundReport> {
    let s4 = build_section4(n, p)?;
    let m_p_n = mult_symmetrization(&s4.p_n, &s4.pi)?;
    let p_n_disconnected = components(m_p_n.matrix()).iter().any(|&c| c != 0);
    let beta1_p_n = second_eigenvalue(&m_p_n)?;
    let beta1 = second_eigenvalue(&s4.k_n)?;
    let beta1_tilde = second_eigenvalue(&s4.k_tilde)?;
    let pi = s4.k_n.stationary();
    let x0 = (0..n).min_by(|&a, &b| pi[a].total_cmp(&pi[b])).unwrap();
    let fill_curve = fill_times.iter().map(|&t| (t, fill_bound(pi[x0], beta1, t))).collect();
    let comparison = comparison_bound(&s4.k_n, &s4.k_tilde)?;
    let q = 1.0 - p;
    let growth = moderate_growth(&s4.k_n.edges(), pi, 1.0 / q + 1.0 / (n as f64 - 1.0), 1.0)?;
    let paths = geodesic_paths(&growth.edges)?;
    let consts = nash_constants(&s4.k_n, &growth, &paths)?;
    let nb = nash_bound(&consts, 0);
    let mut steps = Vec::new();
    for method in [Method::Llt, Method::Nash] {
        let t = steps_needed(method, eps, n, p)?;
        steps.push(StepsSummary { method, eps, t, exact_tv: s4.worst_tv(t)? });
    }
    Ok(BoundReport {
        n,
        p,
        beta1_p_n,
        p_n_disconnected,
        beta1,
        beta1_tilde,
        fill_curve,
        comparison_bound: comparison,
        growth: GrowthSummary {
            a: growth.a,
            d: growth.d,
            gamma: growth.gamma,
            passes: growth.passes,
            witness: growth.witness,
        },
        nash: NashSummary {
            a: consts.a,
            a1: consts.a1,
            a_estimate: nash_a_estimate(p),
            t: nb.t,
            bound: nb.bound,
            raw_bound: nb.raw,
        },
        steps,
    })
}
