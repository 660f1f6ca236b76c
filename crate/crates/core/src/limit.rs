//! Limit shapes of necklace distributions: the wrapped Gaussian on the unit
//! circle, the cubic/quadratic time scale, pointwise predictions and the
//! limiting total-variation distance.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::necklace::{evolve, tv_distance, Distribution, NecklaceSpec, StateId, TransitionOperator};
use crate::scalar::{ksum, Real};

/// Lattice terms smaller than this are dropped.
const THETA_TERM_EPS: f64 = 1e-17;
/// Agreement required between successive quadrature resolutions.
const QUADRATURE_TOL: f64 = 1e-8;

/// Density at time `c` of Brownian motion on the circle of unit circumference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theta<F> {
    c: F,
}

impl<F: Real> Theta<F> {
    pub fn new(c: F) -> Result<Self> {
        if !(c > F::zero()) || !c.is_finite() {
            return Err(Error::NonpositiveC(c.as_f64()));
        }
        Ok(Self { c })
    }

    pub fn c(&self) -> F {
        self.c
    }

    fn term(&self, n: i64, y: F) -> F {
        let root = self.c.sqrt();
        let z = (F::lit(n as f64) + y) / root;
        let norm = (F::lit(2.0) * F::PI()).sqrt();
        (-(z * z) / F::lit(2.0)).exp() / (norm * root)
    }

    /// Number of lattice shells `K` summed for `x` (terms `-K-1..=K` about the reduced point).
    pub fn shells(&self, x: F) -> usize {
        let y = x - x.floor();
        let eps = F::lit(THETA_TERM_EPS);
        let mut k = 0usize;
        while self.term(k as i64, y) >= eps || self.term(-(k as i64) - 1, y) >= eps {
            k += 1;
        }
        k
    }

    /// Lattice sum over the shells `n = -K-1..=K` around `x mod 1`.
    pub fn eval_shells(&self, x: F, shells: usize) -> F {
        let y = x - x.floor();
        let k = shells as i64;
        ksum((-k - 1..=k).map(|n| self.term(n, y)))
    }

    pub fn eval(&self, x: F) -> F {
        self.eval_shells(x, self.shells(x))
    }
}

/// `theta_c(x)`.
pub fn theta<F: Real>(c: F, x: F) -> Result<F> {
    Ok(Theta::new(c)?.eval(x))
}

/// Unrounded time scale `c (n + (mu - 1) m)^3 / (sigma^2 m)`.
pub fn time_scale_real<F: Real>(n: usize, m: usize, mu: F, sigma2: F, c: F) -> F {
    let len = F::count(n) + (mu - F::one()) * F::count(m);
    c * len.powi(3) / (sigma2 * F::count(m))
}

/// Step count for rescaled time `c`, rounded to the nearest integer.
pub fn time_scale<F: Real>(n: usize, m: usize, mu: F, sigma2: F, c: F) -> u64 {
    time_scale_real(n, m, mu, sigma2, c).round().to_u64().unwrap_or(u64::MAX)
}

/// Rescaled time of `t` steps on a given necklace.
pub fn rescaled_time<F: Real>(spec: &NecklaceSpec<F>, t: u64) -> F {
    let bead = spec.bead();
    let len = spec.effective_length();
    F::lit(t as f64) * bead.sigma2() * F::count(spec.m()) / len.powi(3)
}

/// Step count at rescaled time `c` for a given necklace.
pub fn necklace_time_scale<F: Real>(spec: &NecklaceSpec<F>, c: F) -> u64 {
    let bead = spec.bead();
    time_scale(spec.n(), spec.m(), bead.mu(), bead.sigma2(), c)
}

/// Position on the circle where the limit density is read for a state at position `i`.
pub fn abscissa<F: Real>(spec: &NecklaceSpec<F>, t: u64, i: usize) -> F {
    let shift = (spec.bead().mu() - F::one()) * F::count(spec.prefix(i));
    (F::lit(t as f64) - F::count(i) - shift) / spec.effective_length()
}

fn check_start<F: Real>(spec: &NecklaceSpec<F>, start: StateId) -> Result<usize> {
    let idx = spec.index(start).ok_or_else(|| Error::InvalidStart(start.to_string()))?;
    let last = spec.n() - 1;
    let ok = start == StateId::Link(0) || (start.position() == last && spec.has_bead(last));
    if ok {
        Ok(idx)
    } else {
        Err(Error::InvalidStart(start.to_string()))
    }
}

/// Pointwise prediction `pi_n(s') theta_c(x_{s'})` for every state.
#[derive(Debug, Clone, PartialEq)]
pub struct LltPrediction<F> {
    pub t: u64,
    pub c: F,
    pub abscissa: Vec<F>,
    pub predicted: Vec<F>,
}

/// Exact-vs-predicted error summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LltComparison<F> {
    pub max_abs_error: F,
    /// `n` times the maximum error.
    pub scaled_error: F,
}

impl<F: Real> LltPrediction<F> {
    pub fn compare(&self, exact: &Distribution<F>, n: usize) -> Result<LltComparison<F>> {
        if exact.len() != self.predicted.len() {
            return Err(Error::DimensionMismatch { left: exact.len(), right: self.predicted.len() });
        }
        let max_abs_error = exact
            .probs()
            .iter()
            .zip(&self.predicted)
            .fold(F::zero(), |acc, (&a, &b)| acc.max((a - b).abs()));
        Ok(LltComparison { max_abs_error, scaled_error: max_abs_error * F::count(n) })
    }

    pub fn total(&self) -> F {
        ksum(self.predicted.iter().copied())
    }
}

/// Predicted `P^t(start, .)`, with `c` back-solved from `t`.
pub fn llt_predict<F: Real>(spec: &NecklaceSpec<F>, t: u64, start: StateId) -> Result<LltPrediction<F>> {
    check_start(spec, start)?;
    let c = rescaled_time(spec, t);
    let theta = Theta::new(c)?;
    let pi = spec.stationary();
    let abscissa: Vec<F> = spec.states().iter().map(|s| abscissa(spec, t, s.position())).collect();
    let predicted = abscissa.iter().zip(pi.probs()).map(|(&x, &p)| p * theta.eval(x)).collect();
    Ok(LltPrediction { t, c, abscissa, predicted })
}

/// Evolves from `start` and compares with the prediction.
pub fn llt_report<F: Real>(
    spec: &NecklaceSpec<F>,
    op: &TransitionOperator<F>,
    t: u64,
    start: StateId,
) -> Result<(LltPrediction<F>, LltComparison<F>)> {
    let prediction = llt_predict(spec, t, start)?;
    let idx = check_start(spec, start)?;
    let exact = evolve(op, &Distribution::point_mass(spec.num_states(), idx), t);
    let cmp = prediction.compare(&exact, spec.n())?;
    Ok((prediction, cmp))
}

/// Composite midpoint rule on `[0, 1]` with `cells` cells.
fn midpoint<F: Real>(cells: usize, f: impl Fn(F) -> F) -> F {
    let h = F::one() / F::count(cells);
    let half = F::lit(0.5);
    ksum((0..cells).map(|i| f((F::count(i) + half) * h))) * h
}

/// Doubles the midpoint resolution until two successive values agree.
pub fn integrate_unit<F: Real>(f: impl Fn(F) -> F) -> F {
    let tol = F::tol(QUADRATURE_TOL);
    let mut cells = 256;
    let mut prev = midpoint(cells, &f);
    loop {
        cells *= 2;
        let next = midpoint(cells, &f);
        if (next - prev).abs() < tol || cells >= 1 << 24 {
            return next;
        }
        prev = next;
    }
}

/// Limiting total-variation distance `1/2 int_0^1 |theta_c(x) - 1| dx`.
pub fn tv_limit<F: Real>(c: F) -> Result<F> {
    let theta = Theta::new(c)?;
    Ok(integrate_unit(|x| (theta.eval(x) - F::one()).abs()) / F::lit(2.0))
}

/// Smallest `c` (to bisection resolution) with `tv_limit(c) < eps`.
pub fn c_for_tv<F: Real>(eps: F) -> Result<F> {
    if !(eps > F::zero() && eps < F::one()) {
        return Err(Error::OutOfRange { what: "eps", value: eps.as_f64() });
    }
    let mut hi = F::one();
    while tv_limit(hi)? >= eps {
        hi = hi * F::lit(2.0);
    }
    let mut lo = hi / F::lit(2.0);
    while tv_limit(lo)? < eps && lo > F::lit(1e-6) {
        lo = lo / F::lit(2.0);
    }
    for _ in 0..60 {
        let mid = (lo + hi) / F::lit(2.0);
        if tv_limit(mid)? < eps {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < F::tol(1e-12) * hi {
            break;
        }
    }
    Ok(hi)
}

/// How a figure profile places and scales each state's probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileMode {
    /// State index against probability.
    Raw,
    /// Circle position against probability.
    Rearranged,
    /// Circle position against probability over stationary mass.
    Normalized,
}

impl FromStr for ProfileMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(ProfileMode::Raw),
            "rearranged" => Ok(ProfileMode::Rearranged),
            "normalized" => Ok(ProfileMode::Normalized),
            other => Err(Error::InvalidInput(format!("unknown profile mode `{other}`"))),
        }
    }
}

impl fmt::Display for ProfileMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProfileMode::Raw => "raw",
            ProfileMode::Rearranged => "rearranged",
            ProfileMode::Normalized => "normalized",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint<F> {
    pub x: F,
    pub y: F,
    pub state: StateId,
}

/// Profile of the exact `P^t(start, .)` in one of the three modes.
pub fn figure_profile<F: Real>(
    spec: &NecklaceSpec<F>,
    op: &TransitionOperator<F>,
    t: u64,
    start: StateId,
    mode: ProfileMode,
) -> Result<Vec<ProfilePoint<F>>> {
    let idx = check_start(spec, start)?;
    let exact = evolve(op, &Distribution::point_mass(spec.num_states(), idx), t);
    let pi = spec.stationary();
    let points = spec
        .states()
        .iter()
        .enumerate()
        .map(|(s, &state)| {
            let p = exact.probs()[s];
            let x = abscissa(spec, t, state.position());
            let frac = x - x.floor();
            match mode {
                ProfileMode::Raw => ProfilePoint { x: F::count(s), y: p, state },
                ProfileMode::Rearranged => ProfilePoint { x: frac, y: p, state },
                ProfileMode::Normalized => ProfilePoint { x: frac, y: p / pi.probs()[s], state },
            }
        })
        .collect();
    Ok(points)
}

/// `max |y - theta_c(x)|` over a normalized profile.
pub fn profile_deviation<F: Real>(points: &[ProfilePoint<F>], c: F) -> Result<F> {
    let theta = Theta::new(c)?;
    Ok(points.iter().fold(F::zero(), |acc, p| acc.max((p.y - theta.eval(p.x)).abs())))
}

/// One point of a total-variation curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvPoint<F> {
    pub c: F,
    pub t: u64,
    pub exact: F,
    pub limit: F,
}

/// Exact distance to stationarity at `t = time_scale(c)` beside its limit,
/// for each `c`. Evolution is shared across the grid.
pub fn tv_curve<F: Real>(
    spec: &NecklaceSpec<F>,
    op: &TransitionOperator<F>,
    start: StateId,
    cs: &[F],
) -> Result<Vec<TvPoint<F>>> {
    let idx = check_start(spec, start)?;
    let pi = spec.stationary();
    let mut order: Vec<(usize, u64)> = Vec::with_capacity(cs.len());
    for (k, &c) in cs.iter().enumerate() {
        Theta::new(c)?;
        order.push((k, necklace_time_scale(spec, c)));
    }
    order.sort_by_key(|&(_, t)| t);
    let mut out: Vec<Option<TvPoint<F>>> = vec![None; cs.len()];
    let mut current = Distribution::point_mass(spec.num_states(), idx);
    let mut now = 0;
    for (k, t) in order {
        current = evolve(op, &current, t - now);
        now = t;
        let exact = tv_distance(&current, &pi)?;
        out[k] = Some(TvPoint { c: cs[k], t, exact, limit: tv_limit(cs[k])? });
    }
    Ok(out.into_iter().map(|p| p.unwrap()).collect())
}

/// Hold probability minimising the `n^2` coefficient `(q + pk)^3 / (pqk)`
/// when a fraction `k` of positions carry simple beads.
pub fn optimal_hold<F: Real>(k: F) -> Result<F> {
    if !(k > F::zero() && k <= F::one()) {
        return Err(Error::OutOfRange { what: "bead fraction", value: k.as_f64() });
    }
    if k == F::one() {
        return Ok(F::lit(0.5));
    }
    Ok((-k + (k * k - k + F::one()).sqrt()) / (F::one() - k))
}

/// The coefficient `(q + pk)^3 / (pqk)` itself.
pub fn hold_coefficient<F: Real>(p: F, k: F) -> F {
    let q = F::one() - p;
    (q + p * k).powi(3) / (p * q * k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bead::{BeadAnalysis, BeadSpec};
    use crate::necklace::{indicator_gallery, Pattern};

    /// Fourier form: `1 + 2 sum_k exp(-2 pi^2 k^2 c) cos(2 pi k x)`.
    fn theta_fourier(c: f64, x: f64) -> f64 {
        use std::f64::consts::PI;
        1.0 + 2.0
            * (1..2000)
                .map(|k| {
                    let k = k as f64;
                    (-2.0 * PI * PI * k * k * c).exp() * (2.0 * PI * k * x).cos()
                })
                .sum::<f64>()
    }

    #[test]
    fn theta_matches_fourier_series() {
        for c in [0.05f64, 0.08, 0.3, 1.0, 10.0] {
            for i in 0..40 {
                let x = i as f64 / 40.0 - 0.3;
                let a = theta(c, x).unwrap();
                assert!((a - theta_fourier(c, x)).abs() < 1e-12, "c={c} x={x}");
            }
        }
    }

    #[test]
    fn theta_periodic_and_even() {
        for c in [0.01f64, 0.5, 3.0] {
            for x in [0.0, 0.13, 0.5, 0.77] {
                let a = theta(c, x).unwrap();
                assert!((a - theta(c, x + 1.0).unwrap()).abs() < 1e-14);
                assert!((a - theta(c, -x).unwrap()).abs() < 1e-14);
                assert!(a >= 0.0);
            }
        }
    }

    #[test]
    fn theta_truncation_is_stable() {
        let mut c = 0.01f64;
        while c <= 100.0 {
            let th = Theta::new(c).unwrap();
            for x in [0.0, 0.25, 0.5, 0.9] {
                let k = th.shells(x);
                assert!((th.eval_shells(x, k) - th.eval_shells(x, k + 4)).abs() < 1e-14);
            }
            c *= 1.7;
        }
    }

    #[test]
    fn theta_integrates_to_one() {
        for c in [0.01f64, 0.08, 1.0, 10.0] {
            let th = Theta::new(c).unwrap();
            let coarse: f64 = midpoint(2000, |x| th.eval(x));
            let fine: f64 = midpoint(4000, |x| th.eval(x));
            assert!((coarse - 1.0).abs() < 1e-10 && (fine - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn nonpositive_c_rejected() {
        assert_eq!(theta(0.0, 0.1).unwrap_err(), Error::NonpositiveC(0.0));
        assert!(tv_limit(-1.0).is_err());
    }

    #[test]
    fn time_scale_examples() {
        // n = 50 alternating simple beads with p = 2/3: t = 530 at c = 0.0795
        assert_eq!(time_scale(50, 25, 3.0, 6.0, 0.0795), 530);
        // fixed count: leading n^3 / (sigma^2 m)
        let n = 10_000;
        let ratio = time_scale_real(n, 3, 2.0, 1.5, 1.0) / (n as f64).powi(3);
        assert!((ratio - 1.0 / (1.5 * 3.0)).abs() < 1e-2);
        // fixed fraction: leading (k mu - k + 1)^3 / (sigma^2 k) n^2
        let k = 0.4;
        let m = (k * n as f64) as usize;
        let ratio = time_scale_real(n, m, 3.0, 6.0, 1.0) / (n as f64).powi(2);
        assert!((ratio - (k * 3.0 - k + 1.0f64).powi(3) / (6.0 * k)).abs() < 1e-9);
    }

    #[test]
    fn tv_limit_extremes_and_monotone() {
        assert!(tv_limit(10.0).unwrap() < 1e-6);
        assert!(tv_limit(1e-4).unwrap() > 0.9);
        let mut prev = 1.0;
        for i in 1..=100 {
            let v = tv_limit(i as f64 / 100.0).unwrap();
            assert!(v < prev, "c={}", i as f64 / 100.0);
            prev = v;
        }
    }

    fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
        let g = (5f64.sqrt() - 1.0) / 2.0;
        while b - a > 1e-12 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if f(c) < f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        (a + b) / 2.0
    }

    #[test]
    fn optimal_hold_matches_minimisation() {
        for k in [0.1f64, 0.3, 0.5, 0.9] {
            let numeric = golden_section(|p| hold_coefficient(p, k), 1e-6, 1.0 - 1e-6);
            assert!((optimal_hold(k).unwrap() - numeric).abs() < 1e-8);
        }
        assert!((optimal_hold(0.5f64).unwrap() - 0.7320508075688772).abs() < 1e-12);
        assert_eq!(optimal_hold(1.0f64).unwrap(), 0.5);
        assert!(optimal_hold(0.0).is_err());
        assert!(optimal_hold(1.5).is_err());
    }

    fn alternating(n: usize) -> NecklaceSpec<f64> {
        let bead = BeadAnalysis::new(BeadSpec::simple(2.0 / 3.0).unwrap()).unwrap();
        NecklaceSpec::new(bead, indicator_gallery(Pattern::Alternating, n).unwrap()).unwrap()
    }

    #[test]
    fn abscissa_spacing() {
        let spec = alternating(20);
        let len = spec.effective_length();
        let mu = spec.bead().mu();
        for i in 0..19 {
            let gap = abscissa(&spec, 300, i) - abscissa(&spec, 300, i + 1);
            let r = if spec.has_bead(i) { 1.0 } else { 0.0 };
            assert!((gap - (1.0 + (mu - 1.0) * r) / len).abs() < 1e-14);
        }
    }

    #[test]
    fn llt_start_restrictions() {
        let spec = alternating(10);
        assert!(llt_predict(&spec, 50, StateId::Link(0)).is_ok());
        // position 9 has no bead in the alternating pattern
        assert!(matches!(llt_predict(&spec, 50, StateId::Link(9)), Err(Error::InvalidStart(_))));
        assert!(matches!(llt_predict(&spec, 50, StateId::Link(3)), Err(Error::InvalidStart(_))));
        let block = NecklaceSpec::new(spec.bead().clone(), vec![true; 10]).unwrap();
        assert!(llt_predict(&block, 50, StateId::Link(9)).is_ok());
    }

    #[test]
    fn large_c_prediction_is_stationary() {
        let spec = alternating(30);
        let t = necklace_time_scale(&spec, 10.0);
        let pred = llt_predict(&spec, t, StateId::Link(0)).unwrap();
        for (a, b) in pred.predicted.iter().zip(spec.stationary().probs()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn predictions_sum_to_one() {
        let spec = alternating(100);
        let t = necklace_time_scale(&spec, 0.08);
        let pred = llt_predict(&spec, t, StateId::Link(0)).unwrap();
        assert!((pred.total() - 1.0).abs() < 0.01);
    }

    #[test]
    fn raw_profile_sums_to_one() {
        let spec = alternating(50);
        let op = spec.operator();
        let raw = figure_profile(&spec, &op, 530, StateId::Link(0), ProfileMode::Raw).unwrap();
        let total: f64 = raw.iter().map(|p| p.y).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
