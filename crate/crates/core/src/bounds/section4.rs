//! The one-bead chain `P_n`, its power `P_n^(n-1)`, the symmetrization
//! `K_n` and the lazy path walk used to compare against it.

use crate::bead::{validate_bead, BeadAnalysis, BeadSpec};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::necklace::{evolve, tv_distance, Distribution, NecklaceSpec, StateId, TransitionOperator};
use crate::scalar::Real;

use super::{mult_symmetrization, ReversibleOperator};

const CLOSED_FORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Section4<F> {
    pub n: usize,
    pub p: F,
    /// `P_n` on states `0..n`.
    pub p_n: DenseMatrix<F>,
    /// `P_n^(n-1)`, computed as a matrix power.
    pub power: DenseMatrix<F>,
    /// Stationary law shared by `P_n` and its power.
    pub pi: Vec<F>,
    /// `K_n = M(P_n^(n-1))`.
    pub k_n: ReversibleOperator<F>,
    /// Lazy walk on the `n`-path.
    pub k_tilde: ReversibleOperator<F>,
    /// `P_n` as a necklace: `n - 1` links and one bead.
    pub p_n_necklace: NecklaceSpec<F>,
    /// `P_n^(n-1)` as a necklace: `n` links and `n - 1` simple beads.
    pub power_necklace: NecklaceSpec<F>,
}

impl<F: Real> Section4<F> {
    /// `P_n`: `0 -> n-1`; `1 -> 0` w.p. `q`, `1 -> n-1` w.p. `p`; `i -> i-1` for `i >= 2`.
    pub fn closed_form_p_n(n: usize, p: F) -> DenseMatrix<F> {
        let mut m = DenseMatrix::zeros(n, n);
        m[(0, n - 1)] = F::one();
        m[(1, 0)] = F::one() - p;
        m[(1, n - 1)] = p;
        for i in 2..n {
            m[(i, i - 1)] = F::one();
        }
        m
    }

    /// `P_n^(n-1)`: `0 -> 1`; hold `p` or advance `q` elsewhere, wrapping `n-1 -> 0`.
    pub fn closed_form_power(n: usize, p: F) -> DenseMatrix<F> {
        let q = F::one() - p;
        let mut m = DenseMatrix::zeros(n, n);
        m[(0, 1)] = F::one();
        for i in 1..n {
            m[(i, i)] = p;
            m[(i, (i + 1) % n)] = q;
        }
        m
    }

    /// `K_n` with corner rows `(q, p)` and `(pq, 1 - pq)`.
    pub fn closed_form_k(n: usize, p: F) -> DenseMatrix<F> {
        let q = F::one() - p;
        let pq = p * q;
        let mut m = DenseMatrix::zeros(n, n);
        m[(0, 0)] = q;
        m[(0, 1)] = p;
        for i in 1..n - 1 {
            m[(i, i - 1)] = pq;
            m[(i, i)] = p * p + q * q;
            m[(i, i + 1)] = pq;
        }
        m[(n - 1, n - 2)] = pq;
        m[(n - 1, n - 1)] = F::one() - pq;
        m
    }

    /// `q/(n-p)` at state 0 and `1/(n-p)` elsewhere.
    pub fn stationary_closed_form(n: usize, p: F) -> Vec<F> {
        let denom = F::count(n) - p;
        let mut pi = vec![F::one() / denom; n];
        pi[0] = (F::one() - p) / denom;
        pi
    }

    /// Lazy simple random walk on the `n`-path, halting at the ends with probability 1/2.
    pub fn lazy_path(n: usize) -> ReversibleOperator<F> {
        let half = F::lit(0.5);
        let quarter = F::lit(0.25);
        let mut m = DenseMatrix::zeros(n, n);
        let mut pi = vec![F::one() / F::count(n - 1); n];
        m[(0, 0)] = half;
        m[(0, 1)] = half;
        m[(n - 1, n - 1)] = half;
        m[(n - 1, n - 2)] = half;
        for i in 1..n - 1 {
            m[(i, i - 1)] = quarter;
            m[(i, i)] = half;
            m[(i, i + 1)] = quarter;
        }
        pi[0] = F::one() / F::count(2 * n - 2);
        pi[n - 1] = pi[0];
        ReversibleOperator::new(m, pi).expect("lazy path walk is reversible")
    }

    /// Matrix state of each `P_n` necklace state, in necklace index order.
    pub fn p_n_states(&self) -> Vec<usize> {
        let n = self.n;
        self.p_n_necklace
            .states()
            .iter()
            .map(|s| match *s {
                StateId::Link(j) => n - 1 - j,
                StateId::BeadInterior(..) => 0,
            })
            .collect()
    }

    /// Distance to stationarity of `P_n^(n-1)` from `x0` at every `t <= t_max`.
    pub fn tv_trajectory(&self, x0: usize, t_max: u64) -> Result<Vec<F>> {
        let op = TransitionOperator::from_dense(&self.power);
        let pi = Distribution::new(self.pi.clone());
        let mut cur = Distribution::point_mass(self.n, x0);
        let mut out = Vec::with_capacity(t_max as usize + 1);
        out.push(tv_distance(&cur, &pi)?);
        for _ in 0..t_max {
            cur = evolve(&op, &cur, 1);
            out.push(tv_distance(&cur, &pi)?);
        }
        Ok(out)
    }

    /// Largest distance to stationarity over all starts after `t` steps of `P_n^(n-1)`.
    /// Uses repeated squaring, so large `t` costs O(n^3 log t).
    pub fn worst_tv(&self, t: u64) -> Result<F> {
        let powered = self.power.pow(t)?;
        let half = F::lit(0.5);
        let mut worst = F::zero();
        for x0 in 0..self.n {
            let row = powered.row(x0);
            let tv = row.iter().zip(&self.pi).fold(F::zero(), |acc, (&a, &b)| acc + (a - b).abs()) * half;
            worst = worst.max(tv);
        }
        Ok(worst)
    }
}

fn check_closed_form<F: Real>(what: &str, got: &DenseMatrix<F>, want: &DenseMatrix<F>) -> Result<()> {
    let diff = got.max_abs_diff(want);
    if diff > F::lit(CLOSED_FORM_TOL) {
        return Err(Error::InvalidInput(format!("{what} differs from its closed form by {diff}")));
    }
    Ok(())
}

/// Builds the four chains for `n >= 3`, `0 < p < 1`, checking the power and
/// the symmetrization against their closed forms.
pub fn build_section4<F: Real>(n: usize, p: F) -> Result<Section4<F>> {
    if n < 3 {
        return Err(Error::OutOfRange { what: "n", value: n as f64 });
    }
    if !(p > F::zero() && p < F::one()) {
        return Err(Error::OutOfRange { what: "hold probability", value: p.as_f64() });
    }
    let q = F::one() - p;
    let p_n = Section4::closed_form_p_n(n, p);
    let power = p_n.pow((n - 1) as u64)?;
    check_closed_form("P_n^(n-1)", &power, &Section4::closed_form_power(n, p))?;
    let pi = Section4::stationary_closed_form(n, p);
    let k_n = mult_symmetrization(&power, &pi)?;
    check_closed_form("M(P_n^(n-1))", k_n.matrix(), &Section4::closed_form_k(n, p))?;

    let one_bead = BeadAnalysis::new(validate_bead(vec![vec![F::zero(), q, p], vec![F::zero(), F::zero(), F::one()]])?)?;
    let mut r = vec![false; n - 1];
    r[n - 2] = true;
    let p_n_necklace = NecklaceSpec::new(one_bead, r)?;

    let simple = BeadAnalysis::new(BeadSpec::simple(p)?)?;
    let mut r = vec![true; n];
    r[0] = false;
    let power_necklace = NecklaceSpec::new(simple, r)?;

    Ok(Section4 {
        n,
        p,
        p_n,
        power,
        pi,
        k_n,
        k_tilde: Section4::lazy_path(n),
        p_n_necklace,
        power_necklace,
    })
}
