//! Small dense linear algebra: enough for stationary vectors of modest chains
//! and the spectrum of symmetric operators.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::{ksum, Real};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Real> DenseMatrix<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![F::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = F::one();
        }
        m
    }

    /// Builds from nested rows; all rows must share one length.
    pub fn from_rows(rows: &[Vec<F>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::DimensionMismatch { left: row.len(), right: cols });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch { left: self.cols, right: other.rows });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == F::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// Integer power by repeated squaring.
    pub fn pow(&self, mut exp: u64) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch { left: self.rows, right: self.cols });
        }
        let mut base = self.clone();
        let mut acc = Self::identity(self.rows);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc.matmul(&base)?;
            }
            exp >>= 1;
            if exp > 0 {
                base = base.matmul(&base)?;
            }
        }
        Ok(acc)
    }

    /// Row vector times matrix.
    pub fn left_apply(&self, v: &[F]) -> Vec<F> {
        let mut out = vec![F::zero(); self.cols];
        for (i, &vi) in v.iter().enumerate().take(self.rows) {
            if vi == F::zero() {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o = *o + vi * a;
            }
        }
        out
    }

    pub fn row_sums(&self) -> Vec<F> {
        (0..self.rows).map(|i| ksum(self.row(i).iter().copied())).collect()
    }

    pub fn max_abs_diff(&self, other: &Self) -> F {
        self.data
            .iter()
            .zip(&other.data)
            .fold(F::zero(), |acc, (&a, &b)| acc.max((a - b).abs()))
    }

    /// Symmetric conjugation `D^{1/2} M D^{-1/2}` with `D = diag(weights)`.
    pub fn conjugate_by_sqrt(&self, weights: &[F]) -> Self {
        let roots: Vec<F> = weights.iter().map(|w| w.sqrt()).collect();
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = roots[i] * self[(i, j)] / roots[j];
            }
        }
        out
    }
}

impl<F> Index<(usize, usize)> for DenseMatrix<F> {
    type Output = F;
    fn index(&self, (i, j): (usize, usize)) -> &F {
        &self.data[i * self.cols + j]
    }
}

impl<F> IndexMut<(usize, usize)> for DenseMatrix<F> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut F {
        &mut self.data[i * self.cols + j]
    }
}

/// Solves `a x = rhs` by Gaussian elimination with partial pivoting.
pub fn solve<F: Real>(a: &DenseMatrix<F>, rhs: &[F]) -> Result<Vec<F>> {
    let n = a.rows();
    if !a.is_square() || rhs.len() != n {
        return Err(Error::DimensionMismatch { left: n, right: rhs.len() });
    }
    let mut m = a.clone();
    let mut x = rhs.to_vec();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[(i, col)].abs().partial_cmp(&m[(j, col)].abs()).unwrap())
            .unwrap();
        if m[(pivot, col)].abs() <= F::min_positive_value() {
            return Err(Error::InvalidInput("singular linear system".into()));
        }
        if pivot != col {
            for j in 0..n {
                let tmp = m[(col, j)];
                m[(col, j)] = m[(pivot, j)];
                m[(pivot, j)] = tmp;
            }
            x.swap(col, pivot);
        }
        let p = m[(col, col)];
        for i in col + 1..n {
            let factor = m[(i, col)] / p;
            if factor == F::zero() {
                continue;
            }
            for j in col..n {
                m[(i, j)] = m[(i, j)] - factor * m[(col, j)];
            }
            x[i] = x[i] - factor * x[col];
        }
    }
    for i in (0..n).rev() {
        let tail = ksum((i + 1..n).map(|j| m[(i, j)] * x[j]));
        x[i] = (x[i] - tail) / m[(i, i)];
    }
    Ok(x)
}

/// Stationary vector of an irreducible stochastic matrix from the balance
/// equations, with the last equation swapped for the normalization.
pub fn stationary_dense<F: Real>(p: &DenseMatrix<F>) -> Result<Vec<F>> {
    let n = p.rows();
    if !p.is_square() {
        return Err(Error::DimensionMismatch { left: p.rows(), right: p.cols() });
    }
    let mut a = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            // row i of (P - I)^T
            a[(i, j)] = p[(j, i)] - if i == j { F::one() } else { F::zero() };
        }
    }
    for j in 0..n {
        a[(n - 1, j)] = F::one();
    }
    let mut rhs = vec![F::zero(); n];
    rhs[n - 1] = F::one();
    solve(&a, &rhs)
}

/// Connected components of the undirected graph with an edge wherever
/// `m[(x, y)] > 0` or `m[(y, x)] > 0`, `x != y`. Returns a component label per vertex.
pub fn components<F: Real>(m: &DenseMatrix<F>) -> Vec<usize> {
    let n = m.rows();
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    for root in 0..n {
        if label[root] != usize::MAX {
            continue;
        }
        label[root] = next;
        let mut stack = vec![root];
        while let Some(x) = stack.pop() {
            for y in 0..n {
                if y != x
                    && label[y] == usize::MAX
                    && (m[(x, y)] > F::zero() || m[(y, x)] > F::zero())
                {
                    label[y] = next;
                    stack.push(y);
                }
            }
        }
        next += 1;
    }
    label
}

/// Eigenvalues of a symmetric matrix in descending order.
///
/// Householder reduction to tridiagonal form followed by the implicit QL
/// iteration with Wilkinson-style shifts.
pub fn symmetric_eigenvalues<F: Real>(sym: &DenseMatrix<F>) -> Result<Vec<F>> {
    if !sym.is_square() {
        return Err(Error::DimensionMismatch { left: sym.rows(), right: sym.cols() });
    }
    let n = sym.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let (mut d, mut e) = tridiagonalize(sym);
    tridiagonal_ql(&mut d, &mut e)?;
    d.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(d)
}

fn tridiagonalize<F: Real>(sym: &DenseMatrix<F>) -> (Vec<F>, Vec<F>) {
    let n = sym.rows();
    let mut a = sym.clone();
    let mut d = vec![F::zero(); n];
    let mut e = vec![F::zero(); n];
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = F::zero();
        if l > 0 {
            let scale = ksum((0..=l).map(|k| a[(i, k)].abs()));
            if scale == F::zero() {
                e[i] = a[(i, l)];
            } else {
                for k in 0..=l {
                    a[(i, k)] = a[(i, k)] / scale;
                    h = h + a[(i, k)] * a[(i, k)];
                }
                let f = a[(i, l)];
                let g = if f >= F::zero() { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h = h - f * g;
                a[(i, l)] = f - g;
                let mut f = F::zero();
                for j in 0..=l {
                    let mut g = F::zero();
                    for k in 0..=j {
                        g = g + a[(j, k)] * a[(i, k)];
                    }
                    for k in j + 1..=l {
                        g = g + a[(k, j)] * a[(i, k)];
                    }
                    e[j] = g / h;
                    f = f + e[j] * a[(i, j)];
                }
                let hh = f / (h + h);
                for j in 0..=l {
                    let f = a[(i, j)];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        a[(j, k)] = a[(j, k)] - (f * e[k] + g * a[(i, k)]);
                    }
                }
            }
        } else {
            e[i] = a[(i, l)];
        }
        d[i] = h;
    }
    for (i, di) in d.iter_mut().enumerate() {
        *di = a[(i, i)];
    }
    // shift off-diagonal so e[i] couples i and i+1
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = F::zero();
    (d, e)
}

fn tridiagonal_ql<F: Real>(d: &mut [F], e: &mut [F]) -> Result<()> {
    let n = d.len();
    let two = F::lit(2.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= F::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 64 {
                return Err(Error::InvalidInput("QL iteration did not converge".into()));
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(F::one());
            g = d[m] - d[l] + e[l] / (g + if g >= F::zero() { r.abs() } else { -r.abs() });
            let (mut s, mut c, mut p) = (F::one(), F::one(), F::zero());
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == F::zero() {
                    d[i + 1] = d[i + 1] - p;
                    e[m] = F::zero();
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] = d[l] - p;
            e[l] = g;
            e[m] = F::zero();
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Cyclic Jacobi rotations; slow but independent of the QL path.
    fn jacobi_eigenvalues(m: &DenseMatrix<f64>) -> Vec<f64> {
        let n = m.rows();
        let mut a = m.clone();
        for _ in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)] * a[(i, j)])
                .sum();
            if off < 1e-30 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if a[(p, q)].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
        ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
        ev
    }

    fn pseudo_random_symmetric(n: usize, seed: u64) -> DenseMatrix<f64> {
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = next();
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    #[test]
    fn ql_matches_jacobi() {
        for (n, seed) in [(1, 1), (2, 2), (5, 3), (12, 4), (30, 5)] {
            let m = pseudo_random_symmetric(n, seed);
            let ql = symmetric_eigenvalues(&m).unwrap();
            let jac = jacobi_eigenvalues(&m);
            for (a, b) in ql.iter().zip(&jac) {
                assert!((a - b).abs() < 1e-11, "n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn path_laplacian_spectrum() {
        // simple random walk on a path with reflecting ends: eigenvalues cos(pi j/(n-1))
        let n = 9;
        let mut p = DenseMatrix::zeros(n, n);
        p[(0, 1)] = 1.0;
        p[(n - 1, n - 2)] = 1.0;
        for i in 1..n - 1 {
            p[(i, i - 1)] = 0.5;
            p[(i, i + 1)] = 0.5;
        }
        let mut w = vec![1.0 / (n - 1) as f64; n];
        w[0] /= 2.0;
        w[n - 1] /= 2.0;
        let ev = symmetric_eigenvalues(&p.conjugate_by_sqrt(&w)).unwrap();
        for (j, v) in ev.iter().enumerate() {
            let expect = (std::f64::consts::PI * j as f64 / (n - 1) as f64).cos();
            assert!((v - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn solve_and_stationary() {
        let a = DenseMatrix::<f64>::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let x = solve(&a, &[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-15 && (x[1] - 1.4).abs() < 1e-15);

        let p = DenseMatrix::<f64>::from_rows(&[vec![0.9, 0.1], vec![0.5, 0.5]]).unwrap();
        let pi = stationary_dense(&p).unwrap();
        assert!((pi[0] - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn singular_system_is_an_error() {
        let a = DenseMatrix::<f64>::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(solve(&a, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn pow_matches_repeated_product() {
        let p = DenseMatrix::<f64>::from_rows(&[vec![0.2, 0.8], vec![0.6, 0.4]]).unwrap();
        let mut acc = DenseMatrix::identity(2);
        for _ in 0..7 {
            acc = acc.matmul(&p).unwrap();
        }
        assert!(p.pow(7).unwrap().max_abs_diff(&acc) < 1e-15);
    }

    #[test]
    fn components_split_on_missing_edges() {
        let m = DenseMatrix::<f64>::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 0.5, 0.5],
            vec![0.0, 0.5, 0.5],
        ])
        .unwrap();
        let c = components(&m);
        assert_eq!(c[1], c[2]);
        assert_ne!(c[0], c[1]);
    }
}
