//! Dense kernels: symmetric eigensolvers, the projection solve behind every
//! bound, exact elimination over the rationals, and small least squares.

use faer::{Mat, Side};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::scalar::{Real, Scalar};

/// Eigenpairs sorted by ascending eigenvalue; `vectors[j]` belongs to `values[j]`.
#[derive(Clone, Debug)]
pub struct SymEigen<T> {
    pub values: Vec<T>,
    pub vectors: Vec<Vec<T>>,
}

/// Cyclic Jacobi. Slow but precision-agnostic, so it also runs on extended floats.
pub fn jacobi_eigen<T: Real>(a: &[Vec<T>]) -> SymEigen<T> {
    let n = a.len();
    let mut m: Vec<Vec<T>> = a.to_vec();
    let mut v: Vec<Vec<T>> =
        (0..n).map(|i| (0..n).map(|j| if i == j { T::one() } else { T::zero() }).collect()).collect();
    let eps = T::from_f64(T::epsilon());
    let two = T::from_i64(2);
    for _sweep in 0..100 {
        let mut off = T::zero();
        let mut total = T::zero();
        for i in 0..n {
            for j in 0..n {
                let s = m[i][j].clone() * m[i][j].clone();
                total = total + s.clone();
                if i != j {
                    off = off + s;
                }
            }
        }
        if off <= eps.clone() * eps.clone() * total || off.is_zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p][q].clone();
                if apq.is_zero() {
                    continue;
                }
                let theta = (m[q][q].clone() - m[p][p].clone()) / (two.clone() * apq.clone());
                let sign = if theta < T::zero() { -T::one() } else { T::one() };
                let t = sign / (theta.abs() + (theta.clone() * theta + T::one()).sqrt());
                let c = T::one() / (t.clone() * t.clone() + T::one()).sqrt();
                let s = t.clone() * c.clone();
                for k in 0..n {
                    let mkp = m[k][p].clone();
                    let mkq = m[k][q].clone();
                    m[k][p] = c.clone() * mkp.clone() - s.clone() * mkq.clone();
                    m[k][q] = s.clone() * mkp + c.clone() * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k].clone();
                    let mqk = m[q][k].clone();
                    m[p][k] = c.clone() * mpk.clone() - s.clone() * mqk.clone();
                    m[q][k] = s.clone() * mpk + c.clone() * mqk;
                }
                for row in v.iter_mut() {
                    let vp = row[p].clone();
                    let vq = row[q].clone();
                    row[p] = c.clone() * vp.clone() - s.clone() * vq.clone();
                    row[q] = s.clone() * vp + c.clone() * vq;
                }
            }
        }
    }
    let values: Vec<T> = (0..n).map(|i| m[i][i].clone()).collect();
    let vectors: Vec<Vec<T>> = (0..n).map(|j| (0..n).map(|i| v[i][j].clone()).collect()).collect();
    sorted(values, vectors)
}

fn sorted<T: Scalar>(values: Vec<T>, vectors: Vec<Vec<T>>) -> SymEigen<T> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap_or(std::cmp::Ordering::Equal).then(i.cmp(&j)));
    SymEigen {
        values: idx.iter().map(|&i| values[i].clone()).collect(),
        vectors: idx.iter().map(|&i| vectors[i].clone()).collect(),
    }
}

/// LAPACK-class eigensolver for larger double matrices.
pub fn faer_eigen(a: &[Vec<f64>]) -> SymEigen<f64> {
    let n = a.len();
    let m = Mat::<f64>::from_fn(n, n, |i, j| a[i][j]);
    let evd = m.selfadjoint_eigendecomposition(Side::Lower);
    let s = evd.s();
    let u = evd.u();
    let values: Vec<f64> = (0..n).map(|i| s.column_vector().read(i)).collect();
    let vectors: Vec<Vec<f64>> = (0..n).map(|j| (0..n).map(|i| u.read(i, j)).collect()).collect();
    sorted(values, vectors)
}

/// Picks Jacobi for small or non-double inputs.
pub trait SymEigenSolver: Real {
    fn sym_eigen(a: &[Vec<Self>]) -> SymEigen<Self> {
        jacobi_eigen(a)
    }
}

impl SymEigenSolver for f64 {
    fn sym_eigen(a: &[Vec<f64>]) -> SymEigen<f64> {
        if a.len() <= 24 {
            jacobi_eigen(a)
        } else {
            faer_eigen(a)
        }
    }
}

impl<const B: usize> SymEigenSolver for super::ext::Ext<B> {}

/// Result of projecting a vector onto the range of a Gram matrix.
#[derive(Clone, Debug)]
pub struct Projection<T> {
    /// `a^T N^+ a`.
    pub value: T,
    /// Coefficients `y = N^+ a`.
    pub y: Vec<T>,
    pub rank: usize,
    /// `|N y - a| / |a|`.
    pub residual: f64,
    /// Smallest retained over largest eigenvalue of the equilibrated matrix.
    pub condition: f64,
}

/// Rank-revealing pseudo-inverse quadratic form after symmetric diagonal
/// scaling. Eigenvalues below `rel_cut * lambda_max` are discarded.
pub fn project<T: SymEigenSolver>(n: &[Vec<T>], a: &[T], rel_cut: f64) -> Projection<T> {
    let dim = a.len();
    assert_eq!(n.len(), dim);
    let scale: Vec<T> =
        (0..dim).map(|i| if n[i][i] > T::zero() { T::one() / n[i][i].sqrt() } else { T::zero() }).collect();
    let ms: Vec<Vec<T>> =
        (0..dim).map(|i| (0..dim).map(|j| scale[i].clone() * n[i][j].clone() * scale[j].clone()).collect()).collect();
    let a_s: Vec<T> = (0..dim).map(|i| scale[i].clone() * a[i].clone()).collect();
    let eig = T::sym_eigen(&ms);
    let lmax = eig.values.iter().cloned().fold(T::zero(), |acc, v| if v > acc { v } else { acc });
    let cut = lmax.clone() * T::from_f64(rel_cut);
    let mut value = T::zero();
    let mut ys = vec![T::zero(); dim];
    let mut rank = 0;
    let mut lmin_kept = lmax.clone();
    for (lam, vec) in eig.values.iter().zip(&eig.vectors) {
        if *lam <= cut || lam.is_zero() {
            continue;
        }
        rank += 1;
        if *lam < lmin_kept {
            lmin_kept = lam.clone();
        }
        let proj = vec.iter().zip(&a_s).fold(T::zero(), |acc, (v, x)| acc + v.clone() * x.clone());
        value = value + proj.clone() * proj.clone() / lam.clone();
        let w = proj / lam.clone();
        for (yi, vi) in ys.iter_mut().zip(vec) {
            *yi = yi.clone() + w.clone() * vi.clone();
        }
    }
    let y: Vec<T> = ys.into_iter().zip(&scale).map(|(v, s)| v * s.clone()).collect();
    let mut r2 = T::zero();
    let mut a2 = T::zero();
    for i in 0..dim {
        let ny = (0..dim).fold(T::zero(), |acc, j| acc + n[i][j].clone() * y[j].clone());
        let d = ny - a[i].clone();
        r2 = r2 + d.clone() * d;
        a2 = a2 + a[i].clone() * a[i].clone();
    }
    let residual = if a2.is_zero() { 0.0 } else { (r2 / a2).sqrt().to_f64() };
    let condition = if rank == 0 || lmax.is_zero() { 0.0 } else { (lmin_kept / lmax).to_f64() };
    Projection { value, y, rank, residual, condition }
}

/// Reduced row echelon form built one row at a time.
#[derive(Clone, Debug, Default)]
pub struct IncrementalEchelon {
    rows: Vec<Vec<BigRational>>,
    pivots: Vec<usize>,
}

impl IncrementalEchelon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    fn reduce(&self, row: &[BigRational]) -> Vec<BigRational> {
        let mut r = row.to_vec();
        for (er, &p) in self.rows.iter().zip(&self.pivots) {
            if !r[p].is_zero() {
                let f = r[p].clone();
                for (x, e) in r.iter_mut().zip(er) {
                    if !e.is_zero() {
                        *x -= &f * e;
                    }
                }
            }
        }
        r
    }

    pub fn is_independent(&self, row: &[BigRational]) -> bool {
        self.reduce(row).iter().any(|x| !x.is_zero())
    }

    /// Adds the row when it raises the rank.
    pub fn try_add(&mut self, row: &[BigRational]) -> bool {
        let mut r = self.reduce(row);
        let Some(p) = r.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        let inv = r[p].recip();
        for x in r.iter_mut() {
            *x *= &inv;
        }
        for er in self.rows.iter_mut() {
            if !er[p].is_zero() {
                let f = er[p].clone();
                for (x, e) in er.iter_mut().zip(&r) {
                    if !e.is_zero() {
                        *x -= &f * e;
                    }
                }
            }
        }
        self.rows.push(r);
        self.pivots.push(p);
        true
    }

    /// Basis of the right null space, one vector per free column.
    pub fn null_space(&self, cols: usize) -> Vec<Vec<BigRational>> {
        let mut out = Vec::new();
        for free in 0..cols {
            if self.pivots.contains(&free) {
                continue;
            }
            let mut v = vec![BigRational::from_integer(BigInt::zero()); cols];
            v[free] = BigRational::from_integer(BigInt::one());
            for (er, &p) in self.rows.iter().zip(&self.pivots) {
                v[p] = -er[free].clone();
            }
            out.push(v);
        }
        out
    }
}

/// Fraction-free (Bareiss) solve of a square rational system. `None` when singular.
pub fn bareiss_solve(a: &[Vec<BigRational>], b: &[BigRational]) -> Option<Vec<BigRational>> {
    let n = a.len();
    // clear denominators row by row so elimination runs over the integers
    let mut m: Vec<Vec<BigInt>> = Vec::with_capacity(n);
    for (row, rhs) in a.iter().zip(b) {
        let lcm = row.iter().chain(std::iter::once(rhs)).fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
        m.push(row.iter().chain(std::iter::once(rhs)).map(|q| q.numer() * (&lcm / q.denom())).collect());
    }
    let mut prev = BigInt::one();
    for k in 0..n {
        if m[k][k].is_zero() {
            let swap = (k + 1..n).find(|&i| !m[i][k].is_zero())?;
            m.swap(k, swap);
        }
        for i in k + 1..n {
            for j in k + 1..=n {
                let v = (&m[i][j] * &m[k][k] - &m[i][k] * &m[k][j]) / &prev;
                m[i][j] = v;
            }
            m[i][k] = BigInt::zero();
        }
        prev = m[k][k].clone();
    }
    let mut x = vec![BigRational::from_integer(BigInt::zero()); n];
    for i in (0..n).rev() {
        let mut acc = BigRational::from_integer(m[i][n].clone());
        for j in i + 1..n {
            acc -= BigRational::from_integer(m[i][j].clone()) * &x[j];
        }
        x[i] = acc / BigRational::from_integer(m[i][i].clone());
    }
    Some(x)
}

/// Ordinary least squares through a QR factorisation.
#[derive(Clone, Debug)]
pub struct LeastSquares {
    pub coefficients: Vec<f64>,
    /// One-sigma standard errors.
    pub std_errors: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub residual_norm: f64,
}

pub fn least_squares(design: &[Vec<f64>], y: &[f64]) -> LeastSquares {
    let m = design.len();
    let p = design.first().map_or(0, Vec::len);
    let a = Mat::<f64>::from_fn(m, p, |i, j| design[i][j]);
    let rhs = Mat::<f64>::from_fn(m, 1, |i, _| y[i]);
    let qr = a.qr();
    let r = qr.compute_thin_r();
    let q = qr.compute_thin_q();
    let qty = q.transpose() * &rhs;
    let mut coef = vec![0.0; p];
    for i in (0..p).rev() {
        let mut acc = qty.read(i, 0);
        for j in i + 1..p {
            acc -= r.read(i, j) * coef[j];
        }
        coef[i] = acc / r.read(i, i);
    }
    let rss: f64 = (0..m)
        .map(|i| {
            let fit: f64 = (0..p).map(|j| design[i][j] * coef[j]).sum();
            (y[i] - fit).powi(2)
        })
        .sum();
    // R^{-1} by back substitution; covariance = s^2 R^{-1} R^{-T}
    let mut rinv = vec![vec![0.0; p]; p];
    for col in 0..p {
        for i in (0..=col).rev() {
            let mut acc = if i == col { 1.0 } else { 0.0 };
            for j in i + 1..=col {
                acc -= r.read(i, j) * rinv[j][col];
            }
            rinv[i][col] = acc / r.read(i, i);
        }
    }
    let s2 = if m > p { rss / (m - p) as f64 } else { 0.0 };
    let covariance: Vec<Vec<f64>> =
        (0..p).map(|i| (0..p).map(|j| s2 * (0..p).map(|k| rinv[i][k] * rinv[j][k]).sum::<f64>()).collect()).collect();
    let std_errors = (0..p).map(|i| covariance[i][i].max(0.0).sqrt()).collect();
    LeastSquares { coefficients: coef, std_errors, covariance, residual_norm: rss.sqrt() }
}

pub fn rational_abs_max(v: &[BigRational]) -> BigRational {
    v.iter().map(|x| x.abs()).max().unwrap_or_else(|| BigRational::from_integer(BigInt::zero()))
}
