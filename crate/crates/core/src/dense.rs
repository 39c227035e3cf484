//! Dense matrix realisation of the operators on the full `2^(N+1)` space.
//!
//! Basis index bit `N - k` holds site `k` (site 0 is the most significant
//! bit); a zero bit is spin up.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use faer::complex_native::c64;
use faer::{Mat, Side};

use crate::descriptor::Quantity;
use crate::error::{Error, Result};
use crate::model::{CouplingSet, FieldStrength};
use crate::pauli::Letter;

/// Default largest bath for dense construction.
pub const DEFAULT_DENSE_CAP: usize = 12;

/// Elementary matrices are only cached up to this many bath spins.
const CACHE_MAX_N: usize = 8;

#[derive(Clone, Debug)]
pub struct DenseOperator {
    n: usize,
    mat: Mat<c64>,
    label: String,
}

type ElementaryKey = (usize, usize, Letter);

fn elementary_cache() -> &'static Mutex<HashMap<ElementaryKey, Arc<Mat<c64>>>> {
    static CACHE: OnceLock<Mutex<HashMap<ElementaryKey, Arc<Mat<c64>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn bit(n: usize, site: usize) -> usize {
    1 << (n - site)
}

fn up(state: usize, n: usize, site: usize) -> bool {
    state & bit(n, site) == 0
}

impl DenseOperator {
    fn from_mat(n: usize, mat: Mat<c64>, label: impl Into<String>) -> Self {
        DenseOperator { n, mat, label: label.into() }
    }

    pub fn zeros(n: usize) -> Self {
        let d = 1usize << (n + 1);
        Self::from_mat(n, Mat::zeros(d, d), "0")
    }

    pub fn identity(n: usize) -> Self {
        let d = 1usize << (n + 1);
        Self::from_mat(n, Mat::identity(d, d), "1")
    }

    /// `S_site^letter` on `n` bath spins, cached for small systems.
    pub fn spin(n: usize, site: usize, letter: Letter) -> Self {
        let key = (n, site, letter);
        if n <= CACHE_MAX_N {
            if let Some(m) = elementary_cache().lock().expect("cache lock").get(&key) {
                return Self::from_mat(n, (**m).clone(), format!("S{site}{}", letter.as_char()));
            }
        }
        let d = 1usize << (n + 1);
        let mut m = Mat::<c64>::zeros(d, d);
        let b = bit(n, site);
        for s in 0..d {
            let u = up(s, n, site);
            match letter {
                Letter::Z => m.write(s, s, c64::new(if u { 0.5 } else { -0.5 }, 0.0)),
                Letter::X => m.write(s ^ b, s, c64::new(0.5, 0.0)),
                // S^y |up> = i/2 |down>, S^y |down> = -i/2 |up>
                Letter::Y => m.write(s ^ b, s, c64::new(0.0, if u { 0.5 } else { -0.5 })),
            }
        }
        if n <= CACHE_MAX_N {
            elementary_cache().lock().expect("cache lock").insert(key, Arc::new(m.clone()));
        }
        Self::from_mat(n, m, format!("S{site}{}", letter.as_char()))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &Mat<c64> {
        &self.mat
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(Self::from_mat(self.n, &self.mat * &other.mat, format!("{}*{}", self.label, other.label)))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(Self::from_mat(self.n, &self.mat + &other.mat, format!("{}+{}", self.label, other.label)))
    }

    pub fn scale(&self, s: f64) -> Self {
        let m = Mat::from_fn(self.dim(), self.dim(), |i, j| {
            let v = self.mat.read(i, j);
            c64::new(v.re * s, v.im * s)
        });
        Self::from_mat(self.n, m, self.label.clone())
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let m = &self.mat * &other.mat - &other.mat * &self.mat;
        Ok(Self::from_mat(self.n, m, format!("[{},{}]", self.label, other.label)))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.norm_l2()
    }

    /// `|A - A^dagger|_F / |A|_F`.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                let a = self.mat.read(i, j);
                let b = self.mat.read(j, i);
                acc += (a.re - b.re).powi(2) + (a.im + b.im).powi(2);
            }
        }
        let norm = self.frobenius_norm();
        if norm == 0.0 {
            0.0
        } else {
            acc.sqrt() / norm
        }
    }

    /// `Tr[A^dagger B] / dim`.
    pub fn scalar_product(&self, other: &Self) -> Result<c64> {
        self.check(other)?;
        let d = self.dim();
        let (mut re, mut im) = (0.0, 0.0);
        for j in 0..d {
            for i in 0..d {
                let a = self.mat.read(i, j);
                let b = other.mat.read(i, j);
                re += a.re * b.re + a.im * b.im;
                im += a.re * b.im - a.im * b.re;
            }
        }
        Ok(c64::new(re / d as f64, im / d as f64))
    }

    /// Eigenvalues of a Hermitian operator, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let evd = self.mat.selfadjoint_eigendecomposition(Side::Lower);
        let mut v: Vec<f64> = (0..self.dim()).map(|i| evd.s().column_vector().read(i).re).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Entry `(row, col)`.
    pub fn get(&self, row: usize, col: usize) -> c64 {
        self.mat.read(row, col)
    }
}

/// Builds dense operators for one coupling set and field with cached powers.
#[derive(Debug)]
pub struct DenseSystem {
    n: usize,
    j: Vec<f64>,
    h: f64,
    h0_powers: HashMap<u32, DenseOperator>,
}

impl DenseSystem {
    pub fn new(c: &CouplingSet, h: &FieldStrength) -> Result<Self> {
        Self::with_cap(c, h, DEFAULT_DENSE_CAP)
    }

    pub fn with_cap(c: &CouplingSet, h: &FieldStrength, cap: usize) -> Result<Self> {
        if c.n() > cap {
            return Err(Error::ResourceExceeded(format!("dense construction capped at N = {cap}, got N = {}", c.n())));
        }
        Ok(DenseSystem { n: c.n(), j: c.values().to_vec(), h: h.value(), h0_powers: HashMap::new() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn dim(&self) -> usize {
        1 << (self.n + 1)
    }

    /// Weighted sum of pair dot products plus a weighted `S^z` sum, written
    /// directly from the action on basis states.
    fn pair_operator(&self, pairs: &[(usize, usize, f64)], zs: &[(usize, f64)], label: &str) -> DenseOperator {
        let d = self.dim();
        let n = self.n;
        let mut m = Mat::<c64>::zeros(d, d);
        for s in 0..d {
            let mut diag = 0.0;
            for &(k, w) in zs {
                diag += if up(s, n, k) { 0.5 * w } else { -0.5 * w };
            }
            for &(k, l, w) in pairs {
                if k == l {
                    diag += 0.75 * w;
                    continue;
                }
                let (uk, ul) = (up(s, n, k), up(s, n, l));
                diag += if uk == ul { 0.25 * w } else { -0.25 * w };
                if uk != ul {
                    let t = s ^ bit(n, k) ^ bit(n, l);
                    let v = m.read(t, s);
                    m.write(t, s, c64::new(v.re + 0.5 * w, v.im));
                }
            }
            let v = m.read(s, s);
            m.write(s, s, c64::new(v.re + diag, v.im));
        }
        DenseOperator::from_mat(n, m, label)
    }

    pub fn iz(&self) -> DenseOperator {
        let zs: Vec<(usize, f64)> = (0..=self.n).map(|k| (k, 1.0)).collect();
        self.pair_operator(&[], &zs, "Iz")
    }

    pub fn dot(&self, k: usize, l: usize) -> DenseOperator {
        self.pair_operator(&[(k, l, 1.0)], &[], &format!("S{k}.S{l}"))
    }

    pub fn h_l(&self, l: usize) -> Result<DenseOperator> {
        if l > self.n {
            return Err(Error::InvalidParameter(format!("index l = {l} exceeds N = {}", self.n)));
        }
        let eps = |k: usize| if k == 0 { 0.0 } else { -1.0 / self.j[k - 1] };
        let mut pairs = Vec::with_capacity(self.n);
        for k in 0..=self.n {
            if k == l {
                continue;
            }
            let w = if l == 0 {
                self.j[k - 1]
            } else {
                let d = eps(l) - eps(k);
                if d == 0.0 {
                    return Err(Error::DegenerateCouplings(l.min(k), l.max(k)));
                }
                1.0 / d
            };
            pairs.push((l, k, w));
        }
        Ok(self.pair_operator(&pairs, &[(l, -self.h)], &format!("H{l}")))
    }

    pub fn h0_power(&mut self, p: u32) -> Result<DenseOperator> {
        if p == 0 {
            return Ok(DenseOperator::identity(self.n));
        }
        if let Some(m) = self.h0_powers.get(&p) {
            return Ok(m.clone());
        }
        let h0 = self.h_l(0)?;
        let m = if p == 1 { h0 } else { self.h0_power(p - 1)?.mul(&h0)? };
        let m = m.with_label(format!("H0^{p}"));
        self.h0_powers.insert(p, m.clone());
        Ok(m)
    }

    pub fn bz(&self) -> DenseOperator {
        let zs: Vec<(usize, f64)> = self.j.iter().enumerate().map(|(i, &w)| (i + 1, w)).collect();
        self.pair_operator(&[], &zs, "Bz")
    }

    fn pair_sum(&self) -> DenseOperator {
        let mut pairs = Vec::new();
        for k in 0..=self.n {
            for l in k + 1..=self.n {
                pairs.push((k, l, 1.0));
            }
        }
        self.pair_operator(&pairs, &[], "pairs")
    }

    pub fn i_squared(&self) -> DenseOperator {
        let mut pairs = Vec::new();
        for k in 0..=self.n {
            for l in 0..=self.n {
                pairs.push((k, l, 1.0));
            }
        }
        self.pair_operator(&pairs, &[], "I2")
    }

    pub fn build(&mut self, q: Quantity) -> Result<DenseOperator> {
        let label = q.to_string();
        let op = match q.canonical() {
            Quantity::S0z => DenseOperator::spin(self.n, 0, Letter::Z),
            Quantity::Bz => self.bz(),
            Quantity::Iz => self.iz(),
            Quantity::IQz => self.iz().mul(&self.pair_sum())?,
            Quantity::IzI2H0 => self.iz().mul(&self.i_squared())?.mul(&self.h_l(0)?)?,
            Quantity::H0Power(p) => self.h0_power(p)?,
            Quantity::IzH0Power(p) => self.iz().mul(&self.h0_power(p)?)?,
            Quantity::Hl(l) => self.h_l(l)?,
            Quantity::HlZ(l) => self.iz().mul(&self.h_l(l)?)?,
        };
        Ok(op.with_label(label))
    }
}

pub fn build_dense(q: Quantity, c: &CouplingSet, h: &FieldStrength) -> Result<DenseOperator> {
    DenseSystem::new(c, h)?.build(q)
}

/// Real part of `(A|B)` built densely; all family members are Hermitian.
pub fn dense_scalar_product(a: Quantity, b: Quantity, c: &CouplingSet, h: &FieldStrength) -> Result<f64> {
    let mut sys = DenseSystem::new(c, h)?;
    let ea = sys.build(a)?;
    let eb = sys.build(b)?;
    Ok(ea.scalar_product(&eb)?.re)
}
