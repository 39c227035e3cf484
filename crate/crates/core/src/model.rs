//! Bath couplings, their power sums, and the shifted couplings of the
//! integrable family.

use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{format_rational, parse_rational, ratio_to_f64, rational_from_f64, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Normalization {
    #[serde(rename = "RAW")]
    Raw,
    /// Rescaled so that the second moment is one.
    #[serde(rename = "SIGMA2_UNIT")]
    Sigma2Unit,
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Normalization::Raw => "RAW",
            Normalization::Sigma2Unit => "SIGMA2_UNIT",
        })
    }
}

impl FromStr for Normalization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "RAW" => Ok(Normalization::Raw),
            "SIGMA2_UNIT" | "SIGMA2" => Ok(Normalization::Sigma2Unit),
            other => Err(Error::Parse(format!("unknown normalization '{other}'"))),
        }
    }
}

/// Couplings `J_1..J_N` of the bath spins to the central spin.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingSet {
    values: Vec<f64>,
    exact: Option<Vec<BigRational>>,
    x: Option<f64>,
    normalization: Normalization,
}

impl CouplingSet {
    pub fn from_f64(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("coupling set must be nonempty".into()));
        }
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidParameter(format!("coupling {bad} is not strictly positive")));
        }
        Ok(CouplingSet { values, exact: None, x: None, normalization: Normalization::Raw })
    }

    pub fn from_rationals(values: Vec<BigRational>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("coupling set must be nonempty".into()));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_positive()) {
            return Err(Error::InvalidParameter(format!("coupling {bad} is not strictly positive")));
        }
        Ok(CouplingSet {
            values: values.iter().map(ratio_to_f64).collect(),
            exact: Some(values),
            x: None,
            normalization: Normalization::Raw,
        })
    }

    /// Convenience for integer test systems such as `{1, 2, 4}`.
    pub fn from_integers(values: &[i64]) -> Result<Self> {
        Self::from_rationals(values.iter().map(|&v| BigRational::from_integer(v.into())).collect())
    }

    /// `J_k = J exp(-k x / N)`.
    pub fn exponential(n: usize, x: f64, normalization: Normalization) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("N must be at least 1".into()));
        }
        if !(x >= 0.0 && x.is_finite()) {
            return Err(Error::InvalidParameter(format!("spread x = {x} must be finite and nonnegative")));
        }
        let nf = n as f64;
        let prefactor = match normalization {
            Normalization::Raw => 1.0,
            Normalization::Sigma2Unit if x == 0.0 => 1.0 / nf.sqrt(),
            Normalization::Sigma2Unit => ((2.0 * x / nf).exp_m1() / -(-2.0 * x).exp_m1()).sqrt(),
        };
        let values = (1..=n).map(|k| prefactor * (-(k as f64) * x / nf).exp()).collect();
        Ok(CouplingSet { values, exact: None, x: Some(x), normalization })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn exact(&self) -> Option<&[BigRational]> {
        self.exact.as_deref()
    }

    pub fn x(&self) -> Option<f64> {
        self.x
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    /// Exact rationals: the stored ones, or the binary values of the doubles.
    pub fn rationals(&self) -> Vec<BigRational> {
        match &self.exact {
            Some(v) => v.clone(),
            None => self.values.iter().map(|&v| rational_from_f64(v)).collect(),
        }
    }

    pub fn values_as<T: Scalar>(&self) -> Vec<T> {
        match &self.exact {
            Some(v) => v.iter().map(T::from_ratio).collect(),
            None => self.values.iter().map(|&v| T::from_f64(v)).collect(),
        }
    }

    pub fn moments(&self, m_max: usize) -> Moments<f64> {
        Moments::from_values(&self.values, m_max)
    }

    pub fn moments_as<T: Scalar>(&self, m_max: usize) -> Moments<T> {
        Moments::from_values(&self.values_as::<T>(), m_max)
    }

    /// Exact moments when the set carries rationals.
    pub fn exact_moments(&self, m_max: usize) -> Option<Moments<BigRational>> {
        self.exact.as_ref().map(|v| Moments::from_values(v, m_max))
    }

    pub fn sigma(&self, m: u32) -> f64 {
        self.values.iter().map(|&j| f64::powi(j, m as i32)).sum()
    }

    pub fn epsilon_table<T: Scalar>(&self) -> Result<EpsilonTable<T>> {
        self.check_distinct()?;
        Ok(EpsilonTable::new(&self.values_as::<T>()))
    }

    fn check_distinct(&self) -> Result<()> {
        let n = self.n();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| self.values[a].total_cmp(&self.values[b]));
        for w in order.windows(2) {
            let same = match &self.exact {
                Some(e) => e[w[0]] == e[w[1]],
                None => self.values[w[0]] == self.values[w[1]],
            };
            if same {
                let (a, b) = (w[0].min(w[1]), w[0].max(w[1]));
                return Err(Error::DegenerateCouplings(a + 1, b + 1));
            }
        }
        Ok(())
    }

    /// Plain-text form: a header line followed by one coupling per line.
    pub fn to_text(&self) -> String {
        let x = self.x.map_or_else(|| "none".to_string(), |x| format!("{x:?}"));
        let mut s = format!("# N={} x={} norm={}\n", self.n(), x, self.normalization);
        match &self.exact {
            Some(e) => e.iter().for_each(|q| s.push_str(&format!("{}\n", format_rational(q)))),
            None => self.values.iter().for_each(|v| s.push_str(&format!("{v:?}\n"))),
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut x = None;
        let mut norm = Normalization::Raw;
        let mut declared_n = None;
        let mut fields: Vec<&str> = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if let Some(header) = line.strip_prefix('#') {
                for tok in header.split_whitespace() {
                    match tok.split_once('=') {
                        Some(("N", v)) => {
                            declared_n = Some(v.parse::<usize>().map_err(|e| Error::Parse(format!("N: {e}")))?)
                        }
                        Some(("x", "none")) => x = None,
                        Some(("x", v)) => x = Some(v.parse::<f64>().map_err(|e| Error::Parse(format!("x: {e}")))?),
                        Some(("norm", v)) => norm = v.parse()?,
                        _ => {}
                    }
                }
            } else if !line.is_empty() {
                fields.push(line);
            }
        }
        let all_rational = fields.iter().all(|f| !f.contains(['.', 'e', 'E']));
        let mut set = if all_rational {
            let q: Option<Vec<BigRational>> = fields.iter().map(|f| parse_rational(f)).collect();
            Self::from_rationals(q.ok_or_else(|| Error::Parse("bad rational coupling".into()))?)?
        } else {
            let v: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
            Self::from_f64(v.map_err(|e| Error::Parse(format!("bad coupling: {e}")))?)?
        };
        if let Some(n) = declared_n {
            if n != set.n() {
                return Err(Error::Parse(format!("header declares N={n} but {} couplings follow", set.n())));
            }
        }
        set.x = x;
        set.normalization = norm;
        Ok(set)
    }
}

/// Power sums `Sigma_m = sum_k J_k^m` for `m = 1..=m_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct Moments<T> {
    n: usize,
    sigma: Vec<T>,
}

impl<T: Scalar> Moments<T> {
    pub fn from_values(values: &[T], m_max: usize) -> Self {
        let mut sigma = vec![T::zero(); m_max];
        for j in values {
            let mut p = T::one();
            for s in sigma.iter_mut() {
                p = p * j.clone();
                *s = s.clone() + p.clone();
            }
        }
        Moments { n: values.len(), sigma }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m_max(&self) -> usize {
        self.sigma.len()
    }

    /// `Sigma_m`; panics when `m` is zero or beyond `m_max`.
    pub fn sigma(&self, m: usize) -> &T {
        &self.sigma[m - 1]
    }
}

/// Limit of `Sigma_m / (J^m N)` for exponential couplings as `N` grows at fixed `x`.
pub fn moments_infinite(x: f64, m: u32) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::InvalidParameter(format!("x = {x} must be positive")));
    }
    let mx = m as f64 * x;
    Ok(-(-mx).exp_m1() / mx)
}

/// Site energies `eps_0 = 0`, `eps_k = -1/J_k`, and the derived shifted couplings.
#[derive(Clone, Debug)]
pub struct EpsilonTable<T> {
    eps: Vec<T>,
    rowsum: Vec<T>,
    rowsq: Vec<T>,
}

impl<T: Scalar> EpsilonTable<T> {
    fn new(j: &[T]) -> Self {
        let n = j.len();
        let mut eps = Vec::with_capacity(n + 1);
        eps.push(T::zero());
        eps.extend(j.iter().map(|v| -(T::one() / v.clone())));
        let mut rowsum = vec![T::zero(); n + 1];
        let mut rowsq = vec![T::zero(); n + 1];
        for l in 0..=n {
            let mut s = T::zero();
            let mut q = T::zero();
            for k in 0..=n {
                if k != l {
                    let v = T::one() / (eps[l].clone() - eps[k].clone());
                    s = s + v.clone();
                    q = q + v.clone() * v;
                }
            }
            rowsum[l] = s;
            rowsq[l] = q;
        }
        EpsilonTable { eps, rowsum, rowsq }
    }

    /// Number of bath spins.
    pub fn n(&self) -> usize {
        self.eps.len() - 1
    }

    pub fn eps(&self, l: usize) -> &T {
        &self.eps[l]
    }

    /// `J_j^{(l)} = 1/(eps_l - eps_j)`, zero on the diagonal.
    pub fn jshift(&self, l: usize, j: usize) -> T {
        if l == j {
            T::zero()
        } else {
            T::one() / (self.eps[l].clone() - self.eps[j].clone())
        }
    }

    /// `S^{(l)}`.
    pub fn rowsum(&self, l: usize) -> &T {
        &self.rowsum[l]
    }

    /// `Q^{(l)}`.
    pub fn rowsq(&self, l: usize) -> &T {
        &self.rowsq[l]
    }
}

/// Magnetic field on the central spin, kept exactly alongside its double value.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldStrength {
    value: f64,
    exact: BigRational,
}

impl FieldStrength {
    pub fn zero() -> Self {
        Self::from_f64(0.0).expect("zero is finite")
    }

    pub fn from_f64(h: f64) -> Result<Self> {
        if !h.is_finite() {
            return Err(Error::InvalidParameter(format!("field h = {h} must be finite")));
        }
        Ok(FieldStrength { value: h, exact: rational_from_f64(h) })
    }

    pub fn rational(h: BigRational) -> Self {
        FieldStrength { value: ratio_to_f64(&h), exact: h }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn exact(&self) -> &BigRational {
        &self.exact
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0.0
    }

    pub fn as_scalar<T: Scalar>(&self) -> T {
        T::from_ratio(&self.exact)
    }
}

impl From<f64> for FieldStrength {
    fn from(h: f64) -> Self {
        FieldStrength::from_f64(h).expect("finite field")
    }
}
