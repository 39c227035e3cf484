//! Mazur lower bounds `a^T N^+ a` on persisting correlations.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dense::DenseSystem;
use crate::descriptor::Quantity;
use crate::error::{Error, Result};
use crate::model::{CouplingSet, FieldStrength};
use crate::numeric::linalg::{project, SymEigenSolver};
use crate::numeric::{ratio_to_f64, Ext128, Ext256, Real, Scalar};
use crate::pauli::SymbolicSystem;
use crate::tables::{gaussian_matrix_element_with, gaussian_vector_element_with, ElementEvaluator};

/// Relative eigenvalue cutoff of the pseudo-inverse in double precision.
pub const REL_CUTOFF: f64 = 1e-12;
/// Residuals above this flag a result as ill-conditioned.
pub const RESIDUAL_LIMIT: f64 = 1e-8;
/// Largest Gram matrix re-solved in extended precision after a failed residual check.
pub const EXTENDED_RETRY_DIM: usize = 64;

/// Cutoff scaled to the working precision.
pub fn rel_cutoff<T: Real>() -> f64 {
    REL_CUTOFF * T::epsilon() / f64::EPSILON
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Tables,
    Dense,
    Symbolic,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Tables => "tables",
            Backend::Dense => "dense",
            Backend::Symbolic => "symbolic",
        })
    }
}

impl FromStr for Backend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tables" | "table" => Ok(Backend::Tables),
            "dense" => Ok(Backend::Dense),
            "symbolic" => Ok(Backend::Symbolic),
            _ => Err(Error::Parse(format!("unknown backend '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Flag {
    IllConditioned,
    Approximate,
    ExtendedPrecision,
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Flag::IllConditioned => "ILL_CONDITIONED",
            Flag::Approximate => "APPROXIMATE",
            Flag::ExtendedPrecision => "EXTENDED_PRECISION",
        })
    }
}

/// Working precision for the table backend.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precision {
    Double,
    Ext128,
    Ext256,
}

impl FromStr for Precision {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "double" | "f64" | "53" => Ok(Precision::Double),
            "128" | "ext128" => Ok(Precision::Ext128),
            "256" | "ext256" => Ok(Precision::Ext256),
            _ => Err(Error::Parse(format!("unknown precision '{s}'"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BoundProblem {
    pub target: Quantity,
    pub quantities: Vec<Quantity>,
    pub backend: Backend,
    pub couplings: CouplingSet,
    pub h: FieldStrength,
}

impl BoundProblem {
    pub fn new(target: Quantity, quantities: Vec<Quantity>, couplings: CouplingSet, h: FieldStrength) -> Self {
        BoundProblem { target, quantities, backend: Backend::Tables, couplings, h }
    }

    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }

    fn validate(&self) -> Result<()> {
        if !self.target.is_observable() {
            return Err(Error::InvalidParameter(format!("target must be S0z or Bz, got {}", self.target)));
        }
        if self.quantities.is_empty() {
            return Err(Error::InvalidParameter("empty quantity set".into()));
        }
        for q in &self.quantities {
            if !q.conserved(self.h.is_zero()) {
                return Err(Error::InvalidParameter(format!("{q} is not conserved at h = {}", self.h.value())));
            }
            if let Quantity::Hl(l) | Quantity::HlZ(l) = q {
                if *l > self.couplings.n() {
                    return Err(Error::InvalidParameter(format!("{q}: index beyond N = {}", self.couplings.n())));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundResult {
    pub value: f64,
    pub rank: usize,
    pub residual: f64,
    pub backend: Backend,
    pub flags: Vec<Flag>,
    /// Smallest kept over largest eigenvalue after equilibration.
    pub condition: f64,
}

impl BoundResult {
    pub fn has(&self, f: Flag) -> bool {
        self.flags.contains(&f)
    }
}

/// `a[i] = (C_i|target)`, `N[i][m] = (C_i|C_m)` from the table backend.
pub fn assemble_tables<T: Scalar>(p: &BoundProblem) -> Result<(Vec<T>, Vec<Vec<T>>)> {
    p.validate()?;
    let ev = ElementEvaluator::<T>::new(&p.couplings, &p.h);
    let qs = &p.quantities;
    let a: Vec<T> = qs.iter().map(|&q| ev.element(q, p.target)).collect::<Result<_>>()?;
    let rows: Vec<Vec<T>> = (0..qs.len())
        .into_par_iter()
        .map(|i| (0..qs.len()).map(|m| ev.element(qs[i], qs[m])).collect::<Result<Vec<T>>>())
        .collect::<Result<_>>()?;
    Ok((a, symmetrize(rows)))
}

fn symmetrize<T: Scalar>(mut n: Vec<Vec<T>>) -> Vec<Vec<T>> {
    let d = n.len();
    for i in 0..d {
        for m in i + 1..d {
            let v = n[i][m].clone();
            n[m][i] = v;
        }
    }
    n
}

/// Vector and Gram matrix in double precision from the selected backend.
pub fn assemble(p: &BoundProblem) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    p.validate()?;
    match p.backend {
        Backend::Tables => assemble_tables::<f64>(p),
        Backend::Dense => {
            let mut sys = DenseSystem::new(&p.couplings, &p.h)?;
            let t = sys.build(p.target)?;
            let ops = p.quantities.iter().map(|&q| sys.build(q)).collect::<Result<Vec<_>>>()?;
            let a = ops.iter().map(|o| Ok(o.scalar_product(&t)?.re)).collect::<Result<Vec<f64>>>()?;
            let n = (0..ops.len())
                .map(|i| (0..ops.len()).map(|m| Ok(ops[i].scalar_product(&ops[m])?.re)).collect::<Result<Vec<f64>>>())
                .collect::<Result<Vec<_>>>()?;
            Ok((a, symmetrize(n)))
        }
        Backend::Symbolic => {
            let c = CouplingSet::from_rationals(p.couplings.rationals())?;
            let h = FieldStrength::rational(p.h.exact().clone());
            let mut sys = SymbolicSystem::new(&c, &h)?;
            let t = sys.build(p.target)?;
            let ops = p.quantities.iter().map(|&q| sys.build(q)).collect::<Result<Vec<_>>>()?;
            let sp = |x: &crate::pauli::PauliExpression, y: &crate::pauli::PauliExpression| -> Result<f64> {
                Ok(ratio_to_f64(&x.scalar_product(y)?.re))
            };
            let a = ops.iter().map(|o| sp(o, &t)).collect::<Result<Vec<f64>>>()?;
            let n = (0..ops.len())
                .map(|i| (0..ops.len()).map(|m| sp(&ops[i], &ops[m])).collect::<Result<Vec<f64>>>())
                .collect::<Result<Vec<_>>>()?;
            Ok((a, symmetrize(n)))
        }
    }
}

fn finish<T: SymEigenSolver>(a: &[T], n: &[Vec<T>], backend: Backend, extra: Vec<Flag>) -> BoundResult {
    let pr = project(n, a, rel_cutoff::<T>());
    let mut flags = extra;
    if pr.residual > RESIDUAL_LIMIT {
        flags.push(Flag::IllConditioned);
    }
    BoundResult {
        value: pr.value.to_f64(),
        rank: pr.rank,
        residual: pr.residual,
        backend,
        flags,
        condition: pr.condition,
    }
}

/// Solves with tables in the requested precision.
pub fn solve_bound_with(p: &BoundProblem, precision: Precision) -> Result<BoundResult> {
    if p.backend != Backend::Tables && precision != Precision::Double {
        return Err(Error::InvalidParameter("extended precision needs the table backend".into()));
    }
    Ok(match precision {
        Precision::Double => {
            let (a, n) = assemble(p)?;
            finish(&a, &n, p.backend, Vec::new())
        }
        Precision::Ext128 => {
            let (a, n) = assemble_tables::<Ext128>(p)?;
            finish(&a, &n, p.backend, vec![Flag::ExtendedPrecision])
        }
        Precision::Ext256 => {
            let (a, n) = assemble_tables::<Ext256>(p)?;
            finish(&a, &n, p.backend, vec![Flag::ExtendedPrecision])
        }
    })
}

/// Double precision first; small ill-conditioned table problems are redone in
/// 256-bit arithmetic.
pub fn solve_bound(p: &BoundProblem) -> Result<BoundResult> {
    let r = solve_bound_with(p, Precision::Double)?;
    if r.has(Flag::IllConditioned) && p.backend == Backend::Tables && p.quantities.len() <= EXTENDED_RETRY_DIM {
        return solve_bound_with(p, Precision::Ext256);
    }
    Ok(r)
}

/// `(1/4) S1^2 / (2 S1^2 + 3 (N-1) S2)` from `{I^z, I^z H_0}`.
pub fn simple_bound(c: &CouplingSet) -> f64 {
    let s1 = c.sigma(1);
    let s2 = c.sigma(2);
    0.25 * s1 * s1 / (2.0 * s1 * s1 + 3.0 * (c.n() as f64 - 1.0) * s2)
}

/// Large-`x` form `(1/(6x)) (1-e^-x)^2 / (1-e^-2x)`; tends to 1/12 as `x -> 0`.
pub fn simple_bound_asymptotic(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::InvalidParameter(format!("x must be positive, got {x}")));
    }
    let a = -(-x).exp_m1();
    let b = -(-2.0 * x).exp_m1();
    Ok(a * a / (6.0 * x * b))
}

/// Exact `N -> infinity` value of [`simple_bound`] for exponential couplings.
pub fn simple_bound_limit(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::InvalidParameter(format!("x must be positive, got {x}")));
    }
    let a = -(-x).exp_m1();
    let b = -(-2.0 * x).exp_m1();
    Ok(a * a / (8.0 * a * a + 6.0 * x * b))
}

/// Overhauser-field bound divided by `12 (B^z|B^z)`; always flagged approximate.
pub fn field_field_bound(c: &CouplingSet, quantities: Option<Vec<Quantity>>, backend: Backend) -> Result<BoundResult> {
    let qs = quantities.unwrap_or_else(|| {
        let mut v = vec![Quantity::Iz];
        v.extend((1..=c.n()).map(Quantity::HlZ));
        v
    });
    let p = BoundProblem::new(Quantity::Bz, qs, c.clone(), FieldStrength::zero()).with_backend(backend);
    let mut r = solve_bound(&p)?;
    r.value /= 12.0 * c.sigma(2) / 4.0;
    r.flags.push(Flag::Approximate);
    Ok(r)
}

/// Infinite-bath bound from `{I^z H_0(h), H_0(h)}`, `h` in units of `sqrt(S2)`.
pub fn infinite_field_bound(x: f64, h: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() || !h.is_finite() {
        return Err(Error::InvalidParameter(format!("need x > 0 and finite h, got x={x} h={h}")));
    }
    let h2 = h * h;
    let h4 = h2 * h2;
    // divide through by e^x to stay finite at large x
    let ex = (-x).exp();
    let num = (8.0 * h4 * x + h2 * (6.0 * x - 4.0) + 3.0) + ex * (8.0 * h4 * x + h2 * (6.0 * x + 4.0) - 3.0);
    let den = 2.0 * (16.0 * h4 * x + 8.0 * h2 * (3.0 * x - 2.0) + 9.0 * x + 12.0)
        + 2.0 * ex * (16.0 * h4 * x + 8.0 * h2 * (3.0 * x + 2.0) + 9.0 * x - 12.0);
    Ok(num / den)
}

/// Leading-order Gram problem of `{I^z H_0^{2k-1}, k = 1..m_max}`.
pub fn gaussian_asymptotic_system<T: Scalar>(c: &CouplingSet, m_max: u32) -> Result<(Vec<T>, Vec<Vec<T>>)> {
    if m_max == 0 {
        return Err(Error::InvalidParameter("mMax must be at least 1".into()));
    }
    let mo = c.moments_as::<T>(2);
    let n = T::from_i64(c.n() as i64);
    let (s1, s2) = (mo.sigma(1), mo.sigma(2));
    let a = (1..=m_max).map(|k| gaussian_vector_element_with(k, s1, s2)).collect::<Result<Vec<T>>>()?;
    let mat = (1..=m_max)
        .map(|k| (1..=m_max).map(|kk| gaussian_matrix_element_with(k + kk - 1, &n, s1, s2)).collect::<Result<Vec<T>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok((a, mat))
}

/// Gaussian leading-order bound in the given precision.
pub fn gaussian_asymptotic_bound_with(c: &CouplingSet, m_max: u32, precision: Precision) -> Result<BoundResult> {
    let flags = vec![Flag::ExtendedPrecision];
    Ok(match precision {
        Precision::Double => {
            let (a, n) = gaussian_asymptotic_system::<f64>(c, m_max)?;
            finish(&a, &n, Backend::Tables, Vec::new())
        }
        Precision::Ext128 => {
            let (a, n) = gaussian_asymptotic_system::<Ext128>(c, m_max)?;
            finish(&a, &n, Backend::Tables, flags)
        }
        Precision::Ext256 => {
            let (a, n) = gaussian_asymptotic_system::<Ext256>(c, m_max)?;
            finish(&a, &n, Backend::Tables, flags)
        }
    })
}

/// 256-bit solve of the Gaussian leading-order bound.
pub fn gaussian_asymptotic_bound(c: &CouplingSet, m_max: u32) -> Result<BoundResult> {
    gaussian_asymptotic_bound_with(c, m_max, Precision::Ext256)
}

/// `(1/4) 5 / (42 + 21 N S2 / S1^2)`: the common large-`N` value from `I^z H_0^3` or `I^z I^2 H_0` alone.
pub fn single_quantity_limit(c: &CouplingSet) -> f64 {
    let s1 = c.sigma(1);
    0.25 * 5.0 / (42.0 + 21.0 * c.n() as f64 * c.sigma(2) / (s1 * s1))
}

/// Names accepted by [`named_set`].
pub const NAMED_SETS: &[&str] =
    &["iz-only", "basic3", "plus-h03", "all6-zero-field", "integrability", "h-two", "h-six", "h-seven"];

/// Quantity sets by name; `integrability` depends on `n`.
pub fn named_set(name: &str, n: usize) -> Result<Vec<Quantity>> {
    use Quantity::*;
    let basic3 = vec![Iz, IQz, IzH0Power(1)];
    Ok(match name {
        "iz-only" => vec![Iz],
        "basic3" => basic3,
        "plus-h03" => [basic3, vec![IzH0Power(3)]].concat(),
        "all6-zero-field" => [basic3, vec![IzH0Power(2), IzH0Power(3), IzI2H0]].concat(),
        "integrability" => std::iter::once(Iz).chain((0..=n).map(HlZ)).collect(),
        "h-two" => vec![IzH0Power(1), H0Power(1)],
        "h-six" => vec![H0Power(1), IzH0Power(1), H0Power(2), IzH0Power(2), H0Power(3), IzH0Power(3)],
        "h-seven" => vec![H0Power(1), IzH0Power(1), H0Power(2), IzH0Power(2), H0Power(3), IzH0Power(3), Iz],
        _ => return Err(Error::InvalidParameter(format!("unknown quantity set '{name}'"))),
    })
}

/// One bound as emitted on the command line and in scans.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BoundRecord {
    pub target: String,
    pub quantities: Vec<String>,
    #[serde(rename = "N")]
    pub n: usize,
    pub x: Option<f64>,
    pub h: f64,
    pub backend: Backend,
    pub value: f64,
    pub rank: usize,
    pub residual: f64,
    pub flags: Vec<Flag>,
}

impl BoundRecord {
    pub fn new(p: &BoundProblem, r: &BoundResult) -> Self {
        BoundRecord {
            target: p.target.to_string(),
            quantities: p.quantities.iter().map(ToString::to_string).collect(),
            n: p.couplings.n(),
            x: p.couplings.x(),
            h: p.h.value(),
            backend: r.backend,
            value: r.value,
            rank: r.rank,
            residual: r.residual,
            flags: r.flags.clone(),
        }
    }
}
