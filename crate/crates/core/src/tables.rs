//! Closed-form scalar products evaluated in O(1) (moment polynomials) or O(N)
//! (integrability family), plus the Gaussian leading-order formulas.

use std::collections::HashMap;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use crate::ansatz;
use crate::descriptor::Quantity;
use crate::error::{Error, Result};
use crate::model::{CouplingSet, EpsilonTable, FieldStrength, Moments};
use crate::numeric::Scalar;
use crate::poly::Polynomial;

const DATA: &str = include_str!("../data/elements.txt");

/// Highest moment any table entry uses.
pub const TABLE_MAX_MOMENT: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Section {
    AnyH,
    ZeroField,
    Printed,
    Derived,
}

impl Section {
    pub fn name(self) -> &'static str {
        match self {
            Section::AnyH => "any-h",
            Section::ZeroField => "zero-field",
            Section::Printed => "printed",
            Section::Derived => "derived",
        }
    }
}

#[derive(Clone, Debug)]
pub struct TableEntry {
    pub section: Section,
    pub lhs: Quantity,
    pub rhs: Quantity,
    pub poly: Polynomial,
}

/// `(I^z)^a H_0^p` members share traces whenever the total powers agree.
fn family(q: Quantity) -> Option<(u32, u32)> {
    match q.canonical() {
        Quantity::Iz => Some((1, 0)),
        Quantity::H0Power(p) => Some((0, p)),
        Quantity::IzH0Power(p) => Some((1, p)),
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Key {
    Family(u32, u32),
    Pair(Quantity, Quantity),
}

fn key(a: Quantity, b: Quantity) -> Key {
    let (a, b) = (a.canonical(), b.canonical());
    if let (Some((e1, p1)), Some((e2, p2))) = (family(a), family(b)) {
        return Key::Family(e1 + e2, p1 + p2);
    }
    if a <= b {
        Key::Pair(a, b)
    } else {
        Key::Pair(b, a)
    }
}

#[derive(Debug)]
pub struct ElementTable {
    pub version: u32,
    entries: Vec<TableEntry>,
    aliases: Vec<((Quantity, Quantity), (Quantity, Quantity))>,
    index: HashMap<(Section, Key), usize>,
}

impl ElementTable {
    pub fn parse(text: &str) -> Result<Self> {
        let mut version = None;
        let mut section = None;
        let mut entries = Vec::new();
        let mut aliases = Vec::new();
        let mut alias_mode = false;
        let pair = |s: &str, line: usize| -> Result<(Quantity, Quantity)> {
            let parts: Vec<&str> = s.split_whitespace().collect();
            if parts.len() != 2 {
                return Err(Error::Parse(format!("line {line}: expected two quantities in '{s}'")));
            }
            Ok((parts[0].parse()?, parts[1].parse()?))
        };
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = i + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(v) = line.strip_prefix("version ") {
                version = Some(v.trim().parse().map_err(|_| Error::Parse(format!("line {lineno}: bad version")))?);
                continue;
            }
            if line.starts_with('[') {
                alias_mode = false;
                section = match line {
                    "[any-h]" => Some(Section::AnyH),
                    "[zero-field]" => Some(Section::ZeroField),
                    "[printed]" => Some(Section::Printed),
                    "[derived]" => Some(Section::Derived),
                    "[alias]" => {
                        alias_mode = true;
                        None
                    }
                    _ => return Err(Error::Parse(format!("line {lineno}: unknown section {line}"))),
                };
                continue;
            }
            if alias_mode {
                let (l, r) =
                    line.split_once('=').ok_or_else(|| Error::Parse(format!("line {lineno}: alias needs '='")))?;
                aliases.push((pair(l, lineno)?, pair(r, lineno)?));
                continue;
            }
            let section = section.ok_or_else(|| Error::Parse(format!("line {lineno}: entry outside a section")))?;
            let (l, p) = line.split_once(':').ok_or_else(|| Error::Parse(format!("line {lineno}: entry needs ':'")))?;
            let (lhs, rhs) = pair(l, lineno)?;
            let poly: Polynomial = p.parse()?;
            if section == Section::ZeroField && poly.terms().any(|(m, _)| m.h > 0) {
                return Err(Error::Parse(format!("line {lineno}: zero-field entry carries h")));
            }
            entries.push(TableEntry { section, lhs, rhs, poly });
        }
        let version = version.ok_or_else(|| Error::Parse("missing version line".into()))?;
        let mut index = HashMap::new();
        for (i, e) in entries.iter().enumerate() {
            if index.insert((e.section, key(e.lhs, e.rhs)), i).is_some() && e.section != Section::Printed {
                return Err(Error::Parse(format!("duplicate entry {} {} in [{}]", e.lhs, e.rhs, e.section.name())));
            }
        }
        Ok(ElementTable { version, entries, aliases, index })
    }

    pub fn entries(&self) -> &[TableEntry] {
        &self.entries
    }

    pub fn aliases(&self) -> &[((Quantity, Quantity), (Quantity, Quantity))] {
        &self.aliases
    }

    /// Polynomial for `(lhs|rhs)`, preferring entries valid at any field.
    pub fn lookup(&self, lhs: Quantity, rhs: Quantity, zero_field: bool) -> Option<&TableEntry> {
        let k = key(lhs, rhs);
        let mut sections = vec![Section::AnyH, Section::Derived];
        if zero_field {
            sections.push(Section::ZeroField);
        }
        sections.into_iter().find_map(|s| self.index.get(&(s, k.clone()))).map(|&i| &self.entries[i])
    }

    pub fn printed_variant(&self, lhs: Quantity, rhs: Quantity) -> Option<&TableEntry> {
        self.index.get(&(Section::Printed, key(lhs, rhs))).map(|&i| &self.entries[i])
    }

    /// Whether the two sides of an alias reduce to the same trace.
    pub fn alias_is_structural(a: (Quantity, Quantity), b: (Quantity, Quantity)) -> bool {
        key(a.0, a.1) == key(b.0, b.1)
    }
}

/// The shipped table, parsed on first use.
pub fn table() -> &'static ElementTable {
    static TABLE: OnceLock<ElementTable> = OnceLock::new();
    TABLE.get_or_init(|| ElementTable::parse(DATA).expect("shipped element table parses"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum LKind {
    H,
    Z,
}

fn l_form(q: Quantity) -> Option<(LKind, usize)> {
    match q {
        Quantity::Hl(l) => Some((LKind::H, l)),
        Quantity::HlZ(l) => Some((LKind::Z, l)),
        Quantity::H0Power(1) => Some((LKind::H, 0)),
        Quantity::IzH0Power(1) => Some((LKind::Z, 0)),
        _ => None,
    }
}

/// Evaluates scalar products on one coupling set and field.
pub struct ElementEvaluator<T> {
    n: T,
    h: T,
    h_is_zero: bool,
    j: Vec<T>,
    moments: Moments<T>,
    couplings: CouplingSet,
    field: FieldStrength,
    eps: OnceLock<EpsilonTable<T>>,
    allow_derivation: bool,
}

impl<T: Scalar> ElementEvaluator<T> {
    pub fn new(c: &CouplingSet, h: &FieldStrength) -> Self {
        let j = c.values_as::<T>();
        ElementEvaluator {
            n: T::from_i64(c.n() as i64),
            h: h.as_scalar(),
            h_is_zero: h.is_zero(),
            moments: Moments::from_values(&j, TABLE_MAX_MOMENT),
            j,
            couplings: c.clone(),
            field: h.clone(),
            eps: OnceLock::new(),
            allow_derivation: true,
        }
    }

    /// Disables falling back to the trace solver for pairs missing from the table.
    pub fn without_derivation(mut self) -> Self {
        self.allow_derivation = false;
        self
    }

    pub fn moments(&self) -> &Moments<T> {
        &self.moments
    }

    fn eps(&self) -> Result<&EpsilonTable<T>> {
        if let Some(e) = self.eps.get() {
            return Ok(e);
        }
        let e = self.couplings.epsilon_table::<T>()?;
        Ok(self.eps.get_or_init(|| e))
    }

    pub fn eval_poly(&self, p: &Polynomial) -> T {
        p.eval(&self.n, &self.h, &self.moments)
    }

    /// `(lhs|rhs)`.
    pub fn element(&self, lhs: Quantity, rhs: Quantity) -> Result<T> {
        if lhs.is_l_indexed() || rhs.is_l_indexed() {
            return self.l_element(lhs, rhs);
        }
        if matches!(lhs, Quantity::Hl(_) | Quantity::HlZ(_)) || matches!(rhs, Quantity::Hl(_) | Quantity::HlZ(_)) {
            if let Ok(v) = self.l_element(lhs, rhs) {
                return Ok(v);
            }
        }
        if let Some(e) = table().lookup(lhs, rhs, self.h_is_zero) {
            return Ok(self.eval_poly(&e.poly));
        }
        if !self.allow_derivation {
            return Err(Error::UnknownElement(lhs.to_string(), rhs.to_string()));
        }
        let p = ansatz::closed_form(lhs, rhs, self.h_is_zero)
            .map_err(|_| Error::UnknownElement(lhs.to_string(), rhs.to_string()))?;
        if p.max_moment() > TABLE_MAX_MOMENT {
            let m = Moments::from_values(&self.j, p.max_moment());
            return Ok(p.eval(&self.n, &self.h, &m));
        }
        Ok(self.eval_poly(&p))
    }

    fn jl(&self, l: usize) -> T {
        if l == 0 {
            T::zero()
        } else {
            self.j[l - 1].clone()
        }
    }

    fn l_element(&self, lhs: Quantity, rhs: Quantity) -> Result<T> {
        let unknown = || Error::UnknownElement(lhs.to_string(), rhs.to_string());
        let c = |p: i64, q: i64| T::from_ratio(&BigRational::new(p.into(), q.into()));
        let h = self.h.clone();
        let h2 = h.clone() * h.clone();
        let (a, b) = match (l_form(lhs), l_form(rhs)) {
            (Some(a), Some(b)) => (a, b),
            (Some(a), None) => return self.l_mixed(a, rhs).ok_or_else(unknown)?,
            (None, Some(b)) => return self.l_mixed(b, lhs).ok_or_else(unknown)?,
            (None, None) => return Err(unknown()),
        };
        let n = self.n.clone();
        let e = self.eps()?;
        if a.1 > e.n() || b.1 > e.n() {
            return Err(Error::InvalidParameter(format!("index beyond N = {}", e.n())));
        }
        let same = a.1 == b.1;
        Ok(match (a.0, b.0, same) {
            (LKind::H, LKind::H, true) => c(3, 16) * e.rowsq(a.1).clone() + c(1, 4) * h2,
            (LKind::H, LKind::H, false) => {
                let jp = e.jshift(a.1, b.1);
                -(c(3, 16) * jp.clone() * jp)
            }
            (LKind::H, LKind::Z, true) | (LKind::Z, LKind::H, true) => -(c(1, 8) * h * e.rowsum(a.1).clone()),
            (LKind::H, LKind::Z, false) | (LKind::Z, LKind::H, false) => T::zero(),
            (LKind::Z, LKind::Z, true) => {
                let sl = e.rowsum(a.1).clone();
                c(2, 64) * sl.clone() * sl
                    + c(3, 64) * (n.clone() - T::one()) * e.rowsq(a.1).clone()
                    + c(1, 16) * h2 * (n + T::one())
            }
            (LKind::Z, LKind::Z, false) => {
                let jp = e.jshift(a.1, b.1);
                c(1, 16) * jp.clone() * (e.rowsum(b.1).clone() - e.rowsum(a.1).clone())
                    - c(3, 64) * (n - T::from_i64(3)) * jp.clone() * jp
                    + c(1, 8) * h2
            }
        })
    }

    /// l-indexed member against `S0z`, `Bz` or `Iz`.
    fn l_mixed(&self, (kind, l): (LKind, usize), other: Quantity) -> Option<Result<T>> {
        let c = |p: i64, q: i64| T::from_ratio(&BigRational::new(p.into(), q.into()));
        let h = self.h.clone();
        let e = match self.eps() {
            Ok(e) => e,
            Err(err) => return Some(Err(err)),
        };
        if l > e.n() {
            return Some(Err(Error::InvalidParameter(format!("index {l} beyond N = {}", e.n()))));
        }
        let v = match (other.canonical(), kind) {
            (Quantity::S0z, LKind::H) => {
                if l == 0 {
                    -(c(1, 4) * h)
                } else {
                    T::zero()
                }
            }
            (Quantity::S0z, LKind::Z) => {
                if l == 0 {
                    c(1, 16) * self.moments.sigma(1).clone()
                } else {
                    -(c(1, 16) * self.jl(l))
                }
            }
            (Quantity::Iz, LKind::H) => -(c(1, 4) * h),
            (Quantity::Iz, LKind::Z) => c(1, 8) * e.rowsum(l).clone(),
            (Quantity::Bz, LKind::H) => -(c(1, 4) * h * self.jl(l)),
            (Quantity::Bz, LKind::Z) => {
                let mut acc = self.jl(l) * e.rowsum(l).clone();
                for k in 1..=e.n() {
                    if k != l {
                        acc = acc + self.j[k - 1].clone() * e.jshift(l, k);
                    }
                }
                c(1, 16) * acc
            }
            _ => return None,
        };
        Some(Ok(v))
    }

    pub fn couplings(&self) -> &CouplingSet {
        &self.couplings
    }

    pub fn field(&self) -> &FieldStrength {
        &self.field
    }
}

/// `(lhs|rhs)` in double precision.
pub fn element(lhs: Quantity, rhs: Quantity, c: &CouplingSet, h: &FieldStrength) -> Result<f64> {
    ElementEvaluator::<f64>::new(c, h).element(lhs, rhs)
}

/// Covariances of `B^z` and `I^z` in the maximally mixed state.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceEntries<T> {
    /// `(B^z|B^z) = S2/4`.
    pub sigma2: T,
    /// `(B^z|I^z) = S1/4`.
    pub beta2: T,
    /// `N/4`.
    pub alpha2: T,
}

impl<T: Scalar> CovarianceEntries<T> {
    pub fn new(c: &CouplingSet) -> Self {
        let m = c.moments_as::<T>(2);
        let q = T::from_f64(0.25);
        CovarianceEntries {
            sigma2: m.sigma(2).clone() * q.clone(),
            beta2: m.sigma(1).clone() * q.clone(),
            alpha2: T::from_i64(c.n() as i64) * q,
        }
    }
}

/// Largest `m` accepted by the Gaussian formulas; `mMax = 20` needs 39.
pub const MAX_GAUSSIAN_ORDER: u32 = 40;

/// `(2m+1)!!` exactly.
pub fn double_factorial_odd(m: u32) -> Result<BigInt> {
    if m > MAX_GAUSSIAN_ORDER {
        return Err(Error::InvalidParameter(format!("order {m} exceeds {MAX_GAUSSIAN_ORDER}")));
    }
    Ok((1..=m).fold(BigInt::one(), |acc, k| acc * BigInt::from(2 * k + 1)))
}

fn pow2(e: u32) -> BigRational {
    BigRational::from_integer(BigInt::one() << e as usize)
}

/// Leading-order `(I^z H_0^{k} | I^z H_0^{2m-k})` at large `N` and zero field.
pub fn gaussian_matrix_element_with<T: Scalar>(m: u32, n: &T, s1: &T, s2: &T) -> Result<T> {
    let df = BigRational::from_integer(double_factorial_odd(m)?) / pow2(4 * m + 2);
    let lead = n.clone() * s2.powi(m);
    let sub = if m == 0 {
        T::zero()
    } else {
        T::from_ratio(&BigRational::new((2 * m).into(), 3.into())) * s2.powi(m - 1) * s1.clone() * s1.clone()
    };
    Ok(T::from_ratio(&df) * (lead + sub))
}

pub fn gaussian_matrix_element(m: u32, c: &CouplingSet) -> Result<f64> {
    let mo = c.moments(2);
    gaussian_matrix_element_with(m, &(c.n() as f64), mo.sigma(1), mo.sigma(2))
}

/// Leading-order `(S_0^z | I^z H_0^{2m-1})` at zero field.
pub fn gaussian_vector_element_with<T: Scalar>(m: u32, s1: &T, s2: &T) -> Result<T> {
    if m == 0 {
        return Err(Error::InvalidParameter("vector element needs m >= 1".into()));
    }
    let df = BigRational::from_integer(double_factorial_odd(m)?) / (pow2(4 * m) * BigRational::from_integer(3.into()));
    Ok(T::from_ratio(&df) * s2.powi(m - 1) * s1.clone())
}

pub fn gaussian_vector_element(m: u32, c: &CouplingSet) -> Result<f64> {
    let mo = c.moments(2);
    gaussian_vector_element_with(m, mo.sigma(1), mo.sigma(2))
}

/// Exact table value on rational couplings.
pub fn exact_element(lhs: Quantity, rhs: Quantity, c: &CouplingSet, h: &FieldStrength) -> Result<BigRational> {
    let c = if c.exact().is_some() { c.clone() } else { CouplingSet::from_rationals(c.rationals())? };
    let h = FieldStrength::rational(h.exact().clone());
    ElementEvaluator::<BigRational>::new(&c, &h).element(lhs, rhs)
}
