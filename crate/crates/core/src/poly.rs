//! Polynomials in `N`, `h` and the moments `S1, S2, ...` with rational coefficients.
//!
//! Grammar: `term (('+'|'-') term)*`, a term being an optional rational
//! coefficient and `*`-joined factors `N`, `h`, `Sm`, each with an optional `^k`.
//! Example: `3/64*N*S2 - 3/64*S2 + 2/64*S1^2`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::model::Moments;
use crate::numeric::{format_rational, parse_rational, Scalar};

/// `N^n h^h prod_m S_m^{s[m-1]}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Monomial {
    pub n: u32,
    pub h: u32,
    s: Vec<u32>,
}

impl Monomial {
    pub fn new(n: u32, h: u32, sigma_exponents: &[u32]) -> Self {
        let mut s = sigma_exponents.to_vec();
        while s.last() == Some(&0) {
            s.pop();
        }
        Monomial { n, h, s }
    }

    pub fn one() -> Self {
        Monomial::default()
    }

    /// Exponent of `S_m`.
    pub fn sigma(&self, m: usize) -> u32 {
        self.s.get(m - 1).copied().unwrap_or(0)
    }

    pub fn sigma_exponents(&self) -> &[u32] {
        &self.s
    }

    /// Highest moment index present.
    pub fn max_moment(&self) -> usize {
        self.s.len()
    }

    /// Energy dimension: `h` counts one, `S_m` counts `m`.
    pub fn energy(&self) -> u32 {
        self.h + self.s.iter().enumerate().map(|(i, c)| (i as u32 + 1) * c).sum::<u32>()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let len = self.s.len().max(other.s.len());
        let s: Vec<u32> = (0..len).map(|i| self.s.get(i).unwrap_or(&0) + other.s.get(i).unwrap_or(&0)).collect();
        Monomial::new(self.n + other.n, self.h + other.h, &s)
    }

    pub fn eval<T: Scalar>(&self, n: &T, h: &T, moments: &Moments<T>) -> T {
        let mut acc = n.powi(self.n) * h.powi(self.h);
        for (i, &c) in self.s.iter().enumerate() {
            if c > 0 {
                acc = acc * moments.sigma(i + 1).powi(c);
            }
        }
        acc
    }
}

/// Higher powers of `N` first, then of `h`, then moments compared from `S1` up.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        other.n.cmp(&self.n).then(other.h.cmp(&self.h)).then_with(|| {
            let len = self.s.len().max(other.s.len());
            for i in 0..len {
                let a = self.s.get(i).unwrap_or(&0);
                let b = other.s.get(i).unwrap_or(&0);
                match b.cmp(a) {
                    Ordering::Equal => continue,
                    o => return o,
                }
            }
            Ordering::Equal
        })
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        let pw = |name: String, e: u32| if e == 1 { name } else { format!("{name}^{e}") };
        if self.n > 0 {
            parts.push(pw("N".into(), self.n));
        }
        if self.h > 0 {
            parts.push(pw("h".into(), self.h));
        }
        for (i, &c) in self.s.iter().enumerate() {
            if c > 0 {
                parts.push(pw(format!("S{}", i + 1), c));
            }
        }
        if parts.is_empty() {
            f.write_str("1")
        } else {
            f.write_str(&parts.join("*"))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Polynomial {
    terms: BTreeMap<Monomial, BigRational>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial, BigRational)>) -> Self {
        let mut p = Polynomial::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn add_term(&mut self, m: Monomial, c: BigRational) {
        let e = self.terms.entry(m.clone()).or_insert_with(BigRational::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &Monomial) -> BigRational {
        self.terms.get(m).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn max_moment(&self) -> usize {
        self.terms.keys().map(Monomial::max_moment).max().unwrap_or(0)
    }

    pub fn max_n_power(&self) -> u32 {
        self.terms.keys().map(|m| m.n).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let mut p = self.clone();
        for (m, c) in &other.terms {
            p.add_term(m.clone(), c.clone());
        }
        p
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        let mut p = self.clone();
        for (m, c) in &other.terms {
            p.add_term(m.clone(), -c.clone());
        }
        p
    }

    /// Drops every term carrying a power of `h`.
    pub fn at_zero_field(&self) -> Polynomial {
        Polynomial::from_terms(self.terms.iter().filter(|(m, _)| m.h == 0).map(|(m, c)| (m.clone(), c.clone())))
    }

    pub fn eval<T: Scalar>(&self, n: &T, h: &T, moments: &Moments<T>) -> T {
        self.terms.iter().fold(T::zero(), |acc, (m, c)| acc + T::from_ratio(c) * m.eval(n, h, moments))
    }

    /// Evaluates on an exact coupling list.
    pub fn eval_exact(&self, couplings: &[BigRational], h: &BigRational) -> BigRational {
        let moments = Moments::from_values(couplings, self.max_moment().max(1));
        let n = BigRational::from_integer(BigInt::from(couplings.len()));
        self.eval(&n, h, &moments)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if i == 0 {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            let unit = *m == Monomial::one();
            match (a.is_one(), unit) {
                (true, true) => f.write_str("1")?,
                (true, false) => write!(f, "{m}")?,
                (false, true) => f.write_str(&format_rational(&a))?,
                (false, false) => write!(f, "{}*{m}", format_rational(&a))?,
            }
        }
        Ok(())
    }
}

impl FromStr for Polynomial {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let text: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if text.is_empty() {
            return Err(Error::Parse("empty polynomial".into()));
        }
        if text == "0" {
            return Ok(Polynomial::zero());
        }
        // split on top-level signs, keeping them with their term
        let mut pieces: Vec<(bool, String)> = Vec::new();
        let mut cur = String::new();
        let mut neg = false;
        for (i, ch) in text.char_indices() {
            if (ch == '+' || ch == '-') && !(i > 0 && text[..i].ends_with('^')) {
                if i > 0 {
                    pieces.push((neg, std::mem::take(&mut cur)));
                }
                neg = ch == '-';
            } else {
                cur.push(ch);
            }
        }
        pieces.push((neg, cur));
        let mut p = Polynomial::zero();
        for (neg, term) in pieces {
            let (m, c) = parse_term(&term)?;
            p.add_term(m, if neg { -c } else { c });
        }
        Ok(p)
    }
}

fn parse_term(term: &str) -> Result<(Monomial, BigRational)> {
    let bad = || Error::Parse(format!("bad polynomial term '{term}'"));
    if term.is_empty() {
        return Err(bad());
    }
    let mut coef = BigRational::one();
    let mut mono = Monomial::one();
    let factors: Vec<&str> = term.split('*').collect();
    let mut i = 0;
    while i < factors.len() {
        let f = factors[i];
        if f.is_empty() {
            return Err(bad());
        }
        let (base, exp) = match f.split_once('^') {
            Some((b, e)) => (b, e.parse::<u32>().map_err(|_| bad())?),
            None => (f, 1),
        };
        if base == "N" {
            mono = mono.mul(&Monomial::new(exp, 0, &[]));
        } else if base == "h" {
            mono = mono.mul(&Monomial::new(0, exp, &[]));
        } else if let Some(m) = base.strip_prefix('S') {
            let m: usize = m.parse().map_err(|_| bad())?;
            if m == 0 {
                return Err(bad());
            }
            let mut s = vec![0; m];
            s[m - 1] = exp;
            mono = mono.mul(&Monomial::new(0, 0, &s));
        } else {
            let q = parse_rational(base).ok_or_else(bad)?;
            coef *= num_traits::pow(q, exp as usize);
        }
        i += 1;
    }
    Ok((mono, coef))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: i64, d: i64) -> BigRational {
        BigRational::new(p.into(), d.into())
    }

    #[test]
    fn parse_format_round_trip() {
        let p: Polynomial = "3/64*N*S2 - 3/64*S2 + 2/64*S1^2".parse().unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p.coefficient(&Monomial::new(0, 0, &[2])), q(1, 32));
        let again: Polynomial = p.to_string().parse().unwrap();
        assert_eq!(again, p);
        let h: Polynomial = "-h^2 + 1/4".parse().unwrap();
        assert_eq!(h.to_string(), "-h^2 + 1/4");
    }

    #[test]
    fn evaluates_worked_example() {
        let p: Polynomial = "3/64*N*S2 - 3/64*S2 + 2/64*S1^2".parse().unwrap();
        let z = BigRational::zero();
        let ints = |v: &[i64]| v.iter().map(|&x| BigRational::from_integer(x.into())).collect::<Vec<_>>();
        assert_eq!(p.eval_exact(&ints(&[1]), &z), q(2, 64));
        assert_eq!(p.eval_exact(&ints(&[1, 1]), &z), q(14, 64));
        assert_eq!(p.eval_exact(&ints(&[1, 2]), &z), q(33, 64));
    }

    #[test]
    fn rejects_garbage() {
        assert!("3/64*Q".parse::<Polynomial>().is_err());
        assert!("".parse::<Polynomial>().is_err());
        assert!("S0".parse::<Polynomial>().is_err());
        assert!("1 +".parse::<Polynomial>().is_err());
    }

    #[test]
    fn energy_of_monomials() {
        assert_eq!(Monomial::new(1, 2, &[1, 0, 1]).energy(), 6);
    }
}
