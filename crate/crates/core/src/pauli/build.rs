use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::expr::PauliExpression;
use super::string::{Letter, PauliString, MAX_SITES};
use crate::descriptor::Quantity;
use crate::error::{Error, Result};
use crate::model::{CouplingSet, FieldStrength};
use crate::numeric::ComplexRational;

/// Builds exact operators for one coupling set and field, caching powers of `H_0(h)`.
#[derive(Debug)]
pub struct SymbolicSystem {
    sites: usize,
    j: Vec<BigRational>,
    h: BigRational,
    h0_powers: HashMap<u32, PauliExpression>,
}

fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

impl SymbolicSystem {
    pub fn new(c: &CouplingSet, h: &FieldStrength) -> Result<Self> {
        let sites = c.n() + 1;
        if sites > MAX_SITES {
            return Err(Error::ResourceExceeded(format!("{sites} sites exceed the {MAX_SITES}-site string width")));
        }
        Ok(SymbolicSystem { sites, j: c.rationals(), h: h.exact().clone(), h0_powers: HashMap::new() })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn spin(&self, site: usize, letter: Letter) -> PauliExpression {
        PauliExpression::spin(self.sites, site, letter)
    }

    /// `S_k . S_l`.
    pub fn dot(&self, k: usize, l: usize) -> PauliExpression {
        if k == l {
            return PauliExpression::identity(self.sites).scale_real(&rat(3, 4));
        }
        let mut e = PauliExpression::zero(self.sites);
        for letter in Letter::ALL {
            let s = PauliString::from_sites(&[(k, letter), (l, letter)]).expect("distinct sites");
            e = e.add(&PauliExpression::term(self.sites, s, ComplexRational::ratio(1, 4))).expect("same sites");
        }
        e
    }

    fn weighted_sum(&self, items: impl Iterator<Item = (BigRational, PauliExpression)>) -> PauliExpression {
        let mut e = PauliExpression::zero(self.sites);
        for (w, op) in items {
            e = e.add(&op.scale_real(&w)).expect("same sites");
        }
        e
    }

    /// Total spin component `I^letter`.
    pub fn total(&self, letter: Letter) -> PauliExpression {
        self.weighted_sum((0..self.sites).map(|k| (BigRational::one(), self.spin(k, letter))))
    }

    pub fn iz(&self) -> PauliExpression {
        self.total(Letter::Z)
    }

    /// Overhauser field component `B^letter = sum_k J_k S_k^letter`.
    pub fn overhauser(&self, letter: Letter) -> PauliExpression {
        self.weighted_sum(self.j.iter().enumerate().map(|(i, jk)| (jk.clone(), self.spin(i + 1, letter))))
    }

    /// Sum of all pair products `S_k . S_l` with `k < l`.
    pub fn pair_sum(&self) -> PauliExpression {
        let mut e = PauliExpression::zero(self.sites);
        for k in 0..self.sites {
            for l in k + 1..self.sites {
                e = e.add(&self.dot(k, l)).expect("same sites");
            }
        }
        e
    }

    /// `I^2` over all sites.
    pub fn i_squared(&self) -> PauliExpression {
        let n1 = self.sites as i64;
        PauliExpression::identity(self.sites)
            .scale_real(&rat(3 * n1, 4))
            .add(&self.pair_sum().scale_real(&rat(2, 1)))
            .expect("same sites")
    }

    /// Shifted coupling `J_j^{(l)}` with `eps_0 = 0`, `eps_k = -1/J_k`.
    fn jshift(&self, l: usize, j: usize) -> Result<BigRational> {
        let eps = |k: usize| if k == 0 { BigRational::zero() } else { -self.j[k - 1].recip() };
        let d = eps(l) - eps(j);
        if d.is_zero() {
            return Err(Error::DegenerateCouplings(l.min(j), l.max(j)));
        }
        Ok(d.recip())
    }

    /// `H_l(h) = sum_{k != l} J_k^{(l)} S_l . S_k - h S_l^z`.
    pub fn h_l(&self, l: usize) -> Result<PauliExpression> {
        if l >= self.sites {
            return Err(Error::InvalidParameter(format!("index l = {l} exceeds N = {}", self.sites - 1)));
        }
        let mut e = self.spin(l, Letter::Z).scale_real(&(-self.h.clone()));
        for k in 0..self.sites {
            if k == l {
                continue;
            }
            let w = if l == 0 { self.j[k - 1].clone() } else { self.jshift(l, k)? };
            e = e.add(&self.dot(l, k).scale_real(&w))?;
        }
        Ok(e)
    }

    pub fn h0_power(&mut self, p: u32) -> Result<PauliExpression> {
        if p == 0 {
            return Ok(PauliExpression::identity(self.sites));
        }
        if let Some(e) = self.h0_powers.get(&p) {
            return Ok(e.clone());
        }
        let h0 = self.h_l(0)?;
        let e = if p == 1 { h0 } else { self.h0_power(p - 1)?.multiply(&h0)? };
        self.h0_powers.insert(p, e.clone());
        Ok(e)
    }

    /// `eta = sum_l J_l^2 S_0 . S_l`.
    pub fn eta(&self) -> PauliExpression {
        self.weighted_sum(self.j.iter().enumerate().map(|(i, jl)| (jl * jl, self.dot(0, i + 1))))
    }

    /// `B^2 = sum_{k,l >= 1} J_k J_l S_k . S_l`.
    pub fn b_squared(&self) -> PauliExpression {
        let n = self.j.len();
        let mut e = PauliExpression::zero(self.sites);
        for k in 1..=n {
            for l in 1..=n {
                let w = &self.j[k - 1] * &self.j[l - 1];
                e = e.add(&self.dot(k, l).scale_real(&w)).expect("same sites");
            }
        }
        e
    }

    /// `S_0 . B`.
    pub fn s0_dot_b(&self) -> PauliExpression {
        self.weighted_sum(self.j.iter().enumerate().map(|(i, jk)| (jk.clone(), self.dot(0, i + 1))))
    }

    pub fn build(&mut self, q: Quantity) -> Result<PauliExpression> {
        match q.canonical() {
            Quantity::S0z => Ok(self.spin(0, Letter::Z)),
            Quantity::Bz => Ok(self.overhauser(Letter::Z)),
            Quantity::Iz => Ok(self.iz()),
            Quantity::IQz => self.iz().multiply(&self.pair_sum()),
            Quantity::IzI2H0 => {
                let h0 = self.h0_power(1)?;
                self.iz().multiply(&self.i_squared())?.multiply(&h0)
            }
            Quantity::H0Power(p) => self.h0_power(p),
            Quantity::IzH0Power(p) => {
                let hp = self.h0_power(p)?;
                self.iz().multiply(&hp)
            }
            Quantity::Hl(l) => self.h_l(l),
            Quantity::HlZ(l) => {
                let hl = self.h_l(l)?;
                self.iz().multiply(&hl)
            }
        }
    }
}

/// One-shot construction of a single operator.
pub fn build_operator(q: Quantity, c: &CouplingSet, h: &FieldStrength) -> Result<PauliExpression> {
    SymbolicSystem::new(c, h)?.build(q)
}

/// Exact `(A|B)` for two descriptors on one system.
pub fn symbolic_scalar_product(
    a: Quantity,
    b: Quantity,
    c: &CouplingSet,
    h: &FieldStrength,
) -> Result<ComplexRational> {
    let mut sys = SymbolicSystem::new(c, h)?;
    let ea = sys.build(a)?;
    let eb = sys.build(b)?;
    ea.scalar_product(&eb)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: i64, d: i64) -> BigRational {
        rat(p, d)
    }

    #[test]
    fn basic_operators() {
        let c = CouplingSet::from_integers(&[1, 2, 3]).unwrap();
        let h = FieldStrength::zero();
        let s0z = build_operator(Quantity::S0z, &c, &h).unwrap();
        assert_eq!(s0z.len(), 1);
        let iz = build_operator(Quantity::Iz, &c, &h).unwrap();
        assert_eq!(iz.len(), 4);
        assert!(iz.terms().all(|(_, v)| *v == ComplexRational::ratio(1, 2)));
        let one = CouplingSet::from_integers(&[5]).unwrap();
        let h0 = build_operator(Quantity::H0Power(1), &one, &h).unwrap();
        assert_eq!(h0.len(), 3);
        assert!(h0.terms().all(|(_, v)| *v == ComplexRational::ratio(5, 4)));
    }

    #[test]
    fn small_system_trace_values() {
        let c = CouplingSet::from_integers(&[1, 2, 3]).unwrap();
        let h = FieldStrength::rational(q(3, 2));
        let sp = |a, b| symbolic_scalar_product(a, b, &c, &h).unwrap();
        assert_eq!(sp(Quantity::S0z, Quantity::Iz), ComplexRational::ratio(1, 4));
        assert_eq!(sp(Quantity::Iz, Quantity::Iz), ComplexRational::ratio(1, 1));
        assert_eq!(sp(Quantity::S0z, Quantity::H0Power(1)), ComplexRational::real(-q(3, 8)));
    }

    #[test]
    fn contraction_counts() {
        // sum over k, j and alpha of S_k^alpha S_j^alpha traces to 3N/4
        let c = CouplingSet::from_integers(&[1, 1, 1, 1]).unwrap();
        let sys = SymbolicSystem::new(&c, &FieldStrength::zero()).unwrap();
        let n = 4;
        let bath = |l: Letter| {
            let mut e = PauliExpression::zero(n + 1);
            for k in 1..=n {
                e = e.add(&sys.spin(k, l)).unwrap();
            }
            e
        };
        let mut total = ComplexRational::zero();
        for l in Letter::ALL {
            total += &bath(l).multiply(&bath(l)).unwrap().trace();
        }
        assert_eq!(total, ComplexRational::ratio(3 * n as i64, 4));
        let xyz = bath(Letter::X).multiply(&bath(Letter::Y)).unwrap().multiply(&bath(Letter::Z)).unwrap();
        assert_eq!(xyz.trace(), ComplexRational::new(q(0, 1), q(n as i64, 8)));
    }
}
