//! Closed forms for scalar products as exact polynomials in `N`, `h` and the
//! moments, recovered from exact traces on small concrete systems.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::descriptor::Quantity;
use crate::error::{Error, Result};
use crate::model::{CouplingSet, FieldStrength};
use crate::numeric::linalg::{bareiss_solve, IncrementalEchelon};
use crate::numeric::{format_rational, ComplexRational};
use crate::pauli::SymbolicSystem;
use crate::poly::{Monomial, Polynomial};

/// Candidate monomials for one scalar product.
#[derive(Clone, Debug, PartialEq)]
pub struct MonomialBasis {
    pub monomials: Vec<Monomial>,
    pub energy_order: u32,
    /// Unweighted bath sums across both sides.
    pub spin_operator_count: u32,
    pub zero_field: bool,
}

impl MonomialBasis {
    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    fn row(&self, couplings: &[BigRational], h: &BigRational) -> Vec<BigRational> {
        let max_m = self.monomials.iter().map(Monomial::max_moment).max().unwrap_or(1).max(1);
        let moments = crate::model::Moments::from_values(couplings, max_m);
        let n = BigRational::from_integer(BigInt::from(couplings.len()));
        self.monomials.iter().map(|m| m.eval(&n, h, &moments)).collect()
    }
}

/// All integer partitions of `r`, as multiplicity vectors `c[m-1]`.
fn partitions(r: u32) -> Vec<Vec<u32>> {
    fn rec(r: u32, max_part: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if r == 0 {
            out.push(cur.clone());
            return;
        }
        for part in (1..=max_part.min(r)).rev() {
            if cur.len() < part as usize {
                cur.resize(part as usize, 0);
            }
            cur[part as usize - 1] += 1;
            rec(r - part, part, cur, out);
            cur[part as usize - 1] -= 1;
        }
    }
    let mut out = Vec::new();
    rec(r, r, &mut Vec::new(), &mut out);
    out
}

/// Dimensional, parity and contraction-count constraints on the monomials of `(lhs|rhs)`.
pub fn generate_basis(lhs: Quantity, rhs: Quantity, zero_field: bool) -> MonomialBasis {
    let energy = lhs.energy() + rhs.energy();
    let field = if zero_field { 0 } else { lhs.field_energy() + rhs.field_energy() };
    let parity = (lhs.h_parity() + rhs.h_parity()) % 2;
    let nu = lhs.unweighted_sums() + rhs.unweighted_sums();
    let mut monomials = Vec::new();
    for b in 0..=field.min(energy) {
        if b % 2 != parity {
            continue;
        }
        for c in partitions(energy - b) {
            let c1 = c.first().copied().unwrap_or(0);
            if c1 > nu {
                continue;
            }
            for a in 0..=(nu - c1) / 2 {
                monomials.push(Monomial::new(a, b, &c));
            }
        }
    }
    monomials.sort();
    MonomialBasis { monomials, energy_order: energy, spin_operator_count: nu, zero_field }
}

/// One evaluated system.
#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    pub couplings: Vec<BigRational>,
    pub h: BigRational,
    pub trace: BigRational,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClosedFormElement {
    pub lhs: Quantity,
    pub rhs: Quantity,
    pub basis: MonomialBasis,
    pub coefficients: Vec<BigRational>,
    pub provenance: Vec<Provenance>,
    /// Held-out systems the closed form was checked on.
    pub verified_on: usize,
}

impl ClosedFormElement {
    pub fn polynomial(&self) -> Polynomial {
        Polynomial::from_terms(self.basis.monomials.iter().cloned().zip(self.coefficients.iter().cloned()))
    }

    /// `LHS RHS : polynomial`.
    pub fn table_line(&self) -> String {
        format!("{} {} : {}", self.lhs, self.rhs, self.polynomial())
    }
}

/// Exact `(lhs|rhs)` on one integer or rational system.
pub fn exact_trace(lhs: Quantity, rhs: Quantity, couplings: &[BigRational], h: &BigRational) -> Result<BigRational> {
    let c = CouplingSet::from_rationals(couplings.to_vec())?;
    let mut sys = SymbolicSystem::new(&c, &FieldStrength::rational(h.clone()))?;
    let a = sys.build(lhs)?;
    let b = sys.build(rhs)?;
    let v: ComplexRational = a.scalar_product(&b)?;
    if !v.is_real() {
        return Err(Error::VerificationFailed(format!("({lhs}|{rhs}) has imaginary part {}", format_rational(&v.im))));
    }
    Ok(v.re)
}

fn ints(v: &[i64]) -> Vec<BigRational> {
    v.iter().map(|&x| BigRational::from_integer(x.into())).collect()
}

/// Largest bath the automatic system sequence reaches.
pub const MAX_SYSTEM_N: usize = 8;

/// Deterministic coupling tuples: a fixed prefix, then multisets of
/// `{1..5}` by increasing size.
pub fn system_sequence() -> Vec<Vec<BigRational>> {
    let mut out: Vec<Vec<i64>> = vec![vec![1], vec![1, 1], vec![1, 2], vec![1, 2, 3], vec![1, 2, 4], vec![2, 3, 5]];
    fn multisets(n: usize, lo: i64, hi: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        let start = cur.last().copied().unwrap_or(lo);
        for v in start..=hi {
            cur.push(v);
            multisets(n, lo, hi, cur, out);
            cur.pop();
        }
    }
    for n in 1..=MAX_SYSTEM_N {
        let mut gen = Vec::new();
        multisets(n, 1, 5, &mut Vec::new(), &mut gen);
        for g in gen {
            if !out.contains(&g) {
                out.push(g);
            }
        }
    }
    out.into_iter().map(|v| ints(&v)).collect()
}

fn field_values(zero_field: bool) -> Vec<BigRational> {
    if zero_field {
        vec![BigRational::zero()]
    } else {
        vec![
            BigRational::zero(),
            BigRational::from_integer(1.into()),
            BigRational::from_integer(2.into()),
            BigRational::new(1.into(), 2.into()),
        ]
    }
}

fn held_out(count: usize, zero_field: bool, seed: u64, n_max: usize) -> Vec<(Vec<BigRational>, BigRational)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let n = 2 + (i % (n_max - 1));
            let c = (0..n)
                .map(|_| BigRational::new(rng.gen_range(1..=9i64).into(), rng.gen_range(1..=7i64).into()))
                .collect();
            let h = if zero_field {
                BigRational::zero()
            } else {
                BigRational::new(rng.gen_range(-9..=9i64).into(), rng.gen_range(1..=5i64).into())
            };
            (c, h)
        })
        .collect()
}

/// Solves on the automatic system sequence and verifies on held-out systems.
pub fn solve_closed_form(lhs: Quantity, rhs: Quantity, basis: &MonomialBasis) -> Result<ClosedFormElement> {
    if lhs.is_l_indexed() || rhs.is_l_indexed() {
        return Err(Error::UnknownElement(lhs.to_string(), rhs.to_string()));
    }
    let mut echelon = IncrementalEchelon::new();
    let mut chosen: Vec<(Vec<BigRational>, BigRational, Vec<BigRational>)> = Vec::new();
    let m = basis.len();
    'outer: for couplings in system_sequence() {
        for h in field_values(basis.zero_field) {
            if echelon.rank() == m {
                break 'outer;
            }
            let row = basis.row(&couplings, &h);
            if echelon.try_add(&row) {
                chosen.push((couplings.clone(), h, row));
            }
        }
    }
    if echelon.rank() < m {
        let null: Vec<String> = echelon
            .null_space(m)
            .iter()
            .map(|v| Polynomial::from_terms(basis.monomials.iter().cloned().zip(v.iter().cloned())).to_string())
            .collect();
        return Err(Error::BasisDegenerate(null.join("; ")));
    }
    let traces: Vec<BigRational> =
        chosen.par_iter().map(|(c, h, _)| exact_trace(lhs, rhs, c, h)).collect::<Result<Vec<_>>>().map_err(
            |e| match e {
                Error::ResourceExceeded(msg) => Error::InsufficientSystems(msg),
                other => other,
            },
        )?;
    let rows: Vec<Vec<BigRational>> = chosen.iter().map(|(_, _, r)| r.clone()).collect();
    let coefficients = if m == 0 {
        Vec::new()
    } else {
        bareiss_solve(&rows, &traces).ok_or_else(|| Error::InsufficientSystems("selected system is singular".into()))?
    };
    let provenance: Vec<Provenance> =
        chosen.into_iter().zip(traces).map(|((couplings, h, _), trace)| Provenance { couplings, h, trace }).collect();
    let element = ClosedFormElement { lhs, rhs, basis: basis.clone(), coefficients, provenance, verified_on: 0 };
    let n_max = element.provenance.iter().map(|p| p.couplings.len()).max().unwrap_or(2).clamp(3, 5);
    verify(element, 2, n_max)
}

fn verify(mut element: ClosedFormElement, count: usize, n_max: usize) -> Result<ClosedFormElement> {
    let poly = element.polynomial();
    let seed = 0x5eed ^ (element.basis.len() as u64) << 8;
    let checks = held_out(count, element.basis.zero_field, seed, n_max);
    let results: Vec<Result<(BigRational, BigRational)>> = checks
        .par_iter()
        .map(|(c, h)| Ok((exact_trace(element.lhs, element.rhs, c, h)?, poly.eval_exact(c, h))))
        .collect();
    for ((c, h), r) in checks.iter().zip(results) {
        let (got, want) = r?;
        if got != want {
            return Err(Error::VerificationFailed(format!(
                "({}|{}) on J={:?} h={}: trace {} but closed form gives {}",
                element.lhs,
                element.rhs,
                c.iter().map(format_rational).collect::<Vec<_>>(),
                format_rational(h),
                format_rational(&got),
                format_rational(&want)
            )));
        }
    }
    element.verified_on = count;
    Ok(element)
}

/// Solves on explicitly supplied systems; the system must be square and regular.
pub fn solve_with_systems(
    lhs: Quantity,
    rhs: Quantity,
    basis: &MonomialBasis,
    systems: &[(Vec<BigRational>, BigRational)],
) -> Result<ClosedFormElement> {
    if systems.len() != basis.len() {
        return Err(Error::InsufficientSystems(format!("{} systems for {} monomials", systems.len(), basis.len())));
    }
    let rows: Vec<Vec<BigRational>> = systems.iter().map(|(c, h)| basis.row(c, h)).collect();
    let traces: Vec<BigRational> = systems.iter().map(|(c, h)| exact_trace(lhs, rhs, c, h)).collect::<Result<_>>()?;
    let coefficients = bareiss_solve(&rows, &traces).ok_or_else(|| {
        let mut e = IncrementalEchelon::new();
        rows.iter().for_each(|r| {
            e.try_add(r);
        });
        let null: Vec<String> = e
            .null_space(basis.len())
            .iter()
            .map(|v| Polynomial::from_terms(basis.monomials.iter().cloned().zip(v.iter().cloned())).to_string())
            .collect();
        Error::BasisDegenerate(null.join("; "))
    })?;
    let provenance = systems
        .iter()
        .zip(traces)
        .map(|((c, h), trace)| Provenance { couplings: c.clone(), h: h.clone(), trace })
        .collect();
    let element = ClosedFormElement { lhs, rhs, basis: basis.clone(), coefficients, provenance, verified_on: 0 };
    verify(element, 2, 4)
}

type CacheKey = (Quantity, Quantity, bool);

fn cache() -> &'static Mutex<HashMap<CacheKey, Polynomial>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Polynomial>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Solved closed form, memoised for the life of the process.
pub fn closed_form(lhs: Quantity, rhs: Quantity, zero_field: bool) -> Result<Polynomial> {
    let (a, b) = if lhs <= rhs { (lhs, rhs) } else { (rhs, lhs) };
    let key = (a.canonical(), b.canonical(), zero_field);
    if let Some(p) = cache().lock().expect("cache lock").get(&key) {
        return Ok(p.clone());
    }
    let basis = generate_basis(key.0, key.1, zero_field);
    let p = solve_closed_form(key.0, key.1, &basis)?.polynomial();
    cache().lock().expect("cache lock").insert(key, p.clone());
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: i64, d: i64) -> BigRational {
        BigRational::new(p.into(), d.into())
    }

    #[test]
    fn partitions_are_complete() {
        assert_eq!(partitions(0).len(), 1);
        assert_eq!(partitions(4).len(), 5);
        assert_eq!(partitions(6).len(), 11);
    }

    #[test]
    fn worked_example_basis() {
        let b = generate_basis(Quantity::Iz, Quantity::IzH0Power(2), true);
        let names: Vec<String> = b.monomials.iter().map(ToString::to_string).collect();
        assert_eq!(names, vec!["N*S2", "S1^2", "S2"]);
        let c = generate_basis(Quantity::S0z, Quantity::Iz, true);
        assert_eq!(c.monomials, vec![Monomial::one()]);
        let d = generate_basis(Quantity::S0z, Quantity::H0Power(1), false);
        assert_eq!(d.monomials, vec![Monomial::new(0, 1, &[])]);
    }

    #[test]
    fn basis_sizes_match_known_forms() {
        assert_eq!(generate_basis(Quantity::IzH0Power(3), Quantity::IzH0Power(3), true).len(), 12);
        assert_eq!(generate_basis(Quantity::IzH0Power(3), Quantity::IzH0Power(3), false).len(), 23);
        assert_eq!(generate_basis(Quantity::IzI2H0, Quantity::IzH0Power(3), true).len(), 11);
    }

    #[test]
    fn solves_small_elements() {
        let b = generate_basis(Quantity::S0z, Quantity::H0Power(1), false);
        let e = solve_closed_form(Quantity::S0z, Quantity::H0Power(1), &b).unwrap();
        assert_eq!(e.coefficients, vec![q(-1, 4)]);
        let b = generate_basis(Quantity::S0z, Quantity::Iz, true);
        let e = solve_closed_form(Quantity::S0z, Quantity::Iz, &b).unwrap();
        assert_eq!(e.coefficients, vec![q(1, 4)]);
        assert_eq!(e.verified_on, 2);
    }

    #[test]
    fn worked_example_systems() {
        let b = generate_basis(Quantity::Iz, Quantity::IzH0Power(2), true);
        let z = BigRational::zero();
        let systems = vec![(ints(&[1]), z.clone()), (ints(&[1, 1]), z.clone()), (ints(&[1, 2]), z)];
        let e = solve_with_systems(Quantity::Iz, Quantity::IzH0Power(2), &b, &systems).unwrap();
        let traces: Vec<BigRational> = e.provenance.iter().map(|p| p.trace.clone()).collect();
        assert_eq!(traces, vec![q(2, 64), q(14, 64), q(33, 64)]);
        assert_eq!(e.polynomial(), "3/64*N*S2 - 3/64*S2 + 2/64*S1^2".parse().unwrap());
    }

    #[test]
    fn over_generated_basis_reports_null_space() {
        let mut b = generate_basis(Quantity::S0z, Quantity::Iz, true);
        // N - 1 and 1 cannot be told apart on one-spin systems alone
        b.monomials.push(Monomial::new(1, 0, &[]));
        let z = BigRational::zero();
        let systems = vec![(ints(&[1]), z.clone()), (ints(&[2]), z)];
        match solve_with_systems(Quantity::S0z, Quantity::Iz, &b, &systems) {
            Err(Error::BasisDegenerate(msg)) => assert!(msg.contains('N'), "{msg}"),
            other => panic!("expected degenerate basis, got {other:?}"),
        }
    }
}
