use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_rational::BigRational;
use rayon::prelude::*;

use super::string::{Letter, PauliString, MAX_SITES};
use crate::error::{Error, Result};
use crate::numeric::ComplexRational;

/// Default hard cap on stored terms.
pub const DEFAULT_TERM_CAP: usize = 10_000_000;

const PARALLEL_WORK: usize = 1 << 15;

/// Exact linear combination of Pauli strings on a fixed number of sites.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PauliExpression {
    sites: usize,
    terms: BTreeMap<PauliString, ComplexRational>,
}

impl PauliExpression {
    pub fn zero(sites: usize) -> Self {
        assert!(sites <= MAX_SITES, "at most {MAX_SITES} sites");
        PauliExpression { sites, terms: BTreeMap::new() }
    }

    pub fn identity(sites: usize) -> Self {
        Self::term(sites, PauliString::IDENTITY, ComplexRational::one())
    }

    pub fn term(sites: usize, s: PauliString, c: ComplexRational) -> Self {
        let mut e = Self::zero(sites);
        assert!(s.extent() <= sites, "string {s} exceeds {sites} sites");
        if !c.is_zero() {
            e.terms.insert(s, c);
        }
        e
    }

    /// Spin operator `S_site^letter = sigma / 2`.
    pub fn spin(sites: usize, site: usize, letter: Letter) -> Self {
        Self::term(sites, PauliString::single(site, letter), ComplexRational::ratio(1, 2))
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliString, &ComplexRational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, s: &PauliString) -> ComplexRational {
        self.terms.get(s).cloned().unwrap_or_default()
    }

    fn check_sites(&self, other: &Self) -> Result<()> {
        if self.sites != other.sites {
            return Err(Error::SiteMismatch(self.sites, other.sites));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_sites(other)?;
        let mut out = self.clone();
        out.add_assign(other);
        Ok(out)
    }

    fn add_assign(&mut self, other: &Self) {
        for (s, c) in &other.terms {
            accumulate(&mut self.terms, *s, c.clone());
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&ComplexRational::from_i64(-1)))
    }

    pub fn scale(&self, c: &ComplexRational) -> Self {
        if c.is_zero() {
            return Self::zero(self.sites);
        }
        PauliExpression { sites: self.sites, terms: self.terms.iter().map(|(s, v)| (*s, v * c)).collect() }
    }

    pub fn scale_real(&self, q: &BigRational) -> Self {
        self.scale(&ComplexRational::real(q.clone()))
    }

    pub fn adjoint(&self) -> Self {
        PauliExpression { sites: self.sites, terms: self.terms.iter().map(|(s, v)| (*s, v.conj())).collect() }
    }

    pub fn is_hermitian(&self) -> bool {
        self.terms.values().all(ComplexRational::is_real)
    }

    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.multiply_capped(other, DEFAULT_TERM_CAP)
    }

    /// Exact product; fails once the result would hold more than `cap` terms.
    pub fn multiply_capped(&self, other: &Self, cap: usize) -> Result<Self> {
        self.check_sites(other)?;
        let right: Vec<(PauliString, &ComplexRational)> = other.terms.iter().map(|(s, c)| (*s, c)).collect();
        let left: Vec<(PauliString, &ComplexRational)> = self.terms.iter().map(|(s, c)| (*s, c)).collect();
        let partial = |chunk: &[(PauliString, &ComplexRational)]| -> Result<HashMap<PauliString, ComplexRational>> {
            let mut acc: HashMap<PauliString, ComplexRational> = HashMap::new();
            for (sa, ca) in chunk {
                for (sb, cb) in &right {
                    let (s, phase) = sa.mul(*sb);
                    let c = (*ca * *cb).mul_i_pow(phase);
                    match acc.get_mut(&s) {
                        Some(v) => *v += &c,
                        None => {
                            acc.insert(s, c);
                        }
                    }
                }
                if acc.len() > cap {
                    return Err(too_many(acc.len(), cap));
                }
            }
            Ok(acc)
        };
        let maps: Vec<HashMap<PauliString, ComplexRational>> = if left.len() * right.len() >= PARALLEL_WORK {
            let chunk = left.len().div_ceil(rayon::current_num_threads() * 4).max(1);
            left.par_chunks(chunk).map(partial).collect::<Result<Vec<_>>>()?
        } else {
            vec![partial(&left)?]
        };
        let mut merged: HashMap<PauliString, ComplexRational> = HashMap::new();
        for m in maps {
            if merged.is_empty() {
                merged = m;
                continue;
            }
            for (s, c) in m {
                match merged.get_mut(&s) {
                    Some(v) => *v += &c,
                    None => {
                        merged.insert(s, c);
                    }
                }
            }
        }
        let terms: BTreeMap<_, _> = merged.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        if terms.len() > cap {
            return Err(too_many(terms.len(), cap));
        }
        Ok(PauliExpression { sites: self.sites, terms })
    }

    pub fn power(&self, p: u32) -> Result<Self> {
        let mut acc = Self::identity(self.sites);
        for _ in 0..p {
            acc = acc.multiply(self)?;
        }
        Ok(acc)
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.check_sites(other)?;
        // only anticommuting string pairs contribute, with twice the product
        let mut acc: HashMap<PauliString, ComplexRational> = HashMap::new();
        for (sa, ca) in &self.terms {
            for (sb, cb) in &other.terms {
                if sa.commutes_with(*sb) {
                    continue;
                }
                let (s, phase) = sa.mul(*sb);
                let c = (ca * cb).mul_i_pow(phase);
                let c = c.clone() + c;
                match acc.get_mut(&s) {
                    Some(v) => *v += &c,
                    None => {
                        acc.insert(s, c);
                    }
                }
            }
        }
        let terms = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        Ok(PauliExpression { sites: self.sites, terms })
    }

    /// Normalised trace: the identity coefficient.
    pub fn trace(&self) -> ComplexRational {
        self.coefficient(&PauliString::IDENTITY)
    }

    /// `Tr[a^dagger b] / Tr 1`.
    pub fn scalar_product(&self, other: &Self) -> Result<ComplexRational> {
        self.check_sites(other)?;
        let (small, large, conj_small) =
            if self.len() <= other.len() { (self, other, true) } else { (other, self, false) };
        let mut acc = ComplexRational::zero();
        for (s, c) in &small.terms {
            if let Some(d) = large.terms.get(s) {
                let p = if conj_small { &c.conj() * d } else { &d.conj() * c };
                acc += &p;
            }
        }
        Ok(acc)
    }

    /// One term per line, `<re> <im> site:letter ...`, after a `# sites=<n>` header.
    pub fn to_text(&self) -> String {
        let mut s = format!("# sites={}\n", self.sites);
        for (p, c) in &self.terms {
            if p.is_identity() {
                s.push_str(&format!("{c}\n"));
            } else {
                s.push_str(&format!("{c} {p}\n"));
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut sites = None;
        let mut terms = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(h) = line.strip_prefix('#') {
                if let Some(n) = h.trim().strip_prefix("sites=") {
                    sites = Some(n.trim().parse::<usize>().map_err(|e| Error::Parse(format!("sites: {e}")))?);
                }
                continue;
            }
            let bad = |what: &str| Error::Parse(format!("line {}: {what}", lineno + 1));
            let mut toks = line.split_whitespace();
            let re = toks.next().ok_or_else(|| bad("missing real part"))?;
            let im = toks.next().ok_or_else(|| bad("missing imaginary part"))?;
            let c = ComplexRational::parse(re, im).ok_or_else(|| bad("bad coefficient"))?;
            let mut factors = Vec::new();
            for t in toks {
                let (site, letter) = t.split_once(':').ok_or_else(|| bad("expected site:letter"))?;
                let site: usize = site.parse().map_err(|_| bad("bad site"))?;
                let mut chars = letter.chars();
                let l = chars.next().and_then(Letter::from_char).ok_or_else(|| bad("bad letter"))?;
                if chars.next().is_some() {
                    return Err(bad("bad letter"));
                }
                factors.push((site, l));
            }
            let p = PauliString::from_sites(&factors).ok_or_else(|| bad("repeated or out-of-range site"))?;
            accumulate(&mut terms, p, c);
        }
        let sites = sites.ok_or_else(|| Error::Parse("missing '# sites=' header".into()))?;
        if let Some(p) = terms.keys().find(|p| p.extent() > sites) {
            return Err(Error::Parse(format!("term {p} exceeds {sites} sites")));
        }
        Ok(PauliExpression { sites, terms })
    }
}

fn accumulate(terms: &mut BTreeMap<PauliString, ComplexRational>, s: PauliString, c: ComplexRational) {
    use std::collections::btree_map::Entry;
    match terms.entry(s) {
        Entry::Vacant(v) => {
            if !c.is_zero() {
                v.insert(c);
            }
        }
        Entry::Occupied(mut o) => {
            *o.get_mut() += &c;
            if o.get().is_zero() {
                o.remove();
            }
        }
    }
}

fn too_many(have: usize, cap: usize) -> Error {
    Error::ResourceExceeded(format!("expression reached {have} Pauli terms, cap is {cap}"))
}

impl fmt::Display for PauliExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Letter::*;

    #[test]
    fn pauli_products() {
        let x = PauliExpression::term(2, PauliString::single(1, X), ComplexRational::one());
        let y = PauliExpression::term(2, PauliString::single(1, Y), ComplexRational::one());
        let xy = x.multiply(&y).unwrap();
        assert_eq!(xy, PauliExpression::term(2, PauliString::single(1, Z), ComplexRational::i()));
        assert_eq!(x.multiply(&x).unwrap(), PauliExpression::identity(2));
        assert!(x.trace().is_zero());
    }

    #[test]
    fn spin_product_on_two_sites() {
        let a = PauliExpression::spin(3, 1, X);
        let b = PauliExpression::spin(3, 2, Y);
        let p = a.multiply(&b).unwrap();
        assert_eq!(p.len(), 1);
        let s = PauliString::from_sites(&[(1, X), (2, Y)]).unwrap();
        assert_eq!(p.coefficient(&s), ComplexRational::ratio(1, 4));
    }

    #[test]
    fn site_mismatch_is_an_error() {
        let a = PauliExpression::identity(2);
        let b = PauliExpression::identity(3);
        assert!(matches!(a.multiply(&b), Err(Error::SiteMismatch(2, 3))));
    }

    #[test]
    fn cap_is_enforced() {
        let mut e = PauliExpression::zero(6);
        for site in 0..6 {
            for l in Letter::ALL {
                e = e.add(&PauliExpression::spin(6, site, l)).unwrap();
            }
        }
        let sq = e.multiply(&e).unwrap();
        assert!(matches!(sq.multiply_capped(&e, 100), Err(Error::ResourceExceeded(_))));
    }

    #[test]
    fn text_round_trip() {
        let a = PauliExpression::spin(3, 0, Z)
            .add(&PauliExpression::spin(3, 2, X).scale(&ComplexRational::i()))
            .unwrap()
            .add(&PauliExpression::identity(3))
            .unwrap();
        let t = a.to_text();
        assert_eq!(PauliExpression::from_text(&t).unwrap(), a);
        assert!(PauliExpression::from_text("# sites=1\n1 0 3:X\n").is_err());
    }
}
