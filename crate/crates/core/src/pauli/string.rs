use std::cmp::Ordering;
use std::fmt;

/// Maximum number of sites a string can address.
pub const MAX_SITES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    X,
    Y,
    Z,
}

impl Letter {
    pub fn from_char(c: char) -> Option<Letter> {
        match c.to_ascii_uppercase() {
            'X' => Some(Letter::X),
            'Y' => Some(Letter::Y),
            'Z' => Some(Letter::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }

    pub const ALL: [Letter; 3] = [Letter::X, Letter::Y, Letter::Z];
}

/// Tensor product of Pauli matrices in symplectic form:
/// X = (1,0), Y = (1,1), Z = (0,1) per site, identity elsewhere.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct PauliString {
    x: u64,
    z: u64,
}

impl PauliString {
    pub const IDENTITY: PauliString = PauliString { x: 0, z: 0 };

    pub fn single(site: usize, letter: Letter) -> Self {
        assert!(site < MAX_SITES, "site {site} out of range");
        let bit = 1u64 << site;
        match letter {
            Letter::X => PauliString { x: bit, z: 0 },
            Letter::Y => PauliString { x: bit, z: bit },
            Letter::Z => PauliString { x: 0, z: bit },
        }
    }

    pub fn from_sites(sites: &[(usize, Letter)]) -> Option<Self> {
        let mut s = PauliString::IDENTITY;
        for &(site, letter) in sites {
            if site >= MAX_SITES || s.letter(site).is_some() {
                return None;
            }
            let p = PauliString::single(site, letter);
            s.x |= p.x;
            s.z |= p.z;
        }
        Some(s)
    }

    pub fn is_identity(self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn support(self) -> u64 {
        self.x | self.z
    }

    pub fn weight(self) -> u32 {
        self.support().count_ones()
    }

    pub fn letter(self, site: usize) -> Option<Letter> {
        let bit = 1u64 << site;
        match (self.x & bit != 0, self.z & bit != 0) {
            (false, false) => None,
            (true, false) => Some(Letter::X),
            (true, true) => Some(Letter::Y),
            (false, true) => Some(Letter::Z),
        }
    }

    /// Non-identity factors in ascending site order.
    pub fn sites(self) -> impl Iterator<Item = (usize, Letter)> {
        let mut rest = self.support();
        std::iter::from_fn(move || {
            if rest == 0 {
                return None;
            }
            let site = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some((site, self.letter(site).expect("site in support")))
        })
    }

    /// Highest occupied site plus one.
    pub fn extent(self) -> usize {
        64 - self.support().leading_zeros() as usize
    }

    /// `self * other = i^phase * result`.
    pub fn mul(self, other: PauliString) -> (PauliString, u8) {
        let (ax, ay, az) = (self.x & !self.z, self.x & self.z, self.z & !self.x);
        let (bx, by, bz) = (other.x & !other.z, other.x & other.z, other.z & !other.x);
        let pos = (ax & by) | (ay & bz) | (az & bx);
        let neg = (ay & bx) | (az & by) | (ax & bz);
        let phase = (pos.count_ones() as i32 - neg.count_ones() as i32).rem_euclid(4) as u8;
        (PauliString { x: self.x ^ other.x, z: self.z ^ other.z }, phase)
    }

    /// Whether two strings commute: an even number of anticommuting sites.
    pub fn commutes_with(self, other: PauliString) -> bool {
        ((self.x & other.z) ^ (self.z & other.x)).count_ones() % 2 == 0
    }
}

/// Lexicographic order over the `(site, letter)` lists, letters `X < Y < Z`.
impl Ord for PauliString {
    fn cmp(&self, other: &Self) -> Ordering {
        let mut a = self.sites();
        let mut b = other.sites();
        loop {
            match (a.next(), b.next()) {
                (None, None) => return Ordering::Equal,
                (None, Some(_)) => return Ordering::Less,
                (Some(_), None) => return Ordering::Greater,
                (Some(p), Some(q)) => match p.cmp(&q) {
                    Ordering::Equal => continue,
                    o => return o,
                },
            }
        }
    }
}

impl PartialOrd for PauliString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (site, letter) in self.sites() {
            if !first {
                f.write_str(" ")?;
            }
            write!(f, "{site}:{}", letter.as_char())?;
            first = false;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(site: usize, l: Letter) -> PauliString {
        PauliString::single(site, l)
    }

    #[test]
    fn single_site_products() {
        use Letter::*;
        assert_eq!(s(1, X).mul(s(1, Y)), (s(1, Z), 1));
        assert_eq!(s(1, Y).mul(s(1, X)), (s(1, Z), 3));
        assert_eq!(s(1, Y).mul(s(1, Z)), (s(1, X), 1));
        assert_eq!(s(1, Z).mul(s(1, X)), (s(1, Y), 1));
        assert_eq!(s(1, X).mul(s(1, X)), (PauliString::IDENTITY, 0));
    }

    #[test]
    fn canonical_order() {
        use Letter::*;
        let a = PauliString::from_sites(&[(0, X), (2, Y)]).unwrap();
        let b = s(1, Z);
        let c = PauliString::from_sites(&[(0, X)]).unwrap();
        assert!(PauliString::IDENTITY < c);
        assert!(c < a);
        assert!(a < b);
        assert!(s(3, X) < s(3, Y) && s(3, Y) < s(3, Z));
    }

    #[test]
    fn commutation_parity() {
        use Letter::*;
        let xx = PauliString::from_sites(&[(0, X), (1, X)]).unwrap();
        let zz = PauliString::from_sites(&[(0, Z), (1, Z)]).unwrap();
        assert!(xx.commutes_with(zz));
        assert!(!s(0, X).commutes_with(s(0, Z)));
    }
}
