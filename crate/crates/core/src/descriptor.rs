//! Symbolic names for the observables and conserved quantities.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// One member of the conserved family, or one of the two observables.
///
/// Field-dependent members (`H0Power`, `IzH0Power`, `Hl`, `HlZ`) are built
/// with the field the surrounding problem carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Quantity {
    S0z,
    Bz,
    Iz,
    /// `I^z` times the sum of all pair products `S_k . S_l`, `k < l`.
    IQz,
    /// `I^z I^2 H_0`, conserved at zero field only.
    IzI2H0,
    H0Power(u32),
    IzH0Power(u32),
    Hl(usize),
    HlZ(usize),
}

impl Quantity {
    /// Folds aliases: `H_0` is `H0Power(1)`, `I^z H_0^0` is `I^z`.
    pub fn canonical(self) -> Self {
        match self {
            Quantity::Hl(0) => Quantity::H0Power(1),
            Quantity::HlZ(0) => Quantity::IzH0Power(1),
            Quantity::IzH0Power(0) => Quantity::Iz,
            q => q,
        }
    }

    pub fn is_observable(self) -> bool {
        matches!(self, Quantity::S0z | Quantity::Bz)
    }

    pub fn is_l_indexed(self) -> bool {
        matches!(self.canonical(), Quantity::Hl(_) | Quantity::HlZ(_))
    }

    /// Whether the operator commutes with `H_0(h)`.
    pub fn conserved(self, h_is_zero: bool) -> bool {
        match self.canonical() {
            Quantity::S0z | Quantity::Bz => false,
            Quantity::IQz | Quantity::IzI2H0 => h_is_zero,
            _ => true,
        }
    }

    /// Power of energy carried by the operator (couplings and field together).
    pub fn energy(self) -> u32 {
        match self.canonical() {
            Quantity::S0z | Quantity::Iz | Quantity::IQz => 0,
            Quantity::Bz | Quantity::IzI2H0 | Quantity::Hl(_) | Quantity::HlZ(_) => 1,
            Quantity::H0Power(p) | Quantity::IzH0Power(p) => p,
        }
    }

    /// Largest power of `h` the operator can carry.
    pub fn field_energy(self) -> u32 {
        match self.canonical() {
            Quantity::H0Power(p) | Quantity::IzH0Power(p) => p,
            Quantity::Hl(_) | Quantity::HlZ(_) => 1,
            _ => 0,
        }
    }

    /// Unweighted bath sums, which bound the power of `N` in a scalar product.
    pub fn unweighted_sums(self) -> u32 {
        match self.canonical() {
            Quantity::S0z | Quantity::Bz | Quantity::H0Power(_) | Quantity::Hl(_) => 0,
            Quantity::Iz | Quantity::IzH0Power(_) | Quantity::HlZ(_) => 1,
            Quantity::IQz | Quantity::IzI2H0 => 3,
        }
    }

    /// Sign change under a pi rotation about x, which maps `h` to `-h`.
    pub fn h_parity(self) -> u32 {
        match self.canonical() {
            Quantity::H0Power(_) | Quantity::Hl(_) => 0,
            _ => 1,
        }
    }

    pub fn name(self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.canonical() {
            Quantity::S0z => f.write_str("S0z"),
            Quantity::Bz => f.write_str("Bz"),
            Quantity::Iz => f.write_str("Iz"),
            Quantity::IQz => f.write_str("IQz"),
            Quantity::IzI2H0 => f.write_str("IzI2H0"),
            Quantity::H0Power(1) => f.write_str("H0"),
            Quantity::H0Power(p) => write!(f, "H0^{p}"),
            Quantity::IzH0Power(1) => f.write_str("IzH0"),
            Quantity::IzH0Power(p) => write!(f, "IzH0^{p}"),
            Quantity::Hl(l) => write!(f, "Hl:{l}"),
            Quantity::HlZ(l) => write!(f, "HlZ:{l}"),
        }
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let bad = || Error::Parse(format!("unknown quantity '{t}'"));
        let power = |p: &str| -> Result<u32> {
            match p.parse::<u32>() {
                Ok(v) if v >= 1 => Ok(v),
                _ => Err(bad()),
            }
        };
        let q = match t.to_ascii_lowercase().as_str() {
            "s0z" => Quantity::S0z,
            "bz" => Quantity::Bz,
            "iz" => Quantity::Iz,
            "iqz" => Quantity::IQz,
            "izi2h0" => Quantity::IzI2H0,
            "h0" => Quantity::H0Power(1),
            "izh0" | "h0z" => Quantity::IzH0Power(1),
            lower => {
                if let Some(p) = lower.strip_prefix("izh0^") {
                    Quantity::IzH0Power(power(p)?)
                } else if let Some(p) = lower.strip_prefix("h0^") {
                    Quantity::H0Power(power(p)?)
                } else if let Some(l) = lower.strip_prefix("hlz:") {
                    Quantity::HlZ(l.parse().map_err(|_| bad())?)
                } else if let Some(l) = lower.strip_prefix("hl:") {
                    Quantity::Hl(l.parse().map_err(|_| bad())?)
                } else {
                    return Err(bad());
                }
            }
        };
        Ok(q.canonical())
    }
}

impl Serialize for Quantity {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Quantity {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses a comma separated list of quantity names.
pub fn parse_list(s: &str) -> Result<Vec<Quantity>> {
    s.split(',').filter(|t| !t.trim().is_empty()).map(str::parse).collect()
}
