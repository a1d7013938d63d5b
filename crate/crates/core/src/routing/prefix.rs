use std::fmt;
use std::net::Ipv4Addr;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// An IPv4 prefix with zeroed host bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Prefix {
    base: u32,
    len: u8,
}

pub(crate) fn mask(len: u8) -> u32 {
    if len == 0 {
        0
    } else {
        u32::MAX << (32 - u32::from(len))
    }
}

impl Prefix {
    pub fn new(base: Ipv4Addr, len: u8) -> Result<Self, Error> {
        let raw = u32::from(base);
        if len > 32 || raw & !mask(len) != 0 {
            return Err(Error::InvalidPrefix(format!("{base}/{len}")));
        }
        Ok(Prefix { base: raw, len })
    }

    pub fn base(&self) -> Ipv4Addr {
        Ipv4Addr::from(self.base)
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> u8 {
        self.len
    }

    pub fn contains_addr(&self, addr: Ipv4Addr) -> bool {
        u32::from(addr) & mask(self.len) == self.base
    }

    /// True when `other` is equal to or more specific than `self` and lies
    /// inside it.
    pub fn contains(&self, other: &Prefix) -> bool {
        other.len >= self.len && other.base & mask(self.len) == self.base
    }

    /// The lower half of this prefix, one bit longer.
    pub fn lower_half(&self) -> Result<Prefix, Error> {
        if self.len == 32 {
            return Err(Error::NoSubPrefix(*self));
        }
        Ok(Prefix { base: self.base, len: self.len + 1 })
    }

    /// The first address inside the prefix.
    pub fn first_addr(&self) -> Ipv4Addr {
        Ipv4Addr::from(self.base)
    }

    pub fn last_addr(&self) -> Ipv4Addr {
        Ipv4Addr::from(self.base | !mask(self.len))
    }
}

impl fmt::Display for Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", Ipv4Addr::from(self.base), self.len)
    }
}

impl FromStr for Prefix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::InvalidPrefix(s.to_string());
        let (addr, len) = s.trim().split_once('/').ok_or_else(bad)?;
        let addr: Ipv4Addr = addr.parse().map_err(|_| bad())?;
        let len: u8 = len.parse().map_err(|_| bad())?;
        Prefix::new(addr, len).map_err(|_| bad())
    }
}

impl TryFrom<String> for Prefix {
    type Error = Error;

    fn try_from(s: String) -> Result<Self, Error> {
        s.parse()
    }
}

impl From<Prefix> for String {
    fn from(p: Prefix) -> String {
        p.to_string()
    }
}
