//! Exact edge weights: nonnegative rationals plus an infinity sentinel.

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use std::fmt;
use std::ops::{Add, Mul};
use std::str::FromStr;

pub type Rat = Ratio<i128>;

pub fn rat(n: i128) -> Rat {
    Rat::from_integer(n)
}

pub fn fmt_rat(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_rat(s: &str) -> Option<Rat> {
    let r = if let Some((n, d)) = s.split_once('/') {
        let n: i128 = n.trim().parse().ok()?;
        let d: i128 = d.trim().parse().ok()?;
        if d == 0 {
            return None;
        }
        Rat::new(n, d)
    } else {
        rat(s.trim().parse().ok()?)
    };
    Some(r)
}

/// Edge weight. `Infinite` orders above every finite value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Weight {
    Finite(Rat),
    Infinite,
}

impl Weight {
    pub fn one() -> Self {
        Weight::Finite(rat(1))
    }
    pub fn zero() -> Self {
        Weight::Finite(rat(0))
    }
    pub fn int(n: i128) -> Self {
        Weight::Finite(rat(n))
    }
    pub fn is_infinite(&self) -> bool {
        matches!(self, Weight::Infinite)
    }
    pub fn finite(&self) -> Option<Rat> {
        match self {
            Weight::Finite(r) => Some(*r),
            Weight::Infinite => None,
        }
    }
    pub fn is_zero(&self) -> bool {
        matches!(self, Weight::Finite(r) if r.is_zero())
    }
    pub fn is_negative(&self) -> bool {
        matches!(self, Weight::Finite(r) if r.is_negative())
    }
    pub fn scale(self, k: u128) -> Self {
        match self {
            Weight::Finite(r) => Weight::Finite(r * rat(k as i128)),
            Weight::Infinite => Weight::Infinite,
        }
    }
}

impl Add for Weight {
    type Output = Weight;
    fn add(self, o: Weight) -> Weight {
        match (self, o) {
            (Weight::Finite(a), Weight::Finite(b)) => Weight::Finite(a + b),
            _ => Weight::Infinite,
        }
    }
}

impl Mul<Rat> for Weight {
    type Output = Weight;
    fn mul(self, k: Rat) -> Weight {
        match self {
            Weight::Finite(a) => Weight::Finite(a * k),
            Weight::Infinite => Weight::Infinite,
        }
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weight::Finite(r) => write!(f, "{}", fmt_rat(r)),
            Weight::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for Weight {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s == "inf" {
            return Ok(Weight::Infinite);
        }
        parse_rat(s).map(Weight::Finite).ok_or_else(|| format!("bad weight `{s}`"))
    }
}

/// Replace the sentinel by one plus the sum of all finite values, so that no
/// finite cut can afford an infinite edge.
pub fn finite_capacities(ws: &[Weight]) -> (Vec<Rat>, Rat) {
    let total: Rat = ws.iter().filter_map(|w| w.finite()).fold(rat(0), |a, b| a + b);
    let big = total + rat(1);
    (ws.iter().map(|w| w.finite().unwrap_or(big)).collect(), big)
}
