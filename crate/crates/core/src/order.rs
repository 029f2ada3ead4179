//! Extended reals and closed extended intervals with the componentwise
//! interval order.
//!
//! The interval order is `[a, b] <= [c, d]` iff `a <= c` and `b <= d`. It is a
//! lattice order: join and meet are the componentwise max and min.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::de::{self, Visitor};
use serde::ser::SerializeTuple;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrderError {
    #[error("NaN is not an extended real")]
    NotANumber,
    #[error("interval lower endpoint {lo} exceeds upper endpoint {hi}")]
    Inverted { lo: ExtReal, hi: ExtReal },
    #[error("cannot parse extended real from {0:?}")]
    Parse(String),
}

/// A real number, or one of the two infinities.
///
/// The finite payload is never NaN, which makes the order total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    NegInf,
    Finite(Finite),
    PosInf,
}

/// A non-NaN, finite `f64`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Finite(f64);

impl Finite {
    pub fn get(self) -> f64 {
        self.0
    }
}

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal::Finite(Finite(0.0));

    /// Maps `f64` infinities onto the matching variants; rejects NaN.
    pub fn new(x: f64) -> Result<Self, OrderError> {
        if x.is_nan() {
            Err(OrderError::NotANumber)
        } else if x == f64::INFINITY {
            Ok(ExtReal::PosInf)
        } else if x == f64::NEG_INFINITY {
            Ok(ExtReal::NegInf)
        } else {
            // -0.0 and 0.0 are the same extended real
            Ok(ExtReal::Finite(Finite(if x == 0.0 { 0.0 } else { x })))
        }
    }

    /// Panics on NaN. For literals and values already known to be numbers.
    pub fn of(x: f64) -> Self {
        Self::new(x).expect("NaN passed to ExtReal::of")
    }

    /// The value as an `f64`, with the infinities mapped to `f64` infinities.
    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::NegInf => f64::NEG_INFINITY,
            ExtReal::Finite(v) => v.0,
            ExtReal::PosInf => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    fn rank(self) -> u8 {
        match self {
            ExtReal::NegInf => 0,
            ExtReal::Finite(_) => 1,
            ExtReal::PosInf => 2,
        }
    }
}

impl Eq for ExtReal {}

impl Ord for ExtReal {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a.0.partial_cmp(&b.0).expect("finite payload is never NaN"),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::NegInf => f.write_str("-inf"),
            ExtReal::PosInf => f.write_str("+inf"),
            // Debug formatting of f64 is the shortest string that round-trips.
            ExtReal::Finite(v) => write!(f, "{:?}", v.0),
        }
    }
}

impl FromStr for ExtReal {
    type Err = OrderError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "-inf" | "-Inf" | "-infinity" => Ok(ExtReal::NegInf),
            "+inf" | "inf" | "+Inf" | "Inf" | "+infinity" | "infinity" => Ok(ExtReal::PosInf),
            t => {
                let v: f64 = t.parse().map_err(|_| OrderError::Parse(s.to_string()))?;
                if v.is_infinite() {
                    // "1e999" and friends are finite literals that overflowed
                    return Err(OrderError::Parse(s.to_string()));
                }
                ExtReal::new(v).map_err(|_| OrderError::Parse(s.to_string()))
            }
        }
    }
}

impl From<Finite> for ExtReal {
    fn from(v: Finite) -> Self {
        ExtReal::Finite(v)
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtReal::NegInf => serializer.serialize_str("-inf"),
            ExtReal::PosInf => serializer.serialize_str("+inf"),
            ExtReal::Finite(v) => serializer.serialize_f64(v.0),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ExtRealVisitor;

        impl Visitor<'_> for ExtRealVisitor {
            type Value = ExtReal;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or one of \"-inf\", \"+inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<ExtReal, E> {
                ExtReal::new(v).map_err(E::custom)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<ExtReal, E> {
                Ok(ExtReal::of(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<ExtReal, E> {
                Ok(ExtReal::of(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<ExtReal, E> {
                match v {
                    "-inf" => Ok(ExtReal::NegInf),
                    "+inf" => Ok(ExtReal::PosInf),
                    other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
                }
            }
        }

        deserializer.deserialize_any(ExtRealVisitor)
    }
}

/// Closed interval `[lo, hi]` over the extended reals, `lo <= hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ExtInterval {
    lo: ExtReal,
    hi: ExtReal,
}

impl std::hash::Hash for ExtReal {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.rank().hash(state);
        if let ExtReal::Finite(v) = self {
            v.0.to_bits().hash(state);
        }
    }
}

impl ExtInterval {
    pub fn new(lo: ExtReal, hi: ExtReal) -> Result<Self, OrderError> {
        if lo > hi {
            return Err(OrderError::Inverted { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    /// Interval from two `f64` endpoints (infinities allowed, NaN rejected).
    pub fn from_f64(lo: f64, hi: f64) -> Result<Self, OrderError> {
        Self::new(ExtReal::new(lo)?, ExtReal::new(hi)?)
    }

    /// The degenerate interval `[x, x]`.
    pub fn point(x: ExtReal) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn lo(&self) -> ExtReal {
        self.lo
    }

    pub fn hi(&self) -> ExtReal {
        self.hi
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    /// Both endpoints finite.
    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(&self, x: ExtReal) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// `self ⊆ other` as sets.
    pub fn is_subset_of(&self, other: &ExtInterval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    /// Componentwise interval order.
    pub fn leq(&self, other: &ExtInterval) -> bool {
        self.lo <= other.lo && self.hi <= other.hi
    }

    /// Least upper bound under [`ExtInterval::leq`].
    pub fn join(&self, other: &ExtInterval) -> ExtInterval {
        ExtInterval { lo: self.lo.max(other.lo), hi: self.hi.max(other.hi) }
    }

    /// Greatest lower bound under [`ExtInterval::leq`].
    pub fn meet(&self, other: &ExtInterval) -> ExtInterval {
        ExtInterval { lo: self.lo.min(other.lo), hi: self.hi.min(other.hi) }
    }

    /// Smallest interval containing both (set hull). Not the order join.
    pub fn hull(&self, other: &ExtInterval) -> ExtInterval {
        ExtInterval { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }

    /// `hi - lo`. Equal infinite endpoints give 0; any other infinite case
    /// gives `+inf` (the lower endpoint can only be `-inf` or the upper `+inf`).
    pub fn width(&self) -> ExtReal {
        match (self.lo, self.hi) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::of(b.0 - a.0),
            (a, b) if a == b => ExtReal::ZERO,
            _ => ExtReal::PosInf,
        }
    }
}

impl fmt::Display for ExtInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

pub fn interval_leq(a: &ExtInterval, b: &ExtInterval) -> bool {
    a.leq(b)
}

pub fn interval_join(a: &ExtInterval, b: &ExtInterval) -> ExtInterval {
    a.join(b)
}

pub fn interval_meet(a: &ExtInterval, b: &ExtInterval) -> ExtInterval {
    a.meet(b)
}

pub fn width(a: &ExtInterval) -> ExtReal {
    a.width()
}

// Intervals go to reports as a two-element array.
impl Serialize for ExtInterval {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut t = serializer.serialize_tuple(2)?;
        t.serialize_element(&self.lo)?;
        t.serialize_element(&self.hi)?;
        t.end()
    }
}

impl<'de> Deserialize<'de> for ExtInterval {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let (lo, hi) = <(ExtReal, ExtReal)>::deserialize(deserializer)?;
        ExtInterval::new(lo, hi).map_err(de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iv(lo: f64, hi: f64) -> ExtInterval {
        ExtInterval::from_f64(lo, hi).unwrap()
    }

    #[test]
    fn leq_examples() {
        assert!(interval_leq(&iv(0.0, 1.0), &iv(0.5, 2.0)));
        assert!(!interval_leq(&iv(0.0, 3.0), &iv(1.0, 2.0)));
        assert!(interval_leq(&iv(f64::NEG_INFINITY, 0.0), &iv(0.0, f64::INFINITY)));
    }

    #[test]
    fn join_meet_examples() {
        assert_eq!(interval_join(&iv(0.0, 1.0), &iv(2.0, 3.0)), iv(2.0, 3.0));
        assert_eq!(interval_join(&iv(0.0, 5.0), &iv(1.0, 2.0)), iv(1.0, 5.0));
        assert_eq!(interval_join(&iv(4.0, 4.0), &iv(4.0, 4.0)), iv(4.0, 4.0));
        assert_eq!(interval_meet(&iv(0.0, 1.0), &iv(2.0, 3.0)), iv(0.0, 1.0));
        assert_eq!(interval_meet(&iv(0.0, 5.0), &iv(1.0, 2.0)), iv(0.0, 2.0));
        let (a, b) = (iv(-1.0, 7.0), iv(2.0, 3.0));
        assert_eq!(interval_meet(&a, &interval_join(&a, &b)), a);
    }

    #[test]
    fn width_examples() {
        assert_eq!(width(&iv(1.0, 1.0)), ExtReal::ZERO);
        assert_eq!(width(&iv(f64::NEG_INFINITY, 5.0)), ExtReal::PosInf);
        assert_eq!(width(&iv(0.0, 2.0)), ExtReal::of(2.0));
        assert_eq!(width(&iv(f64::INFINITY, f64::INFINITY)), ExtReal::ZERO);
        assert_eq!(width(&iv(f64::NEG_INFINITY, f64::INFINITY)), ExtReal::PosInf);
    }

    #[test]
    fn constructor_rejects_bad_input() {
        assert_eq!(ExtReal::new(f64::NAN), Err(OrderError::NotANumber));
        assert!(matches!(ExtInterval::from_f64(2.0, 1.0), Err(OrderError::Inverted { .. })));
        assert!(ExtInterval::from_f64(f64::INFINITY, f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn infinities_bracket_every_finite_value() {
        for x in [-1e308, -1.0, 0.0, 3.5, f64::MAX] {
            assert!(ExtReal::NegInf < ExtReal::of(x));
            assert!(ExtReal::of(x) < ExtReal::PosInf);
        }
        assert_eq!(ExtReal::of(-0.0), ExtReal::of(0.0));
    }

    #[test]
    fn serde_spells_infinities_as_strings() {
        let v = iv(f64::NEG_INFINITY, 2.5);
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"["-inf",2.5]"#);
        let back: ExtInterval = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
        let top: ExtInterval = serde_json::from_str(r#"[1,"+inf"]"#).unwrap();
        assert_eq!(top, iv(1.0, f64::INFINITY));
        assert!(serde_json::from_str::<ExtInterval>(r#"[3, 1]"#).is_err());
    }

    #[test]
    fn text_round_trip() {
        for x in [ExtReal::NegInf, ExtReal::PosInf, ExtReal::of(0.1), ExtReal::of(-2e-300)] {
            assert_eq!(x.to_string().parse::<ExtReal>().unwrap(), x);
        }
        assert!("nan".parse::<ExtReal>().is_err());
        assert!("abc".parse::<ExtReal>().is_err());
    }

    fn ext() -> impl Strategy<Value = ExtReal> {
        prop_oneof![
            1 => Just(ExtReal::NegInf),
            1 => Just(ExtReal::PosInf),
            8 => (-4i32..=4).prop_map(|k| ExtReal::of(k as f64 * 0.5)),
        ]
    }

    fn interval() -> impl Strategy<Value = ExtInterval> {
        (ext(), ext()).prop_map(|(a, b)| ExtInterval::new(a.min(b), a.max(b)).unwrap())
    }

    proptest! {
        #[test]
        fn leq_is_a_partial_order(a in interval(), b in interval(), c in interval()) {
            prop_assert!(a.leq(&a));
            if a.leq(&b) && b.leq(&a) { prop_assert_eq!(a, b); }
            if a.leq(&b) && b.leq(&c) { prop_assert!(a.leq(&c)); }
        }

        #[test]
        fn join_meet_are_lattice_ops(a in interval(), b in interval(), c in interval()) {
            prop_assert_eq!(a.join(&a.meet(&b)), a);
            prop_assert_eq!(a.meet(&a.join(&b)), a);
            prop_assert_eq!(a.join(&b.join(&c)), a.join(&b).join(&c));
            prop_assert_eq!(a.meet(&b.meet(&c)), a.meet(&b).meet(&c));
            prop_assert!(a.leq(&a.join(&b)) && b.leq(&a.join(&b)));
            if a.leq(&c) && b.leq(&c) { prop_assert!(a.join(&b).leq(&c)); }
            if c.leq(&a) && c.leq(&b) { prop_assert!(c.leq(&a.meet(&b))); }
        }

        #[test]
        fn points_embed_the_reals(x in ext(), y in ext()) {
            prop_assert_eq!(ExtInterval::point(x).leq(&ExtInterval::point(y)), x <= y);
        }
    }
}
