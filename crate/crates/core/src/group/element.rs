use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Largest coordinate arity supported by the fixed-size element layout.
pub const MAX_COORDS: usize = 6;

/// An element of a built-in group, stored as its normal-form coordinates.
///
/// Elements are `Copy`, hashable and totally ordered by coordinates, which makes
/// them usable as map keys and gives a deterministic iteration order wherever
/// kernels are sorted.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement {
    len: u8,
    coords: [i128; MAX_COORDS],
}

impl GroupElement {
    /// Builds an element from raw coordinates without validating them against a group.
    ///
    /// # Panics
    /// Panics if more than [`MAX_COORDS`] coordinates are supplied.
    pub fn from_coords(coords: &[i128]) -> Self {
        assert!(coords.len() <= MAX_COORDS, "too many coordinates");
        let mut c = [0i128; MAX_COORDS];
        c[..coords.len()].copy_from_slice(coords);
        GroupElement {
            len: coords.len() as u8,
            coords: c,
        }
    }

    pub fn zero(len: usize) -> Self {
        assert!(len <= MAX_COORDS, "too many coordinates");
        GroupElement {
            len: len as u8,
            coords: [0; MAX_COORDS],
        }
    }

    pub fn coords(&self) -> &[i128] {
        &self.coords[..self.len as usize]
    }

    pub(crate) fn coords_mut(&mut self) -> &mut [i128] {
        &mut self.coords[..self.len as usize]
    }

    pub fn arity(&self) -> usize {
        self.len as usize
    }

    pub fn is_zero(&self) -> bool {
        self.coords().iter().all(|&c| c == 0)
    }

    /// Semicolon-joined coordinates, the textual form used in CSV files and on the command line.
    pub fn to_semicolon_string(&self) -> String {
        self.coords()
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(";")
    }

    /// Parses `"a;b;c"` (commas are accepted too).
    pub fn parse(text: &str) -> Option<Self> {
        let parts: Vec<&str> = text
            .split([';', ','])
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .collect();
        if parts.is_empty() || parts.len() > MAX_COORDS {
            return None;
        }
        let mut v = Vec::with_capacity(parts.len());
        for p in parts {
            v.push(p.parse::<i128>().ok()?);
        }
        Some(GroupElement::from_coords(&v))
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Serialize for GroupElement {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.coords().serialize(serializer)
    }
}

/// A coordinate read from any integer width, so that elements also load through
/// deserializers that only buffer 64-bit integers.
struct Coord(i128);

impl<'de> Deserialize<'de> for Coord {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Coord;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an integer coordinate")
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<Coord, E> {
                Ok(Coord(v.into()))
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<Coord, E> {
                Ok(Coord(v.into()))
            }
            fn visit_i128<E: serde::de::Error>(self, v: i128) -> Result<Coord, E> {
                Ok(Coord(v))
            }
            fn visit_u128<E: serde::de::Error>(self, v: u128) -> Result<Coord, E> {
                i128::try_from(v).map(Coord).map_err(|_| E::custom("coordinate out of range"))
            }
        }
        deserializer.deserialize_any(V)
    }
}

impl<'de> Deserialize<'de> for GroupElement {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let v: Vec<i128> = Vec::<Coord>::deserialize(deserializer)?.into_iter().map(|c| c.0).collect();
        if v.len() > MAX_COORDS {
            return Err(serde::de::Error::custom(format!(
                "element has {} coordinates, at most {MAX_COORDS} are supported",
                v.len()
            )));
        }
        Ok(GroupElement::from_coords(&v))
    }
}
