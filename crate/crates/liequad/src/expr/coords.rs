use std::fmt;

use thiserror::Error;

/// Index of a coordinate inside its [`CoordinateSystem`].
pub type VarId = usize;

/// What a coordinate means to the geometry that owns the chart.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CoordRole {
    /// Position coordinate `q_i` (1-based index).
    Position(u32),
    /// Momentum coordinate `p_i` (1-based index).
    Momentum(u32),
    /// Distinguished time coordinate `t`.
    Time,
    /// Distinguished contact coordinate `z`.
    Contact,
    /// Coordinate on an auxiliary chart with no phase-space meaning.
    Other,
}

/// An ordered, named coordinate.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Coordinate {
    pub name: String,
    pub role: CoordRole,
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
#[error("duplicate coordinate name `{0}`")]
pub struct DuplicateCoordinate(pub String);

/// Ordered list of named coordinates; expressions refer to coordinates by
/// their index in this list.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CoordinateSystem {
    coords: Vec<Coordinate>,
}

impl CoordinateSystem {
    pub fn new(coords: Vec<Coordinate>) -> Result<Self, DuplicateCoordinate> {
        for (i, c) in coords.iter().enumerate() {
            if coords[..i].iter().any(|d| d.name == c.name) {
                return Err(DuplicateCoordinate(c.name.clone()));
            }
        }
        Ok(Self { coords })
    }

    /// Chart with the given names and no assigned roles.
    pub fn auxiliary<S: AsRef<str>>(names: &[S]) -> Result<Self, DuplicateCoordinate> {
        Self::new(
            names
                .iter()
                .map(|n| Coordinate { name: n.as_ref().to_string(), role: CoordRole::Other })
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Coordinate] {
        &self.coords
    }

    pub fn name(&self, id: VarId) -> &str {
        &self.coords[id].name
    }

    pub fn role(&self, id: VarId) -> CoordRole {
        self.coords[id].role
    }

    pub fn index_of(&self, name: &str) -> Option<VarId> {
        self.coords.iter().position(|c| c.name == name)
    }

    /// Index of the coordinate with the given role, if present.
    pub fn index_of_role(&self, role: CoordRole) -> Option<VarId> {
        self.coords.iter().position(|c| c.role == role)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.coords.iter().map(|c| c.name.as_str())
    }
}

impl fmt::Display for CoordinateSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", c.name)?;
        }
        write!(f, ")")
    }
}
