use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Name of the regime indicator when it is treated as a variable.
pub const SIGMA: &str = "sigma";

/// `X ⫫ (Y[, σ]) | (Z[, σ])`, optionally restricted to one regime.
///
/// Components of `Z` are removed from `X` and `Y`: given `Z` they are
/// constants, so the statement is unchanged.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct CiStatement {
    pub x: BTreeSet<String>,
    pub y: BTreeSet<String>,
    pub z: BTreeSet<String>,
    pub sigma_in_y: bool,
    pub sigma_in_z: bool,
    /// `; regime=s`: the statement is about regime `s` alone.
    pub regime: Option<String>,
}

impl CiStatement {
    pub fn new<I, J, K, S>(x: I, y: J, z: K, sigma_in_y: bool, sigma_in_z: bool) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        J: IntoIterator<Item = S>,
        K: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let x: BTreeSet<String> = x.into_iter().map(Into::into).collect();
        let y: BTreeSet<String> = y.into_iter().map(Into::into).collect();
        let z: BTreeSet<String> = z.into_iter().map(Into::into).collect();
        for side in [&x, &y, &z] {
            if side.contains(SIGMA) {
                return Err(Error::InvalidStatement(
                    "`sigma` must be given through the sigma flags".to_string(),
                ));
            }
        }
        if sigma_in_y && sigma_in_z {
            return Err(Error::InvalidStatement("`sigma` appears on both sides".to_string()));
        }
        if let Some(v) = x.intersection(&y).next() {
            return Err(Error::InvalidStatement(format!("`{v}` appears on both sides")));
        }
        let x = x.difference(&z).cloned().collect();
        let y = y.difference(&z).cloned().collect();
        Ok(CiStatement {
            x,
            y,
            z,
            sigma_in_y,
            sigma_in_z,
            regime: None,
        })
    }

    /// Same statement restricted to one regime.
    pub fn in_regime(mut self, regime: impl Into<String>) -> Result<Self> {
        if self.has_sigma() {
            return Err(Error::InvalidStatement(
                "a regime suffix cannot be combined with `sigma`".to_string(),
            ));
        }
        self.regime = Some(regime.into());
        Ok(self)
    }

    pub fn has_sigma(&self) -> bool {
        self.sigma_in_y || self.sigma_in_z
    }

    /// True by triviality alone.
    pub fn is_trivial(&self) -> bool {
        self.x.is_empty() || (self.y.is_empty() && !self.sigma_in_y)
    }

    /// Every variable mentioned, excluding `sigma`.
    pub fn variables(&self) -> BTreeSet<String> {
        self.x.iter().chain(&self.y).chain(&self.z).cloned().collect()
    }

    /// Y side as plain names, with `sigma` as a name when flagged.
    pub fn y_names(&self) -> Vec<String> {
        let mut v: Vec<String> = self.y.iter().cloned().collect();
        if self.sigma_in_y {
            v.push(SIGMA.to_string());
        }
        v
    }

    pub fn z_names(&self) -> Vec<String> {
        let mut v: Vec<String> = self.z.iter().cloned().collect();
        if self.sigma_in_z {
            v.push(SIGMA.to_string());
        }
        v
    }

    pub fn x_names(&self) -> Vec<String> {
        self.x.iter().cloned().collect()
    }

    /// `Y ⫫ X | Z`. Fails when `sigma` would move to the left.
    pub fn swapped(&self) -> Option<Self> {
        if self.sigma_in_y {
            return None;
        }
        Some(CiStatement {
            x: self.y.clone(),
            y: self.x.clone(),
            z: self.z.clone(),
            sigma_in_y: false,
            sigma_in_z: self.sigma_in_z,
            regime: self.regime.clone(),
        })
    }

    /// Picks one orientation of a symmetric pair: `sigma` stays on the
    /// right, otherwise the lexicographically smaller side goes left.
    pub fn oriented(self) -> Self {
        if !self.sigma_in_y && self.y < self.x {
            self.swapped().expect("sigma is not on the right")
        } else {
            self
        }
    }

    /// Builds a statement from plain name sets in which `sigma` may appear.
    /// If `sigma` is in `x` the sides are swapped.
    pub fn from_names(x: &BTreeSet<String>, y: &BTreeSet<String>, z: &BTreeSet<String>) -> Result<Self> {
        let (x, y) = if x.contains(SIGMA) { (y, x) } else { (x, y) };
        let strip = |s: &BTreeSet<String>| s.iter().filter(|v| *v != SIGMA).cloned().collect::<Vec<_>>();
        CiStatement::new(strip(x), strip(y), strip(z), y.contains(SIGMA), z.contains(SIGMA))
    }
}

fn side(f: &mut fmt::Formatter<'_>, names: &BTreeSet<String>, sigma: bool) -> fmt::Result {
    let mut items: Vec<&str> = names.iter().map(String::as_str).collect();
    if sigma {
        items.push(SIGMA);
    }
    if items.is_empty() {
        write!(f, "()")
    } else {
        write!(f, "{}", items.join(","))
    }
}

impl fmt::Display for CiStatement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        side(f, &self.x, false)?;
        write!(f, " _||_ ")?;
        side(f, &self.y, self.sigma_in_y)?;
        if !self.z.is_empty() || self.sigma_in_z {
            write!(f, " | ")?;
            side(f, &self.z, self.sigma_in_z)?;
        }
        if let Some(r) = &self.regime {
            write!(f, " ; regime={r}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conditioning_set_is_removed_from_sides() {
        let s = CiStatement::new(["X"], ["Y"], ["X"], false, false).unwrap();
        assert!(s.x.is_empty());
        assert!(s.is_trivial());
        assert_eq!(s.to_string(), "() _||_ Y | X");
    }

    #[test]
    fn rejects_overlap_and_double_sigma() {
        assert!(CiStatement::new(["X"], ["X"], Vec::<&str>::new(), false, false).is_err());
        assert!(CiStatement::new(["X"], ["Y"], Vec::<&str>::new(), true, true).is_err());
    }

    #[test]
    fn from_names_moves_sigma_off_the_left() {
        let set = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>();
        let s = CiStatement::from_names(&set(&["sigma"]), &set(&["U"]), &set(&[])).unwrap();
        assert_eq!(s.to_string(), "U _||_ sigma");
    }
}
