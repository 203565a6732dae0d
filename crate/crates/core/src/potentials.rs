//! Potential arrays and the parameter restriction families.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::interactions::InteractionStructure;

/// Tolerance used when validating externally supplied tensors.
pub const PATTERN_TOLERANCE: f64 = 1e-12;

/// Equality pattern imposed on every slice `theta_r(a, b)`.
///
/// Free-vector layout is position-major. Within a position: `OneEach` has one
/// scalar, `AbsDif` has `d = 1..=C`, `Dif` has `d = -C..=-1` then `1..=C`
/// (with `d = b - a`), and `Free` lists `(a, b)` row-major skipping `(0, 0)`.
/// `OnePar` has a single scalar shared by all positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    OnePar,
    OneEach,
    AbsDif,
    Dif,
    Free,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::OnePar,
        Family::OneEach,
        Family::AbsDif,
        Family::Dif,
        Family::Free,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::OnePar => "onepar",
            Family::OneEach => "oneeach",
            Family::AbsDif => "absdif",
            Family::Dif => "dif",
            Family::Free => "free",
        }
    }

    /// Free parameters attached to each position (`OnePar` shares one).
    pub fn block_len(self, colors: usize) -> usize {
        match self {
            Family::OnePar | Family::OneEach => 1,
            Family::AbsDif => colors,
            Family::Dif => 2 * colors,
            Family::Free => (colors + 1) * (colors + 1) - 1,
        }
    }

    /// Length of the free-parameter vector.
    pub fn n_params(self, n_positions: usize, colors: usize) -> usize {
        match self {
            Family::OnePar => 1,
            _ => n_positions * self.block_len(colors),
        }
    }

    /// Index of the free parameter that `theta_k(a, b)` equals, or `None`
    /// when the entry is pinned to zero.
    #[inline]
    pub fn class(self, a: usize, b: usize, k: usize, colors: usize) -> Option<usize> {
        match self {
            Family::OnePar => (a != b).then_some(0),
            Family::OneEach => (a != b).then_some(k),
            Family::AbsDif => (a != b).then(|| k * colors + a.abs_diff(b) - 1),
            Family::Dif => (a != b).then(|| {
                let inner = if b < a { colors - (a - b) } else { colors + (b - a) - 1 };
                k * 2 * colors + inner
            }),
            Family::Free => {
                let flat = a * (colors + 1) + b;
                (flat != 0).then(|| k * ((colors + 1) * (colors + 1) - 1) + flat - 1)
            }
        }
    }

    /// Relabeling colors leaves these families unchanged.
    pub fn is_label_symmetric(self) -> bool {
        matches!(self, Family::OnePar | Family::OneEach)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown family {s:?}")))
    }
}

/// Potentials `theta_r(a, b)` of shape `(C+1) x (C+1) x |R|`.
///
/// Always satisfies `theta_r(0, 0) = 0` and the equality pattern of its family.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialArray {
    colors: usize,
    family: Family,
    structure: InteractionStructure,
    values: Vec<f64>,
}

impl PotentialArray {
    /// Builds the array from a free-parameter vector.
    pub fn expand(params: &[f64], family: Family, structure: &InteractionStructure, colors: usize) -> Result<Self> {
        if colors < 1 {
            return Err(Error::TooFewColors);
        }
        let expected = family.n_params(structure.len(), colors);
        if params.len() != expected {
            return Err(Error::ParameterLength {
                expected,
                found: params.len(),
            });
        }
        let side = colors + 1;
        let mut values = vec![0.0; side * side * structure.len()];
        for k in 0..structure.len() {
            for a in 0..side {
                for b in 0..side {
                    if let Some(m) = family.class(a, b, k, colors) {
                        values[(k * side + a) * side + b] = params[m];
                    }
                }
            }
        }
        Ok(Self {
            colors,
            family,
            structure: structure.clone(),
            values,
        })
    }

    pub fn zeros(family: Family, structure: &InteractionStructure, colors: usize) -> Result<Self> {
        Self::expand(&vec![0.0; family.n_params(structure.len(), colors)], family, structure, colors)
    }

    /// Checks a raw tensor (layout `[k][a][b]`) against a family. Entries may
    /// deviate from the pattern by at most [`PATTERN_TOLERANCE`]; the result
    /// follows the pattern exactly.
    pub fn validate(raw: &[f64], family: Family, structure: &InteractionStructure, colors: usize) -> Result<Self> {
        if colors < 1 {
            return Err(Error::TooFewColors);
        }
        let side = colors + 1;
        if raw.len() != side * side * structure.len() {
            return Err(Error::ParameterLength {
                expected: side * side * structure.len(),
                found: raw.len(),
            });
        }
        for k in 0..structure.len() {
            let v = raw[k * side * side];
            if v.abs() > PATTERN_TOLERANCE {
                return Err(Error::Identifiability { position: k, value: v });
            }
        }
        let params = first_occurrences(raw, family, structure.len(), colors);
        for k in 0..structure.len() {
            for a in 0..side {
                for b in 0..side {
                    let x = raw[(k * side + a) * side + b];
                    let target = family.class(a, b, k, colors).map_or(0.0, |m| params[m]);
                    if !x.is_finite() || (x - target).abs() > PATTERN_TOLERANCE {
                        return Err(Error::FamilyPattern {
                            family: family.name(),
                            a,
                            b,
                            position: k,
                        });
                    }
                }
            }
        }
        Self::expand(&params, family, structure, colors)
    }

    /// Free-parameter vector; inverse of [`PotentialArray::expand`].
    pub fn summarize(&self) -> Vec<f64> {
        first_occurrences(&self.values, self.family, self.structure.len(), self.colors)
    }

    /// Re-reads this array under another family, failing when the entries do
    /// not follow that family's pattern.
    pub fn reinterpret(&self, family: Family) -> Result<Self> {
        Self::validate(&self.values, family, &self.structure, self.colors)
    }

    pub fn colors(&self) -> usize {
        self.colors
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn structure(&self) -> &InteractionStructure {
        &self.structure
    }

    /// Raw tensor in `[k][a][b]` layout.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, k: usize) -> f64 {
        let side = self.colors + 1;
        self.values[(k * side + a) * side + b]
    }

    /// Multiplies every potential by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= factor);
        out
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

fn first_occurrences(raw: &[f64], family: Family, n_pos: usize, colors: usize) -> Vec<f64> {
    let side = colors + 1;
    let n = family.n_params(n_pos, colors);
    let mut out = vec![0.0; n];
    let mut seen = vec![false; n];
    for k in 0..n_pos {
        for a in 0..side {
            for b in 0..side {
                if let Some(m) = family.class(a, b, k, colors) {
                    if !seen[m] {
                        seen[m] = true;
                        out[m] = raw[(k * side + a) * side + b];
                    }
                }
            }
        }
    }
    out
}

impl fmt::Display for PotentialArray {
    /// One matrix per position, rows `a` and columns `b`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = self.colors + 1;
        for (k, p) in self.structure.positions().iter().enumerate() {
            writeln!(f, ", , {p}")?;
            writeln!(f)?;
            write!(f, "  ")?;
            for b in 0..side {
                write!(f, " {b:>6}")?;
            }
            writeln!(f)?;
            for a in 0..side {
                write!(f, "{a:>2}")?;
                for b in 0..side {
                    write!(f, " {:>6}", format!("{:.3}", self.get(a, b, k)))?;
                }
                writeln!(f)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interactions::{Norm, Offset};
    use proptest::prelude::*;

    fn nn() -> InteractionStructure {
        InteractionStructure::build(1.0, Norm::L1, &[]).unwrap()
    }

    #[test]
    fn potts_expansion() {
        let t = PotentialArray::expand(&[-1.0], Family::OnePar, &nn(), 3).unwrap();
        for k in 0..2 {
            for a in 0..4 {
                for b in 0..4 {
                    assert_eq!(t.get(a, b, k), if a == b { 0.0 } else { -1.0 });
                }
            }
        }
        assert_eq!(t.summarize(), vec![-1.0]);
    }

    #[test]
    fn oneeach_binary() {
        let t = PotentialArray::expand(&[0.5, -2.0], Family::OneEach, &nn(), 1).unwrap();
        assert_eq!(t.values(), &[0.0, 0.5, 0.5, 0.0, 0.0, -2.0, -2.0, 0.0]);
    }

    #[test]
    fn free_ordering() {
        let r = InteractionStructure::from_positions(vec![Offset::new(1, 0)]).unwrap();
        let t = PotentialArray::validate(&[0.0, 0.3, -0.2, 0.7], Family::Free, &r, 1).unwrap();
        assert_eq!(t.summarize(), vec![0.3, -0.2, 0.7]);
    }

    #[test]
    fn dif_slice_layout() {
        let r = InteractionStructure::from_positions(vec![Offset::new(1, 0)]).unwrap();
        // d = -2, -1, 1, 2
        let t = PotentialArray::expand(&[-2.0, -1.0, 1.0, 2.0], Family::Dif, &r, 2).unwrap();
        assert_eq!(t.get(0, 1, 0), 1.0);
        assert_eq!(t.get(0, 2, 0), 2.0);
        assert_eq!(t.get(1, 0, 0), -1.0);
        assert_eq!(t.get(2, 0, 0), -2.0);
        assert_eq!(t.get(2, 1, 0), -1.0);
    }

    #[test]
    fn zero_vector_gives_zero_array() {
        for fam in Family::ALL {
            let t = PotentialArray::zeros(fam, &nn(), 2).unwrap();
            assert!(t.is_zero());
            assert!(t.summarize().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn validation_errors() {
        let r = nn();
        let good = PotentialArray::expand(&[2.0], Family::OnePar, &r, 1).unwrap();
        assert!(PotentialArray::validate(good.values(), Family::OnePar, &r, 1).is_ok());
        let mut bad = good.values().to_vec();
        bad[0] = 0.1;
        assert!(matches!(
            PotentialArray::validate(&bad, Family::OnePar, &r, 1),
            Err(Error::Identifiability { position: 0, .. })
        ));
        let mut uneven = good.values().to_vec();
        uneven[1] = 1.5;
        assert!(matches!(
            PotentialArray::validate(&uneven, Family::OnePar, &r, 1),
            Err(Error::FamilyPattern { .. })
        ));
        // within tolerance is accepted and snapped to the pattern
        let mut close = good.values().to_vec();
        close[2] += 5e-13;
        assert_eq!(PotentialArray::validate(&close, Family::OnePar, &r, 1).unwrap(), good);
    }

    #[test]
    fn expand_errors() {
        assert!(matches!(
            PotentialArray::expand(&[1.0, 2.0], Family::OnePar, &nn(), 1),
            Err(Error::ParameterLength { expected: 1, found: 2 })
        ));
        assert!(matches!(
            PotentialArray::expand(&[1.0], Family::OnePar, &nn(), 0),
            Err(Error::TooFewColors)
        ));
    }

    #[test]
    fn family_dimensions() {
        assert_eq!(Family::Free.n_params(1, 2), 8);
        assert_eq!(Family::Dif.n_params(3, 2), 12);
        assert_eq!(Family::AbsDif.n_params(3, 2), 6);
        assert_eq!(Family::OneEach.n_params(3, 2), 3);
        assert_eq!(Family::OnePar.n_params(3, 2), 1);
    }

    fn structure_strategy() -> impl Strategy<Value = InteractionStructure> {
        (1usize..6).prop_map(|n| {
            let all = InteractionStructure::build(2.0, Norm::Linf, &[]).unwrap();
            all.subset(&(0..n).collect::<Vec<_>>()).unwrap()
        })
    }

    proptest! {
        #[test]
        fn classes_cover_params(colors in 1usize..5, r in structure_strategy(), fam_i in 0usize..5) {
            let fam = Family::ALL[fam_i];
            let n = fam.n_params(r.len(), colors);
            let mut hit = vec![false; n];
            for k in 0..r.len() {
                for a in 0..=colors {
                    for b in 0..=colors {
                        if let Some(m) = fam.class(a, b, k, colors) {
                            prop_assert!(m < n);
                            hit[m] = true;
                        }
                    }
                }
            }
            prop_assert!(hit.iter().all(|&h| h));
        }

        #[test]
        fn onepar_nests_in_oneeach(phi in -3.0f64..3.0, colors in 1usize..4, r in structure_strategy()) {
            let one = PotentialArray::expand(&[phi], Family::OnePar, &r, colors).unwrap();
            let each = PotentialArray::expand(&vec![phi; r.len()], Family::OneEach, &r, colors).unwrap();
            prop_assert_eq!(one.values(), each.values());
        }

        #[test]
        fn absdif_is_oneeach_for_binary(v in proptest::collection::vec(-3.0f64..3.0, 5)) {
            let r = InteractionStructure::build(2.0, Norm::Linf, &[]).unwrap().subset(&[0, 1, 2, 3, 4]).unwrap();
            let a = PotentialArray::expand(&v, Family::AbsDif, &r, 1).unwrap();
            let e = PotentialArray::expand(&v, Family::OneEach, &r, 1).unwrap();
            prop_assert_eq!(a.values(), e.values());
        }

        #[test]
        fn symmetric_dif_is_absdif(colors in 1usize..4, seed in proptest::collection::vec(-3.0f64..3.0, 12)) {
            let r = InteractionStructure::build(1.0, Norm::L1, &[]).unwrap();
            let mags: Vec<f64> = seed.iter().take(r.len() * colors).copied().collect();
            let mut dif = Vec::new();
            for k in 0..r.len() {
                let block = &mags[k * colors..(k + 1) * colors];
                dif.extend(block.iter().rev());
                dif.extend(block.iter());
            }
            let a = PotentialArray::expand(&mags, Family::AbsDif, &r, colors).unwrap();
            let d = PotentialArray::expand(&dif, Family::Dif, &r, colors).unwrap();
            prop_assert_eq!(a.values(), d.values());
        }
    }
}
