//! Interaction structures: ordered, reflection-free sets of relative positions.

use std::fmt;
use std::io::{BufRead, Write};
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use crate::error::{Error, Result};

/// Relative position `(row offset, column offset)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Offset {
    pub row: i32,
    pub col: i32,
}

impl Offset {
    pub const fn new(row: i32, col: i32) -> Self {
        Self { row, col }
    }

    pub fn is_zero(self) -> bool {
        self.row == 0 && self.col == 0
    }

    /// `true` when `other` is this position or its reflection.
    pub fn equivalent(self, other: Offset) -> bool {
        self == other || self == -other
    }
}

impl Neg for Offset {
    type Output = Offset;
    fn neg(self) -> Offset {
        Offset::new(-self.row, -self.col)
    }
}

impl From<(i32, i32)> for Offset {
    fn from((row, col): (i32, i32)) -> Self {
        Offset::new(row, col)
    }
}

impl fmt::Display for Offset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    L2,
    Linf,
}

impl FromStr for Norm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "L1" | "l1" | "1" => Ok(Norm::L1),
            "L2" | "l2" | "2" => Ok(Norm::L2),
            "Linf" | "linf" | "m" | "max" => Ok(Norm::Linf),
            other => Err(Error::InvalidArgument(format!("unknown norm {other:?}"))),
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Norm::L1 => "L1",
            Norm::L2 => "L2",
            Norm::Linf => "Linf",
        })
    }
}

/// Largest radius accepted by [`InteractionStructure::build`].
pub const MAX_NORM_RADIUS: f64 = 1024.0;

/// Exact test of `k <= m^2` for a non-negative integer `k` and a finite
/// `m` in `[1, MAX_NORM_RADIUS]`, done on the binary expansion of `m`.
fn le_square(k: u64, m: f64) -> bool {
    let bits = m.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let mut mant = (bits & ((1u64 << 52) - 1)) | (1u64 << 52);
    let mut e = exp - 1075;
    while mant & 1 == 0 && e < 0 {
        mant >>= 1;
        e += 1;
    }
    let sq = (mant as u128) * (mant as u128);
    if e >= 0 {
        (k as u128) <= sq << (2 * e as u32)
    } else {
        ((k as u128) << (2 * (-e) as u32)) <= sq
    }
}

/// Reflection-free ordered set of relative positions.
///
/// Invariants: no `(0,0)`, no duplicates, and no position whose reflection is
/// also present. Slice `k` of a potential array refers to `positions()[k]`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InteractionStructure {
    positions: Vec<Offset>,
}

impl InteractionStructure {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Validates an explicit list of positions.
    pub fn from_positions(positions: Vec<Offset>) -> Result<Self> {
        for (i, &p) in positions.iter().enumerate() {
            if p.is_zero() {
                return Err(Error::ZeroOffset);
            }
            if let Some(&q) = positions[..i].iter().find(|q| q.equivalent(p)) {
                if q == p {
                    return Err(Error::InvalidArgument(format!("duplicate position {p}")));
                }
                return Err(Error::ReflectedPair(q, p));
            }
        }
        Ok(Self { positions })
    }

    /// All positions with norm at most `max_norm` (one per reflection pair)
    /// followed by `extra`. An extra position replaces a norm-generated one
    /// that is equivalent to it.
    ///
    /// Norm-generated positions use the representative with `row > 0`, or
    /// `row == 0` and `col > 0`, ordered by (norm, col, row).
    pub fn build(max_norm: f64, norm: Norm, extra: &[Offset]) -> Result<Self> {
        if !max_norm.is_finite() || !(0.0..=MAX_NORM_RADIUS).contains(&max_norm) {
            return Err(Error::InvalidNorm(max_norm));
        }
        let mut extras: Vec<Offset> = Vec::with_capacity(extra.len());
        for &p in extra {
            if p.is_zero() {
                return Err(Error::ZeroOffset);
            }
            match extras.iter().find(|q| q.equivalent(p)) {
                Some(&q) if q == p => {}
                Some(&q) => return Err(Error::ReflectedPair(q, p)),
                None => extras.push(p),
            }
        }

        let radius = max_norm.floor() as i32;
        let mut ball: Vec<(i64, Offset)> = Vec::new();
        for row in 0..=radius {
            for col in -radius..=radius {
                if !(row > 0 || (row == 0 && col > 0)) {
                    continue;
                }
                let (ar, ac) = (row.abs() as i64, col.abs() as i64);
                let (key, inside) = match norm {
                    Norm::L1 => (ar + ac, ar + ac <= radius as i64),
                    Norm::Linf => (ar.max(ac), ar.max(ac) <= radius as i64),
                    Norm::L2 => {
                        let sq = ar * ar + ac * ac;
                        (sq, max_norm >= 1.0 && le_square(sq as u64, max_norm))
                    }
                };
                if inside {
                    ball.push((key, Offset::new(row, col)));
                }
            }
        }
        ball.sort_by_key(|&(key, p)| (key, p.col, p.row));

        let mut positions: Vec<Offset> = ball
            .into_iter()
            .map(|(_, p)| p)
            .filter(|p| !extras.iter().any(|e| e.equivalent(*p)))
            .collect();
        positions.extend(extras);
        Ok(Self { positions })
    }

    pub fn positions(&self) -> &[Offset] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Index of `p` or of its reflection.
    pub fn find(&self, p: Offset) -> Option<usize> {
        self.positions.iter().position(|q| q.equivalent(p))
    }

    pub fn contains(&self, p: Offset) -> bool {
        self.find(p).is_some()
    }

    /// Set union up to reflection; representatives of `self` win on clashes.
    pub fn union(&self, other: &Self) -> Self {
        let mut positions = self.positions.clone();
        for &p in &other.positions {
            if !positions.iter().any(|q| q.equivalent(p)) {
                positions.push(p);
            }
        }
        Self { positions }
    }

    /// Adds one position; absorbed if it (or its reflection) is present.
    pub fn with_position(&self, p: Offset) -> Result<Self> {
        if p.is_zero() {
            return Err(Error::ZeroOffset);
        }
        Ok(self.union(&Self { positions: vec![p] }))
    }

    /// Removes every position of `other`, matching up to reflection.
    pub fn difference(&self, other: &Self) -> Self {
        Self {
            positions: self
                .positions
                .iter()
                .copied()
                .filter(|&p| !other.contains(p))
                .collect(),
        }
    }

    pub fn without_position(&self, p: Offset) -> Self {
        Self {
            positions: self
                .positions
                .iter()
                .copied()
                .filter(|q| !q.equivalent(p))
                .collect(),
        }
    }

    /// Positions at the given zero-based indices, in the order given.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut positions = Vec::with_capacity(indices.len());
        for &i in indices {
            let p = *self.positions.get(i).ok_or(Error::IndexOutOfRange {
                index: i,
                len: self.len(),
            })?;
            if positions.contains(&p) {
                return Err(Error::InvalidArgument(format!("index {i} selected twice")));
            }
            positions.push(p);
        }
        Ok(Self { positions })
    }

    /// Set equality up to reflection, ignoring order.
    pub fn same_set(&self, other: &Self) -> bool {
        self.len() == other.len() && self.positions.iter().all(|&p| other.contains(p))
    }

    /// Largest absolute row and column offsets.
    pub fn span(&self) -> (usize, usize) {
        self.positions.iter().fold((0, 0), |(r, c), p| {
            (r.max(p.row.unsigned_abs() as usize), c.max(p.col.unsigned_abs() as usize))
        })
    }

    /// Reads one `r1 r2` pair per line; `#` lines are comments.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut positions = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let nums: Vec<&str> = t.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()).collect();
            let parse = |s: &str| {
                s.parse::<i32>().map_err(|_| Error::Parse {
                    line: n + 1,
                    msg: format!("invalid offset {s:?}"),
                })
            };
            if nums.len() != 2 {
                return Err(Error::Parse {
                    line: n + 1,
                    msg: "expected two integers".into(),
                });
            }
            positions.push(Offset::new(parse(nums[0])?, parse(nums[1])?));
        }
        Self::from_positions(positions)
    }

    pub fn write<W: Write>(&self, mut sink: W) -> Result<()> {
        for p in &self.positions {
            writeln!(sink, "{} {}", p.row, p.col)?;
        }
        Ok(())
    }
}

impl fmt::Display for InteractionStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.positions.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join(" "))
    }
}

impl Add for &InteractionStructure {
    type Output = InteractionStructure;
    fn add(self, rhs: Self) -> InteractionStructure {
        self.union(rhs)
    }
}

impl Sub for &InteractionStructure {
    type Output = InteractionStructure;
    fn sub(self, rhs: Self) -> InteractionStructure {
        self.difference(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn offs(v: &[(i32, i32)]) -> Vec<Offset> {
        v.iter().map(|&p| p.into()).collect()
    }

    #[test]
    fn nearest_neighbor() {
        let r = InteractionStructure::build(1.0, Norm::L1, &[]).unwrap();
        assert_eq!(r.positions(), offs(&[(1, 0), (0, 1)]).as_slice());
    }

    #[test]
    fn extra_position_appended() {
        let r = InteractionStructure::build(1.0, Norm::L1, &offs(&[(2, 0)])).unwrap();
        assert_eq!(r.positions(), offs(&[(1, 0), (0, 1), (2, 0)]).as_slice());
    }

    #[test]
    fn explicit_reflection_wins() {
        let r = InteractionStructure::build(1.0, Norm::L1, &offs(&[(-1, 0)])).unwrap();
        assert_eq!(r.positions(), offs(&[(0, 1), (-1, 0)]).as_slice());
    }

    #[test]
    fn zero_norm_with_positions() {
        let r = InteractionStructure::build(0.0, Norm::L1, &offs(&[(1, 0), (0, 1)])).unwrap();
        assert_eq!(r, InteractionStructure::build(1.0, Norm::L1, &[]).unwrap());
    }

    #[test]
    fn max_norm_six_has_84() {
        assert_eq!(InteractionStructure::build(6.0, Norm::Linf, &[]).unwrap().len(), 84);
    }

    #[test]
    fn build_errors() {
        assert!(matches!(
            InteractionStructure::build(1.0, Norm::L1, &offs(&[(0, 0)])),
            Err(Error::ZeroOffset)
        ));
        assert!(matches!(
            InteractionStructure::build(1.0, Norm::L1, &offs(&[(2, 1), (-2, -1)])),
            Err(Error::ReflectedPair(..))
        ));
        assert!(InteractionStructure::build(-1.0, Norm::L1, &[]).is_err());
        assert!(InteractionStructure::build(f64::NAN, Norm::L1, &[]).is_err());
    }

    #[test]
    fn l2_boundaries_are_exact() {
        // (1,1) has squared norm 2; sqrt(2) rounds up in f64 so it is included
        let r = InteractionStructure::build(std::f64::consts::SQRT_2, Norm::L2, &[]).unwrap();
        assert_eq!(r.len(), 4);
        let just_below = f64::from_bits(std::f64::consts::SQRT_2.to_bits() - 1);
        assert_eq!(InteractionStructure::build(just_below, Norm::L2, &[]).unwrap().len(), 2);
        assert_eq!(InteractionStructure::build(0.99, Norm::L2, &[]).unwrap().len(), 0);
        assert_eq!(InteractionStructure::build(2.0, Norm::L2, &[]).unwrap().len(), 6);
        assert!(le_square(4, 2.0) && !le_square(5, 2.0));
        assert!(le_square(6, 2.5) && !le_square(7, 2.5));
    }

    #[test]
    fn union_absorbs_reflection() {
        let a = InteractionStructure::from_positions(offs(&[(1, 0)])).unwrap();
        assert_eq!(a.with_position(Offset::new(-1, 0)).unwrap(), a);
        let b = InteractionStructure::from_positions(offs(&[(0, 1)])).unwrap();
        assert_eq!((&a + &b).positions(), offs(&[(1, 0), (0, 1)]).as_slice());
        assert!(a.with_position(Offset::new(0, 0)).is_err());
    }

    #[test]
    fn union_with_far_position() {
        let r = InteractionStructure::build(2.0, Norm::Linf, &[]).unwrap();
        assert_eq!(r.with_position(Offset::new(4, 0)).unwrap().len(), 13);
    }

    #[test]
    fn difference_matches_reflection() {
        let a = InteractionStructure::build(1.0, Norm::L1, &[]).unwrap();
        assert_eq!(a.without_position(Offset::new(-1, 0)).positions(), offs(&[(0, 1)]).as_slice());
        assert!((&a - &a).is_empty());
    }

    #[test]
    fn subset_by_index() {
        let a = InteractionStructure::from_positions(offs(&[(1, 0), (0, 1), (4, 4)])).unwrap();
        assert_eq!(a.subset(&[0, 2]).unwrap().positions(), offs(&[(1, 0), (4, 4)]).as_slice());
        assert_eq!(a.subset(&[0, 1, 2]).unwrap(), a);
        assert!(matches!(a.subset(&[3]), Err(Error::IndexOutOfRange { index: 3, len: 3 })));
    }

    #[test]
    fn text_round_trip() {
        let a = InteractionStructure::from_positions(offs(&[(1, 0), (0, 1), (4, -4)])).unwrap();
        let mut buf = Vec::new();
        a.write(&mut buf).unwrap();
        assert_eq!(InteractionStructure::read(buf.as_slice()).unwrap(), a);
    }
}
