//! Lattice fields with optional masked (non-rectangular) support.
//!
//! Pixels are addressed as `(row, col)`, zero-based, rows top to bottom and
//! columns left to right. A relative position `(r1, r2)` is added component
//! wise: the neighbor of `(row, col)` is `(row + r1, col + r2)`.

use crate::error::{Error, Result};

/// A finite-valued field with labels in `0..=C`.
///
/// Masked pixels (mask `false`) are not part of the lattice; the label stored
/// there is meaningless and kept at zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscreteField {
    height: usize,
    width: usize,
    colors: usize,
    labels: Vec<u16>,
    mask: Vec<bool>,
}

impl DiscreteField {
    /// All-zero, fully unmasked field.
    pub fn zeros(height: usize, width: usize, colors: usize) -> Self {
        Self {
            height,
            width,
            colors,
            labels: vec![0; height * width],
            mask: vec![true; height * width],
        }
    }

    /// Builds a field from row-major labels. `mask` defaults to all `true`.
    pub fn new(
        height: usize,
        width: usize,
        colors: usize,
        labels: Vec<u16>,
        mask: Option<Vec<bool>>,
    ) -> Result<Self> {
        let n = height * width;
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        if labels.len() != n {
            return Err(Error::DimensionMismatch {
                expected: (height, width),
                found: (labels.len() / width.max(1), width),
            });
        }
        let mask = mask.unwrap_or_else(|| vec![true; n]);
        if mask.len() != n {
            return Err(Error::DimensionMismatch {
                expected: (height, width),
                found: (mask.len() / width.max(1), width),
            });
        }
        let mut labels = labels;
        for (l, &m) in labels.iter_mut().zip(&mask) {
            if !m {
                *l = 0;
            } else if *l as usize > colors {
                return Err(Error::LabelOutOfRange {
                    label: *l as usize,
                    colors,
                });
            }
        }
        if !mask.iter().any(|&m| m) {
            return Err(Error::NoActivePixel);
        }
        Ok(Self {
            height,
            width,
            colors,
            labels,
            mask,
        })
    }

    /// Builds a field from nested rows; convenient in tests.
    pub fn from_rows(rows: &[Vec<u16>], colors: usize) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != width {
                return Err(Error::RaggedRows {
                    row: i + 1,
                    expected: width,
                    found: r.len(),
                });
            }
        }
        Self::new(height, width, colors, rows.concat(), None)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// Maximum label `C`.
    pub fn colors(&self) -> usize {
        self.colors
    }

    pub fn labels(&self) -> &[u16] {
        &self.labels
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    #[inline]
    pub fn is_active(&self, row: usize, col: usize) -> bool {
        row < self.height && col < self.width && self.mask[row * self.width + col]
    }

    /// Label at `(row, col)`, or `None` when masked or out of bounds.
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Option<usize> {
        self.is_active(row, col)
            .then(|| self.labels[row * self.width + col] as usize)
    }

    pub fn set(&mut self, row: usize, col: usize, label: usize) -> Result<()> {
        if !self.is_active(row, col) {
            return Err(Error::InvalidPixel(row, col));
        }
        if label > self.colors {
            return Err(Error::LabelOutOfRange {
                label,
                colors: self.colors,
            });
        }
        let i = self.index(row, col);
        self.labels[i] = label as u16;
        Ok(())
    }

    pub(crate) fn labels_mut(&mut self) -> &mut [u16] {
        &mut self.labels
    }

    /// Number of lattice (unmasked) pixels.
    pub fn n_active(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn has_mask_holes(&self) -> bool {
        self.mask.iter().any(|&m| !m)
    }

    /// Count of each color over lattice pixels.
    pub fn color_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.colors + 1];
        for (&l, &m) in self.labels.iter().zip(&self.mask) {
            if m {
                counts[l as usize] += 1;
            }
        }
        counts
    }

    /// Same labels, different maximum color. Fails if a label exceeds `colors`.
    pub fn with_colors(mut self, colors: usize) -> Result<Self> {
        if let Some(&max) = self.active_labels().max() {
            if max as usize > colors {
                return Err(Error::LabelOutOfRange {
                    label: max as usize,
                    colors,
                });
            }
        }
        self.colors = colors;
        Ok(self)
    }

    fn active_labels(&self) -> impl Iterator<Item = &u16> {
        self.labels
            .iter()
            .zip(&self.mask)
            .filter_map(|(l, &m)| m.then_some(l))
    }

    /// Largest label actually present.
    pub fn max_label(&self) -> usize {
        self.active_labels().copied().max().unwrap_or(0) as usize
    }
}

/// A real-valued field with the same mask semantics as [`DiscreteField`].
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    height: usize,
    width: usize,
    values: Vec<f64>,
    mask: Vec<bool>,
}

impl RealField {
    pub fn new(height: usize, width: usize, values: Vec<f64>, mask: Option<Vec<bool>>) -> Result<Self> {
        let n = height * width;
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        if values.len() != n {
            return Err(Error::DimensionMismatch {
                expected: (height, width),
                found: (values.len() / width.max(1), width),
            });
        }
        let mask = mask.unwrap_or_else(|| vec![true; n]);
        if mask.len() != n {
            return Err(Error::DimensionMismatch {
                expected: (height, width),
                found: (mask.len() / width.max(1), width),
            });
        }
        let mut values = values;
        for (idx, (v, &m)) in values.iter_mut().zip(&mask).enumerate() {
            if !m {
                *v = 0.0;
            } else if !v.is_finite() {
                return Err(Error::NonFinite(idx / width, idx % width));
            }
        }
        if !mask.iter().any(|&m| m) {
            return Err(Error::NoActivePixel);
        }
        Ok(Self {
            height,
            width,
            values,
            mask,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    #[inline]
    pub fn is_active(&self, row: usize, col: usize) -> bool {
        row < self.height && col < self.width && self.mask[row * self.width + col]
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.is_active(row, col)
            .then(|| self.values[row * self.width + col])
    }

    pub fn n_active(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Values at lattice pixels, in row-major order.
    pub fn active_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values
            .iter()
            .zip(&self.mask)
            .filter_map(|(&v, &m)| m.then_some(v))
    }

    /// `(min, max)` over lattice pixels.
    pub fn range(&self) -> (f64, f64) {
        self.active_values()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// Boolean grid paired with a field (fixed or sub-region selection).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelRegion {
    height: usize,
    width: usize,
    cells: Vec<bool>,
}

impl PixelRegion {
    pub fn new(height: usize, width: usize, cells: Vec<bool>) -> Result<Self> {
        if cells.len() != height * width {
            return Err(Error::DimensionMismatch {
                expected: (height, width),
                found: (cells.len() / width.max(1), width),
            });
        }
        Ok(Self {
            height,
            width,
            cells,
        })
    }

    pub fn filled(height: usize, width: usize, value: bool) -> Self {
        Self {
            height,
            width,
            cells: vec![value; height * width],
        }
    }

    /// Region holding the outermost ring of pixels.
    pub fn border(height: usize, width: usize) -> Self {
        let mut cells = vec![false; height * width];
        for r in 0..height {
            for c in 0..width {
                if r == 0 || c == 0 || r + 1 == height || c + 1 == width {
                    cells[r * width + c] = true;
                }
            }
        }
        Self {
            height,
            width,
            cells,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        self.cells[row * self.width + col]
    }

    pub(crate) fn check_dims(&self, dims: (usize, usize)) -> Result<()> {
        if self.dims() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                found: self.dims(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn masked_labels_are_zeroed() {
        let f = DiscreteField::new(1, 2, 2, vec![1, 2], Some(vec![true, false])).unwrap();
        assert_eq!(f.labels(), &[1, 0]);
        assert_eq!(f.get(0, 1), None);
        assert_eq!(f.color_counts(), vec![0, 1, 0]);
    }

    #[test]
    fn label_above_colors_rejected() {
        let err = DiscreteField::new(1, 2, 1, vec![0, 2], None).unwrap_err();
        assert!(matches!(err, Error::LabelOutOfRange { label: 2, colors: 1 }));
    }

    #[test]
    fn fully_masked_rejected() {
        let err = DiscreteField::new(1, 2, 1, vec![0, 0], Some(vec![false, false])).unwrap_err();
        assert!(matches!(err, Error::NoActivePixel));
    }

    #[test]
    fn border_region() {
        let b = PixelRegion::border(3, 3);
        assert!(!b.contains(1, 1));
        assert_eq!(b.cells().iter().filter(|&&c| c).count(), 8);
    }

    #[test]
    fn real_field_rejects_nan() {
        assert!(RealField::new(1, 2, vec![0.0, f64::NAN], None).is_err());
        let f = RealField::new(1, 2, vec![0.0, f64::NAN], Some(vec![true, false])).unwrap();
        assert_eq!(f.range(), (0.0, 0.0));
    }
}
