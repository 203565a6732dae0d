//! Raster export of fields. One image pixel per lattice pixel, row 0 at the
//! top; masked pixels are fully transparent.

use std::io::Write;

use crate::error::{Error, Result};
use crate::field::{DiscreteField, RealField};

/// RGBA8 image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub rgba: Vec<u8>,
}

impl Raster {
    pub fn pixel(&self, row: usize, col: usize) -> [u8; 4] {
        let i = 4 * (row * self.width + col);
        [self.rgba[i], self.rgba[i + 1], self.rgba[i + 2], self.rgba[i + 3]]
    }

    /// Places rasters left to right with a transparent gap between them.
    pub fn side_by_side(images: &[Raster], gap: usize) -> Raster {
        let height = images.iter().map(|r| r.height).max().unwrap_or(0);
        let width = images.iter().map(|r| r.width).sum::<usize>() + gap * images.len().saturating_sub(1);
        let mut rgba = vec![0; 4 * width * height];
        let mut x0 = 0;
        for img in images {
            for row in 0..img.height {
                let src = &img.rgba[4 * row * img.width..4 * (row + 1) * img.width];
                let dst = 4 * (row * width + x0);
                rgba[dst..dst + src.len()].copy_from_slice(src);
            }
            x0 += img.width + gap;
        }
        Raster { width, height, rgba }
    }

    /// Nearest-neighbor upscaling by an integer factor.
    pub fn scaled(&self, factor: usize) -> Raster {
        let factor = factor.max(1);
        let (w, h) = (self.width * factor, self.height * factor);
        let mut rgba = Vec::with_capacity(4 * w * h);
        for row in 0..h {
            for col in 0..w {
                rgba.extend_from_slice(&self.pixel(row / factor, col / factor));
            }
        }
        Raster {
            width: w,
            height: h,
            rgba,
        }
    }

    pub fn write_png<W: Write>(&self, sink: W) -> Result<()> {
        let mut enc = png::Encoder::new(sink, self.width as u32, self.height as u32);
        enc.set_color(png::ColorType::Rgba);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(|e| Error::Encoding(e.to_string()))?;
        writer
            .write_image_data(&self.rgba)
            .map_err(|e| Error::Encoding(e.to_string()))?;
        writer.finish().map_err(|e| Error::Encoding(e.to_string()))
    }
}

/// Colors for discrete labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Palette {
    /// Distinct hues, cycling after ten labels.
    #[default]
    Categorical,
    /// Evenly spaced gray levels, 0 black and C white.
    Gray,
}

/// Color ramps for real-valued fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Ramp {
    #[default]
    Gray,
    Viridis,
}

const CATEGORICAL: [[u8; 3]; 10] = [
    [31, 119, 180],
    [255, 127, 14],
    [44, 160, 44],
    [214, 39, 40],
    [148, 103, 189],
    [140, 86, 75],
    [227, 119, 194],
    [127, 127, 127],
    [188, 189, 34],
    [23, 190, 207],
];

const VIRIDIS: [[f64; 3]; 5] = [
    [68.0, 1.0, 84.0],
    [59.0, 82.0, 139.0],
    [33.0, 145.0, 140.0],
    [94.0, 201.0, 98.0],
    [253.0, 231.0, 37.0],
];

impl Palette {
    pub fn color(self, label: usize, colors: usize) -> [u8; 3] {
        match self {
            Palette::Categorical => CATEGORICAL[label % CATEGORICAL.len()],
            Palette::Gray => {
                let g = if colors == 0 {
                    0
                } else {
                    (255.0 * label as f64 / colors as f64).round() as u8
                };
                [g, g, g]
            }
        }
    }
}

impl Ramp {
    /// Color at `t` in `[0, 1]`.
    pub fn color(self, t: f64) -> [u8; 3] {
        let t = t.clamp(0.0, 1.0);
        match self {
            Ramp::Gray => {
                let g = (255.0 * t).round() as u8;
                [g, g, g]
            }
            Ramp::Viridis => {
                let x = t * (VIRIDIS.len() - 1) as f64;
                let i = (x.floor() as usize).min(VIRIDIS.len() - 2);
                let f = x - i as f64;
                let mut out = [0u8; 3];
                for (c, o) in out.iter_mut().enumerate() {
                    *o = (VIRIDIS[i][c] + f * (VIRIDIS[i + 1][c] - VIRIDIS[i][c])).round() as u8;
                }
                out
            }
        }
    }
}

pub fn render_discrete(field: &DiscreteField, palette: Palette) -> Raster {
    let (h, w) = field.dims();
    let mut rgba = Vec::with_capacity(4 * h * w);
    for row in 0..h {
        for col in 0..w {
            match field.get(row, col) {
                Some(l) => {
                    rgba.extend_from_slice(&palette.color(l, field.colors()));
                    rgba.push(255);
                }
                None => rgba.extend_from_slice(&[0, 0, 0, 0]),
            }
        }
    }
    Raster {
        width: w,
        height: h,
        rgba,
    }
}

/// Linear ramp over the `[min, max]` of lattice values; a constant field maps
/// to the ramp midpoint.
pub fn render_real(field: &RealField, ramp: Ramp) -> Raster {
    let (h, w) = field.dims();
    let (lo, hi) = field.range();
    let span = hi - lo;
    let mut rgba = Vec::with_capacity(4 * h * w);
    for row in 0..h {
        for col in 0..w {
            match field.get(row, col) {
                Some(v) => {
                    let t = if span > 0.0 { (v - lo) / span } else { 0.5 };
                    rgba.extend_from_slice(&ramp.color(t));
                    rgba.push(255);
                }
                None => rgba.extend_from_slice(&[0, 0, 0, 0]),
            }
        }
    }
    Raster {
        width: w,
        height: h,
        rgba,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_discrete_is_uniform() {
        let f = DiscreteField::zeros(4, 4, 1);
        let r = render_discrete(&f, Palette::Categorical);
        assert_eq!((r.width, r.height), (4, 4));
        let first = r.pixel(0, 0);
        assert!((0..4).all(|i| (0..4).all(|j| r.pixel(i, j) == first)));
    }

    #[test]
    fn checkerboard_alternates() {
        let rows: Vec<Vec<u16>> = (0..4).map(|i| (0..4).map(|j| ((i + j) % 2) as u16).collect()).collect();
        let r = render_discrete(&DiscreteField::from_rows(&rows, 1).unwrap(), Palette::Gray);
        assert_eq!(r.pixel(0, 0), [0, 0, 0, 255]);
        assert_eq!(r.pixel(0, 1), [255, 255, 255, 255]);
        assert_eq!(r.pixel(1, 1), r.pixel(0, 0));
    }

    #[test]
    fn constant_real_maps_to_midpoint() {
        let y = RealField::new(2, 2, vec![3.0; 4], None).unwrap();
        let r = render_real(&y, Ramp::Gray);
        assert_eq!(r.pixel(1, 1), [128, 128, 128, 255]);
    }

    #[test]
    fn masked_pixel_is_transparent_and_png_encodes() {
        let f = DiscreteField::new(1, 2, 1, vec![1, 0], Some(vec![true, false])).unwrap();
        let r = render_discrete(&f, Palette::Categorical);
        assert_eq!(r.pixel(0, 1)[3], 0);
        let mut buf = Vec::new();
        r.scaled(3).write_png(&mut buf).unwrap();
        assert_eq!(&buf[1..4], b"PNG");
    }
}
