//! Text, PGM and CSV formats for lattice fields.
//!
//! The text grid holds one row per line of whitespace-separated tokens, each a
//! label `>= 0` or `NA` for a pixel outside the lattice. A `#C=<n>` line sets
//! the maximum color explicitly; other `#` lines are comments.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::field::{DiscreteField, PixelRegion, RealField};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

/// Raw tokens of one row, tagged with its line number.
type TokenRow = (usize, Vec<String>);

/// Shared row reader: returns rows of raw tokens plus the optional C override.
fn read_rows<R: BufRead>(reader: R, sep: Option<char>) -> Result<(Vec<TokenRow>, Option<usize>)> {
    let mut rows = Vec::new();
    let mut colors = None;
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(rest) = t.strip_prefix('#') {
            if let Some(c) = rest.trim().strip_prefix("C=") {
                let c = c
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| parse_err(n + 1, format!("bad color header {t:?}")))?;
                colors = Some(c);
            }
            continue;
        }
        let tokens: Vec<String> = match sep {
            Some(s) => t.split(s).map(|x| x.trim().to_string()).collect(),
            None => t.split_whitespace().map(str::to_string).collect(),
        };
        rows.push((n + 1, tokens));
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    let width = rows[0].1.len();
    for (i, (_, r)) in rows.iter().enumerate() {
        if r.len() != width {
            return Err(Error::RaggedRows {
                row: i + 1,
                expected: width,
                found: r.len(),
            });
        }
    }
    Ok((rows, colors))
}

/// Parses a discrete field from the text grid format.
pub fn read_discrete_field<R: BufRead>(reader: R) -> Result<DiscreteField> {
    let (rows, colors) = read_rows(reader, None)?;
    let height = rows.len();
    let width = rows[0].1.len();
    let mut labels = Vec::with_capacity(height * width);
    let mut mask = Vec::with_capacity(height * width);
    for (line, row) in &rows {
        for tok in row {
            if tok == "NA" {
                labels.push(0);
                mask.push(false);
                continue;
            }
            let v: i64 = tok
                .parse()
                .map_err(|_| parse_err(*line, format!("invalid label {tok:?}")))?;
            if v < 0 {
                return Err(parse_err(*line, format!("negative label {v}")));
            }
            let v = u16::try_from(v).map_err(|_| parse_err(*line, format!("label {v} too large")))?;
            labels.push(v);
            mask.push(true);
        }
    }
    if !mask.iter().any(|&m| m) {
        return Err(Error::NoActivePixel);
    }
    let observed = labels
        .iter()
        .zip(&mask)
        .filter_map(|(&l, &m)| m.then_some(l as usize))
        .max()
        .unwrap_or(0);
    DiscreteField::new(height, width, colors.unwrap_or(observed), labels, Some(mask))
}

/// Writes the text grid; emits a `#C=` header only when C differs from the
/// largest label present, so that reading back restores C exactly.
pub fn write_discrete_field<W: Write>(field: &DiscreteField, mut sink: W) -> Result<()> {
    if field.colors() != field.max_label() {
        writeln!(sink, "#C={}", field.colors())?;
    }
    let w = field.width();
    for row in 0..field.height() {
        let line: Vec<String> = (0..w)
            .map(|col| match field.get(row, col) {
                Some(l) => l.to_string(),
                None => "NA".to_string(),
            })
            .collect();
        writeln!(sink, "{}", line.join(" "))?;
    }
    Ok(())
}

/// Reads a 0/1 text grid into a region.
pub fn read_region<R: BufRead>(reader: R) -> Result<PixelRegion> {
    let (rows, _) = read_rows(reader, None)?;
    let height = rows.len();
    let width = rows[0].1.len();
    let mut cells = Vec::with_capacity(height * width);
    for (line, row) in &rows {
        for tok in row {
            match tok.as_str() {
                "0" => cells.push(false),
                "1" => cells.push(true),
                _ => return Err(parse_err(*line, format!("region entries must be 0 or 1, got {tok:?}"))),
            }
        }
    }
    PixelRegion::new(height, width, cells)
}

pub fn write_region<W: Write>(region: &PixelRegion, mut sink: W) -> Result<()> {
    let (h, w) = region.dims();
    for row in 0..h {
        let line: Vec<&str> = (0..w)
            .map(|c| if region.contains(row, c) { "1" } else { "0" })
            .collect();
        writeln!(sink, "{}", line.join(" "))?;
    }
    Ok(())
}

/// Reads a real field from CSV; `NA` marks pixels outside the lattice.
pub fn read_real_field<R: BufRead>(reader: R) -> Result<RealField> {
    let (rows, _) = read_rows(reader, Some(','))?;
    let height = rows.len();
    let width = rows[0].1.len();
    let mut values = Vec::with_capacity(height * width);
    let mut mask = Vec::with_capacity(height * width);
    for (line, row) in &rows {
        for tok in row {
            if tok == "NA" {
                values.push(0.0);
                mask.push(false);
                continue;
            }
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(*line, format!("invalid number {tok:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(*line, format!("non-finite value {tok:?}")));
            }
            values.push(v);
            mask.push(true);
        }
    }
    RealField::new(height, width, values, Some(mask))
}

/// Writes CSV using the shortest representation that parses back exactly.
pub fn write_real_field<W: Write>(field: &RealField, mut sink: W) -> Result<()> {
    for row in 0..field.height() {
        let line: Vec<String> = (0..field.width())
            .map(|col| match field.get(row, col) {
                Some(v) => format!("{v}"),
                None => "NA".to_string(),
            })
            .collect();
        writeln!(sink, "{}", line.join(","))?;
    }
    Ok(())
}

/// Reads a PGM image (P2 or P5); each gray level is a label.
pub fn read_pgm(bytes: &[u8]) -> Result<DiscreteField> {
    let mut pos = 0;
    let mut header = Vec::with_capacity(4);
    while header.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(parse_err(0, "truncated PGM header"));
        }
        header.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    let magic = header[0].as_str();
    let num = |s: &str| s.parse::<usize>().map_err(|_| parse_err(0, format!("bad PGM header value {s:?}")));
    let width = num(&header[1])?;
    let height = num(&header[2])?;
    let maxval = num(&header[3])?;
    if maxval == 0 || maxval > 65535 {
        return Err(parse_err(0, format!("PGM maxval {maxval} out of range")));
    }
    let n = width * height;
    let labels: Vec<u16> = match magic {
        "P5" => {
            // exactly one whitespace byte separates the header from the raster
            pos += 1;
            let bpp = if maxval < 256 { 1 } else { 2 };
            let data = bytes
                .get(pos..pos + n * bpp)
                .ok_or_else(|| parse_err(0, "truncated PGM raster"))?;
            if bpp == 1 {
                data.iter().map(|&b| b as u16).collect()
            } else {
                data.chunks_exact(2)
                    .map(|c| u16::from_be_bytes([c[0], c[1]]))
                    .collect()
            }
        }
        "P2" => {
            let text = std::str::from_utf8(&bytes[pos..]).map_err(|_| parse_err(0, "P2 raster is not text"))?;
            let vals: std::result::Result<Vec<u16>, _> = text
                .split_whitespace()
                .take(n)
                .map(str::parse::<u16>)
                .collect();
            let vals = vals.map_err(|_| parse_err(0, "invalid P2 sample"))?;
            if vals.len() != n {
                return Err(parse_err(0, "truncated PGM raster"));
            }
            vals
        }
        other => return Err(parse_err(0, format!("unsupported magic {other:?}"))),
    };
    let colors = labels.iter().copied().max().unwrap_or(0) as usize;
    DiscreteField::new(height, width, colors, labels, None)
}

/// Writes a binary PGM with maxval C. Masked pixels are written as 0.
pub fn write_pgm<W: Write>(field: &DiscreteField, mut sink: W) -> Result<()> {
    let maxval = field.colors().max(1);
    write!(sink, "P5\n{} {}\n{}\n", field.width(), field.height(), maxval)?;
    if maxval < 256 {
        let data: Vec<u8> = field.labels().iter().map(|&l| l as u8).collect();
        sink.write_all(&data)?;
    } else {
        for &l in field.labels() {
            sink.write_all(&l.to_be_bytes())?;
        }
    }
    Ok(())
}

/// Reads either format, sniffing the PGM magic number.
pub fn read_discrete_any(bytes: &[u8]) -> Result<DiscreteField> {
    if bytes.starts_with(b"P2") || bytes.starts_with(b"P5") {
        read_pgm(bytes)
    } else {
        read_discrete_field(bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write_str(f: &DiscreteField) -> String {
        let mut out = Vec::new();
        write_discrete_field(f, &mut out).unwrap();
        String::from_utf8(out).unwrap()
    }

    #[test]
    fn parses_full_grid() {
        let f = read_discrete_field("0 1\n1 0".as_bytes()).unwrap();
        assert_eq!(f.dims(), (2, 2));
        assert_eq!(f.colors(), 1);
        assert!(!f.has_mask_holes());
    }

    #[test]
    fn parses_na_hole() {
        let f = read_discrete_field("0 NA\n2 1".as_bytes()).unwrap();
        assert_eq!(f.colors(), 2);
        assert_eq!(f.get(0, 1), None);
        assert_eq!(f.n_active(), 3);
    }

    #[test]
    fn ragged_rows() {
        let err = read_discrete_field("0 1\n1".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::RaggedRows { row: 2, .. }));
    }

    #[test]
    fn negative_and_empty() {
        assert!(matches!(
            read_discrete_field("0 -1".as_bytes()),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(read_discrete_field("".as_bytes()), Err(Error::EmptyInput)));
        assert!(matches!(
            read_discrete_field("NA NA".as_bytes()),
            Err(Error::NoActivePixel)
        ));
    }

    #[test]
    fn color_header_override() {
        let f = read_discrete_field("#C=3\n0 1\n1 0\n".as_bytes()).unwrap();
        assert_eq!(f.colors(), 3);
        assert_eq!(write_str(&f), "#C=3\n0 1\n1 0\n");
        assert!(read_discrete_field("#C=0\n0 1".as_bytes()).is_err());
    }

    #[test]
    fn writes_plain_grid() {
        let f = DiscreteField::from_rows(&[vec![0, 1], vec![1, 0]], 1).unwrap();
        assert_eq!(write_str(&f), "0 1\n1 0\n");
        let g = DiscreteField::new(1, 2, 1, vec![1, 0], Some(vec![true, false])).unwrap();
        assert_eq!(write_str(&g), "1 NA\n");
    }

    #[test]
    fn pgm_both_flavors() {
        let f = read_pgm(b"P2\n# comment\n3 2\n2\n0 1 2\n2 1 0\n").unwrap();
        assert_eq!(f.dims(), (2, 3));
        assert_eq!(f.get(1, 0), Some(2));
        let mut bin = Vec::new();
        write_pgm(&f, &mut bin).unwrap();
        assert_eq!(read_discrete_any(&bin).unwrap(), f);
    }

    #[test]
    fn csv_round_trip() {
        let y = RealField::new(2, 2, vec![0.1, -3.25, 1e-9, 7.0], Some(vec![true, true, false, true])).unwrap();
        let mut out = Vec::new();
        write_real_field(&y, &mut out).unwrap();
        assert_eq!(String::from_utf8(out.clone()).unwrap(), "0.1,-3.25\nNA,7\n");
        assert_eq!(read_real_field(out.as_slice()).unwrap(), y);
    }

    proptest! {
        #[test]
        fn text_round_trip(h in 1usize..6, w in 1usize..6, colors in 0usize..4, seed in any::<u64>()) {
            let n = h * w;
            let mut s = seed;
            let mut next = || { s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); s >> 33 };
            let labels: Vec<u16> = (0..n).map(|_| (next() % (colors as u64 + 1)) as u16).collect();
            let mut mask: Vec<bool> = (0..n).map(|_| next() % 5 != 0).collect();
            mask[0] = true;
            let f = DiscreteField::new(h, w, colors, labels, Some(mask)).unwrap();
            let back = read_discrete_field(write_str(&f).as_bytes()).unwrap();
            prop_assert_eq!(back, f);
        }
    }
}
