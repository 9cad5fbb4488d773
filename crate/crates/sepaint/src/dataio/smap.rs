//! SMAP and SMASK text formats.
//!
//! ```text
//! SMAP 1
//! H W K
//! <H lines of W space-separated labels>
//! ```
//!
//! SMASK files use the magic `SMASK 1`, fix `K = 2` and store 1 for known pixels.

use std::io::Write;
use std::path::Path;

use sepaint_core::{LabelMap, Mask};

use crate::error::{Error, Result};

pub const SMAP_MAGIC: &str = "SMAP";
pub const SMASK_MAGIC: &str = "SMASK";
pub const VERSION: u32 = 1;

/// Largest accepted height or width.
pub const MAX_SIDE: usize = 1 << 14;
/// Largest accepted class count; labels are stored as `u16`.
pub const MAX_CLASSES: usize = 1 << 16;

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_blanks(&mut self) {
        while self.pos < self.bytes.len() && matches!(self.bytes[self.pos], b' ' | b'\t' | b'\r') {
            self.pos += 1;
        }
    }

    fn at_line_end(&mut self) -> bool {
        self.skip_blanks();
        self.pos >= self.bytes.len() || self.bytes[self.pos] == b'\n'
    }

    /// Consumes the rest of the current line, which must be blank.
    fn end_line(&mut self, what: &str) -> Result<()> {
        if !self.at_line_end() {
            return Err(Error::format(self.pos, format!("unexpected text after {what}")));
        }
        if self.pos < self.bytes.len() {
            self.pos += 1;
        }
        Ok(())
    }

    fn word(&mut self) -> Option<(usize, &'a [u8])> {
        self.skip_blanks();
        let start = self.pos;
        while self.pos < self.bytes.len() && !matches!(self.bytes[self.pos], b' ' | b'\t' | b'\r' | b'\n') {
            self.pos += 1;
        }
        (self.pos > start).then(|| (start, &self.bytes[start..self.pos]))
    }

    fn number(&mut self, what: &str) -> Result<(usize, u64)> {
        let Some((start, word)) = self.word() else {
            return Err(Error::format(self.pos, format!("expected {what}")));
        };
        if word.len() > 19 || !word.iter().all(u8::is_ascii_digit) {
            return Err(Error::format(start, format!("invalid {what} {:?}", String::from_utf8_lossy(word))));
        }
        let value = std::str::from_utf8(word).ok().and_then(|s| s.parse().ok());
        value.map(|v| (start, v)).ok_or_else(|| Error::format(start, format!("invalid {what}")))
    }
}

struct Grid {
    height: usize,
    width: usize,
    classes: usize,
    values: Vec<u16>,
}

fn parse_grid(bytes: &[u8], magic: &str) -> Result<Grid> {
    let mut cur = Cursor { bytes, pos: 0 };
    match cur.word() {
        Some((_, w)) if w == magic.as_bytes() => {}
        Some((start, w)) => {
            return Err(Error::format(
                start,
                format!("bad magic {:?}, expected {magic:?}", String::from_utf8_lossy(w)),
            ))
        }
        None => return Err(Error::format(0, format!("missing magic {magic:?}"))),
    }
    let (at, version) = cur.number("version")?;
    if version != u64::from(VERSION) {
        return Err(Error::format(at, format!("unsupported version {version}, expected {VERSION}")));
    }
    cur.end_line("version")?;

    let (at_h, h) = cur.number("height")?;
    let (at_w, w) = cur.number("width")?;
    let (at_k, k) = cur.number("class count")?;
    cur.end_line("header")?;
    for (at, v, name) in [(at_h, h, "height"), (at_w, w, "width")] {
        if v == 0 || v > MAX_SIDE as u64 {
            return Err(Error::format(at, format!("{name} {v} outside 1..={MAX_SIDE}")));
        }
    }
    if !(2..=MAX_CLASSES as u64).contains(&k) {
        return Err(Error::format(at_k, format!("class count {k} outside 2..={MAX_CLASSES}")));
    }
    let (height, width, classes) = (h as usize, w as usize, k as usize);

    let mut values = Vec::with_capacity(height * width);
    for row in 0..height {
        for col in 0..width {
            if cur.at_line_end() && col > 0 {
                return Err(Error::format(cur.pos, format!("row {row} has {col} values, expected {width}")));
            }
            let (at, v) = cur.number("label")?;
            if v >= k {
                return Err(Error::format(at, format!("label {v} >= class count {k}")));
            }
            values.push(v as u16);
        }
        cur.end_line("row")?;
    }
    while cur.pos < bytes.len() {
        if !cur.at_line_end() {
            return Err(Error::format(cur.pos, format!("more than {height} rows")));
        }
        cur.end_line("data")?;
    }
    Ok(Grid { height, width, classes, values })
}

fn write_grid(out: &mut impl Write, magic: &str, height: usize, width: usize, classes: usize, values: impl Iterator<Item = u16>) -> std::io::Result<()> {
    writeln!(out, "{magic} {VERSION}")?;
    writeln!(out, "{height} {width} {classes}")?;
    let mut line = String::new();
    for (i, v) in values.enumerate() {
        if i % width != 0 {
            line.push(' ');
        }
        line.push_str(&v.to_string());
        if i % width == width - 1 {
            line.push('\n');
            out.write_all(line.as_bytes())?;
            line.clear();
        }
    }
    Ok(())
}

pub fn parse_smap(bytes: &[u8]) -> Result<LabelMap> {
    let g = parse_grid(bytes, SMAP_MAGIC)?;
    Ok(LabelMap::new(g.height, g.width, g.classes, g.values)?)
}

pub fn parse_smask(bytes: &[u8]) -> Result<Mask> {
    let g = parse_grid(bytes, SMASK_MAGIC)?;
    if g.classes != 2 {
        // Offset of the class count on the header line.
        let line2 = bytes.iter().position(|&b| b == b'\n').map_or(0, |p| p + 1);
        return Err(Error::format(line2, format!("mask class count must be 2, found {}", g.classes)));
    }
    Ok(Mask::new(g.height, g.width, g.values.into_iter().map(|v| v == 1).collect())?)
}

pub fn smap_string(map: &LabelMap) -> String {
    let mut out = Vec::new();
    write_grid(&mut out, SMAP_MAGIC, map.height(), map.width(), map.classes(), map.labels().iter().copied())
        .expect("writing to memory");
    String::from_utf8(out).expect("ascii output")
}

pub fn smask_string(mask: &Mask) -> String {
    let mut out = Vec::new();
    write_grid(&mut out, SMASK_MAGIC, mask.height(), mask.width(), 2, mask.known().iter().map(|&k| u16::from(k)))
        .expect("writing to memory");
    String::from_utf8(out).expect("ascii output")
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn read_smap(path: &Path) -> Result<LabelMap> {
    parse_smap(&read(path)?).map_err(|e| e.at(path))
}

pub fn read_smask(path: &Path) -> Result<Mask> {
    parse_smask(&read(path)?).map_err(|e| e.at(path))
}

pub fn write_smap(path: &Path, map: &LabelMap) -> Result<()> {
    std::fs::write(path, smap_string(map)).map_err(|e| Error::io(path, e))
}

pub fn write_smask(path: &Path, mask: &Mask) -> Result<()> {
    std::fs::write(path, smask_string(mask)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn offset(r: Result<LabelMap>) -> usize {
        match r {
            Err(Error::Format { offset, .. }) => offset,
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn golden_four_by_four() {
        let text = "SMAP 1\n4 4 5\n0 1 2 3\n4 0 1 2\n3 4 0 1\n2 3 4 0\n";
        let map = parse_smap(text.as_bytes()).unwrap();
        assert_eq!((map.height(), map.width(), map.classes()), (4, 4, 5));
        assert_eq!(map.get(1, 0), 4);
        assert_eq!(map.get(3, 3), 0);
        assert_eq!(smap_string(&map), text);
    }

    #[test]
    fn tolerates_crlf_and_missing_final_newline() {
        let map = parse_smap(b"SMAP 1\r\n1 2 3\r\n2 1").unwrap();
        assert_eq!(map.labels(), &[2, 1]);
    }

    #[test]
    fn error_offsets() {
        assert_eq!(offset(parse_smap(b"SMAQ 1\n")), 0);
        assert_eq!(offset(parse_smap(b"SMAP 2\n1 1 2\n0\n")), 5);
        assert_eq!(offset(parse_smap(b"SMAP 1\n1 1 2\n5\n")), 13);
        assert_eq!(offset(parse_smap(b"SMAP 1\n99999 1 2\n")), 7);
        assert_eq!(offset(parse_smap(b"SMAP 1\n1 1 99999999999999999999\n")), 11);
        assert_eq!(offset(parse_smap(b"SMAP 1\n2 2 2\n0 1\n1\n")), 18);
        assert_eq!(offset(parse_smap(b"SMAP 1\n1 2 2\n0 1 1\n")), 17);
        assert_eq!(offset(parse_smap(b"SMAP 1\n1 1 2\n0\n1\n")), 15);
        assert_eq!(offset(parse_smap(b"SMAP 1\n1 1 2\n-1\n")), 13);
        assert_eq!(offset(parse_smap(b"SMAP 1\n2 1 2\n0\n")), 15);
    }

    #[test]
    fn mask_round_trip_and_class_check() {
        let mask = Mask::new(2, 3, vec![true, false, true, false, false, true]).unwrap();
        let text = smask_string(&mask);
        assert_eq!(text, "SMASK 1\n2 3 2\n1 0 1\n0 0 1\n");
        assert_eq!(parse_smask(text.as_bytes()).unwrap(), mask);
        assert!(matches!(parse_smask(b"SMASK 1\n1 1 3\n0\n"), Err(Error::Format { offset: 8, .. })));
        assert!(matches!(parse_smask(b"SMAP 1\n1 1 2\n0\n"), Err(Error::Format { offset: 0, .. })));
    }
}
