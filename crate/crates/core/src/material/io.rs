//! Plain-text data set files.
//!
//! ```text
//! # law=arctan
//! # m=3
//! # noise=0.1
//! # seed=7
//! # sampling=uniform
//! r1 r2 w1 w2
//! ...
//! ```
//!
//! Header lines start with `#`; `key=value` pairs are read as metadata and
//! anything else is ignored. Values are written in shortest round-trip form.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{LocalDataSet, Metadata};
use crate::error::{Error, Result};

impl LocalDataSet {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        self.write_to(&mut out).map_err(|e| Error::io(path, e))?;
        out.flush().map_err(|e| Error::io(path, e))
    }

    fn write_to(&self, out: &mut impl Write) -> std::io::Result<()> {
        let m = &self.meta;
        writeln!(out, "# ddfem material data: r1 r2 w1 w2")?;
        if let Some(law) = m.law {
            writeln!(out, "# law={law}")?;
        }
        writeln!(out, "# m={}", self.points.len())?;
        writeln!(out, "# noise={:?}", m.noise)?;
        writeln!(out, "# seed={}", m.seed)?;
        if let Some(s) = m.sampling {
            writeln!(out, "# sampling={s}")?;
        }
        for p in &self.points {
            writeln!(out, "{:?} {:?} {:?} {:?}", p[0], p[1], p[2], p[3])?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let format = |line: usize, message: String| Error::Format {
            path: path.to_path_buf(),
            line,
            message,
        };

        let mut meta = Metadata::default();
        let mut declared_m = None;
        let mut points = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let s = raw.trim();
            if s.is_empty() {
                continue;
            }
            if let Some(h) = s.strip_prefix('#') {
                let Some((key, value)) = h.split_once('=') else { continue };
                let value = value.trim();
                let bad = |what: &str| format(line, format!("invalid {what} '{value}'"));
                match key.trim() {
                    "law" => meta.law = Some(value.parse().map_err(|_| bad("law"))?),
                    "noise" => meta.noise = value.parse().map_err(|_| bad("noise"))?,
                    "seed" => meta.seed = value.parse().map_err(|_| bad("seed"))?,
                    "sampling" => meta.sampling = Some(value.parse().map_err(|_| bad("sampling"))?),
                    "m" => declared_m = Some(value.parse::<usize>().map_err(|_| bad("m"))?),
                    _ => {}
                }
                continue;
            }
            let cols: Vec<&str> = s.split_whitespace().collect();
            if cols.len() != 4 {
                return Err(format(
                    line,
                    format!("record {}: expected 4 columns, found {}", points.len() + 1, cols.len()),
                ));
            }
            let mut p = [0.0; 4];
            for (k, c) in cols.iter().enumerate() {
                p[k] = c
                    .parse()
                    .map_err(|_| format(line, format!("record {}: invalid number '{c}'", points.len() + 1)))?;
            }
            points.push(p);
        }
        if points.is_empty() {
            return Err(Error::EmptyDataSet);
        }
        if let Some(m) = declared_m {
            if m != points.len() {
                return Err(format(0, format!("header declares m={m}, found {} records", points.len())));
            }
        }
        LocalDataSet::new(points, meta)
    }
}
