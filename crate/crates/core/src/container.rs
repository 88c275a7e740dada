//! Field container files.
//!
//! A container is a TOML header, a separator line, and a binary payload:
//!
//! ```text
//! version = 1
//! kind = "field"            # field | connection | involution
//! nx = 64
//! ...
//! [meta]
//! provenance = "weierstrass"
//! --- payload ---
//! <little-endian f64 pairs (re, im): mode-major, then (y, x) row-major, then 4 entries>
//! <optional little-endian f64 conformal factor, (y, x) row-major>
//! ```
//!
//! Floats are stored bit-exactly, so a write/read round trip reproduces the
//! field and grid identically.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::Mat2;
use crate::backlund::{LineSeed, Provenance};
use crate::error::{Error, Result};
use crate::thetafield::{Connection, InvolutionField, Metric, ThetaField, TorusGrid};

pub const FORMAT_VERSION: u32 = 1;

const SEPARATOR: &[u8] = b"\n--- payload ---\n";

pub type Meta = BTreeMap<String, toml::Value>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Field,
    Connection,
    Involution,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    version: u32,
    kind: Kind,
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    mode_min: i32,
    mode_max: i32,
    endianness: String,
    lambda: bool,
    #[serde(default)]
    unitary: bool,
    #[serde(default)]
    meta: Meta,
}

/// Contents of a container file.
#[derive(Debug, Clone)]
pub struct Container {
    pub kind: Kind,
    pub field: ThetaField,
    pub unitary: bool,
    pub meta: Meta,
}

impl Container {
    pub fn new(kind: Kind, field: ThetaField, meta: Meta) -> Self {
        Container {
            kind,
            unitary: field.tags().unitary,
            field,
            meta,
        }
    }

    pub fn from_connection(a: &Connection, meta: Meta) -> Self {
        Container::new(Kind::Connection, a.as_field().clone(), meta)
    }

    /// Stores the involution `g` of the seed; the provenance goes into `meta`.
    pub fn from_seed(seed: &LineSeed, mut meta: Meta) -> Self {
        meta.insert(
            "provenance".into(),
            toml::Value::String(seed.provenance().as_str().into()),
        );
        Container::new(Kind::Involution, seed.involution().to_field(), meta)
    }

    pub fn set_meta(&mut self, key: &str, value: impl Into<toml::Value>) {
        self.meta.insert(key.into(), value.into());
    }

    fn expect(&self, kind: Kind) -> Result<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(Error::Format(format!(
                "expected a {kind:?} container, found {:?}",
                self.kind
            )))
        }
    }

    /// The stored field, re-validated as unitary when the header says so.
    pub fn into_field(self) -> Result<ThetaField> {
        self.expect(Kind::Field)?;
        if self.unitary {
            self.field.into_unitary()
        } else {
            Ok(self.field)
        }
    }

    pub fn into_connection(self) -> Result<Connection> {
        self.expect(Kind::Connection)?;
        Connection::from_field(&self.field)
    }

    pub fn into_seed(self) -> Result<LineSeed> {
        self.expect(Kind::Involution)?;
        let provenance = self
            .meta
            .get("provenance")
            .and_then(|v| v.as_str())
            .and_then(Provenance::parse)
            .unwrap_or(Provenance::Custom);
        let g = self
            .field
            .mode(0)
            .ok_or_else(|| Error::Format("involution container lacks mode 0".into()))?;
        if self.field.mode_min() != 0 || self.field.mode_max() != 0 {
            return Err(Error::Format("involution container must hold mode 0 only".into()));
        }
        let inv = InvolutionField::new(self.field.metric().clone(), g.to_vec())?;
        LineSeed::new(inv.metric().clone(), inv.projectors(), provenance)
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        let metric = self.field.metric();
        let g = metric.grid();
        let header = Header {
            version: FORMAT_VERSION,
            kind: self.kind,
            nx: g.nx,
            ny: g.ny,
            lx: g.lx,
            ly: g.ly,
            mode_min: self.field.mode_min(),
            mode_max: self.field.mode_max(),
            endianness: "little".into(),
            lambda: !metric.is_flat(),
            unitary: self.unitary,
            meta: self.meta.clone(),
        };
        let text = toml::to_string(&header).map_err(|e| Error::Format(e.to_string()))?;
        out.write_all(text.trim_end().as_bytes())?;
        out.write_all(SEPARATOR)?;
        for (_, grid) in self.field.modes() {
            for m in grid {
                for z in &m.0 {
                    out.write_all(&z.re.to_le_bytes())?;
                    out.write_all(&z.im.to_le_bytes())?;
                }
            }
        }
        if header.lambda {
            for l in metric.lambda() {
                out.write_all(&l.to_le_bytes())?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn read<R: Read>(mut input: R) -> Result<Self> {
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes)?;
        let split = bytes
            .windows(SEPARATOR.len())
            .position(|w| w == SEPARATOR)
            .ok_or_else(|| Error::Format("missing payload separator".into()))?;
        let text = std::str::from_utf8(&bytes[..split])
            .map_err(|_| Error::Format("header is not UTF-8".into()))?;
        let header: Header = toml::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        if header.version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {}", header.version)));
        }
        if header.endianness != "little" {
            return Err(Error::Format(format!("unsupported endianness {}", header.endianness)));
        }
        if header.mode_max < header.mode_min {
            return Err(Error::Format("empty mode range".into()));
        }
        let grid = TorusGrid::new(header.nx, header.ny, header.lx, header.ly)?;
        let n = grid.len();
        let count = (header.mode_max - header.mode_min + 1) as usize;
        let payload = &bytes[split + SEPARATOR.len()..];
        let field_len = count * n * 4 * 16;
        let expected = field_len + if header.lambda { n * 8 } else { 0 };
        if payload.len() != expected {
            return Err(Error::Format(format!(
                "payload has {} bytes, header implies {expected}",
                payload.len()
            )));
        }
        let f64_at = |k: usize| f64::from_le_bytes(payload[8 * k..8 * k + 8].try_into().unwrap());
        let metric: Arc<Metric> = if header.lambda {
            let base = field_len / 8;
            Metric::from_lambda(grid, (0..n).map(|k| f64_at(base + k)).collect())?
        } else {
            Metric::flat(grid)
        };
        let modes = (0..count)
            .map(|m| {
                (0..n)
                    .map(|p| {
                        let base = ((m * n + p) * 4) * 2;
                        Mat2(std::array::from_fn(|e| {
                            Complex64::new(f64_at(base + 2 * e), f64_at(base + 2 * e + 1))
                        }))
                    })
                    .collect()
            })
            .collect();
        let field = ThetaField::from_modes(metric, header.mode_min, modes)?;
        Ok(Container {
            kind: header.kind,
            field,
            unitary: header.unitary,
            meta: header.meta,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Container::read(BufReader::new(File::open(path)?))
    }
}
