//! Binary checkpoint format shared by all models.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic     b"GSCK"
//! version   u32 (currently 1)
//! tag       u16 length + utf8 bytes      model type ("gsnet" / "dense")
//! n_fields  u32
//! fields    n_fields x (u16 len + utf8 name, i64 value)   config entries
//! n_params  u32
//! blocks    n_params x (u16 len + utf8 name, u32 rows, u32 cols,
//!                       rows*cols f64 little-endian)
//! ```
//!
//! Loading verifies the magic, version, tag, and every config field, and
//! rejects mismatches before touching parameter data.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::numkernel::Matrix;
use crate::params::ParamSet;

const MAGIC: &[u8; 4] = b"GSCK";
const VERSION: u32 = 1;

/// Serializable snapshot: model tag, integer config fields, parameters.
pub struct Checkpoint {
    pub tag: String,
    pub config: Vec<(String, i64)>,
    pub params: ParamSet,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        write_str(&mut w, &self.tag)?;
        w.write_all(&(self.config.len() as u32).to_le_bytes())?;
        for (name, value) in &self.config {
            write_str(&mut w, name)?;
            w.write_all(&value.to_le_bytes())?;
        }
        w.write_all(&(self.params.len() as u32).to_le_bytes())?;
        for (name, m) in self.params.iter() {
            write_str(&mut w, name)?;
            w.write_all(&(m.rows() as u32).to_le_bytes())?;
            w.write_all(&(m.cols() as u32).to_le_bytes())?;
            for v in m.data() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Checkpoint("bad magic, not a checkpoint".into()));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported version {version}, expected {VERSION}"
            )));
        }
        let tag = read_str(&mut r)?;
        let n_fields = read_u32(&mut r)? as usize;
        let mut config = Vec::with_capacity(n_fields);
        for _ in 0..n_fields {
            let name = read_str(&mut r)?;
            let mut buf = [0u8; 8];
            r.read_exact(&mut buf)?;
            config.push((name, i64::from_le_bytes(buf)));
        }
        let n_params = read_u32(&mut r)? as usize;
        let mut params = ParamSet::new();
        for _ in 0..n_params {
            let name = read_str(&mut r)?;
            let rows = read_u32(&mut r)? as usize;
            let cols = read_u32(&mut r)? as usize;
            let mut data = Vec::with_capacity(rows * cols);
            let mut buf = [0u8; 8];
            for _ in 0..rows * cols {
                r.read_exact(&mut buf)?;
                data.push(f64::from_le_bytes(buf));
            }
            params.insert(name, Matrix::new(rows, cols, data)?);
        }
        Ok(Self { tag, config, params })
    }

    /// Check tag and config fields against expectations; error on mismatch.
    pub fn expect(&self, tag: &str, config: &[(String, i64)]) -> Result<()> {
        if self.tag != tag {
            return Err(Error::Checkpoint(format!(
                "model tag mismatch: checkpoint has '{}', expected '{tag}'",
                self.tag
            )));
        }
        if self.config != config {
            return Err(Error::Checkpoint(format!(
                "config mismatch: checkpoint has {:?}, expected {config:?}",
                self.config
            )));
        }
        Ok(())
    }
}

fn write_str<W: Write>(w: &mut W, s: &str) -> Result<()> {
    let bytes = s.as_bytes();
    w.write_all(&(bytes.len() as u16).to_le_bytes())?;
    w.write_all(bytes)?;
    Ok(())
}

fn read_str<R: Read>(r: &mut R) -> Result<String> {
    let mut len = [0u8; 2];
    r.read_exact(&mut len)?;
    let mut buf = vec![0u8; u16::from_le_bytes(len) as usize];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|_| Error::Checkpoint("non-utf8 name".into()))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}
