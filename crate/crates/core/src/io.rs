//! Binary tensor files and mixture directories.
//!
//! Tensor file layout, all little-endian:
//!
//! | bytes | content                                     |
//! |-------|---------------------------------------------|
//! | 4     | magic `HLAB`                                |
//! | 4     | format version (`u32`, currently 1)         |
//! | 4     | dimension `d` (`u32`)                       |
//! | 4     | points per axis `n` (`u32`)                 |
//! | 8     | box length `L` (`f64`)                      |
//! | 4     | rank (`u32`)                                |
//! | 1     | layout: 0 plain field, 1 marginal (`k`,`k`) |
//!
//! followed by `(n^d)^rank` complex entries as interleaved `f64` real/imaginary pairs.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::definetti::{Atom, Mixture, Support};
use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec, C64};
use crate::marginals::Marginal;

pub const MAGIC: &[u8; 4] = b"HLAB";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Field = 0,
    Marginal = 1,
}

fn write_tensor(path: &Path, field: &Field, layout: Layout) -> Result<()> {
    let g = field.grid();
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(g.dim() as u32).to_le_bytes())?;
    w.write_all(&(g.n() as u32).to_le_bytes())?;
    w.write_all(&g.length().to_le_bytes())?;
    w.write_all(&(field.rank() as u32).to_le_bytes())?;
    w.write_all(&[layout as u8])?;
    for z in field.data() {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_tensor(path: &Path) -> Result<(Field, Layout)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("{}: bad magic", path.display())));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Format(format!("{}: unsupported version {version}", path.display())));
    }
    let dim = read_u32(&mut r)? as usize;
    let n = read_u32(&mut r)? as usize;
    let length = read_f64(&mut r)?;
    let rank = read_u32(&mut r)? as usize;
    let mut flag = [0u8; 1];
    r.read_exact(&mut flag)?;
    let layout = match flag[0] {
        0 => Layout::Field,
        1 => Layout::Marginal,
        other => return Err(Error::Format(format!("{}: unknown layout {other}", path.display()))),
    };
    let grid = GridSpec::new(dim, n, length)?;
    let len = grid.field_len(rank)?;
    let mut data = Vec::with_capacity(len);
    for _ in 0..len {
        let re = read_f64(&mut r)?;
        let im = read_f64(&mut r)?;
        data.push(C64::new(re, im));
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format(format!("{}: trailing bytes", path.display())));
    }
    Ok((Field::from_data(grid, rank, data)?, layout))
}

pub fn write_field(path: impl AsRef<Path>, field: &Field) -> Result<()> {
    write_tensor(path.as_ref(), field, Layout::Field)
}

pub fn read_field(path: impl AsRef<Path>) -> Result<Field> {
    let (f, layout) = read_tensor(path.as_ref())?;
    if layout != Layout::Field {
        return Err(Error::Format("expected a plain field, found a marginal".into()));
    }
    Ok(f)
}

pub fn write_marginal(path: impl AsRef<Path>, gamma: &Marginal) -> Result<()> {
    write_tensor(path.as_ref(), gamma.field(), Layout::Marginal)
}

pub fn read_marginal(path: impl AsRef<Path>) -> Result<Marginal> {
    let (f, layout) = read_tensor(path.as_ref())?;
    if layout != Layout::Marginal {
        return Err(Error::Format("expected a marginal, found a plain field".into()));
    }
    Marginal::from_field(f)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct AtomEntry {
    weight: f64,
    file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct MixtureManifest {
    support: Support,
    atoms: Vec<AtomEntry>,
}

/// Writes `mixture.json` plus one field file per atom into `dir`.
pub fn write_mixture(dir: impl AsRef<Path>, mu: &Mixture) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut atoms = Vec::new();
    for (i, a) in mu.atoms().iter().enumerate() {
        let file = format!("atom_{i:03}.hlab");
        write_field(dir.join(&file), &a.phi)?;
        atoms.push(AtomEntry {
            weight: a.weight,
            file,
        });
    }
    let manifest = MixtureManifest {
        support: mu.support(),
        atoms,
    };
    let path = dir.join("mixture.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(path)
}

pub fn read_mixture(dir: impl AsRef<Path>) -> Result<Mixture> {
    let dir = dir.as_ref();
    let manifest: MixtureManifest =
        serde_json::from_str(&fs::read_to_string(dir.join("mixture.json"))?)?;
    let atoms = manifest
        .atoms
        .iter()
        .map(|e| {
            Ok(Atom {
                weight: e.weight,
                phi: read_field(dir.join(&e.file))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Mixture::new(atoms, manifest.support)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{random_kernel, random_smooth_unit, random_sphere_mixture};
    use std::f64::consts::PI;

    #[test]
    fn field_and_marginal_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = GridSpec::new(2, 4, 2.0 * PI).unwrap();
        let phi = random_smooth_unit(g, 1);
        write_field(dir.path().join("a.hlab"), &phi).unwrap();
        assert_eq!(read_field(dir.path().join("a.hlab")).unwrap(), phi);
        let gamma = random_kernel(g, 2, 3);
        write_marginal(dir.path().join("b.hlab"), &gamma).unwrap();
        assert_eq!(read_marginal(dir.path().join("b.hlab")).unwrap(), gamma);
        assert!(read_field(dir.path().join("b.hlab")).is_err());
        assert!(read_marginal(dir.path().join("a.hlab")).is_err());
    }

    #[test]
    fn header_layout() {
        let dir = tempfile::tempdir().unwrap();
        let g = GridSpec::new(1, 4, 1.5).unwrap();
        let f = Field::from_fn(g, |x| C64::new(x[0], -1.0));
        let p = dir.path().join("f.hlab");
        write_field(&p, &f).unwrap();
        let bytes = fs::read(&p).unwrap();
        assert_eq!(&bytes[..4], b"HLAB");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 4);
        assert_eq!(f64::from_le_bytes(bytes[16..24].try_into().unwrap()), 1.5);
        assert_eq!(bytes[28], 0);
        assert_eq!(bytes.len(), 29 + 4 * 16);
        let mut bad = bytes.clone();
        bad[0] = b'X';
        fs::write(&p, &bad).unwrap();
        assert!(read_field(&p).is_err());
        fs::write(&p, &bytes[..40]).unwrap();
        assert!(read_field(&p).is_err());
    }

    #[test]
    fn mixture_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = GridSpec::new(1, 8, 2.0 * PI).unwrap();
        let mu = random_sphere_mixture(g, 3, 2);
        write_mixture(dir.path(), &mu).unwrap();
        assert_eq!(read_mixture(dir.path()).unwrap(), mu);
    }
}
