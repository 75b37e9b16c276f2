//! Binary field snapshots.
//!
//! Layout (little-endian): magic "MHDF", version u32, dim u32, points per
//! axis u32, box length f64, then raw f64 samples component-major. A payload
//! of dim components is a single vector field; 2*dim components is a full
//! state (velocity block first, then magnetic). Raw samples are kept as read
//! so that read -> write round-trips bit-exactly.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::SpectralVectorField;
use crate::grid::Grid;
use crate::state::MhdState;

pub const MAGIC: &[u8; 4] = b"MHDF";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnapshotHeader {
    pub dim: usize,
    pub n: usize,
    pub box_length: f64,
    pub components: usize,
}

/// Raw snapshot: header plus component-major physical samples.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub header: SnapshotHeader,
    pub samples: Vec<f64>,
}

impl Snapshot {
    pub fn from_field(f: &SpectralVectorField) -> Snapshot {
        let g = f.grid();
        Snapshot {
            header: SnapshotHeader {
                dim: g.dim(),
                n: g.points_per_axis(),
                box_length: g.box_length(),
                components: g.dim(),
            },
            samples: f.to_samples(),
        }
    }

    pub fn from_state(u: &MhdState) -> Snapshot {
        let g = u.grid();
        let mut samples = u.velocity.to_samples();
        samples.extend(u.magnetic.to_samples());
        Snapshot {
            header: SnapshotHeader {
                dim: g.dim(),
                n: g.points_per_axis(),
                box_length: g.box_length(),
                components: 2 * g.dim(),
            },
            samples,
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.header.dim, self.header.n, self.header.box_length)
    }

    pub fn is_state(&self) -> bool {
        self.header.components == 2 * self.header.dim
    }

    pub fn to_field(&self) -> Result<SpectralVectorField> {
        if self.header.components != self.header.dim {
            return Err(Error::CorruptSnapshot(format!(
                "expected {} components for a field, found {}",
                self.header.dim, self.header.components
            )));
        }
        SpectralVectorField::from_samples(&self.grid()?, &self.samples)
    }

    pub fn to_state(&self) -> Result<MhdState> {
        if self.header.components != 2 * self.header.dim {
            return Err(Error::CorruptSnapshot(format!(
                "expected {} components for a state, found {}",
                2 * self.header.dim,
                self.header.components
            )));
        }
        let grid = self.grid()?;
        let half = self.samples.len() / 2;
        let velocity = SpectralVectorField::from_samples(&grid, &self.samples[..half])?;
        let magnetic = SpectralVectorField::from_samples(&grid, &self.samples[half..])?;
        MhdState::new(velocity, magnetic)
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(self.header.dim as u32).to_le_bytes())?;
        w.write_all(&(self.header.n as u32).to_le_bytes())?;
        w.write_all(&self.header.box_length.to_le_bytes())?;
        for &v in &self.samples {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Snapshot> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| Error::CorruptSnapshot("file too short for header".into()))?;
        if &magic != MAGIC {
            return Err(Error::CorruptSnapshot(format!(
                "bad magic {:?}, expected {:?}",
                magic, MAGIC
            )));
        }
        let version = read_u32(r)?;
        if version != FORMAT_VERSION {
            return Err(Error::CorruptSnapshot(format!(
                "unsupported version {version}, expected {FORMAT_VERSION}"
            )));
        }
        let dim = read_u32(r)? as usize;
        let n = read_u32(r)? as usize;
        let box_length = read_f64(r)?;
        if dim != 2 && dim != 3 {
            return Err(Error::CorruptSnapshot(format!("dim {dim} is not 2 or 3")));
        }
        if n < 8 || n % 2 != 0 {
            return Err(Error::CorruptSnapshot(format!("invalid points per axis {n}")));
        }
        let mut payload = Vec::new();
        r.read_to_end(&mut payload)?;
        if payload.len() % 8 != 0 {
            return Err(Error::CorruptSnapshot("payload is not a whole number of f64s".into()));
        }
        let count = payload.len() / 8;
        let points = n.pow(dim as u32);
        if count % points != 0 {
            return Err(Error::CorruptSnapshot(format!(
                "payload of {count} values does not tile a {dim}D grid of {points} points"
            )));
        }
        let components = count / points;
        if components != dim && components != 2 * dim {
            return Err(Error::CorruptSnapshot(format!(
                "{components} components is neither a field ({dim}) nor a state ({})",
                2 * dim
            )));
        }
        let samples = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Ok(Snapshot {
            header: SnapshotHeader {
                dim,
                n,
                box_length,
                components,
            },
            samples,
        })
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut file)
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Snapshot> {
        let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
        Snapshot::read_from(&mut file)
    }
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)
        .map_err(|_| Error::CorruptSnapshot("truncated header".into()))?;
    Ok(u32::from_le_bytes(buf))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)
        .map_err(|_| Error::CorruptSnapshot("truncated header".into()))?;
    Ok(f64::from_le_bytes(buf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn state_round_trip_is_bit_exact() {
        let g = Grid::new(2, 16, 2.0 * PI).unwrap();
        let u = MhdState::random(&g, 4, |k| (1.0 + k).powf(-1.5), None);
        let snap = Snapshot::from_state(&u);
        let mut bytes = Vec::new();
        snap.write_to(&mut bytes).unwrap();
        let back = Snapshot::read_from(&mut bytes.as_slice()).unwrap();
        let mut bytes2 = Vec::new();
        back.write_to(&mut bytes2).unwrap();
        assert_eq!(bytes, bytes2, "read -> write must be bit-identical");
        let u2 = back.to_state().unwrap();
        let diff = u2.difference(&u).unwrap();
        assert!(diff.l2_norm() < 1e-12 * u.l2_norm());
    }

    #[test]
    fn field_snapshot_3d() {
        let g = Grid::new(3, 8, 1.0).unwrap();
        let f = crate::field::random_divfree_field(&g, 2, |k| (1.0 + k).powf(-2.0), Some(2));
        let snap = Snapshot::from_field(&f);
        let mut bytes = Vec::new();
        snap.write_to(&mut bytes).unwrap();
        let back = Snapshot::read_from(&mut bytes.as_slice()).unwrap();
        assert!(!back.is_state());
        assert_eq!(back.header.components, 3);
        let f2 = back.to_field().unwrap();
        let n0 = f.l2_norm();
        let mut d = f2;
        d.axpy(-1.0, &f).unwrap();
        assert!(d.l2_norm() < 1e-12 * n0);
    }

    #[test]
    fn corrupt_inputs_are_rejected() {
        let g = Grid::new(2, 8, 1.0).unwrap();
        let u = MhdState::zero(&g);
        let mut bytes = Vec::new();
        Snapshot::from_state(&u).write_to(&mut bytes).unwrap();

        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(matches!(
            Snapshot::read_from(&mut bad_magic.as_slice()),
            Err(Error::CorruptSnapshot(_))
        ));

        let truncated = &bytes[..bytes.len() - 5];
        assert!(matches!(
            Snapshot::read_from(&mut &truncated[..]),
            Err(Error::CorruptSnapshot(_))
        ));

        let mut bad_version = bytes.clone();
        bad_version[4] = 9;
        assert!(matches!(
            Snapshot::read_from(&mut bad_version.as_slice()),
            Err(Error::CorruptSnapshot(_))
        ));
    }
}
