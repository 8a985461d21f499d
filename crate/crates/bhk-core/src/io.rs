//! BHF1 field files.
//!
//! Layout (all little-endian): magic `BHF1`; u32 n, N, components,
//! representation (0 = physical, 1 = spectral); f64 L; then
//! components * N^n f64 values, row-major with x fastest. Physical payloads
//! are the real samples. Spectral payloads pack the conjugate-symmetric
//! spectrum losslessly: for each frequency pair (k, -k) the lower flat index
//! stores the real part and the partner stores the imaginary part;
//! self-conjugate bins store their (real) value directly.

use crate::error::{Error, Result};
use crate::field::{Field, Representation};
use crate::grid::Grid;
use num_complex::Complex64;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: [u8; 4] = *b"BHF1";

pub fn write_field(field: &Field, path: &Path) -> Result<()> {
    field.assert_finite()?;
    let grid = field.grid();
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&MAGIC)?;
    w.write_all(&(grid.dim() as u32).to_le_bytes())?;
    w.write_all(&(grid.size() as u32).to_le_bytes())?;
    w.write_all(&(field.components() as u32).to_le_bytes())?;
    let tag: u32 = match field.representation() {
        Representation::Physical => 0,
        Representation::Spectral => 1,
    };
    w.write_all(&tag.to_le_bytes())?;
    w.write_all(&grid.half_width().to_le_bytes())?;

    let cells = grid.cell_count();
    match field.representation() {
        Representation::Physical => {
            for c in 0..field.components() {
                for z in field.component(c) {
                    w.write_all(&z.re.to_le_bytes())?;
                }
            }
        }
        Representation::Spectral => {
            let mut packed = vec![0.0f64; cells];
            for c in 0..field.components() {
                let comp = field.component(c);
                for idx in 0..cells {
                    let cj = Field::conj_index(grid, idx);
                    if idx < cj {
                        packed[idx] = comp[idx].re;
                        packed[cj] = comp[idx].im;
                    } else if idx == cj {
                        packed[idx] = comp[idx].re;
                    }
                }
                for v in &packed {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<Field> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Truncated { expected: 4, actual: 0 })?;
    if magic != MAGIC {
        return Err(Error::BadMagic { found: magic });
    }
    let mut u32buf = [0u8; 4];
    let mut read_u32 = |r: &mut BufReader<File>| -> Result<u32> {
        r.read_exact(&mut u32buf)
            .map_err(|_| Error::Header("truncated header".into()))?;
        Ok(u32::from_le_bytes(u32buf))
    };
    let n = read_u32(&mut r)? as usize;
    let size = read_u32(&mut r)? as usize;
    let components = read_u32(&mut r)? as usize;
    let tag = read_u32(&mut r)?;
    let mut f64buf = [0u8; 8];
    r.read_exact(&mut f64buf)
        .map_err(|_| Error::Header("truncated header".into()))?;
    let half_width = f64::from_le_bytes(f64buf);

    let repr = match tag {
        0 => Representation::Physical,
        1 => Representation::Spectral,
        other => return Err(Error::Header(format!("unknown representation tag {other}"))),
    };
    if components == 0 || components > 3 {
        return Err(Error::Header(format!("component count {components} out of range")));
    }
    let grid = Grid::new(n, size, half_width)?;

    let cells = grid.cell_count();
    let expected = (components * cells * 8) as u64;
    let mut payload = Vec::with_capacity(components * cells);
    for _ in 0..components * cells {
        match r.read_exact(&mut f64buf) {
            Ok(()) => payload.push(f64::from_le_bytes(f64buf)),
            Err(_) => {
                return Err(Error::Truncated {
                    expected,
                    actual: (payload.len() * 8) as u64,
                })
            }
        }
    }

    let mut data = vec![Complex64::default(); components * cells];
    match repr {
        Representation::Physical => {
            for (z, v) in data.iter_mut().zip(&payload) {
                *z = Complex64::new(*v, 0.0);
            }
        }
        Representation::Spectral => {
            for c in 0..components {
                let src = &payload[c * cells..(c + 1) * cells];
                let dst = &mut data[c * cells..(c + 1) * cells];
                for idx in 0..cells {
                    let cj = Field::conj_index(&grid, idx);
                    if idx < cj {
                        let z = Complex64::new(src[idx], src[cj]);
                        dst[idx] = z;
                        dst[cj] = z.conj();
                    } else if idx == cj {
                        dst[idx] = Complex64::new(src[idx], 0.0);
                    }
                }
            }
        }
    }
    let field = Field::from_raw(grid, components, repr, data);
    field.assert_finite()?;
    Ok(field)
}

/// Write sidecar metadata next to a field file (same stem, `.json`).
pub fn write_sidecar(field_path: &Path, meta: &serde_json::Value) -> Result<()> {
    let path = field_path.with_extension("json");
    let mut w = BufWriter::new(File::create(path)?);
    let text = serde_json::to_string_pretty(meta)
        .map_err(|e| Error::Header(format!("sidecar serialization: {e}")))?;
    w.write_all(text.as_bytes())?;
    w.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(2, 32, 4.0).unwrap()
    }

    #[test]
    fn physical_round_trip_is_bitwise() {
        let f = Field::from_fn(grid(), |x| (x[0] * 1.7).sin() * (x[1] * 0.3).cos());
        let dir = std::env::temp_dir().join("bhk_io_phys.bhf");
        write_field(&f, &dir).unwrap();
        let g = read_field(&dir).unwrap();
        assert_eq!(f.data().len(), g.data().len());
        for (a, b) in f.data().iter().zip(g.data()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn spectral_round_trip_is_bitwise() {
        let f = Field::from_fn(grid(), |x| (-0.2 * (x[0] * x[0] + x[1] * x[1])).exp())
            .to_spectral()
            .unwrap();
        let dir = std::env::temp_dir().join("bhk_io_spec.bhf");
        write_field(&f, &dir).unwrap();
        let g = read_field(&dir).unwrap();
        for (a, b) in f.data().iter().zip(g.data()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn bad_magic_is_reported() {
        let path = std::env::temp_dir().join("bhk_io_magic.bhf");
        std::fs::write(&path, b"XXXXrest-of-file-is-junk").unwrap();
        match read_field(&path) {
            Err(Error::BadMagic { found }) => assert_eq!(&found, b"XXXX"),
            other => panic!("expected BadMagic, got {other:?}"),
        }
    }

    #[test]
    fn truncated_payload_reports_byte_counts() {
        let f = Field::from_fn(grid(), |x| x[0]);
        let path = std::env::temp_dir().join("bhk_io_trunc.bhf");
        write_field(&f, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let mut file = File::create(&path).unwrap();
        file.write_all(&bytes[..bytes.len() - 16]).unwrap();
        drop(file);
        match read_field(&path) {
            Err(Error::Truncated { expected, actual }) => {
                assert_eq!(expected, (32u64 * 32) * 8);
                assert_eq!(actual, expected - 16);
            }
            other => panic!("expected Truncated, got {other:?}"),
        }
    }
}
