use super::form_field::FormField;
use super::grid::TorusGrid;
use crate::error::{Error, Result};
use crate::fiber::lex_masks;
use num_complex::Complex64;
use std::io::{Read, Write};

const MAGIC: &[u8; 4] = b"HKTF";
const VERSION: u32 = 1;
const MIXED: u32 = u32::MAX;

/// Writes a homogeneous form field in the `HKTF` binary layout.
///
/// Header: magic, then little-endian `u32`s `version, n, axis mask, points,
/// degree, p, q, basis count` (`p = q = u32::MAX` for mixed bidegree). Body:
/// `(re, im)` `f64` pairs, one block of `grid.len()` values per basis form in
/// lexicographic order.
pub fn write_snapshot<W: Write>(out: &mut W, field: &FormField) -> Result<()> {
    let grid = &field.grid;
    let degree = match field.degree() {
        Some(k) => k,
        None if field.terms.is_empty() => 0,
        None => return Err(Error::Snapshot("field mixes degrees".into())),
    };
    let (p, q) = field
        .bidegree()
        .map_or((MIXED, MIXED), |(p, q)| (p as u32, q as u32));
    let masks = lex_masks(grid.dim(), degree);
    let header = [
        VERSION,
        grid.n() as u32,
        grid.axis_mask(),
        grid.points() as u32,
        degree as u32,
        p,
        q,
        masks.len() as u32,
    ];
    out.write_all(MAGIC)?;
    for h in header {
        out.write_all(&h.to_le_bytes())?;
    }
    let zeros = vec![Complex64::default(); grid.len()];
    let mut buf = Vec::with_capacity(16 * grid.len());
    for m in masks {
        buf.clear();
        for v in field.terms.get(&m).unwrap_or(&zeros) {
            buf.extend_from_slice(&v.re.to_le_bytes());
            buf.extend_from_slice(&v.im.to_le_bytes());
        }
        out.write_all(&buf)?;
    }
    Ok(())
}

/// Reads a field written by [`write_snapshot`]. Zero components are dropped.
pub fn read_snapshot<R: Read>(input: &mut R) -> Result<FormField> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let mut header = [0u32; 8];
    for h in header.iter_mut() {
        let mut b = [0u8; 4];
        input.read_exact(&mut b)?;
        *h = u32::from_le_bytes(b);
    }
    let [version, n, axis_mask, points, degree, _p, _q, count] = header;
    if version != VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}")));
    }
    let axes: Vec<usize> = (0..32).filter(|a| axis_mask & (1 << a) != 0).collect();
    let grid = TorusGrid::new(n as usize, &axes, points as usize)?;
    let masks = lex_masks(grid.dim(), degree as usize);
    if masks.len() != count as usize {
        return Err(Error::Snapshot(format!(
            "basis count {count} does not match degree {degree}"
        )));
    }
    let mut field = FormField::zero(&grid);
    let mut buf = vec![0u8; 16 * grid.len()];
    for m in masks {
        input.read_exact(&mut buf)?;
        let values: Vec<Complex64> = buf
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
                let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
                Complex64::new(re, im)
            })
            .collect();
        if values.iter().any(|v| v.norm() != 0.0) {
            field.terms.insert(m, values);
        }
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber::FiberForm;
    use crate::field::ScalarField;

    #[test]
    fn round_trip_is_bit_exact() {
        let g = TorusGrid::new(1, &[0, 1], 4).unwrap();
        let u = ScalarField::from_fn(&g, |x| (x[0] * 7.0).sin() + x[1]);
        let form = FiberForm::from_terms(4, [(0b0101, Complex64::new(1.0, -2.0))]);
        let f = FormField::times_constant(&u, &form);
        let mut bytes = Vec::new();
        write_snapshot(&mut bytes, &f).unwrap();
        assert_eq!(&bytes[..4], b"HKTF");
        assert_eq!(bytes.len(), 4 + 32 + 6 * 16 * 16);
        assert_eq!(u32::from_le_bytes(bytes[24..28].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(bytes[28..32].try_into().unwrap()), 0);
        let back = read_snapshot(&mut bytes.as_slice()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn mixed_bidegree_is_flagged() {
        let g = TorusGrid::new(1, &[0], 4).unwrap();
        let form = FiberForm::from_terms(
            4,
            [
                (0b0101, Complex64::new(1.0, 0.0)),
                (0b0011, Complex64::new(1.0, 0.0)),
            ],
        );
        let mut bytes = Vec::new();
        write_snapshot(&mut bytes, &FormField::constant(&g, &form)).unwrap();
        assert_eq!(
            u32::from_le_bytes(bytes[24..28].try_into().unwrap()),
            u32::MAX
        );
    }

    #[test]
    fn corrupt_input_is_rejected() {
        assert!(read_snapshot(&mut &b"NOPE"[..]).is_err());
        let g = TorusGrid::new(1, &[0], 4).unwrap();
        let mut bytes = Vec::new();
        write_snapshot(
            &mut bytes,
            &FormField::scalar(&ScalarField::constant(&g, 1.0)),
        )
        .unwrap();
        bytes.truncate(bytes.len() - 3);
        assert!(read_snapshot(&mut bytes.as_slice()).is_err());
    }
}
