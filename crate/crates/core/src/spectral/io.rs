//! Binary and CSV persistence of spectral fields.
//!
//! Binary layout, all little endian: `n: u64`, `N: u64`, `L: f64`, then
//! interleaved `re, im` pairs in row-major order over ascending wavenumbers
//! `-N/2..N/2` per axis.

use std::io::{Read, Write};

use crate::error::{Error, Result};

use super::{Complex, Grid, SpectralField};

/// Flat storage index for the `m`-th entry of the ascending-wavenumber order.
fn storage_index(grid: &Grid, mut m: usize) -> usize {
    let n = grid.points();
    let half = n / 2;
    let mut flat = 0;
    let mut stride = 1;
    for _ in 0..grid.dim() {
        let shifted = m % n;
        m /= n;
        flat += ((shifted + half) % n) * stride;
        stride *= n;
    }
    flat
}

pub fn write_binary<W: Write>(field: &SpectralField, mut out: W) -> Result<()> {
    let grid = field.grid();
    out.write_all(&(grid.dim() as u64).to_le_bytes())?;
    out.write_all(&(grid.points() as u64).to_le_bytes())?;
    out.write_all(&grid.half_width().to_le_bytes())?;
    let coeffs = field.coefficients();
    let mut buf = Vec::with_capacity(16 * coeffs.len());
    for m in 0..coeffs.len() {
        let c = coeffs[storage_index(grid, m)];
        buf.extend_from_slice(&c.re.to_le_bytes());
        buf.extend_from_slice(&c.im.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_binary<R: Read>(mut input: R) -> Result<SpectralField> {
    let mut word = [0u8; 8];
    input.read_exact(&mut word)?;
    let dim = u64::from_le_bytes(word) as usize;
    input.read_exact(&mut word)?;
    let points = u64::from_le_bytes(word) as usize;
    input.read_exact(&mut word)?;
    let half_width = f64::from_le_bytes(word);
    if !(1..=3).contains(&dim) || points > 1 << 16 {
        return Err(Error::Format(format!("bad header: n = {dim}, N = {points}")));
    }
    let grid = Grid::new(dim, points, half_width)?;
    let mut payload = vec![0u8; 16 * grid.len()];
    input.read_exact(&mut payload)?;
    let mut coeffs = vec![Complex::new(0.0, 0.0); grid.len()];
    for (m, chunk) in payload.chunks_exact(16).enumerate() {
        let re = f64::from_le_bytes(chunk[..8].try_into().expect("8 bytes"));
        let im = f64::from_le_bytes(chunk[8..].try_into().expect("8 bytes"));
        coeffs[storage_index(&grid, m)] = Complex::new(re, im);
    }
    SpectralField::from_coefficients(&grid, coeffs)
}

/// CSV with columns `k1[,k2[,k3]],re,im`, one row per mode in storage order.
pub fn write_csv<W: Write>(field: &SpectralField, out: W) -> Result<()> {
    let grid = field.grid();
    if grid.len() > 1 << 16 {
        return Err(Error::Format(format!(
            "CSV export limited to 65536 modes, field has {}",
            grid.len()
        )));
    }
    let mut writer = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=grid.dim()).map(|i| format!("k{i}")).collect();
    header.push("re".into());
    header.push("im".into());
    writer.write_record(&header)?;
    for (flat, c) in field.coefficients().iter().enumerate() {
        let k = grid.wavenumber(flat);
        let mut row: Vec<String> = k[..grid.dim()].iter().map(|v| v.to_string()).collect();
        row.push(format!("{:e}", c.re));
        row.push(format!("{:e}", c.im));
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip() {
        let grid = Grid::new(2, 8, 1.5).unwrap();
        let values = grid.sample(|x| (-(x[0] * x[0]) - 2.0 * x[1] * x[1]).exp() + 0.1 * x[0]);
        let f = SpectralField::to_spectral(&grid, &values).unwrap();
        let mut buf = Vec::new();
        write_binary(&f, &mut buf).unwrap();
        assert_eq!(buf.len(), 24 + 16 * 64);
        let g = read_binary(buf.as_slice()).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn binary_order_is_ascending() {
        let grid = Grid::new(1, 8, 1.0).unwrap();
        let f = SpectralField::single_mode(&grid, &[-4], Complex::new(1.0, 0.0)).unwrap();
        let mut buf = Vec::new();
        write_binary(&f, &mut buf).unwrap();
        // The Nyquist mode k = -4 is the first payload entry.
        assert_eq!(f64::from_le_bytes(buf[24..32].try_into().unwrap()), 1.0);
    }

    #[test]
    fn truncated_payload_rejected() {
        let grid = Grid::new(1, 8, 1.0).unwrap();
        let mut buf = Vec::new();
        write_binary(&SpectralField::zeros(&grid), &mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(read_binary(buf.as_slice()).is_err());
    }

    #[test]
    fn csv_has_one_row_per_mode() {
        let grid = Grid::new(2, 8, 1.0).unwrap();
        let mut buf = Vec::new();
        write_csv(&SpectralField::zeros(&grid), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 65);
        assert!(text.starts_with("k1,k2,re,im"));
    }
}
