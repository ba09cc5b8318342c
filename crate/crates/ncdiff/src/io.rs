//! Persistence for trajectories and Brownian paths.
//!
//! CSV carries full-precision decimal floats (shortest round-trip form);
//! the binary formats carry raw little-endian f64 bits and round-trip
//! bit-exactly.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::integrators::Trajectory;
use crate::spectral::SpectralField;
use crate::stochastic::BrownianPath;

const TRAJ_MAGIC: &[u8; 8] = b"NCDTRAJ\0";
const PATH_MAGIC: &[u8; 8] = b"NCDPATH\0";
const FORMAT_VERSION: u8 = 1;

/// CSV rows `t,c_1..c_n`, one per saved time.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, mut w: W) -> Result<()> {
    write!(w, "t")?;
    for k in 1..=traj.config.n_modes {
        write!(w, ",c_{k}")?;
    }
    writeln!(w)?;
    for (t, f) in traj.times.iter().zip(&traj.fields) {
        write!(w, "{t:?}")?;
        for c in f.coeffs() {
            write!(w, ",{c:?}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn write_trajectory_binary<W: Write>(traj: &Trajectory, mut w: W) -> Result<()> {
    w.write_all(TRAJ_MAGIC)?;
    w.write_all(&[FORMAT_VERSION])?;
    w.write_all(&(traj.config.n_modes as u32).to_le_bytes())?;
    w.write_all(&(traj.len() as u64).to_le_bytes())?;
    for (t, f) in traj.times.iter().zip(&traj.fields) {
        w.write_all(&t.to_le_bytes())?;
        for c in f.coeffs() {
            w.write_all(&c.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Reads back the (times, fields) payload of a binary trajectory dump.
pub fn read_trajectory_binary<R: Read>(mut r: R) -> Result<(Vec<f64>, Vec<SpectralField>)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != TRAJ_MAGIC {
        return Err(Error::Artifact("bad trajectory magic".into()));
    }
    let mut version = [0u8; 1];
    r.read_exact(&mut version)?;
    if version[0] != FORMAT_VERSION {
        return Err(Error::Artifact(format!("unsupported version {}", version[0])));
    }
    let mut buf4 = [0u8; 4];
    r.read_exact(&mut buf4)?;
    let n_modes = u32::from_le_bytes(buf4) as usize;
    let mut buf8 = [0u8; 8];
    r.read_exact(&mut buf8)?;
    let rows = u64::from_le_bytes(buf8) as usize;
    let mut times = Vec::with_capacity(rows);
    let mut fields = Vec::with_capacity(rows);
    for _ in 0..rows {
        r.read_exact(&mut buf8)?;
        times.push(f64::from_le_bytes(buf8));
        let mut coeffs = Vec::with_capacity(n_modes);
        for _ in 0..n_modes {
            r.read_exact(&mut buf8)?;
            coeffs.push(f64::from_le_bytes(buf8));
        }
        fields.push(SpectralField::from_coeffs_unchecked(coeffs));
    }
    Ok((times, fields))
}

pub fn write_path_binary<W: Write>(path: &BrownianPath, mut w: W) -> Result<()> {
    w.write_all(PATH_MAGIC)?;
    w.write_all(&[FORMAT_VERSION])?;
    w.write_all(&path.dt.to_le_bytes())?;
    w.write_all(&path.seed.to_le_bytes())?;
    w.write_all(&path.level.to_le_bytes())?;
    w.write_all(&(path.increments.len() as u64).to_le_bytes())?;
    for inc in &path.increments {
        w.write_all(&inc.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_path_binary<R: Read>(mut r: R) -> Result<BrownianPath> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != PATH_MAGIC {
        return Err(Error::Artifact("bad path magic".into()));
    }
    let mut version = [0u8; 1];
    r.read_exact(&mut version)?;
    if version[0] != FORMAT_VERSION {
        return Err(Error::Artifact(format!("unsupported version {}", version[0])));
    }
    let mut buf8 = [0u8; 8];
    r.read_exact(&mut buf8)?;
    let dt = f64::from_le_bytes(buf8);
    r.read_exact(&mut buf8)?;
    let seed = u64::from_le_bytes(buf8);
    let mut buf4 = [0u8; 4];
    r.read_exact(&mut buf4)?;
    let level = u32::from_le_bytes(buf4);
    r.read_exact(&mut buf8)?;
    let count = u64::from_le_bytes(buf8) as usize;
    let mut increments = Vec::with_capacity(count);
    for _ in 0..count {
        r.read_exact(&mut buf8)?;
        increments.push(f64::from_le_bytes(buf8));
    }
    Ok(BrownianPath { dt, increments, seed, level })
}

/// CSV form of a path: a header row with (T, dt, seed, level) followed by
/// one increment per line.
pub fn write_path_csv<W: Write>(path: &BrownianPath, mut w: W) -> Result<()> {
    writeln!(
        w,
        "# T={:?} dt={:?} seed={} level={}",
        path.horizon(),
        path.dt,
        path.seed,
        path.level
    )?;
    writeln!(w, "dB")?;
    for inc in &path.increments {
        writeln!(w, "{inc:?}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrators::{simulate, SimConfig};
    use crate::stochastic::sample_path;
    use proptest::prelude::*;

    #[test]
    fn trajectory_binary_round_trip_bit_exact() {
        let cfg = SimConfig { n_modes: 4, t_final: 0.05, dt: 1e-3, ..SimConfig::default() };
        let path = sample_path(0.05, 1e-3, 9).unwrap();
        let traj = simulate(&cfg, &path).unwrap();

        let mut buf = Vec::new();
        write_trajectory_binary(&traj, &mut buf).unwrap();
        let (times, fields) = read_trajectory_binary(&buf[..]).unwrap();
        assert_eq!(times, traj.times);
        assert_eq!(fields, traj.fields);
    }

    #[test]
    fn trajectory_csv_has_expected_shape() {
        let cfg = SimConfig { n_modes: 3, t_final: 0.01, dt: 1e-3, save_stride: 2, ..SimConfig::default() };
        let path = sample_path(0.01, 1e-3, 9).unwrap();
        let traj = simulate(&cfg, &path).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&traj, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,c_1,c_2,c_3");
        assert_eq!(lines.len() - 1, traj.len());
    }

    #[test]
    fn rejects_foreign_magic() {
        let buf = b"WRONGMAG\x01rest".to_vec();
        assert!(read_trajectory_binary(&buf[..]).is_err());
        assert!(read_path_binary(&buf[..]).is_err());
    }

    proptest! {
        #[test]
        fn path_binary_round_trip(seed in any::<u64>(), n in 1usize..20) {
            let path = sample_path(n as f64 * 0.125, 0.125, seed).unwrap();
            let mut buf = Vec::new();
            write_path_binary(&path, &mut buf).unwrap();
            let back = read_path_binary(&buf[..]).unwrap();
            prop_assert_eq!(back, path);
        }
    }
}
