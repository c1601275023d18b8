//! Topology files and raw planar 8-bit video.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use vidcast_core::{Dims, GroupOfFrames, Topology, Volume};

pub fn load_topology(path: &Path) -> Result<Topology> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read topology {}", path.display()))?;
    Topology::parse(&text).with_context(|| format!("invalid topology {}", path.display()))
}

/// Reads `frames` planes of `width × height` bytes. With `frames` unset the
/// count is inferred from the file size, which must then be a whole number
/// of frames.
pub fn read_raw_video(
    path: &Path,
    width: usize,
    height: usize,
    frames: Option<usize>,
) -> Result<GroupOfFrames> {
    if width == 0 || height == 0 {
        bail!("--width and --height must be positive");
    }
    let bytes = fs::read(path).with_context(|| format!("cannot read video {}", path.display()))?;
    let plane = width * height;
    let frames = match frames {
        Some(0) => bail!("--frames must be positive"),
        Some(f) => f,
        None if bytes.len() % plane == 0 && !bytes.is_empty() => bytes.len() / plane,
        None => bail!(
            "size mismatch: {} is {} bytes, not a whole number of {width}x{height} frames",
            path.display(),
            bytes.len()
        ),
    };
    let expected = plane * frames;
    if bytes.len() != expected {
        bail!(
            "size mismatch: {} is {} bytes but {width}x{height}x{frames} needs {expected}",
            path.display(),
            bytes.len()
        );
    }
    Ok(Volume::from_vec(Dims::new(frames, height, width), bytes).expect("length checked"))
}

pub fn write_raw_video(path: &Path, gof: &GroupOfFrames) -> Result<()> {
    write_file(path, gof.data())
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

/// Write to `out`, or stdout when no path is given.
pub fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => write_file(path, bytes),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_count_inferred_from_size() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.raw");
        fs::write(&p, vec![7u8; 3 * 4 * 5]).unwrap();
        let g = read_raw_video(&p, 5, 4, None).unwrap();
        assert_eq!(g.dims(), Dims::new(3, 4, 5));
        assert!(read_raw_video(&p, 5, 4, Some(2)).is_err());
        assert!(read_raw_video(&p, 7, 4, None).is_err());
        assert!(read_raw_video(&p, 0, 4, None).is_err());
    }

    #[test]
    fn raw_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.raw");
        let g = Volume::from_fn(Dims::new(2, 3, 4), |t, y, x| (t * 12 + y * 4 + x) as u8);
        write_raw_video(&p, &g).unwrap();
        assert_eq!(read_raw_video(&p, 4, 3, Some(2)).unwrap(), g);
    }
}
