//! `.dmap` binary raster files.
//!
//! Layout: magic bytes `DMAP`, then little-endian u32 width, height and
//! channel count (1 for depth/cost, 3 for normals), then
//! `width * height * channels` little-endian f32 values, row-major. Invalid
//! depths are stored as quiet NaN. Round trips are bit-exact.

use super::raster::Raster;
use crate::error::{Error, Result};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"DMAP";

/// Pixel types storable in a `.dmap` file.
pub trait DmapPixel: Copy {
    const CHANNELS: u32;
    fn write_to(&self, out: &mut impl Write) -> std::io::Result<()>;
    fn read_from(data: &mut impl Read) -> std::io::Result<Self>;
}

impl DmapPixel for f32 {
    const CHANNELS: u32 = 1;

    fn write_to(&self, out: &mut impl Write) -> std::io::Result<()> {
        out.write_all(&self.to_le_bytes())
    }

    fn read_from(data: &mut impl Read) -> std::io::Result<Self> {
        let mut b = [0u8; 4];
        data.read_exact(&mut b)?;
        Ok(f32::from_le_bytes(b))
    }
}

impl DmapPixel for [f32; 3] {
    const CHANNELS: u32 = 3;

    fn write_to(&self, out: &mut impl Write) -> std::io::Result<()> {
        for v in self {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    fn read_from(data: &mut impl Read) -> std::io::Result<Self> {
        let mut b = [0u8; 12];
        data.read_exact(&mut b)?;
        Ok([
            f32::from_le_bytes([b[0], b[1], b[2], b[3]]),
            f32::from_le_bytes([b[4], b[5], b[6], b[7]]),
            f32::from_le_bytes([b[8], b[9], b[10], b[11]]),
        ])
    }
}

pub fn write_raster<T: DmapPixel>(path: &Path, raster: &Raster<T>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(MAGIC)?;
    out.write_all(&(raster.width() as u32).to_le_bytes())?;
    out.write_all(&(raster.height() as u32).to_le_bytes())?;
    out.write_all(&T::CHANNELS.to_le_bytes())?;
    for v in raster.values() {
        v.write_to(&mut out)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_raster<T: DmapPixel>(path: &Path) -> Result<Raster<T>> {
    let mut input = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    input
        .read_exact(&mut magic)
        .map_err(|_| Error::Raster(format!("{}: truncated header", path.display())))?;
    if &magic != MAGIC {
        return Err(Error::Raster(format!("{}: bad magic", path.display())));
    }
    let mut word = [0u8; 4];
    let mut read_u32 = |input: &mut BufReader<File>| -> Result<u32> {
        input
            .read_exact(&mut word)
            .map_err(|_| Error::Raster(format!("{}: truncated header", path.display())))?;
        Ok(u32::from_le_bytes(word))
    };
    let width = read_u32(&mut input)? as usize;
    let height = read_u32(&mut input)? as usize;
    let channels = read_u32(&mut input)?;
    if channels != T::CHANNELS {
        return Err(Error::Raster(format!(
            "{}: has {channels} channels, expected {}",
            path.display(),
            T::CHANNELS
        )));
    }
    let mut values = Vec::with_capacity(width * height);
    for _ in 0..width * height {
        let v = T::read_from(&mut input)
            .map_err(|_| Error::Raster(format!("{}: truncated payload", path.display())))?;
        values.push(v);
    }
    Ok(Raster::from_vec(width, height, values))
}
