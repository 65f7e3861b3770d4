//! Flat binary parameter container.
//!
//! Layout, all integers little-endian u32 and all parameters little-endian
//! f64:
//!
//! ```text
//! magic "HADRLNET1" (9 bytes)
//! layer_count | width_0 .. width_{layer_count-1}   trunk descriptor
//! value_hidden (0 = absent) | actions
//! parameters in block order: each trunk layer, advantage head,
//! value hidden layer (if present), value head; per block the weight
//! matrix row-major (input-major) then the bias vector.
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::{Architecture, NnError, QNetwork};

pub const MAGIC: &[u8; 9] = b"HADRLNET1";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic, not a network checkpoint")]
    BadMagic,
    #[error("checkpoint truncated")]
    Truncated,
    #[error("checkpoint has {0} trailing bytes")]
    TrailingBytes(usize),
    #[error("checkpoint declares an invalid architecture: {0}")]
    BadArchitecture(#[from] NnError),
    #[error("checkpoint holds a non-finite parameter")]
    NonFiniteParameter,
}

pub fn save_network(net: &QNetwork, path: &Path) -> Result<(), CheckpointError> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(MAGIC)?;
    let arch = net.arch();
    write_u32(&mut out, arch.layers.len() as u32)?;
    for &w in &arch.layers {
        write_u32(&mut out, w as u32)?;
    }
    write_u32(&mut out, arch.value_hidden.unwrap_or(0) as u32)?;
    write_u32(&mut out, arch.actions as u32)?;
    for block in net.blocks() {
        for &x in block.w.iter() {
            out.write_all(&x.to_le_bytes())?;
        }
        for &x in block.b.iter() {
            out.write_all(&x.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn load_network(path: &Path) -> Result<QNetwork, CheckpointError> {
    let mut input = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 9];
    read_exact(&mut input, &mut magic)?;
    if &magic != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let layer_count = read_u32(&mut input)? as usize;
    let mut layers = Vec::with_capacity(layer_count);
    for _ in 0..layer_count {
        layers.push(read_u32(&mut input)? as usize);
    }
    let value_hidden = match read_u32(&mut input)? as usize {
        0 => None,
        w => Some(w),
    };
    let actions = read_u32(&mut input)? as usize;

    let arch = Architecture {
        layers,
        value_hidden,
        actions,
    };
    let mut net = QNetwork::zeroed(&arch)?;
    for block in net.blocks_mut() {
        for x in block.w.iter_mut() {
            *x = read_f64(&mut input)?;
        }
        for x in block.b.iter_mut() {
            *x = read_f64(&mut input)?;
        }
    }
    let mut rest = Vec::new();
    input.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(CheckpointError::TrailingBytes(rest.len()));
    }
    if net
        .blocks()
        .iter()
        .any(|l| l.w.iter().chain(l.b.iter()).any(|x| !x.is_finite()))
    {
        return Err(CheckpointError::NonFiniteParameter);
    }
    Ok(net)
}

fn write_u32(out: &mut impl Write, v: u32) -> std::io::Result<()> {
    out.write_all(&v.to_le_bytes())
}

fn read_u32(input: &mut impl Read) -> Result<u32, CheckpointError> {
    let mut buf = [0u8; 4];
    read_exact(input, &mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_f64(input: &mut impl Read) -> Result<f64, CheckpointError> {
    let mut buf = [0u8; 8];
    read_exact(input, &mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

fn read_exact(input: &mut impl Read, buf: &mut [u8]) -> Result<(), CheckpointError> {
    input.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            CheckpointError::Truncated
        } else {
            CheckpointError::Io(e)
        }
    })
}
