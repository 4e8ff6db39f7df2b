//! Binary checkpoint format.
//!
//! ```text
//! magic    5 bytes   "GFQN1"
//! count    u64 LE    number of layer sizes (layers + 1)
//! sizes    count x u64 LE
//! params   f64 LE, per layer: row-major weights (outputs x inputs), then biases
//! ```

use std::io::{Read, Write};

use super::{DqnError, QNetwork};

pub const CHECKPOINT_MAGIC: &[u8; 5] = b"GFQN1";

fn io_err(e: std::io::Error) -> DqnError {
    DqnError::Checkpoint(e.to_string())
}

pub fn write_checkpoint<W: Write>(net: &QNetwork, mut w: W) -> Result<(), DqnError> {
    w.write_all(CHECKPOINT_MAGIC).map_err(io_err)?;
    w.write_all(&(net.sizes().len() as u64).to_le_bytes())
        .map_err(io_err)?;
    for &s in net.sizes() {
        w.write_all(&(s as u64).to_le_bytes()).map_err(io_err)?;
    }
    for p in net.params() {
        w.write_all(&p.to_le_bytes()).map_err(io_err)?;
    }
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64, DqnError> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf).map_err(io_err)?;
    Ok(u64::from_le_bytes(buf))
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<QNetwork, DqnError> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic).map_err(io_err)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(DqnError::Checkpoint("bad magic".into()));
    }
    let count = read_u64(&mut r)? as usize;
    if !(2..=64).contains(&count) {
        return Err(DqnError::Checkpoint(format!("implausible layer count {count}")));
    }
    let sizes = (0..count)
        .map(|_| read_u64(&mut r).map(|s| s as usize))
        .collect::<Result<Vec<_>, _>>()?;
    let mut net = QNetwork::zeros(&sizes)?;
    for p in net.params_mut() {
        let mut buf = [0u8; 8];
        r.read_exact(&mut buf).map_err(io_err)?;
        *p = f64::from_le_bytes(buf);
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest).map_err(io_err)?;
    if !rest.is_empty() {
        return Err(DqnError::Checkpoint(format!("{} trailing bytes", rest.len())));
    }
    Ok(net)
}
