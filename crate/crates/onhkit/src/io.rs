use std::path::Path;

use onhkit_core::nn::{decode_checkpoint, encode_checkpoint, Network};
use onhkit_core::pnm::{decode_pnm, encode_pnm};
use onhkit_core::Raster;

use crate::error::{CliError, Result};

pub fn read_pnm(path: &Path) -> Result<Raster> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode_pnm(&bytes).map_err(|e| CliError::core(path.display().to_string(), e))
}

pub fn write_pnm(path: &Path, r: &Raster) -> Result<()> {
    write_bytes(path, &encode_pnm(r))
}

pub fn read_checkpoint(path: &Path) -> Result<Network> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode_checkpoint(&bytes).map_err(|e| CliError::core(path.display().to_string(), e))
}

pub fn write_checkpoint(path: &Path, net: &Network) -> Result<()> {
    write_bytes(path, &encode_checkpoint(net))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}
