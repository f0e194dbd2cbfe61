//! Encoder checkpoints: a small `UCLN` header followed by one `UCLB`
//! container (64-bit payload) per weight matrix and bias vector.

use std::io::{Read, Write};
use std::path::Path;

use super::net::{Activation, EncoderNet, Layer, OutputMode};
use crate::embed_io::{Dtype, EmbeddingContainer};
use crate::error::{Error, FormatError, Result};
use crate::numerics::Vector;

const MAGIC: [u8; 4] = *b"UCLN";
const VERSION: u32 = 1;

pub fn write_checkpoint<W: Write>(net: &EncoderNet, mut w: W) -> Result<()> {
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let act = match net.activation() {
        Activation::Relu => 0u8,
        Activation::Tanh => 1,
    };
    let mode = match net.output_mode() {
        OutputMode::Raw => 0u8,
        OutputMode::UnitNorm => 1,
    };
    w.write_all(&[act, mode])?;
    let sizes = net.layer_sizes();
    w.write_all(&(sizes.len() as u32).to_le_bytes())?;
    for s in &sizes {
        w.write_all(&(*s as u32).to_le_bytes())?;
    }
    for (i, layer) in net.layers().iter().enumerate() {
        EmbeddingContainer::with_dtype(
            format!("layer{i}.weight"),
            layer.weights.clone(),
            Dtype::F64,
        )?
        .write_to(&mut w)?;
        let bias = layer.bias.clone().insert_axis(ndarray::Axis(0));
        EmbeddingContainer::with_dtype(format!("layer{i}.bias"), bias, Dtype::F64)?
            .write_to(&mut w)?;
    }
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<EncoderNet> {
    let mut head = [0u8; 4];
    r.read_exact(&mut head)
        .map_err(|_| FormatError::TruncatedHeader)?;
    if head != MAGIC {
        return Err(FormatError::BadMagic(head).into());
    }
    r.read_exact(&mut head)
        .map_err(|_| FormatError::TruncatedHeader)?;
    let version = u32::from_le_bytes(head);
    if version != VERSION {
        return Err(FormatError::UnsupportedVersion(version).into());
    }
    let mut tags = [0u8; 2];
    r.read_exact(&mut tags)
        .map_err(|_| FormatError::TruncatedHeader)?;
    let activation = match tags[0] {
        0 => Activation::Relu,
        1 => Activation::Tanh,
        t => {
            return Err(Error::InvalidArgument(format!(
                "unknown activation tag {t}"
            )))
        }
    };
    let output = match tags[1] {
        0 => OutputMode::Raw,
        1 => OutputMode::UnitNorm,
        t => {
            return Err(Error::InvalidArgument(format!(
                "unknown output mode tag {t}"
            )))
        }
    };
    r.read_exact(&mut head)
        .map_err(|_| FormatError::TruncatedHeader)?;
    let count = u32::from_le_bytes(head) as usize;
    if !(2..=64).contains(&count) {
        return Err(Error::InvalidArgument(format!(
            "implausible layer count {count}"
        )));
    }
    let mut sizes = Vec::with_capacity(count);
    for _ in 0..count {
        r.read_exact(&mut head)
            .map_err(|_| FormatError::TruncatedHeader)?;
        sizes.push(u32::from_le_bytes(head) as usize);
    }
    let mut layers = Vec::with_capacity(count - 1);
    for (i, w) in sizes.windows(2).enumerate() {
        let weights = EmbeddingContainer::read_from(&mut r)?.into_matrix();
        let bias = EmbeddingContainer::read_from(&mut r)?.into_matrix();
        if weights.dim() != (w[0], w[1]) || bias.dim() != (1, w[1]) {
            return Err(Error::Shape(format!(
                "checkpoint layer {i} does not match declared sizes"
            )));
        }
        let bias: Vector = bias.row(0).to_owned();
        layers.push(Layer { weights, bias });
    }
    EncoderNet::from_layers(layers, activation, output)
}

pub fn save_checkpoint(net: &EncoderNet, path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::new();
    write_checkpoint(net, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<EncoderNet> {
    let bytes = std::fs::read(path)?;
    read_checkpoint(bytes.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SeedRng;

    #[test]
    fn checkpoint_roundtrip_is_exact() {
        let net = EncoderNet::new(
            &[5, 7, 3],
            Activation::Tanh,
            OutputMode::UnitNorm,
            &mut SeedRng::new(8),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&net, &mut buf).unwrap();
        let back = read_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn truncated_checkpoint_rejected() {
        let net = EncoderNet::new(
            &[2, 2],
            Activation::Relu,
            OutputMode::Raw,
            &mut SeedRng::new(8),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&net, &mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(read_checkpoint(buf.as_slice()).is_err());
    }
}
