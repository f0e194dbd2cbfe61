use std::io::{BufRead, Write};

use ndarray::ArrayView2;

use crate::encoders::EncoderNet;
use crate::error::{Error, FormatError, Result};

/// One 2-D representation with its modality and critic tags.
#[derive(Debug, Clone, PartialEq)]
pub struct Point2d {
    pub x: f64,
    pub y: f64,
    pub modality: String,
    pub critic: String,
}

/// Encodes each `(modality tag, encoder, data)` triple and returns every
/// representation; encoders must have a 2-D output.
pub fn dump_representations_2d(
    inputs: &[(&str, &EncoderNet, ArrayView2<'_, f64>)],
    critic: &str,
) -> Result<Vec<Point2d>> {
    let mut out = Vec::new();
    for (tag, net, data) in inputs {
        if net.output_dim() != 2 {
            return Err(Error::Shape(format!(
                "2-D dump needs latent dim 2, encoder {tag} has {}",
                net.output_dim()
            )));
        }
        let reps = net.forward(*data)?;
        for r in reps.rows() {
            out.push(Point2d {
                x: r[0],
                y: r[1],
                modality: tag.to_string(),
                critic: critic.to_string(),
            });
        }
    }
    Ok(out)
}

pub fn write_points_csv<W: Write>(points: &[Point2d], mut w: W) -> Result<()> {
    writeln!(w, "x,y,modality,critic")?;
    for p in points {
        writeln!(w, "{},{},{},{}", p.x, p.y, p.modality, p.critic)?;
    }
    Ok(())
}

/// Reads rows written by [`write_points_csv`]; `#` lines are comments.
pub fn read_points_csv<R: BufRead>(r: R) -> Result<Vec<Point2d>> {
    let mut out = Vec::new();
    let mut saw_header = false;
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let bad = |reason: &str| {
            Error::Format(FormatError::BadText {
                line: i + 1,
                reason: reason.to_string(),
            })
        };
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if !saw_header {
            if line.trim() != "x,y,modality,critic" {
                return Err(bad("expected header x,y,modality,critic"));
            }
            saw_header = true;
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(bad("expected 4 fields"));
        }
        let x = f[0].parse().map_err(|_| bad("bad x"))?;
        let y = f[1].parse().map_err(|_| bad("bad y"))?;
        out.push(Point2d {
            x,
            y,
            modality: f[2].to_string(),
            critic: f[3].to_string(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoders::{Activation, OutputMode};
    use crate::numerics::{standard_normal_matrix, SeedRng};

    #[test]
    fn unit_encoder_lands_on_circle_and_roundtrips() {
        let mut rng = SeedRng::new(1);
        let net =
            EncoderNet::new(&[3, 8, 2], Activation::Tanh, OutputMode::UnitNorm, &mut rng).unwrap();
        let a = standard_normal_matrix(&mut rng, 20, 3);
        let c = standard_normal_matrix(&mut rng, 20, 3);
        let pts =
            dump_representations_2d(&[("a", &net, a.view()), ("c", &net, c.view())], "cosine")
                .unwrap();
        assert_eq!(pts.len(), 40);
        assert!(pts
            .iter()
            .all(|p| ((p.x * p.x + p.y * p.y).sqrt() - 1.0).abs() < 1e-9));
        let mut buf = Vec::new();
        write_points_csv(&pts, &mut buf).unwrap();
        assert_eq!(read_points_csv(buf.as_slice()).unwrap(), pts);
    }

    #[test]
    fn rejects_wider_latents() {
        let net = EncoderNet::zeros(&[3, 4], Activation::Relu, OutputMode::Raw).unwrap();
        let a = ndarray::Array2::<f64>::zeros((2, 3));
        assert!(dump_representations_2d(&[("a", &net, a.view())], "dot").is_err());
    }
}
