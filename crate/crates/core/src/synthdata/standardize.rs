use ndarray::Axis;

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Vector};

/// Per-column affine map to zero mean and unit variance, fitted on
/// training rows and then applied unchanged to every split.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vector,
    pub scale: Vector,
}

impl Standardizer {
    pub fn fit(rows: &Matrix) -> Result<Self> {
        if rows.nrows() < 2 {
            return Err(Error::SampleTooSmall(rows.nrows()));
        }
        let mean = rows.mean_axis(Axis(0)).expect("non-empty");
        let scale = rows
            .std_axis(Axis(0), 1.0)
            .mapv(|s| if s > 1e-12 { s } else { 1.0 });
        Ok(Self { mean, scale })
    }

    pub fn apply(&self, rows: &Matrix) -> Result<Matrix> {
        if rows.ncols() != self.mean.len() {
            return Err(Error::Shape(format!(
                "standardizer fitted on {} columns, got {}",
                self.mean.len(),
                rows.ncols()
            )));
        }
        Ok((rows - &self.mean) / &self.scale)
    }
}
