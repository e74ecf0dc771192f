use crate::error::{Error, Result};

/// Binary image, one flag per pixel in grid index order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mask(Vec<bool>);

impl Mask {
    pub fn new(bits: Vec<bool>) -> Self {
        Mask(bits)
    }

    pub fn empty(len: usize) -> Self {
        Mask(vec![false; len])
    }

    /// Pixels with value strictly above `threshold`.
    pub fn from_threshold(values: &[f64], threshold: f64) -> Self {
        Mask(values.iter().map(|&v| v > threshold).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    /// 1.0 inside, 0.0 outside.
    pub fn to_image(&self) -> Vec<f64> {
        self.0.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }

    pub fn intersection_count(&self, other: &Mask) -> Result<usize> {
        self.check_len(other)?;
        Ok(self.0.iter().zip(&other.0).filter(|(a, b)| **a && **b).count())
    }

    pub fn union_count(&self, other: &Mask) -> Result<usize> {
        self.check_len(other)?;
        Ok(self.0.iter().zip(&other.0).filter(|(a, b)| **a || **b).count())
    }

    pub fn mismatch_count(&self, other: &Mask) -> Result<usize> {
        self.check_len(other)?;
        Ok(self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count())
    }

    fn check_len(&self, other: &Mask) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::invalid(format!(
                "mask lengths differ: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        Ok(())
    }
}

impl From<Vec<bool>> for Mask {
    fn from(bits: Vec<bool>) -> Self {
        Mask(bits)
    }
}
