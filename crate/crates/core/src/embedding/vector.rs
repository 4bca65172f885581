use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dense vector produced by an encoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidConfig("embedding must have dim > 0".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Protocol(format!("embedding coordinate {i} is not finite")));
        }
        Ok(Embedding(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &Embedding) -> Result<f64> {
        check_dims(self, other)?;
        Ok(dot(&self.0, &other.0))
    }

    pub fn norm(&self) -> f64 {
        dot(&self.0, &self.0).sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }

    pub fn scaled(&self, factor: f64) -> Embedding {
        Embedding(self.0.iter().map(|v| v * factor).collect())
    }

    pub fn normalized(&self) -> Result<Embedding> {
        let norm = self.norm();
        if norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(Embedding(self.0.iter().map(|v| v / norm).collect()))
    }

    /// Unweighted arithmetic mean. Each coordinate is summed in sorted order,
    /// so the result does not depend on the order of `parts`.
    pub fn mean(parts: &[Embedding]) -> Result<Embedding> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidConfig("mean of zero embeddings".into()))?;
        for p in &parts[1..] {
            check_dims(first, p)?;
        }
        let count = parts.len() as f64;
        let mut column = Vec::with_capacity(parts.len());
        let values = (0..first.dim())
            .map(|j| {
                column.clear();
                column.extend(parts.iter().map(|p| p.0[j]));
                column.sort_unstable_by(f64::total_cmp);
                column.iter().sum::<f64>() / count
            })
            .collect();
        Ok(Embedding(values))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_dims(a: &Embedding, b: &Embedding) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(())
}

/// `(a·b) / (‖a‖‖b‖)`, clamped to [-1, 1].
pub fn cosine(a: &Embedding, b: &Embedding) -> Result<f64> {
    check_dims(a, b)?;
    if a.is_zero() || b.is_zero() {
        return Err(Error::ZeroVector);
    }
    let denom = a.norm() * b.norm();
    Ok((dot(&a.0, &b.0) / denom).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(v: &[f64]) -> Embedding {
        Embedding::new(v.to_vec()).unwrap()
    }

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine(&e(&[1.0, 0.0]), &e(&[1.0, 0.0])).unwrap(), 1.0);
        assert_eq!(cosine(&e(&[1.0, 0.0]), &e(&[0.0, 1.0])).unwrap(), 0.0);
        let c = cosine(&e(&[1.0, 1.0]), &e(&[1.0, 0.0])).unwrap();
        assert!((c - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn cosine_errors() {
        assert!(matches!(
            cosine(&e(&[1.0, 0.0]), &e(&[1.0, 0.0, 0.0])),
            Err(Error::DimMismatch { left: 2, right: 3 })
        ));
        assert!(matches!(cosine(&e(&[0.0, 0.0]), &e(&[1.0, 0.0])), Err(Error::ZeroVector)));
    }

    #[test]
    fn non_finite_rejected() {
        assert!(Embedding::new(vec![f64::NAN]).is_err());
        assert!(Embedding::new(vec![]).is_err());
    }

    #[test]
    fn mean_examples() {
        let m = Embedding::mean(&[e(&[1.0, 0.0]), e(&[0.0, 1.0])]).unwrap();
        assert_eq!(m.values(), [0.5, 0.5]);
        let m = Embedding::mean(&[e(&[1.0, 0.0, 0.0]), e(&[0.0, 1.0, 0.0]), e(&[0.0, 0.0, 1.0])])
            .unwrap();
        for v in m.values() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        let v = e(&[0.25, -0.5, 2.0]);
        assert_eq!(Embedding::mean(&[v.clone(), v.clone(), v.clone()]).unwrap(), v);
    }
}
