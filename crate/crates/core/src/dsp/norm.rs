use serde::{Deserialize, Serialize};

use crate::error::{AaiError, Result};

const MIN_STD: f64 = 1e-8;

/// Per-dimension mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl DimStats {
    pub fn new(mean: Vec<f64>, std: Vec<f64>) -> Result<Self> {
        if mean.len() != std.len() {
            return Err(AaiError::Shape(format!(
                "mean has {} dims, std has {}",
                mean.len(),
                std.len()
            )));
        }
        if let Some((dim, &s)) = std.iter().enumerate().find(|(_, s)| !(**s >= MIN_STD)) {
            return Err(AaiError::DegenerateDimension { dim, std: s });
        }
        Ok(Self { mean, std })
    }

    /// Stats with mean 0 and std 1 in every dimension.
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    pub fn fit<'a, I>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut acc = MomentAccumulator::default();
        for r in rows {
            acc.push(r)?;
        }
        acc.finish()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn normalize_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(row.len())?;
        Ok(row
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| (x - m) / s)
            .collect())
    }

    pub fn denormalize_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(row.len())?;
        Ok(row
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(z, (m, s))| z * s + m)
            .collect())
    }

    pub fn normalize(&self, data: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        data.iter().map(|r| self.normalize_row(r)).collect()
    }

    pub fn denormalize(&self, data: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        data.iter().map(|r| self.denormalize_row(r)).collect()
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.dim() {
            return Err(AaiError::Shape(format!("row has {n} dims, stats have {}", self.dim())));
        }
        Ok(())
    }
}

/// Two-pass-free accumulation of first and second moments (Welford).
#[derive(Debug, Default, Clone)]
pub(crate) struct MomentAccumulator {
    count: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl MomentAccumulator {
    pub(crate) fn push(&mut self, row: &[f64]) -> Result<()> {
        if self.count == 0 {
            self.mean = vec![0.0; row.len()];
            self.m2 = vec![0.0; row.len()];
        } else if row.len() != self.mean.len() {
            return Err(AaiError::Shape("rows have differing dimensions".into()));
        }
        self.count += 1;
        let n = self.count as f64;
        for ((m, q), &x) in self.mean.iter_mut().zip(&mut self.m2).zip(row) {
            let d = x - *m;
            *m += d / n;
            *q += d * (x - *m);
        }
        Ok(())
    }

    /// Combines two partial accumulations (Chan et al. pairwise update).
    pub(crate) fn merge(&mut self, other: &MomentAccumulator) -> Result<()> {
        if other.count == 0 {
            return Ok(());
        }
        if self.count == 0 {
            *self = other.clone();
            return Ok(());
        }
        if other.mean.len() != self.mean.len() {
            return Err(AaiError::Shape("rows have differing dimensions".into()));
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        for i in 0..self.mean.len() {
            let d = other.mean[i] - self.mean[i];
            self.mean[i] += d * nb / n;
            self.m2[i] += other.m2[i] + d * d * na * nb / n;
        }
        self.count += other.count;
        Ok(())
    }

    pub(crate) fn count(&self) -> usize {
        self.count
    }

    pub(crate) fn finish(self) -> Result<DimStats> {
        if self.count == 0 {
            return Err(AaiError::EmptyInput("no rows to compute statistics".into()));
        }
        let n = self.count as f64;
        let std = self.m2.iter().map(|q| (q / n).sqrt()).collect();
        DimStats::new(self.mean, std)
    }
}
