//! Cross-asset innovation correlation: estimation, validation, and PSD
//! factorization.

use serde::{Deserialize, Serialize};

use crate::price::linalg::{cholesky_lower, jacobi_eigen, reconstruct};
use crate::price::PriceModelError;

/// Symmetric correlation matrix with exact unit diagonal, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    n: usize,
    data: Vec<f64>,
}

impl CorrelationMatrix {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        CorrelationMatrix { n, data }
    }

    /// Validates symmetry (within 1e-9), a unit diagonal, and entries in
    /// [−1, 1]. The diagonal is snapped exactly to one.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, PriceModelError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(PriceModelError::DimensionMismatch(
                "correlation matrix must be square".into(),
            ));
        }
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let v = rows[i][j];
                if !v.is_finite() || v.abs() > 1.0 + 1e-9 {
                    return Err(PriceModelError::InvalidCorrelation(format!(
                        "entry ({i},{j}) = {v} outside [-1, 1]"
                    )));
                }
                if (rows[i][j] - rows[j][i]).abs() > 1e-9 {
                    return Err(PriceModelError::NotSymmetric);
                }
                data[i * n + j] = v.clamp(-1.0, 1.0);
            }
            if (rows[i][i] - 1.0).abs() > 1e-9 {
                return Err(PriceModelError::InvalidCorrelation(format!(
                    "diagonal entry ({i},{i}) must be 1"
                )));
            }
            data[i * n + i] = 1.0;
        }
        Ok(CorrelationMatrix { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| self.data[i * self.n..(i + 1) * self.n].to_vec())
            .collect()
    }
}

/// Pearson correlation of per-asset return series. Series must have equal
/// length ≥ 2; a zero-variance series is an error identifying its index.
pub fn estimate_correlation(returns: &[Vec<f64>]) -> Result<CorrelationMatrix, PriceModelError> {
    let n = returns.len();
    if n == 0 {
        return Err(PriceModelError::DimensionMismatch("no series".into()));
    }
    let t = returns[0].len();
    if t < 2 {
        return Err(PriceModelError::SeriesTooShort { needed: 2, got: t });
    }
    if returns.iter().any(|s| s.len() != t) {
        return Err(PriceModelError::DimensionMismatch(
            "return series lengths differ".into(),
        ));
    }
    let means: Vec<f64> = returns
        .iter()
        .map(|s| s.iter().sum::<f64>() / t as f64)
        .collect();
    let mut centered: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut norms = Vec::with_capacity(n);
    for (i, s) in returns.iter().enumerate() {
        let c: Vec<f64> = s.iter().map(|x| x - means[i]).collect();
        let ss: f64 = c.iter().map(|x| x * x).sum();
        // A constant series leaves only cancellation residue after
        // centering; treat anything at that scale as zero variance.
        let scale = s.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let floor = t as f64 * (1e-12 * scale) * (1e-12 * scale);
        if ss <= floor {
            return Err(PriceModelError::ZeroVariance { index: i });
        }
        centered.push(c);
        norms.push(ss.sqrt());
    }
    let mut m = CorrelationMatrix::identity(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let dot: f64 = centered[i]
                .iter()
                .zip(centered[j].iter())
                .map(|(a, b)| a * b)
                .sum();
            let rho = (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0);
            m.data[i * n + j] = rho;
            m.data[j * n + i] = rho;
        }
    }
    Ok(m)
}

/// Lower-triangular factor used to correlate innovation vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct CholFactor {
    n: usize,
    rows: Vec<f64>,
}

impl CholFactor {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.rows[i * self.n + j]
    }

    /// `out = L · z`.
    pub fn correlate(&self, z: &[f64], out: &mut [f64]) {
        debug_assert_eq!(z.len(), self.n);
        debug_assert_eq!(out.len(), self.n);
        for (i, slot) in out.iter_mut().enumerate() {
            let row = &self.rows[i * self.n..i * self.n + i + 1];
            let mut acc = 0.0;
            for (l, zj) in row.iter().zip(z.iter()) {
                acc += l * zj;
            }
            *slot = acc;
        }
    }
}

/// Cholesky factor of a correlation matrix. A matrix that is not positive
/// definite is repaired first: eigenvalues are clipped at 1e-10 and the
/// result rescaled back to a unit diagonal.
pub fn psd_factor(corr: &CorrelationMatrix) -> Result<CholFactor, PriceModelError> {
    let n = corr.n;
    if let Some(rows) = cholesky_lower(&corr.data, n, 1e-12) {
        return Ok(CholFactor { n, rows });
    }
    let (vals, vecs) = jacobi_eigen(&corr.data, n);
    let clipped: Vec<f64> = vals.iter().map(|&v| v.max(1e-10)).collect();
    let mut repaired = reconstruct(&clipped, &vecs, n);
    let scale: Vec<f64> = (0..n).map(|i| repaired[i * n + i].sqrt()).collect();
    for i in 0..n {
        for j in 0..n {
            repaired[i * n + j] /= scale[i] * scale[j];
        }
    }
    cholesky_lower(&repaired, n, 1e-14)
        .map(|rows| CholFactor { n, rows })
        .ok_or_else(|| {
            PriceModelError::InvalidCorrelation("matrix not factorizable after repair".into())
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_series_correlate_to_one() {
        let s = vec![0.1, -0.2, 0.05, 0.3, -0.15];
        let m = estimate_correlation(&[s.clone(), s]).unwrap();
        assert!((m.entry(0, 1) - 1.0).abs() < 1e-12);
        assert_eq!(m.entry(0, 0), 1.0);
    }

    #[test]
    fn antipodal_series_correlate_to_minus_one() {
        let s = vec![0.1, -0.2, 0.05, 0.3, -0.15];
        let neg: Vec<f64> = s.iter().map(|x| -x).collect();
        let m = estimate_correlation(&[s, neg]).unwrap();
        assert!((m.entry(0, 1) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn independent_series_near_zero() {
        use crate::price::rng::{PathStream, StreamKey};
        let key = StreamKey::from_master_seed(5);
        let mut a = PathStream::new(&key, 0);
        let mut b = PathStream::new(&key, 1);
        let mut za = [0.0];
        let mut zb = [0.0];
        let n = 10_000;
        let mut s1 = Vec::with_capacity(n);
        let mut s2 = Vec::with_capacity(n);
        for t in 0..n {
            a.normals(t as u32, &mut za);
            b.normals(t as u32, &mut zb);
            s1.push(za[0]);
            s2.push(zb[0]);
        }
        let m = estimate_correlation(&[s1, s2]).unwrap();
        assert!(m.entry(0, 1).abs() < 0.05, "rho {}", m.entry(0, 1));
    }

    #[test]
    fn zero_variance_names_the_series() {
        let s = vec![0.1, -0.2, 0.05];
        let flat = vec![0.7, 0.7, 0.7];
        assert_eq!(
            estimate_correlation(&[s, flat]),
            Err(PriceModelError::ZeroVariance { index: 1 })
        );
    }

    #[test]
    fn factor_identity_is_identity() {
        let l = psd_factor(&CorrelationMatrix::identity(3)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((l.entry(i, j) - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn factor_2x2_closed_form() {
        let m = CorrelationMatrix::from_rows(&[vec![1.0, 0.6], vec![0.6, 1.0]]).unwrap();
        let l = psd_factor(&m).unwrap();
        assert!((l.entry(0, 0) - 1.0).abs() < 1e-15);
        assert!((l.entry(1, 0) - 0.6).abs() < 1e-15);
        assert!((l.entry(1, 1) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn factor_repairs_rank_deficient_matrix() {
        let ones = CorrelationMatrix::from_rows(&[
            vec![1.0, 1.0, 1.0],
            vec![1.0, 1.0, 1.0],
            vec![1.0, 1.0, 1.0],
        ])
        .unwrap();
        let l = psd_factor(&ones).unwrap();
        // L·Lᵀ must be a valid correlation matrix close to the input.
        for i in 0..3 {
            let mut diag = 0.0;
            for k in 0..3 {
                diag += l.entry(i, k) * l.entry(i, k);
            }
            assert!((diag - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn factor_round_trips_psd_input() {
        let m = CorrelationMatrix::from_rows(&[
            vec![1.0, 0.5, 0.3],
            vec![0.5, 1.0, 0.2],
            vec![0.3, 0.2, 1.0],
        ])
        .unwrap();
        let l = psd_factor(&m).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut v = 0.0;
                for k in 0..3 {
                    v += l.entry(i, k) * l.entry(j, k);
                }
                assert!((v - m.entry(i, j)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn from_rows_validation() {
        assert!(matches!(
            CorrelationMatrix::from_rows(&[vec![1.0, 0.2], vec![0.3, 1.0]]),
            Err(PriceModelError::NotSymmetric)
        ));
        assert!(CorrelationMatrix::from_rows(&[vec![1.0, 0.2]]).is_err());
        assert!(CorrelationMatrix::from_rows(&[vec![0.9, 0.2], vec![0.2, 1.0]]).is_err());
        assert!(
            CorrelationMatrix::from_rows(&[vec![1.0, 1.2], vec![1.2, 1.0]]).is_err()
        );
    }
}
