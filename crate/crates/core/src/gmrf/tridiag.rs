use crate::error::{Error, Result};

/// Symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    /// `off[i]` couples rows `i` and `i + 1`.
    pub off: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len());
        Self { diag, off }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let mut v = self.diag[i] * x[i];
            if i > 0 {
                v += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                v += self.off[i] * x[i + 1];
            }
            out[i] = v;
        }
    }

    /// `self * scale + diag(shift)`.
    pub fn scaled_plus_diag(&self, scale: f64, shift: &[f64]) -> SymTridiag {
        SymTridiag {
            diag: self
                .diag
                .iter()
                .zip(shift)
                .map(|(d, s)| scale * d + s)
                .collect(),
            off: self.off.iter().map(|o| scale * o).collect(),
        }
    }

    pub fn cholesky(&self) -> Result<TridiagCholesky> {
        let n = self.dim();
        let mut diag = Vec::with_capacity(n);
        let mut sub = Vec::with_capacity(n.saturating_sub(1));
        let mut prev_sub = 0.0;
        for i in 0..n {
            let a = self.diag[i] - prev_sub * prev_sub;
            if !(a > 0.0) || !a.is_finite() {
                return Err(Error::CholeskyFailure(i));
            }
            let l = a.sqrt();
            diag.push(l);
            if i + 1 < n {
                prev_sub = self.off[i] / l;
                sub.push(prev_sub);
            }
        }
        Ok(TridiagCholesky { diag, sub })
    }
}

/// Lower bidiagonal factor `L` with `L L^T = A`.
#[derive(Debug, Clone)]
pub struct TridiagCholesky {
    diag: Vec<f64>,
    sub: Vec<f64>,
}

impl TridiagCholesky {
    /// Solve `L y = b` in place.
    pub fn solve_lower(&self, b: &mut [f64]) {
        b[0] /= self.diag[0];
        for i in 1..b.len() {
            b[i] = (b[i] - self.sub[i - 1] * b[i - 1]) / self.diag[i];
        }
    }

    /// Solve `L^T x = b` in place.
    pub fn solve_upper(&self, b: &mut [f64]) {
        let n = b.len();
        b[n - 1] /= self.diag[n - 1];
        for i in (0..n - 1).rev() {
            b[i] = (b[i] - self.sub[i] * b[i + 1]) / self.diag[i];
        }
    }

    /// Solve `A x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        self.solve_lower(b);
        self.solve_upper(b);
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.diag.iter().map(|d| d.ln()).sum::<f64>()
    }
}
