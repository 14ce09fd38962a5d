//! Small dense OLS via normal equations with Gauss-Jordan inversion.

use super::StatError;
use crate::scalar::Scalar;

pub struct OlsFit<T> {
    pub beta: Vec<T>,
    pub residuals: Vec<T>,
    /// (X'X)^-1, row-major k x k.
    pub xtx_inv: Vec<T>,
    pub rss: T,
    pub nobs: usize,
    pub k: usize,
}

impl<T: Scalar> OlsFit<T> {
    /// Standard error of coefficient `j`.
    pub fn se(&self, j: usize) -> T {
        let dof = self.nobs.saturating_sub(self.k).max(1);
        let sigma2 = self.rss / T::from_usize_(dof);
        (sigma2 * self.xtx_inv[j * self.k + j]).sqrt()
    }
}

/// Fit `y ~ X` where `x` is n x k row-major.
pub fn ols<T: Scalar>(x: &[T], y: &[T], n: usize, k: usize) -> Result<OlsFit<T>, StatError> {
    debug_assert_eq!(x.len(), n * k);
    debug_assert_eq!(y.len(), n);
    if n < k {
        return Err(StatError::TooShort { n, need: k });
    }
    // Normal equations.
    let mut xtx = vec![T::zero(); k * k];
    let mut xty = vec![T::zero(); k];
    for row in 0..n {
        let r = &x[row * k..(row + 1) * k];
        for i in 0..k {
            xty[i] += r[i] * y[row];
            for j in i..k {
                xtx[i * k + j] += r[i] * r[j];
            }
        }
    }
    for i in 0..k {
        for j in 0..i {
            xtx[i * k + j] = xtx[j * k + i];
        }
    }

    let xtx_inv = invert(&xtx, k)?;
    let mut beta = vec![T::zero(); k];
    for i in 0..k {
        for j in 0..k {
            beta[i] += xtx_inv[i * k + j] * xty[j];
        }
    }

    let mut residuals = Vec::with_capacity(n);
    let mut rss = T::zero();
    for row in 0..n {
        let r = &x[row * k..(row + 1) * k];
        let mut fit = T::zero();
        for i in 0..k {
            fit += r[i] * beta[i];
        }
        let e = y[row] - fit;
        rss += e * e;
        residuals.push(e);
    }

    Ok(OlsFit {
        beta,
        residuals,
        xtx_inv,
        rss,
        nobs: n,
        k,
    })
}

/// Gauss-Jordan with partial pivoting.
fn invert<T: Scalar>(a: &[T], k: usize) -> Result<Vec<T>, StatError> {
    let mut m = a.to_vec();
    let mut inv = vec![T::zero(); k * k];
    for i in 0..k {
        inv[i * k + i] = T::one();
    }
    for col in 0..k {
        let mut pivot = col;
        for row in (col + 1)..k {
            if m[row * k + col].abs() > m[pivot * k + col].abs() {
                pivot = row;
            }
        }
        let pv = m[pivot * k + col];
        if pv.abs() < T::c(1e-300) {
            return Err(StatError::Singular);
        }
        if pivot != col {
            for j in 0..k {
                m.swap(col * k + j, pivot * k + j);
                inv.swap(col * k + j, pivot * k + j);
            }
        }
        let pv = m[col * k + col];
        for j in 0..k {
            m[col * k + j] /= pv;
            inv[col * k + j] /= pv;
        }
        for row in 0..k {
            if row == col {
                continue;
            }
            let factor = m[row * k + col];
            if factor == T::zero() {
                continue;
            }
            for j in 0..k {
                let mv = m[col * k + j];
                let iv = inv[col * k + j];
                m[row * k + j] -= factor * mv;
                inv[row * k + j] -= factor * iv;
            }
        }
    }
    Ok(inv)
}
