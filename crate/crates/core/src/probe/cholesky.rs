use ndarray::{Array2, ArrayView2};

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub(crate) struct Cholesky {
    l: Array2<f64>,
}

impl Cholesky {
    /// Factorizes `a`, failing when a pivot drops to `d·ε·max(diag)` or below,
    /// which is how numerically singular matrices show up.
    pub(crate) fn factor(a: ArrayView2<f64>) -> Option<Self> {
        let d = a.nrows();
        debug_assert_eq!(d, a.ncols());
        let max_diag = a.diag().iter().fold(0.0f64, |m, &v| m.max(v));
        let tol = (d.max(1) as f64) * f64::EPSILON * max_diag;
        let mut l = Array2::<f64>::zeros((d, d));
        for j in 0..d {
            let mut diag = a[[j, j]];
            for k in 0..j {
                diag -= l[[j, k]] * l[[j, k]];
            }
            if diag.is_nan() || diag <= tol {
                return None;
            }
            let ljj = diag.sqrt();
            l[[j, j]] = ljj;
            for i in j + 1..d {
                let mut s = a[[i, j]];
                let (ri, rj) = (l.row(i), l.row(j));
                for k in 0..j {
                    s -= ri[k] * rj[k];
                }
                l[[i, j]] = s / ljj;
            }
        }
        Some(Self { l })
    }

    /// Solves `A X = B` column by column.
    pub(crate) fn solve(&self, b: ArrayView2<f64>) -> Array2<f64> {
        let d = self.l.nrows();
        let mut x = b.to_owned();
        for mut col in x.columns_mut() {
            // forward: L z = b
            for i in 0..d {
                let mut s = col[i];
                for k in 0..i {
                    s -= self.l[[i, k]] * col[k];
                }
                col[i] = s / self.l[[i, i]];
            }
            // backward: Lᵀ x = z
            for i in (0..d).rev() {
                let mut s = col[i];
                for k in i + 1..d {
                    s -= self.l[[k, i]] * col[k];
                }
                col[i] = s / self.l[[i, i]];
            }
        }
        x
    }
}
