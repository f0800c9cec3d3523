//! Dense matrices for the small dimensions this crate works in.
//!
//! Jacobians here are n-by-n with n rarely above 5, so the solvers are plain
//! textbook routines: LU with partial pivoting for linear systems and cyclic
//! Jacobi sweeps for symmetric eigenvalues.

use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct Mat<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Real> Mat<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![F::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = F::one();
        }
        m
    }

    /// Builds a matrix from row slices; all rows must share a length.
    pub fn from_rows(rows: &[Vec<F>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Mat { rows: r, cols: c, data: rows.concat() }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<F>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn matvec(&self, x: &[F]) -> Vec<F> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).fold(F::zero(), |acc, (&a, &b)| acc + a * b))
            .collect()
    }

    pub fn matmul(&self, other: &Mat<F>) -> Mat<F> {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == F::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Mat<F> {
        let mut out = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn sub(&self, other: &Mat<F>) -> Mat<F> {
        assert!(self.rows == other.rows && self.cols == other.cols);
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn max_abs(&self) -> F {
        self.data.iter().fold(F::zero(), |acc, &x| acc.max(x.abs()))
    }

    /// Solves `self * x = b` by LU with partial pivoting.
    ///
    /// Returns `None` when a pivot falls below `1e-14` relative to the largest
    /// entry, which is how callers detect a singular Jacobian.
    pub fn solve(&self, b: &[F]) -> Option<Vec<F>> {
        assert_eq!(self.rows, self.cols);
        assert_eq!(b.len(), self.rows);
        let n = self.rows;
        let mut a = self.data.clone();
        let mut x = b.to_vec();
        let scale = self.max_abs();
        let tiny = F::of(1e-14) * scale.max(F::of(1e-300));

        for col in 0..n {
            let mut pivot = col;
            for r in col + 1..n {
                if a[r * n + col].abs() > a[pivot * n + col].abs() {
                    pivot = r;
                }
            }
            if a[pivot * n + col].abs() <= tiny {
                return None;
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot * n + j);
                }
                x.swap(col, pivot);
            }
            let p = a[col * n + col];
            for r in col + 1..n {
                let factor = a[r * n + col] / p;
                if factor == F::zero() {
                    continue;
                }
                for j in col..n {
                    let v = a[col * n + j];
                    a[r * n + j] = a[r * n + j] - factor * v;
                }
                x[r] = x[r] - factor * x[col];
            }
        }
        for col in (0..n).rev() {
            x[col] = x[col] / a[col * n + col];
            for r in 0..col {
                let v = x[col];
                x[r] = x[r] - a[r * n + col] * v;
            }
        }
        Some(x)
    }

    /// Inverse via column-wise solves; `None` when singular.
    pub fn inverse(&self) -> Option<Mat<F>> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut out = Mat::zeros(n, n);
        for j in 0..n {
            let mut e = vec![F::zero(); n];
            e[j] = F::one();
            let col = self.solve(&e)?;
            for i in 0..n {
                out[(i, j)] = col[i];
            }
        }
        Some(out)
    }

    pub fn is_symmetric(&self, tol: F) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in i + 1..self.cols {
                if (self[(i, j)] - self[(j, i)]).abs() > tol {
                    return false;
                }
            }
        }
        true
    }
}

impl<F: Real> std::ops::Index<(usize, usize)> for Mat<F> {
    type Output = F;
    fn index(&self, (i, j): (usize, usize)) -> &F {
        &self.data[i * self.cols + j]
    }
}

impl<F: Real> std::ops::IndexMut<(usize, usize)> for Mat<F> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut F {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn sym_eigenvalues<F: Real>(m: &Mat<F>) -> Vec<F> {
    assert_eq!(m.nrows(), m.ncols());
    let n = m.nrows();
    let mut a = m.clone();
    let tol = F::of(1e-30).max(F::of(1e-15) * a.max_abs());
    for _sweep in 0..50 {
        let mut off = F::zero();
        for i in 0..n {
            for j in i + 1..n {
                off = off.max(a[(i, j)].abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() <= tol {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (F::of(2.0) * apq);
                let t = {
                    let s = if theta >= F::zero() { F::one() } else { -F::one() };
                    s / (theta.abs() + (theta * theta + F::one()).sqrt())
                };
                let c = F::one() / (t * t + F::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[(i, i)]).collect()
}

/// Singular values in descending order, via the eigenvalues of MᵀM.
pub fn singular_values<F: Real>(m: &Mat<F>) -> Vec<F> {
    let gram = m.transpose().matmul(m);
    let mut eig = sym_eigenvalues(&gram);
    eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
    eig.into_iter().map(|l| l.max(F::zero()).sqrt()).collect()
}

pub fn sigma_max<F: Real>(m: &Mat<F>) -> F {
    singular_values(m)[0]
}

pub fn sigma_min<F: Real>(m: &Mat<F>) -> F {
    *singular_values(m).last().unwrap()
}
