//! Minimal sparse linear algebra for the Galerkin systems: CSR storage
//! with Jacobi-preconditioned conjugate gradients, and a direct LDL^T
//! solver for the tridiagonal matrices produced by 1D meshes.

use crate::error::{Error, Result};

/// Compressed-sparse-row symmetric matrix.
#[derive(Debug, Clone)]
pub struct Csr {
    pub n: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<f64>,
}

impl Csr {
    /// Build from (row, col, value) triplets, summing duplicates.
    pub fn from_triplets(n: usize, triplets: &mut Vec<(usize, usize, f64)>) -> Csr {
        triplets.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; n + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut data: Vec<f64> = Vec::with_capacity(triplets.len());
        for &(r, c, v) in triplets.iter() {
            if !indices.is_empty() && indptr[r + 1] > indptr[r] {
                let last = indices.len() - 1;
                if indices[last] == c && indptr[r + 1] == indices.len() {
                    data[last] += v;
                    continue;
                }
            }
            // new entry; rows arrive in order
            indices.push(c);
            data.push(v);
            indptr[r + 1] = indices.len();
        }
        // rows with no entries inherit the previous offset
        for r in 0..n {
            if indptr[r + 1] < indptr[r] {
                indptr[r + 1] = indptr[r];
            }
        }
        Csr {
            n,
            indptr,
            indices,
            data,
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for r in 0..self.n {
            let mut acc = 0.0;
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.data[k] * x[self.indices[k]];
            }
            y[r] = acc;
        }
    }

    pub fn diag(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for r in 0..self.n {
            for k in self.indptr[r]..self.indptr[r + 1] {
                if self.indices[k] == r {
                    d[r] = self.data[k];
                }
            }
        }
        d
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for r in 0..self.n {
            let mut row = 0.0;
            for k in self.indptr[r]..self.indptr[r + 1] {
                row += self.data[k] * x[self.indices[k]];
            }
            acc += x[r] * row;
        }
        acc
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Jacobi-preconditioned conjugate gradients to relative residual `tol`,
/// followed by one iterative-refinement pass to push the residual toward
/// round-off.
pub fn cg_solve(a: &Csr, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let mut x = vec![0.0; a.n];
    cg_into(a, b, &mut x, tol, max_iter)?;
    // refinement: solve A d = b - A x
    let mut r = vec![0.0; a.n];
    a.matvec(&x, &mut r);
    for i in 0..a.n {
        r[i] = b[i] - r[i];
    }
    let mut d = vec![0.0; a.n];
    cg_into(a, &r, &mut d, tol, max_iter)?;
    for i in 0..a.n {
        x[i] += d[i];
    }
    Ok(x)
}

fn cg_into(a: &Csr, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<()> {
    let n = a.n;
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        x.fill(0.0);
        return Ok(());
    }
    let inv_diag: Vec<f64> = a
        .diag()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut r = vec![0.0; n];
    a.matvec(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for _ in 0..max_iter {
        if norm2(&r) <= tol * bnorm {
            return Ok(());
        }
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::numerical(
                "cg",
                format!("matrix not positive definite (p^T A p = {pap:.3e})"),
            ));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    if norm2(&r) <= 10.0 * tol * bnorm {
        return Ok(());
    }
    Err(Error::numerical(
        "cg",
        format!(
            "no convergence after {max_iter} iterations (relative residual {:.3e})",
            norm2(&r) / bnorm
        ),
    ))
}

/// Symmetric tridiagonal matrix (1D Galerkin systems).
#[derive(Debug, Clone)]
pub struct Tridiag {
    pub diag: Vec<f64>,
    /// sub/super diagonal, length n-1
    pub off: Vec<f64>,
}

/// LDL^T factorization of a symmetric positive definite tridiagonal.
#[derive(Debug, Clone)]
pub struct TridiagFactor {
    d: Vec<f64>,
    l: Vec<f64>,
}

impl Tridiag {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n();
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.off[i] * x[i + 1];
            }
            y[i] = acc;
        }
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let mut y = vec![0.0; self.n()];
        self.matvec(x, &mut y);
        dot(x, &y)
    }

    pub fn factor(&self) -> Result<TridiagFactor> {
        let n = self.n();
        let mut d = vec![0.0; n];
        let mut l = vec![0.0; n.saturating_sub(1)];
        d[0] = self.diag[0];
        if d[0] <= 0.0 {
            return Err(Error::numerical("tridiag", "non-positive pivot"));
        }
        for i in 1..n {
            l[i - 1] = self.off[i - 1] / d[i - 1];
            d[i] = self.diag[i] - l[i - 1] * self.off[i - 1];
            if d[i] <= 0.0 {
                return Err(Error::numerical(
                    "tridiag",
                    format!("non-positive pivot at row {i}"),
                ));
            }
        }
        Ok(TridiagFactor { d, l })
    }
}

impl TridiagFactor {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.d.len();
        let mut x = b.to_vec();
        for i in 1..n {
            x[i] -= self.l[i - 1] * x[i - 1];
        }
        for i in 0..n {
            x[i] /= self.d[i];
        }
        for i in (0..n - 1).rev() {
            let t = self.l[i] * x[i + 1];
            x[i] -= t;
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_csr(n: usize) -> Csr {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        Csr::from_triplets(n, &mut t)
    }

    #[test]
    fn cg_matches_direct_on_laplacian() {
        let n = 50;
        let a = laplace_csr(n);
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let x = cg_solve(&a, &b, 1e-13, 10_000).unwrap();
        let tri = Tridiag {
            diag: vec![2.0; n],
            off: vec![-1.0; n - 1],
        };
        let xd = tri.factor().unwrap().solve(&b);
        for i in 0..n {
            assert!((x[i] - xd[i]).abs() < 1e-9, "i = {i}");
        }
    }

    #[test]
    fn tridiag_solve_residual() {
        let n = 200;
        let tri = Tridiag {
            diag: (0..n).map(|i| 2.0 + (i as f64 * 0.1).cos().abs()).collect(),
            off: vec![-1.0; n - 1],
        };
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sqrt()).collect();
        let x = tri.factor().unwrap().solve(&b);
        let mut r = vec![0.0; n];
        tri.matvec(&x, &mut r);
        for i in 0..n {
            assert!((r[i] - b[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn from_triplets_sums_duplicates() {
        let mut t = vec![(0, 0, 1.0), (0, 0, 2.0), (1, 1, 5.0), (0, 1, 1.5)];
        let a = Csr::from_triplets(2, &mut t);
        let d = a.diag();
        assert_eq!(d, vec![3.0, 5.0]);
        let mut y = vec![0.0; 2];
        a.matvec(&[1.0, 1.0], &mut y);
        assert_eq!(y, vec![4.5, 5.0]);
    }
}
