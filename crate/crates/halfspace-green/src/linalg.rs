//! Dense complex matrices of small fixed size (system sizes M are tiny).
//!
//! Inversion uses closed forms for 1x1 and 2x2 and LU with partial pivoting
//! otherwise; Hermitian eigenvalues use a closed form for M <= 2 and cyclic
//! Jacobi sweeps in general.

use num_complex::Complex64;

#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    dim: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(dim: usize) -> Self {
        CMat {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.dim + j] = v;
    }

    #[inline]
    pub fn add_assign_scaled(&mut self, other: &CMat, s: Complex64) {
        debug_assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += s * b;
        }
    }

    pub fn add(&self, other: &CMat) -> CMat {
        let mut out = self.clone();
        out.add_assign_scaled(other, Complex64::new(1.0, 0.0));
        out
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        let mut out = self.clone();
        out.add_assign_scaled(other, Complex64::new(-1.0, 0.0));
        out
    }

    pub fn scale(&self, s: Complex64) -> CMat {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a *= s;
        }
        out
    }

    pub fn matmul(&self, other: &CMat) -> CMat {
        debug_assert_eq!(self.dim, other.dim);
        let d = self.dim;
        let mut out = CMat::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.get(i, k);
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..d {
                    out.data[i * d + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(self.dim, v.len());
        let d = self.dim;
        (0..d)
            .map(|i| (0..d).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    pub fn transpose(&self) -> CMat {
        CMat::from_fn(self.dim, |i, j| self.get(j, i))
    }

    pub fn conj_transpose(&self) -> CMat {
        CMat::from_fn(self.dim, |i, j| self.get(j, i).conj())
    }

    /// (A + A*) / 2.
    pub fn hermitian_part(&self) -> CMat {
        CMat::from_fn(self.dim, |i, j| {
            0.5 * (self.get(i, j) + self.get(j, i).conj())
        })
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn det(&self) -> Complex64 {
        match self.dim {
            0 => Complex64::new(1.0, 0.0),
            1 => self.get(0, 0),
            2 => self.get(0, 0) * self.get(1, 1) - self.get(0, 1) * self.get(1, 0),
            _ => {
                let (lu, parity) = match self.lu_decompose() {
                    Some(x) => x,
                    None => return Complex64::new(0.0, 0.0),
                };
                let mut det = Complex64::new(parity, 0.0);
                for i in 0..self.dim {
                    det *= lu.get(i, i);
                }
                det
            }
        }
    }

    /// Inverse; `None` when numerically singular.
    pub fn inverse(&self) -> Option<CMat> {
        let d = self.dim;
        match d {
            1 => {
                let a = self.get(0, 0);
                if a.norm() == 0.0 {
                    return None;
                }
                let mut m = CMat::zeros(1);
                m.set(0, 0, a.inv());
                Some(m)
            }
            2 => {
                let det = self.det();
                if det.norm() == 0.0 {
                    return None;
                }
                let inv_det = det.inv();
                let mut m = CMat::zeros(2);
                m.set(0, 0, self.get(1, 1) * inv_det);
                m.set(0, 1, -self.get(0, 1) * inv_det);
                m.set(1, 0, -self.get(1, 0) * inv_det);
                m.set(1, 1, self.get(0, 0) * inv_det);
                Some(m)
            }
            _ => self.inverse_lu(),
        }
    }

    /// LU with partial pivoting, in place over a copy; returns (combined LU, permutation parity).
    fn lu_decompose(&self) -> Option<(CMat, f64)> {
        let d = self.dim;
        let mut lu = self.clone();
        let mut parity = 1.0;
        for col in 0..d {
            let mut pivot = col;
            let mut best = lu.get(col, col).norm();
            for row in (col + 1)..d {
                let v = lu.get(row, col).norm();
                if v > best {
                    best = v;
                    pivot = row;
                }
            }
            if best == 0.0 {
                return None;
            }
            if pivot != col {
                for j in 0..d {
                    let a = lu.get(col, j);
                    let b = lu.get(pivot, j);
                    lu.set(col, j, b);
                    lu.set(pivot, j, a);
                }
                parity = -parity;
            }
            let inv_p = lu.get(col, col).inv();
            for row in (col + 1)..d {
                let factor = lu.get(row, col) * inv_p;
                lu.set(row, col, factor);
                for j in (col + 1)..d {
                    let v = lu.get(row, j) - factor * lu.get(col, j);
                    lu.set(row, j, v);
                }
            }
        }
        Some((lu, parity))
    }

    fn inverse_lu(&self) -> Option<CMat> {
        let d = self.dim;
        // Track the permutation explicitly by re-running the pivot choice on columns.
        let mut a = self.clone();
        let mut perm: Vec<usize> = (0..d).collect();
        for col in 0..d {
            let mut pivot = col;
            let mut best = a.get(col, col).norm();
            for row in (col + 1)..d {
                let v = a.get(row, col).norm();
                if v > best {
                    best = v;
                    pivot = row;
                }
            }
            if best == 0.0 {
                return None;
            }
            if pivot != col {
                for j in 0..d {
                    let x = a.get(col, j);
                    let y = a.get(pivot, j);
                    a.set(col, j, y);
                    a.set(pivot, j, x);
                }
                perm.swap(col, pivot);
            }
            let inv_p = a.get(col, col).inv();
            for row in (col + 1)..d {
                let factor = a.get(row, col) * inv_p;
                a.set(row, col, factor);
                for j in (col + 1)..d {
                    let v = a.get(row, j) - factor * a.get(col, j);
                    a.set(row, j, v);
                }
            }
        }
        // Solve A X = I column by column.
        let mut inv = CMat::zeros(d);
        let zero = Complex64::new(0.0, 0.0);
        for rhs_col in 0..d {
            let mut x = vec![zero; d];
            for i in 0..d {
                let mut b = if perm[i] == rhs_col {
                    Complex64::new(1.0, 0.0)
                } else {
                    zero
                };
                for j in 0..i {
                    b -= a.get(i, j) * x[j];
                }
                x[i] = b;
            }
            for i in (0..d).rev() {
                let mut b = x[i];
                for j in (i + 1)..d {
                    b -= a.get(i, j) * x[j];
                }
                x[i] = b * a.get(i, i).inv();
            }
            for i in 0..d {
                inv.set(i, rhs_col, x[i]);
            }
        }
        Some(inv)
    }

    /// Smallest eigenvalue of a Hermitian matrix (real by Hermitian symmetry).
    pub fn min_eigenvalue_hermitian(&self) -> f64 {
        let d = self.dim;
        match d {
            1 => self.get(0, 0).re,
            2 => {
                let a = self.get(0, 0).re;
                let c = self.get(1, 1).re;
                let b = self.get(0, 1);
                let mid = 0.5 * (a + c);
                let rad = (0.25 * (a - c) * (a - c) + b.norm_sqr()).sqrt();
                mid - rad
            }
            _ => {
                let mut h = self.clone();
                // Cyclic Jacobi sweeps with complex rotations.
                for _ in 0..60 {
                    let mut off = 0.0;
                    for p in 0..d {
                        for q in (p + 1)..d {
                            off += h.get(p, q).norm_sqr();
                        }
                    }
                    if off < 1e-28 * (1.0 + h.max_abs() * h.max_abs()) {
                        break;
                    }
                    for p in 0..d {
                        for q in (p + 1)..d {
                            let hpq = h.get(p, q);
                            if hpq.norm() < 1e-300 {
                                continue;
                            }
                            let hpp = h.get(p, p).re;
                            let hqq = h.get(q, q).re;
                            let phase = hpq / hpq.norm();
                            let theta = 0.5 * (2.0 * hpq.norm()).atan2(hpp - hqq);
                            let (s, c) = theta.sin_cos();
                            // Columns then rows: H := R* H R with R the (p,q) rotation.
                            for i in 0..d {
                                let hip = h.get(i, p);
                                let hiq = h.get(i, q);
                                h.set(i, p, hip * c + hiq * phase.conj() * s);
                                h.set(i, q, -hip * phase * s + hiq * c);
                            }
                            for j in 0..d {
                                let hpj = h.get(p, j);
                                let hqj = h.get(q, j);
                                h.set(p, j, hpj * c + hqj * phase * s);
                                h.set(q, j, -hpj * phase.conj() * s + hqj * c);
                            }
                        }
                    }
                }
                (0..d).map(|i| h.get(i, i).re).fold(f64::INFINITY, f64::min)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn inverse_roundtrip_small() {
        for dim in 1..=4 {
            let m = CMat::from_fn(dim, |i, j| {
                cx(
                    1.0 + (i * dim + j) as f64 + if i == j { 3.0 * dim as f64 } else { 0.0 },
                    0.3 * (i as f64 - j as f64),
                )
            });
            let inv = m.inverse().expect("invertible");
            let prod = m.matmul(&inv);
            for i in 0..dim {
                for j in 0..dim {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert_relative_eq!(prod.get(i, j).re, expect, epsilon = 1e-12);
                    assert_relative_eq!(prod.get(i, j).im, 0.0, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn det_triangular() {
        let mut m = CMat::identity(3);
        m.set(0, 0, cx(2.0, 0.0));
        m.set(1, 1, cx(0.0, 1.0));
        m.set(2, 2, cx(3.0, 0.0));
        m.set(0, 2, cx(7.0, -1.0));
        let d = m.det();
        assert_relative_eq!(d.re, 0.0, epsilon = 1e-14);
        assert_relative_eq!(d.im, 6.0, epsilon = 1e-14);
    }

    #[test]
    fn singular_matrix_has_no_inverse() {
        let m = CMat::from_fn(2, |i, _| cx(i as f64 + 1.0, 0.0));
        assert!(m.inverse().is_none());
    }

    #[test]
    fn hermitian_min_eigenvalue() {
        // [[2, i], [-i, 2]] has eigenvalues 1 and 3.
        let mut h = CMat::zeros(2);
        h.set(0, 0, cx(2.0, 0.0));
        h.set(1, 1, cx(2.0, 0.0));
        h.set(0, 1, cx(0.0, 1.0));
        h.set(1, 0, cx(0.0, -1.0));
        assert_relative_eq!(h.min_eigenvalue_hermitian(), 1.0, epsilon = 1e-12);

        // 3x3 with known spectrum: diag(1,4,9) conjugated by a rotation stays {1,4,9}.
        let mut m = CMat::zeros(3);
        m.set(0, 0, cx(3.0, 0.0));
        m.set(1, 1, cx(5.0, 0.0));
        m.set(2, 2, cx(6.0, 0.0));
        m.set(0, 1, cx(1.0, 2.0));
        m.set(1, 0, cx(1.0, -2.0));
        m.set(1, 2, cx(0.5, -0.5));
        m.set(2, 1, cx(0.5, 0.5));
        let min = m.min_eigenvalue_hermitian();
        // Oracle from the characteristic polynomial evaluated by bisection.
        let charpoly = |x: f64| {
            // det(M - xI) for this specific Hermitian matrix, expanded.
            let a = 3.0 - x;
            let b = 5.0 - x;
            let c = 6.0 - x;
            a * (b * c - 0.5) - 5.0 * c
        };
        let mut lo = 0.0;
        let mut hi = 3.0;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if charpoly(mid) * charpoly(lo) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert_relative_eq!(min, lo, epsilon = 1e-9);
    }
}
