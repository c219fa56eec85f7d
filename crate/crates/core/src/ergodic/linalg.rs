use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};

/// Square band matrix with `kl` sub- and `ku` super-diagonals, stored by rows.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix<T = f64> {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<T>,
}

impl<T: Scalar> BandMatrix<T> {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self { n, kl, ku, data: vec![T::zero(); n * (kl + ku + 1)] }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    fn width(&self) -> usize {
        self.kl + self.ku + 1
    }

    fn offset(&self, i: usize, j: usize) -> usize {
        i * self.width() + j + self.kl - i
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        if self.in_band(i, j) {
            self.data[self.offset(i, j)]
        } else {
            T::zero()
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        assert!(self.in_band(i, j), "({i}, {j}) outside the band");
        let k = self.offset(i, j);
        self.data[k] = v;
    }

    /// In-place LU factorization without pivoting. Fill-in stays inside the
    /// band. Suitable for matrices whose leading principal minors are all
    /// nonzero, such as the nonsingular M-matrices arising from generators.
    pub fn factorize(&mut self) -> Result<()> {
        let (n, kl, ku, w) = (self.n, self.kl, self.ku, self.width());
        for k in 0..n {
            let pivot = self.data[k * w + kl];
            if pivot == T::zero() {
                return Err(Error::SingularSystem(format!("zero pivot in row {k}")));
            }
            let jmax = (k + ku).min(n - 1);
            for i in k + 1..=(k + kl).min(n - 1) {
                let ik = i * w + k + kl - i;
                if self.data[ik] == T::zero() {
                    continue;
                }
                let l = self.data[ik] / pivot;
                self.data[ik] = l;
                let (head, tail) = self.data.split_at_mut(i * w);
                let src = &head[k * w + kl + 1..k * w + kl + 1 + (jmax - k)];
                let dst_start = k + 1 + kl - i;
                let dst = &mut tail[dst_start..dst_start + (jmax - k)];
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d -= l * s;
                }
            }
        }
        Ok(())
    }

    /// Solves `LU x = b` in place after [`BandMatrix::factorize`].
    pub fn solve_in_place(&self, b: &mut [T]) {
        let (n, kl, ku, w) = (self.n, self.kl, self.ku, self.width());
        for i in 0..n {
            let lo = i.saturating_sub(kl);
            let mut s = b[i];
            for j in lo..i {
                s -= self.data[i * w + j + kl - i] * b[j];
            }
            b[i] = s;
        }
        for i in (0..n).rev() {
            let hi = (i + ku).min(n - 1);
            let mut s = b[i];
            for j in i + 1..=hi {
                s -= self.data[i * w + j + kl - i] * b[j];
            }
            b[i] = s / self.data[i * w + kl];
        }
    }
}

/// BiCGSTAB with Jacobi preconditioning for `M x = b`, where `apply(x, y)`
/// computes `y = M x`.
pub fn bicgstab<T: Real, F>(apply: F, diag: &[T], b: &[T], tol: T, max_iter: usize) -> Result<Vec<T>>
where
    F: Fn(&[T], &mut [T]),
{
    let n = b.len();
    let dot = |x: &[T], y: &[T]| x.iter().zip(y).map(|(&a, &b)| a * b).sum::<T>();
    let precond = |x: &[T], out: &mut [T]| {
        for ((o, &xi), &di) in out.iter_mut().zip(x).zip(diag) {
            *o = if di == T::zero() { xi } else { xi / di };
        }
    };
    let b_norm = dot(b, b).sqrt();
    if b_norm == T::zero() {
        return Ok(vec![T::zero(); n]);
    }
    let mut x = vec![T::zero(); n];
    let mut r = b.to_vec();
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (T::one(), T::one(), T::one());
    let mut v = vec![T::zero(); n];
    let mut p = vec![T::zero(); n];
    let mut y = vec![T::zero(); n];
    let mut s = vec![T::zero(); n];
    let mut z = vec![T::zero(); n];
    let mut t = vec![T::zero(); n];
    for _ in 0..max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new == T::zero() {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        precond(&p, &mut y);
        apply(&y, &mut v);
        alpha = rho / dot(&r_hat, &v);
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if dot(&s, &s).sqrt() <= tol * b_norm {
            for i in 0..n {
                x[i] += alpha * y[i];
            }
            return Ok(x);
        }
        precond(&s, &mut z);
        apply(&z, &mut t);
        omega = dot(&t, &s) / dot(&t, &t);
        for i in 0..n {
            x[i] += alpha * y[i] + omega * z[i];
            r[i] = s[i] - omega * t[i];
        }
        if dot(&r, &r).sqrt() <= tol * b_norm {
            return Ok(x);
        }
        if omega == T::zero() || !omega.is_finite() {
            break;
        }
    }
    Err(Error::SingularSystem(format!("BiCGSTAB did not reach relative residual {tol:?} in {max_iter} iterations")))
}
