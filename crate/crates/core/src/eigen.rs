//! Dense symmetric eigendecomposition by cyclic Jacobi rotations.
//!
//! Jacobi is slower than tridiagonal QR but fully deterministic, accurate to
//! working precision on small eigenvalues, and trivially generic over the
//! scalar type. Matrices here are at most a few hundred rows.

use crate::scalar::Scalar;

const MAX_SWEEPS: usize = 100;

/// Square matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> SquareMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }
}

/// Eigenpairs sorted by descending eigenvalue.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    pub values: Vec<T>,
    /// `vectors[j]` is the unit eigenvector for `values[j]`.
    pub vectors: Vec<Vec<T>>,
}

/// Decomposes a symmetric matrix. Only the upper triangle is read.
pub fn symmetric_eigen<T: Scalar>(input: &SquareMatrix<T>) -> SymmetricEigen<T> {
    let n = input.size();
    let mut a = SquareMatrix::from_fn(n, |i, j| if i <= j { input.get(i, j) } else { input.get(j, i) });
    let mut v = SquareMatrix::from_fn(n, |i, j| if i == j { T::one() } else { T::zero() });

    let frob: T = a.data.iter().map(|&x| x * x).sum();
    let tiny = T::epsilon() * T::epsilon() * frob;
    let two = T::one() + T::one();

    for _ in 0..MAX_SWEEPS {
        let mut off = T::zero();
        for p in 0..n {
            for q in p + 1..n {
                off = off + a.get(p, q) * a.get(p, q);
            }
        }
        if off <= tiny || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a.get(p, q);
                if apq == T::zero() {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (two * apq);
                let t = if theta.abs() > T::one() / T::epsilon() {
                    T::one() / (two * theta)
                } else {
                    let s = if theta < T::zero() { -T::one() } else { T::one() };
                    s / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;

                a.set(p, p, app - t * apq);
                a.set(q, q, aqq + t * apq);
                a.set(p, q, T::zero());
                a.set(q, p, T::zero());
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a.get(r, p);
                    let arq = a.get(r, q);
                    let np = c * arp - s * arq;
                    let nq = s * arp + c * arq;
                    a.set(r, p, np);
                    a.set(p, r, np);
                    a.set(r, q, nq);
                    a.set(q, r, nq);
                }
                for r in 0..n {
                    let vrp = v.get(r, p);
                    let vrq = v.get(r, q);
                    v.set(r, p, c * vrp - s * vrq);
                    v.set(r, q, s * vrp + c * vrq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Stable: equal eigenvalues keep their diagonal position.
    order.sort_by(|&i, &j| {
        a.get(j, j)
            .partial_cmp(&a.get(i, i))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    SymmetricEigen {
        values: order.iter().map(|&i| a.get(i, i)).collect(),
        vectors: order
            .iter()
            .map(|&col| (0..n).map(|r| v.get(r, col)).collect())
            .collect(),
    }
}
