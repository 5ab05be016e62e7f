//! Dense linear-algebra helpers shared by the engines.
//!
//! Matrices are stored as `nalgebra` column-major matrices throughout; the
//! large Hermitian eigenproblems and matrix products are handed to `faer`
//! through zero-copy views. Everything runs sequentially so results are
//! bitwise reproducible regardless of the surrounding thread pool.

use faer::linalg::matmul::matmul;
use faer::{Accum, MatRef, Par, Side};
use nalgebra::DMatrix;

use crate::C64;

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

fn view(m: &DMatrix<C64>) -> MatRef<'_, C64> {
    MatRef::from_column_major_slice(m.as_slice(), m.nrows(), m.ncols())
}

/// Hermitian eigendecomposition. Only the lower triangle of `m` is read.
pub fn eigh(m: &DMatrix<C64>) -> Eigh {
    assert_eq!(m.nrows(), m.ncols(), "eigh needs a square matrix");
    let n = m.nrows();
    if n == 0 {
        return Eigh { values: Vec::new(), vectors: DMatrix::zeros(0, 0) };
    }
    // Hermitian EVD of a finite matrix does not fail; NaN input is a caller bug.
    let evd = view(m)
        .self_adjoint_eigen(Side::Lower)
        .expect("Hermitian eigendecomposition did not converge");
    let s = evd.S().column_vector();
    let values = (0..n).map(|i| s[i].re).collect();
    let u = evd.U();
    let vectors = DMatrix::from_fn(n, n, |i, j| u[(i, j)]);
    Eigh { values, vectors }
}

/// `a * b`.
pub fn matmul_nn(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let mut out = DMatrix::<C64>::zeros(a.nrows(), b.ncols());
    {
        let (r, c) = (out.nrows(), out.ncols());
        let dst = faer::MatMut::from_column_major_slice_mut(out.as_mut_slice(), r, c);
        matmul(dst, Accum::Replace, view(a), view(b), C64::new(1.0, 0.0), Par::Seq);
    }
    out
}

/// `a† * b`.
pub fn matmul_hn(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let mut out = DMatrix::<C64>::zeros(a.ncols(), b.ncols());
    {
        let (r, c) = (out.nrows(), out.ncols());
        let dst = faer::MatMut::from_column_major_slice_mut(out.as_mut_slice(), r, c);
        matmul(dst, Accum::Replace, view(a).adjoint(), view(b), C64::new(1.0, 0.0), Par::Seq);
    }
    out
}

/// Largest entry-wise modulus of `a − b`.
pub fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Largest modulus among complex entries.
pub fn max_norm<'a, I: IntoIterator<Item = &'a C64>>(xs: I) -> f64 {
    xs.into_iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Pairwise (cascade) summation with a fixed split, so the rounding pattern
/// depends only on the length of the input.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 16;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section minimisation of a unimodal `f` on `[a, b]`.
/// Returns `(x_min, f(x_min))`.
pub fn golden_section_min<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Bisection for a sign change of `f` on `[a, b]`; `f(a)` and `f(b)` must
/// differ in sign.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fa < 0.0) == (fm < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}
