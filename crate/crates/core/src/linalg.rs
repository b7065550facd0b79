//! Dense complex linear algebra: LU, inverse, matrix exponential and a
//! non-Hermitian eigensolver (balancing, Householder Hessenberg reduction,
//! single-shift complex QR to Schur form, triangular back-substitution).

use ndarray::{Array1, Array2, ArrayView2, Axis};
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{re, Real, C};

pub type CMat<T> = Array2<C<T>>;
pub type CVec<T> = Array1<C<T>>;

trait L1<T> {
    fn l1(&self) -> T;
}

impl<T: Real> L1<T> for C<T> {
    #[inline]
    fn l1(&self) -> T {
        self.re.abs() + self.im.abs()
    }
}

pub fn zeros<T: Real>(n: usize, m: usize) -> CMat<T> {
    Array2::from_elem((n, m), C::zero())
}

pub fn identity<T: Real>(n: usize) -> CMat<T> {
    let mut a = zeros(n, n);
    for i in 0..n {
        a[[i, i]] = C::one();
    }
    a
}

/// Conjugate transpose.
pub fn adjoint<T: Real>(a: &ArrayView2<C<T>>) -> CMat<T> {
    a.t().mapv(|z| z.conj())
}

pub fn matmul<T: Real>(a: &ArrayView2<C<T>>, b: &ArrayView2<C<T>>) -> CMat<T> {
    a.dot(b)
}

/// Maximum absolute column sum.
pub fn norm1<T: Real>(a: &ArrayView2<C<T>>) -> T {
    a.axis_iter(Axis(1))
        .map(|col| col.iter().fold(T::zero(), |s, z| s + z.norm()))
        .fold(T::zero(), T::max)
}

pub fn frobenius<T: Real>(a: &ArrayView2<C<T>>) -> T {
    a.iter().fold(T::zero(), |s, z| s + z.norm_sqr()).sqrt()
}

pub fn vec_norm<T: Real>(v: &[C<T>]) -> T {
    v.iter().fold(T::zero(), |s, z| s + z.norm_sqr()).sqrt()
}

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu<T: Real> {
    lu: CMat<T>,
    perm: Vec<usize>,
    sign: T,
}

impl<T: Real> Lu<T> {
    pub fn new(a: &ArrayView2<C<T>>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::InvalidParams("LU of non-square matrix".into()));
        }
        let mut lu = a.to_owned();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = T::one();
        let scale = norm1(a).max(T::min_positive_value());
        let tiny = scale * T::epsilon() * T::lit(1e-3);
        for k in 0..n {
            let (mut p, mut best) = (k, T::zero());
            for i in k..n {
                let v = lu[[i, k]].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= tiny {
                return Err(Error::SingularMatrix);
            }
            if p != k {
                for j in 0..n {
                    lu.swap([k, j], [p, j]);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let piv = lu[[k, k]];
            for i in k + 1..n {
                let f = lu[[i, k]] / piv;
                lu[[i, k]] = f;
                if f != C::zero() {
                    for j in k + 1..n {
                        let u = lu[[k, j]];
                        lu[[i, j]] -= f * u;
                    }
                }
            }
        }
        Ok(Self { lu, perm, sign })
    }

    pub fn det(&self) -> C<T> {
        let n = self.lu.nrows();
        (0..n).fold(re(self.sign), |d, i| d * self.lu[[i, i]])
    }

    pub fn solve_vec(&self, b: &[C<T>]) -> CVec<T> {
        let n = self.lu.nrows();
        let mut x: Vec<C<T>> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[[i, j]] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[[i, j]] * x[j];
            }
            x[i] = s / self.lu[[i, i]];
        }
        Array1::from(x)
    }

    pub fn inverse(&self) -> CMat<T> {
        let n = self.lu.nrows();
        let mut inv = zeros(n, n);
        let mut e = vec![C::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|z| *z = C::zero());
            e[j] = C::one();
            let col = self.solve_vec(&e);
            inv.column_mut(j).assign(&col);
        }
        inv
    }
}

pub fn inverse<T: Real>(a: &ArrayView2<C<T>>) -> Result<CMat<T>> {
    Ok(Lu::new(a)?.inverse())
}

pub fn det<T: Real>(a: &ArrayView2<C<T>>) -> C<T> {
    Lu::new(a).map(|lu| lu.det()).unwrap_or_else(|_| C::zero())
}

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
pub fn expm<T: Real>(a: &ArrayView2<C<T>>) -> CMat<T> {
    let n = a.nrows();
    let norm = norm1(a);
    let mut s = 0i32;
    let half = T::lit(0.5);
    let mut scaled = norm;
    while scaled > half {
        scaled = scaled * half;
        s += 1;
    }
    let factor = T::lit(2.0).powi(-s);
    let x = a.mapv(|z| z * factor);
    let mut result = identity::<T>(n);
    let mut term = identity::<T>(n);
    for k in 1..=24 {
        term = term.dot(&x).mapv(|z| z / T::from_usize_lossy(k));
        result = result + &term;
        if frobenius(&term.view()) <= T::epsilon() * frobenius(&result.view()) {
            break;
        }
    }
    for _ in 0..s {
        result = result.dot(&result);
    }
    result
}

/// Diagonal balancing by powers of two (no permutations). Returns the scaled
/// matrix `D^-1 A D` and the diagonal of `D`.
fn balance<T: Real>(a: &CMat<T>) -> (CMat<T>, Vec<T>) {
    let n = a.nrows();
    let mut b = a.clone();
    let mut d = vec![T::one(); n];
    let radix = T::lit(2.0);
    let sqrdx = radix * radix;
    let mut done = false;
    let mut sweeps = 0;
    while !done && sweeps < 100 {
        done = true;
        sweeps += 1;
        for i in 0..n {
            let mut c = T::zero();
            let mut r = T::zero();
            for j in 0..n {
                if j != i {
                    c += b[[j, i]].l1();
                    r += b[[i, j]].l1();
                }
            }
            if c == T::zero() || r == T::zero() {
                continue;
            }
            let mut g = r / radix;
            let mut f = T::one();
            let s = c + r;
            while c < g {
                f *= radix;
                c *= sqrdx;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= sqrdx;
            }
            if (c + r) / f < T::lit(0.95) * s {
                done = false;
                d[i] *= f;
                let inv = T::one() / f;
                for j in 0..n {
                    b[[i, j]] = b[[i, j]] * inv;
                    b[[j, i]] = b[[j, i]] * f;
                }
            }
        }
    }
    (b, d)
}

/// Householder reduction to upper Hessenberg form, `A = Q H Q^H`.
fn hessenberg<T: Real>(a: &mut CMat<T>, q: &mut CMat<T>) {
    let n = a.nrows();
    if n < 3 {
        return;
    }
    let mut v = vec![C::<T>::zero(); n];
    for k in 0..n - 2 {
        let alpha = (k + 1..n).fold(T::zero(), |s, i| s + a[[i, k]].norm_sqr()).sqrt();
        if alpha == T::zero() {
            continue;
        }
        let x0 = a[[k + 1, k]];
        let phase = if x0.norm() == T::zero() {
            C::one()
        } else {
            x0 / x0.norm()
        };
        // v = x + phase*alpha*e_1, reflector P = I - 2 v v^H / (v^H v)
        for i in 0..n {
            v[i] = C::zero();
        }
        for i in k + 1..n {
            v[i] = a[[i, k]];
        }
        v[k + 1] += phase * alpha;
        let vnorm2 = (k + 1..n).fold(T::zero(), |s, i| s + v[i].norm_sqr());
        if vnorm2 == T::zero() {
            continue;
        }
        let two = T::lit(2.0) / vnorm2;
        // A <- P A
        for j in 0..n {
            let mut s = C::zero();
            for i in k + 1..n {
                s += v[i].conj() * a[[i, j]];
            }
            let s = s * two;
            for i in k + 1..n {
                a[[i, j]] -= v[i] * s;
            }
        }
        // A <- A P, Q <- Q P
        for m in [&mut *a, &mut *q] {
            for i in 0..m.nrows() {
                let mut s = C::zero();
                for j in k + 1..n {
                    s += m[[i, j]] * v[j];
                }
                let s = s * two;
                for j in k + 1..n {
                    m[[i, j]] -= s * v[j].conj();
                }
            }
        }
        for i in k + 2..n {
            a[[i, k]] = C::zero();
        }
    }
}

/// Rotation `[[c, s], [-conj(s), c]]` mapping `(x, y)` to `(r, 0)`.
#[inline]
fn givens<T: Real>(x: C<T>, y: C<T>) -> (T, C<T>) {
    let ax = x.norm();
    let ay = y.norm();
    if ay == T::zero() {
        return (T::one(), C::zero());
    }
    if ax == T::zero() {
        return (T::zero(), C::one());
    }
    let r = ax.hypot(ay);
    (ax / r, (x / ax) * y.conj() / r)
}

#[inline]
fn rot_rows<T: Real>(m: &mut CMat<T>, i: usize, c: T, s: C<T>, cols: std::ops::Range<usize>) {
    let nc = m.ncols();
    if let Some(data) = m.as_slice_mut() {
        let (top, bottom) = data.split_at_mut((i + 1) * nc);
        let r1 = &mut top[i * nc + cols.start..i * nc + cols.end];
        let r2 = &mut bottom[cols.start..cols.end];
        for (x, y) in r1.iter_mut().zip(r2.iter_mut()) {
            let (t1, t2) = (*x, *y);
            *x = t1 * c + s * t2;
            *y = -s.conj() * t1 + t2 * c;
        }
        return;
    }
    for j in cols {
        let t1 = m[[i, j]];
        let t2 = m[[i + 1, j]];
        m[[i, j]] = t1 * c + s * t2;
        m[[i + 1, j]] = -s.conj() * t1 + t2 * c;
    }
}

#[inline]
fn rot_cols<T: Real>(m: &mut CMat<T>, j: usize, c: T, s: C<T>, rows: std::ops::Range<usize>) {
    let nc = m.ncols();
    if let Some(data) = m.as_slice_mut() {
        for i in rows {
            let pair = &mut data[i * nc + j..i * nc + j + 2];
            let (t1, t2) = (pair[0], pair[1]);
            pair[0] = t1 * c + t2 * s.conj();
            pair[1] = -t1 * s + t2 * c;
        }
        return;
    }
    for i in rows {
        let t1 = m[[i, j]];
        let t2 = m[[i, j + 1]];
        m[[i, j]] = t1 * c + t2 * s.conj();
        m[[i, j + 1]] = -t1 * s + t2 * c;
    }
}

/// Eigenvalue of `[[a, b], [c, d]]` closer to `d`.
fn wilkinson<T: Real>(a: C<T>, b: C<T>, c: C<T>, d: C<T>) -> C<T> {
    let half = T::lit(0.5);
    let m = (a - d) * half;
    let disc = (m * m + b * c).sqrt();
    let s1 = d + m + disc;
    let s2 = d + m - disc;
    if (s1 - d).norm() < (s2 - d).norm() {
        s1
    } else {
        s2
    }
}

/// Complex Schur decomposition of an upper Hessenberg `h` in place; `z`
/// accumulates the unitary transformations.
fn schur<T: Real>(h: &mut CMat<T>, z: &mut CMat<T>) -> Result<()> {
    let n = h.nrows();
    if n < 2 {
        return Ok(());
    }
    let eps = T::epsilon();
    let hnorm = frobenius(&h.view()).max(T::min_positive_value());
    let max_iter = 30 * n;
    let full = z.nrows() > 0;
    let mut total = 0usize;
    let mut iter = 0usize;
    let mut hi = n - 1;
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let s = h[[l - 1, l - 1]].l1() + h[[l, l]].l1();
            let s = if s == T::zero() { hnorm } else { s };
            if h[[l, l - 1]].l1() <= eps * s {
                h[[l, l - 1]] = C::zero();
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > max_iter {
            return Err(Error::NoConvergence { index: hi });
        }
        let mu = if iter % 10 == 0 {
            let sub = h[[hi, hi - 1]].re.abs()
                + if hi >= 2 {
                    h[[hi - 1, hi - 2]].re.abs()
                } else {
                    T::zero()
                };
            h[[hi, hi]] + re(sub * T::lit(0.75))
        } else {
            wilkinson(
                h[[hi - 1, hi - 1]],
                h[[hi - 1, hi]],
                h[[hi, hi - 1]],
                h[[hi, hi]],
            )
        };
        // without Schur vectors only the active window [l, hi] is needed
        let (row_end, col_start) = if full { (n, 0) } else { (hi + 1, l) };
        let (c, s) = givens(h[[l, l]] - mu, h[[l + 1, l]]);
        rot_rows(h, l, c, s, l..row_end);
        rot_cols(h, l, c, s, col_start..(l + 3).min(hi + 1));
        rot_cols(z, l, c, s, 0..z.nrows());
        for k in l + 1..hi {
            let (c, s) = givens(h[[k, k - 1]], h[[k + 1, k - 1]]);
            rot_rows(h, k, c, s, k - 1..row_end);
            h[[k + 1, k - 1]] = C::zero();
            rot_cols(h, k, c, s, col_start..(k + 3).min(hi + 1));
            rot_cols(z, k, c, s, 0..z.nrows());
        }
    }
    Ok(())
}

/// Eigen-decomposition `A = R diag(values) L^H` with `L^H R = I`.
#[derive(Debug, Clone)]
pub struct Eigen<T: Real> {
    pub values: Vec<C<T>>,
    /// Right eigenvectors as unit-norm columns.
    pub right: CMat<T>,
    /// Left eigenvectors as columns, scaled so that `left^H right = I`.
    pub left: CMat<T>,
    /// `||R||_1 ||R^-1||_1`.
    pub condition: T,
}

/// Eigenvalues only, unsorted.
pub fn eigenvalues<T: Real>(a: &ArrayView2<C<T>>) -> Result<Vec<C<T>>> {
    let n = a.nrows();
    let (mut h, _) = balance(&a.to_owned());
    // zero-row accumulators: updates of Q and Z become no-ops
    let mut z = zeros::<T>(0, n);
    hessenberg(&mut h, &mut z);
    schur(&mut h, &mut z)?;
    Ok((0..n).map(|i| h[[i, i]]).collect())
}

/// Unit right eigenvector for an eigenvalue `lambda` of `a` by inverse
/// iteration with a slightly perturbed shift.
pub fn eigenvector<T: Real>(a: &ArrayView2<C<T>>, lambda: C<T>) -> Result<CVec<T>> {
    let n = a.nrows();
    let scale = norm1(a).max(T::one());
    let mut delta = scale * T::epsilon() * T::lit(16.0);
    for _ in 0..8 {
        let mut shifted = a.to_owned();
        let mu = lambda + C::new(delta, delta);
        for i in 0..n {
            shifted[[i, i]] -= mu;
        }
        let lu = match Lu::new(&shifted.view()) {
            Ok(lu) => lu,
            Err(Error::SingularMatrix) => {
                delta = delta * T::lit(64.0);
                continue;
            }
            Err(e) => return Err(e),
        };
        let mut x: Vec<C<T>> = (0..n)
            .map(|i| C::new(T::one() + T::from_usize_lossy(i % 7) * T::lit(0.1), T::zero()))
            .collect();
        for _ in 0..3 {
            let y = lu.solve_vec(&x);
            let nrm = vec_norm(y.as_slice().unwrap());
            x = y.iter().map(|z| *z / nrm).collect();
        }
        return Ok(Array1::from(x));
    }
    Err(Error::SingularMatrix)
}

/// Full eigen-decomposition sorted by `(Re, Im)` ascending.
pub fn eig<T: Real>(a: &ArrayView2<C<T>>) -> Result<Eigen<T>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::InvalidParams("eigenproblem for non-square matrix".into()));
    }
    if a.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::InvalidParams("non-finite matrix entry".into()));
    }
    if n == 0 {
        return Ok(Eigen {
            values: vec![],
            right: zeros(0, 0),
            left: zeros(0, 0),
            condition: T::one(),
        });
    }
    let (mut h, d) = balance(&a.to_owned());
    let mut z = identity::<T>(n);
    hessenberg(&mut h, &mut z);
    schur(&mut h, &mut z)?;

    // eigenvectors of the triangular factor
    let tnorm = frobenius(&h.view()).max(T::min_positive_value());
    let small = tnorm * T::epsilon();
    let mut v = zeros::<T>(n, n);
    for k in 0..n {
        let lam = h[[k, k]];
        v[[k, k]] = C::one();
        for i in (0..k).rev() {
            let mut s = C::<T>::zero();
            for j in i + 1..=k {
                s += h[[i, j]] * v[[j, k]];
            }
            let mut den = h[[i, i]] - lam;
            if den.norm() < small {
                den = re(small);
            }
            v[[i, k]] = -s / den;
        }
    }
    let mut right = z.dot(&v);
    for i in 0..n {
        let di = d[i];
        right.row_mut(i).mapv_inplace(|x| x * di);
    }
    for k in 0..n {
        let nrm = vec_norm(&right.column(k).to_vec());
        if nrm > T::zero() {
            right.column_mut(k).mapv_inplace(|x| x / nrm);
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let vals: Vec<C<T>> = (0..n).map(|i| h[[i, i]]).collect();
    order.sort_by(|&x, &y| {
        vals[x]
            .re
            .partial_cmp(&vals[y].re)
            .unwrap()
            .then(vals[x].im.partial_cmp(&vals[y].im).unwrap())
    });
    let values: Vec<C<T>> = order.iter().map(|&i| vals[i]).collect();
    let right = Array2::from_shape_fn((n, n), |(i, j)| right[[i, order[j]]]);

    let inv = match Lu::new(&right.view()) {
        Ok(lu) => lu.inverse(),
        Err(_) => return Err(Error::Defective),
    };
    let condition = norm1(&right.view()) * norm1(&inv.view());
    if !(condition * T::epsilon() < T::lit(1e-2)) {
        return Err(Error::Defective);
    }
    let left = adjoint(&inv.view());
    Ok(Eigen {
        values,
        right,
        left,
        condition,
    })
}

/// Largest entry of `|L^H R - I|`.
pub fn biorthogonality_error<T: Real>(e: &Eigen<T>) -> T {
    let g = adjoint(&e.left.view()).dot(&e.right);
    let n = g.nrows();
    let mut worst = T::zero();
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { C::one() } else { C::zero() };
            worst = worst.max((g[[i, j]] - target).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    type Z = C<f64>;

    fn c(re: f64, im: f64) -> Z {
        Z::new(re, im)
    }

    fn residual(a: &CMat<f64>, e: &Eigen<f64>) -> f64 {
        let ar = a.dot(&e.right);
        let mut worst: f64 = 0.0;
        for k in 0..a.nrows() {
            for i in 0..a.nrows() {
                worst = worst.max((ar[[i, k]] - e.right[[i, k]] * e.values[k]).norm());
            }
        }
        worst
    }

    fn pseudo_random(n: usize, seed: u64) -> CMat<f64> {
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        Array2::from_shape_fn((n, n), |_| c(next(), next()))
    }

    #[test]
    fn scalar_matrix() {
        let a = array![[c(0.3, -0.2)]];
        let e = eig(&a.view()).unwrap();
        assert_eq!(e.values, vec![c(0.3, -0.2)]);
        assert_abs_diff_eq!(biorthogonality_error(&e), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn two_by_two_triangular() {
        let a = array![[c(1.0, 0.0), c(2.0, 1.0)], [c(0.0, 0.0), c(-1.0, 0.5)]];
        let e = eig(&a.view()).unwrap();
        assert_abs_diff_eq!((e.values[0] - c(-1.0, 0.5)).norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!((e.values[1] - c(1.0, 0.0)).norm(), 0.0, epsilon = 1e-14);
        assert!(residual(&a, &e) < 1e-13);
    }

    #[test]
    fn random_matrices() {
        for (n, seed) in [(3, 1), (7, 2), (20, 3), (60, 4)] {
            let a = pseudo_random(n, seed);
            let e = eig(&a.view()).unwrap();
            assert!(residual(&a, &e) < 1e-11, "n={n}");
            assert!(biorthogonality_error(&e) < 1e-10, "n={n}");
            let tr: Z = (0..n).map(|i| a[[i, i]]).sum();
            let sum: Z = e.values.iter().sum();
            assert_abs_diff_eq!((tr - sum).norm(), 0.0, epsilon = 1e-11);
            for w in e.values.windows(2) {
                assert!(w[0].re <= w[1].re);
            }
        }
    }

    #[test]
    fn defective_jordan_block() {
        let a = array![[c(1.0, 0.0), c(1.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]];
        assert_eq!(eig(&a.view()).unwrap_err(), Error::Defective);
    }

    #[test]
    fn lu_inverse_and_det() {
        let a = pseudo_random(9, 11);
        let inv = inverse(&a.view()).unwrap();
        let prod = a.dot(&inv);
        for i in 0..9 {
            for j in 0..9 {
                let t = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!((prod[[i, j]] - c(t, 0.0)).norm(), 0.0, epsilon = 1e-12);
            }
        }
        let e = eigenvalues(&a.view()).unwrap();
        let prod_eig = e.iter().fold(c(1.0, 0.0), |p, &z| p * z);
        assert_abs_diff_eq!((det(&a.view()) - prod_eig).norm(), 0.0, epsilon = 1e-12);
        let sing = array![[c(1.0, 0.0), c(2.0, 0.0)], [c(2.0, 0.0), c(4.0, 0.0)]];
        assert_eq!(inverse(&sing.view()).unwrap_err(), Error::SingularMatrix);
    }

    #[test]
    fn expm_matches_eigen() {
        let a = pseudo_random(6, 5).mapv(|z| z * 3.0);
        let e = eig(&a.view()).unwrap();
        let ex = expm(&a.view());
        let n = 6;
        let mut diag = zeros::<f64>(n, n);
        for i in 0..n {
            diag[[i, i]] = e.values[i].exp();
        }
        let via = e.right.dot(&diag).dot(&adjoint(&e.left.view()));
        for (x, y) in ex.iter().zip(via.iter()) {
            assert_abs_diff_eq!((x - y).norm(), 0.0, epsilon = 1e-10);
        }
        let one = array![[c(0.0, std::f64::consts::PI)]];
        assert_abs_diff_eq!((expm(&one.view())[[0, 0]] - c(-1.0, 0.0)).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn f32_eigensolver() {
        let a = pseudo_random(8, 9).mapv(|z| C::<f32>::new(z.re as f32, z.im as f32));
        let e = eig(&a.view()).unwrap();
        assert!(biorthogonality_error(&e) < 1e-3);
    }
}
