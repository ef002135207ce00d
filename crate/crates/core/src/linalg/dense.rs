//! Dense complex matrix helpers on top of faer.

use faer::linalg::solvers::Solve;
use faer::{c64, Col, Mat, MatRef, Side};

pub type CMat = Mat<c64>;
pub type CVec = Col<c64>;

pub const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
pub const ONE: c64 = c64 { re: 1.0, im: 0.0 };
pub const I: c64 = c64 { re: 0.0, im: 1.0 };

#[inline]
pub fn cx(re: f64, im: f64) -> c64 {
    c64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> c64 {
    c64::new(x, 0.0)
}

pub fn zeros(n: usize, m: usize) -> CMat {
    Mat::zeros(n, m)
}

pub fn eye(n: usize) -> CMat {
    Mat::identity(n, n)
}

/// Real matrix given row by row.
pub fn from_real(rows: &[&[f64]]) -> CMat {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    Mat::from_fn(n, m, |i, j| re(rows[i][j]))
}

/// |i><j| in dimension d.
pub fn ketbra(d: usize, i: usize, j: usize) -> CMat {
    let mut m = zeros(d, d);
    m[(i, j)] = ONE;
    m
}

pub fn basis_vec(d: usize, i: usize) -> CVec {
    let mut v = Col::zeros(d);
    v[i] = ONE;
    v
}

pub fn outer(x: &CVec, y: &CVec) -> CMat {
    Mat::from_fn(x.nrows(), y.nrows(), |i, j| x[i] * y[j].conj())
}

pub fn dagger(a: MatRef<'_, c64>) -> CMat {
    a.adjoint().to_owned()
}

pub fn kron(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> CMat {
    let (ar, ac, br, bc) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    Mat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

pub fn kron_all(parts: &[CMat]) -> CMat {
    parts
        .iter()
        .fold(eye(1), |acc, p| kron(acc.as_ref(), p.as_ref()))
}

pub fn trace(a: MatRef<'_, c64>) -> c64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)]).sum()
}

pub fn scale(a: MatRef<'_, c64>, s: c64) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * s)
}

pub fn commutator(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> CMat {
    a * b - b * a
}

pub fn hermitian_part(a: MatRef<'_, c64>) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5)
}

/// Frobenius norm of the anti-Hermitian part.
pub fn antihermitian_norm(a: MatRef<'_, c64>) -> f64 {
    let d = a - a.adjoint();
    d.norm_l2() * 0.5
}

pub fn is_hermitian(a: MatRef<'_, c64>, tol: f64) -> bool {
    antihermitian_norm(a) <= tol * a.norm_l2().max(1.0)
}

pub fn frobenius(a: MatRef<'_, c64>) -> f64 {
    a.norm_l2()
}

/// Largest absolute column sum.
pub fn one_norm(a: MatRef<'_, c64>) -> f64 {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Spectral decomposition of the Hermitian part: ascending eigenvalues, eigenvector columns.
pub fn eigh(a: MatRef<'_, c64>) -> (Vec<f64>, CMat) {
    let h = hermitian_part(a);
    let e = h
        .self_adjoint_eigen(Side::Lower)
        .expect("Hermitian eigensolver converges");
    let vals = e.S().column_vector().iter().map(|x| x.re).collect();
    (vals, e.U().to_owned())
}

pub fn eigvalsh(a: MatRef<'_, c64>) -> Vec<f64> {
    hermitian_part(a)
        .self_adjoint_eigenvalues(Side::Lower)
        .expect("Hermitian eigensolver converges")
}

pub fn singular_values(a: MatRef<'_, c64>) -> Vec<f64> {
    a.singular_values().expect("SVD converges")
}

/// Schatten-1 norm.
pub fn trace_norm(a: MatRef<'_, c64>) -> f64 {
    if a.nrows() == a.ncols() && antihermitian_norm(a) <= 1e-14 * a.norm_l2() {
        eigvalsh(a).iter().map(|x| x.abs()).sum()
    } else {
        singular_values(a).iter().sum()
    }
}

/// Largest singular value.
pub fn op_norm(a: MatRef<'_, c64>) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    singular_values(a)[0]
}

/// U sign(Λ) U† for the Hermitian part of `a`.
pub fn sign_hermitian(a: MatRef<'_, c64>) -> CMat {
    let (vals, u) = eigh(a);
    let n = vals.len();
    let scaled = Mat::from_fn(n, n, |i, j| {
        let s = if vals[j] >= 0.0 { 1.0 } else { -1.0 };
        u[(i, j)] * s
    });
    &scaled * u.adjoint()
}

/// Unitary factor of the polar decomposition, the maximiser of Re tr(W† a).
pub fn polar_unitary(a: MatRef<'_, c64>) -> CMat {
    let svd = a.svd().expect("SVD converges");
    svd.U() * svd.V().adjoint()
}

/// Largest singular value with its left and right singular vectors.
pub fn top_singular_pair(a: MatRef<'_, c64>) -> (f64, CVec, CVec) {
    let svd = a.svd().expect("SVD converges");
    let s = svd.S().column_vector()[0].re;
    (s, svd.U().col(0).to_owned(), svd.V().col(0).to_owned())
}

/// Top eigenvector of the Hermitian part.
pub fn top_eigvec(a: MatRef<'_, c64>) -> (f64, CVec) {
    let (vals, u) = eigh(a);
    let k = vals.len() - 1;
    (vals[k], u.col(k).to_owned())
}

pub fn min_eigenvalue(a: MatRef<'_, c64>) -> f64 {
    eigvalsh(a).first().copied().unwrap_or(0.0)
}

/// PSD up to eigenvalues >= -tol * (operator norm).
pub fn is_psd(a: MatRef<'_, c64>, tol: f64) -> bool {
    let vals = eigvalsh(a);
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    vals.first().is_none_or(|&v| v >= -tol * scale.max(1.0))
}

/// Von Neumann entropy in nats, negative eigenvalues clipped to zero.
pub fn entropy(rho: MatRef<'_, c64>) -> f64 {
    eigvalsh(rho)
        .into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum()
}

/// Column-stacking vectorisation: vec(X)[i + j*d] = X[i, j].
pub fn vec_of(x: MatRef<'_, c64>) -> CVec {
    let n = x.nrows();
    Col::from_fn(n * x.ncols(), |k| x[(k % n, k / n)])
}

pub fn unvec(v: &CVec, d: usize) -> CMat {
    assert_eq!(v.nrows(), d * d, "vector length is not a square");
    Mat::from_fn(d, d, |i, j| v[i + j * d])
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn add_scaled(acc: &mut CMat, a: MatRef<'_, c64>, s: f64) {
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc[(i, j)] += a[(i, j)] * s;
        }
    }
}

/// Matrix exponential by scaling and squaring with the degree-13 Padé approximant.
pub fn expm(a: MatRef<'_, c64>) -> CMat {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    if n == 0 {
        return zeros(0, 0);
    }
    let norm = one_norm(a);
    if norm == 0.0 {
        return eye(n);
    }
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let factor = 0.5f64.powi(s);
    let a1 = scale(a, re(factor));
    let a2 = &a1 * &a1;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &PADE13;
    let id = eye(n);

    let mut inner_u = zeros(n, n);
    add_scaled(&mut inner_u, a6.as_ref(), b[13]);
    add_scaled(&mut inner_u, a4.as_ref(), b[11]);
    add_scaled(&mut inner_u, a2.as_ref(), b[9]);
    let mut u_poly = &a6 * &inner_u;
    add_scaled(&mut u_poly, a6.as_ref(), b[7]);
    add_scaled(&mut u_poly, a4.as_ref(), b[5]);
    add_scaled(&mut u_poly, a2.as_ref(), b[3]);
    add_scaled(&mut u_poly, id.as_ref(), b[1]);
    let u = &a1 * &u_poly;

    let mut inner_v = zeros(n, n);
    add_scaled(&mut inner_v, a6.as_ref(), b[12]);
    add_scaled(&mut inner_v, a4.as_ref(), b[10]);
    add_scaled(&mut inner_v, a2.as_ref(), b[8]);
    let mut v = &a6 * &inner_v;
    add_scaled(&mut v, a6.as_ref(), b[6]);
    add_scaled(&mut v, a4.as_ref(), b[4]);
    add_scaled(&mut v, a2.as_ref(), b[2]);
    add_scaled(&mut v, id.as_ref(), b[0]);

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.partial_piv_lu().solve(&p);
    for _ in 0..s {
        r = &r * &r;
    }
    r
}
