//! Superoperators on d×d matrices (column-stacked, so ρ ↦ AρB is Bᵀ⊗A),
//! GKLS generators, and the generator abstraction used by the dynamics.

use std::sync::OnceLock;

use faer::{c64, Mat, MatRef};

use super::dense::{
    cx, dagger, eye, is_hermitian, kron, min_eigenvalue, re, scale, unvec, vec_of, CMat, I, ONE,
    ZERO,
};
use crate::error::{Error, Result};

/// Relative tolerance for Hermiticity and trace identities.
pub const STRUCTURE_TOL: f64 = 1e-10;
/// PSD checks accept eigenvalues down to -PSD_TOL times the matrix norm.
pub const PSD_TOL: f64 = 1e-9;
/// Largest Hilbert-space dimension for which dense superoperators are built.
pub const DENSE_DIM_LIMIT: usize = 128;

#[derive(Clone, Debug, Default)]
struct Flags {
    hermiticity_preserving: OnceLock<bool>,
    trace_annihilating: OnceLock<bool>,
    trace_preserving: OnceLock<bool>,
}

/// Dense linear map on d×d matrices, stored as a d²×d² matrix.
#[derive(Clone, Debug)]
pub struct SuperOp {
    dim: usize,
    matrix: CMat,
    flags: Flags,
}

impl PartialEq for SuperOp {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.matrix == other.matrix
    }
}

pub fn check_dense_dim(dim: usize) -> Result<()> {
    if dim > DENSE_DIM_LIMIT {
        Err(Error::Resource {
            what: "dense superoperator dimension",
            needed: dim,
            limit: DENSE_DIM_LIMIT,
        })
    } else {
        Ok(())
    }
}

/// Permutation P with P·vec(X) = vec(Xᵀ), as an index map.
fn transpose_index(k: usize, d: usize) -> usize {
    (k % d) * d + k / d
}

impl SuperOp {
    pub fn new(dim: usize, matrix: CMat) -> Result<Self> {
        let n = dim * dim;
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::domain(format!(
                "superoperator on dimension {dim} needs a {n}x{n} matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(SuperOp {
            dim,
            matrix,
            flags: Flags::default(),
        })
    }

    pub fn zero(dim: usize) -> Self {
        SuperOp::new(dim, Mat::zeros(dim * dim, dim * dim)).expect("shape is consistent")
    }

    pub fn identity(dim: usize) -> Self {
        SuperOp::new(dim, eye(dim * dim)).expect("shape is consistent")
    }

    /// ρ ↦ AρB.
    pub fn sandwich(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Result<Self> {
        let d = a.nrows();
        if a.ncols() != d || b.nrows() != d || b.ncols() != d {
            return Err(Error::domain("sandwich factors must be square of equal size"));
        }
        SuperOp::new(d, kron(b.transpose(), a))
    }

    /// ρ ↦ tr(ρ)·σ.
    pub fn replacement(sigma: MatRef<'_, c64>) -> Result<Self> {
        let d = sigma.nrows();
        let n = d * d;
        let m = Mat::from_fn(n, n, |r, c| {
            if c % d == c / d {
                sigma[(r % d, r / d)]
            } else {
                ZERO
            }
        });
        SuperOp::new(d, m)
    }

    /// ρ ↦ Σ_j A_j ρ A_j†.
    pub fn kraus(ops: &[CMat]) -> Result<Self> {
        let d = ops
            .first()
            .map(|k| k.nrows())
            .ok_or_else(|| Error::domain("at least one Kraus operator is needed"))?;
        let mut acc = SuperOp::zero(d);
        for k in ops {
            acc = acc.add(&SuperOp::sandwich(k.as_ref(), dagger(k.as_ref()).as_ref())?)?;
        }
        Ok(acc)
    }

    /// Transpose map X ↦ Xᵀ.
    pub fn transpose_map(dim: usize) -> Self {
        let n = dim * dim;
        let m = Mat::from_fn(n, n, |r, c| if transpose_index(c, dim) == r { ONE } else { ZERO });
        SuperOp::new(dim, m).expect("shape is consistent")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn apply(&self, x: MatRef<'_, c64>) -> CMat {
        unvec(&(&self.matrix * vec_of(x)), self.dim)
    }

    fn check_same(&self, other: &SuperOp) -> Result<()> {
        if self.dim == other.dim {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "superoperator dimensions differ: {} vs {}",
                self.dim, other.dim
            )))
        }
    }

    pub fn add(&self, other: &SuperOp) -> Result<SuperOp> {
        self.check_same(other)?;
        SuperOp::new(self.dim, &self.matrix + &other.matrix)
    }

    pub fn sub(&self, other: &SuperOp) -> Result<SuperOp> {
        self.check_same(other)?;
        SuperOp::new(self.dim, &self.matrix - &other.matrix)
    }

    pub fn scaled(&self, s: f64) -> SuperOp {
        SuperOp::new(self.dim, scale(self.matrix.as_ref(), re(s))).expect("shape is consistent")
    }

    /// self ∘ other.
    pub fn compose(&self, other: &SuperOp) -> Result<SuperOp> {
        self.check_same(other)?;
        SuperOp::new(self.dim, &self.matrix * &other.matrix)
    }

    /// Dual for the pairing tr(A·T(B)) = tr(T*(A)·B); matrix P·Mᵀ·P.
    pub fn dual(&self) -> SuperOp {
        let d = self.dim;
        let n = d * d;
        let m = Mat::from_fn(n, n, |r, c| {
            self.matrix[(transpose_index(c, d), transpose_index(r, d))]
        });
        SuperOp::new(d, m).expect("shape is consistent")
    }

    /// Hilbert–Schmidt adjoint M†; coincides with `dual` for Hermiticity-preserving maps.
    pub fn hs_adjoint(&self) -> SuperOp {
        SuperOp::new(self.dim, dagger(self.matrix.as_ref())).expect("shape is consistent")
    }

    /// Choi matrix Σ_ij |i><j| ⊗ T(|i><j|), input factor first.
    pub fn choi(&self) -> ChoiMatrix {
        let d = self.dim;
        let n = d * d;
        let m = Mat::from_fn(n, n, |r, c| {
            let (i, k) = (r / d, r % d);
            let (j, l) = (c / d, c % d);
            self.matrix[(k + l * d, i + j * d)]
        });
        ChoiMatrix { matrix: m }
    }

    pub fn exp(&self, t: f64) -> SuperOp {
        let m = super::dense::expm(scale(self.matrix.as_ref(), re(t)).as_ref());
        SuperOp::new(self.dim, m).expect("shape is consistent")
    }

    fn scale_norm(&self) -> f64 {
        self.matrix.norm_l2().max(1.0)
    }

    fn compute_hermiticity_preserving(&self) -> bool {
        let d = self.dim;
        let n = d * d;
        let mut worst = 0.0f64;
        for c in 0..n {
            for r in 0..n {
                let a = self.matrix[(r, c)].conj();
                let b = self.matrix[(transpose_index(r, d), transpose_index(c, d))];
                worst = worst.max((a - b).norm());
            }
        }
        worst <= STRUCTURE_TOL * self.scale_norm()
    }

    /// Row functional X ↦ tr(T(X)) as a vector of length d².
    fn trace_row(&self) -> Vec<c64> {
        let d = self.dim;
        (0..d * d)
            .map(|c| (0..d).map(|k| self.matrix[(k * (d + 1), c)]).sum())
            .collect()
    }

    fn trace_defect(&self, target_identity: bool) -> f64 {
        let d = self.dim;
        self.trace_row()
            .iter()
            .enumerate()
            .map(|(c, v)| {
                let want = if target_identity && c % d == c / d { ONE } else { ZERO };
                (v - want).norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn is_hermiticity_preserving(&self) -> bool {
        *self
            .flags
            .hermiticity_preserving
            .get_or_init(|| self.compute_hermiticity_preserving())
    }

    pub fn is_trace_annihilating(&self) -> bool {
        *self
            .flags
            .trace_annihilating
            .get_or_init(|| self.trace_defect(false) <= STRUCTURE_TOL * self.scale_norm())
    }

    pub fn is_trace_preserving(&self) -> bool {
        *self
            .flags
            .trace_preserving
            .get_or_init(|| self.trace_defect(true) <= STRUCTURE_TOL * self.scale_norm())
    }

    /// Largest residual of tr(T(X)) = 0 over matrix units.
    pub fn trace_annihilation_residual(&self) -> f64 {
        self.trace_defect(false)
    }

    pub fn is_valid_lindbladian(&self, tol: f64) -> ValidityReport {
        let scale = self.scale_norm();
        let d = self.dim;
        let n = d * d;
        let hp = if tol == STRUCTURE_TOL {
            self.is_hermiticity_preserving()
        } else {
            let mut worst = 0.0f64;
            for c in 0..n {
                for r in 0..n {
                    let a = self.matrix[(r, c)].conj();
                    let b = self.matrix[(transpose_index(r, d), transpose_index(c, d))];
                    worst = worst.max((a - b).norm());
                }
            }
            worst <= tol * scale
        };
        let ta = self.trace_defect(false) <= tol * scale;
        let choi = self.choi();
        let ccp = hp && choi.compressed_min_eigenvalue() >= -PSD_TOL.max(tol) * choi.norm().max(1.0);
        ValidityReport {
            hermiticity_preserving: hp,
            trace_annihilating: ta,
            conditionally_completely_positive: ccp,
            overall: hp && ta && ccp,
        }
    }

    /// ρ ↦ coeffs[α,β]·ρ[α,β].
    pub fn schur_multiplier(coeffs: MatRef<'_, c64>) -> Result<SuperOp> {
        let d = coeffs.nrows();
        if coeffs.ncols() != d {
            return Err(Error::domain("Schur multiplier coefficients must be square"));
        }
        let n = d * d;
        let mut m = Mat::zeros(n, n);
        for b in 0..d {
            for a in 0..d {
                m[(a + b * d, a + b * d)] = coeffs[(a, b)];
            }
        }
        SuperOp::new(d, m)
    }

    pub fn is_completely_positive(&self) -> bool {
        self.choi().is_psd()
    }

    /// Operator-Schmidt form X ↦ Σ_k σ_k A_k X B_k with ‖A_k‖_F = ‖B_k‖_F = 1,
    /// dropping σ_k ≤ tol·σ_max.
    pub fn sandwich_terms(&self, tol: f64) -> Vec<(f64, CMat, CMat)> {
        let d = self.dim;
        let n = d * d;
        // R[(p + q d), (s + r d)] = M[(p + r d), (q + s d)]
        let realigned = Mat::from_fn(n, n, |row, col| {
            let (p, q) = (row % d, row / d);
            let (s, r) = (col % d, col / d);
            self.matrix[(p + r * d, q + s * d)]
        });
        let svd = realigned.svd().expect("SVD converges");
        let sig = svd.S().column_vector();
        let top = if n > 0 { sig[0].re } else { 0.0 };
        let mut out = Vec::new();
        for k in 0..n {
            let sk = sig[k].re;
            if sk <= tol * top || sk == 0.0 {
                break;
            }
            let u = svd.U().col(k);
            let v = svd.V().col(k);
            let a = Mat::from_fn(d, d, |p, q| u[p + q * d]);
            let b = Mat::from_fn(d, d, |s, r| v[s + r * d].conj());
            out.push((sk, a, b));
        }
        out
    }

    /// Σ_k σ_k ‖A_k‖‖B_k‖ over the operator-Schmidt form: an upper bound on the
    /// cb 1→1 norm.
    pub fn cb_norm_upper_bound(&self) -> f64 {
        self.sandwich_terms(0.0)
            .iter()
            .map(|(s, a, b)| s * super::dense::op_norm(a.as_ref()) * super::dense::op_norm(b.as_ref()))
            .sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ValidityReport {
    pub hermiticity_preserving: bool,
    pub trace_annihilating: bool,
    pub conditionally_completely_positive: bool,
    pub overall: bool,
}

#[derive(Clone, Debug)]
pub struct ChoiMatrix {
    pub matrix: CMat,
}

impl ChoiMatrix {
    fn norm(&self) -> f64 {
        self.matrix.norm_l2()
    }

    pub fn is_hermitian(&self) -> bool {
        is_hermitian(self.matrix.as_ref(), STRUCTURE_TOL)
    }

    pub fn is_psd(&self) -> bool {
        self.is_hermitian()
            && min_eigenvalue(self.matrix.as_ref()) >= -PSD_TOL * self.norm().max(1.0)
    }

    /// Smallest eigenvalue after compressing to the complement of Σ|ii>.
    pub fn compressed_min_eigenvalue(&self) -> f64 {
        let n = self.matrix.nrows();
        let d = (n as f64).sqrt().round() as usize;
        let w = 1.0 / d as f64;
        let q = Mat::from_fn(n, n, |r, c| {
            let omega = |k: usize| k / d == k % d;
            let id = if r == c { 1.0 } else { 0.0 };
            let proj = if omega(r) && omega(c) { w } else { 0.0 };
            re(id - proj)
        });
        let comp = &q * &self.matrix * &q;
        min_eigenvalue(comp.as_ref())
    }
}

/// A matrix factor kept in whichever form is cheapest to multiply by.
#[derive(Clone, Debug)]
pub enum Factor {
    Identity(usize),
    Dense(CMat),
    Sparse {
        dim: usize,
        entries: Vec<(usize, usize, c64)>,
    },
}

impl Factor {
    pub fn from_matrix(m: CMat) -> Factor {
        let n = m.nrows();
        let mut entries = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let v = m[(i, j)];
                if v != ZERO {
                    entries.push((i, j, v));
                }
            }
        }
        if entries.len() * 8 <= n * n {
            Factor::Sparse { dim: n, entries }
        } else {
            Factor::Dense(m)
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Factor::Identity(n) => *n,
            Factor::Dense(m) => m.nrows(),
            Factor::Sparse { dim, .. } => *dim,
        }
    }

    pub fn to_dense(&self) -> CMat {
        match self {
            Factor::Identity(n) => eye(*n),
            Factor::Dense(m) => m.clone(),
            Factor::Sparse { dim, entries } => {
                let mut m = Mat::zeros(*dim, *dim);
                for &(i, j, v) in entries {
                    m[(i, j)] += v;
                }
                m
            }
        }
    }

    pub fn adjoint(&self) -> Factor {
        match self {
            Factor::Identity(n) => Factor::Identity(*n),
            Factor::Dense(m) => Factor::Dense(dagger(m.as_ref())),
            Factor::Sparse { dim, entries } => Factor::Sparse {
                dim: *dim,
                entries: entries.iter().map(|&(i, j, v)| (j, i, v.conj())).collect(),
            },
        }
    }

    pub fn transpose(&self) -> Factor {
        match self {
            Factor::Identity(n) => Factor::Identity(*n),
            Factor::Dense(m) => Factor::Dense(m.transpose().to_owned()),
            Factor::Sparse { dim, entries } => Factor::Sparse {
                dim: *dim,
                entries: entries.iter().map(|&(i, j, v)| (j, i, v)).collect(),
            },
        }
    }

    /// sqrt(‖·‖₁‖·‖_∞), an upper bound on the operator norm.
    pub fn op_norm_bound(&self) -> f64 {
        let m = self.to_dense();
        let n = m.nrows();
        let col = (0..n)
            .map(|j| (0..n).map(|i| m[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max);
        let row = (0..n)
            .map(|i| (0..n).map(|j| m[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max);
        (col * row).sqrt()
    }

    fn left_mul(&self, x: MatRef<'_, c64>) -> CMat {
        match self {
            Factor::Identity(_) => x.to_owned(),
            Factor::Dense(m) => m * x,
            Factor::Sparse { dim, entries } => {
                let mut out = Mat::zeros(*dim, x.ncols());
                for &(i, k, v) in entries {
                    for c in 0..x.ncols() {
                        out[(i, c)] += v * x[(k, c)];
                    }
                }
                out
            }
        }
    }

    fn right_mul(&self, x: MatRef<'_, c64>) -> CMat {
        match self {
            Factor::Identity(_) => x.to_owned(),
            Factor::Dense(m) => x * m,
            Factor::Sparse { dim, entries } => {
                let mut out = Mat::zeros(x.nrows(), *dim);
                for &(k, j, v) in entries {
                    for r in 0..x.nrows() {
                        out[(r, j)] += x[(r, k)] * v;
                    }
                }
                out
            }
        }
    }
}

/// c·A·X·B.
#[derive(Clone, Debug)]
pub struct Sandwich {
    pub coeff: c64,
    pub left: Factor,
    pub right: Factor,
}

/// Linear map on d×d operators.
pub trait Generator: Send + Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: MatRef<'_, c64>) -> CMat;
    /// Dual for the trace pairing; this is the Heisenberg-picture map.
    fn apply_dual(&self, x: MatRef<'_, c64>) -> CMat;
    /// Hilbert–Schmidt adjoint.
    fn apply_adjoint(&self, x: MatRef<'_, c64>) -> CMat;
    /// Upper bound on the norm induced by the Frobenius norm.
    fn norm_bound(&self) -> f64;
    fn to_superop(&self) -> Result<SuperOp>;
}

impl Generator for SuperOp {
    fn dim(&self) -> usize {
        self.dim
    }
    fn apply(&self, x: MatRef<'_, c64>) -> CMat {
        SuperOp::apply(self, x)
    }
    fn apply_dual(&self, x: MatRef<'_, c64>) -> CMat {
        // tr(A·T(B)) = vec(Aᵀ)ᵀ M vec(B)
        let v = vec_of(x.transpose());
        let w = self.matrix.transpose() * v;
        unvec(&w, self.dim).transpose().to_owned()
    }
    fn apply_adjoint(&self, x: MatRef<'_, c64>) -> CMat {
        unvec(&(self.matrix.adjoint() * vec_of(x)), self.dim)
    }
    fn norm_bound(&self) -> f64 {
        let m = self.matrix.as_ref();
        let one = super::dense::one_norm(m);
        let inf = super::dense::one_norm(m.transpose());
        (one * inf).sqrt()
    }
    fn to_superop(&self) -> Result<SuperOp> {
        Ok(self.clone())
    }
}

/// Σ_k c_k A_k X B_k, plus an optional dense remainder.
#[derive(Clone, Debug)]
pub struct Liouvillian {
    dim: usize,
    terms: Vec<Sandwich>,
    dense: Option<SuperOp>,
}

impl Liouvillian {
    pub fn zero(dim: usize) -> Self {
        Liouvillian {
            dim,
            terms: Vec::new(),
            dense: None,
        }
    }

    pub fn from_terms(dim: usize, terms: Vec<Sandwich>) -> Result<Self> {
        for t in &terms {
            if t.left.dim() != dim || t.right.dim() != dim {
                return Err(Error::domain("sandwich factor dimension mismatch"));
            }
        }
        Ok(Liouvillian {
            dim,
            terms,
            dense: None,
        })
    }

    pub fn from_superop(op: SuperOp) -> Self {
        Liouvillian {
            dim: op.dim(),
            terms: Vec::new(),
            dense: Some(op),
        }
    }

    pub fn terms(&self) -> &[Sandwich] {
        &self.terms
    }

    pub fn dense_part(&self) -> Option<&SuperOp> {
        self.dense.as_ref()
    }

    pub fn plus(mut self, other: &Liouvillian) -> Result<Liouvillian> {
        if self.dim != other.dim {
            return Err(Error::domain("generator dimensions differ"));
        }
        self.terms.extend(other.terms.iter().cloned());
        self.dense = match (self.dense.take(), &other.dense) {
            (Some(a), Some(b)) => Some(a.add(b)?),
            (a, None) => a,
            (None, Some(b)) => Some(b.clone()),
        };
        Ok(self)
    }

    pub fn scaled(mut self, s: f64) -> Liouvillian {
        for t in &mut self.terms {
            t.coeff *= s;
        }
        self.dense = self.dense.map(|d| d.scaled(s));
        self
    }

    /// Difference `self - other` as a generator.
    pub fn minus(self, other: &Liouvillian) -> Result<Liouvillian> {
        self.plus(&other.clone().scaled(-1.0))
    }
}

impl Generator for Liouvillian {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: MatRef<'_, c64>) -> CMat {
        let mut acc = match &self.dense {
            Some(d) => d.apply(x),
            None => Mat::zeros(self.dim, self.dim),
        };
        for t in &self.terms {
            let ax = t.left.left_mul(x);
            let axb = t.right.right_mul(ax.as_ref());
            acc += scale(axb.as_ref(), t.coeff);
        }
        acc
    }

    fn apply_dual(&self, x: MatRef<'_, c64>) -> CMat {
        let mut acc = match &self.dense {
            Some(d) => Generator::apply_dual(d, x),
            None => Mat::zeros(self.dim, self.dim),
        };
        for t in &self.terms {
            let bx = t.right.left_mul(x);
            let bxa = t.left.right_mul(bx.as_ref());
            acc += scale(bxa.as_ref(), t.coeff);
        }
        acc
    }

    fn apply_adjoint(&self, x: MatRef<'_, c64>) -> CMat {
        let mut acc = match &self.dense {
            Some(d) => d.apply_adjoint(x),
            None => Mat::zeros(self.dim, self.dim),
        };
        for t in &self.terms {
            let ax = t.left.adjoint().left_mul(x);
            let axb = t.right.adjoint().right_mul(ax.as_ref());
            acc += scale(axb.as_ref(), t.coeff.conj());
        }
        acc
    }

    fn norm_bound(&self) -> f64 {
        let dense = self.dense.as_ref().map_or(0.0, |d| d.norm_bound());
        dense
            + self
                .terms
                .iter()
                .map(|t| t.coeff.norm() * t.left.op_norm_bound() * t.right.op_norm_bound())
                .sum::<f64>()
    }

    fn to_superop(&self) -> Result<SuperOp> {
        check_dense_dim(self.dim)?;
        let n = self.dim * self.dim;
        let mut m = match &self.dense {
            Some(d) => d.matrix().clone(),
            None => Mat::zeros(n, n),
        };
        for t in &self.terms {
            let a = t.left.to_dense();
            let b = t.right.to_dense();
            m += scale(kron(b.transpose(), a.as_ref()).as_ref(), t.coeff);
        }
        SuperOp::new(self.dim, m)
    }
}

/// GKLS data: ρ ↦ i[ρ,H] + Σ_j L_jρL_j† − ½{L_j†L_j, ρ}.
#[derive(Clone, Debug, PartialEq)]
pub struct Gkls {
    pub h: CMat,
    pub jumps: Vec<CMat>,
}

impl Gkls {
    pub fn new(h: CMat, jumps: Vec<CMat>) -> Result<Self> {
        let d = h.nrows();
        if h.ncols() != d {
            return Err(Error::domain("Hamiltonian must be square"));
        }
        if !is_hermitian(h.as_ref(), STRUCTURE_TOL) {
            return Err(Error::domain(format!(
                "Hamiltonian is not Hermitian (anti-Hermitian part {:.3e})",
                super::dense::antihermitian_norm(h.as_ref())
            )));
        }
        for l in &jumps {
            if l.nrows() != d || l.ncols() != d {
                return Err(Error::domain("Lindblad operators must match the Hamiltonian size"));
            }
        }
        Ok(Gkls { h, jumps })
    }

    pub fn dissipative(jumps: Vec<CMat>) -> Result<Self> {
        let d = jumps
            .first()
            .map(|l| l.nrows())
            .ok_or_else(|| Error::domain("at least one Lindblad operator is needed"))?;
        Gkls::new(Mat::zeros(d, d), jumps)
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    /// Sandwich form G X + X G† + Σ L X L† with G = −iH − ½Σ L†L.
    pub fn liouvillian(&self) -> Liouvillian {
        let d = self.dim();
        let mut k: CMat = Mat::zeros(d, d);
        for l in &self.jumps {
            k += l.adjoint() * l;
        }
        let g = Mat::from_fn(d, d, |i, j| -I * self.h[(i, j)] - k[(i, j)] * 0.5);
        let mut terms = Vec::with_capacity(self.jumps.len() + 2);
        if g.norm_max() > 0.0 {
            terms.push(Sandwich {
                coeff: ONE,
                left: Factor::from_matrix(g.clone()),
                right: Factor::Identity(d),
            });
            terms.push(Sandwich {
                coeff: ONE,
                left: Factor::Identity(d),
                right: Factor::from_matrix(dagger(g.as_ref())),
            });
        }
        for l in &self.jumps {
            let f = Factor::from_matrix(l.clone());
            terms.push(Sandwich {
                coeff: ONE,
                right: f.adjoint(),
                left: f,
            });
        }
        Liouvillian {
            dim: d,
            terms,
            dense: None,
        }
    }

    pub fn apply(&self, rho: MatRef<'_, c64>) -> CMat {
        self.liouvillian().apply(rho)
    }

    pub fn apply_dual(&self, x: MatRef<'_, c64>) -> CMat {
        self.liouvillian().apply_dual(x)
    }

    pub fn to_superop(&self) -> Result<SuperOp> {
        let op = self.liouvillian().to_superop()?;
        let _ = op.flags.trace_annihilating.set(true);
        let _ = op.flags.hermiticity_preserving.set(true);
        Ok(op)
    }

    /// 2‖H‖ + 2Σ‖L_j‖², an upper bound on the cb 1→1 norm.
    pub fn cb_norm_upper_bound(&self) -> f64 {
        let h = super::dense::op_norm(self.h.as_ref());
        let l: f64 = self
            .jumps
            .iter()
            .map(|l| super::dense::op_norm(l.as_ref()).powi(2))
            .sum();
        2.0 * h + 2.0 * l
    }
}

pub fn from_gkls(h: CMat, jumps: Vec<CMat>) -> Result<SuperOp> {
    Gkls::new(h, jumps)?.to_superop()
}

/// Dephasing with rate γ on the computational basis of one site of dimension d.
pub fn dephasing_jumps(d: usize, gamma: f64) -> Vec<CMat> {
    (0..d)
        .map(|i| {
            let mut m = Mat::zeros(d, d);
            m[(i, i)] = cx(gamma.sqrt(), 0.0);
            m
        })
        .collect()
}
