//! Spectral analysis of dense generators: asymptotic projectors, fixed points,
//! spectral gaps.

use faer::{c64, Mat, MatRef};
use faer::linalg::solvers::Solve;

use crate::error::{Error, Result};
use crate::linalg::dense::{cx, eye, scale, hermitian_part, trace, unvec, CMat};
use crate::linalg::SuperOp;

/// Relative tolerance classifying eigenvalues as zero or peripheral.
pub const CLASSIFY_TOL: f64 = 1e-9;
/// Relative gap separating distinct peripheral frequencies.
const CLUSTER_TOL: f64 = 1e-7;
/// Relative size of a singular value still counted as a null direction.
const NULL_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct AsymptoticProjectors {
    /// T_∞: projector onto ker L along its range.
    pub stationary: SuperOp,
    /// T_φ: projector onto the span of purely imaginary eigenvalues.
    pub peripheral: SuperOp,
    /// Imaginary parts of the peripheral eigenvalues, one per cluster, ascending.
    pub frequencies: Vec<f64>,
    pub tol: f64,
}

fn scale_of(m: MatRef<'_, c64>) -> f64 {
    m.norm_l2()
}

/// All eigenvalues of a square matrix.
pub fn eigenvalues(m: MatRef<'_, c64>) -> Result<Vec<c64>> {
    m.eigenvalues()
        .map_err(|e| Error::Conditioning(format!("eigenvalue solver failed: {e:?}")))
}

/// Spectral projector onto ker(M − iω) along its range, for an eigenvalue of
/// algebraic multiplicity `mult` that must also be its geometric multiplicity.
fn eigenprojector(m: MatRef<'_, c64>, omega: f64, mult: usize, norm: f64) -> Result<CMat> {
    let n = m.nrows();
    let shifted = m - scale(eye(n).as_ref(), cx(0.0, omega));
    let svd = shifted
        .svd()
        .map_err(|e| Error::Conditioning(format!("SVD failed: {e:?}")))?;
    let s = svd.S().column_vector();
    let worst = s[n - mult].re;
    if worst > NULL_TOL * norm {
        return Err(Error::Conditioning(format!(
            "eigenvalue {omega}i has algebraic multiplicity {mult} but only {} null directions \
             (next singular value {worst:.3e}, scale {norm:.3e})",
            (0..n).filter(|&k| s[k].re <= NULL_TOL * norm).count()
        )));
    }
    let r = svd.V().subcols(n - mult, mult).to_owned();
    let w = svd.U().subcols(n - mult, mult).to_owned();
    let overlap = w.adjoint() * &r;
    let sv = overlap
        .singular_values()
        .map_err(|e| Error::Conditioning(format!("SVD failed: {e:?}")))?;
    if sv[mult - 1] <= NULL_TOL {
        return Err(Error::Conditioning(format!(
            "eigenvalue {omega}i is defective: left/right null spaces overlap with {:.3e}",
            sv[mult - 1]
        )));
    }
    let coeff = overlap.partial_piv_lu().solve(w.adjoint().to_owned());
    Ok(&r * coeff)
}

/// T_∞ and T_φ from the peripheral spectrum of `l`.
pub fn asymptotic_projectors(l: &SuperOp, tol: f64) -> Result<AsymptoticProjectors> {
    let m = l.matrix().as_ref();
    let n = m.nrows();
    let scale = scale_of(m);
    if scale == 0.0 {
        let id = SuperOp::identity(l.dim());
        return Ok(AsymptoticProjectors {
            stationary: id.clone(),
            peripheral: id,
            frequencies: vec![0.0],
            tol,
        });
    }
    let mut peripheral: Vec<c64> = eigenvalues(m)?
        .into_iter()
        .filter(|z| z.re > -tol * scale)
        .collect();
    peripheral.sort_by(|a, b| a.im.total_cmp(&b.im));
    let mut clusters: Vec<Vec<f64>> = Vec::new();
    for z in &peripheral {
        match clusters.last_mut() {
            Some(c) if z.im - c[c.len() - 1] <= CLUSTER_TOL * scale => c.push(z.im),
            _ => clusters.push(vec![z.im]),
        }
    }
    let mut stationary = Mat::<c64>::zeros(n, n);
    let mut periph = Mat::<c64>::zeros(n, n);
    let mut frequencies = Vec::with_capacity(clusters.len());
    for c in &clusters {
        let mean = c.iter().sum::<f64>() / c.len() as f64;
        let zero = mean.abs() <= tol * scale;
        let omega = if zero { 0.0 } else { mean };
        let p = eigenprojector(m, omega, c.len(), scale)?;
        if zero {
            stationary += &p;
        }
        periph += &p;
        frequencies.push(omega);
    }
    Ok(AsymptoticProjectors {
        stationary: SuperOp::new(l.dim(), stationary)?,
        peripheral: SuperOp::new(l.dim(), periph)?,
        frequencies,
        tol,
    })
}

/// Dimension of ker L counted by singular values.
pub fn stationary_dimension(l: &SuperOp) -> Result<usize> {
    let m = l.matrix().as_ref();
    let scale = scale_of(m);
    if scale == 0.0 {
        return Ok(m.nrows());
    }
    let s = m
        .singular_values()
        .map_err(|e| Error::Conditioning(format!("SVD failed: {e:?}")))?;
    Ok(s.iter().filter(|&&x| x <= CLASSIFY_TOL * scale).count())
}

/// The unique normalised state with L(ρ) = 0.
pub fn fixed_point(l: &SuperOp) -> Result<CMat> {
    let m = l.matrix().as_ref();
    let n = m.nrows();
    let scale = scale_of(m);
    if scale == 0.0 {
        return Err(Error::Uniqueness { dim: n });
    }
    let svd = m
        .svd()
        .map_err(|e| Error::Conditioning(format!("SVD failed: {e:?}")))?;
    let s = svd.S().column_vector();
    let dim = (0..n).filter(|&k| s[k].re <= CLASSIFY_TOL * scale).count();
    if dim != 1 {
        return Err(Error::Uniqueness { dim });
    }
    let v = svd.V().col(n - 1).to_owned();
    normalize_state(unvec(&v, l.dim()))
}

fn normalize_state(x: CMat) -> Result<CMat> {
    let tr = trace(x.as_ref());
    if tr.norm() <= 1e-12 * x.norm_l2() {
        return Err(Error::Conditioning("kernel vector is traceless".into()));
    }
    let scaled = scale(x.as_ref(), c64::new(1.0, 0.0) / tr);
    Ok(hermitian_part(scaled.as_ref()))
}

/// min −Re λ over eigenvalues with Re λ < −tol·‖M‖.
pub fn spectral_gap_of_matrix(m: MatRef<'_, c64>, tol: f64) -> Result<f64> {
    let scale = scale_of(m);
    eigenvalues(m)?
        .into_iter()
        .filter(|z| z.re < -tol * scale)
        .map(|z| -z.re)
        .min_by(f64::total_cmp)
        .ok_or(Error::DegenerateSpectrum)
}

pub fn spectral_gap(l: &SuperOp) -> Result<f64> {
    spectral_gap_of_matrix(l.matrix().as_ref(), CLASSIFY_TOL)
}
