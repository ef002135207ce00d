//! Tensor-factor bookkeeping: embedding local operators and superoperators,
//! and partial traces. Factor 0 is the most significant digit of a basis index.

use faer::{c64, Mat, MatRef};
use serde::{Deserialize, Serialize};

use super::dense::{CMat, ZERO};
use super::superop::SuperOp;
use crate::error::{Error, Result};
use crate::lattice::Region;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    dims: Vec<usize>,
    strides: Vec<usize>,
    total: usize,
}

impl Layout {
    pub fn new(dims: Vec<usize>) -> Self {
        let mut strides = vec![1; dims.len()];
        for k in (0..dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        let total = dims.iter().product();
        Layout {
            dims,
            strides,
            total,
        }
    }

    pub fn uniform(n: usize, d: usize) -> Self {
        Layout::new(vec![d; n])
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn factors(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn digit(&self, index: usize, k: usize) -> usize {
        (index / self.strides[k]) % self.dims[k]
    }

    pub fn digits(&self, index: usize) -> Vec<usize> {
        (0..self.dims.len()).map(|k| self.digit(index, k)).collect()
    }

    pub fn join(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.strides).map(|(d, s)| d * s).sum()
    }

    /// Local index of `index` restricted to `positions` (in the given order).
    pub fn sub_index(&self, index: usize, positions: &[usize]) -> usize {
        positions
            .iter()
            .fold(0, |acc, &k| acc * self.dims[k] + self.digit(index, k))
    }

    /// `index` with the digits at `positions` replaced by those of `local`.
    pub fn replace(&self, index: usize, positions: &[usize], mut local: usize) -> usize {
        let mut out = index;
        for &k in positions.iter().rev() {
            let d = self.dims[k];
            let new = local % d;
            local /= d;
            out = out - self.digit(index, k) * self.strides[k] + new * self.strides[k];
        }
        out
    }

    fn local_total(&self, positions: &[usize]) -> usize {
        positions.iter().map(|&k| self.dims[k]).product()
    }

    fn check_positions(&self, positions: &[usize]) -> Result<()> {
        let mut seen = vec![false; self.dims.len()];
        for &k in positions {
            if k >= self.dims.len() || seen[k] {
                return Err(Error::domain("invalid or repeated tensor position"));
            }
            seen[k] = true;
        }
        Ok(())
    }
}

/// op ⊗ 1 with the factors of `op` placed at `positions`.
pub fn embed_operator(op: MatRef<'_, c64>, positions: &[usize], layout: &Layout) -> Result<CMat> {
    layout.check_positions(positions)?;
    let local = layout.local_total(positions);
    if op.nrows() != local || op.ncols() != local {
        return Err(Error::domain(format!(
            "operator of size {} does not match local dimension {local}",
            op.nrows()
        )));
    }
    let n = layout.total();
    let mut out = Mat::zeros(n, n);
    for a in 0..n {
        let a_loc = layout.sub_index(a, positions);
        for b_loc in 0..local {
            let v = op[(a_loc, b_loc)];
            if v != ZERO {
                out[(a, layout.replace(a, positions, b_loc))] = v;
            }
        }
    }
    Ok(out)
}

/// T ⊗ id with the factors of `t` placed at `positions`.
pub fn embed_superop(t: &SuperOp, positions: &[usize], layout: &Layout) -> Result<SuperOp> {
    layout.check_positions(positions)?;
    let d = layout.local_total(positions);
    if t.dim() != d {
        return Err(Error::domain(format!(
            "superoperator on dimension {} does not match local dimension {d}",
            t.dim()
        )));
    }
    let n = layout.total();
    let m = t.matrix();
    let mut out = Mat::zeros(n * n, n * n);
    for beta in 0..n {
        let b_loc = layout.sub_index(beta, positions);
        for alpha in 0..n {
            let a_loc = layout.sub_index(alpha, positions);
            let row = alpha + beta * n;
            for dl in 0..d {
                let delta = layout.replace(beta, positions, dl);
                for gl in 0..d {
                    let v = m[(a_loc + b_loc * d, gl + dl * d)];
                    if v != ZERO {
                        let gamma = layout.replace(alpha, positions, gl);
                        out[(row, gamma + delta * n)] = v;
                    }
                }
            }
        }
    }
    SuperOp::new(n, out)
}

/// Trace out every factor not listed in `keep`; kept factors stay in `keep` order.
pub fn partial_trace_positions(x: MatRef<'_, c64>, layout: &Layout, keep: &[usize]) -> Result<CMat> {
    layout.check_positions(keep)?;
    let n = layout.total();
    if x.nrows() != n || x.ncols() != n {
        return Err(Error::domain("operator size does not match layout"));
    }
    let traced: Vec<usize> = (0..layout.factors()).filter(|k| !keep.contains(k)).collect();
    let kd = layout.local_total(keep);
    let td = layout.local_total(&traced);
    let mut out = Mat::zeros(kd, kd);
    let base_of = |k_loc: usize, t_loc: usize| {
        let a = layout.replace(0, keep, k_loc);
        layout.replace(a, &traced, t_loc)
    };
    for i in 0..kd {
        for j in 0..kd {
            let mut acc = ZERO;
            for t in 0..td {
                acc += x[(base_of(i, t), base_of(j, t))];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// Operator on the sites of a region, each carrying the same local dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Op {
    #[serde(with = "super::codec::cmat_json")]
    pub matrix: CMat,
    pub sites: Region,
    pub local_dim: usize,
}

impl Op {
    pub fn new(matrix: CMat, sites: Region, local_dim: usize) -> Result<Self> {
        let dim = local_dim
            .checked_pow(sites.len() as u32)
            .ok_or_else(|| Error::domain("operator dimension overflows"))?;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::domain(format!(
                "matrix is {}x{}, sites imply dimension {dim}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.as_ref().norm_max().is_nan() || !matrix.as_ref().norm_max().is_finite() {
            return Err(Error::domain("operator entries must be finite"));
        }
        Ok(Op {
            matrix,
            sites,
            local_dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn layout(&self) -> Layout {
        Layout::uniform(self.sites.len(), self.local_dim)
    }

    /// Positions of `sub` inside this operator's site list.
    pub fn positions_of(&self, sub: &Region) -> Result<Vec<usize>> {
        sub.iter()
            .map(|s| {
                self.sites
                    .position(s)
                    .ok_or_else(|| Error::domain(format!("site {s} is not a factor of the operator")))
            })
            .collect()
    }
}

pub fn partial_trace(x: &Op, keep: &Region) -> Result<Op> {
    let positions = x.positions_of(keep)?;
    let m = partial_trace_positions(x.matrix.as_ref(), &x.layout(), &positions)?;
    Op::new(m, keep.clone(), x.local_dim)
}
