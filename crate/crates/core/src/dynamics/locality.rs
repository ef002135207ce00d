//! Exact locality diagnostics for evolved observables: commutator growth and the
//! error of evolving under only the terms near the support.

use faer::{c64, MatRef};

use crate::error::{Error, Result};
use crate::lattice::Region;
use crate::linalg::dense::{op_norm, CMat};
use crate::linalg::{embed_operator, Generator, Layout};
use crate::model::UniformFamily;

use super::propagate::{propagate_grid, Picture};

/// ‖[K, e^{tL*}(O)]‖ on an ascending time grid.
pub fn commutator_growth(gen: &dyn Generator, o: MatRef<'_, c64>, k: MatRef<'_, c64>, ts: &[f64]) -> Result<Vec<f64>> {
    let d = gen.dim();
    if o.nrows() != d || k.nrows() != d {
        return Err(Error::domain("operators do not match the generator dimension"));
    }
    let evolved = propagate_grid(gen, o, ts, Picture::Heisenberg)?;
    Ok(evolved
        .iter()
        .map(|x| {
            let c: CMat = k * x - x * k;
            op_norm(c.as_ref())
        })
        .collect())
}

fn positions(outer: &Region, inner: &Region) -> Result<Vec<usize>> {
    inner
        .iter()
        .map(|s| outer.position(s).ok_or_else(|| Error::domain(format!("site {s} lies outside the region"))))
        .collect()
}

/// ‖e^{tL_Λ*}(O_A) − e^{tL_{A(r)}*}(O_A)‖ where L_{A(r)} keeps only the bulk terms
/// inside A(r) ∩ Λ. `o_a` acts on the sites of `a` in their region order.
pub fn localization_error(
    family: &UniformFamily,
    lam: &Region,
    a: &Region,
    o_a: MatRef<'_, c64>,
    r: usize,
    ts: &[f64],
) -> Result<Vec<f64>> {
    if !a.is_subset(lam) {
        return Err(Error::domain("support must lie inside Λ"));
    }
    let d = family.local_dim;
    let grown = family.geometry.grow(a, r)?.intersection(lam);
    let full_layout = Layout::uniform(lam.len(), d);
    let local_layout = Layout::uniform(grown.len(), d);
    let o_full = embed_operator(o_a, &positions(lam, a)?, &full_layout)?;
    let o_local = embed_operator(o_a, &positions(&grown, a)?, &local_layout)?;
    let full = propagate_grid(&family.assemble_open_liouvillian(lam)?, o_full.as_ref(), ts, Picture::Heisenberg)?;
    let local = propagate_grid(&family.assemble_open_liouvillian(&grown)?, o_local.as_ref(), ts, Picture::Heisenberg)?;
    let place = positions(lam, &grown)?;
    full.iter()
        .zip(&local)
        .map(|(x, y)| {
            let y = embed_operator(y.as_ref(), &place, &full_layout)?;
            Ok(op_norm((x - &y).as_ref()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{LatticeGeometry, Site};
    use crate::linalg::dense::{ketbra, kron_all};
    use crate::linalg::Gkls;
    use crate::model::{BoundaryRule, DecayProfile, LocalTerm, Strength};

    fn sz() -> CMat {
        &ketbra(2, 0, 0) - &ketbra(2, 1, 1)
    }

    fn sx() -> CMat {
        &ketbra(2, 0, 1) + &ketbra(2, 1, 0)
    }

    fn chain(h: f64) -> UniformFamily {
        let xx = kron_all(&[sx(), sx()]);
        let hterm = crate::linalg::dense::scale(xx.as_ref(), c64::new(h, 0.0));
        let pair = LocalTerm::new(Site::at(0), 1, vec![Site::at(0), Site::at(1)], crate::model::TermGenerator::Gkls(Gkls::new(hterm, vec![]).unwrap()), 2).unwrap();
        UniformFamily::translation_invariant(LatticeGeometry::chain(4), 2, vec![pair], BoundaryRule::Open, Strength { j: 2.0 * h, profile: DecayProfile::FiniteRange { range: 1 } }).unwrap()
    }

    #[test]
    fn commuting_operators_stay_commuting() {
        let fam = chain(0.7);
        let lam = fam.geometry.all();
        let gen = fam.assemble_open_liouvillian(&lam).unwrap();
        let layout = Layout::uniform(4, 2);
        // σx on any site commutes with an XX Hamiltonian
        let o = embed_operator(sx().as_ref(), &[1], &layout).unwrap();
        // Z₁ only ever spreads to X on its neighbours, which σz₂ detects
        let k = embed_operator(sz().as_ref(), &[2], &layout).unwrap();
        let kx = embed_operator(sx().as_ref(), &[3], &layout).unwrap();
        let ts = [0.0, 0.5, 1.0];
        assert!(commutator_growth(&gen, o.as_ref(), kx.as_ref(), &ts).unwrap().iter().all(|&x| x < 1e-12));
        let grown = commutator_growth(&gen, embed_operator(sz().as_ref(), &[1], &layout).unwrap().as_ref(), k.as_ref(), &ts).unwrap();
        assert!(grown[0] == 0.0 && grown[2] > 1e-3);
    }

    #[test]
    fn localization_error_vanishes_when_nothing_is_cut() {
        let fam = chain(0.5);
        let lam = fam.geometry.all();
        let a = Region::new([Site::at(1)]);
        let o = sz();
        let ts = [0.0, 0.3, 1.0];
        let err = localization_error(&fam, &lam, &a, o.as_ref(), 3, &ts).unwrap();
        assert!(err.iter().all(|&x| x < 1e-12));
        let cut = localization_error(&fam, &lam, &a, o.as_ref(), 0, &ts).unwrap();
        assert_eq!(cut[0], 0.0);
        assert!(cut[2] > 1e-3);
        assert!(localization_error(&fam, &Region::interval(0, 1), &Region::new([Site::at(3)]), o.as_ref(), 1, &ts).is_err());
    }
}
