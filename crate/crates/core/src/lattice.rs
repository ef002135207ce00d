//! Finite pieces of the cubic lattice Z^D (optionally a torus) under the
//! Chebyshev metric. Balls are cubes, and every region keeps its sites in
//! lexicographic order so that tensor factors are laid out reproducibly.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Site {
    pub coords: Vec<i64>,
}

impl Site {
    pub fn new(coords: impl Into<Vec<i64>>) -> Self {
        Site {
            coords: coords.into(),
        }
    }

    /// Shorthand for a site of a one-dimensional lattice.
    pub fn at(x: i64) -> Self {
        Site { coords: vec![x] }
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    Ball,
    UnionOfBalls,
    #[default]
    General,
}

/// Sorted, duplicate-free set of sites. Equality compares sites only.
#[derive(Clone, Debug, Default)]
pub struct Region {
    sites: Vec<Site>,
    shape: Shape,
    /// Known decomposition into disjoint clipped balls (center, radius); empty when unknown.
    balls: Vec<(Site, usize)>,
}

impl PartialEq for Region {
    fn eq(&self, other: &Self) -> bool {
        self.sites == other.sites
    }
}

impl Eq for Region {}

impl std::hash::Hash for Region {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.sites.hash(state);
    }
}

impl Region {
    pub fn new(sites: impl IntoIterator<Item = Site>) -> Self {
        Self::with_shape(sites, Shape::General)
    }

    pub fn with_shape(sites: impl IntoIterator<Item = Site>, shape: Shape) -> Self {
        let set: BTreeSet<Site> = sites.into_iter().collect();
        Region {
            sites: set.into_iter().collect(),
            shape,
            balls: Vec::new(),
        }
    }

    fn with_balls(sites: impl IntoIterator<Item = Site>, balls: Vec<(Site, usize)>) -> Self {
        let shape = if balls.len() == 1 {
            Shape::Ball
        } else {
            Shape::UnionOfBalls
        };
        Region {
            balls,
            ..Self::with_shape(sites, shape)
        }
    }

    /// The disjoint balls this region was built from, if known.
    pub fn balls(&self) -> &[(Site, usize)] {
        &self.balls
    }

    pub fn empty() -> Self {
        Region::default()
    }

    /// The interval {lo, ..., hi} of a one-dimensional lattice.
    pub fn interval(lo: i64, hi: i64) -> Self {
        Region::new((lo..=hi).map(Site::at))
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn contains(&self, s: &Site) -> bool {
        self.sites.binary_search(s).is_ok()
    }

    /// Tensor-factor position of `s` inside this region.
    pub fn position(&self, s: &Site) -> Option<usize> {
        self.sites.binary_search(s).ok()
    }

    pub fn is_subset(&self, other: &Region) -> bool {
        self.sites.iter().all(|s| other.contains(s))
    }

    pub fn union(&self, other: &Region) -> Region {
        Region::new(self.sites.iter().chain(other.sites.iter()).cloned())
    }

    pub fn intersection(&self, other: &Region) -> Region {
        Region::new(self.sites.iter().filter(|s| other.contains(s)).cloned())
    }

    pub fn difference(&self, other: &Region) -> Region {
        Region::new(self.sites.iter().filter(|s| !other.contains(s)).cloned())
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Site> {
        self.sites.iter()
    }
}

impl Serialize for Region {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.sites.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Region {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let sites = Vec::<Site>::deserialize(d)?;
        Ok(Region::new(sites))
    }
}

impl<'a> IntoIterator for &'a Region {
    type Item = &'a Site;
    type IntoIter = std::slice::Iter<'a, Site>;
    fn into_iter(self) -> Self::IntoIter {
        self.sites.iter()
    }
}

#[derive(Deserialize)]
struct RawGeometry {
    dim: usize,
    extent: Vec<usize>,
    #[serde(default)]
    periodic: Option<Vec<bool>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawGeometry")]
pub struct LatticeGeometry {
    dim: usize,
    extent: Vec<usize>,
    periodic: Vec<bool>,
}

/// Geometry from its JSON form, e.g. `{"dim": 2, "extent": [3, 4], "periodic": [true, false]}`.
pub fn parse_geometry(bytes: &[u8]) -> Result<LatticeGeometry> {
    Ok(serde_json::from_slice(bytes)?)
}

impl TryFrom<RawGeometry> for LatticeGeometry {
    type Error = Error;
    fn try_from(raw: RawGeometry) -> Result<Self> {
        let periodic = raw.periodic.unwrap_or_else(|| vec![false; raw.dim]);
        LatticeGeometry::new(raw.dim, raw.extent, periodic)
    }
}

impl LatticeGeometry {
    pub fn new(dim: usize, extent: Vec<usize>, periodic: Vec<bool>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("lattice dimension must be at least 1"));
        }
        if extent.len() != dim || periodic.len() != dim {
            return Err(Error::domain(format!(
                "expected {dim} extents and periodicity flags, got {} and {}",
                extent.len(),
                periodic.len()
            )));
        }
        if extent.iter().any(|&e| e == 0) {
            return Err(Error::domain("every extent must be at least 1"));
        }
        let mut total: usize = 1;
        for &e in &extent {
            total = total
                .checked_mul(e)
                .filter(|&t| t <= 1 << 24)
                .ok_or_else(|| Error::domain("lattice has too many sites"))?;
        }
        Ok(LatticeGeometry {
            dim,
            extent,
            periodic,
        })
    }

    pub fn open(extent: Vec<usize>) -> Result<Self> {
        let d = extent.len();
        Self::new(d, extent, vec![false; d])
    }

    pub fn periodic(extent: Vec<usize>) -> Result<Self> {
        let d = extent.len();
        Self::new(d, extent, vec![true; d])
    }

    pub fn chain(n: usize) -> Self {
        Self::open(vec![n]).expect("n >= 1")
    }

    pub fn ring(n: usize) -> Self {
        Self::periodic(vec![n]).expect("n >= 1")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extent(&self) -> &[usize] {
        &self.extent
    }

    pub fn periodic_axes(&self) -> &[bool] {
        &self.periodic
    }

    pub fn is_fully_periodic(&self) -> bool {
        self.periodic.iter().all(|&p| p)
    }

    pub fn num_sites(&self) -> usize {
        self.extent.iter().product()
    }

    /// Maps `s` into range, wrapping periodic axes; `None` if it falls off an open axis.
    pub fn wrap(&self, s: &Site) -> Option<Site> {
        if s.coords.len() != self.dim {
            return None;
        }
        let mut out = Vec::with_capacity(self.dim);
        for (i, &c) in s.coords.iter().enumerate() {
            let e = self.extent[i] as i64;
            if self.periodic[i] {
                out.push(c.rem_euclid(e));
            } else if (0..e).contains(&c) {
                out.push(c);
            } else {
                return None;
            }
        }
        Some(Site::new(out))
    }

    pub fn contains(&self, s: &Site) -> bool {
        s.coords.len() == self.dim
            && s
                .coords
                .iter()
                .zip(&self.extent)
                .all(|(&c, &e)| (0..e as i64).contains(&c))
    }

    fn check(&self, s: &Site) -> Result<()> {
        if self.contains(s) {
            Ok(())
        } else {
            Err(Error::domain(format!("site {s} lies outside the geometry")))
        }
    }

    /// Lexicographic rank of an in-range site.
    pub fn index(&self, s: &Site) -> usize {
        s.coords
            .iter()
            .zip(&self.extent)
            .fold(0usize, |acc, (&c, &e)| acc * e + c as usize)
    }

    pub fn site(&self, mut index: usize) -> Site {
        let mut coords = vec![0i64; self.dim];
        for i in (0..self.dim).rev() {
            coords[i] = (index % self.extent[i]) as i64;
            index /= self.extent[i];
        }
        Site::new(coords)
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.num_sites()).map(|i| self.site(i))
    }

    pub fn all(&self) -> Region {
        Region::with_shape(self.sites(), Shape::General)
    }

    /// Chebyshev distance, per-axis wraparound on periodic axes.
    pub fn site_distance(&self, a: &Site, b: &Site) -> u64 {
        let mut best = 0u64;
        for i in 0..self.dim {
            let mut d = (a.coords[i] - b.coords[i]).unsigned_abs();
            if self.periodic[i] {
                let e = self.extent[i] as u64;
                d %= e;
                d = d.min(e - d);
            }
            best = best.max(d);
        }
        best
    }

    pub fn ball(&self, center: &Site, radius: usize) -> Result<Region> {
        self.check(center)?;
        let r = radius as u64;
        Ok(Region::with_balls(
            self.sites().filter(|y| self.site_distance(center, y) <= r),
            vec![(center.clone(), radius)],
        ))
    }

    pub fn distance(&self, a: &Region, b: &Region) -> Result<u64> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::domain("distance needs two nonempty regions"));
        }
        let mut best = u64::MAX;
        for x in a {
            for y in b {
                best = best.min(self.site_distance(x, y));
                if best == 0 {
                    return Ok(0);
                }
            }
        }
        Ok(best)
    }

    fn check_region(&self, a: &Region) -> Result<()> {
        a.iter().try_for_each(|s| self.check(s))
    }

    fn fatten(&self, a: &Region, s: usize) -> Region {
        let s = s as u64;
        Region::new(
            self.sites()
                .filter(|x| a.iter().any(|y| self.site_distance(x, y) <= s)),
        )
    }

    /// Maximal clusters of `a` under Chebyshev adjacency.
    pub fn components(&self, a: &Region) -> Vec<Region> {
        let n = a.len();
        let mut label: Vec<usize> = (0..n).collect();
        fn find(label: &mut [usize], i: usize) -> usize {
            let mut r = i;
            while label[r] != r {
                r = label[r];
            }
            let mut j = i;
            while label[j] != r {
                let next = label[j];
                label[j] = r;
                j = next;
            }
            r
        }
        for i in 0..n {
            for j in i + 1..n {
                if self.site_distance(&a.sites[i], &a.sites[j]) <= 1 {
                    let (ri, rj) = (find(&mut label, i), find(&mut label, j));
                    label[ri.max(rj)] = ri.min(rj);
                }
            }
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<Site>> = Default::default();
        for i in 0..n {
            let r = find(&mut label, i);
            groups.entry(r).or_default().push(a.sites[i].clone());
        }
        groups.into_values().map(Region::new).collect()
    }

    /// Smallest Chebyshev ball (clipped to the geometry) covering `a`; among
    /// minimal-radius centres the one with the smallest clipped extent wins.
    /// Only meaningful when no axis is periodic.
    pub fn covering_ball(&self, a: &Region) -> Result<Region> {
        let (c, r) = self.covering_ball_params(a)?;
        self.ball(&c, r)
    }

    fn covering_ball_params(&self, a: &Region) -> Result<(Site, usize)> {
        if a.is_empty() {
            return Err(Error::domain("cannot cover an empty region"));
        }
        let mut lo = a.sites[0].coords.clone();
        let mut hi = lo.clone();
        for s in a {
            for i in 0..self.dim {
                lo[i] = lo[i].min(s.coords[i]);
                hi[i] = hi[i].max(s.coords[i]);
            }
        }
        let r = (0..self.dim)
            .map(|i| (hi[i] - lo[i] + 1) / 2)
            .max()
            .unwrap_or(0);
        let mut center = vec![0i64; self.dim];
        for i in 0..self.dim {
            let top = self.extent[i] as i64 - 1;
            let mut best: Option<(i64, i64)> = None;
            for c in (hi[i] - r).max(0)..=(lo[i] + r).min(top) {
                let width = (c + r).min(top) - (c - r).max(0);
                if best.is_none_or(|(_, w)| width < w) {
                    best = Some((c, width));
                }
            }
            center[i] = best.expect("covering centre lies in range").0;
        }
        Ok((Site::new(center), r as usize))
    }

    /// A(s) = {x : dist(x, A) <= s}, except that fattened balls which stop
    /// being disjoint are replaced by their covering ball (open geometries only).
    /// A is read as its recorded ball decomposition, else as its connected
    /// components (single sites and ball-shaped components count as balls).
    pub fn grow(&self, a: &Region, s: usize) -> Result<Region> {
        self.check_region(a)?;
        if s == 0 || a.is_empty() {
            return Ok(a.clone());
        }
        if self.periodic.iter().any(|&p| p) {
            return Ok(self.fatten(a, s));
        }
        // (sites, ball parameters when the part is a ball)
        let mut parts: Vec<(Region, Option<(Site, usize)>)> = Vec::new();
        if !a.balls.is_empty() {
            for (c, r) in &a.balls {
                parts.push((self.ball(c, r + s)?, Some((c.clone(), r + s))));
            }
        } else {
            for comp in self.components(a) {
                let (c, r) = self.covering_ball_params(&comp)?;
                if self.ball(&c, r)? == comp {
                    parts.push((self.ball(&c, r + s)?, Some((c, r + s))));
                } else {
                    parts.push((self.fatten(&comp, s), None));
                }
            }
        }
        // Merge whole clusters of intersecting parts at once; pairwise merging is
        // order-dependent and can overshoot, breaking grow(grow(A,s),t) ⊇ grow(A,s+t).
        loop {
            let n = parts.len();
            let mut label: Vec<usize> = (0..n).collect();
            let mut merged = false;
            for i in 0..n {
                for j in i + 1..n {
                    if label[i] != label[j] && !parts[i].0.intersection(&parts[j].0).is_empty() {
                        let (keep, drop) = (label[i].min(label[j]), label[i].max(label[j]));
                        label.iter_mut().filter(|l| **l == drop).for_each(|l| *l = keep);
                        merged = true;
                    }
                }
            }
            if !merged {
                break;
            }
            let mut next = Vec::new();
            for root in 0..n {
                let members: Vec<usize> = (0..n).filter(|&k| label[k] == root).collect();
                match members.as_slice() {
                    [] => {}
                    [only] => next.push(parts[*only].clone()),
                    _ => {
                        let union = members.iter().fold(Region::empty(), |acc, &k| acc.union(&parts[k].0));
                        let (c, r) = self.covering_ball_params(&union)?;
                        next.push((self.ball(&c, r)?, Some((c, r))));
                    }
                }
            }
            parts = next;
        }
        let sites: Vec<Site> = parts.iter().flat_map(|p| p.0.sites.iter().cloned()).collect();
        if parts.iter().all(|p| p.1.is_some()) {
            let balls = parts.into_iter().map(|p| p.1.expect("checked")).collect();
            Ok(Region::with_balls(sites, balls))
        } else {
            Ok(Region::with_shape(sites, Shape::UnionOfBalls))
        }
    }

    /// Distance from `x` to the complement of `lam` in Z^D (or in the torus).
    fn distance_to_complement(&self, lam: &Region, x: &Site) -> Option<u64> {
        let mut best: Option<u64> = None;
        for (i, &p) in self.periodic.iter().enumerate() {
            if !p {
                let c = x.coords[i];
                let e = self.extent[i] as i64;
                let d = (c + 1).min(e - c) as u64;
                best = Some(best.map_or(d, |b| b.min(d)));
            }
        }
        for y in self.sites() {
            if !lam.contains(&y) {
                let d = self.site_distance(x, &y);
                best = Some(best.map_or(d, |b| b.min(d)));
            }
        }
        best
    }

    /// The layer of depth `d` at the inner boundary of `lam`.
    pub fn boundary_layer(&self, lam: &Region, d: usize) -> Result<Region> {
        self.check_region(lam)?;
        let d = d as u64;
        Ok(Region::new(lam.iter().filter(|x| {
            self.distance_to_complement(lam, x)
                .is_some_and(|dist| dist <= d)
        }).cloned()))
    }

    /// Sites outside `lam` within distance `r` of it.
    pub fn outer_boundary(&self, lam: &Region, r: usize) -> Result<Region> {
        self.check_region(lam)?;
        let r = r as u64;
        Ok(Region::new(self.sites().filter(|x| {
            !lam.contains(x) && lam.iter().any(|y| self.site_distance(x, y) <= r)
        })))
    }

    pub fn diameter(&self, a: &Region) -> u64 {
        let mut best = 0;
        for x in a {
            for y in a {
                best = best.max(self.site_distance(x, y));
            }
        }
        best
    }
}
