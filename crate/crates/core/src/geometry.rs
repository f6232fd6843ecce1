//! Coordinates, distances, orthants, hyper-rectangles and hyperplane regions.
//!
//! Every value here is immutable once built and every operation is a pure
//! function. Comparisons are exact: the peer generator guarantees that no two
//! peers share a coordinate in any dimension, so no epsilon is needed.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::GeometryError;

/// Orthants are indexed by 64-bit masks in the multicast code.
pub const MAX_DIMS: usize = 64;

/// Dimension count and coordinate upper bound of the virtual space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceSpec {
    dims: usize,
    vmax: f64,
}

impl SpaceSpec {
    pub fn new(dims: usize, vmax: f64) -> Result<Self, GeometryError> {
        if dims == 0 || dims > MAX_DIMS {
            return Err(GeometryError::InvalidSpace(format!("dimension count must be in 1..={MAX_DIMS}, got {dims}")));
        }
        if !vmax.is_finite() || vmax <= 0.0 {
            return Err(GeometryError::InvalidSpace(format!("vmax must be positive and finite, got {vmax}")));
        }
        Ok(Self { dims, vmax })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn vmax(&self) -> f64 {
        self.vmax
    }

    /// Checks that `c` has the right length and lies in `[0, vmax]^D`.
    pub fn admits(&self, c: &Coord) -> bool {
        c.dims() == self.dims && c.0.iter().all(|&v| (0.0..=self.vmax).contains(&v))
    }
}

/// A point in D-dimensional space; a peer's self-generated identifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Coord(Vec<f64>);

impl Coord {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn dims(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, dim: usize) -> f64 {
        self.0[dim]
    }

    pub(crate) fn set(&mut self, dim: usize, value: f64) {
        self.0[dim] = value;
    }

    /// Component-wise `self - origin`.
    pub fn offset_from(&self, origin: &Coord) -> Result<Vec<f64>, GeometryError> {
        same_dims(self.dims(), origin.dims())?;
        Ok(self.0.iter().zip(&origin.0).map(|(a, b)| a - b).collect())
    }
}

impl From<Vec<f64>> for Coord {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

impl<const N: usize> From<[f64; N]> for Coord {
    fn from(values: [f64; N]) -> Self {
        Self(values.to_vec())
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

fn same_dims(a: usize, b: usize) -> Result<(), GeometryError> {
    if a == b {
        Ok(())
    } else {
        Err(GeometryError::DimensionMismatch { left: a, right: b })
    }
}

/// Sum of absolute per-dimension differences.
pub fn l1_distance(a: &Coord, b: &Coord) -> Result<f64, GeometryError> {
    same_dims(a.dims(), b.dims())?;
    Ok(a.0.iter().zip(&b.0).map(|(x, y)| (x - y).abs()).sum())
}

/// Euclidean distance.
pub fn l2_distance(a: &Coord, b: &Coord) -> Result<f64, GeometryError> {
    same_dims(a.dims(), b.dims())?;
    Ok(a.0.iter().zip(&b.0).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    fn of(v: f64) -> Self {
        if v < 0.0 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }
}

/// Region label: one sign per classifying hyperplane.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RegionId(Vec<Sign>);

impl RegionId {
    pub fn new(signs: Vec<Sign>) -> Self {
        Self(signs)
    }

    pub fn signs(&self) -> &[Sign] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Parses a compact `+-+` style label.
    pub fn parse(s: &str) -> Option<Self> {
        s.chars()
            .map(|c| match c {
                '+' => Some(Sign::Plus),
                '-' => Some(Sign::Minus),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(Self)
    }

    /// All `2^dims` orthant labels in lexicographic order (`-` before `+`).
    pub fn all_orthants(dims: usize) -> Vec<RegionId> {
        (0..1usize << dims)
            .map(|bits| {
                RegionId(
                    (0..dims).map(|i| if bits >> (dims - 1 - i) & 1 == 1 { Sign::Plus } else { Sign::Minus }).collect(),
                )
            })
            .collect()
    }
}

impl fmt::Display for RegionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            f.write_str(match s {
                Sign::Plus => "+",
                Sign::Minus => "-",
            })?;
        }
        Ok(())
    }
}

/// Orthant of `q` relative to `origin`. Fails if the two share any coordinate.
pub fn orthant_of(origin: &Coord, q: &Coord) -> Result<RegionId, GeometryError> {
    same_dims(origin.dims(), q.dims())?;
    origin
        .0
        .iter()
        .zip(&q.0)
        .enumerate()
        .map(|(dim, (o, x))| {
            if x > o {
                Ok(Sign::Plus)
            } else if x < o {
                Ok(Sign::Minus)
            } else {
                Err(GeometryError::NotDistinct { dim })
            }
        })
        .collect::<Result<Vec<_>, _>>()
        .map(RegionId)
}

/// A set of hyperplanes through the origin with coefficients in {-1, 0, +1}.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HyperplaneSet {
    dims: usize,
    planes: Vec<Vec<i8>>,
}

impl HyperplaneSet {
    pub fn new(dims: usize, planes: Vec<Vec<i8>>) -> Result<Self, GeometryError> {
        for (i, a) in planes.iter().enumerate() {
            same_dims(dims, a.len())?;
            if a.iter().any(|c| !(-1..=1).contains(c)) {
                return Err(GeometryError::InvalidPlanes(format!("plane {i} has a coefficient outside {{-1,0,1}}")));
            }
            if a.iter().all(|&c| c == 0) {
                return Err(GeometryError::InvalidPlanes(format!("plane {i} is all zero")));
            }
            for (j, b) in planes[..i].iter().enumerate() {
                let negated = a.iter().zip(b).all(|(x, y)| *x == -*y);
                if a == b || negated {
                    return Err(GeometryError::InvalidPlanes(format!("planes {j} and {i} coincide")));
                }
            }
        }
        Ok(Self { dims, planes })
    }

    /// The D planes `x(i) = 0`.
    pub fn orthogonal(dims: usize) -> Self {
        let planes = (0..dims).map(|i| (0..dims).map(|j| i8::from(i == j)).collect()).collect();
        Self { dims, planes }
    }

    /// Every distinct plane with coefficients in {-1, 0, +1}: `(3^D - 1) / 2` of them.
    /// Each is normalised so its first non-zero coefficient is +1.
    pub fn all_ternary(dims: usize) -> Self {
        let total = 3usize.pow(dims as u32);
        let mut planes = Vec::new();
        for code in 0..total {
            let mut a = Vec::with_capacity(dims);
            let mut rest = code;
            for _ in 0..dims {
                a.push((rest % 3) as i8 - 1);
                rest /= 3;
            }
            a.reverse();
            if a.iter().find(|&&c| c != 0) == Some(&1) {
                planes.push(a);
            }
        }
        Self { dims, planes }
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.planes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.planes.is_empty()
    }

    pub fn planes(&self) -> &[Vec<i8>] {
        &self.planes
    }
}

/// Region of a translated offset `v`: the sign of `a . v` per plane, with zero mapped to `+`.
pub fn hyperplane_region(planes: &HyperplaneSet, v: &[f64]) -> Result<RegionId, GeometryError> {
    same_dims(planes.dims, v.len())?;
    Ok(RegionId(
        planes.planes.iter().map(|a| Sign::of(a.iter().zip(v).map(|(&c, x)| f64::from(c) * x).sum())).collect(),
    ))
}

/// One side of a hyper-rectangle. Infinite bounds are always open.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
}

impl Interval {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Self { lo, hi, lo_open: false, hi_open: false }
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Self { lo, hi, lo_open: true, hi_open: true }
    }

    pub fn unbounded() -> Self {
        Self::open(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_open { x > self.lo } else { x >= self.lo };
        let below = if self.hi_open { x < self.hi } else { x <= self.hi };
        above && below
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && (self.lo_open || self.hi_open))
    }

    fn intersect(&self, other: &Interval) -> Interval {
        let (lo, lo_open) = match self.lo.partial_cmp(&other.lo) {
            Some(std::cmp::Ordering::Greater) => (self.lo, self.lo_open),
            Some(std::cmp::Ordering::Less) => (other.lo, other.lo_open),
            _ => (self.lo, self.lo_open || other.lo_open),
        };
        let (hi, hi_open) = match self.hi.partial_cmp(&other.hi) {
            Some(std::cmp::Ordering::Less) => (self.hi, self.hi_open),
            Some(std::cmp::Ordering::Greater) => (other.hi, other.hi_open),
            _ => (self.hi, self.hi_open || other.hi_open),
        };
        Interval { lo, hi, lo_open, hi_open }
    }

    /// True when every point of `self` is a point of `other`.
    fn within(&self, other: &Interval) -> bool {
        let lo_ok = self.lo > other.lo || (self.lo == other.lo && (self.lo_open || !other.lo_open));
        let hi_ok = self.hi < other.hi || (self.hi == other.hi && (self.hi_open || !other.hi_open));
        lo_ok && hi_ok
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fmt_bound = |v: f64| {
            if v == f64::INFINITY {
                "+inf".to_string()
            } else if v == f64::NEG_INFINITY {
                "-inf".to_string()
            } else {
                format!("{v}")
            }
        };
        write!(
            f,
            "{}{},{}{}",
            if self.lo_open { '(' } else { '[' },
            fmt_bound(self.lo),
            fmt_bound(self.hi),
            if self.hi_open { ')' } else { ']' }
        )
    }
}

/// Axes-aligned box with per-dimension open/closed bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperRect {
    sides: Vec<Interval>,
}

impl HyperRect {
    /// Builds a rectangle, rejecting sides with `lo > hi` or a half-open point.
    pub fn new(sides: Vec<Interval>) -> Result<Self, GeometryError> {
        if let Some(dim) = sides.iter().position(Interval::is_empty) {
            return Err(GeometryError::EmptySide { dim });
        }
        Ok(Self { sides })
    }

    pub fn all_space(dims: usize) -> Self {
        Self { sides: vec![Interval::unbounded(); dims] }
    }

    pub fn dims(&self) -> usize {
        self.sides.len()
    }

    pub fn sides(&self) -> &[Interval] {
        &self.sides
    }

    pub fn is_all_space(&self) -> bool {
        self.sides.iter().all(|s| s.lo == f64::NEG_INFINITY && s.hi == f64::INFINITY)
    }

    /// True when `self` is a subset of `other`.
    pub fn is_subset_of(&self, other: &HyperRect) -> bool {
        self.dims() == other.dims() && self.sides.iter().zip(&other.sides).all(|(a, b)| a.within(b))
    }
}

impl fmt::Display for HyperRect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.sides.iter().enumerate() {
            if i > 0 {
                write!(f, "x")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// Closed box with `p` and `q` as opposite corners.
pub fn rect_between(p: &Coord, q: &Coord) -> Result<HyperRect, GeometryError> {
    same_dims(p.dims(), q.dims())?;
    Ok(HyperRect { sides: p.0.iter().zip(&q.0).map(|(&a, &b)| Interval::closed(a.min(b), a.max(b))).collect() })
}

pub fn contains(r: &HyperRect, x: &Coord) -> Result<bool, GeometryError> {
    same_dims(r.dims(), x.dims())?;
    Ok(r.sides.iter().zip(&x.0).all(|(s, &v)| s.contains(v)))
}

/// Open half-bounded box of the orthant `region` around `p`.
pub fn orthant_rect(p: &Coord, region: &RegionId) -> Result<HyperRect, GeometryError> {
    same_dims(p.dims(), region.len())?;
    Ok(HyperRect {
        sides: p
            .0
            .iter()
            .zip(&region.0)
            .map(|(&v, s)| match s {
                Sign::Minus => Interval::open(f64::NEG_INFINITY, v),
                Sign::Plus => Interval::open(v, f64::INFINITY),
            })
            .collect(),
    })
}

/// Per-dimension intersection; `None` when any side comes out empty.
pub fn intersect(a: &HyperRect, b: &HyperRect) -> Result<Option<HyperRect>, GeometryError> {
    same_dims(a.dims(), b.dims())?;
    let sides: Vec<Interval> = a.sides.iter().zip(&b.sides).map(|(x, y)| x.intersect(y)).collect();
    if sides.iter().any(Interval::is_empty) {
        Ok(None)
    } else {
        Ok(Some(HyperRect { sides }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(v: &[f64]) -> Coord {
        Coord::new(v.to_vec())
    }

    fn rect(sides: &[(f64, f64)], open: bool) -> HyperRect {
        HyperRect::new(
            sides
                .iter()
                .map(|&(lo, hi)| if open { Interval::open(lo, hi) } else { Interval::closed(lo, hi) })
                .collect(),
        )
        .unwrap()
    }

    fn region(s: &str) -> RegionId {
        RegionId::parse(s).unwrap()
    }

    #[test]
    fn l1_examples() {
        assert_eq!(l1_distance(&c(&[0., 0.]), &c(&[3., 4.])).unwrap(), 7.0);
        assert_eq!(l1_distance(&c(&[5., 5.]), &c(&[5., 5.])).unwrap(), 0.0);
        assert_eq!(l1_distance(&c(&[1., 2., 3.]), &c(&[4., 0., 3.])).unwrap(), 5.0);
        assert!(matches!(
            l1_distance(&c(&[1.]), &c(&[1., 2.])),
            Err(GeometryError::DimensionMismatch { left: 1, right: 2 })
        ));
    }

    #[test]
    fn l2_is_euclidean() {
        assert_eq!(l2_distance(&c(&[0., 0.]), &c(&[3., 4.])).unwrap(), 5.0);
    }

    #[test]
    fn orthant_examples() {
        let o = c(&[5., 5.]);
        assert_eq!(orthant_of(&o, &c(&[7., 6.])).unwrap(), region("++"));
        assert_eq!(orthant_of(&o, &c(&[3., 9.])).unwrap(), region("-+"));
        assert_eq!(orthant_of(&o, &c(&[5., 9.])), Err(GeometryError::NotDistinct { dim: 0 }));
    }

    #[test]
    fn hyperplane_examples() {
        let axes = HyperplaneSet::orthogonal(2);
        assert_eq!(hyperplane_region(&axes, &[2., -3.]).unwrap(), region("+-"));
        let sum = HyperplaneSet::new(2, vec![vec![1, 1]]).unwrap();
        assert_eq!(hyperplane_region(&sum, &[1., -2.]).unwrap(), region("-"));
        let diff = HyperplaneSet::new(2, vec![vec![1, -1]]).unwrap();
        assert_eq!(hyperplane_region(&diff, &[3., 3.]).unwrap(), region("+"));
    }

    #[test]
    fn hyperplane_set_validation() {
        assert!(HyperplaneSet::new(2, vec![vec![0, 0]]).is_err());
        assert!(HyperplaneSet::new(2, vec![vec![2, 0]]).is_err());
        assert!(HyperplaneSet::new(2, vec![vec![1, -1], vec![-1, 1]]).is_err());
        assert!(HyperplaneSet::new(2, vec![vec![1]]).is_err());
        for d in 1..=4 {
            let all = HyperplaneSet::all_ternary(d);
            assert_eq!(all.len(), (3usize.pow(d as u32) - 1) / 2);
            HyperplaneSet::new(d, all.planes().to_vec()).unwrap();
        }
    }

    #[test]
    fn rect_between_examples() {
        assert_eq!(rect_between(&c(&[5., 5.]), &c(&[9., 8.])).unwrap(), rect(&[(5., 9.), (5., 8.)], false));
        assert_eq!(rect_between(&c(&[2., 2.]), &c(&[2., 2.])).unwrap(), rect(&[(2., 2.), (2., 2.)], false));
        assert_eq!(rect_between(&c(&[0., 9.]), &c(&[4., 1.])).unwrap(), rect(&[(0., 4.), (1., 9.)], false));
    }

    #[test]
    fn contains_examples() {
        assert!(contains(&rect(&[(5., 9.), (5., 8.)], false), &c(&[7., 6.])).unwrap());
        assert!(!contains(&rect(&[(5., 9.), (5., 8.)], true), &c(&[5., 6.])).unwrap());
        assert!(contains(&rect(&[(5., 9.), (5., 8.)], false), &c(&[5., 6.])).unwrap());
        let half = rect(&[(f64::NEG_INFINITY, 5.), (5., f64::INFINITY)], true);
        assert!(contains(&half, &c(&[4., 6.])).unwrap());
    }

    #[test]
    fn orthant_rect_examples() {
        let p = c(&[5., 5.]);
        let inf = f64::INFINITY;
        assert_eq!(orthant_rect(&p, &region("++")).unwrap(), rect(&[(5., inf), (5., inf)], true));
        assert_eq!(orthant_rect(&p, &region("-+")).unwrap(), rect(&[(-inf, 5.), (5., inf)], true));
        for r in RegionId::all_orthants(2) {
            assert!(!contains(&orthant_rect(&p, &r).unwrap(), &p).unwrap());
        }
    }

    #[test]
    fn intersect_examples() {
        let inf = f64::INFINITY;
        let zone = rect(&[(0., 10.), (0., 10.)], true);
        let hr = rect(&[(5., inf), (5., inf)], true);
        assert_eq!(intersect(&zone, &hr).unwrap(), Some(rect(&[(5., 10.), (5., 10.)], true)));
        let small = rect(&[(0., 3.), (0., 3.)], true);
        assert_eq!(intersect(&small, &hr).unwrap(), None);
        assert_eq!(intersect(&HyperRect::all_space(2), &zone).unwrap(), Some(zone.clone()));
    }

    #[test]
    fn intersect_keeps_stricter_flag() {
        let a = HyperRect::new(vec![Interval::closed(0., 5.)]).unwrap();
        let b = HyperRect::new(vec![Interval::open(0., 5.)]).unwrap();
        assert_eq!(intersect(&a, &b).unwrap().unwrap(), b);
        let touching = HyperRect::new(vec![Interval::open(5., 9.)]).unwrap();
        assert_eq!(intersect(&a, &touching).unwrap(), None);
        let point = HyperRect::new(vec![Interval::closed(5., 9.)]).unwrap();
        assert_eq!(intersect(&a, &point).unwrap().unwrap(), HyperRect::new(vec![Interval::closed(5., 5.)]).unwrap());
    }

    #[test]
    fn rejects_empty_sides() {
        assert!(HyperRect::new(vec![Interval::closed(3., 1.)]).is_err());
        assert!(HyperRect::new(vec![Interval::open(1., 1.)]).is_err());
        assert!(HyperRect::new(vec![Interval::closed(1., 1.)]).is_ok());
    }

    #[test]
    fn orthants_partition_the_grid() {
        // Exhaustive at D = 2 over an integer grid, skipping points sharing a coordinate with p.
        let p = c(&[5., 5.]);
        let rects: Vec<_> = RegionId::all_orthants(2).iter().map(|r| orthant_rect(&p, r).unwrap()).collect();
        for x in 0..=10 {
            for y in 0..=10 {
                let q = c(&[x as f64, y as f64]);
                let hits = rects.iter().filter(|r| contains(r, &q).unwrap()).count();
                if x == 5 || y == 5 {
                    assert_eq!(hits, 0);
                } else {
                    assert_eq!(hits, 1, "{q}");
                }
            }
        }
    }

    fn coord_strategy(d: usize) -> impl Strategy<Value = Coord> {
        prop::collection::vec(0.0f64..1000.0, d).prop_map(Coord::new)
    }

    fn rect_strategy(d: usize) -> impl Strategy<Value = HyperRect> {
        let bound = prop_oneof![Just(f64::NEG_INFINITY), Just(f64::INFINITY), (0u8..20).prop_map(f64::from)];
        prop::collection::vec((bound.clone(), bound, any::<bool>(), any::<bool>()), d).prop_filter_map(
            "non-empty",
            |sides| {
                let sides = sides
                    .into_iter()
                    .map(|(a, b, lo_open, hi_open)| {
                        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                        Interval { lo, hi, lo_open: lo_open || lo.is_infinite(), hi_open: hi_open || hi.is_infinite() }
                    })
                    .collect();
                HyperRect::new(sides).ok()
            },
        )
    }

    proptest! {
        #[test]
        fn l1_is_a_metric(a in coord_strategy(3), b in coord_strategy(3), m in coord_strategy(3)) {
            let ab = l1_distance(&a, &b).unwrap();
            prop_assert_eq!(ab, l1_distance(&b, &a).unwrap());
            prop_assert!(ab <= l1_distance(&a, &m).unwrap() + l1_distance(&m, &b).unwrap() + 1e-9);
            prop_assert_eq!(ab == 0.0, a == b);
        }

        #[test]
        fn orthant_rect_holds_its_member(p in coord_strategy(4), q in coord_strategy(4)) {
            prop_assume!(p.as_slice().iter().zip(q.as_slice()).all(|(a, b)| a != b));
            let r = orthant_of(&p, &q).unwrap();
            prop_assert!(contains(&orthant_rect(&p, &r).unwrap(), &q).unwrap());
            let hits = RegionId::all_orthants(4)
                .iter()
                .filter(|o| contains(&orthant_rect(&p, o).unwrap(), &q).unwrap())
                .count();
            prop_assert_eq!(hits, 1);
        }

        #[test]
        fn rect_between_is_symmetric(p in coord_strategy(3), q in coord_strategy(3)) {
            prop_assert_eq!(rect_between(&p, &q).unwrap(), rect_between(&q, &p).unwrap());
            prop_assert!(contains(&rect_between(&p, &q).unwrap(), &p).unwrap());
        }

        #[test]
        fn intersect_laws(a in rect_strategy(2), b in rect_strategy(2), c in rect_strategy(2)) {
            prop_assert_eq!(intersect(&a, &b).unwrap(), intersect(&b, &a).unwrap());
            prop_assert_eq!(intersect(&a, &a).unwrap(), Some(a.clone()));
            let left = intersect(&a, &b).unwrap().and_then(|ab| intersect(&ab, &c).unwrap());
            let right = intersect(&b, &c).unwrap().and_then(|bc| intersect(&a, &bc).unwrap());
            prop_assert_eq!(&left, &right);
            if let Some(ab) = intersect(&a, &b).unwrap() {
                prop_assert!(ab.is_subset_of(&a) && ab.is_subset_of(&b));
            }
        }
    }
}
