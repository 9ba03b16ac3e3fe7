//! Reflexive polygons, kinks, and the periodic unfolding of a spanning polygon.
//!
//! The unfolding lives in the lower half plane: its top edge is the segment
//! from `(0,0)` to `(l_1,0)` and every edge has direction `(1, -c)` for an
//! integer slope `c` that grows by the kink at each vertex when moving right.
//! Translating by one period `P = sum(l)` composed with the shear
//! `(x, y) -> (x, y - K x)` (`K = sum(k)`) is a symmetry of the whole picture.

use std::collections::BTreeMap;
use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{fmt_q, q, qi, LatticeVector, Q};

/// A point of the plane with exact rational coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pub x: Q,
    pub y: Q,
}

impl Point {
    pub fn new(x: Q, y: Q) -> Self {
        Point { x, y }
    }

    pub fn int(x: i64, y: i64) -> Self {
        Point { x: qi(x), y: qi(y) }
    }

    pub fn origin() -> Self {
        Point::int(0, 0)
    }

    /// `self + s * v`.
    pub fn shifted(&self, v: LatticeVector, s: &Q) -> Point {
        Point { x: &self.x + s * qi(v.a), y: &self.y + s * qi(v.b) }
    }

    pub fn midpoint(&self, other: &Point) -> Point {
        let h = q(1, 2);
        Point { x: (&self.x + &other.x) * &h, y: (&self.y + &other.y) * &h }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl Serialize for Point {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [fmt_q(&self.x), fmt_q(&self.y)].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [x, y] = <[String; 2]>::deserialize(d)?;
        let x = crate::series::parse_q(&x).map_err(serde::de::Error::custom)?;
        let y = crate::series::parse_q(&y).map_err(serde::de::Error::custom)?;
        Ok(Point { x, y })
    }
}

/// `|det(m1 | m2)|` for primitive tangent vectors at a polygon vertex.
pub fn kink(m1: LatticeVector, m2: LatticeVector) -> Result<i64> {
    if m1.is_zero() || m2.is_zero() {
        return Err(Error::ZeroVector);
    }
    Ok(m1.det(m2).abs())
}

struct CaseRow {
    label: &'static str,
    aliases: &'static [&'static str],
    /// Polygon vertices in counterclockwise order, starting at the vertex
    /// whose kink is `kinks[0]`.
    polygon: &'static [(i64, i64)],
    kinks: &'static [i64],
    lengths: &'static [i64],
}

const CASES: &[CaseRow] = &[
    CaseRow {
        label: "(9)",
        aliases: &["p2"],
        polygon: &[(-1, -1), (1, 0), (0, 1)],
        kinks: &[3, 3, 3],
        lengths: &[1, 1, 1],
    },
    CaseRow {
        label: "(8')",
        aliases: &["p1xp1"],
        polygon: &[(0, -1), (1, 0), (0, 1), (-1, 0)],
        kinks: &[2, 2, 2, 2],
        lengths: &[1, 1, 1, 1],
    },
    CaseRow {
        label: "(8)",
        aliases: &["f1"],
        polygon: &[(0, -1), (1, 0), (0, 1), (-1, -1)],
        kinks: &[1, 2, 3, 2],
        lengths: &[1, 1, 1, 1],
    },
    CaseRow {
        label: "(7)",
        aliases: &[],
        polygon: &[(0, -1), (1, 0), (1, 1), (0, 1), (-1, -1)],
        kinks: &[1, 1, 1, 2, 2],
        lengths: &[1, 1, 1, 1, 1],
    },
    CaseRow {
        label: "(6)",
        aliases: &[],
        polygon: &[(-1, -1), (0, -1), (1, 0), (1, 1), (0, 1), (-1, 0)],
        kinks: &[1, 1, 1, 1, 1, 1],
        lengths: &[1, 1, 1, 1, 1, 1],
    },
    CaseRow {
        label: "(8'a)",
        aliases: &[],
        polygon: &[(-1, -1), (1, -1), (0, 1)],
        kinks: &[2, 2, 4],
        lengths: &[2, 1, 1],
    },
    CaseRow {
        label: "(7a)",
        aliases: &[],
        polygon: &[(-1, 0), (-1, -1), (1, -1), (0, 1)],
        kinks: &[1, 1, 2, 3],
        lengths: &[1, 2, 1, 1],
    },
    CaseRow {
        label: "(6a)",
        aliases: &[],
        polygon: &[(-1, 1), (-1, -1), (1, -1), (0, 1)],
        kinks: &[1, 1, 2, 2],
        lengths: &[2, 2, 1, 1],
    },
    CaseRow {
        label: "(6b)",
        aliases: &[],
        polygon: &[(-1, -1), (1, -1), (-1, 2)],
        kinks: &[1, 3, 2],
        lengths: &[2, 1, 3],
    },
    CaseRow {
        label: "(6c)",
        aliases: &[],
        polygon: &[(-1, 0), (-1, -1), (1, -1), (1, 0), (0, 1)],
        kinks: &[1, 1, 1, 1, 2],
        lengths: &[1, 2, 1, 1, 1],
    },
    CaseRow {
        label: "(5a)",
        aliases: &[],
        polygon: &[(0, 1), (-1, 2), (-1, -1), (1, -1)],
        kinks: &[1, 1, 1, 2],
        lengths: &[1, 3, 2, 1],
    },
    CaseRow {
        label: "(5b)",
        aliases: &[],
        polygon: &[(1, -1), (1, 0), (0, 1), (-1, 1), (-1, -1)],
        kinks: &[1, 1, 1, 1, 1],
        lengths: &[1, 1, 1, 2, 2],
    },
    CaseRow {
        label: "(4a)",
        aliases: &[],
        polygon: &[(-1, -1), (1, -1), (1, 1), (-1, 1)],
        kinks: &[1, 1, 1, 1],
        lengths: &[2, 2, 2, 2],
    },
    CaseRow {
        label: "(4b)",
        aliases: &[],
        polygon: &[(1, -1), (1, 0), (-1, 2), (-1, -1)],
        kinks: &[1, 1, 1, 1],
        lengths: &[1, 2, 3, 2],
    },
    CaseRow {
        label: "(4c)",
        aliases: &[],
        polygon: &[(-1, 3), (-1, -1), (1, -1)],
        kinks: &[1, 1, 2],
        lengths: &[4, 2, 2],
    },
    CaseRow {
        label: "(3a)",
        aliases: &["cubic"],
        polygon: &[(-1, -1), (2, -1), (-1, 2)],
        kinks: &[1, 1, 1],
        lengths: &[3, 3, 3],
    },
];

/// One of the 16 reflexive polygons, identified by its standard label such as `(9)` or `(8'a)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CaseId(usize);

impl CaseId {
    /// Resolves a label such as `"(9)"`, `"9"` or an alias such as `"P2"`.
    /// Matching ignores case and surrounding parentheses.
    pub fn parse(name: &str) -> Result<CaseId> {
        let key = name.trim().to_ascii_lowercase();
        let bare = key.trim_start_matches('(').trim_end_matches(')');
        CASES
            .iter()
            .position(|row| {
                row.label.trim_start_matches('(').trim_end_matches(')') == bare || row.aliases.contains(&bare)
            })
            .map(CaseId)
            .ok_or_else(|| Error::UnknownCase(name.to_string()))
    }

    pub fn all() -> impl Iterator<Item = CaseId> {
        (0..CASES.len()).map(CaseId)
    }

    pub fn label(self) -> &'static str {
        CASES[self.0].label
    }

    pub fn polygon(self) -> Vec<LatticeVector> {
        CASES[self.0].polygon.iter().map(|&(a, b)| LatticeVector::new(a, b)).collect()
    }

    /// The kink vector and edge-length vector.
    pub fn case_data(self) -> (Vec<i64>, Vec<i64>) {
        (CASES[self.0].kinks.to_vec(), CASES[self.0].lengths.to_vec())
    }
}

impl fmt::Debug for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CaseId{}", self.label())
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl Serialize for CaseId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.label().serialize(s)
    }
}

impl<'de> Deserialize<'de> for CaseId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        CaseId::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Re-derives `(k, l)` from a polygon given in counterclockwise order.
pub fn kinks_and_lengths(polygon: &[LatticeVector]) -> Result<(Vec<i64>, Vec<i64>)> {
    let n = polygon.len();
    let mut ks = Vec::with_capacity(n);
    let mut ls = Vec::with_capacity(n);
    for i in 0..n {
        let prev = polygon[(i + n - 1) % n];
        let here = polygon[i];
        let next = polygon[(i + 1) % n];
        let (to_prev, _) = (prev - here).primitive()?;
        let (to_next, len) = (next - here).primitive()?;
        ks.push(kink(to_prev, to_next)?);
        ls.push(len);
    }
    Ok((ks, ls))
}

/// One edge (or unit sub-segment) of the unfolding.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    /// Global index; the top edge is 1 and indices increase to the right.
    pub index: i64,
    pub left: Point,
    pub right: Point,
    /// Primitive direction `(1, -c)` from `left` to `right`.
    pub dir: LatticeVector,
    pub length: i64,
    /// Kink at `left` (0 for an interior lattice point of a subdivided edge).
    pub left_kink: i64,
    /// The singular point carried by this edge.
    pub singular: Point,
}

/// The unfolding restricted to a window of fundamental domains.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnfoldingData {
    pub kinks: Vec<i64>,
    pub lengths: Vec<i64>,
    /// Number of generated fundamental domains on each side of the central one.
    pub domains: i64,
    /// Whether edges were subdivided into unit segments (smooth toric model).
    pub refined: bool,
    pub edges: Vec<Edge>,
    /// Vertices of the polygon inside the window (kink >= 1), left to right.
    pub vertices: Vec<Point>,
    pub singular_points: Vec<Point>,
    /// Horizontal translation length of one period.
    pub period: i64,
    /// Total kink per period; the linear monodromy is `(a, b) -> (a, b - shear * a)`.
    pub shear: i64,
    /// `y` offset of the period map `(x, y) -> (x + period, y - shear * x + offset)`.
    pub offset: i64,
    /// Number of edges per period.
    pub edges_per_period: usize,
}

/// Builds the unfolding covering `domains` fundamental domains on each side of
/// the central one.
pub fn build_unfolding(case: CaseId, domains: i64) -> Result<UnfoldingData> {
    let (k, l) = case.case_data();
    unfold(&k, &l, domains, false)
}

/// The unfolding of the smooth toric model: edges are split into unit segments
/// whose midpoints carry the singular points.
pub fn build_refined_unfolding(case: CaseId, domains: i64) -> Result<UnfoldingData> {
    let (k, l) = case.case_data();
    unfold(&k, &l, domains, true)
}

/// Unfolding from explicit kink and length vectors.
pub fn unfold(k: &[i64], l: &[i64], domains: i64, refined: bool) -> Result<UnfoldingData> {
    if domains < 0 {
        return Err(Error::InvalidParameter("domain count must be nonnegative".into()));
    }
    if k.is_empty() || k.len() != l.len() || k.iter().chain(l).any(|&v| v < 1) {
        return Err(Error::InvalidParameter("kinks and lengths must be positive and of equal length".into()));
    }
    let r = k.len() as i64;
    let kink_at = |i: i64| k[(i - 1).rem_euclid(r) as usize];
    let len_of = |i: i64| l[(i - 1).rem_euclid(r) as usize];
    let first = 1 - domains * r;
    let last = r + domains * r;

    // Slopes c_i and left vertices V_i, walking out from E_1 in both directions.
    let mut slope: BTreeMap<i64, i64> = BTreeMap::new();
    let mut vertex: BTreeMap<i64, (i64, i64)> = BTreeMap::new();
    slope.insert(1, 0);
    vertex.insert(1, (0, 0));
    for i in 1..=last {
        let c = slope[&i];
        let (vx, vy) = vertex[&i];
        let li = len_of(i);
        vertex.insert(i + 1, (vx + li, vy - li * c));
        slope.insert(i + 1, c + kink_at(i + 1));
    }
    let mut i = 1;
    while i > first {
        let c = slope[&i] - kink_at(i);
        let li = len_of(i - 1);
        let (vx, vy) = vertex[&i];
        slope.insert(i - 1, c);
        vertex.insert(i - 1, (vx - li, vy + li * c));
        i -= 1;
    }

    let mut edges = Vec::new();
    let mut vertices = Vec::new();
    for i in first..=last {
        let c = slope[&i];
        let dir = LatticeVector::new(1, -c);
        let (vx, vy) = vertex[&i];
        vertices.push(Point::int(vx, vy));
        let li = len_of(i);
        if refined {
            for s in 0..li {
                let left = Point::int(vx + s, vy - s * c);
                let right = Point::int(vx + s + 1, vy - (s + 1) * c);
                edges.push(Edge {
                    index: 0,
                    singular: left.midpoint(&right),
                    left,
                    right,
                    dir,
                    length: 1,
                    left_kink: if s == 0 { kink_at(i) } else { 0 },
                });
            }
        } else {
            let left = Point::int(vx, vy);
            let right = Point::int(vx + li, vy - li * c);
            edges.push(Edge {
                index: 0,
                singular: left.midpoint(&right),
                left,
                right,
                dir,
                length: li,
                left_kink: kink_at(i),
            });
        }
    }
    let (lx, ly) = vertex[&(last + 1)];
    vertices.push(Point::int(lx, ly));

    // Global indices: the first edge whose left end is the origin gets 1.
    let top = edges.iter().position(|e| e.left == Point::origin()).expect("origin is a vertex");
    for (j, e) in edges.iter_mut().enumerate() {
        e.index = j as i64 - top as i64 + 1;
    }
    let singular_points = edges.iter().map(|e| e.singular.clone()).collect();
    let period: i64 = l.iter().sum();
    let shear: i64 = k.iter().sum();
    let offset = vertex[&(1 + r)].1;
    let edges_per_period = if refined { period as usize } else { r as usize };
    Ok(UnfoldingData {
        kinks: k.to_vec(),
        lengths: l.to_vec(),
        domains,
        refined,
        edges,
        vertices,
        singular_points,
        period,
        shear,
        offset,
        edges_per_period,
    })
}

impl UnfoldingData {
    /// Applies the period map `j` times to a point.
    pub fn translate_point(&self, p: &Point, j: i64) -> Point {
        let mut out = p.clone();
        let (pp, kk, off) = (qi(self.period), qi(self.shear), qi(self.offset));
        if j >= 0 {
            for _ in 0..j {
                let y = &out.y - &kk * &out.x + &off;
                out = Point::new(&out.x + &pp, y);
            }
        } else {
            for _ in 0..(-j) {
                let x = &out.x - &pp;
                let y = &out.y + &kk * &x - &off;
                out = Point::new(x, y);
            }
        }
        out
    }

    /// Linear part of the period map applied `j` times.
    pub fn translate_vector(&self, v: LatticeVector, j: i64) -> LatticeVector {
        LatticeVector::new(v.a, v.b - j * self.shear * v.a)
    }

    /// The half-open strip `[lo, lo + period)` of `x`-values centred on the
    /// top edge, used as the reference fundamental domain.
    pub fn central_strip(&self) -> (Q, Q) {
        let top = self.edges.iter().find(|e| e.index == 1).expect("top edge");
        let centre = (&top.left.x + &top.right.x) * q(1, 2);
        let lo = centre - q(self.period, 2);
        let hi = &lo + qi(self.period);
        (lo, hi)
    }

    /// Which period a given `x` belongs to, relative to the central strip.
    pub fn domain_of(&self, x: &Q) -> i64 {
        let (lo, _) = self.central_strip();
        ((x - lo) / qi(self.period)).floor().to_integer().try_into().unwrap_or(i64::MAX)
    }

    /// Piecewise-linear interpolation of the edge slopes through the singular
    /// points, extended periodically. It is nonincreasing in `x`.
    pub fn sigma(&self, x: &Q) -> Q {
        let j = self.domain_of(x);
        let pp = qi(self.period);
        let xr = x - qi(j) * &pp;
        // Nodes of three consecutive periods, built from the central one so
        // that any reduced x is bracketed.
        let nodes = self.central_nodes();
        let mut val = None;
        for w in nodes.windows(2) {
            let (x0, s0) = &w[0];
            let (x1, s1) = &w[1];
            if *x0 <= xr && xr <= *x1 {
                let t = (&xr - x0) / (x1 - x0);
                val = Some(s0 + t * (s1 - s0));
                break;
            }
        }
        val.expect("reduced x lies within the node range") - qi(j * self.shear)
    }

    pub(crate) fn central_nodes(&self) -> Vec<(Q, Q)> {
        let ep = self.edges_per_period as i64;
        let slope = |e: &Edge| qi(e.dir.b);
        let mut out = Vec::new();
        for idx in (1 - ep)..=(2 * ep) {
            let shift = (idx - 1).div_euclid(ep);
            let base = idx - shift * ep;
            let e = self.edges.iter().find(|e| e.index == base).expect("central edge");
            let x = &e.singular.x + qi(shift * self.period);
            out.push((x, slope(e) - qi(shift * self.shear)));
        }
        out
    }

    /// The local degree `D_q(m) = m_b - m_a * sigma(q_x)`. It is additive in
    /// `m`, vanishes on an initial wall at its singular point, never decreases
    /// along a ray, and equals the `y`-exponent on upward monomials.
    pub fn local_degree(&self, qx: &Q, m: LatticeVector) -> Q {
        qi(m.b) - qi(m.a) * self.sigma(qx)
    }

    /// Gcd of the kinks: every upward monomial has `y`-degree divisible by it.
    pub fn degree_unit(&self) -> i64 {
        self.kinks.iter().fold(0, |g, &k| g.gcd(&k))
    }

    /// Left-end `x` and kink of the edge with global index `i`, using
    /// periodicity for indices outside the window.
    fn left_end(&self, i: i64) -> (Q, i64) {
        let ep = self.edges_per_period as i64;
        let shift = (i - 1).div_euclid(ep);
        let e = self.edge(i - shift * ep).expect("central edge");
        (&e.left.x + qi(shift * self.period), e.left_kink)
    }

    /// Smallest local degree an initial wall of the central period can have
    /// where it first meets a non-parallel wall, namely at the nearest kinked
    /// vertex in its direction. Every use of an initial wall in a scattered
    /// term costs at least this much.
    pub fn min_leg_degree(&self) -> Q {
        let ep = self.edges_per_period as i64;
        let mut best: Option<Q> = None;
        for i in 1..=ep {
            let dir = self.edge(i).expect("central edge").dir;
            let mut j = i + 1;
            while self.left_end(j).1 == 0 {
                j += 1;
            }
            let right = self.local_degree(&self.left_end(j).0, dir);
            let mut j = i;
            while self.left_end(j).1 == 0 {
                j -= 1;
            }
            let left = self.local_degree(&self.left_end(j).0, -dir);
            for c in [right, left] {
                if best.as_ref().is_none_or(|b| c < *b) {
                    best = Some(c);
                }
            }
        }
        best.expect("at least one edge")
    }

    /// A t-order after which scattering with local-degree cap `cap` adds
    /// nothing: each t-variable in a term costs at least
    /// [`Self::min_leg_degree`].
    pub fn saturation_order(&self, cap: &Q) -> u32 {
        (cap / self.min_leg_degree()).floor().to_integer().try_into().unwrap_or(u32::MAX)
    }

    pub fn edge(&self, index: i64) -> Option<&Edge> {
        self.edges.iter().find(|e| e.index == index)
    }

    /// Lattice points of the boundary inside the window, left to right.
    pub fn boundary_lattice_points(&self) -> Vec<Point> {
        let mut out = Vec::new();
        for e in &self.edges {
            for s in 0..e.length {
                out.push(e.left.shifted(e.dir, &qi(s)));
            }
        }
        if let Some(e) = self.edges.last() {
            out.push(e.right.clone());
        }
        out
    }
}

/// Class bookkeeping for a smooth toric model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmoothModelClasses {
    pub basis_names: Vec<String>,
    /// Period of the table (the `x`-translation length).
    pub period: i64,
    /// Class vector of the boundary lattice point with `x = key mod period`.
    pub class_of_boundary_point: BTreeMap<i64, Vec<i64>>,
}

impl SmoothModelClasses {
    /// Class vector attached to the boundary lattice point at integer `x`.
    pub fn class_at(&self, x: i64) -> Option<&Vec<i64>> {
        self.class_of_boundary_point.get(&x.rem_euclid(self.period))
    }

    pub fn rank(&self) -> usize {
        self.basis_names.len()
    }

    /// Reads a user table `{"basis": [...], "points": [{"xy": [x,y], "class": [...]}]}`.
    pub fn from_json(text: &str, period: i64) -> Result<SmoothModelClasses> {
        #[derive(Deserialize)]
        struct PointRow {
            xy: [i64; 2],
            class: Vec<i64>,
        }
        #[derive(Deserialize)]
        struct Table {
            basis: Vec<String>,
            points: Vec<PointRow>,
        }
        let table: Table = serde_json::from_str(text)?;
        let mut map = BTreeMap::new();
        for row in table.points {
            if row.class.len() != table.basis.len() {
                return Err(Error::Parse("class vector length differs from basis".into()));
            }
            map.insert(row.xy[0].rem_euclid(period), row.class);
        }
        if map.len() as i64 != period {
            return Err(Error::Parse(format!("table must cover all {period} boundary points of one period")));
        }
        Ok(SmoothModelClasses { basis_names: table.basis, period, class_of_boundary_point: map })
    }
}

/// Anticanonical degrees `D.b` of the basis classes of the built-in tables.
pub fn basis_anticanonical_degrees(case: CaseId) -> Result<Vec<i64>> {
    match case.label() {
        "(9)" => Ok(vec![3]),
        "(8'a)" => Ok(vec![2, 2]),
        _ => Err(Error::MissingClasses(case.label().into())),
    }
}

/// Built-in class tables.
pub fn smooth_model_classes(case: CaseId) -> Result<SmoothModelClasses> {
    match case.label() {
        "(9)" => Ok(SmoothModelClasses {
            basis_names: vec!["H".into()],
            period: 3,
            class_of_boundary_point: (0..3).map(|x| (x, vec![1])).collect(),
        }),
        // Smooth model F_2 of P1 x P1. The boundary points x = 0, 1, 2, 3 carry
        // the fibre F, the negative section E, F again and S = 2F + E, sent to
        // L2, L1 - L2, L2 and L1 + L2.
        "(8'a)" => Ok(SmoothModelClasses {
            basis_names: vec!["L1".into(), "L2".into()],
            period: 4,
            class_of_boundary_point: [(0, vec![0, 1]), (1, vec![1, -1]), (2, vec![0, 1]), (3, vec![1, 1])]
                .into_iter()
                .collect(),
        }),
        _ => Err(Error::MissingClasses(case.label().into())),
    }
}
