//! Completion of scattered rays to tropical curves, and their multiplicities.
//!
//! A curve produced here is a rooted tree: vertex 0 is the base of the ray
//! being completed, the unbounded output leg leaves it along the ray, and the
//! other edges lead back to the bases of the parent rays.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Mutex, OnceLock};

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::diagram::{Diagram, Ray};
use crate::error::{Error, Result};
use crate::lattice::Point;
use crate::series::{q, qi, LatticeVector, Monomial, Series, EXACT, Q};

/// Where a leg ends.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Terminus {
    Unbounded,
    Singular { point: Point },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Leg {
    pub vertex: usize,
    /// Primitive direction pointing away from the vertex.
    pub direction: LatticeVector,
    pub weight: u32,
    pub terminus: Terminus,
}

/// A bounded edge; `child` is the endpoint closer to the output leg.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CurveEdge {
    pub child: usize,
    pub parent: usize,
    pub weight: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TropicalCurve {
    pub vertices: Vec<Point>,
    pub edges: Vec<CurveEdge>,
    pub legs: Vec<Leg>,
}

/// Primitive integer direction of the segment from `from` to `to`.
pub fn segment_direction(from: &Point, to: &Point) -> Result<LatticeVector> {
    let dx = &to.x - &from.x;
    let dy = &to.y - &from.y;
    let l = dx.denom().lcm(dy.denom());
    let a = (dx * Q::from_integer(l.clone())).to_integer();
    let b = (dy * Q::from_integer(l)).to_integer();
    let a = a.to_i64().ok_or_else(|| Error::OutOfRange("segment direction".into()))?;
    let b = b.to_i64().ok_or_else(|| Error::OutOfRange("segment direction".into()))?;
    Ok(LatticeVector::new(a, b).primitive()?.0)
}

impl TropicalCurve {
    /// Weighted primitive tangent vectors of all edges and legs at `v`,
    /// pointing away from `v`.
    pub fn weighted_tangents(&self, v: usize) -> Result<Vec<LatticeVector>> {
        let mut out = Vec::new();
        for e in &self.edges {
            if e.child == v {
                out.push(segment_direction(&self.vertices[v], &self.vertices[e.parent])?.scale(e.weight as i64));
            } else if e.parent == v {
                out.push(segment_direction(&self.vertices[v], &self.vertices[e.child])?.scale(e.weight as i64));
            }
        }
        for l in self.legs.iter().filter(|l| l.vertex == v) {
            out.push(l.direction.scale(l.weight as i64));
        }
        Ok(out)
    }

    pub fn check_balancing(&self) -> Result<()> {
        for v in 0..self.vertices.len() {
            let sum = self.weighted_tangents(v)?.into_iter().fold(LatticeVector::new(0, 0), |a, b| a + b);
            if !sum.is_zero() {
                return Err(Error::Unbalanced(v));
            }
        }
        Ok(())
    }

    /// The unbounded output leg.
    pub fn output_leg(&self) -> Option<&Leg> {
        self.legs.iter().find(|l| l.terminus == Terminus::Unbounded && l.vertex == 0)
    }

    /// Children of `v` in the rooted tree, as canonical strings, used to
    /// count automorphisms.
    fn canonical(&self, v: usize) -> String {
        let mut parts: Vec<String> = Vec::new();
        for e in self.edges.iter().filter(|e| e.child == v) {
            parts.push(format!("E{}:{}", e.weight, self.canonical(e.parent)));
        }
        for l in self.legs.iter().filter(|l| l.vertex == v && l.terminus != Terminus::Unbounded) {
            parts.push(format!("L{}:{}:{:?}", l.weight, l.direction, l.terminus));
        }
        parts.sort();
        format!("V{}[{}]", self.vertices[v], parts.join(","))
    }

    /// Order of the group of automorphisms fixing the embedding. As the
    /// curve is a tree hanging from its output leg, such an automorphism
    /// only permutes identical branches at each vertex.
    pub fn automorphisms(&self) -> u64 {
        let mut total = 1u64;
        for v in 0..self.vertices.len() {
            let mut count: BTreeMap<String, u64> = BTreeMap::new();
            for e in self.edges.iter().filter(|e| e.child == v) {
                *count.entry(format!("E{}:{}", e.weight, self.canonical(e.parent))).or_default() += 1;
            }
            for l in self.legs.iter().filter(|l| l.vertex == v && l.terminus != Terminus::Unbounded) {
                *count.entry(format!("L{}:{}:{:?}", l.weight, l.direction, l.terminus)).or_default() += 1;
            }
            for c in count.values() {
                total *= (1..=*c).product::<u64>();
            }
        }
        total
    }

    fn valency(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.child == v || e.parent == v).count()
            + self.legs.iter().filter(|l| l.vertex == v).count()
    }
}

fn caterpillar(vectors: &[LatticeVector]) -> Option<i64> {
    let mut acc = vectors[0];
    let mut prod = 1i64;
    for v in &vectors[1..vectors.len() - 1] {
        let d = acc.det(*v).abs();
        if d == 0 {
            return None;
        }
        prod *= d;
        acc = acc + *v;
    }
    Some(prod)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Products of determinants along every caterpillar ordering of the weighted
/// tangents that never merges two parallel vectors.
pub fn caterpillar_values(tangents: &[LatticeVector]) -> Vec<i64> {
    let mut sorted = tangents.to_vec();
    sorted.sort_by(|a, b| crate::engine::angle_cmp(*a, *b));
    permutations(sorted.len())
        .into_iter()
        .filter_map(|p| caterpillar(&p.iter().map(|&i| sorted[i]).collect::<Vec<_>>()))
        .collect()
}

fn deformation_cache() -> &'static Mutex<HashMap<Vec<LatticeVector>, i64>> {
    static CACHE: OnceLock<Mutex<HashMap<Vec<LatticeVector>, i64>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Weighted count of the trivalent curves obtained by moving the incoming
/// ends `v_i` (weighted vectors pointing into the vertex) to general
/// position, with the outgoing end `sum v_i` kept.
///
/// The count is read off from scattering: lines through one point with
/// functions `1 + w_i s_i z^(v_i)` produce, in the outgoing direction, a
/// logarithm whose coefficient of `s_1 ... s_n z^(sum v_i)` is `w_out` times
/// the count. Unlike a single caterpillar ordering this does not depend on a
/// choice when several ends are parallel.
pub fn deformation_count(incoming: &[LatticeVector]) -> Result<i64> {
    let out = incoming.iter().fold(LatticeVector::new(0, 0), |a, b| a + *b);
    let (out_dir, w_out) = out.primitive()?;
    if incoming.len() == 2 {
        return Ok(incoming[0].det(incoming[1]).abs());
    }
    let mut key = incoming.to_vec();
    key.sort();
    if let Some(v) = deformation_cache().lock().expect("cache lock").get(&key) {
        return Ok(*v);
    }
    let n = key.len();
    let mut d = Diagram::empty(n);
    for (i, v) in key.iter().enumerate() {
        let (u, w) = v.primitive()?;
        let mut t = vec![0u16; n];
        t[i] = 1;
        let mut f = Series::one(n, EXACT);
        f.add_term(Monomial::new(t, *v), qi(w));
        d.push_line(Point::origin(), u, f)?;
    }
    let s = crate::engine::scatter(&d, n as u32, false)?;
    let mut prod = Series::one(n, n as u32);
    for r in s.rays.iter().filter(|r| !r.initial && r.direction == out_dir && r.base == Point::origin()) {
        prod = prod.mul(&r.function.rebound(n as u32))?;
    }
    let c = prod.log1()?.coeff(&Monomial::new(vec![1; n], out)) / qi(w_out);
    if !c.is_integer() {
        return Err(Error::InvalidParameter(format!("non-integral deformation count {c}")));
    }
    let v = c.to_integer().abs().to_i64().ok_or_else(|| Error::OutOfRange("deformation count".into()))?;
    deformation_cache().lock().expect("cache lock").insert(key, v);
    Ok(v)
}

/// Weighted tangent of the edge or leg at `v` leading towards the output.
fn outgoing_tangent(curve: &TropicalCurve, v: usize) -> Result<LatticeVector> {
    if v == 0 {
        let l = curve.output_leg().ok_or_else(|| Error::InvalidParameter("curve without output leg".into()))?;
        return Ok(l.direction.scale(l.weight as i64));
    }
    let e = curve
        .edges
        .iter()
        .find(|e| e.parent == v)
        .ok_or_else(|| Error::InvalidParameter(format!("vertex {v} is not connected to the output")))?;
    Ok(segment_direction(&curve.vertices[v], &curve.vertices[e.child])?.scale(e.weight as i64))
}

/// Multiplicity of a vertex of valency at least three: the absolute
/// determinant of two weighted tangents when trivalent, and otherwise the
/// product of determinants over a deformation into trivalent vertices,
/// summed over all such deformations (see [`deformation_count`]).
pub fn vertex_multiplicity(curve: &TropicalCurve, v: usize) -> Result<i64> {
    if curve.valency(v) < 3 {
        return Err(Error::InvalidParameter(format!("vertex {v} has valency below three")));
    }
    let tangents = curve.weighted_tangents(v)?;
    if !tangents.iter().fold(LatticeVector::new(0, 0), |a, b| a + *b).is_zero() {
        return Err(Error::Unbalanced(v));
    }
    if tangents.len() == 3 {
        return Ok(tangents[0].det(tangents[1]).abs());
    }
    let out = outgoing_tangent(curve, v)?;
    let mut incoming: Vec<LatticeVector> = tangents.into_iter().map(|t| -t).collect();
    let pos = incoming.iter().position(|t| *t == -out).expect("outgoing tangent is among the tangents");
    incoming.remove(pos);
    deformation_count(&incoming)
}

/// `(-1)^(w+1) / w^2`.
pub fn leg_multiplicity(w: u32) -> Result<Q> {
    if w < 1 {
        return Err(Error::InvalidParameter("leg weight must be positive".into()));
    }
    let w = w as i64;
    Ok(q(if w % 2 == 1 { 1 } else { -1 }, w * w))
}

/// Product of vertex and leg multiplicities divided by the automorphism
/// count. Only legs ending at singular points contribute a leg factor.
pub fn multiplicity(curve: &TropicalCurve) -> Result<Q> {
    curve.check_balancing()?;
    let mut m = Q::one();
    for v in 0..curve.vertices.len() {
        if curve.valency(v) >= 3 {
            m *= qi(vertex_multiplicity(curve, v)?);
        }
    }
    for l in &curve.legs {
        if matches!(l.terminus, Terminus::Singular { .. }) {
            m *= leg_multiplicity(l.weight)?;
        }
    }
    Ok(m / qi(curve.automorphisms() as i64))
}

/// Weight and primitive exponent of a ray with a single nontrivial term.
pub fn ray_weight(ray: &Ray) -> Result<(u32, LatticeVector)> {
    let (_, mono) =
        ray.single_term().ok_or_else(|| Error::InvalidParameter(format!("ray {} has more than one term", ray.id)))?;
    let (u, w) = mono.m.primitive()?;
    Ok((w as u32, u))
}

/// Exponent step and singular endpoint of an initial parent: one use of it
/// contributes `step`, and the corresponding leg ends at `point`.
fn initial_leg(d: &Diagram, parent: &Ray) -> Result<(LatticeVector, u32, Terminus)> {
    let (k, _) = parent
        .function
        .terms()
        .find(|(k, _)| k.t_degree() == 1)
        .ok_or_else(|| Error::InvalidParameter(format!("initial ray {} has no linear term", parent.id)))?;
    let (u, w) = k.m.primitive()?;
    let terminus =
        if d.unfolding.is_some() { Terminus::Singular { point: parent.base.clone() } } else { Terminus::Unbounded };
    Ok((u, w as u32, terminus))
}

/// Partitions of `n` into positive parts, largest first.
fn partitions(n: u32) -> Vec<Vec<u32>> {
    fn rec(n: u32, max: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if n == 0 {
            out.push(cur.clone());
            return;
        }
        for p in (1..=n.min(max)).rev() {
            cur.push(p);
            rec(n - p, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n, &mut Vec::new(), &mut out);
    out
}

/// Builder state: appends subtrees to one curve.
struct Builder<'a> {
    d: &'a Diagram,
    ids: BTreeMap<&'a str, &'a Ray>,
}

/// How to expand the parents of a ray.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// First ancestry alternative; an initial parent used `j` times is one leg
    /// of weight `j`.
    Single,
    /// Every ancestry alternative and every splitting of initial uses into
    /// separate legs.
    All,
}

impl<'a> Builder<'a> {
    fn new(d: &'a Diagram) -> Self {
        Builder { d, ids: d.by_id() }
    }

    /// All expansions of `ray` hanging below vertex `root` of `base`.
    fn expand(&self, ray: &Ray, base: TropicalCurve, root: usize, mode: Mode) -> Result<Vec<TropicalCurve>> {
        if ray.ancestry.is_empty() {
            return Err(Error::NoAncestry(ray.id.clone()));
        }
        let alts = if mode == Mode::Single { &ray.ancestry[..1] } else { &ray.ancestry[..] };
        let mut out = Vec::new();
        for alt in alts {
            let mut partial = vec![base.clone()];
            for p in alt {
                let parent = self.ids.get(p.id.as_str()).ok_or_else(|| Error::NoAncestry(p.id.clone()))?;
                let mut next = Vec::new();
                for c in partial {
                    next.extend(self.attach(parent, p.uses, c, root, mode)?);
                }
                partial = next;
            }
            out.extend(partial);
        }
        Ok(out)
    }

    fn attach(&self, parent: &Ray, uses: u32, c: TropicalCurve, root: usize, mode: Mode) -> Result<Vec<TropicalCurve>> {
        let here = c.vertices[root].clone();
        if parent.initial {
            let (u, w0, terminus) = initial_leg(self.d, parent)?;
            let splits = if mode == Mode::Single { vec![vec![uses]] } else { partitions(uses) };
            let mut out = Vec::new();
            for parts in splits {
                let mut cc = c.clone();
                for p in parts {
                    cc.legs.push(Leg { vertex: root, direction: -u, weight: p * w0, terminus: terminus.clone() });
                }
                out.push(cc);
            }
            return Ok(out);
        }
        let (w, _) = ray_weight(parent)?;
        if parent.base == here {
            return Err(Error::InvalidParameter(format!("parent {} is based at its child", parent.id)));
        }
        let mut cc = c;
        let v = cc.vertices.len();
        cc.vertices.push(parent.base.clone());
        cc.edges.push(CurveEdge { child: root, parent: v, weight: uses * w });
        self.expand(parent, cc, v, mode)
    }
}

fn seed(ray: &Ray) -> Result<TropicalCurve> {
    let (w, u) = ray_weight(ray)?;
    Ok(TropicalCurve {
        vertices: vec![ray.base.clone()],
        edges: Vec::new(),
        legs: vec![Leg { vertex: 0, direction: u, weight: w, terminus: Terminus::Unbounded }],
    })
}

/// Completes a non-initial ray to a tropical curve by following its
/// recorded ancestry back to the initial walls.
pub fn complete_ray(d: &Diagram, ray: &Ray) -> Result<TropicalCurve> {
    if ray.initial {
        return Err(Error::NoAncestry(ray.id.clone()));
    }
    let b = Builder::new(d);
    let mut curves = b.expand(ray, seed(ray)?, 0, Mode::Single)?;
    let mut c = curves.remove(0);
    c.legs.sort();
    Ok(c)
}

/// Every tropical curve a ray stands for: all ancestry alternatives, and
/// every way of splitting repeated uses of an initial wall into legs.
pub fn curves_of_ray(d: &Diagram, ray: &Ray) -> Result<Vec<TropicalCurve>> {
    if ray.initial {
        return Err(Error::NoAncestry(ray.id.clone()));
    }
    let b = Builder::new(d);
    let mut curves = b.expand(ray, seed(ray)?, 0, Mode::All)?;
    for c in &mut curves {
        c.legs.sort();
    }
    Ok(curves)
}

/// `sum_h (D.h) Mult(h) y^(D.h)` over all curves completing upward rays in
/// the central fundamental domain of a scattered projective-plane diagram,
/// for degrees up to `dmax`.
pub fn tropical_sum_check(d: &Diagram, dmax: i64) -> Result<Series> {
    let mut out = Series::zero(0, EXACT);
    if d.rays.is_empty() {
        return Ok(out);
    }
    let case = d.case().ok_or_else(|| Error::InvalidParameter("not a case diagram".into()))?;
    if case.label() != "(9)" {
        return Err(Error::InvalidParameter(format!("the degree weighting is specific to (9), got {}", case.label())));
    }
    let u = d.unfolding.as_ref().expect("case diagram");
    let (lo, hi) = u.central_strip();
    let up = LatticeVector::new(0, 1);
    for r in d.scattered_rays() {
        if r.direction != up || r.base.x < lo || r.base.x >= hi {
            continue;
        }
        let (w, _) = ray_weight(r)?;
        if w as i64 > 3 * dmax {
            continue;
        }
        for c in curves_of_ray(d, r)? {
            let m = multiplicity(&c)?;
            out.add_term(Monomial::new(Vec::new(), up.scale(w as i64)), m * qi(w as i64));
        }
    }
    Ok(out)
}

/// The coefficient of a single-term ray with every t-variable set to 1.
pub fn ray_coefficient(ray: &Ray) -> Option<Q> {
    ray.single_term().map(|(c, _)| c)
}

/// Checks `a = w Mult(h)` for a ray; returns both sides.
pub fn coefficient_identity(d: &Diagram, ray: &Ray) -> Result<(Q, Q)> {
    let (w, _) = ray_weight(ray)?;
    let a = ray_coefficient(ray).unwrap_or_else(Q::zero);
    let m = multiplicity(&complete_ray(d, ray)?)?;
    Ok((a, m * qi(w as i64)))
}
