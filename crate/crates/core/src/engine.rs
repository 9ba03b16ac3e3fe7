//! Wall-crossing automorphisms, path-ordered products and the order-by-order
//! consistency algorithm.
//!
//! Crossing a ray with primitive direction `u` counterclockwise acts by
//! `z^m -> f^{det(u, m)} z^m`: the normal vector evaluating positively on the
//! loop is the quarter-turn rotation of `u`. The product around a point is
//! taken counterclockwise starting at the direction `(1,0)`.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::diagram::{Diagram, Parent, Ray};
use crate::error::{Error, Result};
use crate::lattice::{Point, UnfoldingData};
use crate::series::{qi, LatticeVector, Monomial, Series, Q};

/// A ring automorphism given by the images of `x` and `y`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlaneAutomorphism {
    pub image_x: Series,
    pub image_y: Series,
}

fn shift(s: &Series, m: LatticeVector) -> Series {
    let terms = s.terms().map(|(k, v)| (Monomial::new(k.t.clone(), k.m + m), v.clone()));
    Series::from_terms(s.nvars(), s.t_bound(), terms).expect("same variable count")
}

fn monomial_series(nvars: usize, bound: u32, m: LatticeVector) -> Series {
    Series::term(nvars, bound, vec![0; nvars], m, Q::one())
}

impl PlaneAutomorphism {
    pub fn identity(nvars: usize, bound: u32) -> Self {
        PlaneAutomorphism {
            image_x: monomial_series(nvars, bound, LatticeVector::new(1, 0)),
            image_y: monomial_series(nvars, bound, LatticeVector::new(0, 1)),
        }
    }

    fn units(&self) -> (Series, Series) {
        (shift(&self.image_x, LatticeVector::new(-1, 0)), shift(&self.image_y, LatticeVector::new(0, -1)))
    }

    /// Image of `z^m`.
    pub fn image_of(&self, m: LatticeVector) -> Result<Series> {
        let (ux, uy) = self.units();
        let f = ux.int_pow(m.a)?.mul(&uy.int_pow(m.b)?)?;
        Ok(shift(&f, m))
    }

    /// Applies the automorphism to a series (t-variables are fixed).
    pub fn apply(&self, s: &Series) -> Result<Series> {
        let mut out = Series::zero(s.nvars(), s.t_bound().min(self.image_x.t_bound()));
        let mut cache: BTreeMap<LatticeVector, Series> = BTreeMap::new();
        for (k, v) in s.terms() {
            let image = match cache.entry(k.m) {
                std::collections::btree_map::Entry::Occupied(e) => e.into_mut(),
                std::collections::btree_map::Entry::Vacant(e) => e.insert(self.image_of(k.m)?),
            };
            let coeff = Series::term(s.nvars(), out.t_bound(), k.t.clone(), LatticeVector::new(0, 0), v.clone());
            out = out.add(&coeff.mul(image)?)?;
        }
        Ok(out)
    }

    /// `self ∘ inner`: first `inner`, then `self`.
    pub fn compose(&self, inner: &PlaneAutomorphism) -> Result<PlaneAutomorphism> {
        Ok(PlaneAutomorphism { image_x: self.apply(&inner.image_x)?, image_y: self.apply(&inner.image_y)? })
    }

    pub fn is_identity(&self) -> bool {
        let id = PlaneAutomorphism::identity(self.image_x.nvars(), self.image_x.t_bound());
        self.image_x.terms().eq(id.image_x.terms()) && self.image_y.terms().eq(id.image_y.terms())
    }
}

/// The automorphism of crossing `ray` in `crossing` direction, truncated at
/// total t-degree `bound`.
pub fn wall_crossing(ray: &Ray, crossing: LatticeVector, bound: u32) -> Result<PlaneAutomorphism> {
    let u = ray.direction;
    let side = u.det(crossing);
    if side == 0 {
        return Err(Error::ParallelCrossing);
    }
    let n = if side > 0 { u.rot90() } else { -u.rot90() };
    let f = ray.function.rebound(bound);
    Ok(PlaneAutomorphism {
        image_x: shift(&f.int_pow(n.a)?, LatticeVector::new(1, 0)),
        image_y: shift(&f.int_pow(n.b)?, LatticeVector::new(0, 1)),
    })
}

/// One ray as seen from a point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalRay {
    /// Direction away from the point (the reversed direction for an incoming half).
    pub direction: LatticeVector,
    pub function: Series,
    /// Index of the originating ray in the diagram.
    pub source: usize,
    /// Whether the originating ray starts at this point.
    pub based_here: bool,
}

/// All rays through one point, sorted counterclockwise from `(1,0)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalDiagram {
    pub point: Point,
    pub rays: Vec<LocalRay>,
}

fn half(v: LatticeVector) -> u8 {
    if v.b > 0 || (v.b == 0 && v.a > 0) {
        0
    } else {
        1
    }
}

/// Counterclockwise angular order starting at `(1,0)` inclusive.
pub fn angle_cmp(a: LatticeVector, b: LatticeVector) -> std::cmp::Ordering {
    half(a).cmp(&half(b)).then_with(|| 0.cmp(&a.det(b)))
}

/// Whether `p` lies on `base + R_{>=0} dir`; returns the parameter if so.
fn param_on_ray(base: &Point, dir: LatticeVector, p: &Point) -> Option<Q> {
    let dx = &p.x - &base.x;
    let dy = &p.y - &base.y;
    if &dx * qi(dir.b) != &dy * qi(dir.a) {
        return None;
    }
    let s = if dir.a != 0 { dx / qi(dir.a) } else { dy / qi(dir.b) };
    if s.is_negative() {
        None
    } else {
        Some(s)
    }
}

fn excluded_here(d: &Diagram, ray: &Ray, p: &Point) -> bool {
    // A wall that ends at `p` does not take part in scattering there: going
    // around its end point always picks up its function.
    ray.base == *p && d.ends_at_base(ray)
}

/// Rays through `p`; a ray passing through `p` is split into its outgoing and
/// incoming halves, both carrying its function.
pub fn localize(d: &Diagram, p: &Point) -> LocalDiagram {
    let mut rays = Vec::new();
    for (i, r) in d.rays.iter().enumerate() {
        if excluded_here(d, r, p) {
            continue;
        }
        if let Some(s) = param_on_ray(&r.base, r.direction, p) {
            let based_here = s.is_zero();
            rays.push(LocalRay { direction: r.direction, function: r.function.clone(), source: i, based_here });
            if !based_here {
                rays.push(LocalRay { direction: -r.direction, function: r.function.clone(), source: i, based_here });
            }
        }
    }
    rays.sort_by(|a, b| angle_cmp(a.direction, b.direction).then(a.source.cmp(&b.source)));
    LocalDiagram { point: p.clone(), rays }
}

/// Path-ordered product by explicit composition of wall-crossing
/// automorphisms. Slow; kept as an independent reference.
pub fn path_ordered_product_naive(ld: &LocalDiagram, nvars: usize, bound: u32) -> Result<PlaneAutomorphism> {
    let mut theta = PlaneAutomorphism::identity(nvars, bound);
    for r in &ld.rays {
        let ray = Ray::new(ld.point.clone(), r.direction, r.function.clone(), false)?;
        let wc = wall_crossing(&ray, r.direction.rot90(), bound)?;
        theta = wc.compose(&theta)?;
    }
    Ok(theta)
}

/// An ideal-compatible cut on exponents: keep `m` iff
/// `(m_b * sd - m_a * sn) * cd <= cn * sd`, i.e. `m_b - m_a * sigma <= cap`.
#[derive(Clone, Copy, Debug)]
struct DegreeCut {
    sn: i128,
    sd: i128,
    cn: i128,
    cd: i128,
}

impl DegreeCut {
    fn new(sigma: &Q, cap: &Q) -> Option<DegreeCut> {
        Some(DegreeCut {
            sn: sigma.numer().to_i128()?,
            sd: sigma.denom().to_i128()?,
            cn: cap.numer().to_i128()?,
            cd: cap.denom().to_i128()?,
        })
    }

    fn keep(&self, m: LatticeVector) -> bool {
        (m.b as i128 * self.sd - m.a as i128 * self.sn) * self.cd <= self.cn * self.sd
    }
}

fn keep_fn(cut: Option<DegreeCut>) -> impl Fn(&Monomial) -> bool + Copy {
    move |k: &Monomial| cut.is_none_or(|c| c.keep(k.m))
}

struct PowerCache<'a> {
    base: Series,
    inverse: Option<Series>,
    powers: HashMap<i64, Series>,
    keep: &'a dyn Fn(&Monomial) -> bool,
}

impl<'a> PowerCache<'a> {
    fn new(f: &Series, bound: u32, keep: &'a dyn Fn(&Monomial) -> bool) -> Self {
        PowerCache { base: f.rebound(bound).filtered(keep), inverse: None, powers: HashMap::new(), keep }
    }

    fn get(&mut self, n: i64) -> Result<&Series> {
        if !self.powers.contains_key(&n) {
            let p = if n == 0 {
                Series::one(self.base.nvars(), self.base.t_bound())
            } else if n == 1 {
                self.base.clone()
            } else if n == -1 {
                if self.inverse.is_none() {
                    self.inverse = Some(self.base.inverse()?.filtered(self.keep));
                }
                self.inverse.clone().expect("set above")
            } else {
                let step = if n > 0 { 1 } else { -1 };
                let prev = self.get(n - step)?.clone();
                let unit = self.get(step)?.clone();
                prev.mul_filtered(&unit, self.keep)?
            };
            self.powers.insert(n, p);
        }
        Ok(&self.powers[&n])
    }
}

/// Applies the crossing of a wall with direction `u` to a relative series:
/// every term `c z^mu` becomes `c z^mu f^{det(u, mu)}`.
fn cross(u: LatticeVector, cache: &mut PowerCache<'_>, s: &Series, keep: &dyn Fn(&Monomial) -> bool) -> Result<Series> {
    let bound = s.t_bound();
    let mut out = Series::zero(s.nvars(), bound);
    for (k, c) in s.terms() {
        let n = u.det(k.m);
        if n == 0 {
            out.add_term(k.clone(), c.clone());
            continue;
        }
        let dk = k.t_degree();
        let p = cache.get(n)?;
        for (pk, pc) in p.terms() {
            if dk + pk.t_degree() > bound {
                continue;
            }
            let mono = k.mul(pk);
            if keep(&mono) {
                out.add_term(mono, c * pc);
            }
        }
    }
    Ok(out)
}

/// Relative images `U_x = theta(x)/x` and `U_y = theta(y)/y` of the
/// counterclockwise product, truncated at `bound` and cut by `keep`.
fn relative_product(
    rays: &[(LatticeVector, &Series)],
    nvars: usize,
    bound: u32,
    keep: &dyn Fn(&Monomial) -> bool,
) -> Result<(Series, Series)> {
    let mut ux = Series::one(nvars, bound);
    let mut uy = Series::one(nvars, bound);
    for (u, f) in rays {
        let mut cache = PowerCache::new(f, bound, keep);
        let nx = cross(*u, &mut cache, &ux, keep)?;
        let ny = cross(*u, &mut cache, &uy, keep)?;
        ux = cache.get(-u.b)?.mul_filtered(&nx, keep)?;
        uy = cache.get(u.a)?.mul_filtered(&ny, keep)?;
    }
    Ok((ux, uy))
}

/// The counterclockwise path-ordered product around `ld.point`.
pub fn path_ordered_product(ld: &LocalDiagram, nvars: usize, bound: u32) -> Result<PlaneAutomorphism> {
    let rays: Vec<(LatticeVector, &Series)> = ld.rays.iter().map(|r| (r.direction, &r.function)).collect();
    let (ux, uy) = relative_product(&rays, nvars, bound, &|_| true)?;
    Ok(PlaneAutomorphism {
        image_x: shift(&ux, LatticeVector::new(1, 0)),
        image_y: shift(&uy, LatticeVector::new(0, 1)),
    })
}

/// One correcting term `a t^alpha z^m`; the new ray has direction `prim(m)`
/// and function `1 + a t^alpha z^m`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct DefectTerm {
    pub t: Vec<u16>,
    pub m: LatticeVector,
    pub coefficient: Q,
}

/// Reads off the terms of total t-degree `order` from relative images that
/// are trivial below that order.
fn extract_defect(ux: &Series, uy: &Series, order: u32) -> Result<Vec<DefectTerm>> {
    let mut found: BTreeMap<Monomial, (Q, Q)> = BTreeMap::new();
    for (which, s) in [(0, ux), (1, uy)] {
        for (k, v) in s.terms() {
            if k.is_unit() {
                if !v.is_one() {
                    return Err(Error::InconsistentBelow(order));
                }
                continue;
            }
            if k.t_degree() < order {
                return Err(Error::InconsistentBelow(order));
            }
            let e = found.entry(k.clone()).or_insert_with(|| (Q::zero(), Q::zero()));
            if which == 0 {
                e.0 = v.clone();
            } else {
                e.1 = v.clone();
            }
        }
    }
    let mut out = Vec::new();
    for (k, (cx, cy)) in found {
        let (u, _) = k.m.primitive().map_err(|_| Error::MalformedDefect("term without exponent".into()))?;
        // X = sum a u_b z^m and Y = -sum a u_a z^m.
        let a = if u.b != 0 { &cx / qi(u.b) } else { -&cy / qi(u.a) };
        if cx != &a * qi(u.b) || cy != -(&a * qi(u.a)) {
            return Err(Error::MalformedDefect(format!("images disagree at exponent {}", k.m)));
        }
        if !a.is_zero() {
            out.push(DefectTerm { t: k.t, m: k.m, coefficient: a });
        }
    }
    Ok(out)
}

/// The terms of total t-degree `k + 1` of the product around `ld.point`,
/// assuming the local diagram is consistent to order `k`.
pub fn consistency_defect(ld: &LocalDiagram, nvars: usize, k: u32) -> Result<Vec<DefectTerm>> {
    let rays: Vec<(LatticeVector, &Series)> = ld.rays.iter().map(|r| (r.direction, &r.function)).collect();
    let (ux, uy) = relative_product(&rays, nvars, k + 1, &|_| true)?;
    extract_defect(&ux, &uy, k + 1)
}

/// Per-order progress information.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrderReport {
    pub order: u32,
    pub active_points: usize,
    pub new_rays: usize,
    pub total_rays: usize,
}

/// Knobs for [`scatter_with`].
#[derive(Default)]
pub struct ScatterOptions<'a> {
    /// Compute defects in the central fundamental domain only and copy the
    /// new rays to all translates (case diagrams only).
    pub accelerate: bool,
    /// Cut on the local degree (case diagrams only); overrides the diagram's.
    pub degree_cap: Option<Q>,
    pub progress: Option<&'a mut dyn FnMut(&OrderReport)>,
}

/// Scatters `d` to order `k`, using the diagram's degree cap if any.
pub fn scatter(d: &Diagram, k: u32, accelerate: bool) -> Result<Diagram> {
    scatter_with(d, k, ScatterOptions { accelerate, degree_cap: d.degree_cap.clone(), progress: None })
}

struct EngineRay {
    ray: Ray,
    /// Primitive exponent direction of the function's terms.
    mono_dir: LatticeVector,
    min_weight: i64,
    /// Ancestry as indices while scattering.
    parents: Vec<Vec<(usize, u32)>>,
    /// The wall ends at the base instead of continuing through it.
    ends_at_base: bool,
}

struct Engine<'u> {
    nvars: usize,
    tmax: u32,
    unfolding: Option<&'u UnfoldingData>,
    cap: Option<Q>,
    accelerate: bool,
    strip: Option<(Q, Q)>,
    rays: Vec<EngineRay>,
    points: BTreeMap<Point, Vec<usize>>,
    by_id: HashMap<String, usize>,
}

struct Found {
    point: Point,
    term: DefectTerm,
    parents: Vec<Vec<(usize, u32)>>,
}

impl<'u> Engine<'u> {
    fn in_strip(&self, x: &Q) -> bool {
        match &self.strip {
            Some((lo, hi)) if self.accelerate => lo <= x && x < hi,
            _ => true,
        }
    }

    fn local_degree(&self, p: &Point, m: LatticeVector) -> Option<Q> {
        self.unfolding.map(|u| u.local_degree(&p.x, m))
    }

    /// Whether two rays meeting at `p` can produce a term within the cuts.
    fn pair_matters(&self, a: usize, b: usize, p: &Point) -> bool {
        let (ra, rb) = (&self.rays[a], &self.rays[b]);
        if ra.ray.order + rb.ray.order > self.tmax {
            return false;
        }
        if let Some(cap) = &self.cap {
            let da = self.local_degree(p, ra.mono_dir).expect("cap needs unfolding") * qi(ra.min_weight);
            let db = self.local_degree(p, rb.mono_dir).expect("cap needs unfolding") * qi(rb.min_weight);
            if da + db > *cap {
                return false;
            }
        }
        true
    }

    fn intersect(&self, a: usize, b: usize) -> Option<Point> {
        let (ra, rb) = (&self.rays[a].ray, &self.rays[b].ray);
        let (u1, u2) = (ra.direction, rb.direction);
        let det = u1.det(u2);
        if det == 0 {
            return None;
        }
        let dx = &rb.base.x - &ra.base.x;
        let dy = &rb.base.y - &ra.base.y;
        let det_q = qi(det);
        // s u1 - t u2 = d  =>  s = det(d,u2)/det, t = det(d,u1)/det.
        let s = (&dx * qi(u2.b) - &dy * qi(u2.a)) / &det_q;
        let t = (&dx * qi(u1.b) - &dy * qi(u1.a)) / &det_q;
        if s.is_negative() || t.is_negative() {
            return None;
        }
        Some(ra.base.shifted(u1, &s))
    }

    fn register_point(&mut self, p: Point, idx: &[usize]) {
        let entry = self.points.entry(p).or_default();
        for &i in idx {
            if !entry.contains(&i) {
                entry.push(i);
            }
        }
    }

    fn add_ray(&mut self, ray: Ray, parents: Vec<Vec<(usize, u32)>>, ends_at_base: bool) -> usize {
        let mono = ray
            .function
            .terms()
            .find(|(k, _)| !k.is_unit())
            .map(|(k, _)| k.m.primitive().expect("nonzero exponent").0)
            .expect("nontrivial function");
        let min_weight = ray.min_weight();
        let idx = self.rays.len();
        self.by_id.insert(ray.id.clone(), idx);
        let base = ray.base.clone();
        self.rays.push(EngineRay { ray, mono_dir: mono, min_weight, parents, ends_at_base });
        if self.in_strip(&base.x) {
            self.register_point(base, &[idx]);
        }
        for other in 0..idx {
            if let Some(p) = self.intersect(idx, other) {
                if self.in_strip(&p.x) && self.pair_matters(idx, other, &p) {
                    self.register_point(p, &[idx, other]);
                }
            }
        }
        idx
    }

    fn local_rays(&self, p: &Point, members: &[usize]) -> Vec<(LatticeVector, usize, bool)> {
        let mut out = Vec::new();
        for &i in members {
            let r = &self.rays[i].ray;
            if self.rays[i].ends_at_base && r.base == *p {
                continue;
            }
            let here = r.base == *p;
            out.push((r.direction, i, here));
            if !here {
                out.push((-r.direction, i, here));
            }
        }
        out.sort_by(|a, b| angle_cmp(a.0, b.0).then(a.1.cmp(&b.1)));
        out
    }

    fn is_active(&self, p: &Point, members: &[usize], order: u32) -> bool {
        let live: Vec<usize> =
            members.iter().copied().filter(|&i| !(self.rays[i].ends_at_base && self.rays[i].ray.base == *p)).collect();
        for (x, &a) in live.iter().enumerate() {
            for &b in &live[x + 1..] {
                let (ra, rb) = (&self.rays[a].ray, &self.rays[b].ray);
                if ra.direction.det(rb.direction) != 0 && ra.order + rb.order <= order {
                    return true;
                }
            }
        }
        false
    }

    fn cut_at(&self, p: &Point) -> Result<Option<DegreeCut>> {
        match (&self.cap, self.unfolding) {
            (Some(cap), Some(u)) => {
                let sigma = u.sigma(&p.x);
                DegreeCut::new(&sigma, cap)
                    .map(Some)
                    .ok_or_else(|| Error::InvalidParameter("degree cut does not fit in 128 bits".into()))
            }
            _ => Ok(None),
        }
    }

    /// Defects of order `order` at `p`.
    fn defects_at(&self, p: &Point, members: &[usize], order: u32) -> Result<Vec<Found>> {
        let local = self.local_rays(p, members);
        let cut = self.cut_at(p)?;
        let keep = keep_fn(cut);
        let rays: Vec<(LatticeVector, &Series)> =
            local.iter().map(|(u, i, _)| (*u, &self.rays[*i].ray.function)).collect();
        let (ux, uy) = relative_product(&rays, self.nvars, order, &keep)?;
        let terms = extract_defect(&ux, &uy, order)?;
        let mut out = Vec::with_capacity(terms.len());
        for term in terms {
            let parents = self.decompose(&local, &term);
            out.push(Found { point: p.clone(), term, parents });
        }
        Ok(out)
    }

    /// All ways of writing the new term's `(t, m)` exponent as a positive
    /// combination of parent terms at `p`. Rays created at `p` itself are
    /// not parents: their own parents are already present here.
    fn decompose(&self, local: &[(LatticeVector, usize, bool)], term: &DefectTerm) -> Vec<Vec<(usize, u32)>> {
        let mut cands: Vec<usize> = Vec::new();
        for &(_, i, here) in local {
            let r = &self.rays[i].ray;
            if here && !r.initial {
                continue;
            }
            if cands.contains(&i) {
                continue;
            }
            // Two halves of an initial line share their function; keep the
            // half whose terms point along it.
            if let Some(pos) = cands.iter().position(|&c| self.rays[c].ray.function == r.function) {
                if r.is_aligned() {
                    cands[pos] = i;
                }
                continue;
            }
            cands.push(i);
        }
        // Generator of each candidate: its unit step in (t, m).
        let gens: Vec<(Vec<u16>, LatticeVector, bool)> = cands
            .iter()
            .map(|&i| {
                let r = &self.rays[i].ray;
                if r.initial {
                    let (k, _) = r.function.terms().find(|(k, _)| k.t_degree() == 1).expect("linear term");
                    (k.t.clone(), k.m, true)
                } else {
                    let (k, _) = r.function.terms().find(|(k, _)| !k.is_unit()).expect("term");
                    (k.t.clone(), k.m, false)
                }
            })
            .collect();
        let mut sols = Vec::new();
        let mut current = Vec::new();
        dfs(&gens, 0, &term.t, term.m, &mut current, &mut sols);
        sols.into_iter().map(|s| s.into_iter().map(|(j, w)| (cands[j], w)).collect()).collect()
    }

    fn translate(&self, ray: &Ray, j: i64) -> Option<Ray> {
        let u = self.unfolding?;
        let shift_vars = j * u.edges_per_period as i64;
        let mut terms = Vec::new();
        for (k, v) in ray.function.terms() {
            let mut t = vec![0u16; self.nvars];
            for (i, &e) in k.t.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let ni = i as i64 + shift_vars;
                if ni < 0 || ni >= self.nvars as i64 {
                    return None;
                }
                t[ni as usize] = e;
            }
            terms.push((Monomial::new(t, u.translate_vector(k.m, j)), v.clone()));
        }
        let f = Series::from_terms(self.nvars, ray.function.t_bound(), terms).ok()?;
        let mut out =
            Ray::new(u.translate_point(&ray.base, j), u.translate_vector(ray.direction, j), f, ray.initial).ok()?;
        out.edge = ray.edge.map(|e| e + j * u.edges_per_period as i64);
        Some(out)
    }

    /// Uses of variables from the outermost generated domains signal that the
    /// window is too small for the requested cut.
    fn touches_window_edge(&self, t: &[u16]) -> bool {
        let Some(u) = self.unfolding else { return false };
        let epp = u.edges_per_period;
        t.iter().enumerate().any(|(i, &e)| e > 0 && (i < epp || i >= self.nvars - epp))
    }
}

fn dfs(
    gens: &[(Vec<u16>, LatticeVector, bool)],
    at: usize,
    rest_t: &[u16],
    rest_m: LatticeVector,
    current: &mut Vec<(usize, u32)>,
    sols: &mut Vec<Vec<(usize, u32)>>,
) {
    const LIMIT: usize = 64;
    if sols.len() >= LIMIT {
        return;
    }
    if rest_t.iter().all(|&e| e == 0) {
        if rest_m.is_zero() && !current.is_empty() {
            sols.push(current.clone());
        }
        return;
    }
    if at == gens.len() {
        return;
    }
    // Skip this generator.
    dfs(gens, at + 1, rest_t, rest_m, current, sols);
    let (gt, gm, _) = &gens[at];
    let mut t = rest_t.to_vec();
    let mut m = rest_m;
    let mut uses = 0u32;
    loop {
        if t.iter().zip(gt).any(|(a, b)| a < b) {
            break;
        }
        for (a, b) in t.iter_mut().zip(gt) {
            *a -= b;
        }
        m = m - *gm;
        uses += 1;
        current.push((at, uses));
        dfs(gens, at + 1, &t, m, current, sols);
        current.pop();
    }
}

/// Scatters `d` to total t-order `k`.
///
/// New rays are added order by order at every point where two non-parallel
/// rays meet. With a degree cap, monomials whose local degree exceeds the cap
/// are discarded at every point; the cut is compatible with the algorithm
/// because the local degree is additive and never decreases along a ray.
pub fn scatter_with(d: &Diagram, k: u32, mut opts: ScatterOptions<'_>) -> Result<Diagram> {
    let cap = opts.degree_cap.clone();
    if cap.is_some() && d.unfolding.is_none() {
        return Err(Error::InvalidParameter("a degree cap needs a case diagram".into()));
    }
    if opts.accelerate && d.unfolding.is_none() {
        return Err(Error::InvalidParameter("acceleration needs a case diagram".into()));
    }
    // Changing the cut invalidates previously scattered rays.
    let (start, seed): (u32, Vec<&Ray>) = if cap != d.degree_cap && d.scattered_rays().next().is_some() {
        (0, d.initial_rays().collect())
    } else {
        (d.certified_order, d.rays.iter().collect())
    };
    if k < start {
        return Err(Error::InvalidParameter(format!("order {k} is below the certified order {start}")));
    }
    let unfolding = d.unfolding.as_ref();
    let mut eng = Engine {
        nvars: d.t_count,
        tmax: k,
        unfolding,
        cap: cap.clone(),
        accelerate: opts.accelerate,
        strip: unfolding.map(UnfoldingData::central_strip),
        rays: Vec::new(),
        points: BTreeMap::new(),
        by_id: HashMap::new(),
    };
    for r in &seed {
        let mut copy = (*r).clone();
        copy.ancestry.clear();
        eng.add_ray(copy, Vec::new(), d.ends_at_base(r));
    }
    // Recover index ancestry for resumed diagrams.
    for (i, r) in seed.iter().enumerate() {
        let parents: Vec<Vec<(usize, u32)>> = r
            .ancestry
            .iter()
            .map(|alt| alt.iter().filter_map(|p| eng.by_id.get(&p.id).map(|&j| (j, p.uses))).collect())
            .collect();
        eng.rays[i].parents = parents;
    }

    for order in (start + 1)..=k {
        let active: Vec<(&Point, &Vec<usize>)> =
            eng.points.iter().filter(|(p, m)| eng.is_active(p, m, order)).collect();
        let n_active = active.len();
        let results: Vec<Result<Vec<Found>>> = active.par_iter().map(|(p, m)| eng.defects_at(p, m, order)).collect();
        let mut found = Vec::new();
        for r in results {
            found.extend(r?);
        }
        found.sort_by(|a, b| (&a.point, &a.term).cmp(&(&b.point, &b.term)));
        if cap.is_some() && opts.accelerate {
            if let Some(f) = found.iter().find(|f| eng.touches_window_edge(&f.term.t)) {
                return Err(Error::InvalidParameter(format!(
                    "window too small: a term at {} uses walls of the outermost domain; rebuild with more domains",
                    f.point
                )));
            }
        }
        let mut added = 0;
        for f in found {
            let nv = eng.nvars;
            let (dir, _) = f.term.m.primitive()?;
            let mut func = Series::one(nv, crate::series::EXACT);
            func.add_term(Monomial::new(f.term.t.clone(), f.term.m), f.term.coefficient.clone());
            let ray = Ray::new(f.point.clone(), dir, func, false)?;
            if eng.by_id.contains_key(&ray.id) {
                continue;
            }
            let copies: Vec<Ray> = if opts.accelerate {
                let dom = eng.unfolding.expect("checked").domains;
                (-2 * dom..=2 * dom).filter(|&j| j != 0).filter_map(|j| eng.translate(&ray, j)).collect()
            } else {
                Vec::new()
            };
            let parents = f.parents.clone();
            let idx = eng.add_ray(ray, parents, false);
            added += 1;
            let _ = idx;
            for c in copies {
                if eng.by_id.contains_key(&c.id) {
                    continue;
                }
                eng.add_ray(c, Vec::new(), false);
                added += 1;
            }
        }
        if opts.accelerate {
            translate_ancestry(&mut eng);
        }
        if let Some(cb) = opts.progress.as_mut() {
            cb(&OrderReport { order, active_points: n_active, new_rays: added, total_rays: eng.rays.len() });
        }
    }

    let ids: Vec<String> = eng.rays.iter().map(|r| r.ray.id.clone()).collect();
    let mut out = d.clone();
    out.rays = eng
        .rays
        .into_iter()
        .map(|er| {
            let mut r = er.ray;
            r.ancestry = er
                .parents
                .iter()
                .map(|alt| {
                    let mut v: Vec<Parent> = alt.iter().map(|&(j, w)| Parent { id: ids[j].clone(), uses: w }).collect();
                    v.sort();
                    v
                })
                .collect();
            r.ancestry.sort();
            r
        })
        .collect();
    out.certified_order = k;
    out.degree_cap = cap;
    out.sort();
    Ok(out)
}

/// Copies of central rays receive the translated ancestry of their original.
fn translate_ancestry(eng: &mut Engine<'_>) {
    let Some(u) = eng.unfolding else { return };
    let (lo, hi) = eng.strip.clone().expect("case diagram");
    let mut updates = Vec::new();
    for (i, er) in eng.rays.iter().enumerate() {
        if er.ray.initial || !er.parents.is_empty() {
            continue;
        }
        let j = u.domain_of(&er.ray.base.x);
        if j == 0 {
            continue;
        }
        let Some(orig) = eng.translate(&er.ray, -j) else { continue };
        let Some(&oi) = eng.by_id.get(&orig.id) else { continue };
        let parents = &eng.rays[oi].parents;
        let _ = (&lo, &hi);
        let mapped: Vec<Vec<(usize, u32)>> = parents
            .iter()
            .filter_map(|alt| {
                alt.iter()
                    .map(|&(p, w)| {
                        let pr = eng.translate(&eng.rays[p].ray, j)?;
                        eng.by_id.get(&pr.id).map(|&pi| (pi, w))
                    })
                    .collect::<Option<Vec<_>>>()
            })
            .collect();
        if !mapped.is_empty() {
            updates.push((i, mapped));
        }
    }
    for (i, m) in updates {
        eng.rays[i].parents = m;
    }
}

/// Largest absolute numerator or denominator among ray base coordinates;
/// useful when tuning window sizes.
pub fn coordinate_height(d: &Diagram) -> BigInt {
    d.rays
        .iter()
        .flat_map(|r| {
            [r.base.x.numer().abs(), r.base.x.denom().clone(), r.base.y.numer().abs(), r.base.y.denom().clone()]
        })
        .max()
        .unwrap_or_default()
}

/// Scatters a case diagram far enough to certify every outgoing wall of
/// anticanonical degree at most `degree`.
///
/// The local degree is cut at `degree` times the degree unit, and the order
/// is the largest one at which a ray under that cut can still appear.
pub fn scatter_to_degree(
    d: &Diagram,
    degree: i64,
    accelerate: bool,
    progress: Option<&mut dyn FnMut(&OrderReport)>,
) -> Result<Diagram> {
    let u =
        d.unfolding.as_ref().ok_or_else(|| Error::InvalidParameter("degree scattering needs a case diagram".into()))?;
    if degree < 1 {
        return Err(Error::InvalidParameter(format!("degree must be positive, got {degree}")));
    }
    let cap = qi(degree * u.degree_unit());
    let k = u.saturation_order(&cap);
    scatter_with(d, k, ScatterOptions { accelerate, degree_cap: Some(cap), progress })
}
