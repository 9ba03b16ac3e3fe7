//! Scattering diagrams: rays carrying wall functions, plus the constructors for
//! the named test diagrams and for the initial diagram of a reflexive case.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::One;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lattice::{build_refined_unfolding, build_unfolding, CaseId, Point, UnfoldingData};
use crate::series::{fmt_q, LatticeVector, Monomial, Series, EXACT, Q};

/// A reference from a ray to one of the rays it was produced from.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Parent {
    pub id: String,
    /// How many times the parent's term enters the new term (its marker exponent).
    pub uses: u32,
}

/// A ray `base + R_{>=0} direction` with its wall function.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ray {
    /// Content hash of base, direction and function.
    pub id: String,
    pub base: Point,
    /// Primitive direction.
    pub direction: LatticeVector,
    /// Exact wall function (constant term 1).
    pub function: Series,
    /// Lowest total t-degree of a nonconstant term.
    pub order: u32,
    /// Decompositions of this ray's term into parent terms. Empty for initial
    /// rays; normally a single entry.
    pub ancestry: Vec<Vec<Parent>>,
    pub initial: bool,
    /// For initial rays of a case diagram, the index of the edge carrying them.
    pub edge: Option<i64>,
}

/// Hex digest identifying a ray by its content.
pub fn ray_id(base: &Point, direction: LatticeVector, function: &Series) -> String {
    let mut h = Sha256::new();
    h.update(fmt_q(&base.x));
    h.update(b",");
    h.update(fmt_q(&base.y));
    h.update(format!(";{},{};", direction.a, direction.b));
    for (k, v) in function.terms() {
        h.update(format!("{:?}{},{}:{}|", k.t, k.m.a, k.m.b, fmt_q(v)));
    }
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

impl Ray {
    /// Builds a ray, normalizing the direction to a primitive vector.
    pub fn new(base: Point, direction: LatticeVector, function: Series, initial: bool) -> Result<Ray> {
        let (direction, _) = direction.primitive()?;
        let order = function.t_order().unwrap_or(0);
        let id = ray_id(&base, direction, &function);
        Ok(Ray { id, base, direction, function, order, ancestry: Vec::new(), initial, edge: None })
    }

    /// Checks the ray invariants: primitive direction, constant term 1,
    /// nontrivial function, every exponent parallel to the direction.
    pub fn check(&self) -> Result<()> {
        let (p, c) = self.direction.primitive()?;
        if c != 1 || p != self.direction {
            return Err(Error::InvalidParameter(format!("direction {} is not primitive", self.direction)));
        }
        let unit = Monomial::unit(self.function.nvars());
        if self.function.coeff(&unit) != Q::one() || self.function.is_one() {
            return Err(Error::InvalidParameter(format!("ray {} has a degenerate function", self.id)));
        }
        for (k, _) in self.function.terms() {
            if !k.is_unit() && (k.t_degree() == 0 || self.direction.det(k.m) != 0) {
                return Err(Error::InvalidParameter(format!("ray {} has a term off its line", self.id)));
            }
        }
        Ok(())
    }

    /// Whether every exponent of the function is a positive multiple of the
    /// direction (as opposed to the reversed half of an initial line).
    pub fn is_aligned(&self) -> bool {
        self.function.terms().all(|(k, _)| k.is_unit() || k.m.dot(self.direction) > 0)
    }

    /// The smallest multiple `w` with `t^a z^{w u}` a term of the function.
    pub fn min_weight(&self) -> i64 {
        self.function
            .terms()
            .filter(|(k, _)| !k.is_unit())
            .map(|(k, _)| k.m.a.abs().max(k.m.b.abs()) / self.direction.a.abs().max(self.direction.b.abs()))
            .min()
            .unwrap_or(0)
    }

    /// For single-term functions `1 + a t^alpha z^{w m}`, the data `(a, alpha, w m)`.
    pub fn single_term(&self) -> Option<(Q, &Monomial)> {
        let mut it = self.function.terms().filter(|(k, _)| !k.is_unit());
        let (k, v) = it.next()?;
        if it.next().is_some() {
            return None;
        }
        Some((v.clone(), k))
    }

    fn sort_key(&self) -> (Point, LatticeVector, u32, String) {
        (self.base.clone(), self.direction, self.order, self.id.clone())
    }
}

impl fmt::Display for Ray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {} + R*{} order {}: {}", self.id, self.base, self.direction, self.order, self.function)
    }
}

/// What a diagram was built from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Origin {
    Std { m: u32, n: u32 },
    Exp { m: u32, n: u32 },
    Det { m: u32 },
    Case { case: CaseId, domains: i64, refined: bool },
    Custom,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Std { m, n } => write!(f, "std({m},{n})"),
            Origin::Exp { m, n } => write!(f, "exp({m},{n})"),
            Origin::Det { m } => write!(f, "det({m})"),
            Origin::Case { case, domains, refined } => {
                write!(f, "{case} with {domains} domain(s){}", if *refined { ", smooth model" } else { "" })
            }
            Origin::Custom => write!(f, "custom"),
        }
    }
}

/// A finite scattering diagram.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagram {
    pub rays: Vec<Ray>,
    pub origin: Origin,
    pub unfolding: Option<UnfoldingData>,
    /// Number of t-variables.
    pub t_count: usize,
    /// Consistent modulo total t-degree `certified_order + 1`.
    pub certified_order: u32,
    /// When present, consistency holds modulo monomials of local degree above
    /// this cap (case diagrams only).
    pub degree_cap: Option<Q>,
}

impl Diagram {
    /// An empty diagram with `t_count` variables.
    pub fn empty(t_count: usize) -> Diagram {
        Diagram {
            rays: Vec::new(),
            origin: Origin::Custom,
            unfolding: None,
            t_count,
            certified_order: 0,
            degree_cap: None,
        }
    }

    pub fn case(&self) -> Option<CaseId> {
        match self.origin {
            Origin::Case { case, .. } => Some(case),
            _ => None,
        }
    }

    /// Restores the deterministic ray order.
    pub fn sort(&mut self) {
        self.rays.sort_by_cached_key(Ray::sort_key);
    }

    /// Whether `ray` ends at its base: an initial ray that is not one half
    /// of a full line. Such a base is not a scattering point for the ray.
    pub fn ends_at_base(&self, ray: &Ray) -> bool {
        ray.initial
            && !self
                .rays
                .iter()
                .any(|s| s.initial && s.base == ray.base && s.direction == -ray.direction && s.function == ray.function)
    }

    pub fn find(&self, id: &str) -> Option<&Ray> {
        self.rays.iter().find(|r| r.id == id)
    }

    pub fn by_id(&self) -> BTreeMap<&str, &Ray> {
        self.rays.iter().map(|r| (r.id.as_str(), r)).collect()
    }

    pub fn initial_rays(&self) -> impl Iterator<Item = &Ray> {
        self.rays.iter().filter(|r| r.initial)
    }

    pub fn scattered_rays(&self) -> impl Iterator<Item = &Ray> {
        self.rays.iter().filter(|r| !r.initial)
    }

    /// Checks every ray invariant and the sort order.
    pub fn check(&self) -> Result<()> {
        for r in &self.rays {
            r.check()?;
            if r.function.nvars() != self.t_count {
                return Err(Error::VariableCount(self.t_count, r.function.nvars()));
            }
        }
        let mut sorted = self.clone();
        sorted.sort();
        if sorted.rays != self.rays {
            return Err(Error::InvalidParameter("rays are not in canonical order".into()));
        }
        if let Some(u) = &self.unfolding {
            for r in self.initial_rays() {
                if !u.singular_points.contains(&r.base) {
                    return Err(Error::InvalidParameter(format!(
                        "initial ray {} is not based at a singular point",
                        r.id
                    )));
                }
            }
        }
        Ok(())
    }

    /// Adds a full line through `base` carrying `function` in both directions.
    pub fn push_line(&mut self, base: Point, direction: LatticeVector, function: Series) -> Result<()> {
        self.rays.push(Ray::new(base.clone(), direction, function.clone(), true)?);
        self.rays.push(Ray::new(base, -direction, function, true)?);
        Ok(())
    }
}

fn one_plus(nvars: usize, var: usize, m: LatticeVector, c: Q) -> Series {
    let mut t = vec![0u16; nvars];
    t[var] = 1;
    let mut s = Series::one(nvars, EXACT);
    s.add_term(Monomial::new(t, m), c);
    s
}

fn positive(name: &str, v: i64) -> Result<u32> {
    if v < 1 {
        return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
    }
    u32::try_from(v).map_err(|_| Error::InvalidParameter(format!("{name} is too large")))
}

/// The named test diagrams: `std(m,n)`, `exp(m,n)` and `det(m)`.
pub fn new_named(kind: &str, params: &[i64]) -> Result<Diagram> {
    let lv = LatticeVector::new;
    let mut d = Diagram::empty(2);
    let (f1, f2, origin) = match (kind.to_ascii_lowercase().as_str(), params) {
        ("std", &[m, n]) => {
            let (m, n) = (positive("m", m)?, positive("n", n)?);
            let f1 = one_plus(2, 0, lv(1, 0), Q::one()).rebound(m).int_pow(m as i64)?;
            let f2 = one_plus(2, 1, lv(0, 1), Q::one()).rebound(n).int_pow(n as i64)?;
            (f1.rebound(EXACT), f2.rebound(EXACT), Origin::Std { m, n })
        }
        ("exp", &[m, n]) => {
            let (m, n) = (positive("m", m)?, positive("n", n)?);
            let f1 = one_plus(2, 0, lv(m as i64, 0), Q::one());
            let f2 = one_plus(2, 1, lv(0, n as i64), Q::one());
            (f1, f2, Origin::Exp { m, n })
        }
        ("det", &[m]) => {
            let m = positive("m", m)?;
            (one_plus(2, 0, lv(1, 0), Q::one()), one_plus(2, 1, lv(-1, m as i64), Q::one()), Origin::Det { m })
        }
        _ => return Err(Error::UnknownCase(format!("{kind}{params:?}"))),
    };
    let dir2 = f2.terms().find(|(k, _)| !k.is_unit()).map(|(k, _)| k.m).expect("nonconstant");
    d.push_line(Point::origin(), LatticeVector::new(1, 0), f1)?;
    d.push_line(Point::origin(), dir2, f2)?;
    d.origin = origin;
    d.sort();
    Ok(d)
}

/// The initial diagram of a reflexive case over `domains` fundamental domains
/// on each side of the central one. Every edge `e` carries two rays from its
/// singular point towards its end points with functions `(1 + t_e z^m)^{l_e}`.
pub fn new_case(case: CaseId, domains: i64) -> Result<Diagram> {
    if domains < 1 {
        return Err(Error::InvalidParameter("need at least one domain".into()));
    }
    case_diagram(build_unfolding(case, domains)?, Origin::Case { case, domains, refined: false })
}

/// Like [`new_case`] but on the smooth toric model: every unit segment of the
/// boundary carries its own pair of rays with functions `1 + t z^m`.
pub fn new_case_refined(case: CaseId, domains: i64) -> Result<Diagram> {
    if domains < 1 {
        return Err(Error::InvalidParameter("need at least one domain".into()));
    }
    case_diagram(build_refined_unfolding(case, domains)?, Origin::Case { case, domains, refined: true })
}

fn case_diagram(u: UnfoldingData, origin: Origin) -> Result<Diagram> {
    let nvars = u.edges.len();
    let mut d = Diagram::empty(nvars);
    for (var, e) in u.edges.iter().enumerate() {
        for m in [e.dir, -e.dir] {
            let f = one_plus(nvars, var, m, Q::one()).rebound(e.length as u32).int_pow(e.length)?.rebound(EXACT);
            let mut ray = Ray::new(e.singular.clone(), m, f, true)?;
            ray.edge = Some(e.index);
            d.rays.push(ray);
        }
    }
    d.origin = origin;
    d.unfolding = Some(u);
    d.sort();
    Ok(d)
}

/// Merges rays that share base and direction by multiplying their functions.
pub fn merge_parallel(d: &Diagram) -> Result<Diagram> {
    let mut groups: BTreeMap<(Point, LatticeVector), Vec<&Ray>> = BTreeMap::new();
    for r in &d.rays {
        groups.entry((r.base.clone(), r.direction)).or_default().push(r);
    }
    let mut out = d.clone();
    out.rays.clear();
    for ((base, dir), rays) in groups {
        if rays.len() == 1 {
            out.rays.push(rays[0].clone());
            continue;
        }
        let mut f = Series::one(d.t_count, EXACT);
        let mut ancestry = Vec::new();
        for r in &rays {
            f = f.mul(&r.function)?;
            ancestry.extend(r.ancestry.iter().cloned());
        }
        if f.is_one() {
            continue;
        }
        let initial = rays.iter().all(|r| r.initial);
        let mut merged = Ray::new(base, dir, f, initial)?;
        merged.ancestry = ancestry;
        merged.edge = rays.iter().find_map(|r| r.edge);
        out.rays.push(merged);
    }
    out.sort();
    Ok(out)
}
