//! Persistence, text rendering and TikZ output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::diagram::{ray_id, Diagram, Origin, Parent, Ray};
use crate::error::{Error, Result};
use crate::lattice::{build_refined_unfolding, build_unfolding, Point};
use crate::series::{fmt_q, parse_q, LatticeVector, Series, SeriesJson, Q};
use crate::tropical::{Terminus, TropicalCurve};

/// Schema tag written into every document.
pub const SCHEMA: &str = "wallcross/1";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RayJson {
    pub id: String,
    pub base: Point,
    pub direction: [i64; 2],
    pub order: u32,
    pub initial: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge: Option<i64>,
    pub function: SeriesJson,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ancestry: Vec<Vec<Parent>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagramJson {
    pub origin: Origin,
    pub t_count: usize,
    pub certified_order: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree_cap: Option<String>,
    pub rays: Vec<RayJson>,
}

impl From<&Diagram> for DiagramJson {
    fn from(d: &Diagram) -> Self {
        DiagramJson {
            origin: d.origin.clone(),
            t_count: d.t_count,
            certified_order: d.certified_order,
            degree_cap: d.degree_cap.as_ref().map(fmt_q),
            rays: d
                .rays
                .iter()
                .map(|r| RayJson {
                    id: r.id.clone(),
                    base: r.base.clone(),
                    direction: [r.direction.a, r.direction.b],
                    order: r.order,
                    initial: r.initial,
                    edge: r.edge,
                    function: SeriesJson::from(&r.function),
                    ancestry: r.ancestry.clone(),
                })
                .collect(),
        }
    }
}

impl TryFrom<&DiagramJson> for Diagram {
    type Error = Error;

    fn try_from(j: &DiagramJson) -> Result<Diagram> {
        let unfolding = match &j.origin {
            Origin::Case { case, domains, refined } => Some(if *refined {
                build_refined_unfolding(*case, *domains)?
            } else {
                build_unfolding(*case, *domains)?
            }),
            _ => None,
        };
        let mut rays = Vec::with_capacity(j.rays.len());
        for r in &j.rays {
            let function = Series::try_from(&r.function)?;
            if function.nvars() != j.t_count {
                return Err(Error::VariableCount(function.nvars(), j.t_count));
            }
            let direction = LatticeVector::new(r.direction[0], r.direction[1]);
            let id = ray_id(&r.base, direction, &function);
            if id != r.id {
                return Err(Error::Parse(format!("ray {} does not match its content (hash {id})", r.id)));
            }
            let mut ray = Ray::new(r.base.clone(), direction, function, r.initial)?;
            ray.ancestry = r.ancestry.clone();
            ray.edge = r.edge;
            rays.push(ray);
        }
        let d = Diagram {
            rays,
            origin: j.origin.clone(),
            unfolding,
            t_count: j.t_count,
            certified_order: j.certified_order,
            degree_cap: j.degree_cap.as_deref().map(parse_q).transpose()?,
        };
        d.check()?;
        Ok(d)
    }
}

#[derive(Serialize, Deserialize)]
struct DiagramFile {
    schema: String,
    diagram: DiagramJson,
}

/// Serializes a single diagram as a standalone JSON document.
pub fn diagram_to_json(d: &Diagram) -> Result<String> {
    let file = DiagramFile { schema: SCHEMA.into(), diagram: DiagramJson::from(d) };
    Ok(serde_json::to_string_pretty(&file)? + "\n")
}

pub fn diagram_from_json(text: &str) -> Result<Diagram> {
    let file: DiagramFile = serde_json::from_str(text)?;
    if file.schema != SCHEMA {
        return Err(Error::Parse(format!("unsupported schema {}", file.schema)));
    }
    Diagram::try_from(&file.diagram)
}

pub fn save_diagram(d: &Diagram, path: &Path) -> Result<()> {
    std::fs::write(path, diagram_to_json(d)?)?;
    Ok(())
}

pub fn load_diagram(path: &Path) -> Result<Diagram> {
    diagram_from_json(&std::fs::read_to_string(path)?)
}

/// Cache key of a computation: what was scattered, with which cap, and
/// whether the translation symmetry was used. Accelerated and plain runs
/// agree on the central domain only, so they are cached separately.
pub fn store_key(origin: &Origin, cap: Option<&Q>, accelerate: bool) -> String {
    let mut key = serde_json::to_string(origin).expect("origin serializes");
    if let Some(c) = cap {
        key.push_str(&format!("|cap={}", fmt_q(c)));
    }
    if accelerate {
        key.push_str("|accelerated");
    }
    key
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
struct StoreFile {
    schema: String,
    /// Key, then certified order, then the diagram.
    entries: BTreeMap<String, BTreeMap<u32, DiagramJson>>,
}

/// A JSON file of scattered diagrams keyed by origin, cap and order.
#[derive(Clone, Debug)]
pub struct Store {
    pub path: PathBuf,
    entries: BTreeMap<String, BTreeMap<u32, DiagramJson>>,
}

/// Result of a store lookup.
pub enum Lookup {
    /// An entry with exactly the requested order.
    Hit(Diagram),
    /// The best entry below the requested order, to resume from.
    Partial(Diagram),
    Miss,
}

impl Store {
    pub fn empty(path: impl Into<PathBuf>) -> Store {
        Store { path: path.into(), entries: BTreeMap::new() }
    }

    /// Opens the store, starting empty if the file does not exist.
    pub fn open(path: impl Into<PathBuf>) -> Result<Store> {
        let path = path.into();
        if !path.exists() {
            return Ok(Store { path, entries: BTreeMap::new() });
        }
        let file: StoreFile = serde_json::from_str(&std::fs::read_to_string(&path)?)?;
        if file.schema != SCHEMA {
            return Err(Error::Parse(format!("unsupported store schema {}", file.schema)));
        }
        Ok(Store { path, entries: file.entries })
    }

    pub fn to_json(&self) -> Result<String> {
        let file = StoreFile { schema: SCHEMA.into(), entries: self.entries.clone() };
        Ok(serde_json::to_string_pretty(&file)? + "\n")
    }

    pub fn save(&self) -> Result<()> {
        std::fs::write(&self.path, self.to_json()?)?;
        Ok(())
    }

    pub fn insert(&mut self, d: &Diagram, accelerate: bool) {
        let key = store_key(&d.origin, d.degree_cap.as_ref(), accelerate);
        self.entries.entry(key).or_default().insert(d.certified_order, DiagramJson::from(d));
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Keys with the orders cached under each.
    pub fn keys(&self) -> impl Iterator<Item = (&str, Vec<u32>)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.keys().copied().collect()))
    }

    /// Finds the entry for `key` at `order`, or the highest one below it.
    /// Entries that fail to load are dropped and reported through `warn`.
    pub fn lookup(&mut self, key: &str, order: u32, warn: &mut dyn FnMut(String)) -> Lookup {
        let Some(by_order) = self.entries.get_mut(key) else { return Lookup::Miss };
        let candidates: Vec<u32> = by_order.range(..=order).map(|(k, _)| *k).rev().collect();
        for k in candidates {
            match Diagram::try_from(&by_order[&k]) {
                Ok(d) if k == order => return Lookup::Hit(d),
                Ok(d) => return Lookup::Partial(d),
                Err(e) => {
                    warn(format!("dropping corrupt cache entry {key} at order {k}: {e}"));
                    by_order.remove(&k);
                }
            }
        }
        Lookup::Miss
    }
}

/// Exact decimal rendering with `digits` significant digits.
pub fn decimal(x: &Q, digits: u32) -> String {
    if x.is_zero() {
        return "0".into();
    }
    let neg = x.is_negative();
    let a = x.abs();
    let ten = Q::from_integer(BigInt::from(10));
    // Find e with 10^e <= a < 10^(e+1).
    let mut e: i32 = 0;
    let mut p = Q::from_integer(BigInt::from(1));
    while p > a {
        p /= &ten;
        e -= 1;
    }
    while &p * &ten <= a {
        p *= &ten;
        e += 1;
    }
    let shift = digits as i32 - 1 - e;
    let scale = |k: i32| -> Q {
        let mut s = Q::from_integer(BigInt::from(1));
        for _ in 0..k.abs() {
            s *= &ten;
        }
        if k < 0 {
            Q::from_integer(BigInt::from(1)) / s
        } else {
            s
        }
    };
    let n = (&a * scale(shift)).round().to_integer();
    let digits_str = n.to_string();
    let mut s = if shift <= 0 {
        let mut t = digits_str;
        for _ in 0..(-shift) {
            t.push('0');
        }
        t
    } else {
        let sh = shift as usize;
        let padded = if digits_str.len() <= sh {
            format!("{}{}", "0".repeat(sh + 1 - digits_str.len()), digits_str)
        } else {
            digits_str
        };
        let (ip, fp) = padded.split_at(padded.len() - sh);
        let fp = fp.trim_end_matches('0');
        if fp.is_empty() {
            ip.to_string()
        } else {
            format!("{ip}.{fp}")
        }
    };
    if neg {
        s.insert(0, '-');
    }
    s
}

/// Options for [`tikz`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TexOptions {
    /// Color rays by t-order; otherwise everything is drawn in the default color.
    pub colors: bool,
    /// When nonempty, only rays with one of these directions are colored;
    /// the rest are drawn in gray.
    pub directions: Vec<LatticeVector>,
    /// Ray ids drawn thick and red.
    pub special: Vec<String>,
    /// Clip rectangle `(x0, y0, x1, y1)`.
    pub clip: (Q, Q, Q, Q),
}

impl Default for TexOptions {
    fn default() -> Self {
        let c = |n: i64| Q::from_integer(BigInt::from(n));
        TexOptions { colors: true, directions: Vec::new(), special: Vec::new(), clip: (c(-5), c(-5), c(5), c(5)) }
    }
}

const PALETTE: [&str; 8] = ["blue", "red", "green!60!black", "orange", "violet", "cyan!70!black", "brown", "magenta"];

/// Parameter interval of `base + s*dir` (s >= 0) inside the rectangle.
fn clip_ray(base: &Point, dir: LatticeVector, clip: &(Q, Q, Q, Q)) -> Option<(Q, Option<Q>)> {
    let (x0, y0, x1, y1) = clip;
    let mut lo = Q::zero();
    let mut hi: Option<Q> = None;
    for (p, d, a, b) in [(&base.x, dir.a, x0, x1), (&base.y, dir.b, y0, y1)] {
        if d == 0 {
            if p < a || p > b {
                return None;
            }
            continue;
        }
        let dq = Q::from_integer(BigInt::from(d));
        let (s0, s1) = ((a - p) / &dq, (b - p) / &dq);
        let (s0, s1) = if s0 <= s1 { (s0, s1) } else { (s1, s0) };
        if s0 > lo {
            lo = s0;
        }
        hi = Some(match hi {
            Some(h) if h < s1 => h,
            _ => s1,
        });
    }
    match hi {
        Some(h) if h > lo => Some((lo, Some(h))),
        _ => None,
    }
}

fn coord(p: &Point) -> String {
    format!("({},{})", decimal(&p.x, 4), decimal(&p.y, 4))
}

/// TikZ code drawing the rays inside the clip rectangle, one `\draw` per ray.
pub fn tikz(d: &Diagram, opts: &TexOptions) -> Result<String> {
    let (x0, y0, x1, y1) = &opts.clip;
    if x0 >= x1 || y0 >= y1 {
        return Err(Error::InvalidParameter("empty clip rectangle".into()));
    }
    let mut out = String::from("\\begin{tikzpicture}\n");
    for r in &d.rays {
        let Some((s0, s1)) = clip_ray(&r.base, r.direction, &opts.clip) else { continue };
        let s1 = s1.expect("bounded by the clip");
        let a = r.base.shifted(r.direction, &s0);
        let b = r.base.shifted(r.direction, &s1);
        let color = if opts.special.contains(&r.id) {
            "very thick,red".to_string()
        } else if !opts.colors {
            "black".to_string()
        } else if !opts.directions.is_empty() && !opts.directions.contains(&r.direction) {
            "gray".to_string()
        } else {
            PALETTE[(r.order.max(1) as usize - 1) % PALETTE.len()].to_string()
        };
        writeln!(out, "\\draw[->,{color}] {} -- {};", coord(&a), coord(&b)).expect("string write");
    }
    out.push_str("\\end{tikzpicture}\n");
    Ok(out)
}

/// TikZ code for a tropical curve; legs to infinity are drawn with length 2.
pub fn curve_tikz(c: &TropicalCurve) -> String {
    let mut out = String::from("\\begin{tikzpicture}\n");
    for e in &c.edges {
        writeln!(
            out,
            "\\draw[line width={}pt] {} -- {};",
            0.4 * e.weight as f32,
            coord(&c.vertices[e.child]),
            coord(&c.vertices[e.parent])
        )
        .expect("string write");
    }
    for l in &c.legs {
        let start = &c.vertices[l.vertex];
        let end = match &l.terminus {
            Terminus::Singular { point } => point.clone(),
            Terminus::Unbounded => start.shifted(l.direction, &Q::from_integer(BigInt::from(2))),
        };
        let arrow = if l.terminus == Terminus::Unbounded { "->," } else { "" };
        writeln!(out, "\\draw[{arrow}line width={}pt] {} -- {};", 0.4 * l.weight as f32, coord(start), coord(&end))
            .expect("string write");
    }
    for v in &c.vertices {
        writeln!(out, "\\fill {} circle (1pt);", coord(v)).expect("string write");
    }
    out.push_str("\\end{tikzpicture}\n");
    out
}

/// Human-readable listing of a diagram; `class_of` may attach a class label.
pub fn format_diagram(d: &Diagram, class_of: &dyn Fn(&Ray) -> Option<String>) -> String {
    let mut s = String::new();
    writeln!(
        s,
        "diagram {} with {} rays, {} t-variables, certified order {}",
        d.origin,
        d.rays.len(),
        d.t_count,
        d.certified_order
    )
    .expect("string write");
    if let Some(c) = &d.degree_cap {
        writeln!(s, "local degree cap {c}").expect("string write");
    }
    for r in &d.rays {
        let class = class_of(r).map(|c| format!("  class {c}")).unwrap_or_default();
        writeln!(
            s,
            "{}  base {}  dir {}  order {}{}  f = {}{}",
            r.id,
            r.base,
            r.direction,
            r.order,
            if r.initial { "  initial" } else { "" },
            r.function,
            class
        )
        .expect("string write");
    }
    s
}

/// Human-readable description of a tropical curve.
pub fn format_curve(c: &TropicalCurve) -> String {
    let mut s = String::new();
    for (i, v) in c.vertices.iter().enumerate() {
        writeln!(s, "vertex {i} at {v}").expect("string write");
    }
    for e in &c.edges {
        writeln!(s, "edge {} -- {} weight {}", e.child, e.parent, e.weight).expect("string write");
    }
    for l in &c.legs {
        let end = match &l.terminus {
            Terminus::Unbounded => "unbounded".to_string(),
            Terminus::Singular { point } => format!("to singular point {point}"),
        };
        writeln!(s, "leg at vertex {} direction {} weight {} {end}", l.vertex, l.direction, l.weight)
            .expect("string write");
    }
    s
}
