//! Outgoing wall functions, log invariants and curve classes of scattered
//! case diagrams.

use std::collections::BTreeMap;

use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::diagram::{Diagram, Ray};
use crate::error::{Error, Result};
use crate::lattice::{SmoothModelClasses, UnfoldingData};
use crate::series::{fmt_q, q, qi, LatticeVector, Monomial, Series, EXACT, Q};
use crate::tropical::{complete_ray, Terminus};

const UP: LatticeVector = LatticeVector { a: 0, b: 1 };

/// R_d by degree (in units of the smallest anticanonical step), optionally
/// refined by curve class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvariantTable {
    #[serde(with = "q_map")]
    pub by_degree: BTreeMap<i64, Q>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "q_class_map")]
    pub by_class: Option<BTreeMap<Vec<i64>, Q>>,
    pub certified_to: i64,
    /// Anticanonical degree of one degree unit (3 for the projective plane).
    pub degree_step: i64,
}

mod q_map {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &BTreeMap<i64, Q>, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: BTreeMap<String, String> = m.iter().map(|(k, v)| (k.to_string(), fmt_q(v))).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BTreeMap<i64, Q>, D::Error> {
        let v: BTreeMap<String, String> = BTreeMap::deserialize(d)?;
        v.into_iter()
            .map(|(k, x)| {
                let k = k.parse().map_err(serde::de::Error::custom)?;
                let x = crate::series::parse_q(&x).map_err(serde::de::Error::custom)?;
                Ok((k, x))
            })
            .collect()
    }
}

mod q_class_map {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Row {
        class: Vec<i64>,
        value: String,
    }

    pub fn serialize<S: Serializer>(m: &Option<BTreeMap<Vec<i64>, Q>>, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Option<Vec<Row>> =
            m.as_ref().map(|m| m.iter().map(|(k, v)| Row { class: k.clone(), value: fmt_q(v) }).collect());
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Option<BTreeMap<Vec<i64>, Q>>, D::Error> {
        let rows: Option<Vec<Row>> = Option::deserialize(d)?;
        rows.map(|rows| {
            rows.into_iter()
                .map(|r| Ok((r.class, crate::series::parse_q(&r.value).map_err(serde::de::Error::custom)?)))
                .collect()
        })
        .transpose()
    }
}

impl InvariantTable {
    /// Plain-text table, one degree per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (d, r) in &self.by_degree {
            s.push_str(&format!("R_{d} = {}\n", r));
        }
        if let Some(by_class) = &self.by_class {
            for (b, r) in by_class {
                s.push_str(&format!("R_{b:?} = {}\n", r));
            }
        }
        s
    }
}

fn unfolding(d: &Diagram) -> Result<&UnfoldingData> {
    d.unfolding.as_ref().ok_or_else(|| Error::InvalidParameter("not a case diagram".into()))
}

/// Highest certified `y`-degree, if the diagram was scattered with a cap.
fn certified_y(d: &Diagram) -> Option<i64> {
    d.degree_cap.as_ref().map(|c| c.floor().to_integer().to_i64().unwrap_or(i64::MAX))
}

/// Upward rays based in the `j`-th translate of the central strip.
fn upward_rays(d: &Diagram, j: i64) -> Result<impl Iterator<Item = &Ray>> {
    let u = unfolding(d)?;
    let (lo, hi) = u.central_strip();
    let shift = qi(j * u.period);
    let (lo, hi) = (lo + &shift, hi + shift);
    Ok(d.scattered_rays().filter(move |r| r.direction == UP && r.base.x >= lo && r.base.x < hi))
}

/// Multiplies `t`-free upward functions, dropping `y`-degrees beyond `ymax`.
fn product_up_to(fs: impl Iterator<Item = Series>, ymax: Option<i64>) -> Result<Series> {
    let keep = |m: &Monomial| ymax.is_none_or(|y| m.m.b <= y);
    let mut prod = Series::one(0, EXACT);
    for f in fs {
        prod = prod.mul_filtered(&f.filtered(keep), keep)?;
    }
    Ok(prod)
}

fn collapse(f: &Series) -> Result<Series> {
    let s = f.substitute_t_one();
    s.y_coefficients()?;
    Ok(s)
}

/// The product of the upward wall functions in the `j`-th fundamental
/// domain with every `t_i` set to 1, truncated at the certified degree.
pub fn f_out_domain(d: &Diagram, j: i64) -> Result<Series> {
    let ymax = certified_y(d);
    let fs: Vec<Series> = upward_rays(d, j)?.map(|r| collapse(&r.function)).collect::<Result<_>>()?;
    product_up_to(fs.into_iter(), ymax)
}

/// `f_out` of the central fundamental domain.
pub fn f_out(d: &Diagram) -> Result<Series> {
    f_out_domain(d, 0)
}

/// `log(f)` for a series in `y` with constant term 1, through `y^ymax`.
pub fn log_in_y(f: &Series, ymax: i64) -> Result<Series> {
    let keep = |m: &Monomial| m.m.b <= ymax;
    let g = f.sub(&Series::one(f.nvars(), f.t_bound()))?.filtered(keep);
    if g.terms().any(|(k, _)| k.m.b <= 0) {
        return Err(Error::NotUnit);
    }
    let mut acc = Series::zero(f.nvars(), f.t_bound());
    let mut power = Series::one(f.nvars(), f.t_bound());
    let mut n = 1i64;
    loop {
        power = power.mul_filtered(&g, keep)?;
        if power.is_zero() {
            break;
        }
        acc = acc.add(&power.scale(&q(if n % 2 == 1 { 1 } else { -1 }, n)))?;
        n += 1;
    }
    Ok(acc)
}

/// Degrees in units of the smallest anticanonical step.
fn degree_step(d: &Diagram) -> Result<i64> {
    Ok(unfolding(d)?.degree_unit())
}

/// R_d for `1 <= d <= dmax`, where the anticanonical degree of degree `d` is
/// `d` times the gcd of the kinks.
pub fn extract_r(d: &Diagram, dmax: i64) -> Result<InvariantTable> {
    let step = degree_step(d)?;
    let cert = certified_y(d).map(|y| y / step).unwrap_or(0);
    if dmax > cert {
        return Err(Error::BeyondCertification(dmax, cert));
    }
    let log = log_in_y(&f_out(d)?, dmax * step)?;
    let coeffs = log.y_coefficients()?;
    let mut by_degree = BTreeMap::new();
    for deg in 1..=dmax {
        let n = deg * step;
        let c = coeffs.get(&n).cloned().unwrap_or_else(Q::zero);
        by_degree.insert(deg, c / qi(n));
    }
    Ok(InvariantTable { by_degree, by_class: None, certified_to: dmax, degree_step: step })
}

/// The crossing parameter `eps` of the vertical test lines for degrees up to
/// `dmax`.
pub fn test_line_offset(dmax: i64) -> Q {
    q(1, 2 * dmax + 2)
}

/// Weighted crossings of a segment (or ray, when `end` is `None`) with the
/// vertical line `x = c`.
fn crossings(
    start: &crate::lattice::Point,
    dir: LatticeVector,
    weight: u32,
    end: Option<&crate::lattice::Point>,
    c: &Q,
) -> Result<i64> {
    let x0 = &start.x;
    match end {
        Some(p) => {
            let x1 = &p.x;
            if x0 == c && x1 == c {
                return Err(Error::NonTransverse);
            }
            let (lo, hi) = if x0 <= x1 { (x0, x1) } else { (x1, x0) };
            if lo < c && c < hi {
                Ok(dir.a.abs() * weight as i64)
            } else if (lo == c || hi == c) && lo != hi {
                Err(Error::NonTransverse)
            } else {
                Ok(0)
            }
        }
        None => {
            if dir.a == 0 {
                if x0 == c {
                    return Err(Error::NonTransverse);
                }
                return Ok(0);
            }
            if x0 == c {
                return Err(Error::NonTransverse);
            }
            let ahead = if dir.a > 0 { c > x0 } else { c < x0 };
            Ok(if ahead { dir.a.abs() * weight as i64 } else { 0 })
        }
    }
}

/// The class `sum_v d_v beta_v` of the curve completing `ray`, where `d_v`
/// counts weighted crossings of the curve with the vertical line just right
/// of the boundary lattice point `v`.
pub fn ray_class(d: &Diagram, ray: &Ray, classes: &SmoothModelClasses, dmax: i64) -> Result<Vec<i64>> {
    let u = unfolding(d)?;
    let curve = complete_ray(d, ray)?;
    let eps = test_line_offset(dmax);
    let mut beta = vec![0i64; classes.rank()];
    for v in u.boundary_lattice_points() {
        let xv = v.x.to_integer().to_i64().ok_or_else(|| Error::OutOfRange("boundary point".into()))?;
        let c = &v.x + &eps;
        let mut dv = 0i64;
        for e in &curve.edges {
            let a = &curve.vertices[e.child];
            let b = &curve.vertices[e.parent];
            let dir = crate::tropical::segment_direction(a, b)?;
            dv += crossings(a, dir, e.weight, Some(b), &c)?;
        }
        for l in &curve.legs {
            let a = &curve.vertices[l.vertex];
            match &l.terminus {
                Terminus::Singular { point } => dv += crossings(a, l.direction, l.weight, Some(point), &c)?,
                Terminus::Unbounded => dv += crossings(a, l.direction, l.weight, None, &c)?,
            }
        }
        if dv != 0 {
            let class = classes.class_at(xv).ok_or_else(|| Error::MissingClasses(format!("x = {xv}")))?;
            for (b, c) in beta.iter_mut().zip(class) {
                *b += dv * c;
            }
        }
    }
    Ok(beta)
}

/// Upward rays of the central domain grouped by class.
pub fn rays_by_class<'a>(
    d: &'a Diagram,
    classes: &SmoothModelClasses,
    dmax: i64,
) -> Result<BTreeMap<Vec<i64>, Vec<&'a Ray>>> {
    let mut out: BTreeMap<Vec<i64>, Vec<&Ray>> = BTreeMap::new();
    for r in upward_rays(d, 0)? {
        out.entry(ray_class(d, r, classes, dmax)?).or_default().push(r);
    }
    Ok(out)
}

fn gcd_vec(v: &[i64]) -> i64 {
    v.iter().fold(0i64, |g, &x| num_integer::gcd(g, x))
}

/// The product of the upward functions whose class is a positive multiple
/// of the primitive class `beta`, together with `R_(k beta)` read from its
/// logarithm. `anticanonical` is `D.beta`.
pub fn f_beta(
    d: &Diagram,
    beta: &[i64],
    anticanonical: i64,
    classes: &SmoothModelClasses,
    dmax: i64,
) -> Result<(Series, BTreeMap<i64, Q>)> {
    if gcd_vec(beta) != 1 {
        return Err(Error::InvalidParameter(format!("class {beta:?} is not primitive")));
    }
    let ymax = certified_y(d);
    let mut fs = Vec::new();
    for (class, rays) in rays_by_class(d, classes, dmax)? {
        let g = gcd_vec(&class);
        if g > 0 && class.iter().zip(beta).all(|(c, b)| *c == g * b) {
            for r in rays {
                fs.push(collapse(&r.function)?);
            }
        }
    }
    let f = product_up_to(fs.into_iter(), ymax)?;
    let mut r = BTreeMap::new();
    if anticanonical > 0 {
        let top = ymax.unwrap_or(dmax * degree_step(d)?);
        for (deg, c) in log_in_y(&f, top)?.y_coefficients()? {
            if deg % anticanonical == 0 {
                let k = deg / anticanonical;
                r.insert(k, c / qi(deg));
            }
        }
    }
    Ok((f, r))
}

/// Greedy factorization `prod (1 + c_k y^k)` of a bare series, increasing in
/// `k`, through `y^ymax`. Entries are `(k, c_k, 1)`.
pub fn greedy_factors(f: &Series, ymax: i64) -> Result<Vec<(i64, Q, i64)>> {
    let keep = |m: &Monomial| m.m.b <= ymax;
    let mut rest = f.filtered(keep);
    let mut out = Vec::new();
    for k in 1..=ymax {
        let c = rest.coeff(&Monomial::new(Vec::new(), LatticeVector::new(0, k)));
        if c.is_zero() {
            continue;
        }
        let mut factor = Series::one(0, EXACT);
        factor.add_term(Monomial::new(Vec::new(), LatticeVector::new(0, k)), c.clone());
        let inv = inverse_in_y(&factor, ymax)?;
        rest = rest.mul_filtered(&inv, keep)?;
        out.push((k, c, 1));
    }
    if !rest.is_one() {
        return Err(Error::InvalidParameter("factorization did not terminate".into()));
    }
    Ok(out)
}

/// Display factorization of `f_out` read from the rays themselves: equal
/// collapsed functions `1 + c y^k` are grouped into `(1 + c y^k)^e`.
/// Factors beyond the certified degree are left out.
pub fn display_factors(d: &Diagram) -> Result<Vec<(i64, Q, i64)>> {
    let ymax = certified_y(d);
    let mut count: BTreeMap<(i64, Q), i64> = BTreeMap::new();
    for r in upward_rays(d, 0)? {
        for (k, c) in collapse(&r.function)?.y_coefficients()? {
            if k > 0 && ymax.is_none_or(|y| k <= y) {
                *count.entry((k, c)).or_default() += 1;
            }
        }
    }
    let mut out: Vec<(i64, Q, i64)> = count.into_iter().map(|((k, c), e)| (k, c, e)).collect();
    out.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.is_negative().cmp(&a.1.is_negative())).then(a.1.cmp(&b.1)));
    Ok(out)
}

fn inverse_in_y(f: &Series, ymax: i64) -> Result<Series> {
    let keep = |m: &Monomial| m.m.b <= ymax;
    let g = f.sub(&Series::one(0, EXACT))?;
    let mut acc = Series::one(0, EXACT);
    let mut power = Series::one(0, EXACT);
    loop {
        power = power.mul_filtered(&g.neg(), keep)?;
        if power.is_zero() {
            break;
        }
        acc = acc.add(&power)?;
    }
    Ok(acc)
}

/// Formats a display factorization such as `(1 + 9*y^3)^3 (1 + 72*y^6)`.
pub fn format_factors(factors: &[(i64, Q, i64)]) -> String {
    let parts: Vec<String> = factors
        .iter()
        .map(|(k, c, e)| {
            let sign = if c.is_negative() { "-" } else { "+" };
            let base = format!("(1 {sign} {}*y^{k})", c.abs());
            if *e == 1 {
                base
            } else {
                format!("{base}^{e}")
            }
        })
        .collect();
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join(" ")
    }
}

/// `D.beta` of an integer class, given the anticanonical degrees of the
/// basis classes.
pub fn anticanonical_degree(beta: &[i64], basis_degrees: &[i64]) -> i64 {
    beta.iter().zip(basis_degrees).map(|(a, b)| a * b).sum()
}
