//! The `wallcross` command line.
//!
//! Diagrams are named on the command line (`P2`, `"(8'a)"`, `"std 1 1"`,
//! `std11`, `exp23`, `det2`) and scattered results are cached in a JSON
//! store so repeated requests are answered without recomputation.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::diagram::{new_case, new_case_refined, new_named, Diagram, Ray};
use crate::engine::{scatter_with, OrderReport, ScatterOptions};
use crate::error::{Error, Result};
use crate::invariants::{display_factors, extract_r, f_beta, format_factors, ray_class, rays_by_class};
use crate::io::{
    curve_tikz, format_curve, format_diagram, load_diagram, save_diagram, store_key, tikz, Lookup, Store, TexOptions,
};
use crate::lattice::{basis_anticanonical_degrees, smooth_model_classes, CaseId, SmoothModelClasses};
use crate::series::{parse_q, qi, LatticeVector, Q};
use crate::tropical::{coefficient_identity, complete_ray, curves_of_ray, multiplicity};

/// Default store file when neither `--store` nor the environment names one.
pub const DEFAULT_STORE: &str = "wallcross-store.json";

#[derive(Parser, Debug)]
#[command(name = "wallcross", version, about = "Exact scattering diagrams and log Gromov-Witten invariants")]
pub struct Cli {
    /// Cache file for scattered diagrams.
    #[arg(long, global = true, env = "WALLCROSS_STORE", default_value = DEFAULT_STORE)]
    pub store: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Target {
    /// Diagram name: a reflexive case (`P2`, `"(9)"`, `"(8'a)"`, ...) or
    /// `std M N`, `exp M N`, `det M` (also written `std11`).
    #[arg(required = true, num_args = 1..)]
    pub name: Vec<String>,
    /// Fundamental domains on each side of the central one (case diagrams).
    #[arg(long, visible_alias = "order", default_value_t = 3)]
    pub domains: i64,
    /// Use the smooth toric model, one wall per unit boundary segment.
    #[arg(long)]
    pub refined: bool,
    /// Use the translation symmetry (case diagrams only).
    #[arg(long)]
    pub accelerate: bool,
}

#[derive(Args, Debug, Clone)]
pub struct Scattered {
    #[command(flatten)]
    pub target: Target,
    /// Scattering depth: the degree for case diagrams, the t-order otherwise.
    #[arg(short = 'k', long = "depth")]
    pub k: Option<u32>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build and print an initial diagram.
    Init {
        #[command(flatten)]
        target: Target,
    },
    /// Scatter a diagram, consulting and updating the store.
    /// The last word of the name is the depth: the degree for case
    /// diagrams, the t-order otherwise (`scatter P2 3`, `scatter std 1 1 5`).
    Scatter {
        #[command(flatten)]
        target: Target,
        /// Print a line per completed order to stderr.
        #[arg(long)]
        progress: bool,
    },
    /// Print the rays of a diagram.
    Show {
        #[command(flatten)]
        diagram: Scattered,
    },
    /// Print TikZ code for a diagram.
    Tex {
        #[command(flatten)]
        diagram: Scattered,
        /// Color rays by order (`on`) or draw everything in black (`off`).
        #[arg(long, default_value = "on", value_parser = ["on", "off"])]
        colors: String,
        /// Only color rays with these directions, e.g. `1,0;0,1`.
        #[arg(long)]
        directions: Option<String>,
        /// Ray ids to highlight, comma separated.
        #[arg(long)]
        special: Option<String>,
        /// Clip rectangle `x0,y0,x1,y1`.
        #[arg(long, default_value = "-5,-5,5,5", allow_hyphen_values = true)]
        clip: String,
    },
    /// Complete a ray to its tropical curve.
    Tropical {
        #[command(flatten)]
        diagram: Scattered,
        /// Ray id as printed by `show`.
        #[arg(long)]
        ray: String,
        /// Print TikZ code instead of a description.
        #[arg(long)]
        tex: bool,
    },
    /// Print the invariants R_d for d up to `dmax`.
    /// The last word of the name is `dmax` (`invariants P2 3`).
    Invariants {
        #[command(flatten)]
        target: Target,
        /// Class table JSON for the smooth model, overriding the built-in one.
        #[arg(long)]
        classes: Option<PathBuf>,
    },
    /// Write a scattered diagram to a standalone JSON file.
    Save {
        #[command(flatten)]
        diagram: Scattered,
        #[arg(short = 'o', long = "output")]
        file: PathBuf,
    },
    /// Read a diagram file, verify it and add it to the store.
    Load {
        file: PathBuf,
        /// Record the diagram as produced by an accelerated run.
        #[arg(long)]
        accelerated: bool,
    },
}

/// What a diagram name denotes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Name {
    Case(CaseId),
    Named(String, Vec<i64>),
}

/// Parses a diagram name.
pub fn parse_name(text: &str) -> Result<Name> {
    let trimmed = text.trim();
    let lower = trimmed.to_ascii_lowercase();
    for kind in ["std", "exp", "det"] {
        let Some(rest) = lower.strip_prefix(kind) else { continue };
        let arity = if kind == "det" { 1 } else { 2 };
        let tokens: Vec<&str> = rest
            .split(|c: char| c.is_whitespace() || c == ',' || c == '(' || c == ')')
            .filter(|s| !s.is_empty())
            .collect();
        let params: Vec<i64> = if tokens.len() == 1 && tokens[0].len() == arity && arity > 1 {
            tokens[0].chars().map(|c| c.to_digit(10).map(i64::from)).collect::<Option<_>>().unwrap_or_default()
        } else {
            tokens.iter().map(|t| t.parse().ok()).collect::<Option<_>>().unwrap_or_default()
        };
        if params.len() != arity {
            return Err(Error::UnknownCase(format!("{trimmed}: {kind} takes {arity} parameter(s)")));
        }
        return Ok(Name::Named(kind.into(), params));
    }
    CaseId::parse(trimmed).map(Name::Case)
}

impl Target {
    fn joined(&self) -> String {
        self.name.join(" ")
    }

    /// Splits off a trailing numeric word.
    fn split_depth(&self) -> Result<(Target, i64)> {
        let usage =
            || Error::InvalidParameter(format!("expected a name followed by a number, got {:?}", self.joined()));
        let (last, rest) = self.name.split_last().ok_or_else(usage)?;
        if rest.is_empty() {
            return Err(usage());
        }
        let k = last.parse().map_err(|_| usage())?;
        Ok((Target { name: rest.to_vec(), ..self.clone() }, k))
    }
}

fn depth(k: i64) -> Result<u32> {
    u32::try_from(k)
        .ok()
        .filter(|k| *k > 0)
        .ok_or_else(|| Error::InvalidParameter(format!("depth must be positive, got {k}")))
}

fn initial(target: &Target) -> Result<Diagram> {
    match parse_name(&target.joined())? {
        Name::Case(c) if target.refined => new_case_refined(c, target.domains),
        Name::Case(c) => new_case(c, target.domains),
        Name::Named(kind, params) => {
            if target.accelerate {
                return Err(Error::InvalidParameter("--accelerate needs a case diagram".into()));
            }
            new_named(&kind, &params)
        }
    }
}

/// Cap and t-order used to scatter `d` to depth `k`.
fn plan(d: &Diagram, k: u32) -> Result<(Option<Q>, u32)> {
    match &d.unfolding {
        Some(u) => {
            if k == 0 {
                return Err(Error::InvalidParameter("degree must be positive".into()));
            }
            let cap = qi(i64::from(k) * u.degree_unit());
            let order = u.saturation_order(&cap);
            Ok((Some(cap), order))
        }
        None => Ok((None, k)),
    }
}

struct Session<'a> {
    store: Store,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
    progress: bool,
}

impl Session<'_> {
    fn note(&mut self, msg: impl AsRef<str>) {
        let _ = writeln!(self.err, "{}", msg.as_ref());
    }

    /// Returns the diagram scattered to depth `k`, from the store if possible.
    fn scattered(&mut self, target: &Target, k: u32) -> Result<Diagram> {
        let start = initial(target)?;
        let (cap, order) = plan(&start, k)?;
        let key = store_key(&start.origin, cap.as_ref(), target.accelerate);
        let mut warnings = Vec::new();
        let found = self.store.lookup(&key, order, &mut |w| warnings.push(w));
        let dropped = !warnings.is_empty();
        for w in warnings {
            self.note(w);
        }
        let seed = match found {
            Lookup::Hit(d) => {
                self.note(format!("cache hit: {} at order {order}, nothing to compute", start.origin));
                if dropped {
                    self.store.save()?;
                }
                return Ok(d);
            }
            Lookup::Partial(d) => {
                self.note(format!("resuming {} from cached order {}", start.origin, d.certified_order));
                d
            }
            Lookup::Miss => start,
        };
        let show = self.progress;
        let err = &mut *self.err;
        let mut report = |r: &OrderReport| {
            if show {
                let _ = writeln!(
                    err,
                    "order {}: {} active points, {} new rays, {} rays",
                    r.order, r.active_points, r.new_rays, r.total_rays
                );
            }
        };
        let opts = ScatterOptions { accelerate: target.accelerate, degree_cap: cap, progress: Some(&mut report) };
        let d = scatter_with(&seed, order, opts)?;
        self.store.insert(&d, target.accelerate);
        self.store.save()?;
        Ok(d)
    }

    /// The diagram selected by `-k`, or the initial one without it.
    fn selected(&mut self, s: &Scattered) -> Result<Diagram> {
        match s.k {
            Some(k) => self.scattered(&s.target, k),
            None => initial(&s.target),
        }
    }

    fn print(&mut self, text: &str) -> Result<()> {
        self.out.write_all(text.as_bytes())?;
        Ok(())
    }
}

fn class_labeller(d: &Diagram) -> Option<(SmoothModelClasses, i64)> {
    let case = d.case()?;
    let classes = smooth_model_classes(case).ok()?;
    let u = d.unfolding.as_ref()?;
    let dmax = d
        .degree_cap
        .as_ref()
        .map(|c| (c / qi(u.degree_unit())).floor().to_integer().try_into().unwrap_or(1))
        .unwrap_or(1);
    Some((classes, dmax.max(1)))
}

fn show_text(d: &Diagram) -> String {
    let labeller = class_labeller(d);
    let up = LatticeVector::new(0, 1);
    let class_of = |r: &Ray| -> Option<String> {
        let (classes, dmax) = labeller.as_ref()?;
        if r.initial || r.direction != up {
            return None;
        }
        match ray_class(d, r, classes, *dmax) {
            Ok(b) => Some(format!("{b:?}")),
            Err(_) => None,
        }
    };
    format_diagram(d, &class_of)
}

fn parse_pair(text: &str) -> Result<(String, String)> {
    let mut it = text.split(',').map(str::trim);
    match (it.next(), it.next(), it.next()) {
        (Some(a), Some(b), None) => Ok((a.into(), b.into())),
        _ => Err(Error::InvalidParameter(format!("expected a pair, got {text:?}"))),
    }
}

fn parse_directions(text: &str) -> Result<Vec<LatticeVector>> {
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|p| {
            let (a, b) = parse_pair(p)?;
            let bad = |_| Error::InvalidParameter(format!("bad direction {p:?}"));
            Ok(LatticeVector::new(a.parse().map_err(bad)?, b.parse().map_err(bad)?))
        })
        .collect()
}

fn parse_clip(text: &str) -> Result<(Q, Q, Q, Q)> {
    let v: Vec<Q> = text.split(',').map(|s| parse_q(s.trim())).collect::<Result<_>>()?;
    match <[Q; 4]>::try_from(v) {
        Ok([a, b, c, e]) => Ok((a, b, c, e)),
        Err(_) => Err(Error::InvalidParameter(format!("clip needs four numbers, got {text:?}"))),
    }
}

fn invariants_text(d: &Diagram, dmax: i64, classes: Option<SmoothModelClasses>) -> Result<String> {
    let mut table = extract_r(d, dmax)?;
    let mut text = String::new();
    if let (Some(classes), Some(case)) = (classes, d.case()) {
        let degrees = basis_anticanonical_degrees(case).unwrap_or_default();
        let mut by_class = std::collections::BTreeMap::new();
        let mut primitive = std::collections::BTreeSet::new();
        for class in rays_by_class(d, &classes, dmax)?.keys() {
            let g = class.iter().fold(0i64, |g, &x| num_integer::gcd(g, x));
            if g > 0 {
                primitive.insert(class.iter().map(|x| x / g).collect::<Vec<_>>());
            }
        }
        for beta in primitive {
            let deg = crate::invariants::anticanonical_degree(&beta, &degrees);
            let (_, rs) = f_beta(d, &beta, deg, &classes, dmax)?;
            for (k, r) in rs {
                by_class.insert(beta.iter().map(|b| b * k).collect::<Vec<_>>(), r);
            }
        }
        table.by_class = Some(by_class);
        text.push_str(&format!("classes in basis {}\n", classes.basis_names.join(", ")));
    }
    text.push_str(&table.to_text());
    text.push_str(&format!("f_out = {}\n", format_factors(&display_factors(d)?)));
    Ok(text)
}

fn dispatch(cli: Cli, s: &mut Session<'_>) -> Result<()> {
    match cli.command {
        Command::Init { target } => {
            let d = initial(&target)?;
            s.print(&show_text(&d))
        }
        Command::Scatter { target, progress } => {
            let (target, k) = target.split_depth()?;
            let k = depth(k)?;
            s.progress = progress;
            let d = s.scattered(&target, k)?;
            let mut text = format!(
                "{}: {} rays ({} scattered), certified order {}\n",
                d.origin,
                d.rays.len(),
                d.scattered_rays().count(),
                d.certified_order
            );
            if d.unfolding.is_some() {
                text.push_str(&extract_r(&d, i64::from(k))?.to_text());
            } else {
                for r in d.scattered_rays() {
                    text.push_str(&format!("{}  base {}  dir {}  f = {}\n", r.id, r.base, r.direction, r.function));
                }
            }
            s.print(&text)
        }
        Command::Show { diagram } => {
            let d = s.selected(&diagram)?;
            s.print(&show_text(&d))
        }
        Command::Tex { diagram, colors, directions, special, clip } => {
            let opts = TexOptions {
                colors: colors == "on",
                directions: directions.as_deref().map(parse_directions).transpose()?.unwrap_or_default(),
                special: special.map(|t| t.split(',').map(|x| x.trim().to_string()).collect()).unwrap_or_default(),
                clip: parse_clip(&clip)?,
            };
            let d = s.selected(&diagram)?;
            s.print(&tikz(&d, &opts)?)
        }
        Command::Tropical { diagram, ray, tex } => {
            let d = s.selected(&diagram)?;
            let r = d.find(&ray).ok_or_else(|| Error::OutOfRange(format!("no ray with id {ray}")))?;
            let curve = complete_ray(&d, r)?;
            if tex {
                return s.print(&curve_tikz(&curve));
            }
            let mut text = format_curve(&curve);
            text.push_str(&format!("multiplicity {}\n", multiplicity(&curve)?));
            let all = curves_of_ray(&d, r)?;
            if all.len() > 1 {
                text.push_str(&format!("{} tropical curves end on this ray\n", all.len()));
            }
            if let Ok((a, wm)) = coefficient_identity(&d, r) {
                text.push_str(&format!("ray coefficient {a}, weight times total multiplicity {wm}\n"));
            }
            s.print(&text)
        }
        Command::Invariants { target, classes } => {
            let (target, dmax) = target.split_depth()?;
            let k = depth(dmax)?;
            let d = s.scattered(&target, k)?;
            let table = match (&classes, d.case()) {
                (Some(path), _) => {
                    let period = d.unfolding.as_ref().map(|u| u.period).unwrap_or(1);
                    Some(SmoothModelClasses::from_json(&std::fs::read_to_string(path)?, period)?)
                }
                (None, Some(case)) if target.refined || case.label() == "(9)" => smooth_model_classes(case).ok(),
                _ => None,
            };
            s.print(&invariants_text(&d, dmax, table)?)
        }
        Command::Save { diagram, file } => {
            let d = s.selected(&diagram)?;
            save_diagram(&d, &file)?;
            s.note(format!("saved {} rays to {}", d.rays.len(), file.display()));
            Ok(())
        }
        Command::Load { file, accelerated } => {
            let d = load_diagram(&file)?;
            s.store.insert(&d, accelerated);
            s.store.save()?;
            s.print(&format!("loaded {}: {} rays, certified order {}\n", d.origin, d.rays.len(), d.certified_order))
        }
    }
}

/// Exit code for a library error: 2 for bad names or parameters, 3 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::UnknownCase(_) | Error::InvalidParameter(_) => 2,
        _ => 3,
    }
}

/// Runs the command line on `args` (including the program name).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let store = match Store::open(&cli.store) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "warning: ignoring unreadable store {}: {e}", cli.store.display());
            Store::empty(cli.store.clone())
        }
    };
    let mut session = Session { store, out, err, progress: false };
    match dispatch(cli, &mut session) {
        Ok(()) => 0,
        Err(e) => {
            let code = exit_code(&e);
            let _ = writeln!(session.err, "error: {e}");
            if matches!(e, Error::UnknownCase(_)) {
                let _ = writeln!(session.err, "run `wallcross --help` for usage");
            }
            code
        }
    }
}
