use num_traits::Signed;
use wallcross::cli::{parse_name, run, Name};
use wallcross::diagram::{new_case, new_named};
use wallcross::engine::scatter;
use wallcross::io::{decimal, diagram_from_json, diagram_to_json, store_key, tikz, Lookup, Store, TexOptions};
use wallcross::lattice::CaseId;
use wallcross::series::{q, qi, LatticeVector, Q};

fn run_cli(args: &[&str], store: &std::path::Path) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["wallcross", "--store", store.to_str().unwrap()];
    full.extend_from_slice(args);
    let code = run(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn decimals_have_four_significant_digits() {
    assert_eq!(decimal(&q(1, 3), 4), "0.3333");
    assert_eq!(decimal(&q(2, 3), 4), "0.6667");
    assert_eq!(decimal(&q(-17, 2), 4), "-8.5");
    assert_eq!(decimal(&qi(12345), 4), "12350");
    assert_eq!(decimal(&q(1, 1000), 4), "0.001");
    assert_eq!(decimal(&q(99996, 10000), 4), "10");
    assert_eq!(decimal(&qi(0), 4), "0");
}

/// `\draw[->,<color>] (<x>,<y>) -- (<x>,<y>);`
fn is_draw_line(line: &str) -> bool {
    let Some(rest) = line.strip_prefix("\\draw[->,") else { return false };
    let Some((_, rest)) = rest.split_once("] ") else { return false };
    let Some(rest) = rest.strip_suffix(';') else { return false };
    let Some((a, b)) = rest.split_once(" -- ") else { return false };
    let coord = |c: &str| {
        c.strip_prefix('(')
            .and_then(|c| c.strip_suffix(')'))
            .and_then(|c| c.split_once(','))
            .is_some_and(|(x, y)| x.parse::<f64>().is_ok() && y.parse::<f64>().is_ok())
    };
    coord(a) && coord(b)
}

#[test]
fn tikz_draws_every_ray_in_a_large_window() {
    let d = new_case(CaseId::parse("P2").unwrap(), 1).unwrap();
    let bound = d.rays.iter().map(|r| r.base.x.abs().max(r.base.y.abs())).max().unwrap() + qi(1);
    let opts = TexOptions { clip: (-bound.clone(), -bound.clone(), bound.clone(), bound), ..TexOptions::default() };
    let text = tikz(&d, &opts).unwrap();
    let draws: Vec<&str> = text.lines().filter(|l| l.starts_with("\\draw")).collect();
    assert_eq!(draws.len(), d.rays.len());
    assert!(draws.iter().all(|l| is_draw_line(l)), "{text}");
    assert!(text.starts_with("\\begin{tikzpicture}") && text.trim_end().ends_with("\\end{tikzpicture}"));
}

#[test]
fn tikz_options() {
    let d = scatter(&new_named("std", &[1, 1]).unwrap(), 2, false).unwrap();
    let plain = tikz(&d, &TexOptions { colors: false, ..TexOptions::default() }).unwrap();
    assert!(plain.lines().filter(|l| l.starts_with("\\draw")).all(|l| l.starts_with("\\draw[->,black]")));
    let diag = TexOptions { directions: vec![LatticeVector::new(1, 1)], ..TexOptions::default() };
    let text = tikz(&d, &diag).unwrap();
    assert_eq!(text.lines().filter(|l| l.contains("gray")).count(), 4);
    let special = TexOptions { special: vec![d.scattered_rays().next().unwrap().id.clone()], ..TexOptions::default() };
    assert_eq!(tikz(&d, &special).unwrap().matches("very thick,red").count(), 1);
    let z: Q = qi(0);
    let empty = TexOptions { clip: (z.clone(), z.clone(), z.clone(), qi(1)), ..TexOptions::default() };
    assert!(tikz(&d, &empty).is_err());
    // A window missing every ray draws nothing.
    let far = TexOptions { clip: (qi(10), qi(20), qi(11), qi(21)), ..TexOptions::default() };
    assert_eq!(tikz(&d, &far).unwrap().lines().count(), 2);
}

#[test]
fn diagram_json_round_trip_is_byte_stable() {
    let d = scatter(&new_case(CaseId::parse("P2").unwrap(), 1).unwrap(), 2, false).unwrap();
    let text = diagram_to_json(&d).unwrap();
    let back = diagram_from_json(&text).unwrap();
    assert_eq!(back, d);
    assert_eq!(diagram_to_json(&back).unwrap(), text);
    let tampered = text.replacen("\"1/1\"", "\"2/1\"", 1);
    assert!(diagram_from_json(&tampered).is_err());
}

#[test]
fn store_round_trip_and_corrupt_entries() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("store.json");
    let d = scatter(&new_named("std", &[1, 2]).unwrap(), 3, false).unwrap();
    let mut store = Store::open(&path).unwrap();
    assert!(store.is_empty());
    store.insert(&d, false);
    store.save().unwrap();
    let first = std::fs::read_to_string(&path).unwrap();
    let reopened = Store::open(&path).unwrap();
    reopened.save().unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), first);

    let key = store_key(&d.origin, None, false);
    let mut store = Store::open(&path).unwrap();
    let mut warnings = Vec::new();
    assert!(matches!(store.lookup(&key, 3, &mut |w| warnings.push(w)), Lookup::Hit(_)));
    assert!(matches!(store.lookup(&key, 5, &mut |w| warnings.push(w)), Lookup::Partial(_)));
    assert!(matches!(store.lookup(&key, 2, &mut |w| warnings.push(w)), Lookup::Miss));
    assert!(warnings.is_empty());

    let id = &d.scattered_rays().next().unwrap().id;
    std::fs::write(&path, first.replace(id.as_str(), "0000000000000000")).unwrap();
    let mut store = Store::open(&path).unwrap();
    assert!(matches!(store.lookup(&key, 3, &mut |w| warnings.push(w)), Lookup::Miss));
    assert_eq!(warnings.len(), 1);
    assert!(store.is_empty());
}

#[test]
fn names() {
    let std11 = Name::Named("std".into(), vec![1, 1]);
    assert_eq!(parse_name("std11").unwrap(), std11);
    assert_eq!(parse_name("std 1 1").unwrap(), std11);
    assert_eq!(parse_name("std(1,1)").unwrap(), std11);
    assert_eq!(parse_name("std 12 3").unwrap(), Name::Named("std".into(), vec![12, 3]));
    assert_eq!(parse_name("det2").unwrap(), Name::Named("det".into(), vec![2]));
    assert_eq!(parse_name("P2").unwrap(), Name::Case(CaseId::parse("(9)").unwrap()));
    assert!(parse_name("std1").is_err());
    assert!(parse_name("bogus").is_err());
}

#[test]
fn command_line_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("s.json");
    assert_eq!(run_cli(&["init", "bogus"], &store).0, 2);
    assert_eq!(run_cli(&[], &store).0, 2);
    assert_eq!(run_cli(&["frobnicate"], &store).0, 2);
    let (code, out, _) = run_cli(&["init", "std", "3", "3"], &store);
    assert_eq!(code, 0);
    assert!(out.contains("1 + 3*t0*x + 3*t0^2*x^2 + t0^3*x^3"));
    let (code, out, _) = run_cli(&["init", "P2", "--order", "3"], &store);
    assert_eq!(code, 0);
    assert!(out.starts_with("diagram (9) with 3 domain(s)"));
    assert_eq!(run_cli(&["tropical", "std11", "-k", "2", "--ray", "nope"], &store).0, 3);
    assert_eq!(run_cli(&["tex", "std11", "--clip", "1,1,0,0"], &store).0, 2);
    assert_eq!(run_cli(&["load", dir.path().join("missing.json").to_str().unwrap()], &store).0, 3);
}

#[test]
fn command_line_scatter_uses_the_cache() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("s.json");
    let (code, out, err) = run_cli(&["scatter", "std11", "5"], &store);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("dir (1,1)  f = 1 + t0*t1*x*y"));
    assert_eq!(out.lines().count(), 2);
    let (code, again, err) = run_cli(&["scatter", "std", "1", "1", "5"], &store);
    assert_eq!(code, 0);
    assert_eq!(again, out);
    assert!(err.contains("cache hit"));

    let (code, out, _) = run_cli(&["scatter", "P2", "2", "--accelerate", "--domains", "2"], &store);
    assert_eq!(code, 0);
    assert!(out.contains("R_1 = 9\nR_2 = 135/4\n"));
    let (code, out, _) = run_cli(&["invariants", "P2", "2", "--accelerate", "--domains", "2"], &store);
    assert_eq!(code, 0);
    assert!(out.contains("R_[2] = 135/4"));
    let (_, show, _) = run_cli(&["show", "P2", "-k", "2", "--accelerate", "--domains", "2"], &store);
    let id = show.lines().find(|l| l.contains("class [1]")).unwrap().split_whitespace().next().unwrap().to_string();
    let (code, out, _) =
        run_cli(&["tropical", "P2", "-k", "2", "--accelerate", "--domains", "2", "--ray", &id], &store);
    assert_eq!(code, 0);
    assert!(out.contains("multiplicity 3"), "{out}");

    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let other = dir.path().join("t.json");
    let common = ["P2", "-k", "2", "--accelerate", "--domains", "2"];
    let mut save_a = vec!["save"];
    save_a.extend_from_slice(&common);
    save_a.extend_from_slice(&["-o", a.to_str().unwrap()]);
    assert_eq!(run_cli(&save_a, &store).0, 0);
    assert_eq!(run_cli(&["load", a.to_str().unwrap(), "--accelerated"], &other).0, 0);
    let mut save_b = vec!["save"];
    save_b.extend_from_slice(&common);
    save_b.extend_from_slice(&["-o", b.to_str().unwrap()]);
    let (_, _, err) = run_cli(&save_b, &other);
    assert!(err.contains("cache hit"));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}
