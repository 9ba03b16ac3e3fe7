//! Saves a diagram, reloads it, and caches it in a store.

use wallcross::diagram::new_named;
use wallcross::engine::scatter;
use wallcross::io::{load_diagram, save_diagram, store_key, Lookup, Store};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("wallcross-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let d = scatter(&new_named("std", &[1, 2])?, 3, false)?;

    let file = dir.join("std12.json");
    save_diagram(&d, &file)?;
    assert_eq!(load_diagram(&file)?, d);
    println!("saved and reloaded {}", file.display());

    let mut store = Store::open(dir.join("store.json"))?;
    store.insert(&d, false);
    store.save()?;
    let key = store_key(&d.origin, None, false);
    for order in [2, 3, 5] {
        let what = match store.lookup(&key, order, &mut |w| eprintln!("{w}")) {
            Lookup::Hit(_) => "hit",
            Lookup::Partial(_) => "partial, resume from the stored order",
            Lookup::Miss => "miss",
        };
        println!("order {order}: {what}");
    }
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
