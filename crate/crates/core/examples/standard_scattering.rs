//! Scatters the standard pair of walls `1 + t0 x` and `1 + t1 y` and prints
//! the resulting diagram.

use wallcross::diagram::new_named;
use wallcross::engine::scatter;
use wallcross::io::format_diagram;

fn main() -> Result<(), wallcross::error::Error> {
    let d = new_named("std", &[1, 2])?;
    let s = scatter(&d, 4, false)?;
    print!("{}", format_diagram(&s, &|_| None));
    println!("{} new rays", s.scattered_rays().count());
    Ok(())
}
