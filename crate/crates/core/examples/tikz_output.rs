//! Draws a scattered diagram as a TikZ picture, highlighting diagonal rays.

use wallcross::diagram::new_named;
use wallcross::engine::scatter;
use wallcross::io::{tikz, TexOptions};
use wallcross::series::LatticeVector;

fn main() -> Result<(), wallcross::error::Error> {
    let d = scatter(&new_named("std", &[2, 2])?, 4, false)?;
    let opts = TexOptions { directions: vec![LatticeVector::new(1, 1)], ..TexOptions::default() };
    print!("{}", tikz(&d, &opts)?);
    Ok(())
}
