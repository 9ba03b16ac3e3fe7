//! Log invariants of the projective plane up to degree three.

use wallcross::diagram::new_case;
use wallcross::engine::scatter_to_degree;
use wallcross::invariants::{display_factors, extract_r, format_factors};
use wallcross::lattice::CaseId;

fn main() -> Result<(), wallcross::error::Error> {
    let d = new_case(CaseId::parse("P2")?, 3)?;
    let s = scatter_to_degree(&d, 3, true, None)?;
    println!("f_out = {}", format_factors(&display_factors(&s)?));
    for (deg, r) in extract_r(&s, 3)?.by_degree {
        println!("R_{deg} = {}", r);
    }
    Ok(())
}
