//! Sorts the outgoing rays of the quadric surface by curve class.

use wallcross::diagram::new_case_refined;
use wallcross::engine::scatter_to_degree;
use wallcross::invariants::{anticanonical_degree, rays_by_class};
use wallcross::lattice::{basis_anticanonical_degrees, smooth_model_classes, CaseId};

fn main() -> Result<(), wallcross::error::Error> {
    let case = CaseId::parse("8'a")?;
    let d = scatter_to_degree(&new_case_refined(case, 3)?, 3, true, None)?;
    let classes = smooth_model_classes(case)?;
    let degrees = basis_anticanonical_degrees(case)?;
    for (beta, rays) in rays_by_class(&d, &classes, 3)? {
        println!("class {beta:?} (degree {}): {} ray(s)", anticanonical_degree(&beta, &degrees), rays.len());
        for r in rays {
            println!("    {}", r.function.substitute_t_one());
        }
    }
    Ok(())
}
