//! Completes a scattered ray of the projective plane to a tropical curve and
//! compares its multiplicity with the ray coefficient.

use wallcross::diagram::new_case;
use wallcross::engine::scatter_to_degree;
use wallcross::io::format_curve;
use wallcross::lattice::CaseId;
use wallcross::series::LatticeVector;
use wallcross::tropical::{coefficient_identity, complete_ray, multiplicity};

fn main() -> Result<(), wallcross::error::Error> {
    let d = scatter_to_degree(&new_case(CaseId::parse("P2")?, 3)?, 2, true, None)?;
    let ray = d
        .scattered_rays()
        .filter(|r| r.direction == LatticeVector::new(0, 1))
        .min_by_key(|r| r.order)
        .expect("an upward ray");
    let curve = complete_ray(&d, ray)?;
    print!("{}", format_curve(&curve));
    println!("multiplicity {}", multiplicity(&curve)?);
    let (a, w_mult) = coefficient_identity(&d, ray)?;
    println!("coefficient {} = w * Mult = {}", a, w_mult);
    Ok(())
}
