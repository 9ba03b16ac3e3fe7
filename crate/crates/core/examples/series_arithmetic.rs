//! Exact truncated series: products, inverses and logarithms.

use wallcross::series::{q, qi, LatticeVector, Monomial, Series};

fn main() -> Result<(), wallcross::error::Error> {
    // f = 1 + t x over one t-variable, truncated at t^4.
    let mut f = Series::one(1, 4);
    f.add_term(Monomial::new(vec![1], LatticeVector::new(1, 0)), qi(1));
    let g = f.int_pow(3)?;
    println!("f      = {f}");
    println!("f^3    = {g}");
    println!("f^-1   = {}", f.inverse()?);
    println!("log f  = {}", f.log1()?);
    println!("f/2    = {}", f.scale(&q(1, 2)));
    Ok(())
}
