//! Christoffel symbols, the canonical nonlinear connection and the Cartan
//! connection of a space, printed symbolically.
//!
//! ```text
//! cargo run --example connections -- sphere2_u
//! ```

use hamjet::connections::Geometry;
use hamjet::space::HamiltonSpace;

fn main() {
    let name = std::env::args().nth(1).unwrap_or_else(|| "sphere2".into());
    let space = HamiltonSpace::resolve(&name).expect("space");
    let geo = Geometry::new(&space);
    let nl = &geo.nonlinear;
    let cc = &geo.cartan;
    for t in [&geo.chi, &geo.gamma, &nl.n1, &nl.n2, &cc.a, &cc.h] {
        print!("{}", t.render());
    }
    println!("C vanishes identically: {}", cc.c.is_structurally_zero());
}
