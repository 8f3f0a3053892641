//! Deflection tensors and the electromagnetic field at a point, with the
//! closed forms they are compared against.
//!
//! ```text
//! cargo run --example electromagnetism -- sphere2_u x1=0.7,x2=0.4
//! ```

use hamjet::connections::Geometry;
use hamjet::field::{deflections, em_field};
use hamjet::report::parse_point;
use hamjet::space::HamiltonSpace;

fn main() {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "sphere2_u".into());
    let space = HamiltonSpace::resolve(&name).expect("space");
    let (pt, _) = parse_point(&args.next().unwrap_or_default(), &space).expect("point");
    let geo = Geometry::new(&space);
    let defl = deflections(&geo);
    let em = em_field(&geo, &defl);
    for t in [&defl.metrical_t, &defl.metrical_x, &em.f, &em.closed] {
        print!("{}", t.eval(&pt).expect("evaluates").render());
    }
    let f = em.f_vertical.eval(&pt).expect("evaluates");
    println!("max |f| = {:e}", f.max_abs());
}
