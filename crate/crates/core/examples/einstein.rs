//! Stress-energy blocks of the Einstein-like equations and the residuals of
//! the conservation laws at the domain midpoint.
//!
//! ```text
//! cargo run --example einstein -- sphere2 1.0
//! ```

use hamjet::connections::Geometry;
use hamjet::curvature::CurvatureData;
use hamjet::field::{conservation, einstein, BlockRole};
use hamjet::space::HamiltonSpace;

fn main() {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "sphere2".into());
    let kappa: f64 = args.next().map_or(1.0, |k| k.parse().expect("kappa"));
    let space = HamiltonSpace::resolve(&name).expect("space");
    let geo = Geometry::new(&space);
    let curv = CurvatureData::new(&geo);
    let pt = space.domain.midpoint();
    let eq = einstein(&geo, &curv, kappa).expect("nonzero kappa");
    for (block, t) in eq.blocks.iter().zip(eq.stress_energy()) {
        let role = match block.role {
            BlockRole::Determined => "determined",
            BlockRole::Compatibility => "must vanish",
        };
        println!("{} ({role}):", block.name);
        print!("{}", t.eval(&pt).expect("evaluates").render());
    }
    for law in conservation(&geo, &curv).laws {
        let gap = law.lhs.minus(&law.rhs, "").eval(&pt).expect("evaluates").max_abs();
        println!("{}: residual {gap:e}", law.name);
    }
}
