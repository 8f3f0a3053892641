//! Nonzero torsion and curvature cells, Ricci blocks and scalar curvatures,
//! evaluated at the domain midpoint.
//!
//! ```text
//! cargo run --example curvature_tables -- timewarp
//! ```

use hamjet::connections::Geometry;
use hamjet::curvature::{CurvatureData, Table};
use hamjet::expr::Point;
use hamjet::space::HamiltonSpace;

fn show(title: &str, table: &Table, pt: &Point) {
    println!("## {title}");
    for cell in &table.cells {
        let v = cell.value.eval(pt).expect("evaluates at the midpoint");
        let note = if cell.expect_zero { " (zero on this branch)" } else { "" };
        println!("{:24} max |component| {:.6e}{note}", cell.name, v.max_abs());
    }
}

fn main() {
    let name = std::env::args().nth(1).unwrap_or_else(|| "sphere2_u".into());
    let space = HamiltonSpace::resolve(&name).expect("space");
    let geo = Geometry::new(&space);
    let curv = CurvatureData::new(&geo);
    let pt = space.domain.midpoint();
    show("torsion", &curv.torsion, &pt);
    show("curvature", &curv.curvature, &pt);
    show("ricci", &curv.ricci.blocks, &pt);
    let s = &curv.ricci.scalars;
    println!("chi = {}\nR = {}\nS = {}\nSc = {}", s.chi, s.r, s.s, s.sc);
}
