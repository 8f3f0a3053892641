//! Compare the symbolic Christoffel and Riemann tensors with their purely
//! numeric recomputation from the metric entries.
//!
//! ```text
//! cargo run --example numeric_oracle -- sphere2_u
//! ```

use hamjet::connections::Geometry;
use hamjet::curvature::CurvatureData;
use hamjet::space::HamiltonSpace;
use hamjet::verify::{sample_points, NumericMetric, SampleConfig};

fn main() {
    let name = std::env::args().nth(1).unwrap_or_else(|| "sphere2".into());
    let space = HamiltonSpace::resolve(&name).expect("space");
    let geo = Geometry::new(&space);
    let curv = CurvatureData::new(&geo);
    let metric = NumericMetric::spatial(&space);
    let cfg = SampleConfig { count: 10, ..Default::default() };
    for pt in sample_points(&space, &cfg).expect("sampling") {
        let gap = |symbolic: Vec<f64>, numeric: Vec<f64>| {
            symbolic.iter().zip(&numeric).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        };
        let gamma = gap(geo.gamma.eval(&pt).unwrap().values, metric.christoffel(&pt).unwrap());
        let riemann = gap(curv.rfrak.eval(&pt).unwrap().values, metric.riemann(&pt).unwrap());
        println!("x = {:?}: |Gamma gap| {gamma:.2e}, |Rfrak gap| {riemann:.2e}, Sc_x = {:.6}", pt.x, metric.scalar(&pt).unwrap());
    }
}
