//! Render any object as text or JSON, the way the command line does.
//!
//! ```text
//! cargo run --example render -- sphere2 gamma x1=0.7 json
//! ```

use hamjet::report::{compute, parse_point, render, Format, Object};
use hamjet::space::HamiltonSpace;

fn main() {
    let mut args = std::env::args().skip(1);
    let space = HamiltonSpace::resolve(&args.next().unwrap_or_else(|| "sphere2".into())).expect("space");
    let object: Object = args.next().as_deref().unwrap_or("scalar").parse().expect("object");
    let at = args.next().map(|spec| parse_point(&spec, &space).expect("point").0);
    let format: Format = args.next().as_deref().unwrap_or("text").parse().expect("format");
    let computed = compute(&space, object, 1.0).expect("compute");
    print!("{}", render(&space, object, &computed, at.as_ref(), format).expect("render"));
}
