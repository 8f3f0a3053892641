//! Sample one identity suite on a bundled space and print the residuals.
//!
//! ```text
//! cargo run --example verify_suite -- sphere2_u maxwell
//! ```

use hamjet::space::HamiltonSpace;
use hamjet::verify::{run_suite, SampleConfig, Suite};

fn main() {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "sphere2_u".into());
    let suite: Suite = args.next().as_deref().unwrap_or("all").parse().expect("suite");
    let count = args.next().map_or(20, |s| s.parse().expect("sample count"));
    let space = HamiltonSpace::resolve(&name).expect("space");
    let cfg = SampleConfig { count, ..Default::default() };
    let results = run_suite(&space, suite, &cfg, 1.0).expect("sampling");
    for r in &results {
        let status = match (r.pass, r.report_only) {
            (Some(true), _) => "pass",
            (Some(false), _) => "FAIL",
            _ => "report",
        };
        println!("{status:6} {:10.3e} {:10.3e}  {}", r.max_abs_residual, r.max_rel_residual, r.identity);
    }
}
