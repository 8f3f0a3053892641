//! Load a space from a TOML file or the bundled set and print its data.
//!
//! ```text
//! cargo run --example load_space -- tests/fixtures/warped.toml
//! ```

use hamjet::space::{HamiltonSpace, BUNDLED};

fn main() {
    let Some(spec) = std::env::args().nth(1) else {
        println!("bundled spaces: {}", BUNDLED.join(", "));
        return;
    };
    let space = match HamiltonSpace::resolve(&spec) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{}: {e}", e.code());
            std::process::exit(1);
        }
    };
    println!("{}: m = {}, n = {}", space.name, space.m, space.n);
    for (label, mat) in [("h_ab", &space.h), ("g^ij", &space.g_inv), ("g_ij", &space.g)] {
        for (i, row) in mat.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|e| e.to_string()).collect();
            println!("{label}[{}] = [{}]", i + 1, cells.join(", "));
        }
    }
    println!("H = {}", space.hamiltonian());
    for (v, (lo, hi)) in space.domain.iter() {
        println!("{v} in [{lo}, {hi}]");
    }
}
