//! Build time and size of the Catalan automata mod 2^α. Pass the top level.

use std::time::Instant;

use padic_shift::poly::algebraic_automaton;
use padic_shift::IntPoly;

fn main() {
    let pann = IntPoly::parse("x*y^2 - y + 1").unwrap();
    let top: u32 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(8);
    for a in 1..=top {
        let t = Instant::now();
        let m = algebraic_automaton(&pann, 2, a).unwrap();
        println!("alpha {a}: {} states, {:.2?}", m.num_states(), t.elapsed());
    }
}
