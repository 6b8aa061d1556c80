//! Browser bindings: build an automaton from an annihilator, draw a residue
//! tree, run a cocycle. Every entry point returns a JSON string.

use serde_json::json;
use wasm_bindgen::prelude::*;

use padic_shift::cocycle::{self, OrderedDiagram};
use padic_shift::poly::algebraic_automaton;
use padic_shift::tower::{self, SequenceSpec};
use padic_shift::{IntPoly, Substitution};

/// Larger requests take too long for an interactive page.
const MAX_ALPHA: u32 = 6;
const MAX_TERMS: usize = 1 << 14;

fn annihilator(src: &str) -> Result<IntPoly, String> {
    IntPoly::parse(src).map_err(|e| e.to_string())
}

fn check_alpha(alpha: u32) -> Result<(), String> {
    if alpha > MAX_ALPHA {
        return Err(format!("the demo stops at alpha = {MAX_ALPHA}; use the command-line tool beyond that"));
    }
    Ok(())
}

pub fn automaton_json(src: &str, p: u32, alpha: u32) -> Result<String, String> {
    check_alpha(alpha)?;
    let m = algebraic_automaton(&annihilator(src)?, p as u64, alpha).map_err(|e| e.to_string())?;
    let th = Substitution::cobham_extract(&m).map_err(|e| e.to_string())?;
    let prefix: Vec<String> = m.sequence(64).iter().map(ToString::to_string).collect();
    let images: Vec<String> = (0..th.len() as u32)
        .map(|s| {
            let img: Vec<&str> = th.image(s).iter().map(|&c| th.names()[c as usize].as_str()).collect();
            format!("{} -> {}", th.names()[s as usize], img.join(" "))
        })
        .collect();
    Ok(json!({
        "states": m.num_states(),
        "prefix": prefix,
        "substitution": images,
        "dot": m.to_dot(),
    })
    .to_string())
}

pub fn residue_tree_json(src: &str, p: u32, depth: u32) -> Result<String, String> {
    check_alpha(depth)?;
    let spec = SequenceSpec::Algebraic { annihilator: annihilator(src)? };
    let t = tower::build_tower(&spec, p as u64, depth).map_err(|e| e.to_string())?;
    let tree = tower::residue_tree(&t).map_err(|e| e.to_string())?;
    let forbidden: Vec<Vec<u64>> = (0..=depth).map(|a| tower::forbidden_residues(&t, a).unwrap_or_default()).collect();
    Ok(json!({
        "p": p,
        "sizes": tree.sizes(),
        "levels": tree.levels,
        "forbidden": forbidden,
    })
    .to_string())
}

pub fn cocycle_json(theta: &str, p: u32, n: usize, alpha: u32) -> Result<String, String> {
    if n > MAX_TERMS {
        return Err(format!("at most {MAX_TERMS} terms"));
    }
    let d = OrderedDiagram::parse(p as u64, theta).map_err(|e| e.to_string())?;
    let s = cocycle::cocycle_sequence(&d, n).map_err(|e| e.to_string())?;
    let mut mismatch = None;
    for a in 1..=alpha.min(8) {
        let r = cocycle::verify_cocycle_against(&d, a, &s).map_err(|e| e.to_string())?;
        if let Some(m) = r.mismatch {
            mismatch = Some(json!({"alpha": a, "n": m.0}));
            break;
        }
    }
    Ok(json!({"sequence": s, "verified_to": alpha.min(8), "mismatch": mismatch}).to_string())
}

#[wasm_bindgen]
pub fn automaton(annihilator: &str, p: u32, alpha: u32) -> Result<String, JsValue> {
    automaton_json(annihilator, p, alpha).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn residue_tree(annihilator: &str, p: u32, depth: u32) -> Result<String, JsValue> {
    residue_tree_json(annihilator, p, depth).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn cocycle(theta: &str, p: u32, n: usize, alpha: u32) -> Result<String, JsValue> {
    cocycle_json(theta, p, n, alpha).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn parse(s: String) -> Value {
        serde_json::from_str(&s).unwrap()
    }

    #[test]
    fn catalan_automaton() {
        let v = parse(automaton_json("x*y^2 - y + 1", 2, 2).unwrap());
        assert_eq!(v["states"], 6);
        assert_eq!(v["prefix"][6], "0");
        assert_eq!(v["substitution"].as_array().unwrap().len(), 6);
        assert!(v["dot"].as_str().unwrap().starts_with("digraph"));
    }

    #[test]
    fn tree_levels() {
        let v = parse(residue_tree_json("x*y^2 - y + 1", 2, 4).unwrap());
        assert_eq!(v["sizes"], json!([1, 2, 3, 6, 11]));
        assert!(v["forbidden"][2].as_array().unwrap().contains(&json!(3)));
    }

    #[test]
    fn thue_morse_cocycle() {
        let v = parse(cocycle_json("01;10", 2, 8, 3).unwrap());
        assert_eq!(v["sequence"], json!([0, 1, 3, 2, 7, 6, 4, 5]));
        assert!(v["mismatch"].is_null());
    }

    #[test]
    fn errors_are_messages() {
        assert!(automaton_json("x*y^2 - (y", 2, 2).unwrap_err().contains("column"));
        assert!(automaton_json("x*y^2 - y + 1", 2, 9).is_err());
        assert!(cocycle_json("10;01", 2, 8, 3).is_err());
        assert!(residue_tree_json("x*y^2 - y + 1", 4, 2).is_err());
    }
}
