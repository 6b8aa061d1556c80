use padic_shift::tower::{build_tower, residue_tree, SequenceSpec};
use padic_shift::{IntPoly, Tower};
use proptest::prelude::*;
use std::sync::OnceLock;

fn towers() -> &'static [Tower] {
    static CELL: OnceLock<Vec<Tower>> = OnceLock::new();
    CELL.get_or_init(build_all)
}

fn build_all() -> Vec<Tower> {
    let diag = SequenceSpec::Diagonal {
        numerator: IntPoly::parse("1").unwrap(),
        denominator: IntPoly::parse("1 - x - y").unwrap(),
    };
    vec![
        build_tower(&SequenceSpec::catalan(), 2, 5).unwrap(),
        build_tower(&SequenceSpec::catalan(), 3, 3).unwrap(),
        build_tower(&SequenceSpec::fibonacci(), 2, 6).unwrap(),
        build_tower(&SequenceSpec::identity(), 3, 3).unwrap(),
        build_tower(&diag, 2, 4).unwrap(),
        build_tower(&SequenceSpec::Cocycle { theta: "01;10".into() }, 2, 5).unwrap(),
    ]
}

#[test]
fn primitivity_methods_agree_on_levels() {
    for t in towers() {
        for l in t.levels() {
            let m = l.substitution.incidence();
            assert_eq!(m.is_primitive(), m.has_positive_power(), "level {}", l.alpha);
        }
    }
}

#[test]
fn residue_tree_shape() {
    for t in towers() {
        let sizes = residue_tree(t).unwrap().sizes();
        assert_eq!(sizes[0], 1);
        for w in sizes.windows(2) {
            assert!(w[1] as u64 <= t.p() * w[0] as u64, "{sizes:?}");
        }
    }
}

#[test]
fn catalan_derived_tree_sizes() {
    let t = build_tower(&SequenceSpec::catalan(), 2, 6).unwrap();
    assert_eq!(residue_tree(&t).unwrap().sizes(), [1, 2, 3, 6, 11, 19, 34]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn levels_project_coherently(which in 0usize..6, n in 0u64..(1 << 12)) {
        let t = &towers()[which];
        for a in 1..t.top() {
            let hi = t.machine(a + 1).unwrap().eval(n).as_residue().unwrap().project(a).unwrap();
            let lo = *t.machine(a).unwrap().eval(n).as_residue().unwrap();
            prop_assert_eq!(hi, lo);
        }
    }

    #[test]
    fn state_maps_commute_with_digits(which in 0usize..6, digits in proptest::collection::vec(0u32..3, 0..24)) {
        let t = &towers()[which];
        let p = t.p() as u32;
        let word: Vec<u32> = digits.into_iter().map(|d| d % p).collect();
        for a in 0..t.top() {
            let (hi, lo, map) = (t.machine(a + 1).unwrap(), t.machine(a).unwrap(), t.proj(a).unwrap());
            let s_hi = hi.run(hi.initial(), &word);
            let s_lo = lo.run(lo.initial(), &word);
            prop_assert_eq!(map[s_hi], s_lo);
        }
    }
}
