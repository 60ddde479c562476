use proptest::prelude::*;
use tropic2sdp_core::rational::rat;
use tropic2sdp_core::sdpcore::{parse_json, parse_sdpa, SdpVar, VarKind};
use tropic2sdp_core::*;

const NAMES: [&str; 3] = ["a", "b", "c"];

fn block_strategy() -> impl Strategy<Value = SymBlock> {
    (1usize..=3, proptest::collection::vec((0usize..4, 0usize..3, 0usize..3, -4i64..=4), 1..6)).prop_map(
        |(dim, entries)| {
            let mut b = SymBlock::new("blk", dim);
            for (var, i, j, v) in entries {
                let (i, j) = (i % dim, j % dim);
                let v = rat(v, 2);
                if var == 3 {
                    b.add_constant(i, j, &v).unwrap();
                } else {
                    b.add_term(NAMES[var], i, j, &v).unwrap();
                }
            }
            // keep every variable registered somewhere
            for n in NAMES {
                if !b.terms.contains_key(n) {
                    b.add_term(n, 0, 0, &rat(1, 1)).unwrap();
                }
            }
            b
        },
    )
}

fn instance(blocks: Vec<SymBlock>) -> SdpInstance {
    let vars = NAMES
        .iter()
        .map(|n| SdpVar {
            name: n.to_string(),
            kind: VarKind::Csp,
        })
        .collect();
    SdpInstance::new(vars, blocks).unwrap()
}

fn structure(inst: &SdpInstance) -> Vec<(usize, Vec<(usize, usize, usize, Rational)>)> {
    inst.blocks
        .iter()
        .map(|b| {
            let mut e: Vec<_> = b.constant.entries().map(|(i, j, v)| (0, i, j, v.clone())).collect();
            for (k, n) in NAMES.iter().enumerate() {
                if let Some(m) = b.terms.get(*n) {
                    e.extend(m.entries().map(|(i, j, v)| (k + 1, i, j, v.clone())));
                }
            }
            e.sort();
            (b.dim, e)
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn conjunction_size_is_additive(parts in proptest::collection::vec(proptest::collection::vec(block_strategy(), 1..4), 1..4)) {
        let parts: Vec<SdpInstance> = parts.into_iter().map(instance).collect();
        let whole = conjoin(&parts).unwrap();
        let opts = EmitOptions { diag_pack: false };
        let len = |i: &SdpInstance| emit_sdpa(i, opts).unwrap().len();
        // header: comment, counts, sizes and objective lines
        let header = 64 + 8 * whole.blocks.len();
        prop_assert!(len(&whole) <= parts.iter().map(len).sum::<usize>() + header);
        prop_assert_eq!(whole.size(), parts.iter().map(SdpInstance::size).sum::<usize>());
    }

    #[test]
    fn emission_is_injective_without_packing(a in proptest::collection::vec(block_strategy(), 1..4), b in proptest::collection::vec(block_strategy(), 1..4)) {
        let (a, b) = (instance(a), instance(b));
        let opts = EmitOptions { diag_pack: false };
        let same_text = emit_sdpa(&a, opts).unwrap() == emit_sdpa(&b, opts).unwrap();
        prop_assert_eq!(same_text, structure(&a) == structure(&b));
    }

    #[test]
    fn sdpa_entries_round_trip(blocks in proptest::collection::vec(block_strategy(), 1..5), pack in any::<bool>()) {
        let inst = instance(blocks);
        let f = parse_sdpa(&emit_sdpa(&inst, EmitOptions { diag_pack: pack }).unwrap()).unwrap();
        let nnz: usize = inst.size();
        prop_assert_eq!(f.entries.len(), nnz);
        prop_assert_eq!(f.vars, 3);
        let total: i64 = f.block_sizes.iter().map(|s| s.abs()).sum();
        prop_assert_eq!(total as usize, inst.blocks.iter().map(|b| b.dim).sum::<usize>());
    }

    #[test]
    fn json_round_trip(blocks in proptest::collection::vec(block_strategy(), 1..5)) {
        let inst = instance(blocks);
        prop_assert_eq!(parse_json(&emit_json(&inst)).unwrap(), inst);
    }
}

#[test]
fn interval_instance_emission() {
    let lo = SymBlock::scalar("lo", &[("x", rat(1, 1))], rat(0, 1));
    let hi = SymBlock::scalar("hi", &[("x", rat(-1, 1))], rat(-1, 1));
    let inst = SdpInstance::from_blocks(vec![lo, hi], VarKind::Csp).unwrap();
    let text = emit_sdpa(&inst, EmitOptions::default()).unwrap();
    assert_eq!(
        text.lines().skip(1).collect::<Vec<_>>(),
        vec!["1", "1", "-2", "0", "1 1 1 1 1.0", "1 1 2 2 -1.0", "0 1 2 2 -1.0"]
    );
}
