use std::collections::HashSet;
use std::sync::OnceLock;

use proptest::prelude::*;
use relaynet::cgras::{
    enumerate_all, enumerate_allocations, enumerate_schemes, Cgras, Codeword, CooperationLevel, EnumOptions, MessageAllocation,
    TxPolicy, Violation,
};
use relaynet::oracles::{scheme_a, scheme_b, scheme_c, scheme_d};
use relaynet::NodeSet;

fn full_enumeration() -> &'static [Cgras] {
    static ALL: OnceLock<Vec<Cgras>> = OnceLock::new();
    ALL.get_or_init(|| enumerate_all(&EnumOptions::default(), false))
}

#[test]
fn every_no_split_scheme_validates() {
    let all = full_enumeration();
    assert!(!all.is_empty());
    for c in all {
        assert_eq!(c.validate(), Vec::<Violation>::new(), "{c}");
    }
}

#[test]
fn any_subset_schemes_validate() {
    let opts = EnumOptions { tx_policy: TxPolicy::AnySubset, ..Default::default() };
    let alloc = MessageAllocation::from_lists(&[1, 2], &[2, 3]).unwrap();
    let schemes = enumerate_schemes(&alloc, &opts);
    assert!(schemes.len() > enumerate_schemes(&alloc, &EnumOptions::default()).len());
    for c in &schemes {
        assert!(c.validate().is_empty(), "{c}");
    }
}

#[test]
fn symmetric_count_is_in_the_hundreds() {
    let n = enumerate_all(&EnumOptions::default(), true).len();
    assert!((100..=5000).contains(&n), "{n}");
}

#[test]
fn allocations() {
    let all = enumerate_allocations();
    assert_eq!(all.len(), 27);
    assert!(all.contains(&MessageAllocation::from_lists(&[1], &[2, 3]).unwrap()));
    assert!(all.contains(&MessageAllocation::from_lists(&[1, 2, 3], &[1, 2, 3]).unwrap()));
    assert_eq!(all.iter().collect::<HashSet<_>>().len(), 27);
}

#[test]
fn reference_schemes_are_enumerated() {
    let keys = |alloc: &MessageAllocation| -> HashSet<String> {
        enumerate_schemes(alloc, &EnumOptions::default()).iter().map(|c| c.canonical_text()).collect()
    };
    let plain = keys(&scheme_a().allocation);
    assert!(plain.contains(&scheme_a().canonical_text()));
    assert!(plain.contains(&scheme_b().canonical_text()));
    let coop = keys(&scheme_c().allocation);
    assert!(coop.contains(&scheme_c().canonical_text()));
    assert!(coop.contains(&scheme_d().canonical_text()));
}

#[test]
fn no_split_is_a_subset_of_split() {
    for alloc in enumerate_allocations() {
        let plain = enumerate_schemes(&alloc, &EnumOptions::for_sweep(false));
        let split: HashSet<String> =
            enumerate_schemes(&alloc, &EnumOptions::for_sweep(true)).iter().map(|c| c.canonicalize().0).collect();
        for c in &plain {
            assert!(split.contains(&c.canonicalize().0), "{c} missing with splitting");
        }
    }
}

#[test]
fn split_parts_have_distinct_receivers() {
    let alloc = MessageAllocation::from_lists(&[1], &[2, 3]).unwrap();
    for c in enumerate_schemes(&alloc, &EnumOptions::for_sweep(true)) {
        assert!(c.validate().is_empty(), "{c}");
        for z in 0..3 {
            let parts: Vec<&Codeword> = c.codewords.iter().filter(|u| u.message == z).collect();
            let rx: HashSet<NodeSet> = parts.iter().map(|u| u.rx).collect();
            assert_eq!(rx.len(), parts.len(), "{c}");
        }
    }
}

#[test]
fn validation_examples() {
    assert!(scheme_a().validate().is_empty());
    // W1 sent by relay 2, which does not know it
    let mut c = scheme_a();
    c.codewords[0].tx = NodeSet::single(1);
    assert!(c.validate().contains(&Violation::TxNotKnowing { codeword: 0 }));
    // no edges: closure holds trivially
    let mut c = scheme_a();
    c.edges.clear();
    c.codewords[1].rx = NodeSet::from_indices([1]);
    assert!(c.validate().iter().all(|v| !matches!(v, Violation::DecodeClosure { .. })));
}

#[test]
fn cooperation_levels() {
    let level = |r1: &[usize], r2: &[usize]| MessageAllocation::from_lists(r1, r2).unwrap().cooperation_level();
    assert_eq!(level(&[1], &[2, 3]), CooperationLevel::None);
    assert_eq!(level(&[1, 2], &[2, 3]), CooperationLevel::PartialOne);
    assert_eq!(level(&[1, 2, 3], &[1, 2]), CooperationLevel::PartialTwo);
    assert_eq!(level(&[1, 2, 3], &[1, 2, 3]), CooperationLevel::Full);
}

#[test]
fn keys() {
    assert_eq!(scheme_a().canonicalize(), scheme_a().mirrored().canonicalize());
    assert_ne!(scheme_a().canonicalize(), scheme_b().canonicalize());
    assert_eq!(scheme_c().canonicalize(), scheme_c().canonicalize());
}

#[test]
fn text_round_trip() {
    for c in full_enumeration().iter().step_by(37) {
        let back: Cgras = c.to_string().parse().unwrap();
        assert_eq!(back.canonical_text(), c.canonical_text());
    }
}

proptest! {
    #[test]
    fn mirror_preserves_key_and_validity(i in 0usize..100_000) {
        let all = full_enumeration();
        let c = &all[i % all.len()];
        let m = c.mirrored();
        prop_assert!(m.validate().is_empty());
        prop_assert_eq!(m.canonicalize(), c.canonicalize());
        prop_assert_eq!(m.mirrored().canonical_text(), c.canonical_text());
    }

    #[test]
    fn decode_sets_are_downward_closed(i in 0usize..100_000) {
        let all = full_enumeration();
        let c = &all[i % all.len()];
        let above = c.above_masks();
        for z in 0..3 {
            let d = c.decode_mask(z);
            for (u, &up) in above.iter().enumerate() {
                // any decoded codeword has all of its decoded-or-not bases decoded
                if up & d != 0 {
                    prop_assert!(d >> u & 1 == 1, "{}", c);
                }
            }
        }
    }
}
