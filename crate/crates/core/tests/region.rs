use std::sync::OnceLock;

use proptest::prelude::*;
use relaynet::cgras::Cgras;
use relaynet::channel::{symmetric_channel, RateTarget};
use relaynet::oracles::{scheme_a, scheme_b, scheme_d};
use relaynet::region::{decode_sets, error_subsets, gen_constraints};
use relaynet::sweep::SchemeLibrary;

fn library() -> &'static [Cgras] {
    static LIB: OnceLock<Vec<Cgras>> = OnceLock::new();
    LIB.get_or_init(|| {
        let mut v = SchemeLibrary::new(false).schemes;
        v.extend(SchemeLibrary::new(true).schemes.into_iter().step_by(11));
        v
    })
}

#[test]
fn decode_set_examples() {
    assert_eq!(decode_sets(&scheme_a()), [0b001, 0b010, 0b110]);
    let d = decode_sets(&scheme_d());
    assert_eq!((d[0], d[2]), (0b111, 0b111));
}

#[test]
fn error_subset_examples() {
    let a = scheme_a();
    assert_eq!(error_subsets(0b110, &a.above_masks()), vec![0b100, 0b110]);
    let b = scheme_b();
    assert_eq!(error_subsets(0b111, &b.above_masks()), vec![0b001, 0b010, 0b011, 0b110, 0b111]);
    assert_eq!(error_subsets(0b1, &[0]), vec![0b1]);
}

#[test]
fn error_subsets_closed_under_union_and_intersection() {
    for c in library() {
        let above = c.above_masks();
        for d in decode_sets(c) {
            let fam = error_subsets(d, &above);
            for &s in &fam {
                for &t in &fam {
                    assert!(fam.contains(&(s | t)), "{c}");
                    if s & t != 0 {
                        assert!(fam.contains(&(s & t)), "{c}");
                    }
                }
            }
        }
    }
}

#[test]
fn zero_powers_zero_rhs() {
    let (ch, _) = symmetric_channel(0.8, 1.3).unwrap();
    for c in library().iter().step_by(5) {
        let cs = gen_constraints(c, &ch);
        let zeros = vec![0.0; cs.num_codewords];
        assert!(cs.constraints.iter().all(|k| k.rhs(&zeros) == 0.0));
    }
}

#[test]
fn scheme_a_linear_rows() {
    let (ch, _) = symmetric_channel(1.2, 0.5).unwrap();
    let cs = gen_constraints(&scheme_a(), &ch);
    let r: f64 = 0.3;
    let sys = cs.linearize(&RateTarget::symmetric(r).unwrap(), &cs.shares);
    let (c1, c2) = (4f64.powf(r) - 1.0, 4f64.powf(2.0 * r) - 1.0);
    let row = |z: usize, subset: u32| (0..sys.num_rows()).find(|&k| sys.receiver(k) == z && sys.subset(k) == subset).unwrap();
    let k = row(0, 0b001);
    let want = [1.0, -c1 * 0.25, -c1 * 0.25];
    assert!(sys.row(k).iter().zip(want).all(|(x, y)| (x - y).abs() < 1e-12));
    assert!((sys.rhs(k) - c1).abs() < 1e-12);
    let k = row(2, 0b110);
    let want = [-c2 * 0.25, 1.0, 1.0];
    assert!(sys.row(k).iter().zip(want).all(|(x, y)| (x - y).abs() < 1e-12));
    assert!((sys.rhs(k) - c2).abs() < 1e-12);
    // zero target leaves only P ≥ 0
    let zero = cs.linearize(&RateTarget::new([0.0; 3]).unwrap(), &cs.shares);
    for k in 0..zero.num_rows() {
        assert_eq!(zero.rhs(k), 0.0);
        assert!(zero.row(k).iter().all(|&v| v >= 0.0));
    }
}

proptest! {
    #[test]
    fn linearized_sign_structure(i in 0usize..100_000, a in 0.0..2.0f64, b in 0.0..2.0f64, r in 0.0..3.0f64) {
        let c = &library()[i % library().len()];
        let (ch, _) = symmetric_channel(a, b).unwrap();
        let cs = gen_constraints(c, &ch);
        let decode = decode_sets(c);
        let sys = cs.linearize(&RateTarget::symmetric(r).unwrap(), &cs.shares);
        for k in 0..sys.num_rows() {
            let (z, t) = (sys.receiver(k), sys.subset(k));
            prop_assert!(sys.rhs(k) >= 0.0);
            for (u, &v) in sys.row(k).iter().enumerate() {
                if t >> u & 1 == 1 {
                    prop_assert!(v >= 0.0);
                } else if decode[z] >> u & 1 == 1 {
                    prop_assert_eq!(v, 0.0);
                } else {
                    prop_assert!(v <= 0.0);
                }
            }
        }
    }

    #[test]
    fn rhs_grows_with_own_power(
        i in 0usize..100_000,
        a in 0.0..2.0f64,
        b in 0.0..2.0f64,
        powers in prop::collection::vec(0.0..10.0f64, 8),
        bump in 0.0..5.0f64,
    ) {
        let c = &library()[i % library().len()];
        let (ch, _) = symmetric_channel(a, b).unwrap();
        let cs = gen_constraints(c, &ch);
        let p = &powers[..cs.num_codewords];
        for k in &cs.constraints {
            for u in 0..cs.num_codewords {
                if k.subset >> u & 1 == 1 {
                    let mut q = p.to_vec();
                    q[u] += bump;
                    prop_assert!(k.rhs(&q) >= k.rhs(p) - 1e-12);
                }
            }
        }
    }
}
