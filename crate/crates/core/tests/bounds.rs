use proptest::prelude::*;
use relaynet::bounds::{energy_lower_bound, outer_bound_holds, outer_bound_rhs, relay_rates_feasible, AmplitudeMatrix, BoundConfig};
use relaynet::cgras::{enumerate_allocations, MessageAllocation};
use relaynet::channel::{cap_scalar, symmetric_channel, RateTarget, RelayChannel};
use relaynet::optimizer::{bs_power, optimize_scheme, EnergyWeights, SplitSearch};
use relaynet::sweep::SchemeLibrary;

fn small() -> BoundConfig {
    BoundConfig { samples: 200, ..Default::default() }
}

#[test]
fn single_relay_single_message() {
    // relay 1 alone serving receiver 1: amplitude x gives ½log₂(1+x²)
    let (ch, _) = symmetric_channel(0.5, 0.5).unwrap();
    let a = AmplitudeMatrix::new([[3f64.sqrt(), 0.0, 0.0], [0.0; 3]]);
    let rhs = outer_bound_rhs(&a, &ch).unwrap();
    assert!((rhs[0] - 1.0).abs() < 1e-12);
    assert!(outer_bound_holds(&a, &ch, &RateTarget::new([1.0, 0.0, 0.0]).unwrap()));
    assert!(!outer_bound_holds(&a, &ch, &RateTarget::new([1.0 + 1e-6, 0.0, 0.0]).unwrap()));
}

#[test]
fn relay_links_follow_capacity() {
    let rc = RelayChannel::new([0.5, 2.0]).unwrap();
    let alloc = MessageAllocation::from_lists(&[1, 2], &[3]).unwrap();
    let t = RateTarget::new([0.4, 0.6, 1.0]).unwrap();
    // relay 1 needs 1 bit at gain 0.5: P = 3/0.25
    let need = [12.0, 3.0 / 4.0];
    assert!(relay_rates_feasible(&alloc, &t, &rc, need));
    assert!(!relay_rates_feasible(&alloc, &t, &rc, [need[0] * 0.99, need[1]]));
    assert!(!relay_rates_feasible(&alloc, &t, &rc, [need[0], need[1] * 0.99]));
    assert!((bs_power(&alloc, &t, &rc).unwrap() - (need[0] + need[1])).abs() < 1e-12);
    assert!((cap_scalar(need[0] * 0.25).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn zero_target_bound_is_zero() {
    let (ch, rc) = symmetric_channel(1.3, 0.2).unwrap();
    let lb = energy_lower_bound(&ch, &rc, &RateTarget::new([0.0; 3]).unwrap(), &small()).unwrap();
    assert_eq!(lb.energy, 0.0);
}

#[test]
fn bound_is_reproducible() {
    let (ch, rc) = symmetric_channel(0.9, 1.1).unwrap();
    let t = RateTarget::symmetric(0.8).unwrap();
    let first = energy_lower_bound(&ch, &rc, &t, &small()).unwrap();
    let second = energy_lower_bound(&ch, &rc, &t, &small()).unwrap();
    assert_eq!(first, second);
}

#[test]
fn bound_certificate_is_consistent() {
    let (ch, rc) = symmetric_channel(0.7, 0.4).unwrap();
    let t = RateTarget::symmetric(1.0).unwrap();
    let lb = energy_lower_bound(&ch, &rc, &t, &small()).unwrap();
    let alloc = lb.allocation.unwrap();
    let amp = lb.amplitudes.unwrap();
    assert!(amp.respects(&alloc));
    // slightly scaled up amplitudes must meet every outer-bound inequality
    assert!(outer_bound_holds(&amp.scaled(1.0 + 1e-6), &ch, &t));
    let relay = amp.relay_power(0) + amp.relay_power(1);
    assert!((lb.relay_power - relay).abs() <= 1e-9 * relay);
    assert!((lb.bs_power - bs_power(&alloc, &t, &rc).unwrap()).abs() < 1e-9);
    assert!((lb.energy - (lb.bs_power + lb.relay_power) / t.sum()).abs() <= 1e-9 * lb.energy);
}

#[test]
fn bound_below_every_scheme() {
    let (ch, rc) = symmetric_channel(0.7, 0.4).unwrap();
    let t = RateTarget::symmetric(1.0).unwrap();
    let lb = energy_lower_bound(&ch, &rc, &t, &BoundConfig::default()).unwrap();
    let lib = SchemeLibrary::new(false);
    let mut feasible = 0;
    for c in &lib.schemes {
        let ps = optimize_scheme(c, &ch, &rc, &t, &EnergyWeights::default(), &SplitSearch::default()).unwrap();
        if ps.feasible {
            feasible += 1;
            assert!(lb.energy <= ps.energy * (1.0 + 1e-9), "{c}: {} < {}", ps.energy, lb.energy);
        }
    }
    assert!(feasible > 0);
}

#[test]
fn bound_grows_with_rate() {
    let (ch, rc) = symmetric_channel(1.1, 0.6).unwrap();
    let mut last = 0.0;
    for r in [0.25, 0.5, 1.0, 1.5, 2.0] {
        let lb = energy_lower_bound(&ch, &rc, &RateTarget::symmetric(r).unwrap(), &small()).unwrap();
        assert!(lb.energy >= last, "R={r}: {} < {last}", lb.energy);
        last = lb.energy;
    }
}

#[test]
fn bound_rejects_bad_config() {
    let (ch, rc) = symmetric_channel(1.0, 1.0).unwrap();
    let t = RateTarget::symmetric(1.0).unwrap();
    let zero_weight = BoundConfig { weights: EnergyWeights::new([0.0, 1.0]).unwrap(), ..small() };
    assert!(energy_lower_bound(&ch, &rc, &t, &zero_weight).is_err());
    let bad_tol = BoundConfig { bisect_tol: 1.5, ..small() };
    assert!(energy_lower_bound(&ch, &rc, &t, &bad_tol).is_err());
}

fn amplitudes() -> impl Strategy<Value = AmplitudeMatrix> {
    prop::array::uniform2(prop::array::uniform3(-2.0..2.0f64)).prop_map(AmplitudeMatrix::new)
}

proptest! {
    #[test]
    fn scaling_up_keeps_bound(a in amplitudes(), t in 1.0..4.0f64, x in 0.0..2.0f64, y in 0.0..2.0f64, r in 0.0..1.5f64) {
        let (ch, _) = symmetric_channel(x, y).unwrap();
        let target = RateTarget::symmetric(r).unwrap();
        if outer_bound_holds(&a, &ch, &target) {
            prop_assert!(outer_bound_holds(&a.scaled(t), &ch, &target));
        }
        let small = outer_bound_rhs(&a, &ch).unwrap();
        let big = outer_bound_rhs(&a.scaled(t), &ch).unwrap();
        for k in 0..7 {
            prop_assert!(big[k] >= small[k] - 1e-12);
        }
    }

    #[test]
    fn joint_bound_dominates_singletons(a in amplitudes(), x in 0.0..2.0f64, y in 0.0..2.0f64) {
        let (ch, _) = symmetric_channel(x, y).unwrap();
        let rhs = outer_bound_rhs(&a, &ch).unwrap();
        prop_assert!(rhs.iter().all(|&c| c >= 0.0));
        for k in 0..6 {
            prop_assert!(rhs[6] >= rhs[k] - 1e-12);
        }
    }

    #[test]
    fn bs_power_is_the_cheapest_relay_feed(i in 0usize..27, r in prop::array::uniform3(0.0..2.0f64), d in prop::array::uniform2(0.2..2.0f64)) {
        let alloc = enumerate_allocations()[i];
        let t = RateTarget::new(r).unwrap();
        let rc = RelayChannel::new(d).unwrap();
        let total = bs_power(&alloc, &t, &rc).unwrap();
        let split: Vec<f64> = (0..2).map(|j| {
            let rate: f64 = alloc.messages(j).iter().map(|z| t.rate(z)).sum();
            ((2.0 * rate * std::f64::consts::LN_2).exp_m1()) / (d[j] * d[j])
        }).collect();
        prop_assert!((split[0] + split[1] - total).abs() <= 1e-9 * total.max(1.0));
        prop_assert!(relay_rates_feasible(&alloc, &t, &rc, [split[0] * (1.0 + 1e-9), split[1] * (1.0 + 1e-9)]));
    }
}
