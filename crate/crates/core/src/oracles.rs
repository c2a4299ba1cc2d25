//! The four reference schemes on the symmetric channel and their regions
//! written out by hand. These are kept independent of the region generator
//! so the two can be checked against each other.

use serde::Serialize;

use crate::cgras::{Cgras, Codeword, MessageAllocation};
use crate::NodeSet;

const R1: NodeSet = NodeSet(0b01);
const R2: NodeSet = NodeSet(0b10);
const BOTH: NodeSet = NodeSet(0b11);

fn rx(receivers: &[usize]) -> NodeSet {
    NodeSet::from_indices(receivers.iter().map(|r| r - 1))
}

fn alloc(relay1: &[usize], relay2: &[usize]) -> MessageAllocation {
    MessageAllocation::from_lists(relay1, relay2).expect("reference allocation covers all messages")
}

/// Non-cooperative, two active relays: `W1` from relay 1, `W3` layered on `W2` at relay 2.
///
/// Codewords: 0 = `W1` (P11), 1 = `W2` (P22), 2 = `W3` (P23).
pub fn scheme_a() -> Cgras {
    Cgras::new(
        alloc(&[1], &[2, 3]),
        vec![
            Codeword::new(0, R1, rx(&[1])),
            Codeword::new(1, R2, rx(&[2, 3])),
            Codeword::new(2, R2, rx(&[3])),
        ],
        vec![(1, 2)],
    )
}

/// As [`scheme_a`] but receiver 2 decodes everything and `W2` sits on `W3`.
///
/// Codewords: 0 = `W1` (P11), 1 = `W2` (P22), 2 = `W3` (P23).
pub fn scheme_b() -> Cgras {
    Cgras::new(
        alloc(&[1], &[2, 3]),
        vec![
            Codeword::new(0, R1, rx(&[1, 2])),
            Codeword::new(1, R2, rx(&[2])),
            Codeword::new(2, R2, rx(&[2, 3])),
        ],
        vec![(2, 1)],
    )
}

/// Partial cooperation: `W2` sent by both relays and decoded everywhere,
/// `W1` (relay 2) and `W3` (relay 1) layered on it.
///
/// Codewords: 0 = `W1` (P21), 1 = `W2` (P2), 2 = `W3` (P13).
pub fn scheme_c() -> Cgras {
    Cgras::new(
        alloc(&[2, 3], &[1, 2]),
        vec![
            Codeword::new(0, R2, rx(&[1])),
            Codeword::new(1, BOTH, rx(&[1, 2, 3])),
            Codeword::new(2, R1, rx(&[3])),
        ],
        vec![(1, 0), (1, 2)],
    )
}

/// As [`scheme_c`] with receivers 1 and 3 decoding every codeword.
pub fn scheme_d() -> Cgras {
    Cgras::new(
        alloc(&[2, 3], &[1, 2]),
        vec![
            Codeword::new(0, R2, rx(&[1, 3])),
            Codeword::new(1, BOTH, rx(&[1, 2, 3])),
            Codeword::new(2, R1, rx(&[1, 3])),
        ],
        vec![(1, 0), (1, 2)],
    )
}

fn cap(x: f64) -> f64 {
    0.5 * (1.0 + x).log2()
}

fn cap_inv(r: f64) -> f64 {
    4f64.powf(r) - 1.0
}

/// One closed-form rate bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleBound {
    /// Receiver index, 0-based.
    pub receiver: usize,
    /// Messages whose rates are summed on the left.
    pub messages: NodeSet,
    pub rhs: f64,
    /// Listed for the scheme but not produced by the region generator.
    pub paper_extra: bool,
}

impl OracleBound {
    fn new(receiver: usize, messages: &[usize], rhs: f64) -> Self {
        OracleBound { receiver: receiver - 1, messages: rx(messages), rhs, paper_extra: false }
    }

    fn extra(mut self) -> Self {
        self.paper_extra = true;
        self
    }

    /// Left-hand side label such as `R1+R3`.
    pub fn label(&self) -> String {
        self.messages.iter().map(|m| format!("R{}", m + 1)).collect::<Vec<_>>().join("+")
    }
}

pub fn region_a(a: f64, b: f64, p11: f64, p22: f64, p23: f64) -> Vec<OracleBound> {
    let (a2, b2) = (a * a, b * b);
    vec![
        OracleBound::new(1, &[1], cap(p11 / (1.0 + b2 * (p22 + p23)))),
        OracleBound::new(2, &[2], cap(a2 * p22 / (1.0 + a2 * p11 + a2 * p23))),
        OracleBound::new(3, &[2, 3], cap((p22 + p23) / (1.0 + b2 * p11))),
        OracleBound::new(3, &[3], cap(p23 / (1.0 + b2 * p11))),
    ]
}

pub fn region_b(a: f64, b: f64, p11: f64, p22: f64, p23: f64) -> Vec<OracleBound> {
    let (a2, b2) = (a * a, b * b);
    vec![
        OracleBound::new(1, &[1], cap(p11 / (1.0 + b2 * (p22 + p23)))),
        OracleBound::new(2, &[1, 2, 3], cap(a2 * (p11 + p22 + p23))),
        OracleBound::new(2, &[2, 3], cap(a2 * (p22 + p23))),
        OracleBound::new(2, &[1, 2], cap(a2 * (p11 + p22))),
        OracleBound::new(2, &[2], cap(a2 * p22)),
        OracleBound::new(2, &[1], cap(a2 * p11)),
        OracleBound::new(3, &[3], cap(p23 / (1.0 + b2 * p11 + p22))),
    ]
}

pub fn region_c(a: f64, b: f64, p2: f64, p13: f64, p21: f64) -> Vec<OracleBound> {
    let (a2, b2, c2) = (a * a, b * b, (b + 1.0) * (b + 1.0));
    vec![
        OracleBound::new(1, &[1, 2], cap((b2 * p21 + c2 * p2) / (1.0 + p13))),
        OracleBound::new(1, &[1], cap(b2 * p21 / (1.0 + p13))),
        OracleBound::new(3, &[2, 3], cap((b2 * p13 + c2 * p2) / (1.0 + p21))),
        OracleBound::new(3, &[3], cap(b2 * p13 / (1.0 + p21))),
        OracleBound::new(2, &[2], cap(4.0 * a2 * p2 / (1.0 + a2 * p13 + a2 * p21))),
    ]
}

pub fn region_d(a: f64, b: f64, p2: f64, p13: f64, p21: f64) -> Vec<OracleBound> {
    let (a2, b2, c2) = (a * a, b * b, (b + 1.0) * (b + 1.0));
    vec![
        OracleBound::new(1, &[1, 2, 3], cap(b2 * p21 + c2 * p2 + p13)),
        OracleBound::new(1, &[1, 3], cap(b2 * p21 + p13)),
        OracleBound::new(1, &[1, 2], cap(b2 * p21 + c2 * p2)).extra(),
        OracleBound::new(1, &[1], cap(b2 * p21)),
        OracleBound::new(1, &[3], cap(p13)),
        OracleBound::new(3, &[1, 2, 3], cap(b2 * p13 + c2 * p2 + p21)),
        OracleBound::new(3, &[1, 3], cap(b2 * p13 + p21)),
        OracleBound::new(3, &[2, 3], cap(b2 * p13 + c2 * p2)).extra(),
        OracleBound::new(3, &[3], cap(b2 * p13)),
        OracleBound::new(3, &[1], cap(p21)),
        OracleBound::new(2, &[2], cap(4.0 * a2 * p2 / (1.0 + a2 * p13 + a2 * p21))),
    ]
}

/// Largest `b` allowed by the two necessary conditions for scheme A.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SchemeAThreshold {
    /// From `b⁴ ≤ 1 / (C⁻¹(2R)·C⁻¹(R))`.
    pub sum_condition: f64,
    /// From `b² ≤ 1 / (C⁻¹(R)(1 + C⁻¹(R)))`.
    pub single_condition: f64,
}

impl SchemeAThreshold {
    pub fn tightest(&self) -> f64 {
        self.sum_condition.min(self.single_condition)
    }
}

/// Reported thresholds are capped at this value as the rate vanishes.
pub const THRESHOLD_CAP: f64 = 1e6;

pub fn scheme_a_feasibility_threshold(rate: f64) -> SchemeAThreshold {
    let (c1, c2) = (cap_inv(rate), cap_inv(2.0 * rate));
    let clamp = |x: f64| if x.is_finite() { x.min(THRESHOLD_CAP) } else { THRESHOLD_CAP };
    SchemeAThreshold {
        sum_condition: clamp((c2 * c1).powf(-0.25)),
        single_condition: clamp((c1 * (1.0 + c1)).powf(-0.5)),
    }
}
