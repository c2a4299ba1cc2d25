//! Gaussian achievable region of a scheme, written as rate constraints that
//! become linear in the per-codeword powers once target rates are fixed.
//!
//! Each receiver decodes its decode set jointly and treats every other
//! codeword as noise. An error event is a nonempty set `T` of wrongly
//! decoded codewords; it must be upward-closed (a wrong base makes every
//! decoded top on it wrong too). Each event gives
//!
//! ```text
//! Σ_{u∈T} r_u ≤ C( Σ_{u∈T} g_zu P_u / (1 + Σ_{u∉D_z} g_zu P_u) )
//! ```
//!
//! where `g_zu = (Σ_{j∈tx(u)} h_zj)²` is the coherent combining gain of a
//! codeword sent with equal power from all of its transmitters.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cgras::Cgras;
use crate::channel::{capacity, inverse_capacity, AccessChannel, RateTarget};
use crate::{NodeSet, NUM_RECEIVERS, NUM_RELAYS};

/// Codeword masks decoded at each receiver.
pub fn decode_sets(c: &Cgras) -> [u32; NUM_RECEIVERS] {
    std::array::from_fn(|z| c.decode_mask(z))
}

/// Nonempty subsets of `decode` that are upward-closed inside it.
///
/// `above[u]` is the (transitively closed) mask of codewords layered on top
/// of `u`. Subsets are returned in increasing mask order.
pub fn error_subsets(decode: u32, above: &[u32]) -> Vec<u32> {
    let mut out = Vec::new();
    let mut t = decode;
    // walk all submasks of `decode`
    while t != 0 {
        let closed = (0..above.len())
            .filter(|&u| t >> u & 1 == 1)
            .all(|u| above[u] & decode & !t == 0);
        if closed {
            out.push(t);
        }
        t = (t - 1) & decode;
    }
    out.reverse();
    out
}

/// Combining gain `(Σ_{j∈tx} h_zj)²` of a codeword at a receiver.
pub fn combining_gain(ch: &AccessChannel, receiver: usize, tx: NodeSet) -> f64 {
    let amp: f64 = tx.iter().map(|j| ch.gain(receiver, j)).sum();
    amp * amp
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateTerm {
    pub codeword: usize,
    pub message: usize,
    pub share: f64,
}

/// `Σ rate_terms ≤ C(Σ signal·P / (1 + Σ interference·P))` at one receiver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateConstraint {
    pub receiver: usize,
    /// Error event `T` as a codeword mask.
    pub subset: u32,
    pub rate_terms: Vec<RateTerm>,
    pub signal: Vec<(usize, f64)>,
    pub interference: Vec<(usize, f64)>,
}

impl RateConstraint {
    /// Messages touched by `T`, as a set.
    pub fn messages(&self) -> NodeSet {
        NodeSet::from_indices(self.rate_terms.iter().map(|t| t.message))
    }

    /// Right-hand side for the given per-codeword powers.
    pub fn rhs(&self, powers: &[f64]) -> f64 {
        let s: f64 = self.signal.iter().map(|&(u, g)| g * powers[u]).sum();
        let i: f64 = self.interference.iter().map(|&(u, g)| g * powers[u]).sum();
        capacity(s / (1.0 + i))
    }

    /// Left-hand side for `target`, using per-codeword `shares`.
    pub fn rate_sum(&self, target: &RateTarget, shares: &[f64]) -> f64 {
        self.rate_terms.iter().map(|t| shares[t.codeword] * target.rate(t.message)).sum()
    }
}

/// All rate constraints of one scheme on one channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    /// One power variable per codeword.
    pub num_codewords: usize,
    pub labels: Vec<String>,
    pub messages: Vec<usize>,
    pub tx: Vec<NodeSet>,
    /// Nominal shares from the scheme.
    pub shares: Vec<f64>,
    pub constraints: Vec<RateConstraint>,
    /// Optional per-relay access power limits, copied from the channel.
    pub power_limits: Option<[f64; NUM_RELAYS]>,
}

/// Build the constraint set of `c` on `ch`.
pub fn gen_constraints(c: &Cgras, ch: &AccessChannel) -> ConstraintSet {
    let n = c.len();
    let above = c.above_masks();
    let mut constraints = Vec::new();
    for z in 0..NUM_RECEIVERS {
        let decode = c.decode_mask(z);
        let gains: Vec<f64> = c.codewords.iter().map(|cw| combining_gain(ch, z, cw.tx)).collect();
        let interference: Vec<(usize, f64)> =
            (0..n).filter(|&u| decode >> u & 1 == 0).map(|u| (u, gains[u])).collect();
        for t in error_subsets(decode, &above) {
            let members: Vec<usize> = (0..n).filter(|&u| t >> u & 1 == 1).collect();
            constraints.push(RateConstraint {
                receiver: z,
                subset: t,
                rate_terms: members
                    .iter()
                    .map(|&u| RateTerm { codeword: u, message: c.codewords[u].message, share: c.codewords[u].share })
                    .collect(),
                signal: members.iter().map(|&u| (u, gains[u])).collect(),
                interference: interference.clone(),
            });
        }
    }
    ConstraintSet {
        num_codewords: n,
        labels: c.codewords.iter().map(ToString::to_string).collect(),
        messages: c.codewords.iter().map(|cw| cw.message).collect(),
        tx: c.codewords.iter().map(|cw| cw.tx).collect(),
        shares: c.codewords.iter().map(|cw| cw.share).collect(),
        constraints,
        power_limits: ch.relay_power_limits,
    }
}

impl ConstraintSet {
    /// Debug/golden text: one line per constraint.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, l) in self.labels.iter().enumerate() {
            let _ = writeln!(out, "# u{k} = {l}");
        }
        for rc in &self.constraints {
            let _ = write!(out, "rx{} {}:", rc.receiver + 1, subset_text(rc.subset, self.num_codewords));
            for &(u, g) in &rc.signal {
                let _ = write!(out, " +{g}*P{u}");
            }
            if !rc.interference.is_empty() {
                out.push_str(" /");
                for &(u, g) in &rc.interference {
                    let _ = write!(out, " {g}*P{u}");
                }
            }
            out.push('\n');
        }
        out
    }

    /// Fix rates and shares: each constraint becomes `S_T − c·I_z ≥ c` with `c = C⁻¹(Σ r_T)`.
    pub fn linearize(&self, target: &RateTarget, shares: &[f64]) -> LinearSystem {
        let mut sys = LinearSystem::with_capacity(self.num_codewords, self.constraints.len());
        self.linearize_into(target, shares, &mut sys);
        sys
    }

    /// As [`linearize`](Self::linearize), reusing `sys`'s buffers.
    pub fn linearize_into(&self, target: &RateTarget, shares: &[f64], sys: &mut LinearSystem) {
        let n = self.num_codewords;
        sys.reset(n);
        for rc in &self.constraints {
            let c = inverse_capacity(rc.rate_sum(target, shares));
            let row = sys.push_row(rc.receiver, rc.subset, c);
            for &(u, g) in &rc.signal {
                row[u] += g;
            }
            for &(u, g) in &rc.interference {
                row[u] -= c * g;
            }
        }
    }

    /// Lower-bound linearization valid for every choice of split shares:
    /// only messages whose parts all lie in `T` count towards `Σ r_T`.
    pub fn linearize_relaxed(&self, target: &RateTarget, sys: &mut LinearSystem) {
        let n = self.num_codewords;
        let mut parts = [0u32; NUM_RECEIVERS];
        for (u, &m) in self.messages.iter().enumerate() {
            parts[m] |= 1 << u;
        }
        sys.reset(n);
        for rc in &self.constraints {
            let rate: f64 = (0..NUM_RECEIVERS)
                .filter(|&m| parts[m] != 0 && parts[m] & !rc.subset == 0)
                .map(|m| target.rate(m))
                .sum();
            let c = inverse_capacity(rate);
            let row = sys.push_row(rc.receiver, rc.subset, c);
            for &(u, g) in &rc.signal {
                row[u] += g;
            }
            for &(u, g) in &rc.interference {
                row[u] -= c * g;
            }
        }
    }
}

pub(crate) fn subset_text(mask: u32, n: usize) -> String {
    let ids: Vec<String> = (0..n).filter(|&u| mask >> u & 1 == 1).map(|u| format!("u{u}")).collect();
    format!("{{{}}}", ids.join(","))
}

/// Rows `coeffs · P ≥ rhs` over the per-codeword powers.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LinearSystem {
    num_vars: usize,
    receivers: Vec<usize>,
    subsets: Vec<u32>,
    coeffs: Vec<f64>,
    rhs: Vec<f64>,
}

impl LinearSystem {
    pub fn with_capacity(num_vars: usize, rows: usize) -> Self {
        LinearSystem {
            num_vars,
            receivers: Vec::with_capacity(rows),
            subsets: Vec::with_capacity(rows),
            coeffs: Vec::with_capacity(rows * num_vars),
            rhs: Vec::with_capacity(rows),
        }
    }

    fn reset(&mut self, num_vars: usize) {
        self.num_vars = num_vars;
        self.receivers.clear();
        self.subsets.clear();
        self.coeffs.clear();
        self.rhs.clear();
    }

    fn push_row(&mut self, receiver: usize, subset: u32, rhs: f64) -> &mut [f64] {
        self.receivers.push(receiver);
        self.subsets.push(subset);
        self.rhs.push(rhs);
        let start = self.coeffs.len();
        self.coeffs.resize(start + self.num_vars, 0.0);
        &mut self.coeffs[start..]
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.coeffs[k * self.num_vars..(k + 1) * self.num_vars]
    }

    pub fn rhs(&self, k: usize) -> f64 {
        self.rhs[k]
    }

    pub fn receiver(&self, k: usize) -> usize {
        self.receivers[k]
    }

    pub fn subset(&self, k: usize) -> u32 {
        self.subsets[k]
    }

    /// `coeffs·P − rhs` for row `k`; nonnegative when satisfied.
    pub fn slack(&self, k: usize, powers: &[f64]) -> f64 {
        self.row(k).iter().zip(powers).map(|(a, p)| a * p).sum::<f64>() - self.rhs[k]
    }

    /// True if every row holds within a relative tolerance `tol`.
    pub fn is_satisfied(&self, powers: &[f64], tol: f64) -> bool {
        (0..self.num_rows()).all(|k| self.slack(k, powers) >= -tol * self.rhs[k].max(1.0))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for k in 0..self.num_rows() {
            let _ = write!(out, "rx{} {}:", self.receivers[k] + 1, subset_text(self.subsets[k], self.num_vars));
            for a in self.row(k) {
                let _ = write!(out, " {a}");
            }
            let _ = writeln!(out, " >= {}", self.rhs[k]);
        }
        out
    }
}
