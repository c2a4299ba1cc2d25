//! Power and energy minimization for a fixed scheme.
//!
//! The base station power follows in closed form from the allocation; the
//! access-link powers come from a linear program over the scheme's
//! linearized region. Split shares are searched on a grid, one LP per point.

pub mod simplex;

use serde::{Deserialize, Serialize};

use crate::cgras::{Cgras, MessageAllocation};
use crate::channel::{inverse_capacity, AccessChannel, RateTarget, RelayChannel};
use crate::error::{Error, Result};
use crate::region::{gen_constraints, subset_text, ConstraintSet, LinearSystem};
use crate::{NodeSet, NUM_RECEIVERS, NUM_RELAYS};

use simplex::LpOutcome;

/// Relay power weights `μ_j` in the total power; the base station weight is 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyWeights {
    pub relay: [f64; NUM_RELAYS],
}

impl Default for EnergyWeights {
    fn default() -> Self {
        EnergyWeights { relay: [1.0; NUM_RELAYS] }
    }
}

impl EnergyWeights {
    pub fn new(relay: [f64; NUM_RELAYS]) -> Result<Self> {
        if relay.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::Domain(format!("relay weights must be finite and nonnegative, got {relay:?}")));
        }
        Ok(EnergyWeights { relay })
    }

    /// Weighted cost of one unit of codeword power sent from every relay in `tx`.
    pub fn codeword_cost(&self, tx: NodeSet) -> f64 {
        tx.iter().map(|j| self.relay[j]).sum()
    }
}

/// Split share search settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSearch {
    /// Grid step for the share of each part.
    pub step: f64,
    /// When false, the shares stored in the scheme are used as given.
    pub search: bool,
}

impl Default for SplitSearch {
    fn default() -> Self {
        SplitSearch { step: 0.05, search: true }
    }
}

impl SplitSearch {
    pub fn fixed() -> Self {
        SplitSearch { search: false, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step <= 0.5) {
            return Err(Error::Config(format!("split step must lie in (0, 0.5], got {}", self.step)));
        }
        Ok(())
    }
}

/// Optimized powers of one scheme.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PowerSolution {
    /// The scheme as optimized; powers follow its codeword order.
    pub scheme: Option<String>,
    /// Key shared with the scheme's mirror image.
    pub key: Option<String>,
    pub feasible: bool,
    /// Power of each codeword, per transmitting relay.
    pub codeword_powers: Vec<f64>,
    /// Shares used for each codeword.
    pub shares: Vec<f64>,
    /// Access power spent at each relay.
    pub relay_powers: [f64; NUM_RELAYS],
    /// `Σ_j μ_j P^RN_j`.
    pub access_power: f64,
    pub bs_power: f64,
    /// Energy per bit; infinite when infeasible.
    pub energy: f64,
    /// Constraints that hold with equality at the optimum.
    pub binding: Vec<String>,
}

impl PowerSolution {
    pub fn infeasible(num_codewords: usize) -> Self {
        PowerSolution {
            scheme: None,
            key: None,
            feasible: false,
            codeword_powers: vec![0.0; num_codewords],
            shares: vec![0.0; num_codewords],
            relay_powers: [0.0; NUM_RELAYS],
            access_power: f64::INFINITY,
            bs_power: 0.0,
            energy: f64::INFINITY,
            binding: Vec::new(),
        }
    }

    pub fn total_power(&self) -> f64 {
        self.bs_power + self.access_power
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Minimal base-station power for `alloc`: each relay link carries the sum
/// rate of the messages routed through it.
pub fn bs_power(alloc: &MessageAllocation, target: &RateTarget, rc: &RelayChannel) -> Result<f64> {
    let mut total = 0.0;
    for j in 0..NUM_RELAYS {
        let rate: f64 = alloc.messages(j).iter().map(|z| target.rate(z)).sum();
        if rate == 0.0 {
            continue;
        }
        let d = rc.gain(j);
        if d == 0.0 {
            return Err(Error::Infeasible(format!("relay {} carries rate {rate} over a zero-gain link", j + 1)));
        }
        total += inverse_capacity(rate) / (d * d);
    }
    Ok(total)
}

/// `(P^BS + Σ_j μ_j P^RN_j) / ΣR`.
pub fn total_energy(ps: &PowerSolution, target: &RateTarget, w: &EnergyWeights) -> Result<f64> {
    let sum = target.sum();
    if sum == 0.0 {
        return Err(Error::ZeroRate);
    }
    if !ps.feasible {
        return Ok(f64::INFINITY);
    }
    let relay: f64 = ps.relay_powers.iter().zip(w.relay).map(|(p, m)| p * m).sum();
    Ok((ps.bs_power + relay) / sum)
}

/// Reusable buffers for repeated LPs on one constraint set.
#[derive(Default)]
pub(crate) struct LpWorkspace {
    sys: LinearSystem,
    a: Vec<f64>,
    rhs: Vec<f64>,
    cost: Vec<f64>,
}

impl LpWorkspace {
    fn load_costs(&mut self, cs: &ConstraintSet, w: &EnergyWeights) {
        self.cost.clear();
        self.cost.extend(cs.tx.iter().map(|&tx| w.codeword_cost(tx)));
    }

    /// Solve the LP currently held in `self.sys`.
    fn solve(&mut self, cs: &ConstraintSet) -> Result<LpOutcome> {
        let n = cs.num_codewords;
        self.a.clear();
        self.rhs.clear();
        for k in 0..self.sys.num_rows() {
            self.a.extend_from_slice(self.sys.row(k));
            self.rhs.push(self.sys.rhs(k));
        }
        if let Some(limits) = cs.power_limits {
            for (j, &limit) in limits.iter().enumerate() {
                self.a.extend(cs.tx.iter().map(|tx| if tx.contains(j) { -1.0 } else { 0.0 }));
                self.rhs.push(-limit);
            }
        }
        debug_assert_eq!(self.a.len(), self.rhs.len() * n);
        simplex::minimize(&self.a, &self.rhs, &self.cost)
    }

    /// Minimal weighted access power for the given shares, or `None` if infeasible.
    pub(crate) fn access_power(
        &mut self,
        cs: &ConstraintSet,
        target: &RateTarget,
        shares: &[f64],
        w: &EnergyWeights,
    ) -> Result<Option<f64>> {
        self.load_costs(cs, w);
        cs.linearize_into(target, shares, &mut self.sys);
        Ok(match self.solve(cs)? {
            LpOutcome::Optimal { objective, .. } => Some(objective),
            LpOutcome::Infeasible => None,
        })
    }

    /// Lower bound on the access power over every choice of split shares.
    pub(crate) fn relaxed_access_power(
        &mut self,
        cs: &ConstraintSet,
        target: &RateTarget,
        w: &EnergyWeights,
    ) -> Result<Option<f64>> {
        self.load_costs(cs, w);
        cs.linearize_relaxed(target, &mut self.sys);
        Ok(match self.solve(cs)? {
            LpOutcome::Optimal { objective, .. } => Some(objective),
            LpOutcome::Infeasible => None,
        })
    }

    fn full_solution(
        &mut self,
        cs: &ConstraintSet,
        target: &RateTarget,
        shares: &[f64],
        w: &EnergyWeights,
    ) -> Result<PowerSolution> {
        self.load_costs(cs, w);
        cs.linearize_into(target, shares, &mut self.sys);
        let n = cs.num_codewords;
        let (x, objective) = match self.solve(cs)? {
            LpOutcome::Optimal { x, objective } => (x, objective),
            LpOutcome::Infeasible => {
                let mut ps = PowerSolution::infeasible(n);
                ps.shares = shares.to_vec();
                return Ok(ps);
            }
        };
        let mut relay_powers = [0.0; NUM_RELAYS];
        for (u, tx) in cs.tx.iter().enumerate() {
            for j in tx.iter() {
                relay_powers[j] += x[u];
            }
        }
        let binding = (0..self.sys.num_rows())
            .filter(|&k| self.sys.rhs(k) > 0.0 && self.sys.slack(k, &x) <= 1e-7 * self.sys.rhs(k).max(1.0))
            .map(|k| format!("rx{} {}", self.sys.receiver(k) + 1, subset_text(self.sys.subset(k), n)))
            .collect();
        Ok(PowerSolution {
            scheme: None,
            key: None,
            feasible: true,
            codeword_powers: x,
            shares: shares.to_vec(),
            relay_powers,
            access_power: objective,
            bs_power: 0.0,
            energy: 0.0,
            binding,
        })
    }
}

/// Minimal weighted access power `Σ_u (Σ_{j∈tx(u)} μ_j) P_u` for fixed shares.
///
/// The returned solution has `bs_power = 0`; its `energy` is the access
/// power per bit (0 for a zero target).
pub fn min_access_power(
    cs: &ConstraintSet,
    target: &RateTarget,
    shares: &[f64],
    w: &EnergyWeights,
) -> Result<PowerSolution> {
    if shares.len() != cs.num_codewords {
        return Err(Error::Domain(format!("{} shares for {} codewords", shares.len(), cs.num_codewords)));
    }
    let mut ws = LpWorkspace::default();
    let mut ps = ws.full_solution(cs, target, shares, w)?;
    if ps.feasible {
        ps.energy = if target.sum() > 0.0 { total_energy(&ps, target, w)? } else { 0.0 };
    }
    Ok(ps)
}

/// Candidate share vectors: every grid combination for split messages,
/// nominal shares when the search is off or nothing is split.
pub fn share_grid(cs: &ConstraintSet, split: &SplitSearch) -> Result<Vec<Vec<f64>>> {
    let mut parts: [Vec<usize>; NUM_RECEIVERS] = Default::default();
    for (u, &m) in cs.messages.iter().enumerate() {
        parts[m].push(u);
    }
    if !split.search || parts.iter().all(|p| p.len() <= 1) {
        return Ok(vec![cs.shares.clone()]);
    }
    split.validate()?;
    let mut fractions: Vec<f64> = Vec::new();
    let mut k = 0;
    loop {
        let f = k as f64 * split.step;
        if f >= 1.0 - 1e-9 {
            break;
        }
        fractions.push(f);
        k += 1;
    }
    fractions.push(1.0);

    let mut grid = vec![vec![0.0; cs.num_codewords]];
    for p in parts.iter().filter(|p| !p.is_empty()) {
        let options = if p.len() == 1 { vec![vec![1.0]] } else { compositions(&fractions, p.len()) };
        let mut next = Vec::with_capacity(grid.len() * options.len());
        for g in &grid {
            for opt in &options {
                let mut s = g.clone();
                for (&u, &f) in p.iter().zip(opt) {
                    s[u] = f;
                }
                next.push(s);
            }
        }
        grid = next;
    }
    Ok(grid)
}

/// Ways to write 1 as `k` nonnegative parts, the first `k − 1` taken from `fractions`.
fn compositions(fractions: &[f64], k: usize) -> Vec<Vec<f64>> {
    fn rec(fractions: &[f64], k: usize, left: f64, cur: &mut Vec<f64>, out: &mut Vec<Vec<f64>>) {
        if cur.len() + 1 == k {
            cur.push(left.max(0.0));
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for &f in fractions {
            if f > left + 1e-9 {
                break;
            }
            cur.push(f);
            rec(fractions, k, left - f, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(fractions, k, 1.0, &mut Vec::new(), &mut out);
    out
}

/// Best access power over the split share grid.
pub fn min_power_with_splits(
    c: &Cgras,
    ch: &AccessChannel,
    target: &RateTarget,
    w: &EnergyWeights,
    split: &SplitSearch,
) -> Result<PowerSolution> {
    let cs = gen_constraints(c, ch);
    search_shares(&cs, target, w, split)
}

pub(crate) fn search_shares(
    cs: &ConstraintSet,
    target: &RateTarget,
    w: &EnergyWeights,
    split: &SplitSearch,
) -> Result<PowerSolution> {
    let grid = share_grid(cs, split)?;
    let mut ws = LpWorkspace::default();
    let mut best: Option<(f64, usize)> = None;
    if grid.len() > 1 {
        for (i, shares) in grid.iter().enumerate() {
            match ws.access_power(cs, target, shares, w) {
                Ok(Some(p)) if best.is_none_or(|(bp, _)| p < bp) => best = Some((p, i)),
                Ok(_) => {}
                Err(Error::Numerical(e)) => log::debug!("shares {shares:?} skipped: {e}"),
                Err(e) => return Err(e),
            }
        }
    }
    let pick = match best {
        Some((_, i)) => i,
        None if grid.len() > 1 => return Ok(PowerSolution::infeasible(cs.num_codewords)),
        None => 0,
    };
    let mut ps = ws.full_solution(cs, target, &grid[pick], w)?;
    if ps.feasible {
        ps.energy = if target.sum() > 0.0 { total_energy(&ps, target, w)? } else { 0.0 };
    }
    Ok(ps)
}

/// Base station power plus optimized access power, as energy per bit.
///
/// A zero target gives zero powers and zero energy.
pub fn optimize_scheme(
    c: &Cgras,
    ch: &AccessChannel,
    rc: &RelayChannel,
    target: &RateTarget,
    w: &EnergyWeights,
    split: &SplitSearch,
) -> Result<PowerSolution> {
    let cs = gen_constraints(c, ch);
    let mut ps = match bs_power(&c.allocation, target, rc) {
        Ok(bs) => {
            let mut ps = search_shares(&cs, target, w, split)?;
            ps.bs_power = bs;
            ps
        }
        Err(Error::Infeasible(reason)) => {
            log::debug!("{c}: {reason}");
            PowerSolution::infeasible(c.len())
        }
        Err(e) => return Err(e),
    };
    ps.scheme = Some(c.to_string());
    ps.key = Some(c.canonicalize().0);
    ps.energy = if !ps.feasible {
        f64::INFINITY
    } else if target.sum() == 0.0 {
        0.0
    } else {
        total_energy(&ps, target, w)?
    };
    Ok(ps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::symmetric_channel;
    use crate::oracles;

    fn sym(r: f64) -> RateTarget {
        RateTarget::symmetric(r).unwrap()
    }

    #[test]
    fn bs_power_closed_forms() {
        let rc = RelayChannel::new([1.0, 1.0]).unwrap();
        let a = MessageAllocation::from_lists(&[1], &[2, 3]).unwrap();
        assert!((bs_power(&a, &sym(0.5), &rc).unwrap() - 4.0).abs() < 1e-12);
        let c = MessageAllocation::from_lists(&[1, 2], &[2, 3]).unwrap();
        assert!((bs_power(&c, &sym(0.5), &rc).unwrap() - 6.0).abs() < 1e-12);
        let bc = MessageAllocation::from_lists(&[1, 2, 3], &[]).unwrap();
        assert!((bs_power(&bc, &sym(0.5), &rc).unwrap() - 7.0).abs() < 1e-12);
    }

    #[test]
    fn bs_power_dead_link() {
        let rc = RelayChannel::new([0.0, 1.0]).unwrap();
        let a = MessageAllocation::from_lists(&[1], &[2, 3]).unwrap();
        assert!(matches!(bs_power(&a, &sym(0.5), &rc), Err(Error::Infeasible(_))));
        let only2 = MessageAllocation::from_lists(&[], &[1, 2, 3]).unwrap();
        assert!(bs_power(&only2, &sym(0.5), &rc).is_ok());
    }

    #[test]
    fn energy_arithmetic() {
        let mut ps = PowerSolution::infeasible(0);
        ps.feasible = true;
        ps.bs_power = 4.0;
        ps.relay_powers = [1.0, 2.0];
        let t = sym(0.5);
        assert!((total_energy(&ps, &t, &EnergyWeights::default()).unwrap() - 7.0 / 1.5).abs() < 1e-12);
        let w = EnergyWeights::new([2.0, 2.0]).unwrap();
        assert!((total_energy(&ps, &t, &w).unwrap() - 10.0 / 1.5).abs() < 1e-12);
        ps.bs_power = 0.0;
        ps.relay_powers = [0.0, 0.0];
        assert_eq!(total_energy(&ps, &t, &w).unwrap(), 0.0);
        assert!(matches!(total_energy(&ps, &sym(0.0), &w), Err(Error::ZeroRate)));
    }

    #[test]
    fn scheme_a_infeasible_above_threshold() {
        let (ch, _) = symmetric_channel(1.2, 0.9).unwrap();
        let cs = gen_constraints(&oracles::scheme_a(), &ch);
        let ps = min_access_power(&cs, &sym(0.5), &cs.shares, &EnergyWeights::default()).unwrap();
        assert!(!ps.feasible);
        assert_eq!(ps.energy, f64::INFINITY);
    }

    #[test]
    fn zero_target_zero_power() {
        let (ch, rc) = symmetric_channel(0.4, 1.7).unwrap();
        for c in [oracles::scheme_a(), oracles::scheme_d()] {
            let ps = optimize_scheme(&c, &ch, &rc, &sym(0.0), &EnergyWeights::default(), &SplitSearch::default())
                .unwrap();
            assert!(ps.feasible);
            assert!(ps.codeword_powers.iter().all(|&p| p == 0.0));
            assert_eq!(ps.energy, 0.0);
        }
    }

    #[test]
    fn scheme_a_solution_is_tight() {
        let (ch, rc) = symmetric_channel(1.2, 0.5).unwrap();
        let t = sym(0.1);
        let a = oracles::scheme_a();
        let ps = optimize_scheme(&a, &ch, &rc, &t, &EnergyWeights::default(), &SplitSearch::default()).unwrap();
        assert!(ps.feasible);
        assert!(!ps.binding.is_empty());
        let bs = 16f64.powf(0.1) + 4f64.powf(0.1) - 2.0;
        assert!((ps.bs_power - bs).abs() < 1e-12);
        assert!((ps.energy - (bs + ps.codeword_powers.iter().sum::<f64>()) / 0.3).abs() < 1e-9);
        // every oracle bound holds at the optimum
        let p = &ps.codeword_powers;
        for bound in oracles::region_a(1.2, 0.5, p[0], p[1], p[2]) {
            let need = 0.1 * bound.messages.len() as f64;
            assert!(bound.rhs >= need - 1e-9, "{} {} < {need}", bound.label(), bound.rhs);
        }
        let json = ps.to_json().unwrap();
        assert!(json.contains("\"binding\""));
    }

    #[test]
    fn share_grid_shapes() {
        let (ch, _) = symmetric_channel(1.0, 1.0).unwrap();
        let cs = gen_constraints(&oracles::scheme_a(), &ch);
        assert_eq!(share_grid(&cs, &SplitSearch::default()).unwrap().len(), 1);
        assert_eq!(compositions(&[0.0, 0.5, 1.0], 2).len(), 3);
        assert_eq!(compositions(&[0.0, 0.5, 1.0], 3).len(), 6);
        let odd = compositions(&[0.0, 0.3, 0.6, 0.9, 1.0], 2);
        assert_eq!(odd.len(), 5);
        assert!(odd.iter().all(|v| (v.iter().sum::<f64>() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn power_limits_bind() {
        let (ch, rc) = symmetric_channel(1.2, 0.5).unwrap();
        let t = sym(0.1);
        let a = oracles::scheme_a();
        let free = optimize_scheme(&a, &ch, &rc, &t, &EnergyWeights::default(), &SplitSearch::fixed()).unwrap();
        let limited = ch.clone().with_power_limits([free.relay_powers[0] * 0.5, 100.0]).unwrap();
        let ps = optimize_scheme(&a, &limited, &rc, &t, &EnergyWeights::default(), &SplitSearch::fixed()).unwrap();
        assert!(!ps.feasible);
        let roomy = ch.with_power_limits([10.0, 10.0]).unwrap();
        let ps = optimize_scheme(&a, &roomy, &rc, &t, &EnergyWeights::default(), &SplitSearch::fixed()).unwrap();
        assert!((ps.energy - free.energy).abs() < 1e-12);
    }
}
