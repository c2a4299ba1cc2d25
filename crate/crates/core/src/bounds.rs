//! Relay-link capacity check, the access-link outer bound and the energy
//! lower bound built from them.
//!
//! The outer bound is stated in terms of an amplitude matrix `A` (relay ×
//! message). For a set `S` of messages it requires
//! `Σ_{z∈S} R_z ≤ ½ log₂ det(I + M Mᵀ)` with `M = H_S A_S`, where `H_S` keeps
//! the receiver rows in `S` and `A_S` the message columns in `S`.
//!
//! The lower bound minimizes base station power plus weighted relay power
//! over allocations and amplitude matrices. For a fixed direction of `A`
//! every bound grows with the scale, so the minimal power along a direction
//! is a root-finding problem; directions are searched by random sampling
//! followed by a Nelder–Mead polish.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cgras::{enumerate_allocations, MessageAllocation};
use crate::channel::{cap_mimo, capacity, AccessChannel, RateTarget, RelayChannel};
use crate::error::{Error, Result};
use crate::optimizer::{bs_power, EnergyWeights};
use crate::{Matrix, NUM_RECEIVERS, NUM_RELAYS};

const RATE_TOL: f64 = 1e-12;

/// Message sets of the seven outer-bound inequalities.
const SUBSETS: [&[usize]; 7] = [&[0], &[1], &[2], &[0, 1], &[0, 2], &[1, 2], &[0, 1, 2]];

/// Amplitude each relay devotes to each message.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeMatrix {
    pub amp: [[f64; NUM_RECEIVERS]; NUM_RELAYS],
}

impl AmplitudeMatrix {
    pub fn new(amp: [[f64; NUM_RECEIVERS]; NUM_RELAYS]) -> Self {
        AmplitudeMatrix { amp }
    }

    pub fn zeros() -> Self {
        AmplitudeMatrix { amp: [[0.0; NUM_RECEIVERS]; NUM_RELAYS] }
    }

    pub fn relay_power(&self, relay: usize) -> f64 {
        self.amp[relay].iter().map(|a| a * a).sum()
    }

    /// True when relays only carry messages they know.
    pub fn respects(&self, alloc: &MessageAllocation) -> bool {
        (0..NUM_RELAYS)
            .all(|j| (0..NUM_RECEIVERS).all(|z| alloc.messages(j).contains(z) || self.amp[j][z] == 0.0))
    }

    pub fn scaled(&self, t: f64) -> Self {
        let mut out = *self;
        for row in out.amp.iter_mut() {
            for v in row.iter_mut() {
                *v *= t;
            }
        }
        out
    }

    /// `H_S A_S` for the message set `s`.
    fn effective(&self, ch: &AccessChannel, s: &[usize]) -> Matrix {
        let mut m = Matrix::zeros(s.len(), s.len());
        for (r, &z) in s.iter().enumerate() {
            for (c, &w) in s.iter().enumerate() {
                m[(r, c)] = (0..NUM_RELAYS).map(|j| ch.gain(z, j) * self.amp[j][w]).sum();
            }
        }
        m
    }
}

/// Right-hand sides of the seven outer-bound inequalities, in the order
/// `{1} {2} {3} {1,2} {1,3} {2,3} {1,2,3}`.
pub fn outer_bound_rhs(a: &AmplitudeMatrix, ch: &AccessChannel) -> Result<[f64; 7]> {
    let mut out = [0.0; 7];
    for (k, s) in SUBSETS.iter().enumerate() {
        out[k] = cap_mimo(&a.effective(ch, s))?;
    }
    Ok(out)
}

/// True iff every outer-bound inequality holds for `target`.
pub fn outer_bound_holds(a: &AmplitudeMatrix, ch: &AccessChannel, target: &RateTarget) -> bool {
    let Ok(rhs) = outer_bound_rhs(a, ch) else {
        return false;
    };
    SUBSETS.iter().zip(rhs).all(|(s, c)| {
        let rate: f64 = s.iter().map(|&z| target.rate(z)).sum();
        rate <= c + RATE_TOL
    })
}

/// Both relay-link inequalities for a given split of the base station power.
pub fn relay_rates_feasible(
    alloc: &MessageAllocation,
    target: &RateTarget,
    rc: &RelayChannel,
    bs_split: [f64; NUM_RELAYS],
) -> bool {
    (0..NUM_RELAYS).all(|j| {
        let rate: f64 = alloc.messages(j).iter().map(|z| target.rate(z)).sum();
        let d = rc.gain(j);
        rate <= capacity(d * d * bs_split[j].max(0.0)) + RATE_TOL
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundConfig {
    /// Random directions per allocation.
    pub samples: usize,
    pub seed: u64,
    /// Relative tolerance of the root bracketing used while screening samples.
    pub bisect_tol: f64,
    pub weights: EnergyWeights,
}

impl Default for BoundConfig {
    fn default() -> Self {
        BoundConfig { samples: 2000, seed: 1, bisect_tol: 1e-3, weights: EnergyWeights::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LowerBound {
    /// Energy per bit; infinite when no amplitude choice meets the outer bound.
    pub energy: f64,
    pub bs_power: f64,
    /// Weighted relay power of the best amplitude matrix found.
    pub relay_power: f64,
    pub allocation: Option<MessageAllocation>,
    pub amplitudes: Option<AmplitudeMatrix>,
    /// Random directions tried per allocation. The search can only miss
    /// better matrices, so the reported energy is an estimate from above of
    /// the exact bound.
    pub samples: usize,
}

/// Coefficients of `det(I + s G)` for `G = M Mᵀ`, `M = H_S A_S`.
fn det_poly(gains: &[[f64; NUM_RELAYS]; NUM_RECEIVERS], amp: &[[f64; NUM_RECEIVERS]; NUM_RELAYS], s: &[usize]) -> [f64; 3] {
    let k = s.len();
    let mut m = [[0.0; 3]; 3];
    for (r, &z) in s.iter().enumerate() {
        for (c, &w) in s.iter().enumerate() {
            m[r][c] = gains[z][0] * amp[0][w] + gains[z][1] * amp[1][w];
        }
    }
    let mut g = [[0.0; 3]; 3];
    for r in 0..k {
        for c in 0..k {
            g[r][c] = (0..k).map(|i| m[r][i] * m[c][i]).sum();
        }
    }
    let trace: f64 = (0..k).map(|i| g[i][i]).sum();
    let mut minors = 0.0;
    for i in 0..k {
        for j in i + 1..k {
            minors += g[i][i] * g[j][j] - g[i][j] * g[j][i];
        }
    }
    let det = if k == 3 {
        g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1]) - g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0])
            + g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0])
    } else {
        0.0
    };
    [trace.max(0.0), minors.max(0.0), det.max(0.0)]
}

/// Smallest `s ≥ 0` with `1 + c₁s + c₂s² + c₃s³ ≥ level`, to relative tolerance `tol`.
fn poly_root(c: [f64; 3], level: f64, tol: f64) -> Result<f64> {
    if level <= 1.0 {
        return Ok(0.0);
    }
    if c.iter().all(|&x| x == 0.0) {
        return Ok(f64::INFINITY);
    }
    if c.iter().any(|x| !x.is_finite()) || !level.is_finite() {
        return Err(Error::Bisection(format!("non-finite polynomial {c:?} or level {level}")));
    }
    let p = |s: f64| 1.0 + s * (c[0] + s * (c[1] + s * c[2]));
    let (mut lo, mut hi) = (0.0, 1.0);
    while p(hi) < level {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return Ok(f64::INFINITY);
        }
    }
    for _ in 0..200 {
        if hi - lo <= tol * hi {
            return Ok(hi);
        }
        let mid = 0.5 * (lo + hi);
        if p(mid) >= level {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Err(Error::Bisection(format!("no convergence after 200 halvings, bracket [{lo}, {hi}]")))
}

/// Search state for one allocation.
struct DirectionSearch<'a> {
    ch: &'a AccessChannel,
    levels: [f64; 7],
    free: Vec<(usize, usize)>,
    weights: [f64; NUM_RELAYS],
}

impl DirectionSearch<'_> {
    fn amplitudes(&self, v: &[f64]) -> Option<[[f64; NUM_RECEIVERS]; NUM_RELAYS]> {
        let norm: f64 = self.free.iter().zip(v).map(|(&(j, _), x)| self.weights[j] * x * x).sum();
        if !(norm > 0.0 && norm.is_finite()) {
            return None;
        }
        let scale = norm.sqrt().recip();
        let mut amp = [[0.0; NUM_RECEIVERS]; NUM_RELAYS];
        for (&(j, z), x) in self.free.iter().zip(v) {
            amp[j][z] = x * scale;
        }
        Some(amp)
    }

    /// Minimal weighted relay power along direction `v`.
    fn power(&self, v: &[f64], tol: f64) -> Result<f64> {
        let Some(amp) = self.amplitudes(v) else {
            return Ok(f64::INFINITY);
        };
        let mut need = 0.0f64;
        for (k, s) in SUBSETS.iter().enumerate() {
            if self.levels[k] <= 1.0 {
                continue;
            }
            let root = poly_root(det_poly(self.ch.gains(), &amp, s), self.levels[k], tol)?;
            need = need.max(root);
            if need.is_infinite() {
                break;
            }
        }
        Ok(need)
    }
}

/// Lower bound on the energy per bit, minimized over all allocations.
pub fn energy_lower_bound(
    ch: &AccessChannel,
    rc: &RelayChannel,
    target: &RateTarget,
    cfg: &BoundConfig,
) -> Result<LowerBound> {
    if cfg.weights.relay.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
        return Err(Error::Config("the lower bound needs strictly positive relay weights".into()));
    }
    if !(cfg.bisect_tol > 0.0 && cfg.bisect_tol < 1.0) {
        return Err(Error::Config(format!("bisect_tol must lie in (0, 1), got {}", cfg.bisect_tol)));
    }
    let sum = target.sum();
    if sum == 0.0 {
        return Ok(LowerBound {
            energy: 0.0,
            bs_power: 0.0,
            relay_power: 0.0,
            allocation: None,
            amplitudes: Some(AmplitudeMatrix::zeros()),
            samples: 0,
        });
    }

    let allocs = enumerate_allocations();
    let task = |(idx, alloc): (usize, &MessageAllocation)| -> Result<Option<(f64, f64, AmplitudeMatrix)>> {
        let bs = match bs_power(alloc, target, rc) {
            Ok(bs) => bs,
            Err(Error::Infeasible(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(idx as u64);
        Ok(search_allocation(ch, alloc, target, cfg, &mut rng)?.map(|(p, a)| (bs, p, a)))
    };

    #[cfg(feature = "parallel")]
    let results: Vec<_> = {
        use rayon::prelude::*;
        allocs.par_iter().enumerate().map(task).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<_> = allocs.iter().enumerate().map(task).collect();

    let mut best = LowerBound {
        energy: f64::INFINITY,
        bs_power: 0.0,
        relay_power: f64::INFINITY,
        allocation: None,
        amplitudes: None,
        samples: cfg.samples,
    };
    for (alloc, r) in allocs.iter().zip(results) {
        if let Some((bs, p, a)) = r? {
            let e = (bs + p) / sum;
            if e < best.energy {
                best = LowerBound {
                    energy: e,
                    bs_power: bs,
                    relay_power: p,
                    allocation: Some(*alloc),
                    amplitudes: Some(a),
                    samples: cfg.samples,
                };
            }
        }
    }
    Ok(best)
}

fn search_allocation(
    ch: &AccessChannel,
    alloc: &MessageAllocation,
    target: &RateTarget,
    cfg: &BoundConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Option<(f64, AmplitudeMatrix)>> {
    let free: Vec<(usize, usize)> = (0..NUM_RELAYS)
        .flat_map(|j| alloc.messages(j).iter().map(move |z| (j, z)))
        .collect();
    let mut levels = [0.0; 7];
    for (k, s) in SUBSETS.iter().enumerate() {
        let rate: f64 = s.iter().map(|&z| target.rate(z)).sum();
        levels[k] = 4f64.powf(rate);
    }
    let search = DirectionSearch { ch, levels, free, weights: cfg.weights.relay };
    let dim = search.free.len();

    // deterministic seeds: equal amplitudes, and each relay alone
    let mut starts: Vec<Vec<f64>> = vec![vec![1.0; dim]];
    for j in 0..NUM_RELAYS {
        starts.push(search.free.iter().map(|&(r, _)| if r == j { 1.0 } else { 0.0 }).collect());
    }
    for _ in 0..cfg.samples {
        starts.push((0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect());
    }

    let mut scored: Vec<(f64, usize)> = Vec::with_capacity(starts.len());
    for (i, v) in starts.iter().enumerate() {
        scored.push((search.power(v, cfg.bisect_tol)?, i));
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut best: Option<(f64, Vec<f64>)> = None;
    for &(p, i) in scored.iter().take(3) {
        if !p.is_finite() {
            break;
        }
        let mut err = None;
        let f = |v: &[f64]| match search.power(v, 1e-12) {
            Ok(p) => p,
            Err(e) => {
                err.get_or_insert(e);
                f64::INFINITY
            }
        };
        let (v, p) = nelder_mead(f, &starts[i], 0.2, 300 * dim.max(1), 1e-13);
        if let Some(e) = err {
            return Err(e);
        }
        if best.as_ref().is_none_or(|(bp, _)| p < *bp) {
            best = Some((p, v));
        }
    }
    Ok(best.and_then(|(p, v)| {
        let amp = search.amplitudes(&v)?;
        Some((p, AmplitudeMatrix::new(amp).scaled(p.sqrt())))
    }))
}

/// Derivative-free minimization from `x0`.
fn nelder_mead<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], step: f64, max_iter: usize, ftol: f64) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = f(x0);
    simplex.push((x0.to_vec(), f0));
    let scale = x0.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step * scale;
        let fx = f(&x);
        simplex.push((x, fx));
    }
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (lo, hi) = (simplex[0].1, simplex[n].1);
        if hi.is_finite() && (hi - lo).abs() <= ftol * lo.abs().max(1e-300) {
            break;
        }
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / n as f64;
            }
        }
        let along = |t: f64, worst: &[f64]| -> Vec<f64> {
            centroid.iter().zip(worst).map(|(c, w)| c + t * (c - w)).collect()
        };
        let worst = simplex[n].0.clone();
        let xr = along(1.0, &worst);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = along(2.0, &worst);
            let fe = f(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let xc = along(-0.5, &worst);
            let fc = f(&xc);
            if fc < simplex[n].1 {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for (x, fx) in simplex.iter_mut().skip(1) {
                    for (v, b) in x.iter_mut().zip(&best) {
                        *v = b + 0.5 * (*v - b);
                    }
                    *fx = f(x);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::symmetric_channel;

    #[test]
    fn zero_everything_holds() {
        let (ch, _) = symmetric_channel(1.0, 1.0).unwrap();
        assert!(outer_bound_holds(&AmplitudeMatrix::zeros(), &ch, &RateTarget::symmetric(0.0).unwrap()));
    }

    #[test]
    fn single_rate_line() {
        let (ch, _) = symmetric_channel(0.6, 0.3).unwrap();
        let a = AmplitudeMatrix::new([[0.7, 0.2, 0.0], [0.4, 0.9, 1.1]]);
        let rhs = outer_bound_rhs(&a, &ch).unwrap();
        let amp: f64 = 1.0 * 0.7 + 0.3 * 0.4;
        assert!((rhs[0] - 0.5 * (1.0 + amp * amp).log2()).abs() < 1e-12);
    }

    #[test]
    fn separated_users_at_capacity() {
        let (ch, _) = symmetric_channel(1.0, 1.0).unwrap();
        let p: f64 = 2.0;
        let a = AmplitudeMatrix::new([[p.sqrt(), 0.0, 0.0], [0.0, 0.0, p.sqrt()]]);
        let c = 0.5 * (1.0 + p).log2();
        assert!(outer_bound_holds(&a, &ch, &RateTarget::new([c, 0.0, c]).unwrap()));
        let eps = 1.0 + 1e-6;
        assert!(!outer_bound_holds(&a, &ch, &RateTarget::new([c * eps, 0.0, c * eps]).unwrap()));
    }

    #[test]
    fn relay_link_checks() {
        let rc = RelayChannel::new([1.0, 1.0]).unwrap();
        let t = RateTarget::symmetric(0.5).unwrap();
        let a = MessageAllocation::from_lists(&[1], &[2, 3]).unwrap();
        assert!(relay_rates_feasible(&a, &t, &rc, [1.0, 3.0]));
        assert!(!relay_rates_feasible(&a, &t, &rc, [1.0, 2.9]));
        let bc = MessageAllocation::from_lists(&[1, 2, 3], &[]).unwrap();
        assert!(!relay_rates_feasible(&bc, &t, &rc, [6.0, 0.0]));
        assert!(relay_rates_feasible(&bc, &t, &rc, [7.0, 0.0]));
        assert!(relay_rates_feasible(&bc, &RateTarget::symmetric(0.0).unwrap(), &rc, [0.0, 0.0]));
    }

    #[test]
    fn poly_matches_mimo_capacity() {
        let (ch, _) = symmetric_channel(0.8, 1.3).unwrap();
        let a = AmplitudeMatrix::new([[0.3, -0.5, 1.2], [0.9, 0.4, 0.0]]);
        let rhs = outer_bound_rhs(&a, &ch).unwrap();
        for (k, s) in SUBSETS.iter().enumerate() {
            let c = det_poly(ch.gains(), &a.amp, s);
            let det = 1.0 + c[0] + c[1] + c[2];
            assert!((0.5 * det.log2() - rhs[k]).abs() < 1e-12, "subset {s:?}");
        }
    }

    #[test]
    fn root_finding() {
        // 1 + 2s ≥ 5 ⇒ s = 2
        assert!((poly_root([2.0, 0.0, 0.0], 5.0, 1e-12).unwrap() - 2.0).abs() < 1e-10);
        assert_eq!(poly_root([0.0; 3], 5.0, 1e-12).unwrap(), f64::INFINITY);
        assert_eq!(poly_root([1.0, 0.0, 0.0], 1.0, 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn nelder_mead_quadratic() {
        let (x, fx) = nelder_mead(|v| (v[0] - 1.0).powi(2) + 3.0 * (v[1] + 2.0).powi(2), &[0.0, 0.0], 0.5, 2000, 1e-16);
        assert!(fx < 1e-10);
        assert!((x[0] - 1.0).abs() < 1e-4 && (x[1] + 2.0).abs() < 1e-4);
    }

    #[test]
    fn lower_bound_basics() {
        let (ch, rc) = symmetric_channel(0.7, 0.4).unwrap();
        let cfg = BoundConfig { samples: 200, ..Default::default() };
        let zero = energy_lower_bound(&ch, &rc, &RateTarget::symmetric(0.0).unwrap(), &cfg).unwrap();
        assert_eq!(zero.energy, 0.0);
        let t = RateTarget::symmetric(0.5).unwrap();
        let lb = energy_lower_bound(&ch, &rc, &t, &cfg).unwrap();
        assert!(lb.energy.is_finite() && lb.energy > 0.0);
        let a = lb.amplitudes.unwrap();
        assert!(a.respects(&lb.allocation.unwrap()));
        // the reported matrix meets the outer bound at (almost) the reported power
        assert!(outer_bound_holds(&a.scaled(1.0 + 1e-9), &ch, &t));
        let again = energy_lower_bound(&ch, &rc, &t, &cfg).unwrap();
        assert_eq!(lb, again);
        let bad = BoundConfig { weights: EnergyWeights { relay: [0.0, 1.0] }, ..cfg };
        assert!(energy_lower_bound(&ch, &rc, &t, &bad).is_err());
    }
}
