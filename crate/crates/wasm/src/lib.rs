//! Browser bindings for the relaynet demo page.
//!
//! Every export returns a JSON string; errors are thrown as JS strings.

use std::cell::OnceCell;

use relaynet::bounds::{energy_lower_bound, BoundConfig};
use relaynet::channel::{symmetric_channel, RateTarget};
use relaynet::optimizer::{optimize_scheme, PowerSolution};
use relaynet::sweep::{run_sweep_with, Grid, SchemeLibrary, SweepOptions, Sweeper};
use serde::Serialize;
use wasm_bindgen::prelude::*;

thread_local! {
    static PLAIN: OnceCell<SchemeLibrary> = const { OnceCell::new() };
    static SPLIT: OnceCell<SchemeLibrary> = const { OnceCell::new() };
}

fn with_library<T>(split: bool, f: impl FnOnce(&SchemeLibrary) -> T) -> T {
    let slot = if split { &SPLIT } else { &PLAIN };
    slot.with(|cell| f(cell.get_or_init(|| SchemeLibrary::new(split))))
}

fn options(split: bool) -> SweepOptions {
    SweepOptions { split, ..Default::default() }
}

fn to_js<E: std::fmt::Display>(e: E) -> JsError {
    JsError::new(&e.to_string())
}

/// Winning scheme over a `points × points` grid on `[0, 2]²`.
pub fn phase_map_json(rate: f64, points: usize, split: bool) -> relaynet::Result<String> {
    let grid = Grid::square(0.0, 2.0, points)?;
    let pm = with_library(split, |lib| run_sweep_with(lib, &grid, rate, &options(split)))?;
    pm.to_json()
}

/// Best scheme and its powers at one channel.
pub fn optimize_point_json(a: f64, b: f64, rate: f64, split: bool) -> relaynet::Result<String> {
    let opts = options(split);
    let cell = with_library(split, |lib| Sweeper::new(lib, rate, opts)?.evaluate_cell(a, b))?;
    let ps = match &cell.winner {
        Some(key) => {
            let (ch, rc) = symmetric_channel(a, b)?;
            let target = RateTarget::symmetric(rate)?;
            let split_search = relaynet::optimizer::SplitSearch { step: opts.split_step, search: split };
            optimize_scheme(&key.parse()?, &ch, &rc, &target, &opts.weights, &split_search)?
        }
        None => PowerSolution::infeasible(0),
    };
    #[derive(Serialize)]
    struct Point {
        a: f64,
        b: f64,
        rate: f64,
        margin: f64,
        runner_up: Option<String>,
        solution: PowerSolution,
    }
    let out = Point { a, b, rate, margin: cell.margin, runner_up: cell.runner_up.map(|c| c.key), solution: ps };
    Ok(serde_json::to_string(&out)?)
}

#[derive(Serialize)]
struct CurvePoint {
    rate: f64,
    lower: f64,
    best: f64,
}

/// Best no-split energy against the lower bound for each rate.
pub fn energy_curve_json(a: f64, b: f64, rates: &[f64], samples: usize) -> relaynet::Result<String> {
    let (ch, rc) = symmetric_channel(a, b)?;
    let cfg = BoundConfig { samples, ..Default::default() };
    let mut out = Vec::with_capacity(rates.len());
    for &rate in rates {
        let cell = with_library(false, |lib| Sweeper::new(lib, rate, options(false))?.evaluate_cell(a, b))?;
        let lower = energy_lower_bound(&ch, &rc, &RateTarget::symmetric(rate)?, &cfg)?;
        out.push(CurvePoint { rate, lower: lower.energy, best: cell.min_energy });
    }
    Ok(serde_json::to_string(&out)?)
}

#[wasm_bindgen]
pub fn phase_map(rate: f64, points: usize, split: bool) -> Result<String, JsError> {
    phase_map_json(rate, points, split).map_err(to_js)
}

#[wasm_bindgen]
pub fn optimize_point(a: f64, b: f64, rate: f64, split: bool) -> Result<String, JsError> {
    optimize_point_json(a, b, rate, split).map_err(to_js)
}

#[wasm_bindgen]
pub fn energy_curve(a: f64, b: f64, rates: Vec<f64>, samples: usize) -> Result<String, JsError> {
    energy_curve_json(a, b, &rates, samples).map_err(to_js)
}
