//! Sweeps over the symmetric channel parameters `(a, b)`.
//!
//! Every cell runs a competition between all enumerated schemes (mirror
//! duplicates removed). Schemes are visited in order of their base station
//! power, which is a lower bound on their energy, and the visit stops once
//! no remaining scheme can be the winner, the runner-up, or fall inside the
//! tie tolerance. Split schemes get a second, share-independent lower bound
//! from a relaxed LP before their share grid is searched.
//!
//! After all cells are scored, ties (schemes within the tolerance of the
//! best) are resolved in row-major order by majority vote of the already
//! decided cells in the 8-neighbourhood, then by the lowest scheme key.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bounds::{energy_lower_bound, BoundConfig};
use crate::cgras::{enumerate_all, Cgras, CooperationLevel, EnumOptions, SchemeKey};
use crate::channel::{symmetric_channel, RateTarget, RelayChannel};
use crate::error::{Error, Result};
use crate::optimizer::{bs_power, share_grid, EnergyWeights, LpWorkspace, SplitSearch};
use crate::region::gen_constraints;

/// Evenly spaced values `min, …, max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, points: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min >= 0.0 && max >= min) {
            return Err(Error::Config(format!("axis range [{min}, {max}] must be finite, nonnegative and ordered")));
        }
        if points == 1 && max != min {
            return Err(Error::Config("a single-point axis needs min == max".into()));
        }
        Ok(Axis { min, max, points })
    }

    pub fn values(&self) -> Vec<f64> {
        match self.points {
            0 => vec![],
            1 => vec![self.min],
            n => {
                let step = (self.max - self.min) / (n - 1) as f64;
                (0..n).map(|i| round12(self.min + i as f64 * step)).collect()
            }
        }
    }
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

/// Rectangular `(a, b)` grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub a: Axis,
    pub b: Axis,
}

impl Grid {
    pub fn new(a: Axis, b: Axis) -> Self {
        Grid { a, b }
    }

    /// The same axis for `a` and `b`.
    pub fn square(min: f64, max: f64, points: usize) -> Result<Self> {
        let axis = Axis::new(min, max, points)?;
        Ok(Grid { a: axis, b: axis })
    }

    /// Parse `min:max:points` (both axes) or `points` (over `[0, 2]`).
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = || Error::Config(format!("grid `{spec}` is not `points` or `min:max:points`"));
        let parts: Vec<&str> = spec.split(':').collect();
        match parts.as_slice() {
            [n] => Grid::square(0.0, 2.0, n.trim().parse().map_err(|_| bad())?),
            [lo, hi, n] => Grid::square(
                lo.trim().parse().map_err(|_| bad())?,
                hi.trim().parse().map_err(|_| bad())?,
                n.trim().parse().map_err(|_| bad())?,
            ),
            _ => Err(bad()),
        }
    }

    pub fn len(&self) -> usize {
        self.a.points * self.b.points
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cells in row-major order: `a` outer, `b` inner.
    pub fn cells(&self) -> Vec<(f64, f64)> {
        let bs = self.b.values();
        self.a.values().into_iter().flat_map(|a| bs.iter().map(move |&b| (a, b))).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    NoSplit,
    Split,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::NoSplit => "no-split",
            Mode::Split => "split",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepOptions {
    pub split: bool,
    pub split_step: f64,
    /// Relative tolerance for considering two schemes tied.
    pub tie_tol: f64,
    pub weights: EnergyWeights,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { split: false, split_step: 0.05, tie_tol: 0.05, weights: EnergyWeights::default() }
    }
}

impl SweepOptions {
    pub fn mode(&self) -> Mode {
        if self.split {
            Mode::Split
        } else {
            Mode::NoSplit
        }
    }

    fn split_search(&self) -> SplitSearch {
        SplitSearch { step: self.split_step, search: self.split }
    }
}

/// Rate-independent list of competing schemes.
pub struct SchemeLibrary {
    pub schemes: Vec<Cgras>,
    pub keys: Vec<SchemeKey>,
    split: bool,
}

impl SchemeLibrary {
    /// Schemes used by sweeps: maximal superposition orders, mirror duplicates removed.
    pub fn new(split: bool) -> Self {
        let schemes = enumerate_all(&EnumOptions::for_sweep(split), true);
        let keys = schemes.iter().map(Cgras::canonicalize).collect();
        SchemeLibrary { schemes, keys, split }
    }

    pub fn len(&self) -> usize {
        self.schemes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.schemes.is_empty()
    }
}

/// One scheme's score in a cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub key: String,
    pub energy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cell {
    pub a: f64,
    pub b: f64,
    /// Chosen scheme, `None` when no scheme is feasible.
    pub winner: Option<String>,
    /// Energy per bit of the chosen scheme.
    pub energy: f64,
    /// Lowest energy per bit over all schemes.
    pub min_energy: f64,
    /// Lowest total power `P^BS + Σ μ_j P^RN_j`.
    pub power: f64,
    /// `(E₂ − E₁)/E₁` between the two lowest energies.
    pub margin: f64,
    /// Schemes within the tie tolerance, lowest energy first.
    pub candidates: Vec<Candidate>,
    pub runner_up: Option<Candidate>,
    /// Schemes actually optimized (the rest were pruned).
    pub evaluated: usize,
    /// Solver failures, reported per scheme.
    pub errors: Vec<String>,
}

impl Cell {
    pub fn is_feasible(&self) -> bool {
        self.winner.is_some()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LegendEntry {
    pub id: String,
    pub key: String,
    pub cooperation: Option<CooperationLevel>,
    pub cells: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseMap {
    pub grid: Grid,
    pub rate: f64,
    pub mode: Mode,
    pub options: SweepOptions,
    pub cells: Vec<Cell>,
}

/// Scores schemes at one rate.
pub struct Sweeper<'a> {
    lib: &'a SchemeLibrary,
    opts: SweepOptions,
    target: RateTarget,
    rc: RelayChannel,
    bs: Vec<f64>,
    order: Vec<usize>,
}

impl<'a> Sweeper<'a> {
    pub fn new(lib: &'a SchemeLibrary, rate: f64, opts: SweepOptions) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::Config(format!("sweep rate must be positive, got {rate}")));
        }
        if opts.split && !lib.split {
            return Err(Error::Config("split sweep needs a library enumerated with splitting".into()));
        }
        if opts.split {
            opts.split_search().validate()?;
        }
        if !(opts.tie_tol >= 0.0 && opts.tie_tol.is_finite()) {
            return Err(Error::Config(format!("tie tolerance must be nonnegative, got {}", opts.tie_tol)));
        }
        let target = RateTarget::symmetric(rate)?;
        let (_, rc) = symmetric_channel(0.0, 0.0)?;
        let bs: Vec<f64> = lib
            .schemes
            .iter()
            .map(|c| bs_power(&c.allocation, &target, &rc).unwrap_or(f64::INFINITY))
            .collect();
        let mut order: Vec<usize> = (0..lib.len()).collect();
        order.sort_by(|&i, &j| bs[i].total_cmp(&bs[j]).then(i.cmp(&j)));
        Ok(Sweeper { lib, opts, target, rc, bs, order })
    }

    pub fn target(&self) -> &RateTarget {
        &self.target
    }

    pub fn relay_channel(&self) -> &RelayChannel {
        &self.rc
    }

    /// Score every scheme that can matter at `(a, b)`. The winner field is the
    /// best scheme; tie resolution across cells happens in [`run_sweep`].
    pub fn evaluate_cell(&self, a: f64, b: f64) -> Result<Cell> {
        let (ch, _) = symmetric_channel(a, b)?;
        let sum = self.target.sum();
        let split = self.opts.split_search();
        let tol = self.opts.tie_tol;
        let mut ws = LpWorkspace::default();
        let mut scored: Vec<(f64, usize)> = Vec::new();
        let mut errors = Vec::new();
        let (mut e1, mut e2) = (f64::INFINITY, f64::INFINITY);
        let cutoff = |e1: f64, e2: f64| if e1.is_finite() { e2.max((1.0 + tol) * e1) } else { f64::INFINITY };

        for &i in &self.order {
            let bs = self.bs[i];
            if !bs.is_finite() {
                break;
            }
            let limit = cutoff(e1, e2);
            if bs / sum > limit {
                break;
            }
            let c = &self.lib.schemes[i];
            let cs = gen_constraints(c, &ch);
            let grid = match share_grid(&cs, &split) {
                Ok(g) => g,
                Err(e) => {
                    errors.push(format!("{}: {e}", self.lib.keys[i]));
                    continue;
                }
            };
            let mut skipped = 0;
            let outcome: Result<Option<f64>> = (|| {
                if grid.len() > 1 {
                    match ws.relaxed_access_power(&cs, &self.target, &self.opts.weights) {
                        Ok(None) => return Ok(None),
                        Ok(Some(p)) if (bs + p) / sum > limit => return Ok(None),
                        Ok(Some(_)) | Err(Error::Numerical(_)) => {}
                        Err(e) => return Err(e),
                    }
                }
                let mut best: Option<f64> = None;
                for shares in &grid {
                    match ws.access_power(&cs, &self.target, shares, &self.opts.weights) {
                        Ok(Some(p)) if best.is_none_or(|bp| p < bp) => best = Some(p),
                        Ok(_) => {}
                        Err(Error::Numerical(_)) if grid.len() > 1 => skipped += 1,
                        Err(e) => return Err(e),
                    }
                }
                Ok(best)
            })();
            if skipped > 0 {
                errors.push(format!("{}: {skipped} share points numerically unreliable", self.lib.keys[i]));
            }
            match outcome {
                Ok(Some(p)) => {
                    let e = (bs + p) / sum;
                    scored.push((e, i));
                    if e < e1 {
                        e2 = e1;
                        e1 = e;
                    } else if e < e2 {
                        e2 = e;
                    }
                }
                Ok(None) => {}
                Err(e) => errors.push(format!("{}: {e}", self.lib.keys[i])),
            }
        }
        let evaluated = scored.len();
        scored.sort_by(|x, y| x.0.total_cmp(&y.0).then_with(|| self.lib.keys[x.1].cmp(&self.lib.keys[y.1])));
        let candidates: Vec<Candidate> = scored
            .iter()
            .take_while(|(e, _)| *e <= (1.0 + tol) * e1)
            .map(|&(e, i)| Candidate { key: self.lib.keys[i].0.clone(), energy: e })
            .collect();
        let runner_up = scored.get(1).map(|&(e, i)| Candidate { key: self.lib.keys[i].0.clone(), energy: e });
        let margin = match (scored.first(), scored.get(1)) {
            (Some(&(a, _)), Some(&(b, _))) if a > 0.0 => (b - a) / a,
            (Some(_), None) => f64::INFINITY,
            _ => f64::NAN,
        };
        Ok(Cell {
            a,
            b,
            winner: candidates.first().map(|c| c.key.clone()),
            energy: e1,
            min_energy: e1,
            power: e1 * sum,
            margin,
            candidates,
            runner_up,
            evaluated,
            errors,
        })
    }
}

/// Pick among the schemes within `(1 + tol)` of the best: most votes among
/// decided neighbours, then lowest key.
pub fn tie_break(candidates: &[Candidate], neighbor_winners: &[&str], tol: f64) -> Option<String> {
    let best = candidates.iter().map(|c| c.energy).fold(f64::INFINITY, f64::min);
    let mut pool: Vec<&Candidate> = candidates.iter().filter(|c| c.energy <= (1.0 + tol) * best).collect();
    pool.sort_by(|x, y| x.key.cmp(&y.key));
    let votes = |k: &str| neighbor_winners.iter().filter(|w| **w == k).count();
    let mut pick: Option<(&Candidate, usize)> = None;
    for c in pool {
        let v = votes(&c.key);
        if pick.is_none_or(|(_, pv)| v > pv) {
            pick = Some((c, v));
        }
    }
    pick.map(|(c, _)| c.key.clone())
}

/// Score every cell and resolve ties.
pub fn run_sweep(grid: &Grid, rate: f64, opts: &SweepOptions) -> Result<PhaseMap> {
    let lib = SchemeLibrary::new(opts.split);
    run_sweep_with(&lib, grid, rate, opts)
}

/// As [`run_sweep`], reusing an enumerated library.
pub fn run_sweep_with(lib: &SchemeLibrary, grid: &Grid, rate: f64, opts: &SweepOptions) -> Result<PhaseMap> {
    let sweeper = Sweeper::new(lib, rate, *opts)?;
    let points = grid.cells();
    let eval = |&(a, b): &(f64, f64)| -> Cell {
        sweeper.evaluate_cell(a, b).unwrap_or_else(|e| Cell {
            a,
            b,
            winner: None,
            energy: f64::INFINITY,
            min_energy: f64::INFINITY,
            power: f64::INFINITY,
            margin: f64::NAN,
            candidates: vec![],
            runner_up: None,
            evaluated: 0,
            errors: vec![e.to_string()],
        })
    };
    #[cfg(feature = "parallel")]
    let mut cells: Vec<Cell> = {
        use rayon::prelude::*;
        points.par_iter().map(eval).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let mut cells: Vec<Cell> = points.iter().map(eval).collect();

    resolve_ties(&mut cells, grid.b.points, opts.tie_tol);
    Ok(PhaseMap { grid: *grid, rate, mode: opts.mode(), options: *opts, cells })
}

/// Sequential neighbour pass over cells stored `a`-major with `cols` values of `b`.
fn resolve_ties(cells: &mut [Cell], cols: usize, tol: f64) {
    if cols == 0 {
        return;
    }
    for idx in 0..cells.len() {
        if cells[idx].candidates.len() <= 1 {
            continue;
        }
        let (r, c) = ((idx / cols) as isize, (idx % cols) as isize);
        let mut neighbors: Vec<&str> = Vec::new();
        for dr in -1..=1 {
            for dc in -1..=1 {
                let (nr, nc) = (r + dr, c + dc);
                if (dr, dc) == (0, 0) || nr < 0 || nc < 0 || nc >= cols as isize {
                    continue;
                }
                let n = nr as usize * cols + nc as usize;
                if n < idx {
                    if let Some(w) = cells[n].winner.as_deref() {
                        neighbors.push(w);
                    }
                }
            }
        }
        let choice = tie_break(&cells[idx].candidates, &neighbors, tol);
        if let Some(key) = choice {
            let energy = cells[idx].candidates.iter().find(|c| c.key == key).map(|c| c.energy);
            let cell = &mut cells[idx];
            cell.energy = energy.unwrap_or(cell.min_energy);
            cell.winner = Some(key);
        }
    }
}

impl PhaseMap {
    /// Winning schemes with short ids, in order of first appearance.
    pub fn legend(&self) -> Vec<LegendEntry> {
        let mut out: Vec<LegendEntry> = Vec::new();
        for cell in &self.cells {
            let Some(key) = &cell.winner else { continue };
            match out.iter_mut().find(|e| &e.key == key) {
                Some(e) => e.cells += 1,
                None => out.push(LegendEntry {
                    id: format!("S{}", out.len() + 1),
                    key: key.clone(),
                    cooperation: key.parse::<Cgras>().ok().map(|c| c.cooperation_level()),
                    cells: 1,
                }),
            }
        }
        out
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["a", "b", "scheme_key", "E_TOT", "margin"])?;
        for c in &self.cells {
            wr.write_record([
                fmt_num(c.a),
                fmt_num(c.b),
                c.winner.clone().unwrap_or_else(|| "infeasible".into()),
                fmt_num(c.energy),
                fmt_num(c.margin),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Minimal energy and power per cell.
    pub fn write_power_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["a", "b", "E_TOT", "P_TOT"])?;
        for c in &self.cells {
            wr.write_record([fmt_num(c.a), fmt_num(c.b), fmt_num(c.min_energy), fmt_num(c.power)])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Out<'a> {
            grid: &'a Grid,
            rate: f64,
            mode: Mode,
            options: &'a SweepOptions,
            legend: Vec<LegendEntry>,
            cells: &'a [Cell],
        }
        Ok(serde_json::to_string_pretty(&Out {
            grid: &self.grid,
            rate: self.rate,
            mode: self.mode,
            options: &self.options,
            legend: self.legend(),
            cells: &self.cells,
        })?)
    }

    pub fn to_svg(&self) -> String {
        let legend = self.legend();
        let ids: HashMap<&str, usize> = legend.iter().enumerate().map(|(i, e)| (e.key.as_str(), i)).collect();
        let (na, nb) = (self.grid.a.points, self.grid.b.points);
        let cell = 24.0;
        let (left, top) = (60.0, 40.0);
        let plot_w = na as f64 * cell;
        let plot_h = nb as f64 * cell;
        let legend_x = left + plot_w + 30.0;
        let width = legend_x + 760.0;
        let height = (top + plot_h + 60.0).max(top + 22.0 * (legend.len() + 2) as f64);

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{left}" y="20" font-size="14">Best scheme, R_sym = {}, {}</text>"#,
            self.rate, self.mode
        );
        for (idx, c) in self.cells.iter().enumerate() {
            let (ia, ib) = (idx / nb.max(1), idx % nb.max(1));
            let x = left + ia as f64 * cell;
            let y = top + (nb - 1 - ib) as f64 * cell;
            let (fill, label) = match &c.winner {
                Some(k) => (palette(ids[k.as_str()]), legend[ids[k.as_str()]].id.clone()),
                None => (INFEASIBLE_COLOR.to_string(), "infeasible".to_string()),
            };
            let _ = writeln!(
                s,
                r#"<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="{fill}"><title>a={} b={} {label} E={}</title></rect>"#,
                c.a,
                c.b,
                fmt_num(c.energy)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">a</text>"#,
            left + plot_w / 2.0,
            top + plot_h + 30.0
        );
        let _ = writeln!(s, r#"<text x="20" y="{}" text-anchor="middle">b</text>"#, top + plot_h / 2.0);
        for (ia, a) in self.grid.a.values().iter().enumerate().filter(|(i, _)| i % 5 == 0) {
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle">{a}</text>"#,
                left + (ia as f64 + 0.5) * cell,
                top + plot_h + 14.0
            );
        }
        for (ib, b) in self.grid.b.values().iter().enumerate().filter(|(i, _)| i % 5 == 0) {
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="end">{b}</text>"#,
                left - 4.0,
                top + (nb - ib) as f64 * cell - cell / 2.0 + 4.0
            );
        }
        for (i, e) in legend.iter().enumerate() {
            let y = top + 22.0 * i as f64;
            let coop = e.cooperation.map(|c| c.to_string()).unwrap_or_default();
            let _ = writeln!(
                s,
                r#"<rect x="{legend_x}" y="{y}" width="14" height="14" fill="{}"/><text x="{}" y="{}">{} [{coop}] {}</text>"#,
                palette(i),
                legend_x + 20.0,
                y + 11.0,
                e.id,
                xml_escape(&e.key)
            );
        }
        let y = top + 22.0 * legend.len() as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{legend_x}" y="{y}" width="14" height="14" fill="{INFEASIBLE_COLOR}"/><text x="{}" y="{}">infeasible</text>"#,
            legend_x + 20.0,
            y + 11.0
        );
        s.push_str("</svg>\n");
        s
    }
}

const INFEASIBLE_COLOR: &str = "#bdbdbd";

/// Distinct saturated colours; grey is reserved for infeasible cells.
fn palette(i: usize) -> String {
    const BASE: [&str; 12] = [
        "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22",
        "#393b79", "#637939", "#843c39",
    ];
    if i < BASE.len() {
        BASE[i].to_string()
    } else {
        let hue = (i as f64 * 137.508) % 360.0;
        format!("hsl({hue:.1},65%,{}%)", 35 + (i % 3) * 10)
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else if x.is_infinite() {
        "inf".into()
    } else {
        format!("{x}")
    }
}

/// Output formats of [`emit`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            _ => Err(Error::Config(format!("unknown format `{s}` (csv, json, svg)"))),
        }
    }
}

/// File stem such as `phase_r2_no-split`.
pub fn file_stem(pm: &PhaseMap) -> String {
    format!("phase_r{}_{}", pm.rate, pm.mode)
}

/// Write the phase map in each format (plus the power surface with CSV) to `dir`.
pub fn emit(pm: &PhaseMap, formats: &[Format], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let stem = file_stem(pm);
    let mut written = Vec::new();
    for f in formats {
        match f {
            Format::Csv => {
                let path = dir.join(format!("{stem}.csv"));
                pm.write_csv(fs::File::create(&path)?)?;
                written.push(path);
                let path = dir.join(format!("power_r{}_{}.csv", pm.rate, pm.mode));
                pm.write_power_csv(fs::File::create(&path)?)?;
                written.push(path);
            }
            Format::Json => {
                let path = dir.join(format!("{stem}.json"));
                fs::write(&path, pm.to_json()?)?;
                written.push(path);
            }
            Format::Svg => {
                let path = dir.join(format!("{stem}.svg"));
                fs::write(&path, pm.to_svg())?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

/// Per-cell energy with and without splitting on the same grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DifferenceRow {
    pub a: f64,
    pub b: f64,
    pub no_split: f64,
    pub split: f64,
    /// `no_split − split`; nonnegative.
    pub gain: f64,
}

pub fn difference_surface(no_split: &PhaseMap, split: &PhaseMap) -> Result<Vec<DifferenceRow>> {
    if no_split.grid != split.grid || no_split.rate != split.rate {
        return Err(Error::Config("difference surface needs two sweeps on the same grid and rate".into()));
    }
    Ok(no_split
        .cells
        .iter()
        .zip(&split.cells)
        .map(|(n, s)| DifferenceRow {
            a: n.a,
            b: n.b,
            no_split: n.min_energy,
            split: s.min_energy,
            gain: if n.min_energy.is_finite() { n.min_energy - s.min_energy } else { f64::NAN },
        })
        .collect())
}

pub fn write_difference_csv<W: Write>(rows: &[DifferenceRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["a", "b", "E_nosplit", "E_split", "gain"])?;
    for r in rows {
        wr.write_record([fmt_num(r.a), fmt_num(r.b), fmt_num(r.no_split), fmt_num(r.split), fmt_num(r.gain)])?;
    }
    wr.flush()?;
    Ok(())
}

/// Inner and outer energies at one channel point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundTraceRow {
    pub rate: f64,
    pub lower: f64,
    pub no_split: f64,
    pub split: f64,
}

/// Lower bound against the best schemes with and without splitting at `(a, b)`.
pub fn bound_trace(
    a: f64,
    b: f64,
    rates: &[f64],
    opts: &SweepOptions,
    cfg: &BoundConfig,
) -> Result<Vec<BoundTraceRow>> {
    let (ch, rc) = symmetric_channel(a, b)?;
    let plain = SchemeLibrary::new(false);
    let split_lib = SchemeLibrary::new(true);
    let mut out = Vec::new();
    for &rate in rates {
        let no_split = Sweeper::new(&plain, rate, SweepOptions { split: false, ..*opts })?.evaluate_cell(a, b)?;
        let split = Sweeper::new(&split_lib, rate, SweepOptions { split: true, ..*opts })?.evaluate_cell(a, b)?;
        let lower = energy_lower_bound(&ch, &rc, &RateTarget::symmetric(rate)?, cfg)?;
        out.push(BoundTraceRow { rate, lower: lower.energy, no_split: no_split.min_energy, split: split.min_energy });
    }
    Ok(out)
}

pub fn write_bound_trace_csv<W: Write>(rows: &[BoundTraceRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["R_sym", "E_lower", "E_best_nosplit", "E_best_split"])?;
    for r in rows {
        wr.write_record([fmt_num(r.rate), fmt_num(r.lower), fmt_num(r.no_split), fmt_num(r.split)])?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(key: &str, energy: f64) -> Candidate {
        Candidate { key: key.into(), energy }
    }

    #[test]
    fn tie_break_rules() {
        assert_eq!(tie_break(&[cand("x", 1.0)], &[], 0.05).as_deref(), Some("x"));
        let two = [cand("b-key", 1.0), cand("a-key", 1.03)];
        assert_eq!(tie_break(&two, &["b-key", "a-key", "a-key"], 0.05).as_deref(), Some("a-key"));
        assert_eq!(tie_break(&two, &[], 0.05).as_deref(), Some("a-key"));
        // outside the tolerance the best wins regardless of neighbours
        let far = [cand("b-key", 1.0), cand("a-key", 1.2)];
        assert_eq!(tie_break(&far, &["a-key"], 0.05).as_deref(), Some("b-key"));
        assert_eq!(tie_break(&[], &[], 0.05), None);
    }

    #[test]
    fn axes_and_grids() {
        assert_eq!(Axis::new(0.0, 2.0, 21).unwrap().values()[3], 0.3);
        assert_eq!(Axis::new(0.0, 2.0, 0).unwrap().values(), Vec::<f64>::new());
        let g = Grid::parse("0:1:2").unwrap();
        assert_eq!(g.cells(), vec![(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)]);
        assert_eq!(Grid::parse("21").unwrap().len(), 441);
        assert!(Grid::parse("a:b").is_err());
        assert!(Axis::new(1.0, 0.0, 3).is_err());
    }

    #[test]
    fn empty_grid() {
        let lib = SchemeLibrary { schemes: vec![], keys: vec![], split: false };
        let grid = Grid::square(0.0, 2.0, 0).unwrap();
        let pm = run_sweep_with(&lib, &grid, 0.1, &SweepOptions::default()).unwrap();
        assert!(pm.cells.is_empty());
        let mut buf = Vec::new();
        pm.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b,scheme_key,E_TOT,margin\n");
    }

    #[test]
    fn neighbour_pass_prefers_decided_cells() {
        let cell = |cands: Vec<Candidate>| Cell {
            a: 0.0,
            b: 0.0,
            winner: cands.first().map(|c| c.key.clone()),
            energy: 1.0,
            min_energy: 1.0,
            power: 1.0,
            margin: 0.0,
            candidates: cands,
            runner_up: None,
            evaluated: 0,
            errors: vec![],
        };
        let mut cells = vec![
            cell(vec![cand("z", 1.0)]),
            cell(vec![cand("a", 1.0), cand("z", 1.01)]),
        ];
        resolve_ties(&mut cells, 2, 0.05);
        assert_eq!(cells[1].winner.as_deref(), Some("z"));
        assert_eq!(cells[1].energy, 1.01);
    }
}
