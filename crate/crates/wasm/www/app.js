import init, { phase_map, optimize_point, energy_curve } from "./pkg/relaynet_wasm.js";

const $ = (id) => document.getElementById(id);
const INFEASIBLE = "#bdbdbd";
let current = null;

const fmt = (v) => (v === null ? "inf" : v.toFixed(3));

function color(i) {
  const hue = (i * 137.508) % 360;
  return `hsl(${hue}, 60%, 55%)`;
}

// Runs after the browser has painted the status text.
function later(fn) {
  return new Promise((resolve) => setTimeout(() => resolve(fn()), 20));
}

function drawMap(pm) {
  const canvas = $("map");
  const ctx = canvas.getContext("2d");
  const na = pm.grid.a.points;
  const nb = pm.grid.b.points;
  const ids = new Map(pm.legend.map((e, i) => [e.key, i]));
  const w = canvas.width / na;
  const h = canvas.height / nb;
  pm.cells.forEach((cell, k) => {
    const ia = Math.floor(k / nb);
    const ib = k % nb;
    ctx.fillStyle = cell.winner === null ? INFEASIBLE : color(ids.get(cell.winner));
    ctx.fillRect(ia * w, canvas.height - (ib + 1) * h, Math.ceil(w), Math.ceil(h));
  });
  const legend = $("legend");
  legend.replaceChildren();
  pm.legend.forEach((e, i) => {
    const row = document.createElement("div");
    const sw = document.createElement("span");
    sw.className = "swatch";
    sw.style.background = color(i);
    row.append(sw, `${e.id} (${e.cells}) ${e.key}`);
    legend.append(row);
  });
}

async function runMap() {
  const rate = parseFloat($("rate").value);
  const points = parseInt($("points").value, 10);
  const split = $("split").checked;
  $("status").textContent = "running...";
  const t0 = performance.now();
  try {
    current = JSON.parse(await later(() => phase_map(rate, points, split)));
    drawMap(current);
    $("status").textContent = `${((performance.now() - t0) / 1000).toFixed(1)} s`;
  } catch (e) {
    $("status").textContent = String(e);
  }
}

async function pick(ev) {
  if (!current) return;
  const canvas = $("map");
  const r = canvas.getBoundingClientRect();
  const na = current.grid.a.points;
  const nb = current.grid.b.points;
  const ia = Math.min(na - 1, Math.floor(((ev.clientX - r.left) / r.width) * na));
  const ib = Math.min(nb - 1, Math.floor(((r.bottom - ev.clientY) / r.height) * nb));
  const cell = current.cells[ia * nb + ib];
  $("point").textContent = "optimizing...";
  try {
    const out = JSON.parse(await later(() => optimize_point(cell.a, cell.b, current.rate, current.mode === "split")));
    $("point").textContent = JSON.stringify(out, null, 2);
  } catch (e) {
    $("point").textContent = String(e);
  }
}

function drawCurve(rows) {
  const canvas = $("plot");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const pad = 40;
  const xs = rows.map((r) => r.rate);
  const ys = rows.flatMap((r) => [r.lower, r.best]).filter((v) => v !== null);
  if (!ys.length) return;
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  const [y0, y1] = [0, Math.max(...ys)];
  const px = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (canvas.width - 2 * pad);
  const py = (y) => canvas.height - pad - ((y - y0) / (y1 - y0 || 1)) * (canvas.height - 2 * pad);
  ctx.strokeStyle = "#888";
  ctx.strokeRect(pad, pad, canvas.width - 2 * pad, canvas.height - 2 * pad);
  ctx.fillStyle = "#000";
  ctx.fillText(x0.toString(), pad, canvas.height - pad + 14);
  ctx.fillText(x1.toString(), canvas.width - pad - 10, canvas.height - pad + 14);
  ctx.fillText(y1.toFixed(1), 4, pad + 4);
  for (const [field, col] of [["best", "#c0392b"], ["lower", "#2c7fb8"]]) {
    ctx.strokeStyle = col;
    ctx.beginPath();
    rows.filter((r) => r[field] !== null).forEach((r, i) => (i ? ctx.lineTo : ctx.moveTo).call(ctx, px(r.rate), py(r[field])));
    ctx.stroke();
    ctx.fillStyle = col;
    ctx.fillText(field, canvas.width - pad + 4, py(rows[rows.length - 1][field] ?? y1));
  }
}

async function runCurve() {
  const rates = Float64Array.from($("crates").value.split(",").map(Number));
  $("curveout").textContent = "running...";
  try {
    const rows = JSON.parse(
      await later(() =>
        energy_curve(parseFloat($("ca").value), parseFloat($("cb").value), rates, parseInt($("csamples").value, 10)),
      ),
    );
    drawCurve(rows);
    $("curveout").textContent = rows.map((r) => `R=${r.rate}  lower=${fmt(r.lower)}  best=${fmt(r.best)}`).join("\n");
  } catch (e) {
    $("curveout").textContent = String(e);
  }
}

await init();
$("run").addEventListener("click", runMap);
$("curve").addEventListener("click", runCurve);
$("map").addEventListener("click", pick);
runMap();
