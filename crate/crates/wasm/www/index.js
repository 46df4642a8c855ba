// Build the bindings first: wasm-pack build crates/wasm --target web --out-dir www/pkg
import init, { Demo } from "./pkg/fragdeconv_wasm.js";

const $ = (id) => document.getElementById(id);
let demo = null;

function plot(canvas, series, { logY = false, yMin = null, yMax = null } = {}) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 36;
  ctx.clearRect(0, 0, w, h);
  const tf = (y) => (logY ? Math.log10(Math.max(y, 1e-12)) : y);
  let xs = series.flatMap((s) => Array.from(s.x));
  let ys = series.flatMap((s) => Array.from(s.y, tf)).filter(Number.isFinite);
  const x0 = Math.min(...xs), x1 = Math.max(...xs);
  const y0 = yMin ?? Math.min(...ys), y1 = yMax ?? Math.max(...ys);
  const px = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (w - 2 * pad);
  const py = (y) => h - pad - ((tf(y) - y0) / (y1 - y0 || 1)) * (h - 2 * pad);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#333";
  ctx.fillText(x0.toFixed(2), pad, h - pad + 14);
  ctx.fillText(x1.toFixed(2), w - pad - 24, h - pad + 14);
  ctx.fillText((logY ? "1e" : "") + y1.toFixed(logY ? 0 : 2), 2, pad + 4);
  ctx.fillText((logY ? "1e" : "") + y0.toFixed(logY ? 0 : 2), 2, h - pad);
  series.forEach((s, k) => {
    ctx.strokeStyle = s.color;
    ctx.beginPath();
    s.x.forEach((x, i) => {
      const y = Math.min(Math.max(py(s.y[i]), pad), h - pad);
      i ? ctx.lineTo(px(x), y) : ctx.moveTo(px(x), y);
    });
    ctx.stroke();
    ctx.fillStyle = s.color;
    ctx.fillText(s.label, w - pad - 150, pad + 14 + 14 * k);
  });
}

function drawDensity() {
  const x = demo.x(), n = demo.density();
  const bins = 80, hist = demo.sample_histogram(bins);
  const width = x[x.length - 1] / bins;
  const hx = Array.from(hist, (_, i) => (i + 0.5) * width);
  plot($("density"), [
    { x, y: n, color: "#c33", label: "N (solver)" },
    { x: hx, y: hist, color: "#36c", label: "sample histogram" },
  ]);
}

function drawSpectra() {
  const hw = Number($("xi").value);
  $("xi-val").textContent = hw;
  const s = demo.spectra(hw);
  const thr = s.xi.map(() => s.threshold);
  plot($("spectra"), [
    { x: s.xi, y: s.m_true, color: "#c33", label: "|M*|" },
    { x: s.xi, y: s.m_hat, color: "#36c", label: "|M* estimate|" },
    { x: s.xi, y: s.g_star, color: "#393", label: "|g*|" },
    { x: s.xi, y: thr, color: "#999", label: "threshold" },
  ], { logY: true, yMin: -6, yMax: 0.2 });
}

function drawEstimate() {
  const ell = Number($("ell").value);
  $("ell-val").textContent = ell.toFixed(2);
  const r = demo.estimate(ell);
  $("leak").textContent = `mass on u > 0: ${r.leakage.toExponential(2)}`;
  plot($("estimate"), [
    { x: r.x, y: r.h_true, color: "#c33", label: "h" },
    { x: r.x, y: r.h_sym, color: "#36c", label: "estimate (symmetrised)" },
    { x: r.x, y: r.h, color: "#bbb", label: "estimate" },
  ], { yMin: -0.5, yMax: 3 });
}

function rebuild() {
  $("status").textContent = "solving...";
  setTimeout(() => {
    try {
      demo?.free();
      demo = new Demo($("kernel").value, Number($("alpha").value), Number($("rate").value),
        Number($("n").value), BigInt($("seed").value));
      drawDensity();
      drawSpectra();
      drawEstimate();
      $("status").textContent = `${demo.sample_size()} sizes drawn`;
    } catch (e) {
      $("status").textContent = String(e);
    }
  }, 0);
}

await init();
$("run").addEventListener("click", rebuild);
$("xi").addEventListener("input", () => demo && drawSpectra());
$("ell").addEventListener("input", () => demo && drawEstimate());
rebuild();
