import init, { compareSvd, latm1Profile, jacobiTrace } from "./pkg/mpjsvd_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function plotLog(canvas, series, { hline } = {}) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const all = series.flatMap((s) => s.values).filter((v) => v > 0);
  if (hline > 0) all.push(hline);
  if (!all.length) return;
  let lo = Math.floor(Math.log10(Math.min(...all)));
  let hi = Math.ceil(Math.log10(Math.max(...all)));
  if (hi === lo) hi += 1;
  const pad = 40;
  const y = (v) => h - pad / 2 - ((Math.log10(v) - lo) / (hi - lo)) * (h - pad);
  const len = Math.max(...series.map((s) => s.values.length));
  const x = (i) => pad + (len > 1 ? (i / (len - 1)) * (w - 1.5 * pad) : 0);

  ctx.strokeStyle = "#ccc";
  ctx.fillStyle = "#666";
  ctx.font = "11px sans-serif";
  for (let e = lo; e <= hi; e += Math.max(1, Math.ceil((hi - lo) / 8))) {
    ctx.beginPath();
    ctx.moveTo(pad, y(10 ** e));
    ctx.lineTo(w - pad / 2, y(10 ** e));
    ctx.stroke();
    ctx.fillText(`1e${e}`, 2, y(10 ** e) + 4);
  }
  if (hline > 0) {
    ctx.strokeStyle = "#d33";
    ctx.setLineDash([4, 4]);
    ctx.beginPath();
    ctx.moveTo(pad, y(hline));
    ctx.lineTo(w - pad / 2, y(hline));
    ctx.stroke();
    ctx.setLineDash([]);
  }
  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.beginPath();
    s.values.forEach((v, i) => {
      if (v <= 0) return;
      i === 0 ? ctx.moveTo(x(i), y(v)) : ctx.lineTo(x(i), y(v));
    });
    ctx.stroke();
  }
}

function guard(out, fn) {
  try {
    out.classList.remove("err");
    fn();
  } catch (e) {
    out.classList.add("err");
    out.textContent = String(e.message ?? e);
  }
}

function runCompare() {
  const out = $("cmp-out");
  guard(out, () => {
    const r = JSON.parse(compareSvd(num("cmp-id"), num("cmp-n"), num("cmp-kd"), num("cmp-kb"), num("cmp-seed")));
    out.textContent =
      `path ${r.path}, low sweeps ${r.low_sweeps}, refine sweeps ${r.refine_sweeps}\n` +
      `max relative difference ${r.max_rel_diff.toExponential(3)}\n` +
      `time mixed ${(r.seconds_mixed * 1e3).toFixed(1)} ms, fixed ${(r.seconds_fixed * 1e3).toFixed(1)} ms`;
    plotLog($("cmp-plot"), [
      { values: r.sigma_fixed, color: "#888" },
      { values: r.sigma_mixed, color: "#1565c0" },
    ]);
  });
}

function runProfile() {
  const out = $("prof-out");
  guard(out, () => {
    const d = JSON.parse(latm1Profile(num("prof-mode"), num("prof-kappa"), num("prof-n"), num("prof-seed")));
    out.textContent = `max/min = ${(Math.max(...d) / Math.min(...d)).toExponential(3)}`;
    plotLog($("prof-plot"), [{ values: d, color: "#2e7d32" }]);
  });
}

function runTrace() {
  const out = $("tr-out");
  guard(out, () => {
    const r = JSON.parse(jacobiTrace(num("tr-id"), num("tr-n"), num("tr-kd"), num("tr-kb"), num("tr-seed")));
    out.textContent =
      `${r.off.length} sweeps, ${r.rotations} rotations, converged ${r.converged}\n` +
      r.off.map((v, i) => `sweep ${i + 1}: max cosine ${v.toExponential(3)}`).join("\n");
    plotLog($("tr-plot"), [{ values: r.off, color: "#6a1b9a" }], { hline: r.tolerance });
  });
}

await init();
$("cmp-run").addEventListener("click", runCompare);
$("prof-run").addEventListener("click", runProfile);
$("tr-run").addEventListener("click", runTrace);
runProfile();
