// Build with: wasm-pack build crates/wasm --target web --out-dir www/pkg
import init, { analyze, curve, tail } from "./pkg/whfactor_wasm.js";

const $ = (id) => document.getElementById(id);
const out = $("out");

function show(text, isErr) {
  out.textContent = text;
  out.className = isErr ? "err" : "";
}

function plot(xs, series, logx) {
  const cv = $("plot");
  const g = cv.getContext("2d");
  g.clearRect(0, 0, cv.width, cv.height);
  const tx = logx ? xs.map(Math.log10) : xs;
  const x0 = Math.min(...tx), x1 = Math.max(...tx);
  const all = series.flatMap((s) => s.ys).filter(Number.isFinite);
  const y0 = Math.min(0, ...all), y1 = Math.max(...all);
  const px = (x) => 30 + ((x - x0) / (x1 - x0 || 1)) * (cv.width - 40);
  const py = (y) => cv.height - 20 - ((y - y0) / (y1 - y0 || 1)) * (cv.height - 30);
  for (const s of series) {
    g.strokeStyle = s.color;
    g.beginPath();
    s.ys.forEach((y, i) => (i ? g.lineTo(px(tx[i]), py(y)) : g.moveTo(px(tx[i]), py(y))));
    g.stroke();
  }
}

function run(f) {
  try {
    f();
  } catch (e) {
    show(String(e), true);
  }
}

await init();
const cfg = () => $("cfg").value;
const q = () => Number($("q").value);

$("analyze").onclick = () => run(() => show(JSON.stringify(JSON.parse(analyze(cfg(), q())), null, 2)));

$("curve").onclick = () => run(() => {
  const r = JSON.parse(curve(cfg(), q(), Number($("umax").value)));
  plot(r.u, [{ ys: r.cdf, color: "#1565c0" }, { ys: r.density, color: "#c62828" }], false);
  show(`method ${r.method}, atom ${r.atom}` + (r.notice ? `\n${r.notice}` : ""));
});

$("tail").onclick = () => run(() => {
  const hi = Math.max(Number($("umax").value), 10);
  const r = JSON.parse(tail(cfg(), q(), hi / 1000, hi));
  plot(r.points.map((p) => p[0]), [{ ys: r.points.map((p) => p[3]), color: "#2e7d32" }], true);
  show(`law ${r.kind}, last-decade drift ${r.drift}\n` + r.points.map((p) => p.join("\t")).join("\n"));
});
