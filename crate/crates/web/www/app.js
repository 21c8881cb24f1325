import init, { curves, timeline, scaling } from "./pkg/bicrit_web.js";

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];
const canvas = document.getElementById("plot");
const ctx = canvas.getContext("2d");
const statusLine = document.getElementById("status");
const legend = document.getElementById("legend");
const PAD = { left: 90, right: 30, top: 30, bottom: 60 };

function request(extra = {}) {
  const req = {};
  for (const key of ["algorithm", "adversary", "reactivation"]) req[key] = document.getElementById(key).value;
  for (const key of ["T", "K", "alpha", "delta", "c"]) req[key] = Number(document.getElementById(key).value);
  req.seed = Number(document.getElementById("seed").value);
  return JSON.stringify({ ...req, ...extra });
}

function call(fn, extra) {
  statusLine.textContent = "";
  try {
    return JSON.parse(fn(request(extra)));
  } catch (err) {
    statusLine.textContent = String(err.message || err);
    return null;
  }
}

function frame(xmin, xmax, ymin, ymax, xlabel, ylabel) {
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const w = canvas.width - PAD.left - PAD.right;
  const h = canvas.height - PAD.top - PAD.bottom;
  const sx = (x) => PAD.left + ((x - xmin) / (xmax - xmin || 1)) * w;
  const sy = (y) => PAD.top + h - ((y - ymin) / (ymax - ymin || 1)) * h;
  ctx.strokeStyle = "#888";
  ctx.lineWidth = 2;
  ctx.strokeRect(PAD.left, PAD.top, w, h);
  ctx.fillStyle = "#333";
  ctx.font = "24px system-ui";
  ctx.textAlign = "center";
  ctx.fillText(xlabel, PAD.left + w / 2, canvas.height - 12);
  for (let i = 0; i <= 4; i++) {
    const x = xmin + ((xmax - xmin) * i) / 4;
    ctx.fillText(fmt(x), sx(x), PAD.top + h + 30);
  }
  ctx.textAlign = "right";
  for (let i = 0; i <= 4; i++) {
    const y = ymin + ((ymax - ymin) * i) / 4;
    ctx.fillText(fmt(y), PAD.left - 10, sy(y) + 8);
  }
  ctx.save();
  ctx.translate(22, PAD.top + h / 2);
  ctx.rotate(-Math.PI / 2);
  ctx.textAlign = "center";
  ctx.fillText(ylabel, 0, 0);
  ctx.restore();
  return { sx, sy, w, h };
}

function fmt(v) {
  return Math.abs(v) >= 1000 ? v.toExponential(1) : Number(v.toFixed(2)).toString();
}

function line(xs, ys, sx, sy, color) {
  ctx.strokeStyle = color;
  ctx.lineWidth = 3;
  ctx.beginPath();
  xs.forEach((x, i) => (i ? ctx.lineTo(sx(x), sy(ys[i])) : ctx.moveTo(sx(x), sy(ys[i]))));
  ctx.stroke();
}

function setLegend(entries) {
  legend.innerHTML = entries.map(([name, color]) => `<span style="color:${color}">&#9632; ${name}</span>`).join("");
}

function drawCurves() {
  const data = call(curves, { points: 500 });
  if (!data) return;
  const ys = [...data.primary_regret, ...data.secondary_excess, 0];
  const { sx, sy } = frame(0, data.t[data.t.length - 1], Math.min(...ys), Math.max(...ys), "round t", "cumulative");
  line(data.t, data.primary_regret, sx, sy, COLORS[0]);
  line(data.t, data.secondary_excess, sx, sy, COLORS[1]);
  const last = data.switches[data.switches.length - 1];
  setLegend([["primary regret", COLORS[0]], ["secondary excess over c", COLORS[1]], [`${last} switches, best expert ${data.best_expert}`, "#333"]]);
}

function drawTimeline() {
  const data = call(timeline);
  if (!data) return;
  const { sx, h } = frame(1, data.horizon, 0, 1, "round t", "");
  const row = h / data.k;
  data.active.forEach((runs, e) => {
    const y = PAD.top + e * row;
    ctx.fillStyle = COLORS[e % COLORS.length] + "33";
    for (const [a, b] of runs) ctx.fillRect(sx(a), y + 4, Math.max(1, sx(b + 1) - sx(a)), row - 8);
    ctx.fillStyle = "#333";
    ctx.textAlign = "right";
    ctx.fillText(`expert ${e}`, PAD.left - 10, y + row / 2 + 8);
  });
  for (const [a, b, e] of data.selections) {
    const y = PAD.top + e * row + row / 2;
    ctx.fillStyle = COLORS[e % COLORS.length];
    ctx.fillRect(sx(a), y - 6, Math.max(1, sx(b + 1) - sx(a)), 12);
  }
  setLegend([["shaded: active", "#999"], ["bar: played", "#333"], [`${data.selections.length - 1} switches`, "#333"]]);
}

function drawScaling() {
  const data = call(scaling, { exponents: [8, 9, 10, 11, 12, 13], runs: 8 });
  if (!data) return;
  const lx = data.horizons.map(Math.log2);
  const ly = data.means.map(Math.log2);
  const { sx, sy } = frame(Math.min(...lx), Math.max(...lx), Math.min(...ly) - 0.5, Math.max(...ly) + 0.5, "log2 T", "log2 mean max(Reg1, Reg2c)");
  line(lx, ly, sx, sy, COLORS[2]);
  ctx.fillStyle = COLORS[2];
  lx.forEach((x, i) => ctx.fillRect(sx(x) - 6, sy(ly[i]) - 6, 12, 12));
  const slope = data.exponent == null ? "n/a" : data.exponent.toFixed(3);
  setLegend([[`slope ${slope}`, COLORS[2]], [`${data.failed_runs} failed runs`, "#333"]]);
}

await init();
document.getElementById("curves").onclick = drawCurves;
document.getElementById("timeline").onclick = drawTimeline;
document.getElementById("scaling").onclick = drawScaling;
drawTimeline();
