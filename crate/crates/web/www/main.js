import init, { Demo } from "./pkg/darap_web.js";

const $ = (id) => document.getElementById(id);
const view = $("view");
const ctx = view.getContext("2d");
const hist = $("hist");
const hctx = hist.getContext("2d");

let demo = null;
let faces = null;
let yaw = 0.6;
let pitch = -0.4;
let running = false;
// "cubify" when the last deformation used fixed targets, else "optimized"
let mode = "optimized";

function load() {
  running = false;
  $("run").textContent = "Run";
  demo?.free();
  demo = new Demo($("shape").value, Number($("detail").value));
  faces = demo.faces();
  mode = "optimized";
  refresh();
}

function project(p) {
  const [cy, sy, cp, sp] = [Math.cos(yaw), Math.sin(yaw), Math.cos(pitch), Math.sin(pitch)];
  const out = new Float32Array(p.length);
  for (let i = 0; i < p.length; i += 3) {
    const x = cy * p[i] + sy * p[i + 2];
    const z = -sy * p[i] + cy * p[i + 2];
    const y = cp * p[i + 1] - sp * z;
    out[i] = x;
    out[i + 1] = y;
    out[i + 2] = sp * p[i + 1] + cp * z;
  }
  return out;
}

function draw() {
  const p = project(demo.positions());
  let r = 0;
  for (let i = 0; i < p.length; i += 3) r = Math.max(r, Math.hypot(p[i], p[i + 1]));
  const s = (0.45 * view.width) / (r || 1);
  const nf = faces.length / 3;
  const order = new Uint32Array(nf);
  const depth = new Float32Array(nf);
  for (let f = 0; f < nf; f++) {
    order[f] = f;
    depth[f] = p[3 * faces[3 * f] + 2] + p[3 * faces[3 * f + 1] + 2] + p[3 * faces[3 * f + 2] + 2];
  }
  order.sort((a, b) => depth[a] - depth[b]);
  ctx.clearRect(0, 0, view.width, view.height);
  const cx = view.width / 2;
  const cy = view.height / 2;
  for (const f of order) {
    const [a, b, c] = [3 * faces[3 * f], 3 * faces[3 * f + 1], 3 * faces[3 * f + 2]];
    const e1 = [p[b] - p[a], p[b + 1] - p[a + 1], p[b + 2] - p[a + 2]];
    const e2 = [p[c] - p[a], p[c + 1] - p[a + 1], p[c + 2] - p[a + 2]];
    const n = [e1[1] * e2[2] - e1[2] * e2[1], e1[2] * e2[0] - e1[0] * e2[2], e1[0] * e2[1] - e1[1] * e2[0]];
    const len = Math.hypot(...n) || 1;
    const light = Math.abs(0.3 * n[0] + 0.5 * n[1] + 0.81 * n[2]) / len;
    const g = Math.round(60 + 170 * light);
    ctx.fillStyle = ctx.strokeStyle = `rgb(${g * 0.75},${g * 0.85},${g})`;
    ctx.beginPath();
    ctx.moveTo(cx + s * p[a], cy - s * p[a + 1]);
    ctx.lineTo(cx + s * p[b], cy - s * p[b + 1]);
    ctx.lineTo(cx + s * p[c], cy - s * p[c + 1]);
    ctx.closePath();
    ctx.fill();
    ctx.stroke();
  }
}

function drawHistogram() {
  const bins = 30;
  const counts = demo.area_histogram(bins);
  const max = Math.max(1, ...counts);
  const w = hist.width / counts.length;
  hctx.clearRect(0, 0, hist.width, hist.height);
  counts.forEach((c, i) => {
    const h = ((hist.height - 16) * c) / max;
    hctx.fillStyle = i === bins ? "#c55" : "#4a7ab8";
    hctx.fillRect(i * w + 1, hist.height - 14 - h, w - 2, h);
  });
  hctx.fillStyle = "#444";
  hctx.font = "11px system-ui";
  hctx.fillText("0", 0, hist.height - 2);
  hctx.fillText("1", (bins / 3) * w - 3, hist.height - 2);
  hctx.fillText("3", bins * w - 6, hist.height - 2);
  hctx.fillText(">3", bins * w, hist.height - 2);
}

function refresh() {
  draw();
  drawHistogram();
  const [mean, std] = demo.area_stats();
  $("status").textContent = [
    `V=${demo.n_vertices} F=${demo.n_faces}`,
    `lambda=${demo.lambda}  steps=${demo.steps}`,
    `cubify loss=${demo.loss.toExponential(4)}`,
    `axis deviation=${demo.axis_deviation.toFixed(4)} rad`,
    `area ratio mean=${mean.toFixed(4)} std=${std.toFixed(4)}`,
  ].join("\n");
}

function apply(fn) {
  try {
    fn();
  } catch (e) {
    $("status").textContent = String(e);
    running = false;
    return;
  }
  refresh();
}

function step() {
  const n = Math.max(1, Number($("steps").value) || 1);
  apply(() => {
    mode = "optimized";
    demo.optimize(n);
  });
}

function loop() {
  if (!running) return;
  step();
  requestAnimationFrame(loop);
}

let drag = null;
view.addEventListener("pointerdown", (e) => {
  drag = [e.clientX, e.clientY];
  view.setPointerCapture(e.pointerId);
});
view.addEventListener("pointermove", (e) => {
  if (!drag) return;
  yaw += (e.clientX - drag[0]) * 0.01;
  pitch = Math.max(-1.5, Math.min(1.5, pitch + (e.clientY - drag[1]) * 0.01));
  drag = [e.clientX, e.clientY];
  draw();
});
view.addEventListener("pointerup", () => (drag = null));

$("detail").addEventListener("input", () => ($("detail-out").textContent = $("detail").value));
$("detail").addEventListener("change", load);
$("shape").addEventListener("change", load);
$("reset").addEventListener("click", () => apply(() => demo.reset()));
$("lambda").addEventListener("input", () => {
  const lambda = Number($("lambda").value);
  $("lambda-out").textContent = lambda;
  apply(() => (mode === "cubify" ? demo.deform_cubify(lambda) : demo.set_lambda(lambda)));
});
$("cubify").addEventListener("click", () =>
  apply(() => {
    mode = "cubify";
    demo.deform_cubify(Number($("lambda").value));
  }),
);
$("optimize").addEventListener("click", step);
$("run").addEventListener("click", () => {
  running = !running;
  $("run").textContent = running ? "Stop" : "Run";
  loop();
});

await init();
load();
