import init, { orbit_scatter, intermittent_tail, hyperbolic_mask } from "./pkg/ergolab_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function clear(ctx) {
  ctx.fillStyle = "#fff";
  ctx.fillRect(0, 0, ctx.canvas.width, ctx.canvas.height);
}

function drawScatter() {
  const system = $("sc-system").value;
  const xy = orbit_scatter(system, num("sc-gamma"), num("sc-points"), 1n);
  const ctx = $("sc-canvas").getContext("2d");
  clear(ctx);
  const solid = system.includes("solenoid");
  // solid torus: disk of radius 1 centred; torus and circle: unit square
  const map = solid ? (v) => (v + 1) / 2 : (v) => v;
  const w = ctx.canvas.width, h = ctx.canvas.height;
  ctx.fillStyle = "rgba(20, 60, 160, 0.35)";
  for (let i = 0; i < xy.length; i += 2) {
    ctx.fillRect(map(xy[i]) * w, (1 - map(xy[i + 1])) * h, 1, 1);
  }
}

function drawTail() {
  const t0 = performance.now();
  let res;
  try {
    res = intermittent_tail(num("tl-gamma"), num("tl-cu"), num("tl-h"), num("tl-m"), 1n);
  } catch (e) {
    $("tl-out").textContent = String(e);
    return;
  }
  const frac = res.frac;
  $("tl-out").textContent =
    `slope ${res.slope.toFixed(3)}  r² poly ${res.poly_r2.toFixed(3)}  ` +
    `r² stretched ${res.stretched_r2.toFixed(3)}  chosen ${res.chosen}  ` +
    `censored ${res.censored.toExponential(2)}  (${(performance.now() - t0).toFixed(0)} ms)`;
  const ctx = $("tl-canvas").getContext("2d");
  clear(ctx);
  const w = ctx.canvas.width, h = ctx.canvas.height;
  const pts = [];
  for (let n = 2; n <= frac.length; n++) {
    if (frac[n - 1] > 0) pts.push([Math.log(n), Math.log(frac[n - 1])]);
  }
  if (pts.length === 0) return;
  const xs = pts.map((p) => p[0]), ys = pts.map((p) => p[1]);
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  const [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  ctx.fillStyle = "#b03020";
  for (const [x, y] of pts) {
    const px = 20 + ((x - x0) / (x1 - x0 || 1)) * (w - 40);
    const py = h - 20 - ((y - y0) / (y1 - y0 || 1)) * (h - 40);
    ctx.fillRect(px - 1, py - 1, 2, 2);
  }
  ctx.fillStyle = "#444";
  ctx.fillText("log n", w - 40, h - 5);
  ctx.fillText("log P(h ≥ n)", 5, 12);
}

function drawMask() {
  const H = num("hy-h");
  let out;
  try {
    out = hyperbolic_mask($("hy-system").value, 0.5, num("hy-sigma"), H, 1n);
  } catch (e) {
    $("hy-out").textContent = String(e);
    return;
  }
  const mask = out.subarray(0, H), sums = out.subarray(H);
  let count = 0;
  for (const m of mask) count += m;
  $("hy-out").textContent = `${count} hyperbolic times in 1..${H} (frequency ${(count / H).toFixed(3)})`;
  const ctx = $("hy-canvas").getContext("2d");
  clear(ctx);
  const w = ctx.canvas.width, h = ctx.canvas.height;
  const lo = Math.min(0, ...sums), hi = Math.max(0, ...sums);
  const sx = (n) => 10 + (n / H) * (w - 20);
  const sy = (v) => 20 + ((hi - v) / (hi - lo || 1)) * (h - 40);
  ctx.strokeStyle = "#1d5fa0";
  ctx.beginPath();
  ctx.moveTo(sx(0), sy(0));
  sums.forEach((v, i) => ctx.lineTo(sx(i + 1), sy(v)));
  ctx.stroke();
  ctx.fillStyle = "#c0392b";
  mask.forEach((m, i) => { if (m) ctx.fillRect(sx(i + 1) - 0.5, h - 14, 1, 10); });
  ctx.fillStyle = "#444";
  ctx.fillText("S_n φ^cu", 12, 12);
}

await init();
$("sc-run").onclick = drawScatter;
$("tl-run").onclick = drawTail;
$("hy-run").onclick = drawMask;
drawScatter();
