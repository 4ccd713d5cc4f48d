// Built with: wasm-pack build crates/web --target web --out-dir www/pkg
import init, { contour, mfcc, offset_rmse_mm, interpolate } from "./pkg/aai_web.js";

const $ = (id) => document.getElementById(id);
const NS = "http://www.w3.org/2000/svg";

function polyline(svg, flat, colour, dashed) {
  const n = flat.length / 2;
  const pts = [];
  for (let i = 0; i < n; i++) pts.push(`${flat[i].toFixed(2)},${flat[n + i].toFixed(2)}`);
  const el = document.createElementNS(NS, "polyline");
  el.setAttribute("points", pts.join(" "));
  el.setAttribute("fill", "none");
  el.setAttribute("stroke", colour);
  el.setAttribute("stroke-width", "1");
  if (dashed) el.setAttribute("stroke-dasharray", "3 2");
  svg.appendChild(el);
}

function bars(svg, values) {
  svg.replaceChildren();
  const lo = Math.min(...values), hi = Math.max(...values);
  const span = Math.max(hi - lo, 1e-9);
  const w = 136 / values.length;
  values.forEach((v, i) => {
    const h = 8 + 120 * (v - lo) / span;
    const r = document.createElementNS(NS, "rect");
    r.setAttribute("x", (i * w + 1).toFixed(2));
    r.setAttribute("y", (136 - h).toFixed(2));
    r.setAttribute("width", (w - 2).toFixed(2));
    r.setAttribute("height", h.toFixed(2));
    r.setAttribute("fill", "#4a7");
    svg.appendChild(r);
  });
}

function latents() {
  return ["p0", "p1", "p2", "p3"].map((id) => parseFloat($(id).value));
}

function showOutputs() {
  document.querySelectorAll("output[for]").forEach((o) => { o.value = $(o.htmlFor).value; });
}

function update() {
  showOutputs();
  try {
    const p = latents();
    const c = contour(...p);
    $("contour").replaceChildren();
    polyline($("contour"), c, "#1f4fbf", false);
    bars($("cepstrum"), Array.from(mfcc(...p)).slice(1));

    const dx = parseFloat($("dx").value), dy = parseFloat($("dy").value);
    const rmse = offset_rmse_mm(c, dx, dy, parseFloat($("scale").value));
    $("rmse").value = `${rmse.toFixed(3)} mm`;
    const moved = Array.from(c, (v, i) => v + (i < c.length / 2 ? dx : dy));
    $("offset").replaceChildren();
    polyline($("offset"), c, "#1f4fbf", false);
    polyline($("offset"), moved, "#c0392b", true);

    const a = contour(-0.8, 0.8, -0.5, 0.0), b = contour(0.8, -0.8, 0.6, 0.5);
    $("interp").replaceChildren();
    polyline($("interp"), a, "#bbb", false);
    polyline($("interp"), b, "#bbb", false);
    polyline($("interp"), interpolate(a, b, parseFloat($("lambda").value)), "#1f4fbf", false);
    $("status").textContent = "";
  } catch (e) {
    $("status").textContent = String(e);
    $("status").className = "error";
  }
}

await init();
document.querySelectorAll("input").forEach((el) => el.addEventListener("input", update));
update();
