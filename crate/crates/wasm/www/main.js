// Plain-JS glue for the dispatch playground. Expects the wasm-bindgen output
// in ./pkg (see README: wasm-pack build --target web).

import init, { route_demo, allocation_demo, simulate_demo } from "./pkg/dispatch_wasm.js";

const MODE_COLORS = { proposed: "#2563eb", greedy: "#d97706", bundling: "#059669" };
const COURIER_COLORS = ["#2563eb", "#d97706", "#059669", "#dc2626", "#7c3aed", "#0891b2",
  "#be185d", "#4d7c0f", "#b45309", "#1e40af", "#15803d", "#9f1239"];

function call(fn, params) {
  const out = JSON.parse(fn(JSON.stringify(params)));
  if (out.error) throw new Error(out.error);
  return out;
}

// --- panel 1: repositioning route -----------------------------------------

const routeState = { start: 0 };

function cellRect(canvas, rows, cols, cell) {
  const w = canvas.width / cols;
  const h = canvas.height / rows;
  const row = Math.floor(cell / cols);
  const col = cell % cols;
  return { x: col * w, y: row * h, w, h };
}

function drawRoute() {
  const dim = Number(document.getElementById("route-dim").value);
  const budget = Number(document.getElementById("route-budget").value);
  document.getElementById("route-budget-value").textContent = budget;
  if (routeState.start >= dim * dim) routeState.start = 0;
  const out = call(route_demo, {
    rows: dim, cols: dim, start_cell: routeState.start, max_distance_km: budget,
  });
  const canvas = document.getElementById("route-canvas");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const maxDemand = Math.max(...out.cells.map(c => c.outgoing_demand), 1e-9);
  for (const cell of out.cells) {
    const { x, y, w, h } = cellRect(canvas, out.rows, out.cols, cell.cell);
    const heat = cell.outgoing_demand / maxDemand;
    ctx.fillStyle = `rgba(37, 99, 235, ${0.05 + 0.75 * heat})`;
    ctx.fillRect(x, y, w, h);
    ctx.strokeStyle = "#e4e8ee";
    ctx.strokeRect(x, y, w, h);
  }
  ctx.strokeStyle = "#dc2626";
  ctx.lineWidth = 3;
  ctx.beginPath();
  out.route.forEach((cell, i) => {
    const { x, y, w, h } = cellRect(canvas, out.rows, out.cols, cell);
    const cx = x + w / 2, cy = y + h / 2;
    if (i === 0) ctx.moveTo(cx, cy); else ctx.lineTo(cx, cy);
  });
  ctx.stroke();
  ctx.lineWidth = 1;
  const startRect = cellRect(canvas, out.rows, out.cols, routeState.start);
  ctx.fillStyle = "#dc2626";
  ctx.beginPath();
  ctx.arc(startRect.x + startRect.w / 2, startRect.y + startRect.h / 2, 6, 0, 7);
  ctx.fill();
  const oracle = out.oracle_objective == null
    ? ""
    : ` · exhaustive optimum ${out.oracle_objective.toFixed(2)}`;
  document.getElementById("route-stats").textContent =
    `route ${out.route.join(" → ")} · ${out.distance_km.toFixed(1)} km · ` +
    `collects ${out.objective.toFixed(2)} predicted orders${oracle}`;
}

document.getElementById("route-canvas").addEventListener("click", (ev) => {
  const dim = Number(document.getElementById("route-dim").value);
  const canvas = ev.currentTarget;
  const rect = canvas.getBoundingClientRect();
  const col = Math.floor((ev.clientX - rect.left) / (rect.width / dim));
  const row = Math.floor((ev.clientY - rect.top) / (rect.height / dim));
  routeState.start = Math.min(dim * dim - 1, row * dim + col);
  drawRoute();
});
document.getElementById("route-budget").addEventListener("input", drawRoute);
document.getElementById("route-dim").addEventListener("change", drawRoute);

// --- panel 2: allocation ----------------------------------------------------

function cellCenter(canvas, rows, cols, cell) {
  const { x, y, w, h } = cellRect(canvas, rows, cols, cell);
  return [x + w / 2, y + h / 2];
}

function drawAllocation() {
  const out = call(allocation_demo, {
    rows: 8, cols: 8,
    couriers: Number(document.getElementById("alloc-couriers").value),
    orders: Number(document.getElementById("alloc-orders").value),
    capacity: Number(document.getElementById("alloc-capacity").value),
    detour_threshold: Number(document.getElementById("alloc-detour").value),
    seed: Number(document.getElementById("alloc-seed").value),
  });
  const canvas = document.getElementById("alloc-canvas");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  for (let cell = 0; cell < out.rows * out.cols; cell++) {
    const { x, y, w, h } = cellRect(canvas, out.rows, out.cols, cell);
    ctx.strokeStyle = "#eef1f5";
    ctx.strokeRect(x, y, w, h);
  }
  const courierColor = new Map(out.couriers.map((c, i) =>
    [c.id, COURIER_COLORS[i % COURIER_COLORS.length]]));
  const courierOfOrder = new Map();
  for (const a of out.assignments) {
    for (const id of a.orders) courierOfOrder.set(id, a.courier);
  }
  const restaurantCell = new Map(out.restaurants.map(r => [r.id, r.cell]));
  for (const order of out.orders) {
    const [x1, y1] = cellCenter(canvas, out.rows, out.cols, restaurantCell.get(order.restaurant));
    const [x2, y2] = cellCenter(canvas, out.rows, out.cols, order.dropoff);
    const courier = courierOfOrder.get(order.id);
    ctx.strokeStyle = courier === undefined ? "#c4ccd6" : courierColor.get(courier);
    ctx.lineWidth = courier === undefined ? 1 : 2;
    ctx.beginPath();
    ctx.moveTo(x1, y1);
    ctx.lineTo(x2, y2);
    ctx.stroke();
  }
  ctx.lineWidth = 1;
  for (const r of out.restaurants) {
    const [x, y] = cellCenter(canvas, out.rows, out.cols, r.cell);
    ctx.fillStyle = "#1c2430";
    ctx.fillRect(x - 6, y - 6, 12, 12);
  }
  for (const c of out.couriers) {
    const [x, y] = cellCenter(canvas, out.rows, out.cols, c.cell);
    ctx.fillStyle = courierColor.get(c.id);
    ctx.beginPath();
    ctx.arc(x, y, 7, 0, 7);
    ctx.fill();
    ctx.fillStyle = "#fff";
    ctx.font = "10px system-ui";
    ctx.textAlign = "center";
    ctx.textBaseline = "middle";
    ctx.fillText(String(c.id), x, y);
  }
  document.getElementById("alloc-stats").textContent =
    `${out.assigned_count}/${out.orders.length} orders assigned · fees ${out.total_fee.toFixed(0)}`;
  const rows = out.assignments.map(a =>
    `<tr><td>courier ${a.courier}</td><td>r${a.restaurant}</td>` +
    `<td>${a.orders.length}</td><td>${a.pickup_km.toFixed(1)}</td>` +
    `<td>${a.route_km.toFixed(1)}</td><td>${a.max_detour_ratio.toFixed(2)}</td></tr>`);
  document.getElementById("alloc-table").innerHTML =
    "<tr><th>trip</th><th>pickup</th><th>orders</th><th>to r (km)</th><th>route (km)</th><th>worst detour</th></tr>"
    + rows.join("");
}

document.getElementById("alloc-run").addEventListener("click", () => {
  const seed = document.getElementById("alloc-seed");
  seed.value = Number(seed.value) + 1;
  drawAllocation();
});
for (const id of ["alloc-couriers", "alloc-orders", "alloc-capacity", "alloc-detour", "alloc-seed"]) {
  document.getElementById(id).addEventListener("change", drawAllocation);
}

// --- panel 3: simulation -----------------------------------------------------

function drawSimulation() {
  const out = call(simulate_demo, {
    rows: 8, cols: 8,
    fleet: Number(document.getElementById("sim-fleet").value),
    capacity: Number(document.getElementById("sim-capacity").value),
    relocation_km: Number(document.getElementById("sim-dm").value),
    intervals: Number(document.getElementById("sim-intervals").value),
    seed: Number(document.getElementById("sim-seed").value),
  });
  const canvas = document.getElementById("sim-canvas");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const pad = 28;
  const maxServed = Math.max(1, ...out.modes.flatMap(m => m.series.map(p => p.served)));
  const n = out.modes[0].series.length;
  ctx.strokeStyle = "#c4ccd6";
  ctx.strokeRect(pad, 8, canvas.width - pad - 8, canvas.height - pad - 8);
  for (const mode of out.modes) {
    ctx.strokeStyle = MODE_COLORS[mode.name];
    ctx.lineWidth = 2;
    ctx.beginPath();
    mode.series.forEach((p, i) => {
      const x = pad + (canvas.width - pad - 8) * (n === 1 ? 0.5 : i / (n - 1));
      const y = canvas.height - pad - (canvas.height - pad - 16) * (p.served / maxServed);
      if (i === 0) ctx.moveTo(x, y); else ctx.lineTo(x, y);
    });
    ctx.stroke();
  }
  ctx.lineWidth = 1;
  ctx.font = "12px system-ui";
  ctx.textAlign = "left";
  out.modes.forEach((mode, i) => {
    ctx.fillStyle = MODE_COLORS[mode.name];
    ctx.fillText(`${mode.name}`, pad + 6, 20 + 14 * i);
  });
  ctx.fillStyle = "#6b7685";
  ctx.fillText("orders served per interval", canvas.width / 2 - 60, canvas.height - 8);

  const fmt = (v) => v == null ? "–" : `${v.toFixed(1)}%`;
  const rows = out.modes.map(m =>
    `<tr><td>${m.name}</td><td>${m.vehicle_count}</td><td>${m.delivered}</td>` +
    `<td>${m.expired}</td><td>${m.profit.toFixed(0)}</td>` +
    `<td>${m.mean_service_minutes.toFixed(1)}</td></tr>`);
  const imp = out.improvements.map(i =>
    `<tr><td>vs ${i.baseline}</td><td colspan="2">efficiency ${fmt(i.efficiency_pct)}</td>` +
    `<td colspan="3">profit ${fmt(i.profit_pct)}</td></tr>`);
  document.getElementById("sim-table").innerHTML =
    "<tr><th>mode</th><th>vehicles</th><th>served</th><th>expired</th><th>profit</th><th>service (min)</th></tr>"
    + rows.join("") + imp.join("");
}

document.getElementById("sim-run").addEventListener("click", drawSimulation);

// --- boot ---------------------------------------------------------------------

await init();
drawRoute();
drawAllocation();
drawSimulation();
