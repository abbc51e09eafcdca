import init, {
  default_params,
  scene_overview,
  counterfactual_worlds,
  discovery_report,
} from "./pkg/ccd_demo.js";

const COLORS = { head: "#d9480f", tail: "#1864ab", indep: "#2b8a3e" };
const SLIDERS = [
  "head_speed", "headway_time", "brake_delta", "brake_start",
  "brake_duration", "follower_delay", "indep_speed", "lambda",
];

const $ = (id) => document.getElementById(id);

// ---------------------------------------------------------------- plotting

function plot(canvas, opts) {
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height;
  const m = { l: 44, r: opts.rightAxis ? 36 : 12, t: 18, b: 26 };
  const { xmin, xmax, ymin, ymax } = opts;
  const sx = (x) => m.l + ((x - xmin) / (xmax - xmin)) * (W - m.l - m.r);
  const sy = (y) => H - m.b - ((y - ymin) / (ymax - ymin)) * (H - m.t - m.b);

  ctx.clearRect(0, 0, W, H);
  ctx.font = "11px system-ui";
  ctx.fillStyle = "#868e96";
  ctx.strokeStyle = "#e9ecef";
  ctx.lineWidth = 1;

  const xticks = ticks(xmin, xmax, 6);
  const yticks = ticks(ymin, ymax, 5);
  for (const t of xticks) {
    line(ctx, sx(t), H - m.b, sx(t), m.t, "#f1f3f5", 1);
    ctx.textAlign = "center";
    ctx.fillText(fmt(t), sx(t), H - m.b + 14);
  }
  for (const t of yticks) {
    line(ctx, m.l, sy(t), W - m.r, sy(t), "#f1f3f5", 1);
    ctx.textAlign = "right";
    ctx.fillText(fmt(t), m.l - 5, sy(t) + 3);
  }
  line(ctx, m.l, H - m.b, W - m.r, H - m.b, "#adb5bd", 1);
  line(ctx, m.l, H - m.b, m.l, m.t, "#adb5bd", 1);
  if (opts.title) {
    ctx.textAlign = "left";
    ctx.fillStyle = "#495057";
    ctx.fillText(opts.title, m.l, m.t - 6);
  }
  if (opts.xlabel) {
    ctx.textAlign = "center";
    ctx.fillText(opts.xlabel, (m.l + W - m.r) / 2, H - 4);
  }

  return {
    sx, sy, ctx,
    line(xs, ys, color, width = 1.7, dash = []) {
      ctx.save();
      ctx.setLineDash(dash);
      ctx.strokeStyle = color;
      ctx.lineWidth = width;
      ctx.beginPath();
      let started = false;
      for (let i = 0; i < xs.length; i++) {
        if (!Number.isFinite(ys[i])) { started = false; continue; }
        const X = sx(xs[i]), Y = sy(Math.max(ymin, Math.min(ymax, ys[i])));
        started ? ctx.lineTo(X, Y) : ctx.moveTo(X, Y);
        started = true;
      }
      ctx.stroke();
      ctx.restore();
    },
    vline(x, color, dash = [4, 3]) {
      ctx.save();
      ctx.setLineDash(dash);
      line(ctx, sx(x), sy(ymin), sx(x), sy(ymax), color, 1.2);
      ctx.restore();
    },
    vspan(x0, x1, color) {
      ctx.fillStyle = color;
      ctx.fillRect(sx(x0), m.t, Math.max(1.5, sx(x1) - sx(x0)), H - m.t - m.b);
    },
    dot(x, y, color) {
      ctx.fillStyle = color;
      ctx.beginPath();
      ctx.arc(sx(x), sy(y), 3.2, 0, Math.PI * 2);
      ctx.fill();
    },
  };
}

function line(ctx, x0, y0, x1, y1, color, width) {
  ctx.strokeStyle = color;
  ctx.lineWidth = width;
  ctx.beginPath();
  ctx.moveTo(x0, y0);
  ctx.lineTo(x1, y1);
  ctx.stroke();
}

function ticks(lo, hi, n) {
  const span = hi - lo || 1;
  const step = Math.pow(10, Math.floor(Math.log10(span / n)));
  const mult = [1, 2, 5, 10].find((m) => span / (step * m) <= n) || 10;
  const s = step * mult;
  const out = [];
  for (let t = Math.ceil(lo / s) * s; t <= hi + 1e-9; t += s) out.push(t);
  return out;
}

const fmt = (v) => (Math.abs(v) >= 100 || Number.isInteger(v)) ? v.toFixed(0) : v.toFixed(1);

// ------------------------------------------------------------------ params

function readParams() {
  const p = {};
  for (const id of SLIDERS) p[id] = parseFloat($(id).value);
  p.seed = parseInt($("seed").value || "0", 10);
  p.randomize = $("randomize").checked;
  p.candidate = parseInt($("candidate").value || "0", 10);
  for (const id of SLIDERS) {
    const out = document.querySelector(`output[for="${id}"]`);
    if (out) out.textContent = $(id).value;
  }
  return p;
}

// ------------------------------------------------------------------ panels

function drawScene(scene) {
  const t = scene.tracks[0].speed.map((_, i) => i * scene.dt);
  let vmax = 0, vmin = Infinity;
  for (const tr of scene.tracks) for (const v of tr.speed) {
    vmax = Math.max(vmax, v); vmin = Math.min(vmin, v);
  }
  const p = plot($("speeds"), {
    xmin: 0, xmax: scene.t_end,
    ymin: Math.max(0, vmin - 2), ymax: vmax + 2,
    title: "speed (m/s)", xlabel: "time (s)",
  });
  for (const tr of scene.tracks) {
    p.line(tr.speed.map((_, i) => i * scene.dt), tr.speed, COLORS[tr.id] || "#333");
  }
  for (const d of scene.decisions) {
    const c = COLORS[d.agent_id] || "#333";
    if (d.target_time > d.t) p.vline(d.t, c);
    p.dot(d.target_time, d.target_speed, c);
  }

  const badge = $("badge");
  badge.className = scene.certified ? "ok" : "no";
  badge.textContent = scene.certified
    ? "certified: removing the tail's braking decision causes a crash"
    : "not certified: no counterfactual collision in this configuration";

  const select = $("candidate");
  const previous = select.value;
  select.innerHTML = "";
  scene.candidates.forEach((c, i) => {
    const option = document.createElement("option");
    option.value = i;
    option.textContent =
      `${c.cause_agent} @ ${c.t_cause.toFixed(2)}s -> ${c.effect_agent} @ ${c.t_effect.toFixed(2)}s`;
    select.appendChild(option);
  });
  const def = scene.candidates.findIndex(
    (c) => c.cause_agent === "head" && c.effect_agent === "tail");
  select.value = previous !== "" && previous < scene.candidates.length
    ? previous : String(Math.max(def, 0));
}

function gapSeries(world, length) {
  const head = world.agents.find((a) => a.id === "head");
  const tail = world.agents.find((a) => a.id === "tail");
  if (!head || !tail) return null;
  return head.x.map((x, i) => x - tail.x[i] - length);
}

function drawWorlds(data, vehicleLength) {
  const grid = $("worlds-grid");
  grid.innerHTML = "";
  const tmax = data.worlds[0].t0 + data.worlds[0].dt * (data.worlds[0].reward.length - 1);
  let gmax = 0;
  const gaps = data.worlds.map((w) => gapSeries(w, vehicleLength));
  for (const g of gaps) if (g) for (const v of g) gmax = Math.max(gmax, v);

  data.worlds.forEach((world, i) => {
    const canvas = document.createElement("canvas");
    canvas.width = 370; canvas.height = 190;
    grid.appendChild(canvas);
    const t = world.reward.map((_, k) => world.t0 + k * world.dt);
    const p = plot(canvas, {
      xmin: world.t0, xmax: tmax, ymin: Math.min(0, -gmax * 0.05), ymax: gmax * 1.05 || 1,
      title: `${world.label}   min R = ${world.min_reward.toFixed(3)}` +
             (world.agency_loss ? "   agency lost" : ""),
      xlabel: "time (s)", rightAxis: true,
    });
    for (const [a, b, onset, end] of world.collisions) {
      p.vspan(onset, Math.min(end, tmax), "rgba(201,42,42,0.18)");
    }
    if (gaps[i]) p.line(t, gaps[i], "#495057", 1.8);
    // Reward on a secondary 0..1 scale mapped into the same frame.
    const span = (gmax * 1.05 || 1) - Math.min(0, -gmax * 0.05);
    const rmapped = world.reward.map((r) => Math.min(0, -gmax * 0.05) + r * span);
    p.line(t, rmapped, "#7048e8", 1.4, [3, 3]);
  });

  const verdict = $("worlds-verdict");
  const pat = data.patterns;
  const flags = [
    pat.active && "active", pat.passive && "passive",
    pat.facilitation && "facilitation (veto)", pat.mutual_effect_motive && "mutual-effect motive (veto)",
  ].filter(Boolean).join(", ") || "none";
  verdict.innerHTML =
    `candidate <b>${data.cause.agent_id} &rarr; ${data.effect.agent_id}</b>: ` +
    `&delta;R&#8314; ${data.d_plus.toFixed(3)}, &delta;R&#8315; ${data.d_minus.toFixed(3)}, ` +
    `&delta;R ${data.score.toFixed(3)} &mdash; patterns: ${flags} &mdash; ` +
    `&xi;<sub>R</sub>=${data.xi_r ? 1 : 0} &xi;<sub>A</sub>=${data.xi_a ? 1 : 0} ` +
    `&xi;<sub>H</sub>=${data.xi_h ? 1 : 0}`;
}

function drawGraphCard(title, agents, edges, match) {
  const card = document.createElement("div");
  card.className = "graph-card" + (match ? " match" : "");
  const canvas = document.createElement("canvas");
  canvas.width = 170; canvas.height = 130;
  card.appendChild(canvas);
  const label = document.createElement("div");
  label.textContent = title;
  card.appendChild(label);

  const ctx = canvas.getContext("2d");
  const pos = {
    head: [38, 36], tail: [132, 36], indep: [85, 104],
  };
  const place = (id, i) => pos[id] || [30 + i * 55, 65];
  const at = {};
  agents.forEach((a, i) => (at[a] = place(a, i)));

  ctx.font = "11px system-ui";
  for (const [a, b] of edges) {
    const [x0, y0] = at[a], [x1, y1] = at[b];
    const dx = x1 - x0, dy = y1 - y0, len = Math.hypot(dx, dy);
    const ux = dx / len, uy = dy / len;
    const sx = x0 + ux * 16, sy = y0 + uy * 16;
    const ex = x1 - ux * 18, ey = y1 - uy * 18;
    ctx.strokeStyle = "#495057";
    ctx.lineWidth = 1.6;
    ctx.beginPath(); ctx.moveTo(sx, sy); ctx.lineTo(ex, ey); ctx.stroke();
    ctx.beginPath();
    ctx.moveTo(ex, ey);
    ctx.lineTo(ex - ux * 7 - uy * 4, ey - uy * 7 + ux * 4);
    ctx.lineTo(ex - ux * 7 + uy * 4, ey - uy * 7 - ux * 4);
    ctx.fillStyle = "#495057";
    ctx.fill();
  }
  for (const a of agents) {
    const [x, y] = at[a];
    ctx.beginPath();
    ctx.arc(x, y, 14, 0, Math.PI * 2);
    ctx.fillStyle = "#fff";
    ctx.strokeStyle = COLORS[a] || "#333";
    ctx.lineWidth = 2;
    ctx.fill(); ctx.stroke();
    ctx.fillStyle = COLORS[a] || "#333";
    ctx.textAlign = "center";
    ctx.fillText(a.slice(0, 5), x, y + 4);
  }
  return card;
}

function drawDiscovery(data) {
  const graphs = $("graphs");
  graphs.innerHTML = "";
  graphs.appendChild(drawGraphCard("ground truth", data.agents, data.ground_truth, false));
  for (const v of data.variants) {
    const title = v.lambda != null ? `${v.variant} (λ=${v.lambda})` : v.variant;
    graphs.appendChild(drawGraphCard(title, data.agents, v.edges, v.matches_truth));
  }

  const bit = (b) => (b ? "1" : "0");
  const rows = data.candidates.map((c) => `
    <tr class="${c.xi_a || c.xi_r || c.xi_h ? "accepted" : ""}">
      <td>${c.cause.agent_id} @ ${c.cause.t.toFixed(2)}</td>
      <td>${c.effect.agent_id} @ ${c.effect.t.toFixed(2)}</td>
      <td>${c.dR_plus.toFixed(3)}</td>
      <td>${c.dR_minus.toFixed(3)}</td>
      <td>${(c.dR_plus + c.dR_minus).toFixed(3)}</td>
      <td>${c.agency_flags.map(bit).join(" ")}</td>
      <td>${bit(c.xi_r)}</td><td>${bit(c.xi_a)}</td><td>${bit(c.xi_h)}</td>
    </tr>`).join("");
  $("candidates").innerHTML = `
    <table>
      <thead><tr>
        <th>cause</th><th>effect</th>
        <th>&delta;R&#8314;</th><th>&delta;R&#8315;</th><th>&delta;R</th>
        <th>agency loss [EC, &not;EC, E&not;C, &not;E&not;C]</th>
        <th>&xi;R</th><th>&xi;A</th><th>&xi;H</th>
      </tr></thead>
      <tbody>${rows}</tbody>
    </table>`;
}

// ------------------------------------------------------------------- wiring

let vehicleLength = 4.5;

function recompute() {
  const errorBox = $("error");
  errorBox.style.display = "none";
  try {
    const params = JSON.stringify(readParams());
    const scene = JSON.parse(scene_overview(params));
    vehicleLength = scene.vehicle_length;
    drawScene(scene);
    // The candidate select may have been repopulated; re-read it.
    const params2 = JSON.stringify(readParams());
    drawWorlds(JSON.parse(counterfactual_worlds(params2)), vehicleLength);
    drawDiscovery(JSON.parse(discovery_report(params2)));
  } catch (err) {
    errorBox.style.display = "block";
    errorBox.textContent = String(err);
  }
}

async function main() {
  await init();
  const defaults = JSON.parse(default_params());
  for (const id of SLIDERS) if (id in defaults) $(id).value = defaults[id];
  $("seed").value = defaults.seed;
  for (const id of [...SLIDERS, "seed", "randomize", "candidate"]) {
    $(id).addEventListener("input", recompute);
  }
  recompute();
}

main();
