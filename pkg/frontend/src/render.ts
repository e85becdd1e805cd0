// DOM renderer: paints the view models onto the page. All interaction
// handlers dispatch reducer actions through the controller; nothing here
// computes engine math.

import { Explorer, ComparisonRender, Renderer } from "./controller.js";
import { ViewState } from "./types.js";
import { ChartModel, DiffModel, HeatmapModel, ProjectionModel, nearestChartPoint } from "./views.js";

const CELL = 14;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function heatColor(intensity: number): string {
  // dark blue -> light yellow
  const h = 240 - 180 * intensity;
  const l = 25 + 45 * intensity;
  return `hsl(${h}, 70%, ${l}%)`;
}

function diffColor(intensity: number): string {
  // signed: blue negative, white zero, red positive
  if (intensity >= 0) {
    const t = 1 - intensity;
    return `rgb(255, ${Math.round(235 * t + 20)}, ${Math.round(235 * t + 20)})`;
  }
  const t = 1 + intensity;
  return `rgb(${Math.round(235 * t + 20)}, ${Math.round(235 * t + 20)}, 255)`;
}

function paintHeatmap(canvas: HTMLCanvasElement, model: HeatmapModel | null): void {
  const ctx = canvas.getContext("2d")!;
  if (!model) {
    canvas.width = 10;
    canvas.height = 10;
    ctx.clearRect(0, 0, 10, 10);
    return;
  }
  canvas.width = model.columns * CELL;
  canvas.height = model.rows * CELL;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  for (const cell of model.cells) {
    const x = (cell.index % model.columns) * CELL;
    const y = Math.floor(cell.index / model.columns) * CELL;
    ctx.fillStyle = heatColor(cell.intensity);
    ctx.fillRect(x, y, CELL - 1, CELL - 1);
    if (cell.masked) {
      ctx.strokeStyle = "#ff3b6b";
      ctx.lineWidth = 2;
      ctx.strokeRect(x + 1.5, y + 1.5, CELL - 4, CELL - 4);
    }
  }
}

function paintDiff(canvas: HTMLCanvasElement, model: DiffModel): void {
  const ctx = canvas.getContext("2d")!;
  canvas.width = model.columns * CELL;
  canvas.height = model.rows * CELL;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  for (const cell of model.cells) {
    const x = (cell.index % model.columns) * CELL;
    const y = Math.floor(cell.index / model.columns) * CELL;
    ctx.fillStyle = diffColor(cell.intensity);
    ctx.fillRect(x, y, CELL - 1, CELL - 1);
    if (cell.newlyUnmasked) {
      ctx.strokeStyle = "#00a86b";
      ctx.lineWidth = 2;
      ctx.strokeRect(x + 1.5, y + 1.5, CELL - 4, CELL - 4);
    }
  }
}

const SVG_NS = "http://www.w3.org/2000/svg";

function chartSvg(model: ChartModel, width: number, height: number,
                  currentStep: number, onPick: (step: number) => void): SVGSVGElement {
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("width", String(width));
  svg.setAttribute("height", String(height));
  svg.classList.add("chart");
  const poly = document.createElementNS(SVG_NS, "polyline");
  poly.setAttribute("points", model.points.map((p) => `${p.x},${p.y}`).join(" "));
  poly.setAttribute("fill", "none");
  poly.setAttribute("stroke", "#3aa0ff");
  poly.setAttribute("stroke-width", "1.5");
  svg.appendChild(poly);
  for (const point of model.points) {
    const dot = document.createElementNS(SVG_NS, "circle");
    dot.setAttribute("cx", String(point.x));
    dot.setAttribute("cy", String(point.y));
    dot.setAttribute("r", point.step === currentStep ? "5" : "3");
    dot.setAttribute("fill", point.step === currentStep ? "#ff3b6b" : "#3aa0ff");
    dot.style.cursor = "pointer";
    dot.addEventListener("click", () => onPick(point.step));
    const label = document.createElementNS(SVG_NS, "title");
    label.textContent = `step ${point.step}: ${point.value.toPrecision(5)}`;
    dot.appendChild(label);
    svg.appendChild(dot);
  }
  svg.addEventListener("click", (ev) => {
    const rect = svg.getBoundingClientRect();
    const picked = nearestChartPoint(model, ev.clientX - rect.left);
    if (picked) onPick(picked.step);
  });
  return svg;
}

export class DomRenderer implements Renderer {
  explorer!: Explorer;

  renderTrajectoryList(state: ViewState): void {
    const list = el<HTMLSelectElement>("trajectory-select");
    list.innerHTML = "";
    const placeholder = document.createElement("option");
    placeholder.value = "";
    placeholder.textContent = state.trajectories.length
      ? "select a trajectory" : "no trajectories in store";
    list.appendChild(placeholder);
    for (const t of state.trajectories) {
      const opt = document.createElement("option");
      opt.value = t.id;
      opt.textContent = `${t.id} (${t.kind}, ${t.steps} steps)`;
      opt.selected = t.id === state.selectedId;
      list.appendChild(opt);
    }
    el<HTMLSelectElement>("mode-select").value = state.mode;
    document.body.dataset.mode = state.mode;

    for (const slot of [0, 1] as const) {
      const sel = el<HTMLSelectElement>(`compare-traj-${slot}`);
      sel.innerHTML = "";
      for (const t of state.trajectories) {
        const opt = document.createElement("option");
        opt.value = t.id;
        opt.textContent = t.id;
        opt.selected = state.comparison[slot]?.trajectoryId === t.id;
        sel.appendChild(opt);
      }
      const stepInput = el<HTMLInputElement>(`compare-step-${slot}`);
      stepInput.value = String(state.comparison[slot]?.step ?? 0);
    }
  }

  renderStepView(model: HeatmapModel | null, state: ViewState): void {
    paintHeatmap(el<HTMLCanvasElement>("step-canvas"), model);
    const slider = el<HTMLInputElement>("step-slider");
    slider.max = String(Math.max(state.stepCount - 1, 0));
    slider.value = String(state.step);
    slider.disabled = state.stepCount === 0;
    el("step-label").textContent = state.stepCount
      ? `step ${state.step} / ${state.stepCount - 1}`
      : "no trajectory selected";
    el("mask-label").textContent = model && model.maskedFraction > 0
      ? `${(model.maskedFraction * 100).toFixed(1)}% masked`
      : "";
  }

  renderMetrics(charts: ChartModel[], state: ViewState): void {
    const host = el("metric-charts");
    host.innerHTML = "";
    for (const chart of charts) {
      if (state.activeMetric && chart.name !== state.activeMetric) continue;
      const panel = document.createElement("figure");
      panel.className = "metric";
      const caption = document.createElement("figcaption");
      caption.textContent = chart.name;
      panel.appendChild(caption);
      panel.appendChild(chartSvg(chart, 360, 120, state.step,
        (step) => void this.explorer.dispatch({ type: "set-step", step })));
      host.appendChild(panel);
    }
    const picker = el<HTMLSelectElement>("metric-select");
    picker.innerHTML = "";
    const all = document.createElement("option");
    all.value = "";
    all.textContent = "all metrics";
    picker.appendChild(all);
    for (const chart of charts) {
      const opt = document.createElement("option");
      opt.value = chart.name;
      opt.textContent = chart.name;
      opt.selected = chart.name === state.activeMetric;
      picker.appendChild(opt);
    }
  }

  renderProjection(model: ProjectionModel | null, state: ViewState): void {
    const host = el("projection-host");
    host.innerHTML = "";
    if (!model) return;
    const svg = document.createElementNS(SVG_NS, "svg");
    svg.setAttribute("width", "360");
    svg.setAttribute("height", "360");
    const poly = document.createElementNS(SVG_NS, "polyline");
    poly.setAttribute("points", model.points.map((p) => `${p.x},${p.y}`).join(" "));
    poly.setAttribute("fill", "none");
    poly.setAttribute("stroke", "#999");
    poly.setAttribute("stroke-width", "1");
    svg.appendChild(poly);
    for (const point of model.points) {
      const dot = document.createElementNS(SVG_NS, "circle");
      dot.setAttribute("cx", String(point.x));
      dot.setAttribute("cy", String(point.y));
      dot.setAttribute("r", point.step === state.step ? "6" : "4");
      dot.setAttribute("fill", point.step === state.step ? "#ff3b6b" : "#3aa0ff");
      dot.style.cursor = "pointer";
      const label = document.createElementNS(SVG_NS, "title");
      label.textContent = `step ${point.step}`;
      dot.appendChild(label);
      dot.addEventListener("click",
        () => void this.explorer.dispatch({ type: "set-step", step: point.step }));
      svg.appendChild(dot);
    }
    host.appendChild(svg);
    el("projection-variance").textContent =
      `explained variance: ${model.explained.map((v) => (v * 100).toFixed(1) + "%").join(", ")}`;
  }

  renderComparison(result: ComparisonRender | null, _state: ViewState): void {
    const banner = el("comparison-error");
    if (!result) {
      paintHeatmap(el<HTMLCanvasElement>("compare-a"), null);
      paintHeatmap(el<HTMLCanvasElement>("compare-b"), null);
      paintHeatmap(el<HTMLCanvasElement>("compare-diff"), null);
      banner.textContent = "";
      el("diff-note").textContent = "";
      return;
    }
    if (result.error) {
      banner.textContent = result.error;
      return;
    }
    banner.textContent = "";
    paintHeatmap(el<HTMLCanvasElement>("compare-a"), result.a);
    paintHeatmap(el<HTMLCanvasElement>("compare-b"), result.b);
    if (result.diff) {
      paintDiff(el<HTMLCanvasElement>("compare-diff"), result.diff);
      el("diff-note").textContent = result.diff.allZero
        ? "difference layer: all zero (identical states)"
        : `max |delta| = ${result.diff.maxAbsDelta.toPrecision(4)}`;
    }
  }

  renderError(message: string | null): void {
    const banner = el("error-banner");
    banner.textContent = message ?? "";
    banner.style.display = message ? "block" : "none";
  }

  renderUrl(query: string): void {
    const url = query ? `#${query}` : "#";
    if (location.hash !== url) history.replaceState(null, "", url);
  }
}
