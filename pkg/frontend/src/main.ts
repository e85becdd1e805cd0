// Bootstrap: load config, build the controller, wire control-panel inputs
// to reducer actions, and restore the view encoded in the URL hash.

import { ApiClient, loadConfig } from "./api.js";
import { Explorer } from "./controller.js";
import { DomRenderer } from "./render.js";

async function start(): Promise<void> {
  const config = await loadConfig();
  const renderer = new DomRenderer();
  const explorer = new Explorer(new ApiClient(config.apiBase), renderer);
  renderer.explorer = explorer;

  const byId = <T extends HTMLElement>(id: string) =>
    document.getElementById(id) as T;

  byId<HTMLSelectElement>("trajectory-select").addEventListener("change", (ev) => {
    const id = (ev.target as HTMLSelectElement).value;
    if (id) void explorer.dispatch({ type: "select-trajectory", id });
  });

  byId<HTMLInputElement>("step-slider").addEventListener("input", (ev) => {
    void explorer.dispatch({
      type: "set-step",
      step: Number((ev.target as HTMLInputElement).value),
    });
  });

  byId<HTMLSelectElement>("metric-select").addEventListener("change", (ev) => {
    const metric = (ev.target as HTMLSelectElement).value || null;
    void explorer.dispatch({ type: "set-metric", metric });
  });

  byId<HTMLSelectElement>("mode-select").addEventListener("change", (ev) => {
    const mode = (ev.target as HTMLSelectElement).value === "compare"
      ? "compare" : "explore";
    void explorer.dispatch({ type: "set-mode", mode });
  });

  for (const slot of [0, 1] as const) {
    const apply = () => {
      const trajectoryId = byId<HTMLSelectElement>(`compare-traj-${slot}`).value;
      const step = Number(byId<HTMLInputElement>(`compare-step-${slot}`).value) || 0;
      if (trajectoryId) {
        void explorer.dispatch({
          type: "set-comparison-slot",
          slot,
          selection: { trajectoryId, step },
        });
      }
    };
    byId(`compare-traj-${slot}`).addEventListener("change", apply);
    byId(`compare-step-${slot}`).addEventListener("change", apply);
  }

  byId("refresh-button").addEventListener("click", async () => {
    await fetch(`${config.apiBase}/api/refresh`, { method: "POST" });
    const trajectories = await new ApiClient(config.apiBase).listTrajectories();
    void explorer.dispatch({ type: "trajectories-loaded", trajectories });
  });

  await explorer.init(location.hash.replace(/^#/, ""));
}

void start();
