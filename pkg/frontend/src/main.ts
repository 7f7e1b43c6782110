import { ApiClient } from "./api.js";
import { AtlasController } from "./controller.js";
import { drawBoundaries, drawFrame, renderGrid } from "./render.js";
import { reportHtml, reportText } from "./report.js";
import { PALETTE_NAMES, DIVERGING_DEFAULT } from "./palettes.js";
import type { AnalysisState, BBox, DecodedGrid, KernelKind, Progression, TabId } from "./types.js";
import { ALL_TABS } from "./types.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const input = (id: string): HTMLInputElement => $(id);
const select = (id: string): HTMLSelectElement => $(id);

let client: ApiClient | null = null;
let controller: AtlasController | null = null;
let activeTab: TabId = 1;
let boundaries: { features?: Array<{ geometry?: { type: string; coordinates: unknown } }> } | null =
  null;

const TAB_LABELS: Record<TabId, string> = {
  1: "area",
  2: "num p1",
  3: "den p1",
  4: "Z1",
  5: "num p2",
  6: "den p2",
  7: "Z2",
  8: "Z2-Z1",
};

const notices: string[] = [];

const pushNotice = (text: string): void => {
  notices.push(text);
  $("notices").textContent = notices.join(" | ");
};

const clearNotices = (): void => {
  notices.length = 0;
  $("notices").textContent = "";
};

const viewportFromInputs = (): BBox => ({
  west: parseFloat(input("west").value),
  south: parseFloat(input("south").value),
  east: parseFloat(input("east").value),
  north: parseFloat(input("north").value),
});

const stateFromInputs = (): AnalysisState => {
  const kind = select("kernel").value as KernelKind;
  const betaRaw = input("beta").value.trim();
  const p2on = input("portee2-on").checked;
  const epsRaw = input("epsilon").value.trim();
  return {
    dataset: select("dataset").value,
    num: select("num").value,
    den: select("den").value === "" ? null : select("den").value,
    kernelKind: kind,
    beta: kind === "pareto" && betaRaw !== "" ? parseFloat(betaRaw) : null,
    portee1Km: parseFloat(input("portee1").value),
    portee2Km: p2on ? parseFloat(input("portee2").value) : null,
    width: parseInt(input("grid-width").value, 10),
    height: parseInt(input("grid-height").value, 10),
    viewport: viewportFromInputs(),
    epsilon: epsRaw === "" ? null : parseFloat(epsRaw),
    activeTab,
  };
};

const legendFor = (colors: string[], breaks: number[]): string =>
  colors
    .map((c, i) => {
      const lo = breaks[i];
      const hi = breaks[i + 1];
      const label =
        lo === undefined || hi === undefined ? "" : `${lo.toPrecision(4)} .. ${hi.toPrecision(4)}`;
      return `<span class="swatch" style="background:${c}"></span>${label}`;
    })
    .join("<br>");

const redraw = (): void => {
  const canvas = $("map") as HTMLCanvasElement;
  clearNotices();
  if (!controller) {
    drawFrame(canvas, viewportFromInputs());
    return;
  }
  const viewport = controller.getState()?.viewport ?? viewportFromInputs();
  if (activeTab === 1) {
    drawFrame(canvas, viewport);
    if (boundaries) drawBoundaries(canvas, boundaries, viewport);
    $("legend").innerHTML = "";
    return;
  }
  const tab = controller.tabs.get(activeTab);
  if (!tab) {
    drawFrame(canvas, viewport);
    $("legend").innerHTML = "";
    pushNotice(
      activeTab >= 5
        ? "tabs 5-8 need the second portee and a denominator for the ratio tabs"
        : "no grid for this tab yet; pick variables and apply",
    );
    return;
  }
  const { classification, colors } = renderGrid(canvas, tab, controller.styleOf(activeTab));
  if (boundaries) drawBoundaries(canvas, boundaries, viewport);
  $("legend").innerHTML = legendFor(colors, classification.breaks);
  if (classification.notice) pushNotice(classification.notice);
  if (controller.nyquistWarning(activeTab)) {
    pushNotice("portee is below twice the dataset spacing; the map mostly shows sampling");
  }
  if (controller.lastError) {
    pushNotice(`server: ${controller.lastError.message}`);
  }
};

const applyState = async (): Promise<void> => {
  if (!controller) return;
  $("apply").setAttribute("disabled", "");
  try {
    await controller.setState(stateFromInputs());
    if (controller.lastError) {
      const fields = controller.lastError.fields.map((f) => `${f.field}: ${f.message}`).join("; ");
      pushNotice(`request rejected: ${fields || controller.lastError.message}`);
    }
  } finally {
    $("apply").removeAttribute("disabled");
    redraw();
  }
};

const connect = async (): Promise<void> => {
  client = new ApiClient(input("base-url").value.replace(/\/$/, ""), input("token").value);
  controller = new AtlasController(client);
  try {
    const datasets = await client.datasets();
    const dsSel = select("dataset");
    dsSel.innerHTML = "";
    for (const ds of datasets) {
      const opt = document.createElement("option");
      opt.value = ds.id;
      opt.textContent = `${ds.name} (${ds.id})`;
      dsSel.appendChild(opt);
    }
    const kernels = await client.kernels();
    const kSel = select("kernel");
    kSel.innerHTML = "";
    for (const k of kernels) {
      const opt = document.createElement("option");
      opt.value = k.name;
      opt.textContent = k.name;
      kSel.appendChild(opt);
    }
    await refreshStocks();
    $("panel").classList.remove("hidden");
    clearNotices();
    pushNotice("connected");
  } catch (err) {
    pushNotice(`login failed: ${err instanceof Error ? err.message : String(err)}`);
  }
};

const refreshStocks = async (): Promise<void> => {
  if (!client) return;
  const vars = await client.stocks(select("dataset").value);
  for (const id of ["num", "den"]) {
    const sel = select(id);
    sel.innerHTML = "";
    if (id === "den") {
      const none = document.createElement("option");
      none.value = "";
      none.textContent = "(none)";
      sel.appendChild(none);
    }
    for (const v of vars) {
      const opt = document.createElement("option");
      opt.value = v;
      opt.textContent = v;
      sel.appendChild(opt);
    }
  }
};

const zoom = (factor: number): void => {
  const v = viewportFromInputs();
  const cx = (v.west + v.east) / 2;
  const cy = (v.south + v.north) / 2;
  const hw = ((v.east - v.west) / 2) * factor;
  const hh = ((v.north - v.south) / 2) * factor;
  input("west").value = String(cx - hw);
  input("east").value = String(cx + hw);
  input("south").value = String(Math.max(-90, cy - hh));
  input("north").value = String(Math.min(90, cy + hh));
  void applyState();
};

const pan = (dxFrac: number, dyFrac: number): void => {
  const v = viewportFromInputs();
  const dx = (v.east - v.west) * dxFrac;
  const dy = (v.north - v.south) * dyFrac;
  input("west").value = String(v.west + dx);
  input("east").value = String(v.east + dx);
  input("south").value = String(Math.max(-90, v.south + dy));
  input("north").value = String(Math.min(90, v.north + dy));
  void applyState();
};

// Reports are generated from the cached grid of the active tab, so the
// export matches the map exactly and costs no request.
const download = (format: "text" | "html"): void => {
  const tab = controller?.tabs.get(activeTab);
  if (!tab) {
    pushNotice("nothing to export on this tab");
    return;
  }
  const grid: DecodedGrid = {
    spec: tab.source.spec,
    meta: tab.source.meta,
    warnings: tab.source.warnings,
    values: tab.values,
  };
  const body = format === "text" ? reportText(grid) : reportHtml(grid);
  const blob = new Blob([body], { type: format === "text" ? "text/plain" : "text/html" });
  const a = document.createElement("a");
  a.href = URL.createObjectURL(blob);
  a.download = `tab${activeTab}-report.${format === "text" ? "txt" : "html"}`;
  a.click();
  URL.revokeObjectURL(a.href);
};

const init = (): void => {
  const paletteSel = select("palette");
  for (const name of PALETTE_NAMES) {
    const opt = document.createElement("option");
    opt.value = name;
    opt.textContent = name;
    paletteSel.appendChild(opt);
  }

  const tabBar = $("tabs");
  for (const id of ALL_TABS) {
    const btn = document.createElement("button");
    btn.textContent = `${id}. ${TAB_LABELS[id]}`;
    btn.addEventListener("click", () => {
      activeTab = id;
      if (controller) {
        // Tab 8 compares densities; start it on the diverging ramp.
        if (id === 8 && !controller.tabs.has(8)) void 0;
        if (id === 8 && controller.styleOf(8).palette !== DIVERGING_DEFAULT) {
          controller.setStyle(8, { palette: DIVERGING_DEFAULT });
        }
      }
      redraw();
    });
    tabBar.appendChild(btn);
  }

  $("connect").addEventListener("click", () => void connect());
  $("apply").addEventListener("click", () => void applyState());
  select("dataset").addEventListener("change", () => void refreshStocks());

  input("portee1").addEventListener("input", () => {
    input("portee1-num").value = input("portee1").value;
  });
  input("portee1-num").addEventListener("change", () => {
    input("portee1").value = input("portee1-num").value;
  });

  for (const id of ["palette", "progression", "classes"]) {
    $(id).addEventListener("change", () => {
      if (!controller) return;
      controller.setStyle(activeTab, {
        palette: select("palette").value,
        progression: select("progression").value as Progression,
        classes: parseInt(input("classes").value, 10),
      });
      redraw();
    });
  }

  $("zoom-in").addEventListener("click", () => zoom(0.5));
  $("zoom-out").addEventListener("click", () => zoom(2.0));
  $("pan-w").addEventListener("click", () => pan(-0.25, 0));
  $("pan-e").addEventListener("click", () => pan(0.25, 0));
  $("pan-n").addEventListener("click", () => pan(0, 0.25));
  $("pan-s").addEventListener("click", () => pan(0, -0.25));

  $("report-text").addEventListener("click", () => download("text"));
  $("report-html").addEventListener("click", () => download("html"));

  input("boundaries").addEventListener("change", () => {
    const file = input("boundaries").files?.[0];
    if (!file) return;
    void file.text().then((txt) => {
      try {
        boundaries = JSON.parse(txt);
        redraw();
      } catch {
        pushNotice("boundaries file is not valid JSON");
      }
    });
  });

  drawFrame($("map") as HTMLCanvasElement, viewportFromInputs());
};

if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", init);
}
