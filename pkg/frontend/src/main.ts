/** DOM wiring for the trajectory editor. One session per tab; all
 * mutations await the service; the canvas redraws from store state. */

import { ServiceClient } from "./api.js";
import { renderOverlay } from "./overlay.js";
import { SessionStore } from "./state.js";
import type { Vec2 } from "./types.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el as T;
};

const canvas = $<HTMLCanvasElement>("editor-canvas");
const scrubber = $<HTMLInputElement>("scrubber");
const frameLabel = $<HTMLSpanElement>("frame-label");
const toastBox = $<HTMLDivElement>("toasts");
const previewSource = $<HTMLImageElement>("preview-source");
const previewTarget = $<HTMLImageElement>("preview-target");
const resultPane = $<HTMLImageElement>("result-frame");

let store: SessionStore | null = null;
let client: ServiceClient;
let mode: "select" | "add-point" = "select";
let draggingHandle: number | null = null;
let shownToasts = 0;

function toast(message: string): void {
  const el = document.createElement("div");
  el.className = "toast";
  el.textContent = message;
  toastBox.appendChild(el);
  setTimeout(() => el.remove(), 4000);
}

function drainStoreToasts(): void {
  if (!store) return;
  while (shownToasts < store.toasts.length) {
    toast(store.toasts[shownToasts]);
    shownToasts += 1;
  }
}

function canvasToClip(ev: MouseEvent): Vec2 {
  if (!store) return [0, 0];
  const rect = canvas.getBoundingClientRect();
  const sx = ((ev.clientX - rect.left) / rect.width) * store.info.width;
  const sy = ((ev.clientY - rect.top) / rect.height) * store.info.height;
  const { zoom, pan } = store.view;
  return [(sx - pan[0]) / zoom, (sy - pan[1]) / zoom];
}

function redraw(): void {
  if (!store) return;
  const dpr = window.devicePixelRatio || 1;
  const rect = canvas.getBoundingClientRect();
  canvas.width = Math.round(rect.width * dpr);
  canvas.height = Math.round(rect.height * dpr);
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const scale = (canvas.width / store.info.width) || 1;
  ctx.setTransform(scale, 0, 0, scale, 0, 0);

  const frameImg = new Image();
  frameImg.onload = () => {
    if (!store || !ctx) return;
    ctx.drawImage(frameImg, 0, 0, store.info.width, store.info.height);
    renderOverlay(ctx, store.source, store.target, store.view);
  };
  frameImg.src = client.frameUrl(store.sid, store.view.frame);

  frameLabel.textContent = `${store.view.frame} / ${store.info.frames - 1}`;
  scrubber.max = String(store.info.frames - 1);
  scrubber.value = String(store.view.frame);
  drainStoreToasts();
}

function refreshPreviews(): void {
  if (!store || store.source.length === 0) return;
  previewSource.src = client.previewUrl(store.sid, store.view.frame, "source");
  previewTarget.src = client.previewUrl(store.sid, store.view.frame, "target");
}

function handleAt(pos: Vec2): number | null {
  if (!store?.view.handles) return null;
  const grab = 10 / store.view.zoom;
  for (let i = 0; i < store.view.handles.length; i++) {
    const h = store.view.handles[i];
    if (Math.abs(h[0] - pos[0]) <= grab && Math.abs(h[1] - pos[1]) <= grab) return i;
  }
  return null;
}

function trackAt(pos: Vec2): number | null {
  if (!store) return null;
  const f = store.view.frame;
  let best: number | null = null;
  let bestDist = 12 / store.view.zoom;
  for (const t of store.target) {
    const d = Math.hypot(t.xy[f][0] - pos[0], t.xy[f][1] - pos[1]);
    if (d < bestDist) {
      best = t.id;
      bestDist = d;
    }
  }
  return best;
}

canvas.addEventListener("mousedown", (ev) => {
  if (!store) return;
  const pos = canvasToClip(ev);
  if (mode === "add-point") {
    void store
      .addPoint(store.view.frame, pos[0], pos[1])
      .then(() => {
        redraw();
        refreshPreviews();
      })
      .catch((err) => toast(String(err)));
    return;
  }
  const handle = handleAt(pos);
  if (handle !== null) {
    draggingHandle = handle;
    return;
  }
  store.selectTrack(trackAt(pos));
  redraw();
});

canvas.addEventListener("mousemove", (ev) => {
  if (!store || draggingHandle === null || !store.view.handles) return;
  store.view.handles[draggingHandle] = canvasToClip(ev);
  redraw();
});

canvas.addEventListener("mouseup", (ev) => {
  if (!store || draggingHandle === null) return;
  const index = draggingHandle;
  draggingHandle = null;
  void store
    .dragHandle(index, canvasToClip(ev))
    .then(() => {
      redraw();
      refreshPreviews();
    })
    .catch((err) => toast(String(err)));
});

scrubber.addEventListener("input", () => {
  store?.setFrame(Number(scrubber.value));
  redraw();
  refreshPreviews();
});

$<HTMLButtonElement>("btn-add-point").addEventListener("click", (ev) => {
  mode = mode === "add-point" ? "select" : "add-point";
  (ev.target as HTMLButtonElement).classList.toggle("active", mode === "add-point");
});

$<HTMLButtonElement>("btn-visibility").addEventListener("click", () => {
  if (!store || store.view.selected === null) return toast("select a track first");
  const track = store.targetById(store.view.selected);
  const f = store.view.frame;
  void store
    .toggleVisibility(store.view.selected, [f], !track.visible[f])
    .then(() => redraw());
});

$<HTMLButtonElement>("btn-undo").addEventListener("click", () => {
  void store?.undo().then(() => {
    redraw();
    refreshPreviews();
  });
});

$<HTMLButtonElement>("btn-redo").addEventListener("click", () => {
  void store?.redo().then(() => {
    redraw();
    refreshPreviews();
  });
});

$<HTMLButtonElement>("btn-export").addEventListener("click", () => {
  if (!store) return;
  void store
    .exportBundle(true, 0)
    .then((r) => toast(`bundle written to ${r.bundle_dir}`))
    .catch((err) => toast(String(err)));
});

$<HTMLButtonElement>("btn-generate").addEventListener("click", () => {
  if (!store) return;
  const poll = setInterval(() => {
    if (store?.pending) toast("generating...");
  }, 2000);
  void store
    .generate(0)
    .then(async (index) => {
      toast(`generated clip #${index}`);
      const r = await store!.client.iterate(store!.sid, index);
      resultPane.src = client.frameUrl(r.session_id, 0);
      $<HTMLSpanElement>("iterate-hint").textContent =
        `result loaded as session ${r.session_id} (use Load Session to edit it)`;
    })
    .catch((err) => toast(String(err)))
    .finally(() => clearInterval(poll));
});

$<HTMLButtonElement>("btn-open").addEventListener("click", () => {
  const base = $<HTMLInputElement>("service-url").value.replace(/\/$/, "");
  const clipDir = $<HTMLInputElement>("clip-dir").value;
  const sessionId = $<HTMLInputElement>("session-id").value;
  client = new ServiceClient(base);
  const ready = sessionId
    ? SessionStore.open(client, sessionId)
    : SessionStore.create(client, clipDir, $<HTMLInputElement>("prompt").value);
  void ready
    .then((s) => {
      store = s;
      shownToasts = 0;
      toast(`session ${s.sid}: ${s.info.frames} frames ${s.info.width}x${s.info.height}`);
      redraw();
      refreshPreviews();
    })
    .catch((err) => toast(String(err)));
});

for (const key of ["source", "target", "arrows"] as const) {
  $<HTMLInputElement>(`toggle-${key}`).addEventListener("change", (ev) => {
    if (!store) return;
    store.view.overlays[key] = (ev.target as HTMLInputElement).checked;
    redraw();
  });
}

window.addEventListener("resize", redraw);
