/**
 * SVG scene builder for layout snapshots.
 *
 * Input is the geometry block of a layout document, straight off the wire.
 * Grid cells map to fixed-size squares; row 0 is drawn at the bottom so the
 * picture matches the coordinate system the command language talks about.
 */
import type { Geometry, DeviceRect, WirePath } from "./types.js";

export const CELL = 10;
const NS = "http://www.w3.org/2000/svg";

export function svgEl<T extends keyof SVGElementTagNameMap>(
  tag: T,
  attrs: Record<string, string | number> = {},
): SVGElementTagNameMap[T] {
  const el = document.createElementNS(NS, tag);
  for (const [k, v] of Object.entries(attrs)) el.setAttribute(k, String(v));
  return el;
}

/** Stable color per net name so wires keep their color across snapshots. */
export function netColor(net: string): string {
  let h = 0;
  for (let i = 0; i < net.length; i++) h = (h * 31 + net.charCodeAt(i)) >>> 0;
  return `hsl(${h % 360} 70% 42%)`;
}

export class BadGeometryError extends Error {}

function checkGeometry(g: unknown): asserts g is Geometry {
  const d = g as Geometry | null;
  if (!d || typeof d !== "object") throw new BadGeometryError("no geometry block");
  if (
    !d.grid ||
    typeof d.grid.width !== "number" ||
    typeof d.grid.height !== "number" ||
    d.grid.width <= 0 ||
    d.grid.height <= 0
  )
    throw new BadGeometryError("grid dimensions missing");
  for (const key of ["devices", "wires", "sym_axes"] as const) {
    if (!Array.isArray(d[key])) throw new BadGeometryError(`${key} is not a list`);
  }
}

export interface ViewBox {
  x: number;
  y: number;
  w: number;
  h: number;
}

export function zoomViewBox(vb: ViewBox, factor: number, cx: number, cy: number): ViewBox {
  // keep the point under the cursor fixed while scaling
  const w = vb.w * factor;
  const h = vb.h * factor;
  return {
    x: cx - (cx - vb.x) * factor,
    y: cy - (cy - vb.y) * factor,
    w,
    h,
  };
}

export function panViewBox(vb: ViewBox, dx: number, dy: number): ViewBox {
  return { x: vb.x + dx, y: vb.y + dy, w: vb.w, h: vb.h };
}

export function applyViewBox(svg: SVGSVGElement, vb: ViewBox): void {
  svg.setAttribute("viewBox", `${vb.x} ${vb.y} ${vb.w} ${vb.h}`);
}

function deviceTitle(d: DeviceRect): string {
  const pins = d.pins.map((p) => `${p.terminal}@(${p.x},${p.y})`).join(" ");
  return `${d.name}  origin (${d.x},${d.y})  size ${d.w}x${d.h}  ${d.orientation}\npins: ${pins}`;
}

function wireTitle(w: WirePath): string {
  return `${w.net} wire${w.index}  layer ${w.layer}  width ${w.width}${w.routed ? "" : "  (unrouted)"}`;
}

export interface RenderOptions {
  /** device names drawn with the changed style (diff view) */
  highlight?: Set<string>;
}

/**
 * Build the full scene. Throws BadGeometryError on a malformed document;
 * callers that want the banner instead use renderInto.
 */
export function renderScene(geometry: unknown, opts: RenderOptions = {}): SVGSVGElement {
  checkGeometry(geometry);
  const g = geometry;
  const W = g.grid.width * CELL;
  const H = g.grid.height * CELL;
  const flipY = (y: number) => H - y;

  const svg = svgEl("svg", {
    class: "layout-scene",
    viewBox: `0 0 ${W} ${H}`,
    preserveAspectRatio: "xMidYMid meet",
  });
  svg.appendChild(svgEl("rect", { x: 0, y: 0, width: W, height: H, class: "scene-bg" }));

  const grid = svgEl("g", { class: "grid" });
  for (let x = 0; x <= g.grid.width; x++) {
    grid.appendChild(svgEl("line", { x1: x * CELL, y1: 0, x2: x * CELL, y2: H }));
  }
  for (let y = 0; y <= g.grid.height; y++) {
    grid.appendChild(svgEl("line", { x1: 0, y1: y * CELL, x2: W, y2: y * CELL }));
  }
  svg.appendChild(grid);

  const wires = svgEl("g", { class: "wires" });
  for (const w of g.wires) {
    if (!w.path.length) continue;
    const pts = w.path
      .map(([x, y]) => `${(x + 0.5) * CELL},${flipY((y + 0.5) * CELL)}`)
      .join(" ");
    const line = svgEl("polyline", {
      class: `wire layer-${w.layer}`,
      points: pts,
      fill: "none",
      stroke: netColor(w.net),
      "stroke-width": Math.max(2, w.width * 3),
      "stroke-linecap": "round",
      "stroke-linejoin": "round",
      opacity: w.layer === 2 ? 0.65 : 0.9,
      "data-net": w.net,
    });
    const t = svgEl("title");
    t.textContent = wireTitle(w);
    line.appendChild(t);
    wires.appendChild(line);
  }
  svg.appendChild(wires);

  const devs = svgEl("g", { class: "devices" });
  for (const d of g.devices) {
    const changed = opts.highlight?.has(d.name) ?? false;
    const group = svgEl("g", {
      class: changed ? "device changed" : "device",
      "data-name": d.name,
    });
    const rect = svgEl("rect", {
      x: d.x * CELL,
      y: flipY((d.y + d.h) * CELL),
      width: d.w * CELL,
      height: d.h * CELL,
      rx: 1.5,
    });
    const t = svgEl("title");
    t.textContent = deviceTitle(d);
    rect.appendChild(t);
    group.appendChild(rect);
    for (const p of d.pins) {
      group.appendChild(
        svgEl("circle", {
          class: "pin",
          cx: (p.x + 0.5) * CELL,
          cy: flipY((p.y + 0.5) * CELL),
          r: CELL * 0.18,
        }),
      );
    }
    const label = svgEl("text", {
      x: (d.x + d.w / 2) * CELL,
      y: flipY((d.y + d.h / 2) * CELL),
      "text-anchor": "middle",
      "dominant-baseline": "middle",
      "font-size": Math.min(12, d.w * CELL * 0.4),
    });
    label.textContent = d.name;
    group.appendChild(label);
    devs.appendChild(group);
  }
  svg.appendChild(devs);

  const axes = svgEl("g", { class: "axes" });
  for (const ax of g.sym_axes) {
    const x = (ax.axis2 / 2) * CELL;
    const line = svgEl("line", {
      class: "sym-axis",
      x1: x,
      y1: 0,
      x2: x,
      y2: H,
      "stroke-dasharray": "6 4",
      "data-pair": `${ax.a}/${ax.b}`,
    });
    const t = svgEl("title");
    t.textContent =
      ax.a === ax.b ? `self symmetry: ${ax.a}` : `symmetry: ${ax.a} / ${ax.b}`;
    line.appendChild(t);
    axes.appendChild(line);
  }
  svg.appendChild(axes);

  return svg;
}

/**
 * Replace host content with the rendered scene, or with an error banner when
 * the document is malformed. Returns the svg element, or null on error.
 */
export function renderInto(
  host: HTMLElement,
  geometry: unknown,
  opts: RenderOptions = {},
): SVGSVGElement | null {
  host.textContent = "";
  let svg: SVGSVGElement;
  try {
    svg = renderScene(geometry, opts);
  } catch (err) {
    const banner = document.createElement("div");
    banner.className = "render-error";
    banner.textContent = `cannot render snapshot: ${err instanceof Error ? err.message : err}`;
    host.appendChild(banner);
    return null;
  }
  host.appendChild(svg);
  return svg;
}

/** Wire up wheel zoom and pointer-drag pan on a rendered scene. */
export function attachPanZoom(svg: SVGSVGElement): void {
  const base = svg.getAttribute("viewBox")!.split(" ").map(Number) as [
    number,
    number,
    number,
    number,
  ];
  let vb: ViewBox = { x: base[0], y: base[1], w: base[2], h: base[3] };
  let dragging = false;
  let last: { x: number; y: number } | null = null;

  svg.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    const factor = ev.deltaY > 0 ? 1.15 : 1 / 1.15;
    // map client coords into viewBox space via bounding box proportions
    const box = svg.getBoundingClientRect();
    const cx = vb.x + ((ev.clientX - box.left) / (box.width || 1)) * vb.w;
    const cy = vb.y + ((ev.clientY - box.top) / (box.height || 1)) * vb.h;
    vb = zoomViewBox(vb, factor, cx, cy);
    applyViewBox(svg, vb);
  });
  svg.addEventListener("pointerdown", (ev) => {
    dragging = true;
    last = { x: ev.clientX, y: ev.clientY };
  });
  svg.addEventListener("pointermove", (ev) => {
    if (!dragging || !last) return;
    const box = svg.getBoundingClientRect();
    const sx = vb.w / (box.width || 1);
    const sy = vb.h / (box.height || 1);
    vb = panViewBox(vb, -(ev.clientX - last.x) * sx, -(ev.clientY - last.y) * sy);
    last = { x: ev.clientX, y: ev.clientY };
    applyViewBox(svg, vb);
  });
  const stop = () => {
    dragging = false;
    last = null;
  };
  svg.addEventListener("pointerup", stop);
  svg.addEventListener("pointerleave", stop);
}
