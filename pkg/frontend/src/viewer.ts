// Orthographic orbit viewer on a plain 2D canvas: project, depth-sort,
// flat-shade. Cut primitives draw translucent so subtractions stay
// readable. No WebGL dependency, so it also runs under DOM simulators
// (where painting is skipped if no 2d context exists).

import { ObjModel } from "./obj.js";

export interface OrbitState {
  azimuthDeg: number;
  elevationDeg: number;
}

export interface ProjectedTri {
  xs: [number, number, number];
  ys: [number, number, number];
  depth: number;
  shade: number; // 0..1 lambert term
  cut: boolean;
}

const LIGHT = normalize([0.5, 0.35, 0.79]);

function normalize(v: number[]): number[] {
  const n = Math.hypot(v[0], v[1], v[2]) || 1;
  return [v[0] / n, v[1] / n, v[2] / n];
}

export function viewBasis(state: OrbitState) {
  const az = (state.azimuthDeg * Math.PI) / 180;
  const el = (state.elevationDeg * Math.PI) / 180;
  const forward = [-Math.cos(el) * Math.cos(az), -Math.cos(el) * Math.sin(az), -Math.sin(el)];
  const right = [-Math.sin(az), Math.cos(az), 0];
  const up = [
    right[1] * forward[2] - right[2] * forward[1],
    right[2] * forward[0] - right[0] * forward[2],
    right[0] * forward[1] - right[1] * forward[0],
  ];
  return { right, up, forward };
}

export function projectModel(
  model: ObjModel,
  state: OrbitState,
  width: number,
  height: number,
  margin = 0.1,
): ProjectedTri[] {
  const { right, up, forward } = viewBasis(state);
  const n = model.positions.length / 3;
  if (n === 0) return [];
  const sx = new Float64Array(n);
  const sy = new Float64Array(n);
  const sz = new Float64Array(n);
  let minX = Infinity, maxX = -Infinity, minY = Infinity, maxY = -Infinity;
  for (let i = 0; i < n; i++) {
    const x = model.positions[3 * i];
    const y = model.positions[3 * i + 1];
    const z = model.positions[3 * i + 2];
    sx[i] = right[0] * x + right[1] * y + right[2] * z;
    sy[i] = up[0] * x + up[1] * y + up[2] * z;
    sz[i] = forward[0] * x + forward[1] * y + forward[2] * z;
    if (sx[i] < minX) minX = sx[i];
    if (sx[i] > maxX) maxX = sx[i];
    if (sy[i] < minY) minY = sy[i];
    if (sy[i] > maxY) maxY = sy[i];
  }
  const span = Math.max(maxX - minX, maxY - minY, 1e-12);
  const usable = (1 - 2 * margin) * Math.min(width, height);
  const scale = usable / span;
  const cx = (minX + maxX) / 2;
  const cy = (minY + maxY) / 2;

  const tris: ProjectedTri[] = [];
  for (const group of model.groups) {
    for (const [a, b, c] of group.faces) {
      // face normal in world space for shading
      const ax = model.positions[3 * a], ay = model.positions[3 * a + 1], az = model.positions[3 * a + 2];
      const bx = model.positions[3 * b], by = model.positions[3 * b + 1], bz = model.positions[3 * b + 2];
      const cxw = model.positions[3 * c], cyw = model.positions[3 * c + 1], czw = model.positions[3 * c + 2];
      const ux = bx - ax, uy = by - ay, uz = bz - az;
      const vx = cxw - ax, vy = cyw - ay, vz = czw - az;
      const nx = uy * vz - uz * vy;
      const ny = uz * vx - ux * vz;
      const nz = ux * vy - uy * vx;
      const nn = Math.hypot(nx, ny, nz);
      if (nn < 1e-15) continue;
      const lambert = Math.abs((nx * LIGHT[0] + ny * LIGHT[1] + nz * LIGHT[2]) / nn);
      tris.push({
        xs: [
          (sx[a] - cx) * scale + width / 2,
          (sx[b] - cx) * scale + width / 2,
          (sx[c] - cx) * scale + width / 2,
        ],
        ys: [
          height / 2 - (sy[a] - cy) * scale,
          height / 2 - (sy[b] - cy) * scale,
          height / 2 - (sy[c] - cy) * scale,
        ],
        depth: (sz[a] + sz[b] + sz[c]) / 3,
        shade: 0.35 + 0.65 * lambert,
        cut: group.cut,
      });
    }
  }
  // painter's algorithm: far (small forward coordinate) first
  tris.sort((p, q) => p.depth - q.depth);
  return tris;
}

function fill(ctx: CanvasRenderingContext2D, tri: ProjectedTri) {
  const base: [number, number, number] = tri.cut ? [204, 94, 86] : [86, 118, 196];
  const rgb = base.map((v) => Math.round(v * tri.shade));
  ctx.globalAlpha = tri.cut ? 0.45 : 1.0;
  ctx.fillStyle = `rgb(${rgb[0]},${rgb[1]},${rgb[2]})`;
  ctx.beginPath();
  ctx.moveTo(tri.xs[0], tri.ys[0]);
  ctx.lineTo(tri.xs[1], tri.ys[1]);
  ctx.lineTo(tri.xs[2], tri.ys[2]);
  ctx.closePath();
  ctx.fill();
}

export class Viewer {
  state: OrbitState = { azimuthDeg: 45, elevationDeg: 35.264 };
  private model: ObjModel | null = null;
  private dragging = false;
  private lastX = 0;
  private lastY = 0;

  constructor(public canvas: HTMLCanvasElement) {
    canvas.addEventListener("pointerdown", (ev) => {
      this.dragging = true;
      this.lastX = ev.clientX;
      this.lastY = ev.clientY;
    });
    canvas.addEventListener("pointermove", (ev) => {
      if (!this.dragging) return;
      this.state.azimuthDeg += (ev.clientX - this.lastX) * 0.5;
      this.state.elevationDeg = Math.max(-89, Math.min(89, this.state.elevationDeg + (ev.clientY - this.lastY) * 0.5));
      this.lastX = ev.clientX;
      this.lastY = ev.clientY;
      this.draw();
    });
    const stop = () => (this.dragging = false);
    canvas.addEventListener("pointerup", stop);
    canvas.addEventListener("pointerleave", stop);
  }

  setModel(model: ObjModel | null) {
    this.model = model;
    this.draw();
  }

  draw() {
    const ctx = this.canvas.getContext ? this.canvas.getContext("2d") : null;
    if (!ctx) {
      this.canvas.dataset.rendered = this.model ? "headless" : "empty";
      return;
    }
    const { width, height } = this.canvas;
    ctx.globalAlpha = 1;
    ctx.fillStyle = "#f2f2f2";
    ctx.fillRect(0, 0, width, height);
    if (!this.model) return;
    for (const tri of projectModel(this.model, this.state, width, height)) {
      fill(ctx, tri);
    }
    ctx.globalAlpha = 1;
    this.canvas.dataset.rendered = "ok";
  }
}
