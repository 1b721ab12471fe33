/**
 * Hand-rolled SVG chart primitives: a margined coordinate frame, nice
 * ticks, and shape builders. No DOM, no chart library; every figure is
 * assembled from these strings and stays fully self-contained.
 */

export const COLORS = {
  blue: "#4361ee",
  red: "#e63946",
  green: "#2d6a4f",
  orange: "#f77f00",
  gray: "#888888",
  grid: "#e4e4e4",
};

export function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function fmtTick(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e6 || a < 0.001) return v.toExponential(1);
  if (Number.isInteger(v)) return String(v);
  return String(parseFloat(v.toPrecision(3)));
}

/** Tick positions at a round step (1/2/5 x 10^k) covering [min, max]. */
export function niceTicks(min: number, max: number, count = 5): number[] {
  const range = max - min || 1;
  const rough = range / count;
  const mag = Math.pow(10, Math.floor(Math.log10(rough)));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => s >= rough) ?? rough;
  const ticks: number[] = [];
  for (let v = Math.ceil(min / step) * step; v <= max + step * 1e-9; v += step) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return ticks;
}

/** Data extent with a little margin so points stay off the frame edge. */
export function extentPad(values: number[], frac = 0.04): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (!Number.isFinite(lo)) {
    throw new Error("extentPad of empty list");
  }
  const pad = (hi - lo) * frac || Math.abs(lo) * frac || 0.5;
  return [lo - pad, hi + pad];
}

export interface PlotArea {
  W: number;
  H: number;
  ml: number;
  mr: number;
  mt: number;
  mb: number;
  pw: number;
  ph: number;
  xMin: number;
  xMax: number;
  yMin: number;
  yMax: number;
  xOf: (v: number) => number;
  yOf: (v: number) => number;
}

export interface AreaOpts {
  width?: number;
  height?: number;
  ml?: number;
  mr?: number;
  mt?: number;
  mb?: number;
  xDomain: [number, number];
  yDomain: [number, number];
}

export function plotArea(opts: AreaOpts): PlotArea {
  const W = opts.width ?? 680;
  const H = opts.height ?? 340;
  const ml = opts.ml ?? 62;
  const mr = opts.mr ?? 24;
  const mt = opts.mt ?? 34;
  const mb = opts.mb ?? 48;
  const pw = W - ml - mr;
  const ph = H - mt - mb;
  let [xMin, xMax] = opts.xDomain;
  let [yMin, yMax] = opts.yDomain;
  // a flat domain would collapse the scale, pad it symmetrically
  if (xMax - xMin <= 0) {
    const pad = Math.abs(xMin) * 0.05 || 0.5;
    xMin -= pad;
    xMax += pad;
  }
  if (yMax - yMin <= 0) {
    const pad = Math.abs(yMin) * 0.05 || 0.5;
    yMin -= pad;
    yMax += pad;
  }
  return {
    W, H, ml, mr, mt, mb, pw, ph, xMin, xMax, yMin, yMax,
    xOf: (v) => ml + ((v - xMin) / (xMax - xMin)) * pw,
    yOf: (v) => mt + ph - ((v - yMin) / (yMax - yMin)) * ph,
  };
}

export interface FrameOpts {
  title: string;
  xLabel: string;
  yLabel: string;
  xTicks?: number[];
  yTicks?: number[];
  xFmt?: (v: number) => string;
  yFmt?: (v: number) => string;
}

const F = (v: number) => v.toFixed(2);

/** Background, gridlines, tick labels, axis labels, title, border. */
export function frameSvg(a: PlotArea, opts: FrameOpts): string {
  const xTicks = opts.xTicks ?? niceTicks(a.xMin, a.xMax, 6);
  const yTicks = opts.yTicks ?? niceTicks(a.yMin, a.yMax, 5);
  const xFmt = opts.xFmt ?? fmtTick;
  const yFmt = opts.yFmt ?? fmtTick;
  const parts: string[] = [];
  parts.push(`<rect x="0" y="0" width="${a.W}" height="${a.H}" fill="#ffffff"/>`);
  for (const t of yTicks) {
    if (t < a.yMin - 1e-12 || t > a.yMax + 1e-12) continue;
    const y = F(a.yOf(t));
    parts.push(`<line x1="${a.ml}" y1="${y}" x2="${a.ml + a.pw}" y2="${y}" stroke="${COLORS.grid}"/>`);
    parts.push(
      `<text x="${a.ml - 7}" y="${y}" font-size="10" text-anchor="end" dominant-baseline="middle" fill="#444">${esc(yFmt(t))}</text>`
    );
  }
  for (const t of xTicks) {
    if (t < a.xMin - 1e-12 || t > a.xMax + 1e-12) continue;
    const x = F(a.xOf(t));
    parts.push(`<line x1="${x}" y1="${a.mt}" x2="${x}" y2="${a.mt + a.ph}" stroke="${COLORS.grid}"/>`);
    parts.push(
      `<text x="${x}" y="${a.mt + a.ph + 15}" font-size="10" text-anchor="middle" fill="#444">${esc(xFmt(t))}</text>`
    );
  }
  parts.push(
    `<rect x="${a.ml}" y="${a.mt}" width="${a.pw}" height="${a.ph}" fill="none" stroke="#555" stroke-width="1"/>`
  );
  parts.push(
    `<text x="${a.W / 2}" y="${a.mt - 14}" font-size="13" font-weight="bold" text-anchor="middle" fill="#222">${esc(opts.title)}</text>`
  );
  parts.push(
    `<text x="${a.ml + a.pw / 2}" y="${a.H - 12}" font-size="11" text-anchor="middle" fill="#333">${esc(opts.xLabel)}</text>`
  );
  parts.push(
    `<text x="16" y="${a.mt + a.ph / 2}" font-size="11" text-anchor="middle" fill="#333" transform="rotate(-90 16 ${a.mt + a.ph / 2})">${esc(opts.yLabel)}</text>`
  );
  return parts.join("\n");
}

export function polylineSvg(
  a: PlotArea,
  pts: Array<[number, number]>,
  style: { color: string; width?: number; dash?: string; opacity?: number }
): string {
  const points = pts.map(([x, y]) => `${F(a.xOf(x))},${F(a.yOf(y))}`).join(" ");
  const dash = style.dash ? ` stroke-dasharray="${style.dash}"` : "";
  const op = style.opacity !== undefined ? ` opacity="${style.opacity}"` : "";
  return `<polyline points="${points}" fill="none" stroke="${style.color}" stroke-width="${style.width ?? 1.4}"${dash}${op}/>`;
}

export function circleSvg(a: PlotArea, x: number, y: number, r: number, color: string, opacity = 1): string {
  return `<circle cx="${F(a.xOf(x))}" cy="${F(a.yOf(y))}" r="${r}" fill="${color}" opacity="${opacity}"/>`;
}

export function rectSvg(
  a: PlotArea,
  x0: number,
  y0: number,
  x1: number,
  y1: number,
  style: { fill?: string; stroke?: string; opacity?: number }
): string {
  const X0 = a.xOf(Math.min(x0, x1));
  const X1 = a.xOf(Math.max(x0, x1));
  const Y0 = a.yOf(Math.max(y0, y1));
  const Y1 = a.yOf(Math.min(y0, y1));
  const fill = style.fill ?? "none";
  const stroke = style.stroke ? ` stroke="${style.stroke}"` : "";
  const op = style.opacity !== undefined ? ` opacity="${style.opacity}"` : "";
  return `<rect x="${F(X0)}" y="${F(Y0)}" width="${F(X1 - X0)}" height="${F(Y1 - Y0)}" fill="${fill}"${stroke}${op}/>`;
}

export interface LegendEntry {
  label: string;
  color: string;
  dash?: string;
}

/** Small legend box anchored to the top-right corner of the plot area. */
export function legendSvg(a: PlotArea, entries: LegendEntry[]): string {
  const lw = 150;
  const x = a.ml + a.pw - lw - 8;
  const parts: string[] = [];
  parts.push(
    `<rect x="${x}" y="${a.mt + 6}" width="${lw}" height="${entries.length * 16 + 8}" fill="#ffffff" opacity="0.85" stroke="#ccc"/>`
  );
  entries.forEach((e, i) => {
    const y = a.mt + 18 + i * 16;
    const dash = e.dash ? ` stroke-dasharray="${e.dash}"` : "";
    parts.push(`<line x1="${x + 6}" y1="${y}" x2="${x + 26}" y2="${y}" stroke="${e.color}" stroke-width="2"${dash}/>`);
    parts.push(`<text x="${x + 31}" y="${y + 3}" font-size="10" fill="#333">${esc(e.label)}</text>`);
  });
  return parts.join("\n");
}

export function svgDoc(W: number, H: number, body: string): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" viewBox="0 0 ${W} ${H}" font-family="Helvetica, Arial, sans-serif">\n` +
    body +
    `\n</svg>\n`
  );
}
