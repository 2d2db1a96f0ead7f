/** Deterministic SVG scatter/line figures: fixed size, fixed fonts,
 * no timestamps, no randomness, so identical input bytes yield
 * identical output bytes. */

export interface Figure {
  title: string;
  xLabel: string;
  yLabel: string;
  points: { x: number; y: number }[];
  line?: { slope: number; intercept: number } | null;
  connect?: boolean;
  annotations?: string[];
}

export const WIDTH = 800;
export const HEIGHT = 600;
const MARGIN = { left: 80, right: 24, top: 48, bottom: 64 };

function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(3);
  return v.toPrecision(5);
}

function fmtCoord(v: number): string {
  return v.toFixed(2);
}

function ticks(lo: number, hi: number, n = 5): number[] {
  if (!(hi > lo)) return [lo];
  const out: number[] = [];
  for (let i = 0; i < n; i++) out.push(lo + ((hi - lo) * i) / (n - 1));
  return out;
}

export function renderSvg(fig: Figure): string {
  const xs = fig.points.map((p) => p.x);
  const ys = fig.points.map((p) => p.y);
  let xLo = Math.min(...xs);
  let xHi = Math.max(...xs);
  let yLo = Math.min(...ys);
  let yHi = Math.max(...ys);
  if (!(xHi > xLo)) {
    xLo -= 0.5;
    xHi += 0.5;
  }
  if (!(yHi > yLo)) {
    yLo -= 0.5;
    yHi += 0.5;
  }
  const xPad = 0.05 * (xHi - xLo);
  const yPad = 0.08 * (yHi - yLo);
  xLo -= xPad;
  xHi += xPad;
  yLo -= yPad;
  yHi += yPad;

  const plotW = WIDTH - MARGIN.left - MARGIN.right;
  const plotH = HEIGHT - MARGIN.top - MARGIN.bottom;
  const sx = (x: number) => MARGIN.left + ((x - xLo) / (xHi - xLo)) * plotW;
  const sy = (y: number) => MARGIN.top + plotH - ((y - yLo) / (yHi - yLo)) * plotH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">`,
  );
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);
  parts.push(
    `<text x="${WIDTH / 2}" y="28" font-family="Helvetica" font-size="18" text-anchor="middle">${fig.title}</text>`,
  );
  // Axes frame.
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" height="${plotH}" fill="none" stroke="black" stroke-width="1"/>`,
  );
  for (const t of ticks(xLo + xPad, xHi - xPad)) {
    const px = fmtCoord(sx(t));
    parts.push(
      `<line x1="${px}" y1="${MARGIN.top + plotH}" x2="${px}" y2="${MARGIN.top + plotH + 6}" stroke="black"/>`,
    );
    parts.push(
      `<text x="${px}" y="${MARGIN.top + plotH + 22}" font-family="Helvetica" font-size="12" text-anchor="middle">${fmt(t)}</text>`,
    );
  }
  for (const t of ticks(yLo + yPad, yHi - yPad)) {
    const py = fmtCoord(sy(t));
    parts.push(`<line x1="${MARGIN.left - 6}" y1="${py}" x2="${MARGIN.left}" y2="${py}" stroke="black"/>`);
    parts.push(
      `<text x="${MARGIN.left - 10}" y="${py}" font-family="Helvetica" font-size="12" text-anchor="end" dominant-baseline="middle">${fmt(t)}</text>`,
    );
  }
  parts.push(
    `<text x="${MARGIN.left + plotW / 2}" y="${HEIGHT - 16}" font-family="Helvetica" font-size="14" text-anchor="middle">${fig.xLabel}</text>`,
  );
  parts.push(
    `<text x="20" y="${MARGIN.top + plotH / 2}" font-family="Helvetica" font-size="14" text-anchor="middle" transform="rotate(-90 20 ${MARGIN.top + plotH / 2})">${fig.yLabel}</text>`,
  );

  if (fig.connect && fig.points.length > 1) {
    const path = fig.points
      .map((p, i) => `${i === 0 ? "M" : "L"}${fmtCoord(sx(p.x))} ${fmtCoord(sy(p.y))}`)
      .join(" ");
    parts.push(`<path d="${path}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>`);
  }
  if (fig.line) {
    const y1 = fig.line.intercept + fig.line.slope * xLo;
    const y2 = fig.line.intercept + fig.line.slope * xHi;
    parts.push(
      `<line x1="${fmtCoord(sx(xLo))}" y1="${fmtCoord(sy(y1))}" x2="${fmtCoord(sx(xHi))}" y2="${fmtCoord(sy(y2))}" stroke="#d62728" stroke-width="1.5" stroke-dasharray="6 4"/>`,
    );
  }
  for (const p of fig.points) {
    parts.push(`<circle cx="${fmtCoord(sx(p.x))}" cy="${fmtCoord(sy(p.y))}" r="3.5" fill="#1f77b4"/>`);
  }
  (fig.annotations ?? []).forEach((text, i) => {
    parts.push(
      `<text x="${MARGIN.left + 12}" y="${MARGIN.top + 20 + 18 * i}" font-family="Helvetica" font-size="13" fill="#333333">${text}</text>`,
    );
  });
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
