/** Figure assembly per plot kind.
 *
 * Fit lines are drawn from the CSV's own fit columns (gamma_fit,
 * intercept, residual) and are never recomputed here: the experiment
 * runner is the single source of numerical truth.
 */

import { fitColumn, loadCsv, requireColumns, Table } from "./csv.js";
import { AxisTransform, PlotSpec, SchemaError } from "./spec.js";
import { Figure, renderSvg } from "./svg.js";

const FIT_LINE_MIN_POINTS = 4;

interface KindConfig {
  xColumn: string;
  yColumn: string;
  xTransform: AxisTransform;
  yTransform: AxisTransform;
  title: string;
  connect: boolean;
  fitLine: boolean;
  extraColumns: string[];
}

const KINDS: Record<string, KindConfig> = {
  "weakholder-fit": {
    xColumn: "epsilon",
    yColumn: "deviation",
    xTransform: "lnln",
    yTransform: "lnln",
    title: "Exponent deviation vs perturbation size",
    connect: false,
    fitLine: true,
    extraColumns: ["gamma_fit", "intercept", "residual"],
  },
  "ldt-decay": {
    xColumn: "N",
    yColumn: "measure",
    xTransform: "linear",
    yTransform: "linear",
    title: "Deviation-set mass vs scale",
    connect: true,
    fitLine: false,
    extraColumns: [],
  },
  "ids-scan": {
    xColumn: "h",
    yColumn: "k_value",
    xTransform: "lnln",
    yTransform: "lnln",
    title: "Spectral window mass vs half-width",
    connect: false,
    fitLine: true,
    extraColumns: ["gamma_fit", "residual"],
  },
  "thouless-gap": {
    xColumn: "N",
    yColumn: "gap",
    xTransform: "linear",
    yTransform: "log",
    title: "Thouless reconstruction gap vs scale",
    connect: true,
    fitLine: false,
    extraColumns: [],
  },
};

function applyTransform(value: number, transform: AxisTransform): number | null {
  switch (transform) {
    case "linear":
      return value;
    case "log":
      return value > 0 ? Math.log(value) : null;
    case "lnln": {
      if (!(value > 0 && value < 1)) return null;
      return Math.log(-Math.log(value));
    }
  }
}

function transformLabel(column: string, transform: AxisTransform): string {
  switch (transform) {
    case "linear":
      return column;
    case "log":
      return `ln ${column}`;
    case "lnln":
      return `ln(-ln ${column})`;
  }
}

export interface RenderResult {
  svg: string;
  plotted: number;
  dropped: number;
}

export function buildFigure(spec: PlotSpec, table: Table): RenderResult {
  const cfg = KINDS[spec.kind];
  requireColumns(table, [cfg.xColumn, cfg.yColumn], spec.input);
  const xT = spec.transforms?.x ?? cfg.xTransform;
  const yT = spec.transforms?.y ?? cfg.yTransform;

  const points: { x: number; y: number }[] = [];
  let dropped = 0;
  for (const row of table.rows) {
    const xRaw = Number(row[cfg.xColumn]);
    const yRaw = Number(row[cfg.yColumn]);
    if (!Number.isFinite(xRaw) || !Number.isFinite(yRaw)) {
      dropped += 1;
      continue;
    }
    const x = applyTransform(xRaw, xT);
    const y = applyTransform(yRaw, yT);
    if (x === null || y === null) {
      dropped += 1;
      continue;
    }
    points.push({ x, y });
  }
  if (points.length === 0) {
    throw new SchemaError(
      `CSV ${spec.input}: no rows survive the ${xT}/${yT} axis transforms (${dropped} dropped)`,
    );
  }
  points.sort((a, b) => a.x - b.x || a.y - b.y);

  const annotations: string[] = [];
  let line: Figure["line"] = null;
  if (cfg.fitLine) {
    const gamma = fitColumn(table, "gamma_fit");
    const intercept = fitColumn(table, "intercept");
    const residual = fitColumn(table, "residual");
    if (gamma !== null && points.length >= FIT_LINE_MIN_POINTS) {
      if (intercept !== null) {
        line = { slope: gamma, intercept };
      }
      annotations.push(
        `gamma_fit = ${gamma.toPrecision(6)}` +
          (residual !== null ? `, residual = ${residual.toPrecision(4)}` : ""),
      );
    }
  }
  if (dropped > 0) {
    annotations.push(`${dropped} row${dropped === 1 ? "" : "s"} dropped by axis transforms`);
  }

  const fig: Figure = {
    title: cfg.title,
    xLabel: transformLabel(cfg.xColumn, xT),
    yLabel: transformLabel(cfg.yColumn, yT),
    points,
    line,
    connect: cfg.connect,
    annotations,
  };
  return { svg: renderSvg(fig), plotted: points.length, dropped };
}

export function render(spec: PlotSpec): RenderResult {
  const table = loadCsv(spec.input);
  return buildFigure(spec, table);
}
