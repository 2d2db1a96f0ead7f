/** Plot request: which CSV, which figure, where to write the SVG. */

export const PLOT_KINDS = ["weakholder-fit", "ldt-decay", "ids-scan", "thouless-gap"] as const;
export type PlotKind = (typeof PLOT_KINDS)[number];

export type AxisTransform = "linear" | "log" | "lnln";

export interface PlotSpec {
  input: string;
  kind: PlotKind;
  output: string;
  transforms?: { x?: AxisTransform; y?: AxisTransform };
}

export class SchemaError extends Error {}

const TRANSFORMS: AxisTransform[] = ["linear", "log", "lnln"];

export function parsePlotSpec(raw: unknown): PlotSpec {
  if (typeof raw !== "object" || raw === null) {
    throw new SchemaError("plot spec must be a JSON object");
  }
  const obj = raw as Record<string, unknown>;
  if (typeof obj.input !== "string" || obj.input.length === 0) {
    throw new SchemaError("plot spec needs a nonempty 'input' CSV path");
  }
  if (typeof obj.output !== "string" || obj.output.length === 0) {
    throw new SchemaError("plot spec needs a nonempty 'output' image path");
  }
  if (!PLOT_KINDS.includes(obj.kind as PlotKind)) {
    throw new SchemaError(`unknown plot kind ${JSON.stringify(obj.kind)}; expected one of ${PLOT_KINDS.join(", ")}`);
  }
  const spec: PlotSpec = {
    input: obj.input,
    kind: obj.kind as PlotKind,
    output: obj.output,
  };
  if (obj.transforms !== undefined) {
    if (typeof obj.transforms !== "object" || obj.transforms === null) {
      throw new SchemaError("'transforms' must be an object with optional x/y entries");
    }
    const t = obj.transforms as Record<string, unknown>;
    const out: { x?: AxisTransform; y?: AxisTransform } = {};
    for (const axis of ["x", "y"] as const) {
      if (t[axis] !== undefined) {
        if (!TRANSFORMS.includes(t[axis] as AxisTransform)) {
          throw new SchemaError(`transform for ${axis} must be one of ${TRANSFORMS.join(", ")}`);
        }
        out[axis] = t[axis] as AxisTransform;
      }
    }
    spec.transforms = out;
  }
  return spec;
}
