/** Renders one figure and writes the SVG plus its companion JSON. */

import { mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";
import { FigureId, RenderedFigure, renderFigure } from "./figures.js";

export interface RenderResult {
  svgPath: string;
  jsonPath: string;
  figure: RenderedFigure;
}

export function renderToFiles(fig: FigureId | string, inDir: string, outDir: string): RenderResult {
  // render fully before touching the output directory so a failed load
  // never leaves a partial image behind
  const figure = renderFigure(fig, inDir);
  mkdirSync(outDir, { recursive: true });
  const svgPath = join(outDir, `${fig}.svg`);
  const jsonPath = join(outDir, `${fig}.json`);
  writeFileSync(svgPath, figure.svg);
  const companion = {
    figure: fig,
    sources: figure.sources,
    aggregates: figure.aggregates,
  };
  writeFileSync(jsonPath, JSON.stringify(companion, null, 2) + "\n");
  return { svgPath, jsonPath, figure };
}
