/** Pure SVG builders for the day-indexed series and the cast graph.
 * All functions return markup strings so they are testable without a DOM. */

import type { CastDocument } from "./types.js";
import type { ProbabilitySeries } from "./viewmodel.js";

const PALETTE = ["#4caf82", "#e0b94c", "#e07a4c", "#c0392b", "#7e57c2", "#5c8ad6"];

export function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function x(day: number, days: number, width: number, pad: number): number {
  const span = Math.max(days - 1, 1);
  return pad + (day * (width - 2 * pad)) / span;
}

/** Stacked area chart: one band per category, days on the x axis. */
export function probabilityStackSvg(series: ProbabilitySeries, width = 520, height = 180): string {
  const pad = 28;
  const days = series.rows.length;
  if (days === 0) return `<svg class="chart" width="${width}" height="${height}"></svg>`;

  // cumulative sums turn the rows into stacked band boundaries
  const bounds: number[][] = series.rows.map((row) => {
    const out = [0];
    let acc = 0;
    for (const value of row) {
      acc += value;
      out.push(acc);
    }
    return out;
  });

  const y = (fraction: number) => height - pad - fraction * (height - 2 * pad);
  const bands = series.categories.map((category, c) => {
    const top = bounds.map((b, d) => `${x(d, days, width, pad).toFixed(1)},${y(b[c + 1]).toFixed(1)}`);
    const bottom = bounds
      .map((b, d) => `${x(d, days, width, pad).toFixed(1)},${y(b[c]).toFixed(1)}`)
      .reverse();
    const color = PALETTE[c % PALETTE.length];
    return `<polygon class="band" fill="${color}" fill-opacity="0.75" points="${top.join(" ")} ${bottom.join(" ")}"><title>${escapeXml(category)}</title></polygon>`;
  });

  const legend = series.categories
    .map((category, c) => {
      const lx = pad + c * 120;
      const color = PALETTE[c % PALETTE.length];
      return `<rect x="${lx}" y="4" width="10" height="10" fill="${color}"/><text x="${lx + 14}" y="13" class="legend">${escapeXml(category)}</text>`;
    })
    .join("");

  const axis = `<line x1="${pad}" y1="${height - pad}" x2="${width - pad}" y2="${height - pad}" stroke="#888"/>`;
  return `<svg class="chart" viewBox="0 0 ${width} ${height}" width="${width}" height="${height}">${legend}${bands.join("")}${axis}</svg>`;
}

/** Tension line on a fixed 0-100 scale. */
export function tensionLineSvg(series: number[], width = 520, height = 140): string {
  const pad = 28;
  if (series.length === 0) return `<svg class="chart" width="${width}" height="${height}"></svg>`;
  const y = (value: number) => height - pad - (value / 100) * (height - 2 * pad);
  const points = series
    .map((value, d) => `${x(d, series.length, width, pad).toFixed(1)},${y(value).toFixed(1)}`)
    .join(" ");
  const markers = series
    .map(
      (value, d) =>
        `<circle cx="${x(d, series.length, width, pad).toFixed(1)}" cy="${y(value).toFixed(1)}" r="2.5" fill="#c0392b"><title>day ${d}: ${value}</title></circle>`,
    )
    .join("");
  const axis =
    `<line x1="${pad}" y1="${height - pad}" x2="${width - pad}" y2="${height - pad}" stroke="#888"/>` +
    `<line x1="${pad}" y1="${y(100)}" x2="${pad}" y2="${height - pad}" stroke="#888"/>`;
  return `<svg class="chart" viewBox="0 0 ${width} ${height}" width="${width}" height="${height}">${axis}<polyline fill="none" stroke="#c0392b" stroke-width="2" points="${points}"/>${markers}</svg>`;
}

export interface NodePosition {
  id: string;
  x: number;
  y: number;
}

/** Even placement around a circle, in the order the ids are given. */
export function layoutCircle(ids: string[], cx: number, cy: number, radius: number): NodePosition[] {
  return ids.map((id, i) => {
    const angle = (2 * Math.PI * i) / ids.length - Math.PI / 2;
    return { id, x: cx + radius * Math.cos(angle), y: cy + radius * Math.sin(angle) };
  });
}

/** The complete relationship graph as a circle; edge labels on hover. */
export function castGraphSvg(cast: CastDocument, size = 420): string {
  const ids = cast.actors.map((a) => a.id);
  const positions = layoutCircle(ids, size / 2, size / 2, size / 2 - 60);
  const at = new Map(positions.map((p) => [p.id, p]));

  const edges = cast.edges
    .map((edge) => {
      const a = at.get(edge.a);
      const b = at.get(edge.b);
      if (!a || !b) return "";
      const title = edge.label ? `${edge.a} — ${edge.b}: ${edge.label}` : `${edge.a} — ${edge.b}`;
      const emphasis = edge.label ? 'stroke="#5c8ad6" stroke-width="1.6"' : 'stroke="#ccc" stroke-width="0.8"';
      return `<line class="edge" x1="${a.x.toFixed(1)}" y1="${a.y.toFixed(1)}" x2="${b.x.toFixed(1)}" y2="${b.y.toFixed(1)}" ${emphasis}><title>${escapeXml(title)}</title></line>`;
    })
    .join("");

  const nodes = positions
    .map((p) => {
      const actor = cast.actors.find((a) => a.id === p.id);
      return (
        `<circle cx="${p.x.toFixed(1)}" cy="${p.y.toFixed(1)}" r="16" fill="#34495e"><title>${escapeXml(actor?.identity ?? p.id)}</title></circle>` +
        `<text x="${p.x.toFixed(1)}" y="${(p.y + 30).toFixed(1)}" text-anchor="middle" class="node-label">${escapeXml(p.id)}</text>`
      );
    })
    .join("");

  return `<svg class="chart cast-graph" viewBox="0 0 ${size} ${size}" width="${size}" height="${size}">${edges}${nodes}</svg>`;
}
