/** Tiny SVG line-chart renderer for `graphs` content.
 *
 * Expects the documented JSON body `{"labels": [...], "rows": [[x, y1,
 * y2, ...], ...]}`: labels[0] names the x axis, the rest one series each.
 */

const PALETTE = ["#2b6cb0", "#c53030", "#2f855a", "#b7791f", "#6b46c1", "#00838f"];

export interface GraphData {
  labels: string[];
  rows: number[][];
}

export function parseGraphData(body: string): GraphData | null {
  let raw: unknown;
  try {
    raw = JSON.parse(body);
  } catch {
    return null;
  }
  if (typeof raw !== "object" || raw === null) return null;
  const { labels, rows } = raw as { labels?: unknown; rows?: unknown };
  if (!Array.isArray(labels) || !labels.every((l) => typeof l === "string")) return null;
  if (
    !Array.isArray(rows) ||
    !rows.every((row) => Array.isArray(row) && row.every((v) => typeof v === "number"))
  ) {
    return null;
  }
  if (rows.some((row) => row.length !== labels.length)) return null;
  return { labels: labels as string[], rows: rows as number[][] };
}

export function renderLineChart(data: GraphData, width = 460, height = 220): string {
  const pad = { left: 44, right: 12, top: 12, bottom: 28 };
  const plotW = width - pad.left - pad.right;
  const plotH = height - pad.top - pad.bottom;
  const series = data.labels.length - 1;
  const xs = data.rows.map((row) => row[0]);
  const ys = data.rows.flatMap((row) => row.slice(1));
  const [x0, x1] = extent(xs);
  const [y0, y1] = extent(ys);
  const sx = (x: number) => pad.left + ((x - x0) / (x1 - x0 || 1)) * plotW;
  const sy = (y: number) => pad.top + plotH - ((y - y0) / (y1 - y0 || 1)) * plotH;

  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" class="ei-graph">`,
    `<rect x="${pad.left}" y="${pad.top}" width="${plotW}" height="${plotH}" fill="none" stroke="#ccc"/>`,
  ];
  for (let s = 0; s < series; s++) {
    const points = data.rows
      .map((row) => `${sx(row[0]).toFixed(1)},${sy(row[s + 1]).toFixed(1)}`)
      .join(" ");
    const color = PALETTE[s % PALETTE.length];
    parts.push(`<polyline points="${points}" fill="none" stroke="${color}" stroke-width="1.5"/>`);
    parts.push(
      `<text x="${pad.left + 6 + s * 90}" y="${height - 8}" fill="${color}" font-size="11">` +
        `${escapeXml(data.labels[s + 1])}</text>`,
    );
  }
  parts.push(
    `<text x="6" y="${pad.top + 10}" font-size="10" fill="#666">${y1.toPrecision(3)}</text>`,
    `<text x="6" y="${pad.top + plotH}" font-size="10" fill="#666">${y0.toPrecision(3)}</text>`,
    "</svg>",
  );
  return parts.join("");
}

function extent(values: number[]): [number, number] {
  if (!values.length) return [0, 1];
  return [Math.min(...values), Math.max(...values)];
}

function escapeXml(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}
