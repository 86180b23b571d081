import { describe, expect, it } from "vitest";

import { parseGraphData, renderLineChart } from "../src/graphs";
import { renderContent, sanitizeHtml } from "../src/render";

describe("html sandboxing", () => {
  it("strips scripts, event handlers, and javascript: URLs", () => {
    const clean = sanitizeHtml(
      '<span id="ok" onclick="alert(1)">hi</span><script>alert(2)</script>' +
        '<a href="javascript:alert(3)">x</a><iframe src="https://evil"></iframe>',
    );
    expect(clean).toContain('id="ok"');
    expect(clean).not.toContain("script");
    expect(clean).not.toContain("onclick");
    expect(clean).not.toContain("javascript:");
    expect(clean).not.toContain("iframe");
  });

  it("keeps ordinary markup intact", () => {
    const clean = sanitizeHtml('<span style="color: red;" id="err1">10 errors</span> found');
    expect(clean).toContain('<span style="color: red;" id="err1">10 errors</span>');
  });
});

describe("content rendering", () => {
  it("renders text bodies verbatim as preformatted text", () => {
    const el = renderContent({ format: "text", body: "a < b & c" });
    expect(el.textContent).toBe("a < b & c");
  });

  it("renders graphs bodies as line charts", () => {
    const el = renderContent({
      format: "graphs",
      body: JSON.stringify({ labels: ["t", "cost"], rows: [[0, 1], [1, 3], [2, 2]] }),
    });
    expect(el.innerHTML).toContain("<svg");
    expect(el.innerHTML).toContain("polyline");
  });

  it("falls back to raw text for malformed graph payloads", () => {
    const el = renderContent({ format: "graphs", body: "not json" });
    expect(el.textContent).toContain("not json");
  });
});

describe("graph data parsing", () => {
  it("accepts the documented labels/rows shape", () => {
    const data = parseGraphData('{"labels": ["t", "a", "b"], "rows": [[0, 1, 2], [1, 2, 3]]}');
    expect(data).not.toBeNull();
    expect(data!.labels).toHaveLength(3);
  });

  it("rejects ragged rows and wrong types", () => {
    expect(parseGraphData('{"labels": ["t", "a"], "rows": [[0, 1, 2]]}')).toBeNull();
    expect(parseGraphData('{"labels": ["t"], "rows": "nope"}')).toBeNull();
  });

  it("draws one polyline per series", () => {
    const svg = renderLineChart({ labels: ["t", "a", "b"], rows: [[0, 1, 5], [1, 2, 4], [2, 3, 3]] });
    expect(svg.match(/<polyline/g)).toHaveLength(2);
  });
});
