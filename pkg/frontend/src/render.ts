/** Render content blocks into DOM nodes.
 *
 * html and svg bodies come from tools, not from this origin, so they are
 * sandboxed: scripts, event handlers, and javascript: URLs are stripped
 * before the markup is attached.
 */

import type { ContentBlock } from "./eiout";
import { parseGraphData, renderLineChart } from "./graphs";

export function sanitizeHtml(markup: string, doc: Document = document): string {
  const container = doc.createElement("div");
  container.innerHTML = markup;
  for (const bad of Array.from(container.querySelectorAll("script, iframe, object, embed"))) {
    bad.remove();
  }
  const walk = (elem: Element) => {
    for (const attr of Array.from(elem.attributes)) {
      const name = attr.name.toLowerCase();
      if (name.startsWith("on")) elem.removeAttribute(attr.name);
      if (
        (name === "href" || name === "src" || name === "xlink:href") &&
        attr.value.trim().toLowerCase().startsWith("javascript:")
      ) {
        elem.removeAttribute(attr.name);
      }
    }
    for (const child of Array.from(elem.children)) walk(child);
  };
  for (const child of Array.from(container.children)) walk(child);
  return container.innerHTML;
}

export function renderContent(content: ContentBlock, doc: Document = document): HTMLElement {
  switch (content.format) {
    case "html": {
      const div = doc.createElement("div");
      div.className = "content-html";
      div.innerHTML = sanitizeHtml(content.body, doc);
      return div;
    }
    case "svg": {
      const div = doc.createElement("div");
      div.className = "content-svg";
      div.innerHTML = sanitizeHtml(content.body, doc);
      return div;
    }
    case "graphs": {
      const div = doc.createElement("div");
      div.className = "content-graph";
      const data = parseGraphData(content.body);
      if (data) {
        div.innerHTML = renderLineChart(data);
      } else {
        const pre = doc.createElement("pre");
        pre.textContent = content.body;
        div.appendChild(pre);
      }
      return div;
    }
    default: {
      const pre = doc.createElement("pre");
      pre.className = "content-text";
      pre.textContent = content.body;
      return pre;
    }
  }
}
