/** The code editor: a textarea with a decoration-aware gutter and a
 * highlight overlay kept in sync behind the text.
 *
 * Tools name files by their server-side absolute paths; decorations are
 * matched to open tabs by path suffix (the virtual path the client sent).
 */

import { ActionBinding } from "./interpreter";
import type { Workbench } from "./workbench";

export function destMatchesFile(dest: string, virtualPath: string): boolean {
  if (dest === virtualPath) return true;
  if (dest.endsWith("/" + virtualPath)) return true;
  const base = virtualPath.split("/").pop();
  return base !== undefined && (dest === base || dest.endsWith("/" + base));
}

const OUTCLASS_ICON: Record<string, string> = { info: "i", warning: "!", error: "x" };

export interface EditorTab {
  path: string;
  content: string;
  /** Written back to the user FileStore on edit when set. */
  persistent: boolean;
}

export class EditorView {
  private tabs: EditorTab[] = [];
  private active: string | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly workbench: Workbench,
    private readonly bindings: Map<number, ActionBinding>,
    private readonly onEdit: (tab: EditorTab) => void,
  ) {
    this.root.innerHTML =
      '<div class="editor-tabs"></div>' +
      '<div class="editor-split">' +
      '<div class="editor-gutter"></div>' +
      '<div class="editor-body"><pre class="editor-overlay"></pre>' +
      '<textarea class="editor-text" spellcheck="false"></textarea></div></div>';
    const textarea = this.textarea();
    textarea.addEventListener("input", () => {
      const tab = this.activeTab();
      if (tab) {
        tab.content = textarea.value;
        this.onEdit(tab);
      }
      this.renderDecorations();
    });
    textarea.addEventListener("scroll", () => {
      const overlay = this.overlay();
      overlay.scrollTop = textarea.scrollTop;
      overlay.scrollLeft = textarea.scrollLeft;
      this.gutter().scrollTop = textarea.scrollTop;
    });
    workbench.onChange(() => this.renderDecorations());
  }

  open(path: string, content: string, persistent: boolean): void {
    let tab = this.tabs.find((t) => t.path === path);
    if (!tab) {
      tab = { path, content, persistent };
      this.tabs.push(tab);
    }
    this.active = path;
    this.render();
  }

  close(path: string): void {
    this.tabs = this.tabs.filter((t) => t.path !== path);
    if (this.active === path) this.active = this.tabs.length ? this.tabs[this.tabs.length - 1].path : null;
    this.render();
  }

  activeTab(): EditorTab | undefined {
    return this.tabs.find((t) => t.path === this.active);
  }

  openTabs(): EditorTab[] {
    return [...this.tabs];
  }

  private textarea(): HTMLTextAreaElement {
    return this.root.querySelector(".editor-text") as HTMLTextAreaElement;
  }

  private overlay(): HTMLElement {
    return this.root.querySelector(".editor-overlay") as HTMLElement;
  }

  private gutter(): HTMLElement {
    return this.root.querySelector(".editor-gutter") as HTMLElement;
  }

  private render(): void {
    const bar = this.root.querySelector(".editor-tabs") as HTMLElement;
    bar.innerHTML = "";
    for (const tab of this.tabs) {
      const el = document.createElement("button");
      el.className = "editor-tab" + (tab.path === this.active ? " active" : "");
      el.textContent = tab.path;
      el.addEventListener("click", () => {
        this.active = tab.path;
        this.render();
      });
      const closer = document.createElement("span");
      closer.className = "tab-close";
      closer.textContent = "×";
      closer.addEventListener("click", (event) => {
        event.stopPropagation();
        this.close(tab.path);
      });
      el.appendChild(closer);
      bar.appendChild(el);
    }
    const tab = this.activeTab();
    this.textarea().value = tab ? tab.content : "";
    this.textarea().disabled = !tab;
    this.renderDecorations();
  }

  private renderDecorations(): void {
    const tab = this.activeTab();
    const text = tab ? tab.content : "";
    const lines = text.split("\n");
    const overlay = this.overlay();
    const gutter = this.gutter();
    overlay.innerHTML = "";
    gutter.innerHTML = "";
    if (!tab) return;

    const highlights = this.workbench.highlights.filter((h) => destMatchesFile(h.dest, tab.path));
    const markers = this.workbench.markers.filter((m) => destMatchesFile(m.dest, tab.path));

    for (let i = 0; i < lines.length; i++) {
      const lineNo = i + 1;
      const row = document.createElement("div");
      row.className = "gutter-line";
      const marks = markers.filter((m) => m.line === lineNo);
      for (const marker of marks) {
        const icon = document.createElement("span");
        icon.className = `marker marker-${marker.outclass}` + (marker.actionId ? " marker-action" : "");
        icon.textContent = OUTCLASS_ICON[marker.outclass] ?? "i";
        if (marker.note && marker.note.format === "text") icon.title = marker.note.body.trim();
        if (marker.actionId !== undefined) {
          const binding = this.bindings.get(marker.actionId);
          if (binding) icon.addEventListener("click", () => binding.toggle());
        }
        row.appendChild(icon);
      }
      const number = document.createElement("span");
      number.className = "line-number";
      number.textContent = String(lineNo);
      row.appendChild(number);
      gutter.appendChild(row);

      overlay.appendChild(this.renderOverlayLine(lines[i], lineNo, highlights));
    }
  }

  private renderOverlayLine(
    text: string,
    lineNo: number,
    highlights: { region: { fromLine: number; toLine?: number; fromCol?: number; toCol?: number }; outclass: string }[],
  ): HTMLElement {
    const row = document.createElement("div");
    row.className = "overlay-line";
    const covering = highlights.filter((h) => {
      const to = h.region.toLine ?? h.region.fromLine;
      return h.region.fromLine <= lineNo && lineNo <= to;
    });
    if (!covering.length) {
      row.textContent = text || " ";
      return row;
    }
    // Column bounds apply on the first and last line of a region.
    let from = 0;
    let to = text.length;
    let outclass = "info";
    for (const h of covering) {
      outclass = h.outclass;
      if (lineNo === h.region.fromLine && h.region.fromCol !== undefined) from = Math.min(h.region.fromCol, text.length);
      const lastLine = h.region.toLine ?? h.region.fromLine;
      if (lineNo === lastLine && h.region.toCol !== undefined) to = Math.min(h.region.toCol, text.length);
    }
    if (to < from) [from, to] = [to, from];
    row.appendChild(document.createTextNode(text.slice(0, from)));
    const span = document.createElement("span");
    span.className = `hl hl-${outclass}`;
    span.textContent = text.slice(from, to) || " ";
    row.appendChild(span);
    row.appendChild(document.createTextNode(text.slice(to) || (to === text.length ? " " : "")));
    return row;
  }
}
