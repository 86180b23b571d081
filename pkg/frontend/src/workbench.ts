/** The workbench model: every visible effect the output language can cause.
 *
 * Consoles, editor decorations (highlights, markers), dialogs, and
 * triggered downloads live here as plain state; the DOM layer renders
 * from it via the change listener.  Keeping the model UI-free is what
 * makes action toggling snapshot-testable.
 */

import type { ContentBlock, LineRegion, Outclass } from "./eiout";

export const DEFAULT_CONSOLE = "";

export interface ConsoleItem {
  format: ContentBlock["format"];
  body: string;
}

export interface ConsoleTab {
  id: string; // DEFAULT_CONSOLE for the default tab
  title: string;
  items: ConsoleItem[];
}

export interface Highlight {
  id: number;
  dest: string;
  region: LineRegion;
  outclass: Outclass;
}

export interface Marker {
  id: number;
  dest: string;
  line: number;
  outclass: Outclass;
  note?: ContentBlock;
  /** Set when the marker is the clickable anchor of a code-line action. */
  actionId?: number;
}

export interface Dialog {
  id: number;
  title: string;
  outclass: Outclass;
  width?: number;
  height?: number;
  contents: ContentBlock[];
}

export interface DownloadRequest {
  execid: string;
  filename: string;
}

export type WorkbenchListener = () => void;

export class Workbench {
  readonly consoles: ConsoleTab[] = [];
  readonly highlights: Highlight[] = [];
  readonly markers: Marker[] = [];
  readonly dialogs: Dialog[] = [];
  readonly downloads: DownloadRequest[] = [];

  private nextId = 1;
  private listeners: WorkbenchListener[] = [];

  onChange(listener: WorkbenchListener): void {
    this.listeners.push(listener);
  }

  private changed(): void {
    for (const listener of this.listeners) listener();
  }

  // -- consoles -------------------------------------------------------------

  console(id: string = DEFAULT_CONSOLE, title?: string): ConsoleTab {
    let tab = this.consoles.find((t) => t.id === id);
    if (!tab) {
      tab = { id, title: title ?? (id === DEFAULT_CONSOLE ? "Console" : id), items: [] };
      this.consoles.push(tab);
      this.changed();
    }
    return tab;
  }

  print(consoleId: string | undefined, consoleTitle: string | undefined, item: ConsoleItem): () => void {
    const id = consoleId ?? DEFAULT_CONSOLE;
    const existed = this.consoles.some((t) => t.id === id);
    const tab = this.console(id, consoleTitle);
    tab.items.push(item);
    this.changed();
    return () => {
      const at = tab.items.indexOf(item);
      if (at >= 0) tab.items.splice(at, 1);
      // Creating the tab was part of this print's effect: take it back out
      // on undo unless someone else has printed into it since.
      if (!existed && tab.items.length === 0) {
        const index = this.consoles.indexOf(tab);
        if (index >= 0) this.consoles.splice(index, 1);
      }
      this.changed();
    };
  }

  appendToConsole(consoleId: string, text: string): void {
    this.console(consoleId).items.push({ format: "text", body: text });
    this.changed();
  }

  // -- decorations ----------------------------------------------------------

  addHighlight(dest: string, region: LineRegion, outclass: Outclass): () => void {
    const highlight: Highlight = { id: this.nextId++, dest, region, outclass };
    this.highlights.push(highlight);
    this.changed();
    return () => this.remove(this.highlights, highlight.id);
  }

  addMarker(dest: string, line: number, outclass: Outclass, note?: ContentBlock, actionId?: number): () => void {
    const marker: Marker = { id: this.nextId++, dest, line, outclass, note, actionId };
    this.markers.push(marker);
    this.changed();
    return () => this.remove(this.markers, marker.id);
  }

  openDialog(dialog: Omit<Dialog, "id">): () => void {
    const opened: Dialog = { id: this.nextId++, ...dialog };
    this.dialogs.push(opened);
    this.changed();
    return () => this.remove(this.dialogs, opened.id);
  }

  closeDialog(id: number): void {
    this.remove(this.dialogs, id);
  }

  recordDownload(request: DownloadRequest): void {
    this.downloads.push(request);
    this.changed();
  }

  private remove(list: { id: number }[], id: number): void {
    const at = list.findIndex((entry) => entry.id === id);
    if (at >= 0) {
      list.splice(at, 1);
      this.changed();
    }
  }

  // -- snapshots ------------------------------------------------------------

  /** Canonical view of everything visible; ids excluded so that
   * apply-then-undo compares equal even though fresh ids were consumed. */
  snapshot(): string {
    return JSON.stringify({
      consoles: this.consoles.map((tab) => ({ id: tab.id, title: tab.title, items: tab.items })),
      highlights: this.highlights.map(({ dest, region, outclass }) => ({ dest, region, outclass })),
      markers: this.markers.map(({ dest, line, outclass, note, actionId }) => ({
        dest,
        line,
        outclass,
        note,
        anchored: actionId !== undefined,
      })),
      dialogs: this.dialogs.map(({ title, outclass, width, height, contents }) => ({
        title,
        outclass,
        width,
        height,
        contents,
      })),
    });
  }
}
