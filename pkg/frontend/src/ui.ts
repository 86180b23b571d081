/** DOM renderers for the workbench surfaces: console tabs, dialogs, the
 * outline tree, and the file manager tree. */

import type { GatewayClient } from "./api";
import type { OutlineNode } from "./eiout";
import { ActionBinding } from "./interpreter";
import { FileStore, fetchExampleFile, listGithubFolder } from "./files";
import { renderContent } from "./render";
import type { ExampleNode, ExampleSet } from "./types";
import { DEFAULT_CONSOLE, Workbench } from "./workbench";

// ---------------------------------------------------------------------------
// Console area
// ---------------------------------------------------------------------------

export class ConsolePanel {
  private activeId: string | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly workbench: Workbench,
    selectorDispatch: (event: Event) => void,
  ) {
    this.root.innerHTML = '<div class="console-tabs"></div><div class="console-items"></div>';
    this.items().addEventListener("click", selectorDispatch);
    workbench.onChange(() => this.render());
    this.render();
  }

  private tabsBar(): HTMLElement {
    return this.root.querySelector(".console-tabs") as HTMLElement;
  }

  private items(): HTMLElement {
    return this.root.querySelector(".console-items") as HTMLElement;
  }

  show(id: string): void {
    this.activeId = id;
    this.render();
  }

  private render(): void {
    const tabsBar = this.tabsBar();
    tabsBar.innerHTML = "";
    const tabs = this.workbench.consoles;
    if (this.activeId === null && tabs.length) this.activeId = tabs[tabs.length - 1].id;
    for (const tab of tabs) {
      const el = document.createElement("button");
      el.className = "console-tab" + (tab.id === this.activeId ? " active" : "");
      el.textContent = tab.id === DEFAULT_CONSOLE ? tab.title : `${tab.title}`;
      el.addEventListener("click", () => this.show(tab.id));
      tabsBar.appendChild(el);
    }
    const itemsEl = this.items();
    itemsEl.innerHTML = "";
    const active = tabs.find((t) => t.id === this.activeId);
    if (!active) return;
    for (const item of active.items) {
      itemsEl.appendChild(renderContent(item));
    }
  }
}

/** Build the delegated click handler for on-click actions bound to
 * selectors inside previously printed html content. */
export function selectorDispatcher(
  selectorBindings: { selectors: string[]; binding: ActionBinding }[],
): (event: Event) => void {
  return (event) => {
    const target = event.target as Element | null;
    if (!target) return;
    for (const { selectors, binding } of selectorBindings) {
      if (selectors.some((selector) => safeMatch(target, selector))) {
        binding.toggle();
        return;
      }
    }
  };
}

function safeMatch(target: Element, selector: string): boolean {
  try {
    return target.closest(selector) !== null;
  } catch {
    return false; // not a valid CSS selector in this browser
  }
}

// ---------------------------------------------------------------------------
// Dialogs
// ---------------------------------------------------------------------------

export class DialogLayer {
  constructor(
    private readonly root: HTMLElement,
    private readonly workbench: Workbench,
  ) {
    workbench.onChange(() => this.render());
  }

  private render(): void {
    this.root.innerHTML = "";
    for (const dialog of this.workbench.dialogs) {
      const box = document.createElement("div");
      box.className = `dialog dialog-${dialog.outclass}`;
      if (dialog.width) box.style.width = `${dialog.width}px`;
      if (dialog.height) box.style.height = `${dialog.height}px`;
      const title = document.createElement("div");
      title.className = "dialog-title";
      title.textContent = dialog.title;
      const closer = document.createElement("button");
      closer.className = "dialog-close";
      closer.textContent = "×";
      closer.addEventListener("click", () => this.workbench.closeDialog(dialog.id));
      title.appendChild(closer);
      box.appendChild(title);
      const body = document.createElement("div");
      body.className = "dialog-body";
      for (const content of dialog.contents) body.appendChild(renderContent(content));
      box.appendChild(body);
      this.root.appendChild(box);
    }
  }
}

// ---------------------------------------------------------------------------
// Outline view
// ---------------------------------------------------------------------------

export class OutlinePanel {
  /** Selection is kept per file, so switching files keeps each file's picks. */
  private selectionsByFile = new Map<string, Set<string>>();
  private currentFile: string | null = null;
  private nodes: OutlineNode[] = [];

  constructor(private readonly root: HTMLElement) {}

  setOutline(file: string | null, nodes: OutlineNode[]): void {
    this.currentFile = file;
    this.nodes = nodes;
    this.render();
  }

  selectedEntities(): string[] {
    if (this.currentFile === null) return [];
    return Array.from(this.selectionsByFile.get(this.currentFile) ?? []);
  }

  private selection(): Set<string> {
    const key = this.currentFile ?? "";
    let set = this.selectionsByFile.get(key);
    if (!set) {
      set = new Set();
      this.selectionsByFile.set(key, set);
    }
    return set;
  }

  private render(): void {
    this.root.innerHTML = "";
    if (!this.nodes.length) {
      const note = document.createElement("p");
      note.className = "outline-empty";
      note.textContent = "No outline. Open a file and refresh.";
      this.root.appendChild(note);
      return;
    }
    this.root.appendChild(this.renderNodes(this.nodes));
  }

  private renderNodes(nodes: OutlineNode[]): HTMLElement {
    const list = document.createElement("ul");
    list.className = "outline-list";
    for (const node of nodes) {
      const item = document.createElement("li");
      const label = document.createElement("label");
      if (node.selectable) {
        const box = document.createElement("input");
        box.type = "checkbox";
        box.checked = this.selection().has(node.name);
        box.addEventListener("change", () => {
          if (box.checked) this.selection().add(node.name);
          else this.selection().delete(node.name);
        });
        label.appendChild(box);
      }
      label.appendChild(document.createTextNode(`${node.name} (${node.kind})`));
      item.appendChild(label);
      if (node.children.length) item.appendChild(this.renderNodes(node.children));
      list.appendChild(item);
    }
    return list;
  }
}

// ---------------------------------------------------------------------------
// File manager
// ---------------------------------------------------------------------------

export interface ExampleSource {
  api: GatewayClient;
  sets: ExampleSet[];
}

export class FileManager {
  /** Paths ticked for inclusion in the next execution besides the active file. */
  readonly included = new Set<string>();

  constructor(
    private readonly root: HTMLElement,
    private readonly store: FileStore,
    private readonly openFile: (path: string, content: string, persistent: boolean) => void,
    private readonly fetchFn: (url: string, init?: RequestInit) => Promise<Response> = (url, init) =>
      fetch(url, init),
  ) {}

  private sources: ExampleSource[] = [];

  setSources(sources: ExampleSource[]): void {
    this.sources = sources;
    this.render();
  }

  refresh(): void {
    this.render();
  }

  private render(): void {
    this.root.innerHTML = "";
    const user = document.createElement("li");
    user.className = "tree-folder open";
    user.textContent = "User_Projects";
    const userList = document.createElement("ul");
    for (const path of this.store.list()) {
      userList.appendChild(this.fileRow(path, () => {
        this.openFile(path, this.store.read(path) ?? "", true);
      }));
    }
    user.appendChild(userList);
    this.root.appendChild(user);

    for (const source of this.sources) {
      for (const exset of source.sets) {
        const row = document.createElement("li");
        row.className = "tree-folder";
        row.textContent = exset.id;
        row.appendChild(this.renderExampleNodes([exset.root]));
        this.root.appendChild(row);
      }
    }
  }

  private renderExampleNodes(nodes: ExampleNode[]): HTMLElement {
    const list = document.createElement("ul");
    for (const node of nodes) {
      if (node.type === "folder") {
        const item = document.createElement("li");
        item.className = "tree-folder";
        item.textContent = node.name;
        item.appendChild(this.renderExampleNodes(node.children));
        list.appendChild(item);
      } else if (node.type === "file") {
        list.appendChild(
          this.fileRow(node.name, async () => {
            const content = await fetchExampleFile(node.url, this.fetchFn);
            this.openFile(node.name, content, false);
          }),
        );
      } else {
        const item = document.createElement("li");
        item.className = "tree-github";
        const link = document.createElement("a");
        link.textContent = `${node.owner}/${node.repo}@${node.branch}:${node.path || "/"}`;
        link.href = "#";
        link.addEventListener("click", async (event) => {
          event.preventDefault();
          const expanded = await listGithubFolder(node, this.fetchFn);
          item.replaceChildren(link, this.renderExampleNodes(expanded));
        });
        item.appendChild(link);
        list.appendChild(item);
      }
    }
    return list;
  }

  private fileRow(name: string, open: () => void | Promise<void>): HTMLElement {
    const item = document.createElement("li");
    item.className = "tree-file";
    const include = document.createElement("input");
    include.type = "checkbox";
    include.title = "include in the next execution";
    include.checked = this.included.has(name);
    include.addEventListener("change", () => {
      if (include.checked) this.included.add(name);
      else this.included.delete(name);
    });
    const link = document.createElement("a");
    link.href = "#";
    link.textContent = name;
    link.addEventListener("click", (event) => {
      event.preventDefault();
      void open();
    });
    item.appendChild(include);
    item.appendChild(link);
    return item;
  }
}
