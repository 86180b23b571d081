/** Boot the IDE: load config, populate menus, wire the Apply workflow. */

import { GatewayClient, GatewayRequestFailed } from "./api";
import { filterBySelection, loadClientConfig } from "./config";
import { parseEiOut, parseOutline } from "./eiout";
import { EditorView } from "./editor";
import { FileStore } from "./files";
import { ActionBinding, interpretDocument, pollStream } from "./interpreter";
import { buildSettingsPanel, SettingsPanel } from "./settings";
import type { AppSummary, RequestFile } from "./types";
import { ConsolePanel, DialogLayer, FileManager, OutlinePanel, selectorDispatcher } from "./ui";
import { Workbench } from "./workbench";

interface ToolEntry {
  api: GatewayClient;
  app: AppSummary;
  label: string;
}

async function boot(): Promise<void> {
  const config = await loadClientConfig(window.location.origin);
  document.title = config.title;
  (document.getElementById("app-title") as HTMLElement).textContent = config.title;

  const workbench = new Workbench();
  const bindings = new Map<number, ActionBinding>();
  const selectorBindings: { selectors: string[]; binding: ActionBinding }[] = [];
  const store = new FileStore(window.localStorage);

  const editor = new EditorView(
    document.getElementById("editor") as HTMLElement,
    workbench,
    bindings,
    (tab) => {
      if (tab.persistent) store.write(tab.path, tab.content);
    },
  );
  const consolePanel = new ConsolePanel(
    document.getElementById("console") as HTMLElement,
    workbench,
    selectorDispatcher(selectorBindings),
  );
  new DialogLayer(document.getElementById("dialogs") as HTMLElement, workbench);
  const outlinePanel = new OutlinePanel(document.getElementById("outline") as HTMLElement);
  const fileManager = new FileManager(
    document.getElementById("file-tree") as HTMLElement,
    store,
    (path, content, persistent) => editor.open(path, content, persistent),
  );

  const status = document.getElementById("status") as HTMLElement;
  const say = (text: string) => {
    status.textContent = text;
  };

  // -- tools menu -----------------------------------------------------------

  const toolsMenu = document.getElementById("tools-menu") as HTMLSelectElement;
  const tools: ToolEntry[] = [];
  for (const source of config.apps) {
    const api = new GatewayClient(source.server);
    try {
      const wanted = filterBySelection(await api.apps(), source.ids);
      const tagged = config.apps.length > 1;
      for (const app of wanted) {
        tools.push({ api, app, label: tagged ? `${app.title} @ ${source.server}` : app.title });
      }
    } catch (err) {
      say(`cannot reach ${source.server}: ${err}`);
    }
  }
  toolsMenu.innerHTML = "";
  if (!tools.length) {
    const option = document.createElement("option");
    option.textContent = "(no tools available)";
    option.disabled = true;
    toolsMenu.appendChild(option);
  }
  tools.forEach((tool, index) => {
    const option = document.createElement("option");
    option.value = String(index);
    option.textContent = tool.label;
    toolsMenu.appendChild(option);
  });
  const currentTool = (): ToolEntry | undefined => tools[parseInt(toolsMenu.value || "0", 10)];

  // -- example sets -----------------------------------------------------------

  const exampleSources = [];
  for (const source of config.examples) {
    const api = new GatewayClient(source.server);
    try {
      exampleSources.push({ api, sets: filterBySelection(await api.examples(), source.ids) });
    } catch {
      // unreachable example server: skip
    }
  }
  fileManager.setSources(exampleSources);

  // -- settings window --------------------------------------------------------

  const settingsHost = document.getElementById("settings-window") as HTMLElement;
  const panels = new Map<string, SettingsPanel>();
  const panelFor = (tool: ToolEntry): SettingsPanel => {
    const key = `${tool.api.baseUrl}#${tool.app.id}`;
    let panel = panels.get(key);
    if (!panel) {
      panel = buildSettingsPanel(tool.app);
      panels.set(key, panel);
    }
    return panel;
  };
  (document.getElementById("btn-settings") as HTMLElement).addEventListener("click", () => {
    const tool = currentTool();
    if (!tool) return;
    settingsHost.replaceChildren(panelFor(tool).root);
    settingsHost.classList.toggle("hidden");
  });

  // -- file manager buttons ----------------------------------------------------

  (document.getElementById("btn-new-file") as HTMLElement).addEventListener("click", () => {
    const name = window.prompt("File name:");
    if (!name) return;
    store.write(name, "");
    fileManager.refresh();
    editor.open(name, "", true);
  });
  const upload = document.getElementById("upload") as HTMLInputElement;
  (document.getElementById("btn-upload") as HTMLElement).addEventListener("click", () => upload.click());
  upload.addEventListener("change", async () => {
    for (const file of Array.from(upload.files ?? [])) {
      store.write(file.name, await file.text());
    }
    fileManager.refresh();
  });

  // -- request assembly ---------------------------------------------------------

  const collectFiles = (): RequestFile[] => {
    const files: RequestFile[] = [];
    const seen = new Set<string>();
    const active = editor.activeTab();
    if (active) {
      files.push({ path: active.path, content: active.content });
      seen.add(active.path);
    }
    for (const path of fileManager.included) {
      if (seen.has(path)) continue;
      const open = editor.openTabs().find((t) => t.path === path);
      const content = open ? open.content : store.read(path);
      if (content !== undefined) {
        files.push({ path, content });
        seen.add(path);
      }
    }
    return files;
  };

  // -- outline ------------------------------------------------------------------

  const outlineApi = new GatewayClient(config.outlineServer);
  (document.getElementById("btn-outline") as HTMLElement).addEventListener("click", async () => {
    const files = collectFiles();
    if (!files.length) {
      say("open a file first");
      return;
    }
    say("generating outline...");
    try {
      const response = await outlineApi.execute(
        { app_id: config.outlineApp, parameters: {}, files, outline: [] },
        "webclient",
      );
      const nodes = parseOutline(response.output) ?? [];
      outlinePanel.setOutline(editor.activeTab()?.path ?? null, nodes);
      say("");
    } catch (err) {
      say(`outline failed: ${err instanceof Error ? err.message : err}`);
    }
  });

  // -- apply ----------------------------------------------------------------------

  (document.getElementById("btn-apply") as HTMLElement).addEventListener("click", async () => {
    const tool = currentTool();
    if (!tool) {
      say("no tool selected");
      return;
    }
    say(`running ${tool.app.id}...`);
    try {
      const response = await tool.api.execute({
        app_id: tool.app.id,
        parameters: panelFor(tool).collect(),
        files: collectFiles(),
        outline: outlinePanel.selectedEntities(),
      });
      say(response.timed_out ? "timed out" : "");
      const doc = response.content_kind === "eiout" ? parseEiOut(response.output) : null;
      if (!doc) {
        workbench.print(undefined, undefined, { format: "text", body: response.output });
        return;
      }
      const interpreted = interpretDocument(doc, {
        workbench,
        download: (execid, filename) => {
          window.location.assign(tool.api.downloadUrl(execid, filename));
        },
        startStream: (content, consoleId) => {
          void pollStream(
            tool.api,
            content.streamExecid as string,
            content.pollSeconds ?? 60,
            workbench,
            consoleId,
          );
        },
      });
      for (const binding of interpreted.bindings) bindings.set(binding.id, binding);
      selectorBindings.push(...interpreted.selectorBindings);
    } catch (err) {
      if (err instanceof GatewayRequestFailed) {
        workbench.print("errors", "Errors", { format: "text", body: `${err.code}: ${err.message}` });
        consolePanel.show("errors");
      }
      say("");
    }
  });
}

void boot();
