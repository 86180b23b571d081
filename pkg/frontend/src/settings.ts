/** Auto-generated settings: one control per declared parameter.
 *
 * single-choice -> <select>, multi-choice -> checkbox group, flag ->
 * toggle checkbox, free-text -> text input; defaults preselected.  The
 * collected values are exactly what goes into the execute request.
 */

import type { AppSummary, ParameterSpec } from "./types";

export interface SettingsPanel {
  root: HTMLElement;
  /** Current panel state as the request's parameters map. */
  collect(): Record<string, string[]>;
}

export function buildSettingsPanel(app: AppSummary, doc: Document = document): SettingsPanel {
  const root = doc.createElement("div");
  root.className = "settings-panel";
  const collectors: (() => [string, string[]] | null)[] = [];

  if (app.parameters.length === 0) {
    const note = doc.createElement("p");
    note.className = "settings-empty";
    note.textContent = `${app.title} takes no parameters.`;
    root.appendChild(note);
  }

  for (const param of app.parameters) {
    const row = doc.createElement("div");
    row.className = "settings-row";
    const label = doc.createElement("label");
    label.textContent = param.name;
    row.appendChild(label);
    collectors.push(addControl(param, row, doc));
    root.appendChild(row);
  }

  return {
    root,
    collect() {
      const parameters: Record<string, string[]> = {};
      for (const collector of collectors) {
        const entry = collector();
        if (entry) parameters[entry[0]] = entry[1];
      }
      return parameters;
    },
  };
}

function addControl(
  param: ParameterSpec,
  row: HTMLElement,
  doc: Document,
): () => [string, string[]] | null {
  switch (param.kind) {
    case "single-choice": {
      const select = doc.createElement("select");
      select.name = param.name;
      for (const option of param.options) {
        const el = doc.createElement("option");
        el.value = option;
        el.textContent = option;
        if (option === param.defaults[0]) el.selected = true;
        select.appendChild(el);
      }
      row.appendChild(select);
      // The visible selection is exactly what gets submitted.
      return () => [param.name, [select.value]];
    }
    case "multi-choice": {
      const boxes: HTMLInputElement[] = [];
      for (const option of param.options) {
        const wrap = doc.createElement("label");
        wrap.className = "settings-choice";
        const box = doc.createElement("input");
        box.type = "checkbox";
        box.value = option;
        box.checked = param.defaults.includes(option);
        wrap.appendChild(box);
        wrap.appendChild(doc.createTextNode(option));
        row.appendChild(wrap);
        boxes.push(box);
      }
      return () => [param.name, boxes.filter((b) => b.checked).map((b) => b.value)];
    }
    case "flag": {
      const box = doc.createElement("input");
      box.type = "checkbox";
      box.checked = param.defaults[0] === "true";
      row.appendChild(box);
      return () => [param.name, [box.checked ? "true" : "false"]];
    }
    case "free-text": {
      const input = doc.createElement("input");
      input.type = "text";
      input.value = param.defaults[0] ?? "";
      row.appendChild(input);
      return () => (input.value === "" ? null : [param.name, [input.value]]);
    }
  }
}
