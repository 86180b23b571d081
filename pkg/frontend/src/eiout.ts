/** Client-side parser for the EI output language (docs/output-language.md).
 *
 * Tolerant by design: unknown elements are skipped, bad enum values fall
 * back to defaults, and anything that is not an <eiout> document at all
 * returns null so the caller can show the raw text instead.
 */

export type Outclass = "info" | "error" | "warning";
export type ContentFormat = "text" | "html" | "svg" | "graphs";

export interface LineRegion {
  fromLine: number;
  toLine?: number;
  fromCol?: number;
  toCol?: number;
}

export interface ContentBlock {
  format: ContentFormat;
  body: string;
  streamExecid?: string;
  pollSeconds?: number;
}

export type EiCommand =
  | { kind: "print"; consoleId?: string; consoleTitle?: string; contents: ContentBlock[] }
  | { kind: "marker"; dest: string; outclass: Outclass; lines: LineRegion[]; content?: ContentBlock }
  | { kind: "highlight"; dest: string; outclass: Outclass; regions: LineRegion[] }
  | { kind: "dialog"; outclass: Outclass; title: string; width?: number; height?: number; contents: ContentBlock[] }
  | { kind: "download"; execid: string; filename: string };

export type EiAction =
  | { kind: "lineclick"; dest: string; outclass: Outclass; lines: LineRegion[]; commands: EiCommand[] }
  | { kind: "selectorclick"; selectors: string[]; commands: EiCommand[] };

export interface EiOutDocument {
  commands: EiCommand[];
  actions: EiAction[];
}

export function parseEiOut(text: string): EiOutDocument | null {
  const root = parseXmlRoot(text);
  if (!root || root.tagName !== "eiout") {
    return null;
  }
  const doc: EiOutDocument = { commands: [], actions: [] };
  for (const child of children(root)) {
    if (child.tagName === "eicommands") {
      for (const elem of children(child)) {
        const command = parseCommand(elem);
        if (command) doc.commands.push(command);
      }
    } else if (child.tagName === "eiactions") {
      for (const elem of children(child)) {
        const action = parseAction(elem);
        if (action) doc.actions.push(action);
      }
    }
  }
  return doc;
}

function parseCommand(elem: Element): EiCommand | null {
  switch (elem.tagName) {
    case "printonconsole":
      return {
        kind: "print",
        consoleId: attr(elem, "consoleid"),
        consoleTitle: attr(elem, "consoletitle"),
        contents: parseContents(elem),
      };
    case "content": {
      // Stream-mode tools emit a bare content command; print it on the
      // default console.
      const block = parseContent(elem);
      return block ? { kind: "print", contents: [block] } : null;
    }
    case "addmarker": {
      const dest = attr(elem, "dest");
      const lines = parseLines(elem);
      if (!dest || !lines.length) return null;
      const contents = parseContents(elem);
      return { kind: "marker", dest, outclass: parseOutclass(elem), lines, content: contents[0] };
    }
    case "highlightlines": {
      const dest = attr(elem, "dest");
      const regions = parseLines(elem);
      if (!dest || !regions.length) return null;
      return { kind: "highlight", dest, outclass: parseOutclass(elem), regions };
    }
    case "dialogbox": {
      const title = attr(elem, "boxtitle");
      if (title === undefined) return null;
      return {
        kind: "dialog",
        outclass: parseOutclass(elem),
        title,
        width: positiveInt(attr(elem, "boxwidth")),
        height: positiveInt(attr(elem, "boxheight")),
        contents: parseContents(elem),
      };
    }
    case "download": {
      const execid = attr(elem, "execid");
      const filename = attr(elem, "filename");
      if (!execid || !filename || /[/\\]|^\.\.?$/.test(filename)) return null;
      return { kind: "download", execid, filename };
    }
    default:
      return null;
  }
}

function parseAction(elem: Element): EiAction | null {
  if (elem.tagName === "oncodelineclick") {
    const dest = attr(elem, "dest");
    const lines = parseLines(elem);
    if (!dest || !lines.length) return null;
    return {
      kind: "lineclick",
      dest,
      outclass: parseOutclass(elem),
      lines,
      commands: parseNestedCommands(elem),
    };
  }
  if (elem.tagName === "onclick") {
    const selectors: string[] = [];
    for (const list of children(elem)) {
      if (list.tagName !== "elements") continue;
      for (const sel of children(list)) {
        const value = sel.tagName === "selector" ? attr(sel, "value")?.trim() : undefined;
        if (value) selectors.push(value);
      }
    }
    if (!selectors.length) return null;
    return { kind: "selectorclick", selectors, commands: parseNestedCommands(elem) };
  }
  return null;
}

function parseNestedCommands(elem: Element): EiCommand[] {
  const commands: EiCommand[] = [];
  for (const wrapper of children(elem)) {
    if (wrapper.tagName !== "eicommands") continue;
    for (const sub of children(wrapper)) {
      if (sub.tagName === "oncodelineclick" || sub.tagName === "onclick") continue; // no nesting
      const command = parseCommand(sub);
      if (command) commands.push(command);
    }
  }
  return commands;
}

function parseContents(elem: Element): ContentBlock[] {
  const contents: ContentBlock[] = [];
  for (const child of children(elem)) {
    if (child.tagName !== "content") continue;
    const block = parseContent(child);
    if (block) contents.push(block);
  }
  return contents;
}

function parseContent(elem: Element): ContentBlock | null {
  const rawFormat = attr(elem, "format") ?? "text";
  const format: ContentFormat = (["text", "html", "svg", "graphs"] as const).includes(
    rawFormat as ContentFormat,
  )
    ? (rawFormat as ContentFormat)
    : "text";
  const block: ContentBlock = { format, body: innerXml(elem) };
  const execid = attr(elem, "execid");
  const time = attr(elem, "time");
  if (execid && time !== undefined) {
    const match = /^\s*(\d+)\s*(?:s|sec|secs|seconds)?\s*$/i.exec(time);
    block.streamExecid = execid;
    block.pollSeconds = match ? parseInt(match[1], 10) : 60;
  }
  return block;
}

function parseLines(elem: Element): LineRegion[] {
  const regions: LineRegion[] = [];
  for (const list of children(elem)) {
    if (list.tagName !== "lines") continue;
    for (const line of children(list)) {
      if (line.tagName !== "line") continue;
      const fromLine = positiveInt(attr(line, "from"));
      if (fromLine === undefined) continue;
      regions.push({
        fromLine,
        toLine: positiveInt(attr(line, "to")),
        fromCol: nonNegativeInt(attr(line, "fromch")),
        toCol: nonNegativeInt(attr(line, "toch")),
      });
    }
  }
  return regions;
}

function parseOutclass(elem: Element): Outclass {
  const value = attr(elem, "outclass");
  return value === "error" || value === "warning" ? value : "info";
}

// ---------------------------------------------------------------------------
// Outline XML (the outline-app contract in docs/output-language.md)
// ---------------------------------------------------------------------------

export interface OutlineNode {
  name: string;
  kind: string;
  selectable: boolean;
  children: OutlineNode[];
}

export function parseOutline(text: string): OutlineNode[] | null {
  const root = parseXmlRoot(text);
  if (!root) return null;
  // Accept either a wrapping element of <node>s or bare <node> root(s).
  if (root.tagName === "node") return [parseOutlineNode(root)];
  return children(root)
    .filter((child) => child.tagName === "node")
    .map(parseOutlineNode);
}

function parseOutlineNode(elem: Element): OutlineNode {
  return {
    name: attr(elem, "name") ?? "",
    kind: attr(elem, "kind") ?? "entity",
    selectable: attr(elem, "selectable") !== "false",
    children: children(elem)
      .filter((child) => child.tagName === "node")
      .map(parseOutlineNode),
  };
}

// ---------------------------------------------------------------------------
// XML helpers
// ---------------------------------------------------------------------------

function parseXmlRoot(text: string): Element | null {
  const trimmed = text.trim();
  if (!trimmed.startsWith("<")) return null;
  const parsed = new DOMParser().parseFromString(trimmed, "text/xml");
  if (parsed.getElementsByTagName("parsererror").length > 0) return null;
  return parsed.documentElement;
}

function children(elem: Element): Element[] {
  return Array.from(elem.children);
}

function attr(elem: Element, name: string): string | undefined {
  const value = elem.getAttribute(name);
  return value === null ? undefined : value;
}

function positiveInt(raw: string | undefined): number | undefined {
  if (raw === undefined) return undefined;
  const value = parseInt(raw, 10);
  return Number.isFinite(value) && value >= 1 ? value : undefined;
}

function nonNegativeInt(raw: string | undefined): number | undefined {
  if (raw === undefined) return undefined;
  const value = parseInt(raw, 10);
  return Number.isFinite(value) && value >= 0 ? value : undefined;
}

function innerXml(elem: Element): string {
  const serializer = new XMLSerializer();
  let body = "";
  for (const node of Array.from(elem.childNodes)) {
    body += node.nodeType === 3 ? (node.nodeValue ?? "") : serializer.serializeToString(node);
  }
  return body;
}
