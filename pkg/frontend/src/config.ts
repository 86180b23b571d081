/** Client configuration: webclient.cfg with built-in defaults.
 *
 * The file is a single JSON record; all fields optional.  `apps` and
 * `examples` entries name a server and either a list of ids or the
 * special value "_all".  Defaults target the gateway co-hosted with the
 * page.
 */

import type { FetchLike } from "./api";
import type { ClientConfig, SourceSelection } from "./types";

export const CONFIG_FILENAME = "webclient.cfg";

export function defaultConfig(defaultServer: string): ClientConfig {
  return {
    title: "EI",
    apps: [{ server: defaultServer, ids: "_all" }],
    examples: [{ server: defaultServer, ids: "_all" }],
    outlineServer: defaultServer,
    outlineApp: "coutline",
  };
}

export async function loadClientConfig(
  defaultServer: string,
  fetchFn: FetchLike = (url, init) => fetch(url, init),
): Promise<ClientConfig> {
  const config = defaultConfig(defaultServer);
  let raw: unknown;
  try {
    const response = await fetchFn(CONFIG_FILENAME);
    if (!response.ok) return config;
    raw = await response.json();
  } catch {
    return config; // no config file: built-in defaults
  }
  if (typeof raw !== "object" || raw === null) return config;
  const record = raw as Record<string, unknown>;
  if (typeof record.title === "string") config.title = record.title;
  if (typeof record.outlineserver === "string") config.outlineServer = record.outlineserver;
  if (typeof record.outlineapp === "string") config.outlineApp = record.outlineapp;
  const apps = parseSelections(record.apps, "apps");
  if (apps) config.apps = apps;
  const examples = parseSelections(record.examples, "examples");
  if (examples) config.examples = examples;
  return config;
}

/** Apply one source's selection to what the server offers. */
export function filterBySelection<T extends { id: string }>(
  offered: T[],
  ids: string[] | "_all",
): T[] {
  if (ids === "_all") return offered;
  return offered.filter((item) => ids.includes(item.id));
}

function parseSelections(raw: unknown, idsField: "apps" | "examples"): SourceSelection[] | null {
  if (!Array.isArray(raw)) return null;
  const selections: SourceSelection[] = [];
  for (const entry of raw) {
    if (typeof entry !== "object" || entry === null) continue;
    const record = entry as Record<string, unknown>;
    const server = record.server;
    if (typeof server !== "string" || !server) continue;
    const ids = record[idsField];
    if (ids === "_all" || ids === undefined) {
      selections.push({ server, ids: "_all" });
    } else if (Array.isArray(ids) && ids.every((id) => typeof id === "string")) {
      selections.push({ server, ids: ids as string[] });
    }
  }
  return selections.length ? selections : null;
}
