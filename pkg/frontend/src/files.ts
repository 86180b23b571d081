/** The file manager model: user files plus server-published example sets.
 *
 * Example file bodies are fetched lazily from their URLs; github-backed
 * sets are listed and fetched through the public github contents API.
 * User files persist in browser storage only.
 */

import type { FetchLike } from "./api";
import type { ExampleNode } from "./types";

const STORAGE_KEY = "ei-user-files";

export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
}

export class FileStore {
  private files = new Map<string, string>();

  constructor(private readonly storage?: StorageLike) {
    const saved = storage?.getItem(STORAGE_KEY);
    if (saved) {
      try {
        for (const [path, content] of Object.entries(JSON.parse(saved) as Record<string, string>)) {
          this.files.set(path, content);
        }
      } catch {
        // corrupted storage: start fresh
      }
    }
  }

  list(): string[] {
    return Array.from(this.files.keys()).sort();
  }

  read(path: string): string | undefined {
    return this.files.get(path);
  }

  write(path: string, content: string): void {
    this.files.set(path, content);
    this.persist();
  }

  remove(path: string): void {
    this.files.delete(path);
    this.persist();
  }

  rename(from: string, to: string): void {
    const content = this.files.get(from);
    if (content === undefined || this.files.has(to)) return;
    this.files.delete(from);
    this.files.set(to, content);
    this.persist();
  }

  private persist(): void {
    this.storage?.setItem(STORAGE_KEY, JSON.stringify(Object.fromEntries(this.files)));
  }
}

// ---------------------------------------------------------------------------
// Example trees
// ---------------------------------------------------------------------------

export async function fetchExampleFile(url: string, fetchFn: FetchLike): Promise<string> {
  const response = await fetchFn(url);
  if (!response.ok) {
    throw new Error(`fetching ${url} failed with HTTP ${response.status}`);
  }
  return response.text();
}

/** Expand a github reference into a folder of file nodes via the public
 * contents API (one level; subdirectories expand on demand the same way). */
export async function listGithubFolder(
  ref: { owner: string; repo: string; branch: string; path: string },
  fetchFn: FetchLike,
): Promise<ExampleNode[]> {
  const url =
    `https://api.github.com/repos/${encodeURIComponent(ref.owner)}/${encodeURIComponent(ref.repo)}` +
    `/contents/${ref.path.replace(/^\/+/, "")}?ref=${encodeURIComponent(ref.branch)}`;
  const response = await fetchFn(url, { headers: { Accept: "application/vnd.github.v3+json" } });
  if (!response.ok) {
    throw new Error(`github listing failed with HTTP ${response.status}`);
  }
  const entries = (await response.json()) as {
    name: string;
    path: string;
    type: string;
    download_url: string | null;
  }[];
  const nodes: ExampleNode[] = [];
  for (const entry of entries) {
    if (entry.type === "file" && entry.download_url) {
      nodes.push({ type: "file", name: entry.name, url: entry.download_url });
    } else if (entry.type === "dir") {
      nodes.push({ ...ref, type: "github", path: entry.path });
    }
  }
  return nodes;
}
