/** Shared test helpers: a seeded RNG and a random action-document generator. */

import type { EiAction, EiCommand, EiOutDocument, Outclass } from "../src/eiout";

/** Deterministic 32-bit RNG (mulberry32). */
export function seededRng(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function pick<T>(rng: () => number, values: readonly T[]): T {
  return values[Math.floor(rng() * values.length)];
}

const OUTCLASSES: readonly Outclass[] = ["info", "error", "warning"];

export function randomUndoableCommand(rng: () => number): EiCommand {
  const dest = `/work/${pick(rng, ["sum.c", "main.c", "lib.c"])}`;
  const line = 1 + Math.floor(rng() * 40);
  switch (Math.floor(rng() * 4)) {
    case 0:
      return {
        kind: "print",
        consoleId: rng() < 0.5 ? String(1 + Math.floor(rng() * 3)) : undefined,
        contents: [{ format: "text", body: `out-${Math.floor(rng() * 1e6)}` }],
      };
    case 1:
      return {
        kind: "marker",
        dest,
        outclass: pick(rng, OUTCLASSES),
        lines: [{ fromLine: line }],
        content: rng() < 0.5 ? { format: "text", body: "note" } : undefined,
      };
    case 2:
      return {
        kind: "highlight",
        dest,
        outclass: pick(rng, OUTCLASSES),
        regions: [{ fromLine: line, toLine: line + Math.floor(rng() * 5) }],
      };
    default:
      return {
        kind: "dialog",
        outclass: pick(rng, OUTCLASSES),
        title: `Dialog ${Math.floor(rng() * 100)}`,
        width: rng() < 0.5 ? 100 + Math.floor(rng() * 300) : undefined,
        contents: [{ format: pick(rng, ["text", "html"] as const), body: "body" }],
      };
  }
}

/** A document holding one code-line action with 1..4 undoable commands. */
export function randomActionDocument(seed: number): EiOutDocument {
  const rng = seededRng(seed);
  const commands: EiCommand[] = [];
  const count = 1 + Math.floor(rng() * 4);
  for (let i = 0; i < count; i++) commands.push(randomUndoableCommand(rng));
  const action: EiAction = {
    kind: "lineclick",
    dest: "/work/sum.c",
    outclass: pick(rng, OUTCLASSES),
    lines: [{ fromLine: 1 + Math.floor(rng() * 50) }],
    commands,
  };
  return { commands: [], actions: [action] };
}
