/** Interpreter for eiout documents: execute commands, register actions,
 * start stream pollers, toggle action effects on and off.
 */

import type { GatewayClient } from "./api";
import type { ContentBlock, EiAction, EiCommand, EiOutDocument } from "./eiout";
import { Workbench } from "./workbench";

export interface InterpreterEnv {
  workbench: Workbench;
  /** Physically fetch a produced file (browser navigation in the DOM layer). */
  download: (execid: string, filename: string) => void;
  /** Start polling a hinted stream; returns a stop handle. */
  startStream?: (content: ContentBlock, consoleId: string) => void;
}

type UndoOp = () => void;

let nextActionId = 1;

export class ActionBinding {
  readonly id: number;
  applied = false;
  private undoOps: UndoOp[] = [];

  constructor(
    readonly action: EiAction,
    private readonly env: InterpreterEnv,
  ) {
    this.id = nextActionId++;
  }

  /** First click executes the nested commands; the next one undoes their
   * effects. Downloads execute but are exempt from undo (and are not
   * repeated by the undo click). */
  toggle(): void {
    if (!this.applied) {
      this.undoOps = executeCommands(this.action.commands, this.env);
      this.applied = true;
    } else {
      for (const undo of this.undoOps.reverse()) undo();
      this.undoOps = [];
      this.applied = false;
    }
  }
}

export interface InterpretedDocument {
  bindings: ActionBinding[];
  /** Selector-bound actions the DOM layer must wire to console content. */
  selectorBindings: { selectors: string[]; binding: ActionBinding }[];
}

export function interpretDocument(doc: EiOutDocument, env: InterpreterEnv): InterpretedDocument {
  executeCommands(doc.commands, env);
  const bindings: ActionBinding[] = [];
  const selectorBindings: InterpretedDocument["selectorBindings"] = [];
  for (const action of doc.actions) {
    const binding = new ActionBinding(action, env);
    bindings.push(binding);
    if (action.kind === "lineclick") {
      // The action's own anchor marker is not part of its undoable effects.
      for (const region of action.lines) {
        env.workbench.addMarker(action.dest, region.fromLine, action.outclass, undefined, binding.id);
      }
    } else {
      selectorBindings.push({ selectors: action.selectors, binding });
    }
  }
  return { bindings, selectorBindings };
}

function executeCommands(commands: EiCommand[], env: InterpreterEnv): UndoOp[] {
  const undoOps: UndoOp[] = [];
  for (const command of commands) {
    switch (command.kind) {
      case "print": {
        const consoleId = command.consoleId ?? "";
        for (const content of command.contents) {
          undoOps.push(
            env.workbench.print(command.consoleId, command.consoleTitle, {
              format: content.format,
              body: content.body,
            }),
          );
          if (content.streamExecid && env.startStream) {
            env.startStream(content, consoleId);
          }
        }
        break;
      }
      case "marker":
        for (const region of command.lines) {
          undoOps.push(
            env.workbench.addMarker(command.dest, region.fromLine, command.outclass, command.content),
          );
        }
        break;
      case "highlight":
        for (const region of command.regions) {
          undoOps.push(env.workbench.addHighlight(command.dest, region, command.outclass));
        }
        break;
      case "dialog":
        undoOps.push(
          env.workbench.openDialog({
            title: command.title,
            outclass: command.outclass,
            width: command.width,
            height: command.height,
            contents: command.contents,
          }),
        );
        break;
      case "download":
        // Irreversible side effect: runs once, never undone.
        env.workbench.recordDownload({ execid: command.execid, filename: command.filename });
        env.download(command.execid, command.filename);
        break;
    }
  }
  return undoOps;
}

// ---------------------------------------------------------------------------
// Stream polling
// ---------------------------------------------------------------------------

export interface StreamPollerOptions {
  /** Injectable pause for tests; defaults to setTimeout. */
  sleep?: (ms: number) => Promise<void>;
  /** Hard cap on polls so a stuck stream cannot spin forever. */
  maxPolls?: number;
}

/** Poll one hinted stream, appending chunks to the console exactly once,
 * until the writer is done and no chunks remain. */
export async function pollStream(
  api: Pick<GatewayClient, "fetchOutput">,
  execid: string,
  pollSeconds: number,
  workbench: Workbench,
  consoleId: string,
  options: StreamPollerOptions = {},
): Promise<void> {
  const sleep = options.sleep ?? ((ms) => new Promise((resolve) => setTimeout(resolve, ms)));
  const maxPolls = options.maxPolls ?? 10_000;
  let cursor = 0;
  for (let polls = 0; polls < maxPolls; polls++) {
    const batch = await api.fetchOutput(execid, cursor);
    for (const chunk of batch.chunks) {
      workbench.appendToConsole(consoleId, chunk.data);
    }
    cursor = batch.next_cursor;
    if (!batch.live && batch.chunks.length === 0) return;
    await sleep(pollSeconds * 1000);
  }
}
