/** Wire types shared with the gateway (see docs/protocol.md). */

export type ParameterKind = "single-choice" | "multi-choice" | "flag" | "free-text";

export interface ParameterSpec {
  name: string;
  kind: ParameterKind;
  options: string[];
  defaults: string[];
}

export interface AppSummary {
  id: string;
  title: string;
  parameters: ParameterSpec[];
}

export type ExampleNode =
  | { type: "folder"; name: string; children: ExampleNode[] }
  | { type: "file"; name: string; url: string }
  | { type: "github"; owner: string; repo: string; branch: string; path: string };

export interface ExampleSet {
  id: string;
  root: ExampleNode;
}

export interface RequestFile {
  path: string;
  content: string;
  encoding?: "text" | "base64";
}

export interface ExecuteRequest {
  app_id: string;
  parameters: Record<string, string[]>;
  files: RequestFile[];
  outline: string[];
}

export interface ExecuteResponse {
  status: "ok";
  execid: string;
  content_kind: "eiout" | "plain-text";
  output: string;
  exit_code: number | null;
  timed_out: boolean;
  truncated: boolean;
  duration_s: number;
}

export interface GatewayError {
  status: "error";
  code: string;
  message: string;
  violations?: { param: string; reason: string }[];
}

export interface ChunkBatch {
  chunks: { index: number; data: string }[];
  next_cursor: number;
  live: boolean;
}

/** Entry in the client config's per-server app/example selections. */
export interface SourceSelection {
  server: string;
  ids: string[] | "_all";
}

export interface ClientConfig {
  title: string;
  apps: SourceSelection[];
  examples: SourceSelection[];
  outlineServer: string;
  outlineApp: string;
}
