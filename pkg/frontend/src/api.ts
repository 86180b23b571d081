/** Gateway client: the JSON command endpoint plus download URLs. */

import type {
  AppSummary,
  ChunkBatch,
  ExampleSet,
  ExecuteRequest,
  ExecuteResponse,
  GatewayError,
} from "./types";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class GatewayRequestFailed extends Error {
  constructor(
    public readonly code: string,
    message: string,
    public readonly violations: { param: string; reason: string }[] = [],
  ) {
    super(message);
  }
}

export class GatewayClient {
  constructor(
    public readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  private async post<T>(payload: unknown): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(`${this.baseUrl}/ei/server`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        credentials: "include", // keep the session cookie
        body: JSON.stringify(payload),
      });
    } catch (err) {
      throw new GatewayRequestFailed("transport", `cannot reach ${this.baseUrl}: ${err}`);
    }
    const body = (await response.json()) as T | GatewayError;
    if ((body as GatewayError).status === "error") {
      const error = body as GatewayError;
      throw new GatewayRequestFailed(error.code, error.message, error.violations ?? []);
    }
    return body as T;
  }

  async apps(): Promise<AppSummary[]> {
    const body = await this.post<{ apps: AppSummary[] }>({ command: "apps" });
    return body.apps;
  }

  async appDetails(appId: string): Promise<AppSummary> {
    const body = await this.post<{ apps: AppSummary[] }>({ command: "apps", app_id: appId });
    return body.apps[0];
  }

  async examples(): Promise<ExampleSet[]> {
    const body = await this.post<{ example_sets: ExampleSet[] }>({ command: "examples" });
    return body.example_sets;
  }

  async execute(request: ExecuteRequest, clientId = "webclient"): Promise<ExecuteResponse> {
    return this.post<ExecuteResponse>({ command: "execute", client_id: clientId, ...request });
  }

  async fetchOutput(execid: string, cursor: number): Promise<ChunkBatch> {
    return this.post<ChunkBatch>({ command: "fetchoutput", execid, cursor });
  }

  downloadUrl(execid: string, filename: string): string {
    return `${this.baseUrl}/ei/server/download/${encodeURIComponent(execid)}/${encodeURIComponent(filename)}`;
  }
}
