/** The Apply workflow end to end against a scripted gateway: panel values,
 * open files, and outline selections form the request; eiout responses
 * drive effects; errors land in the error console. */

import { describe, expect, it } from "vitest";

import { GatewayClient, GatewayRequestFailed } from "../src/api";
import { parseEiOut } from "../src/eiout";
import { interpretDocument } from "../src/interpreter";
import { buildSettingsPanel } from "../src/settings";
import type { AppSummary } from "../src/types";
import { Workbench } from "../src/workbench";

const MYAPP: AppSummary = {
  id: "myapp",
  title: "myapp",
  parameters: [{ name: "c", kind: "single-choice", options: ["1", "2"], defaults: [] }],
};

function gatewayRespondingWith(envelope: unknown) {
  const requests: unknown[] = [];
  const client = new GatewayClient("http://gw:1", async (_url, init) => {
    requests.push(JSON.parse(init!.body as string));
    return { ok: true, status: 200, json: async () => envelope } as Response;
  });
  return { client, requests };
}

describe("apply workflow", () => {
  it("sends files, outline selections, and panel values; prints plain output", async () => {
    const { client, requests } = gatewayRespondingWith({
      status: "ok",
      execid: "EI1",
      content_kind: "plain-text",
      output: "-c 1\n",
      exit_code: 0,
      timed_out: false,
      truncated: false,
      duration_s: 0.01,
    });
    const panel = buildSettingsPanel(MYAPP);
    (panel.root.querySelector("select") as HTMLSelectElement).value = "1";

    const response = await client.execute({
      app_id: MYAPP.id,
      parameters: panel.collect(),
      files: [{ path: "sum.c", content: "int main;" }],
      outline: ["main"],
    });

    expect(requests[0]).toMatchObject({
      command: "execute",
      app_id: "myapp",
      parameters: { c: ["1"] },
      files: [{ path: "sum.c", content: "int main;" }],
      outline: ["main"],
      client_id: "webclient",
    });

    const workbench = new Workbench();
    expect(response.content_kind).toBe("plain-text");
    workbench.print(undefined, undefined, { format: "text", body: response.output });
    expect(workbench.consoles[0].items[0].body).toBe("-c 1\n");
  });

  it("interprets eiout responses into visual effects", async () => {
    const { client } = gatewayRespondingWith({
      status: "ok",
      execid: "EI2",
      content_kind: "eiout",
      output:
        '<eiout><eicommands><highlightlines dest="/w/sum.c">' +
        '<lines><line from="5" to="10"/></lines></highlightlines></eicommands></eiout>',
      exit_code: 0,
      timed_out: false,
      truncated: false,
      duration_s: 0.01,
    });
    const response = await client.execute({ app_id: "x", parameters: {}, files: [], outline: [] });
    const doc = parseEiOut(response.output)!;
    const workbench = new Workbench();
    interpretDocument(doc, { workbench, download: () => {} });
    expect(workbench.highlights).toMatchObject([
      { dest: "/w/sum.c", region: { fromLine: 5, toLine: 10 } },
    ]);
  });

  it("routes gateway errors to the error console tab", async () => {
    const { client } = gatewayRespondingWith({
      status: "error",
      code: "invalid-params",
      message: "c: '3' is not an option",
    });
    const workbench = new Workbench();
    try {
      await client.execute({ app_id: "myapp", parameters: { c: ["3"] }, files: [], outline: [] });
      throw new Error("should have raised");
    } catch (err) {
      if (!(err instanceof GatewayRequestFailed)) throw err;
      workbench.print("errors", "Errors", { format: "text", body: `${err.code}: ${err.message}` });
    }
    const errors = workbench.consoles.find((t) => t.id === "errors")!;
    expect(errors.title).toBe("Errors");
    expect(errors.items[0].body).toContain("not an option");
  });
});
