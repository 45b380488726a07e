import { describe, expect, it } from "vitest";

import { ApiRefusal, Client } from "./api.js";

interface Call {
  url: string;
  init?: RequestInit;
}

function fakeFetch(status: number, body: unknown) {
  const calls: Call[] = [];
  const impl = async (url: string, init?: RequestInit) => {
    calls.push({ url, init });
    return {
      ok: status >= 200 && status < 300,
      status,
      json: async () => body,
    } as Response;
  };
  return { impl, calls };
}

describe("Client", () => {
  it("hits /graph with the fold flag", async () => {
    const { impl, calls } = fakeFetch(200, { rows: [], groups: [] });
    await new Client("http://x", impl).graph(true);
    expect(calls[0].url).toBe("http://x/graph?fold=true");
  });

  it("url-encodes commit ids and search queries", async () => {
    const { impl, calls } = fakeFetch(200, { commits: [] });
    const client = new Client("", impl);
    await client.search("var:model tag:v1");
    expect(calls[0].url).toBe("/search?q=var%3Amodel%20tag%3Av1");
  });

  it("posts checkout bodies as JSON", async () => {
    const { impl, calls } = fakeFetch(200, { head_code: "a", head_data: "b" });
    await new Client("", impl).checkout("abc", "data");
    expect(calls[0].init?.method).toBe("POST");
    expect(JSON.parse(String(calls[0].init?.body))).toEqual({
      commit: "abc",
      mode: "data",
    });
  });

  it("raises ApiRefusal carrying the checkout class on 409", async () => {
    const { impl } = fakeFetch(409, {
      code: "unsafe_unrelated_data",
      message: "checkout rejected: UnsafeUnrelatedData",
      checkout_class: "UnsafeUnrelatedData",
    });
    const client = new Client("", impl);
    const err = await client.checkout("abc", "data").catch((e) => e);
    expect(err).toBeInstanceOf(ApiRefusal);
    expect((err as ApiRefusal).status).toBe(409);
    expect((err as ApiRefusal).body.checkout_class).toBe(
      "UnsafeUnrelatedData",
    );
  });

  it("raises ApiRefusal with the server's error body on 404", async () => {
    const { impl } = fakeFetch(404, {
      code: "unknown_commit",
      message: "unknown commit zzz",
    });
    const err = await new Client("", impl).commit("zzz").catch((e) => e);
    expect(err).toBeInstanceOf(ApiRefusal);
    expect((err as ApiRefusal).body.code).toBe("unknown_commit");
  });

  it("passes the since cursor to the long poll", async () => {
    const { impl, calls } = fakeFetch(200, { seq: 5 });
    const result = await new Client("", impl).events(4);
    expect(calls[0].url).toBe("/events?since=4");
    expect(result.seq).toBe(5);
  });

  it("strips a trailing slash from the base url", async () => {
    const { impl, calls } = fakeFetch(200, {
      head_code: "a",
      head_data: "a",
      split: false,
      branch: "main",
      detached: false,
    });
    await new Client("http://localhost:8747/", impl).head();
    expect(calls[0].url).toBe("http://localhost:8747/head");
  });
});
