// The client derives every request from the contract document; these
// tests pin that the recorded contract matches the repository's frozen
// file and that URL construction uses it verbatim.

import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { contractFixture, midrunState, repoContract } from "./helpers.js";

describe("contract fixtures", () => {
  it("recorded contract equals the frozen repository contract", () => {
    expect(contractFixture()).toEqual(repoContract());
  });

  it("state fixture phases and fields are contract-legal", () => {
    const contract = contractFixture();
    const schemas = contract.schemas as Record<string, any>;
    const stateSchema = schemas.session_state;
    const state = midrunState() as unknown as Record<string, unknown>;
    for (const field of stateSchema.fields as string[]) {
      expect(state, `missing field ${field}`).toHaveProperty(field);
    }
    expect(stateSchema.phases).toContain(state.phase);
  });
});

describe("endpoint construction", () => {
  const client = new ApiClient(contractFixture());

  it("uses the contract paths verbatim", () => {
    const contract = contractFixture();
    expect(client.endpoint("list_sessions")).toBe(contract.endpoints.list_sessions.path);
    expect(client.endpoint("create_session")).toBe(contract.endpoints.create_session.path);
  });

  it("substitutes path parameters", () => {
    expect(client.endpoint("get_state", { session_id: "abc123" })).toBe(
      "/api/v1/sessions/abc123",
    );
    expect(client.traceUrl("abc123")).toBe("/api/v1/sessions/abc123/trace");
  });

  it("rejects endpoints that are not in the contract", () => {
    expect(() => client.endpoint("made_up")).toThrow(/missing from contract/);
  });
});
