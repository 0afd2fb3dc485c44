import { describe, expect, it } from "vitest";

import { EchoModel, RankBiasModel, modelByName } from "../src/models.js";
import { AdapterSession } from "../src/server.js";

const FINGERPRINT = "f".repeat(64);

function makeSession(overrides: Partial<{ vocabSize: number; fingerprint: string }> = {}) {
  const replies: string[] = [];
  const session = new AdapterSession(
    {
      model: new EchoModel(),
      tokenizerFingerprint: overrides.fingerprint ?? FINGERPRINT,
      vocabSize: overrides.vocabSize ?? 1000,
    },
    (line) => replies.push(line),
  );
  return { session, replies };
}

function hello(fingerprint = FINGERPRINT, vocabSize = 1000, version = 1) {
  return JSON.stringify({
    type: "hello",
    protocol_version: version,
    tokenizer_fingerprint: fingerprint,
    vocab_size: vocabSize,
  });
}

function scoreRequest(partial: Partial<Record<string, unknown>> = {}) {
  return JSON.stringify({
    type: "score",
    session_id: "doc1",
    request_id: 1,
    prompt: "CONTEXT: ...",
    prompt_id: "p1",
    prefix: [],
    allowed: [5, 6, 7],
    ...partial,
  });
}

describe("handshake", () => {
  it("acknowledges a matching hello", () => {
    const { session, replies } = makeSession();
    session.handleLine(hello());
    expect(JSON.parse(replies[0])).toEqual({
      type: "hello_ack",
      protocol_version: 1,
      tokenizer_fingerprint: FINGERPRINT,
      vocab_size: 1000,
    });
    expect(session.closed).toBe(false);
  });

  it("refuses a mismatched tokenizer fingerprint", () => {
    const { session, replies } = makeSession();
    session.handleLine(hello("0".repeat(64)));
    const reply = JSON.parse(replies[0]);
    expect(reply.type).toBe("error");
    expect(reply.message).toMatch(/fingerprint/);
    expect(session.closed).toBe(true);
  });

  it("refuses a wrong protocol version", () => {
    const { session, replies } = makeSession();
    session.handleLine(hello(FINGERPRINT, 1000, 99));
    expect(JSON.parse(replies[0]).type).toBe("error");
    expect(session.closed).toBe(true);
  });

  it("refuses a vocab size mismatch", () => {
    const { session, replies } = makeSession();
    session.handleLine(hello(FINGERPRINT, 123));
    expect(JSON.parse(replies[0]).message).toMatch(/vocab size/);
  });

  it("rejects score traffic before the handshake", () => {
    const { session, replies } = makeSession();
    session.handleLine(scoreRequest());
    expect(JSON.parse(replies[0]).type).toBe("error");
    expect(session.closed).toBe(true);
  });
});

describe("scoring", () => {
  it("returns one score per allowed token, in request order", () => {
    const { session, replies } = makeSession();
    session.handleLine(hello());
    session.handleLine(scoreRequest({ allowed: [9, 3, 4] }));
    const reply = JSON.parse(replies[1]);
    expect(reply).toEqual({
      type: "scores",
      session_id: "doc1",
      request_id: 1,
      scores: [0, 0, 0],
    });
  });

  it("rejects token ids outside the vocabulary", () => {
    const { session, replies } = makeSession({ vocabSize: 10 });
    session.handleLine(hello(FINGERPRINT, 10));
    session.handleLine(scoreRequest({ allowed: [3, 99] }));
    const reply = JSON.parse(replies[1]);
    expect(reply.type).toBe("error");
    expect(reply.message).toMatch(/outside vocabulary/);
    expect(reply.request_id).toBe(1);
  });

  it("serves prompt_id-only requests from the session cache", () => {
    const { session, replies } = makeSession();
    session.handleLine(hello());
    session.handleLine(scoreRequest({ request_id: 1 }));
    session.handleLine(
      JSON.stringify({
        type: "score",
        session_id: "doc1",
        request_id: 2,
        prompt_id: "p1",
        prefix: [5],
        allowed: [6],
      }),
    );
    expect(JSON.parse(replies[2]).type).toBe("scores");
  });

  it("errors on an unknown prompt_id", () => {
    const { session, replies } = makeSession();
    session.handleLine(hello());
    session.handleLine(
      JSON.stringify({
        type: "score",
        session_id: "doc1",
        request_id: 1,
        prompt_id: "never-sent",
        prefix: [],
        allowed: [1],
      }),
    );
    expect(JSON.parse(replies[1]).message).toMatch(/unknown prompt_id/);
  });

  it("keeps prompt caches separate per session", () => {
    const { session, replies } = makeSession();
    session.handleLine(hello());
    session.handleLine(scoreRequest({ session_id: "docA", prompt_id: "p" }));
    session.handleLine(
      JSON.stringify({
        type: "score",
        session_id: "docB",
        request_id: 7,
        prompt_id: "p",
        prefix: [],
        allowed: [1],
      }),
    );
    const reply = JSON.parse(replies[2]);
    expect(reply.type).toBe("error");
    expect(reply.session_id).toBe("docB");
  });

  it("answers interleaved sessions with matching ids", () => {
    const { session, replies } = makeSession();
    session.handleLine(hello());
    session.handleLine(scoreRequest({ session_id: "docA", request_id: 11 }));
    session.handleLine(scoreRequest({ session_id: "docB", request_id: 3 }));
    const a = JSON.parse(replies[1]);
    const b = JSON.parse(replies[2]);
    expect([a.session_id, a.request_id]).toEqual(["docA", 11]);
    expect([b.session_id, b.request_id]).toEqual(["docB", 3]);
  });

  it("reports malformed JSON without dying", () => {
    const { session, replies } = makeSession();
    session.handleLine(hello());
    session.handleLine("{nonsense");
    session.handleLine(scoreRequest());
    expect(JSON.parse(replies[1]).type).toBe("error");
    expect(JSON.parse(replies[2]).type).toBe("scores");
  });
});

describe("models", () => {
  it("echo scores are all zero", () => {
    expect(new EchoModel().score("p", [], [1, 2, 3])).toEqual([0, 0, 0]);
  });

  it("rank-bias prefers lower token ids", () => {
    const scores = new RankBiasModel().score("p", [], [10, 2]);
    expect(scores[1]).toBeGreaterThan(scores[0]);
  });

  it("modelByName rejects unknown names", () => {
    expect(() => modelByName("nope")).toThrow(/unknown model/);
  });
});
