/**
 * Wire protocol spoken with the linking engine: UTF-8 line-delimited JSON
 * over stdio or a local TCP socket. The engine opens with a hello carrying
 * its protocol version, tokenizer fingerprint, and vocabulary size; the
 * adapter must refuse the session when any of them disagree with the model
 * it serves. Score requests arrive strictly sequentially within a session
 * (one session per document) but sessions may interleave, so replies carry
 * the session_id and request_id back.
 */

export const PROTOCOL_VERSION = 1;

export interface HelloMessage {
  type: "hello";
  protocol_version: number;
  tokenizer_fingerprint: string;
  vocab_size: number;
}

export interface HelloAckMessage {
  type: "hello_ack";
  protocol_version: number;
  tokenizer_fingerprint: string;
  vocab_size: number;
}

export interface ScoreRequest {
  type: "score";
  session_id: string;
  request_id: number;
  /** Full prompt text; may be omitted when prompt_id was sent before. */
  prompt?: string;
  prompt_id: string;
  prefix: number[];
  allowed: number[];
}

export interface ScoreResponse {
  type: "scores";
  session_id: string;
  request_id: number;
  /** One finite log-score per allowed token id, in request order. */
  scores: number[];
}

export interface ErrorMessage {
  type: "error";
  session_id?: string;
  request_id?: number;
  message: string;
}

export type EngineMessage = HelloMessage | ScoreRequest;
export type AdapterMessage = HelloAckMessage | ScoreResponse | ErrorMessage;

export function encodeMessage(msg: AdapterMessage): string {
  return JSON.stringify(msg);
}

export function parseEngineMessage(line: string): EngineMessage {
  let obj: unknown;
  try {
    obj = JSON.parse(line);
  } catch {
    throw new Error(`invalid JSON: ${line.slice(0, 120)}`);
  }
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    throw new Error("message is not an object");
  }
  const msg = obj as Record<string, unknown>;
  if (msg.type === "hello") {
    if (
      typeof msg.protocol_version !== "number" ||
      typeof msg.tokenizer_fingerprint !== "string" ||
      typeof msg.vocab_size !== "number"
    ) {
      throw new Error("malformed hello message");
    }
    return msg as unknown as HelloMessage;
  }
  if (msg.type === "score") {
    if (
      typeof msg.session_id !== "string" ||
      typeof msg.request_id !== "number" ||
      typeof msg.prompt_id !== "string" ||
      !Array.isArray(msg.prefix) ||
      !Array.isArray(msg.allowed)
    ) {
      throw new Error("malformed score request");
    }
    return msg as unknown as ScoreRequest;
  }
  throw new Error(`unknown message type: ${String(msg.type)}`);
}
