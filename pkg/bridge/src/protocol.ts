/**
 * Wire protocol v1: line-delimited JSON, UTF-8, one request in flight per
 * connection. The adapter speaks first with a hello announcing its unit
 * vocabulary; every response echoes the request id.
 *
 *   adapter -> {"type":"hello","scheme":"bpe"|"wordpiece",
 *               "vocab_sha256":"...","vocab_size":N}
 *   client  -> {"type":"predict","id":i,"context":[unit ids],"k":K}
 *   adapter -> {"type":"dist","id":i,"top":[[unit_id,logprob],...],
 *               "warning"?: "..."}
 *
 * Embedding extension (per-token static vectors, used by paraphrase probing):
 *
 *   client  -> {"type":"embed","id":i,"tokens":["word", ...]}
 *   adapter -> {"type":"vecs","id":i,"vectors":[[...], ...]}
 *
 * A fatal condition is reported as {"type":"error","message":"..."} followed
 * by a clean shutdown.
 */

export type Scheme = 'bpe' | 'wordpiece';

export interface HelloMessage {
  type: 'hello';
  scheme: Scheme;
  vocab_sha256: string;
  vocab_size: number;
}

export interface PredictRequest {
  type: 'predict';
  id: number;
  context: number[];
  k: number;
}

export interface DistResponse {
  type: 'dist';
  id: number;
  top: [number, number][];
  warning?: string;
}

export interface EmbedRequest {
  type: 'embed';
  id: number;
  tokens: string[];
}

export interface VecsResponse {
  type: 'vecs';
  id: number;
  vectors: number[][];
}

export interface ErrorMessage {
  type: 'error';
  message: string;
}

export type Request = PredictRequest | EmbedRequest;
export type Response = DistResponse | VecsResponse | ErrorMessage;

export function parseRequest(line: string): Request {
  let value: unknown;
  try {
    value = JSON.parse(line);
  } catch {
    throw new Error(`malformed protocol line: ${line}`);
  }
  const msg = value as Record<string, unknown>;
  if (msg === null || typeof msg !== 'object' || typeof msg.type !== 'string') {
    throw new Error(`malformed protocol line: ${line}`);
  }
  if (msg.type === 'predict') {
    if (
      typeof msg.id !== 'number' ||
      !Array.isArray(msg.context) ||
      typeof msg.k !== 'number' ||
      msg.k < 1
    ) {
      throw new Error(`malformed predict request: ${line}`);
    }
    return msg as unknown as PredictRequest;
  }
  if (msg.type === 'embed') {
    if (typeof msg.id !== 'number' || !Array.isArray(msg.tokens)) {
      throw new Error(`malformed embed request: ${line}`);
    }
    return msg as unknown as EmbedRequest;
  }
  throw new Error(`unknown request type: ${line}`);
}
