/**
 * One adapter session: emits the vocabulary handshake, then answers predict
 * and embed requests over a line transport. In masked-append mode the
 * configured mask unit is appended to every prediction context and the
 * distribution at that position is returned, giving unidirectional
 * prediction semantics to models trained around a trailing mask.
 */

import { Checkpoint, Mode } from './checkpoint';
import {
  DistResponse,
  HelloMessage,
  Request,
  VecsResponse,
  parseRequest,
} from './protocol';
import { vocabSha256 } from './tokenizer';

export class AdapterSession {
  constructor(
    readonly checkpoint: Checkpoint,
    readonly mode: Mode,
  ) {
    if (mode === 'masked-append' && checkpoint.maskId === null) {
      throw new Error(
        'masked-append mode needs a checkpoint with a mask unit',
      );
    }
  }

  hello(): HelloMessage {
    return {
      type: 'hello',
      scheme: this.checkpoint.config.scheme,
      vocab_sha256: vocabSha256(this.checkpoint.vocab),
      vocab_size: this.checkpoint.vocab.idToUnit.length,
    };
  }

  handleLine(line: string): DistResponse | VecsResponse {
    return this.handle(parseRequest(line));
  }

  handle(request: Request): DistResponse | VecsResponse {
    if (request.type === 'predict') {
      const vocabSize = this.checkpoint.vocab.idToUnit.length;
      let context = request.context;
      if (this.mode === 'masked-append') {
        context = [...context, this.checkpoint.maskId!];
      }
      let k = request.k;
      let warning: string | undefined;
      if (k > vocabSize) {
        k = vocabSize;
        warning = `k=${request.k} clamped to vocabulary size ${vocabSize}`;
      }
      const top = this.checkpoint.lm.topK(context, k);
      const response: DistResponse = { type: 'dist', id: request.id, top };
      if (warning) response.warning = warning;
      return response;
    }
    const dim = this.checkpoint.config.embedding_dim;
    const vectors = request.tokens.map(
      (token) => this.checkpoint.embeddings.get(token) ?? new Array(dim).fill(0),
    );
    return { type: 'vecs', id: request.id, vectors };
  }
}
