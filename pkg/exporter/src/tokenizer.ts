// Prompt tokenization with the real byte-pair-encoding vocabulary.
//
// The BPE tables come from clip-bpe-js (a port of the reference merges list);
// this module owns the framing: every sequence starts with the start-of-text
// id, ends with exactly one end-of-text id, and fits the 77-token context.
// Sequences are stored unpadded, with the end position spelled out, so the
// engine never has to guess where the text stops.

import Tokenizer from "clip-bpe-js";

export const CONTEXT_LENGTH = 77;
export const VOCAB_SIZE = 49408;
export const START_ID = 49406;
export const END_ID = 49407;

export interface TokenEntry {
  ids: number[];
  eot_index: number;
}

export interface TokenFile {
  context_length: number;
  vocab_size: number;
  start_id: number;
  end_id: number;
  prompts: Record<string, TokenEntry>;
}

let shared: Tokenizer | null = null;

function bpe(): Tokenizer {
  if (!shared) shared = new Tokenizer();
  return shared;
}

/** The text form token ids decode back to: collapsed whitespace, lowercase. */
export function normalize(text: string): string {
  return text.replace(/\s+/g, " ").trim().toLowerCase();
}

export function encodeFramed(prompt: string): TokenEntry {
  const body = bpe().encode(prompt);
  for (const id of body) {
    if (!Number.isInteger(id)) {
      throw new Error(`prompt ${JSON.stringify(prompt)} contains unencodable characters`);
    }
  }
  let ids = [START_ID, ...body, END_ID];
  if (ids.length > CONTEXT_LENGTH) {
    ids = ids.slice(0, CONTEXT_LENGTH - 1);
    ids.push(END_ID);
  }
  return { ids, eot_index: ids.length - 1 };
}

/** Inverse of encodeFramed up to normalization; framing ids are stripped. */
export function decodeEntry(entry: TokenEntry): string {
  const interior = entry.ids.slice(1, entry.eot_index);
  return normalize(bpe().decode(interior));
}

export function buildTokenFile(prompts: string[]): TokenFile {
  if (prompts.length === 0) throw new Error("prompt list is empty");
  const table: Record<string, TokenEntry> = {};
  for (const p of prompts) {
    table[p] = encodeFramed(p);
  }
  return {
    context_length: CONTEXT_LENGTH,
    vocab_size: VOCAB_SIZE,
    start_id: START_ID,
    end_id: END_ID,
    prompts: table,
  };
}
