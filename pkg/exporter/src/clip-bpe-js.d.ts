// The published package points its "types" condition at a .js file, so the
// compiler never finds the bundled declarations. This covers the surface we use.
declare module "clip-bpe-js" {
  export default class Tokenizer {
    encoder: Record<string, number>;
    decoder: Record<number, string>;
    encode(text: string): number[];
    decode(tokens: number[]): string;
  }
}
