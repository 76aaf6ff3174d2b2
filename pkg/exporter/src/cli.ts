#!/usr/bin/env node
// Subcommands:
//   fixture --out <path>                 write a synthetic source checkpoint
//   export  --source <path> --out <path> [--tokens <path> --prompts "a,b"]
//           [--manifest <path>]          convert to the engine container
//   decode  --tokens <path>              print {prompt: decoded} for a token file

import * as fs from "node:fs";
import { parseArgs } from "node:util";

import { ExportError, exportCheckpoint, writeManifest } from "./export.js";
import { writeFixture } from "./fixture.js";
import { buildTokenFile, decodeEntry, TokenFile } from "./tokenizer.js";

const USAGE = `usage: cli.js <fixture|export|decode> [options]
  fixture --out <path>
  export  --source <path> --out <path> [--tokens <path> --prompts <list>] [--manifest <path>]
  decode  --tokens <path>`;

function fail(msg: string): never {
  process.stderr.write(`error: ${msg}\n`);
  process.exit(1);
}

function usageError(msg: string): never {
  process.stderr.write(`error: ${msg}\n${USAGE}\n`);
  process.exit(2);
}

function need(value: string | undefined, flag: string): string {
  if (!value) usageError(`missing required ${flag}`);
  return value;
}

function mb(p: string): string {
  return (fs.statSync(p).size / (1024 * 1024)).toFixed(1);
}

function cmdFixture(args: string[]): void {
  const { values } = parseArgs({ args, options: { out: { type: "string" } } });
  const out = need(values.out, "--out");
  writeFixture(out);
  process.stdout.write(`wrote ${out} (${mb(out)} MB)\n`);
}

function cmdExport(args: string[]): void {
  const { values } = parseArgs({
    args,
    options: {
      source: { type: "string" },
      out: { type: "string" },
      tokens: { type: "string" },
      prompts: { type: "string" },
      manifest: { type: "string" },
    },
  });
  const source = need(values.source, "--source");
  const out = need(values.out, "--out");
  if (!fs.existsSync(source)) fail(`source checkpoint ${source} does not exist`);
  if ((values.prompts === undefined) !== (values.tokens === undefined)) {
    usageError("--prompts and --tokens must be given together");
  }

  const manifest = exportCheckpoint(source, out);
  process.stdout.write(
    `wrote ${out} (${manifest.container.tensor_count} tensors, ${mb(out)} MB)\n`
  );
  for (const name of manifest.unused_source) {
    process.stderr.write(`warning: unrecognized source tensor ${name} was not exported\n`);
  }

  if (values.prompts !== undefined) {
    const prompts = values.prompts.split(",").map((p) => p.trim()).filter((p) => p.length > 0);
    if (prompts.length === 0) fail("--prompts is empty");
    const file = buildTokenFile(prompts);
    fs.writeFileSync(values.tokens!, JSON.stringify(file, null, 2) + "\n");
    manifest.prompts = file.prompts;
    process.stdout.write(`wrote ${values.tokens} (${prompts.length} prompts)\n`);
  }

  const manifestPath = values.manifest ?? out + ".manifest.json";
  writeManifest(manifest, manifestPath);
  process.stdout.write(`wrote ${manifestPath}\n`);
}

function cmdDecode(args: string[]): void {
  const { values } = parseArgs({ args, options: { tokens: { type: "string" } } });
  const tokensPath = need(values.tokens, "--tokens");
  let file: TokenFile;
  try {
    file = JSON.parse(fs.readFileSync(tokensPath, "utf-8"));
  } catch (e) {
    fail(`cannot read token file ${tokensPath}: ${(e as Error).message}`);
  }
  const decoded: Record<string, string> = {};
  for (const [prompt, entry] of Object.entries(file.prompts ?? {})) {
    decoded[prompt] = decodeEntry(entry);
  }
  process.stdout.write(JSON.stringify(decoded, null, 2) + "\n");
}

function main(argv: string[]): void {
  const [cmd, ...rest] = argv;
  try {
    if (cmd === "fixture") cmdFixture(rest);
    else if (cmd === "export") cmdExport(rest);
    else if (cmd === "decode") cmdDecode(rest);
    else usageError(`unknown subcommand ${cmd ?? "(none)"}`);
  } catch (e) {
    if (e instanceof ExportError) fail(e.message);
    throw e;
  }
}

main(process.argv.slice(2));
