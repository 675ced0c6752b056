#!/usr/bin/env node
// spinlev-plots <kind> --in results.csv [--in more.csv] --out figure.svg
//
// One subcommand per figure kind; reads spinlev CSV outputs and writes a
// deterministic SVG.  Nothing is written when rendering fails.

import { writeFileSync } from 'node:fs'
import { parseArgs } from 'node:util'

import { FigureKind, render } from './figures.js'

const KINDS: FigureKind[] = [
  'psd_panel', 'sweep_panel', 'hysteresis', 'histogram', 'threshold']

export function main(argv: string[]): number {
  const kind = argv[0] as FigureKind
  if (!kind || !KINDS.includes(kind)) {
    process.stderr.write(
      `usage: spinlev-plots <${KINDS.join('|')}> --in FILE [--in FILE ...] --out FILE [--title TEXT]\n`)
    return 2
  }
  let values
  try {
    values = parseArgs({
      args: argv.slice(1),
      options: {
        in: { type: 'string', multiple: true },
        out: { type: 'string' },
        title: { type: 'string' },
      },
    }).values
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`)
    return 2
  }
  if (!values.in?.length || !values.out) {
    process.stderr.write('error: --in and --out are required\n')
    return 2
  }
  try {
    const svg = render({ kind, inputs: values.in, output: values.out,
                         title: values.title })
    writeFileSync(values.out, svg)
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`)
    return 1
  }
  return 0
}

process.exitCode = main(process.argv.slice(2))
