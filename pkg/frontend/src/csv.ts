import { readFileSync } from 'node:fs'

export interface Table {
  meta: Record<string, string>
  columns: string[]
  rows: string[][]
  path: string
}

/**
 * Read one spinlev CSV: `# key = value` metadata lines, a single header
 * line, then comma-separated rows.  Cells stay strings here; figure
 * builders pull numeric or label columns as needed.
 */
export function readTable(path: string): Table {
  const text = readFileSync(path, 'utf8')
  const meta: Record<string, string> = {}
  let columns: string[] | null = null
  const rows: string[][] = []
  for (const raw of text.split('\n')) {
    const line = raw.trim()
    if (!line) continue
    if (line.startsWith('#')) {
      const eq = line.indexOf('=')
      if (eq > 0) meta[line.slice(1, eq).trim()] = line.slice(eq + 1).trim()
      continue
    }
    if (columns === null) {
      columns = line.split(',').map(c => c.trim())
      continue
    }
    rows.push(line.split(',').map(c => c.trim()))
  }
  if (columns === null) throw new Error(`${path}: empty input, no header line`)
  if (rows.length === 0) throw new Error(`${path}: empty input, no data rows`)
  return { meta, columns, rows, path }
}

export function rawColumn(table: Table, name: string): string[] {
  const idx = table.columns.indexOf(name)
  if (idx < 0) {
    throw new Error(
      `${table.path}: missing column '${name}' (found: ${table.columns.join(', ')})`)
  }
  return table.rows.map(r => r[idx] ?? '')
}

export function column(table: Table, name: string): number[] {
  return rawColumn(table, name).map(c => Number(c))
}
