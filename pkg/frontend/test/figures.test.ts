import { execFileSync } from 'node:child_process'
import { existsSync, mkdtempSync, readFileSync, writeFileSync } from 'node:fs'
import { tmpdir } from 'node:os'
import { join } from 'node:path'
import { describe, expect, it } from 'vitest'

import { column, readTable } from '../src/csv.js'
import { FigureKind, render } from '../src/figures.js'

const FIXTURES = join(__dirname, 'fixtures')
const CLI = join(__dirname, '..', 'dist', 'cli.js')

const CASES: [FigureKind, string][] = [
  ['psd_panel', 'psd.csv'],
  ['sweep_panel', 'sweep.csv'],
  ['hysteresis', 'hysteresis.csv'],
  ['histogram', 'histogram.csv'],
  ['threshold', 'threshold.csv'],
]

function tmp(): string {
  return mkdtempSync(join(tmpdir(), 'spinlev-plots-'))
}

describe('csv reader', () => {
  it('parses metadata, header and rows', () => {
    const t = readTable(join(FIXTURES, 'threshold.csv'))
    expect(t.meta.seed).toBe('2')
    expect(t.columns).toEqual(['inv_t1_khz', 'omega_th_khz'])
    expect(column(t, 'inv_t1_khz')).toEqual([1, 2])
  })

  it('rejects a file without data rows', () => {
    const path = join(tmp(), 'empty.csv')
    writeFileSync(path, '# seed = 1\nfreq_hz,psd_rad2_per_hz\n')
    expect(() => readTable(path)).toThrow(/empty input/)
  })

  it('names the missing column in the error', () => {
    const t = readTable(join(FIXTURES, 'threshold.csv'))
    expect(() => column(t, 'freq_hz')).toThrow(/missing column 'freq_hz'/)
  })
})

describe('figure rendering', () => {
  it.each(CASES)('%s renders valid svg from the fixture', (kind, file) => {
    const svg = render({ kind, inputs: [join(FIXTURES, file)], output: '' })
    expect(svg.startsWith('<svg ')).toBe(true)
    expect(svg.trimEnd().endsWith('</svg>')).toBe(true)
    expect(kind === 'histogram' ? svg.includes('<rect')
                                : svg.includes('<polyline')).toBe(true)
  })

  it.each(CASES)('%s is deterministic', (kind, file) => {
    const spec = { kind, inputs: [join(FIXTURES, file)], output: '' }
    expect(render(spec)).toBe(render(spec))
  })

  it('overlays several spectra with a legend', () => {
    const psd = join(FIXTURES, 'psd.csv')
    const svg = render({ kind: 'psd_panel', inputs: [psd, psd, psd], output: '' })
    expect((svg.match(/<polyline/g) ?? []).length).toBe(3)
    expect(svg).toContain('<tspan')
  })

  it('histogram draws one bar per populated bin', () => {
    const t = readTable(join(FIXTURES, 'histogram.csv'))
    const svg = render({
      kind: 'histogram', inputs: [join(FIXTURES, 'histogram.csv')], output: '' })
    expect((svg.match(/<rect/g) ?? []).length).toBeGreaterThan(t.rows.length / 2)
  })

  it('sweep panel drops rows whose status is not ok', () => {
    const path = join(tmp(), 'sweep.csv')
    writeFileSync(path, [
      'detuning_hz,omega_eff_hz,gamma_eff_hz,re_xi,im_xi,status',
      '-2e6,478,40,1,-2,ok',
      '0,nan,nan,nan,nan,NonLinearResponse',
      '2e6,482,-8,1,2,ok',
      '',
    ].join('\n'))
    const svg = render({ kind: 'sweep_panel', inputs: [path], output: '' })
    expect((svg.match(/<circle/g) ?? []).length).toBe(2)
  })

  it('sweep panel with only failed rows is an error', () => {
    const path = join(tmp(), 'sweep.csv')
    writeFileSync(path, [
      'detuning_hz,omega_eff_hz,gamma_eff_hz,re_xi,im_xi,status',
      '0,nan,nan,nan,nan,NoFixedPoint',
      '',
    ].join('\n'))
    expect(() => render({ kind: 'sweep_panel', inputs: [path], output: '' }))
      .toThrow(/no successful sweep points/)
  })

  it('wrong schema is reported as a missing column', () => {
    expect(() => render({
      kind: 'psd_panel', inputs: [join(FIXTURES, 'threshold.csv')], output: '' }))
      .toThrow(/missing column 'freq_hz'/)
  })
})

describe('command line', () => {
  function run(args: string[]): { status: number, stderr: string } {
    try {
      execFileSync('node', [CLI, ...args], { stdio: ['ignore', 'pipe', 'pipe'] })
      return { status: 0, stderr: '' }
    } catch (err: any) {
      return { status: err.status, stderr: String(err.stderr) }
    }
  }

  it.each(CASES)('%s writes byte-identical svg on re-run', (kind, file) => {
    const dir = tmp()
    const a = join(dir, 'a.svg')
    const b = join(dir, 'b.svg')
    expect(run([kind, '--in', join(FIXTURES, file), '--out', a]).status).toBe(0)
    expect(run([kind, '--in', join(FIXTURES, file), '--out', b]).status).toBe(0)
    expect(readFileSync(a)).toEqual(readFileSync(b))
  })

  it('empty input leaves no output file behind', () => {
    const dir = tmp()
    const empty = join(dir, 'empty.csv')
    writeFileSync(empty, 'phi_rad,count\n')
    const out = join(dir, 'fig.svg')
    const res = run(['histogram', '--in', empty, '--out', out])
    expect(res.status).toBe(1)
    expect(res.stderr).toContain('empty input')
    expect(existsSync(out)).toBe(false)
  })

  it('unknown figure kind is a usage error', () => {
    const res = run(['scatter3d', '--in', 'x.csv', '--out', 'y.svg'])
    expect(res.status).toBe(2)
    expect(res.stderr).toContain('usage:')
  })

  it('missing --out is a usage error', () => {
    const res = run(['histogram', '--in', join(FIXTURES, 'histogram.csv')])
    expect(res.status).toBe(2)
  })
})
