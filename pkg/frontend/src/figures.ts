import { basename } from 'node:path'

import { column, rawColumn, readTable } from './csv.js'
import { PALETTE, Panel, extent, padded } from './svg.js'

export type FigureKind =
  | 'psd_panel' | 'sweep_panel' | 'hysteresis' | 'histogram' | 'threshold'

export interface FigureSpec {
  kind: FigureKind
  inputs: string[]
  output: string
  title?: string
}

function one(spec: FigureSpec): string {
  if (spec.inputs.length !== 1) {
    throw new Error(`${spec.kind} takes exactly one --in file`)
  }
  return spec.inputs[0]
}

/** Overlaid spectra on log-log axes, one line per input CSV. */
function psdPanel(spec: FigureSpec): string {
  if (spec.inputs.length === 0) throw new Error('psd_panel needs at least one --in file')
  const tables = spec.inputs.map(readTable)
  const series = tables.map(t => ({
    freq: column(t, 'freq_hz'),
    psd: column(t, 'psd_rad2_per_hz'),
    name: basename(t.path, '.csv'),
  }))
  const [fLo, fHi] = extent(series.flatMap(s => s.freq), true)
  const [pLo, pHi] = extent(series.flatMap(s => s.psd), true)
  const panel = new Panel(
    spec.title ?? 'Libration power spectrum',
    { min: fLo, max: fHi, kind: 'log', label: 'frequency (Hz)' },
    { min: pLo, max: pHi, kind: 'log', label: 'PSD (rad^2/Hz)' })
  series.forEach((s, i) => panel.line({
    x: s.freq, y: s.psd, color: PALETTE[i % PALETTE.length],
    label: series.length > 1 ? s.name : undefined,
  }))
  return panel.render()
}

/** Effective damping versus the swept drive axis, failed points dropped. */
function sweepPanel(spec: FigureSpec): string {
  const table = readTable(one(spec))
  const axisName = table.columns.includes('detuning_hz') ? 'detuning_hz' : 'rabi_khz'
  const axis = column(table, axisName)
  const gamma = column(table, 'gamma_eff_hz')
  const status = rawColumn(table, 'status')
  const x: number[] = [], y: number[] = []
  for (let i = 0; i < axis.length; i++) {
    if (status[i] !== 'ok') continue
    x.push(axisName === 'detuning_hz' ? axis[i] / 1e6 : axis[i])
    y.push(gamma[i])
  }
  if (x.length === 0) throw new Error(`${table.path}: no successful sweep points`)
  const xLabel = axisName === 'detuning_hz' ? 'detuning (MHz)' : 'Rabi frequency (kHz)'
  const panel = new Panel(
    spec.title ?? 'Effective damping across the sweep',
    { ...rangeOf(x), kind: 'linear', label: xLabel },
    { ...rangeOf(y, true), kind: 'linear', label: 'gamma_eff/2pi (Hz)' })
  panel.hline(0, '#888')
  panel.line({ x, y, color: PALETTE[0], marker: true })
  return panel.render()
}

/** Up/down quasi-static sweep traces forming the hysteresis loop. */
function hysteresis(spec: FigureSpec): string {
  const table = readTable(one(spec))
  const det = column(table, 'detuning_hz').map(v => v / 1e6)
  const up = column(table, 'phi_up')
  const down = column(table, 'phi_down')
  const panel = new Panel(
    spec.title ?? 'Orientation hysteresis',
    { ...rangeOf(det), kind: 'linear', label: 'detuning (MHz)' },
    { ...rangeOf(up.concat(down), true), kind: 'linear', label: 'phi (rad)' })
  panel.line({ x: det, y: up, color: PALETTE[0], label: 'up', marker: true })
  panel.line({ x: det, y: down, color: PALETTE[1], label: 'down', marker: true })
  return panel.render()
}

/** Angle occupation histogram (double-horned above lasing threshold). */
function histogram(spec: FigureSpec): string {
  const table = readTable(one(spec))
  const phi = column(table, 'phi_rad')
  const count = column(table, 'count')
  const panel = new Panel(
    spec.title ?? 'Angle distribution',
    { ...rangeOf(phi), kind: 'linear', label: 'phi (rad)' },
    { min: 0, max: extent(count)[1] * 1.05, kind: 'linear', label: 'counts' })
  panel.bars(phi, count, PALETTE[0])
  return panel.render()
}

/** Lasing threshold versus spin relaxation rate. */
function threshold(spec: FigureSpec): string {
  const table = readTable(one(spec))
  const invT1 = column(table, 'inv_t1_khz')
  const omega = column(table, 'omega_th_khz')
  const panel = new Panel(
    spec.title ?? 'Lasing threshold vs spin relaxation',
    { ...rangeOf(invT1), kind: 'linear', label: '1/T1 (kHz)' },
    { ...rangeOf(omega, true), kind: 'linear', label: 'threshold Rabi frequency (kHz)' })
  panel.line({ x: invT1, y: omega, color: PALETTE[1], marker: true })
  return panel.render()
}

function rangeOf(values: number[], includeZero = false): { min: number, max: number } {
  let [lo, hi] = padded(extent(values))
  if (includeZero) { lo = Math.min(lo, 0); hi = Math.max(hi, 0) }
  return { min: lo, max: hi }
}

const BUILDERS: Record<FigureKind, (spec: FigureSpec) => string> = {
  psd_panel: psdPanel,
  sweep_panel: sweepPanel,
  hysteresis,
  histogram,
  threshold,
}

/** Build the SVG text for a figure; throws before anything is written. */
export function render(spec: FigureSpec): string {
  const builder = BUILDERS[spec.kind]
  if (!builder) throw new Error(`unknown figure kind '${spec.kind}'`)
  return builder(spec)
}
