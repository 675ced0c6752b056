// Minimal deterministic SVG plotting: fixed size, fixed palette, no
// timestamps or randomness, so identical inputs give identical bytes.

export const WIDTH = 640
export const HEIGHT = 420
export const MARGIN = { left: 70, right: 20, top: 36, bottom: 52 }

export const PALETTE = ['#1f5fa8', '#c2452d', '#3a8c3f', '#8456a8', '#946c2e']

export type ScaleKind = 'linear' | 'log'

export interface Axis {
  min: number
  max: number
  kind: ScaleKind
  label: string
}

export function fmt(v: number): string {
  if (v === 0) return '0'
  const a = Math.abs(v)
  if (a >= 1e4 || a < 1e-3) return v.toExponential(2)
  return String(parseFloat(v.toPrecision(6)))
}

function pos(v: number, axis: Axis, lo: number, hi: number): number {
  let t: number
  if (axis.kind === 'log') {
    t = (Math.log10(v) - Math.log10(axis.min)) /
        (Math.log10(axis.max) - Math.log10(axis.min))
  } else {
    t = (v - axis.min) / (axis.max - axis.min)
  }
  return lo + t * (hi - lo)
}

function linearTicks(min: number, max: number, n = 6): number[] {
  const span = max - min
  if (!(span > 0)) return [min]
  const step0 = span / n
  const mag = Math.pow(10, Math.floor(Math.log10(step0)))
  const step = [1, 2, 5, 10].map(m => m * mag).find(s => span / s <= n)!
  const ticks: number[] = []
  for (let v = Math.ceil(min / step) * step; v <= max + 1e-9 * span; v += step) {
    ticks.push(Math.abs(v) < 1e-12 * span ? 0 : v)
  }
  return ticks
}

function logTicks(min: number, max: number): number[] {
  const ticks: number[] = []
  for (let e = Math.ceil(Math.log10(min)); e <= Math.floor(Math.log10(max)); e++) {
    ticks.push(Math.pow(10, e))
  }
  return ticks.length >= 2 ? ticks : [min, max]
}

export interface Series {
  x: number[]
  y: number[]
  color: string
  label?: string
  marker?: boolean
}

export class Panel {
  private body: string[] = []
  private legend: string[] = []

  constructor(public title: string, public xAxis: Axis, public yAxis: Axis) {}

  private px(v: number): number { return pos(v, this.xAxis, MARGIN.left, WIDTH - MARGIN.right) }
  private py(v: number): number { return pos(v, this.yAxis, HEIGHT - MARGIN.bottom, MARGIN.top) }

  private visible(x: number, y: number): boolean {
    if (!isFinite(x) || !isFinite(y)) return false
    if (this.xAxis.kind === 'log' && x <= 0) return false
    if (this.yAxis.kind === 'log' && y <= 0) return false
    return true
  }

  line(s: Series): void {
    const pts: string[] = []
    for (let i = 0; i < s.x.length; i++) {
      if (!this.visible(s.x[i], s.y[i])) continue
      pts.push(`${this.px(s.x[i]).toFixed(2)},${this.py(s.y[i]).toFixed(2)}`)
    }
    if (pts.length > 1) {
      this.body.push(`<polyline fill="none" stroke="${s.color}" stroke-width="1.5" points="${pts.join(' ')}"/>`)
    }
    if (s.marker) {
      for (let i = 0; i < s.x.length; i++) {
        if (!this.visible(s.x[i], s.y[i])) continue
        this.body.push(`<circle cx="${this.px(s.x[i]).toFixed(2)}" cy="${this.py(s.y[i]).toFixed(2)}" r="3" fill="${s.color}"/>`)
      }
    }
    if (s.label) this.legend.push(`<tspan fill="${s.color}">${s.label}</tspan>`)
  }

  bars(x: number[], y: number[], color: string): void {
    const n = x.length
    const w = n > 1 ? Math.abs(this.px(x[1]) - this.px(x[0])) * 0.9 : 8
    const y0 = this.py(this.yAxis.kind === 'log' ? this.yAxis.min : Math.max(0, this.yAxis.min))
    for (let i = 0; i < n; i++) {
      if (!this.visible(x[i], y[i])) continue
      const top = this.py(y[i])
      this.body.push(`<rect x="${(this.px(x[i]) - w / 2).toFixed(2)}" y="${top.toFixed(2)}" width="${w.toFixed(2)}" height="${Math.max(0, y0 - top).toFixed(2)}" fill="${color}"/>`)
    }
  }

  hline(y: number, color: string): void {
    if (y < this.yAxis.min || y > this.yAxis.max) return
    const yy = this.py(y).toFixed(2)
    this.body.push(`<line x1="${MARGIN.left}" y1="${yy}" x2="${WIDTH - MARGIN.right}" y2="${yy}" stroke="${color}" stroke-dasharray="4 3"/>`)
  }

  render(): string {
    const out: string[] = []
    out.push(`<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" font-family="Helvetica, sans-serif" font-size="12">`)
    out.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`)
    const x0 = MARGIN.left, x1 = WIDTH - MARGIN.right
    const y0 = HEIGHT - MARGIN.bottom, y1 = MARGIN.top
    const xt = this.xAxis.kind === 'log'
      ? logTicks(this.xAxis.min, this.xAxis.max)
      : linearTicks(this.xAxis.min, this.xAxis.max)
    const yt = this.yAxis.kind === 'log'
      ? logTicks(this.yAxis.min, this.yAxis.max)
      : linearTicks(this.yAxis.min, this.yAxis.max)
    for (const v of xt) {
      const x = this.px(v).toFixed(2)
      out.push(`<line x1="${x}" y1="${y1}" x2="${x}" y2="${y0}" stroke="#e0e0e0"/>`)
      out.push(`<text x="${x}" y="${y0 + 18}" text-anchor="middle">${fmt(v)}</text>`)
    }
    for (const v of yt) {
      const y = this.py(v).toFixed(2)
      out.push(`<line x1="${x0}" y1="${y}" x2="${x1}" y2="${y}" stroke="#e0e0e0"/>`)
      out.push(`<text x="${x0 - 8}" y="${y}" text-anchor="end" dominant-baseline="middle">${fmt(v)}</text>`)
    }
    out.push(...this.body)
    out.push(`<rect x="${x0}" y="${y1}" width="${x1 - x0}" height="${y0 - y1}" fill="none" stroke="#333"/>`)
    out.push(`<text x="${(x0 + x1) / 2}" y="20" text-anchor="middle" font-size="14">${this.title}</text>`)
    out.push(`<text x="${(x0 + x1) / 2}" y="${HEIGHT - 14}" text-anchor="middle">${this.xAxis.label}</text>`)
    out.push(`<text x="20" y="${(y0 + y1) / 2}" text-anchor="middle" transform="rotate(-90 20 ${(y0 + y1) / 2})">${this.yAxis.label}</text>`)
    if (this.legend.length) {
      out.push(`<text x="${x1 - 8}" y="${y1 + 16}" text-anchor="end">${this.legend.join('  ')}</text>`)
    }
    out.push('</svg>')
    return out.join('\n') + '\n'
  }
}

export function extent(values: number[], positiveOnly = false): [number, number] {
  let lo = Infinity, hi = -Infinity
  for (const v of values) {
    if (!isFinite(v)) continue
    if (positiveOnly && v <= 0) continue
    if (v < lo) lo = v
    if (v > hi) hi = v
  }
  if (lo > hi) throw new Error('no finite data to plot')
  if (lo === hi) { lo -= 0.5; hi += 0.5 }
  return [lo, hi]
}

export function padded([lo, hi]: [number, number], frac = 0.05): [number, number] {
  const pad = (hi - lo) * frac
  return [lo - pad, hi + pad]
}
