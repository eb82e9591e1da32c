import { afterEach, beforeEach, describe, expect, it, vi } from 'vitest';

import { CSV_HEADER, integratePower, measureRun, toCsvRow } from '../src/measure.js';
import { constantSource, parseMockSpec, rampSource } from '../src/power.js';
import type { SamplingSession } from '../src/types.js';

function session(overrides: Partial<SamplingSession['runLabel']> = {}): SamplingSession {
  return {
    deviceIndex: 0,
    samplePeriodS: 0.05,
    runLabel: {
      modelId: 'llama-1b',
      hardwareId: 'l40s',
      phase: 'generation',
      inputTokens: 32,
      generatedTokens: 128,
      ...overrides,
    },
  };
}

const sleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

describe('measureRun with virtual time', () => {
  beforeEach(() => {
    vi.useFakeTimers();
  });
  afterEach(() => {
    vi.useRealTimers();
  });

  it('integrates a constant 100 W source over 10 s to 1000 J within 1%', async () => {
    const promise = measureRun(session(), () => sleep(10_000), constantSource(100));
    await vi.advanceTimersByTimeAsync(10_000);
    const row = await promise;
    expect(Math.abs(row.energyJ - 1000) / 1000).toBeLessThan(0.01);
    expect(Math.abs(row.durationS - 10)).toBeLessThan(0.1);
    expect(row.avgPowerW).toBeCloseTo(100, 1);
  });

  it('integrates a linear 0->100 W ramp over 10 s to 500 J within 2%', async () => {
    const source = rampSource(0, 100, 10);
    const promise = measureRun(session(), () => sleep(10_000), source);
    await vi.advanceTimersByTimeAsync(10_000);
    const row = await promise;
    expect(Math.abs(row.energyJ - 500) / 500).toBeLessThan(0.02);
  });

  it('keeps the energy = avg_power * duration identity exact', async () => {
    const promise = measureRun(session(), () => sleep(2_000), constantSource(37.5));
    await vi.advanceTimersByTimeAsync(2_000);
    const row = await promise;
    const reconstructed = row.avgPowerW * row.durationS;
    expect(Math.abs(reconstructed - row.energyJ)).toBeLessThanOrEqual(1e-9 * row.energyJ);
  });

  it('averages reported gpu utilization into the row', async () => {
    const promise = measureRun(session(), () => sleep(1_000), constantSource(100, 0.9));
    await vi.advanceTimersByTimeAsync(1_000);
    const row = await promise;
    expect(row.gpuUtil).toBeCloseTo(0.9, 12);
  });

  it('leaves gpu_util empty when the source does not report it', async () => {
    const promise = measureRun(session(), () => sleep(1_000), constantSource(100));
    await vi.advanceTimersByTimeAsync(1_000);
    const row = await promise;
    expect(row.gpuUtil).toBeNull();
    expect(toCsvRow(row).split(',')[8]).toBe('');
  });

  it('rejects zero-duration runs', async () => {
    await expect(measureRun(session(), () => undefined, constantSource(100))).rejects.toThrow(
      /zero wall-clock duration/,
    );
  });

  it('rejects input-phase labels with more than one generated token', async () => {
    const bad = session({ phase: 'input', generatedTokens: 4 });
    await expect(measureRun(bad, () => sleep(100), constantSource(100))).rejects.toThrow(
      /exactly one token/,
    );
  });

  it('stops sampling when the run itself throws', async () => {
    const source = constantSource(100);
    const readSpy = vi.spyOn(source, 'read');
    const failing = measureRun(
      session(),
      async () => {
        await sleep(500);
        throw new Error('inference crashed');
      },
      source,
    );
    const expectation = expect(failing).rejects.toThrow('inference crashed');
    await vi.advanceTimersByTimeAsync(2_000);
    await expectation;
    const callsAtFailure = readSpy.mock.calls.length;
    await vi.advanceTimersByTimeAsync(2_000);
    expect(readSpy.mock.calls.length).toBe(callsAtFailure);
  });
});

describe('integration helpers', () => {
  it('trapezoid matches a hand-computed two-segment case', () => {
    const samples = [
      { tS: 0, powerW: 0 },
      { tS: 1, powerW: 100 },
      { tS: 3, powerW: 100 },
    ];
    // 1s ramp 0->100 (50 J) plus 2s at 100 W (200 J)
    expect(integratePower(samples)).toBe(250);
  });

  it('emits the exact schema column order', async () => {
    vi.useFakeTimers();
    try {
      const promise = measureRun(
        session({ phase: 'input', inputTokens: 64, generatedTokens: 1 }),
        () => sleep(1_000),
        constantSource(50),
      );
      await vi.advanceTimersByTimeAsync(1_000);
      const row = await promise;
      expect(CSV_HEADER).toBe(
        'model_id,hardware_id,phase,input_tokens,generated_tokens,' +
          'avg_power_w,duration_s,energy_j,gpu_util,batch_size',
      );
      const cells = toCsvRow(row).split(',');
      expect(cells).toHaveLength(10);
      expect(cells[0]).toBe('llama-1b');
      expect(cells[2]).toBe('input');
      expect(cells[3]).toBe('64');
      expect(cells[4]).toBe('1');
      expect(cells[9]).toBe('1');
    } finally {
      vi.useRealTimers();
    }
  });

  it('parses mock specs and rejects malformed ones', () => {
    expect(parseMockSpec('constant:100').read().powerW).toBe(100);
    expect(parseMockSpec('ramp:0:100:10').describe()).toContain('ramp');
    expect(() => parseMockSpec('fusion:9000')).toThrow(/bad --mock spec/);
  });

  it('reports a clear error when the device is unreachable', async () => {
    const { nvidiaSmiSource } = await import('../src/power.js');
    // device 9999 fails whether or not nvidia-smi is installed
    expect(() => nvidiaSmiSource(9999).read()).toThrow(/nvidia-smi unavailable/);
  });
});
