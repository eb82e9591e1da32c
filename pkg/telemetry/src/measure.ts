import type {
  MeasurementRow,
  PowerSample,
  PowerSource,
  SamplingSession,
} from './types.js';

export const CSV_HEADER =
  'model_id,hardware_id,phase,input_tokens,generated_tokens,' +
  'avg_power_w,duration_s,energy_j,gpu_util,batch_size';

/** Trapezoidal integral of (t, W) samples; joules. */
export function integratePower(samples: PowerSample[]): number {
  let energy = 0;
  for (let i = 1; i < samples.length; i++) {
    const dt = samples[i].tS - samples[i - 1].tS;
    energy += (dt * (samples[i].powerW + samples[i - 1].powerW)) / 2;
  }
  return energy;
}

/**
 * Samples the power source around `run` and integrates to one measurement row.
 *
 * One sample lands at run start and one right after completion so the
 * integral spans the exact wall-clock window; avg_power is energy/duration,
 * which keeps the emitted row's power*duration == energy identity exact.
 * Batch size is always 1: rows describe single unbatched runs.
 */
export async function measureRun(
  session: SamplingSession,
  run: () => Promise<void> | void,
  source: PowerSource,
): Promise<MeasurementRow> {
  if (session.samplePeriodS <= 0) {
    throw new Error(`samplePeriodS must be > 0, got ${session.samplePeriodS}`);
  }
  const { runLabel } = session;
  if (runLabel.phase === 'input' && runLabel.generatedTokens !== 1) {
    throw new Error('input-phase runs generate exactly one token');
  }

  const samples: PowerSample[] = [];
  const take = () => {
    const reading = source.read();
    samples.push({ tS: Date.now() / 1000, ...reading });
  };

  take(); // run start
  const timer = setInterval(take, session.samplePeriodS * 1000);
  try {
    await run();
  } finally {
    clearInterval(timer);
  }
  take(); // run end

  if (samples.length < 2) {
    throw new Error('no samples collected during the run');
  }
  const durationS = samples[samples.length - 1].tS - samples[0].tS;
  if (durationS <= 0) {
    throw new Error('run finished with zero wall-clock duration');
  }
  const energyJ = integratePower(samples);
  const utils = samples.map((s) => s.gpuUtil).filter((u): u is number => u !== undefined);
  const gpuUtil = utils.length > 0 ? utils.reduce((a, b) => a + b, 0) / utils.length : null;

  return {
    modelId: runLabel.modelId,
    hardwareId: runLabel.hardwareId,
    phase: runLabel.phase,
    inputTokens: runLabel.inputTokens,
    generatedTokens: runLabel.generatedTokens,
    avgPowerW: energyJ / durationS,
    durationS,
    energyJ,
    gpuUtil,
    batchSize: 1,
  };
}

/** Serializes a row in the exact measurements CSV schema (no header). */
export function toCsvRow(row: MeasurementRow): string {
  return [
    row.modelId,
    row.hardwareId,
    row.phase,
    String(row.inputTokens),
    String(row.generatedTokens),
    String(row.avgPowerW),
    String(row.durationS),
    String(row.energyJ),
    row.gpuUtil === null ? '' : String(row.gpuUtil),
    String(row.batchSize),
  ].join(',');
}
