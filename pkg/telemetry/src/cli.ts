#!/usr/bin/env node
/**
 * Measure one run's GPU energy and append a measurements CSV row.
 *
 * The measured run is either a shell command (--cmd) or a plain sleep
 * (--duration-s). Without a GPU, pass --mock constant:<W> or
 * ramp:<W>:<W>:<s> instead of sampling nvidia-smi.
 */
import { spawn } from 'node:child_process';
import { appendFileSync, existsSync, writeFileSync } from 'node:fs';
import { parseArgs } from 'node:util';

import { CSV_HEADER, measureRun, toCsvRow } from './measure.js';
import { nvidiaSmiSource, parseMockSpec } from './power.js';
import type { SamplingSession } from './types.js';

function usageError(message: string): never {
  console.error(`error: ${message}`);
  console.error(
    'usage: measure --model <id> --hardware <id> --phase input|generation ' +
      '--input-tokens <n> --generated-tokens <n> --out <csv> ' +
      '[--device <i>] [--period-s <s>] [--cmd <shell>] [--duration-s <s>] [--mock <spec>]',
  );
  process.exit(1);
}

async function main(): Promise<void> {
  const { values } = parseArgs({
    options: {
      model: { type: 'string' },
      hardware: { type: 'string' },
      phase: { type: 'string' },
      'input-tokens': { type: 'string' },
      'generated-tokens': { type: 'string' },
      device: { type: 'string', default: '0' },
      'period-s': { type: 'string', default: '0.05' },
      cmd: { type: 'string' },
      'duration-s': { type: 'string' },
      mock: { type: 'string' },
      out: { type: 'string' },
    },
  });

  for (const field of ['model', 'hardware', 'phase', 'input-tokens', 'generated-tokens', 'out']) {
    if (!(values as Record<string, unknown>)[field]) usageError(`--${field} is required`);
  }
  const phase = values.phase as string;
  if (phase !== 'input' && phase !== 'generation') {
    usageError(`--phase must be input or generation, got ${phase}`);
  }
  if (!values.cmd && !values['duration-s']) {
    usageError('one of --cmd or --duration-s is required');
  }

  const session: SamplingSession = {
    deviceIndex: Number.parseInt(values.device as string, 10),
    samplePeriodS: Number.parseFloat(values['period-s'] as string),
    runLabel: {
      modelId: values.model as string,
      hardwareId: values.hardware as string,
      phase,
      inputTokens: Number.parseInt(values['input-tokens'] as string, 10),
      generatedTokens: Number.parseInt(values['generated-tokens'] as string, 10),
    },
  };
  const source = values.mock
    ? parseMockSpec(values.mock as string)
    : nvidiaSmiSource(session.deviceIndex);

  const run = values.cmd
    ? () =>
        new Promise<void>((resolve, reject) => {
          const child = spawn(values.cmd as string, { shell: true, stdio: 'inherit' });
          child.on('error', reject);
          child.on('exit', (code) =>
            code === 0 ? resolve() : reject(new Error(`command exited with ${code}`)),
          );
        })
    : () =>
        new Promise<void>((resolve) =>
          setTimeout(resolve, Number.parseFloat(values['duration-s'] as string) * 1000),
        );

  const row = await measureRun(session, run, source);

  const outPath = values.out as string;
  if (!existsSync(outPath)) {
    writeFileSync(outPath, CSV_HEADER + '\n');
  }
  appendFileSync(outPath, toCsvRow(row) + '\n');
  console.error(
    `sampled ${source.describe()}: ${row.energyJ.toFixed(3)} J over ` +
      `${row.durationS.toFixed(3)} s (avg ${row.avgPowerW.toFixed(2)} W) -> ${outPath}`,
  );
}

main().catch((err: Error) => {
  console.error(`error: ${err.message}`);
  process.exit(1);
});
