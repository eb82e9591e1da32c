import { execSync } from 'node:child_process';

import type { PowerReading, PowerSource } from './types.js';

/**
 * Reads instantaneous board power (and GPU utilization) via nvidia-smi.
 * One process spawn per sample keeps the dependency surface at zero; the
 * default 50 ms period leaves ample headroom for the query.
 */
export function nvidiaSmiSource(deviceIndex: number): PowerSource {
  const cmd =
    `nvidia-smi --query-gpu=power.draw,utilization.gpu ` +
    `--format=csv,noheader,nounits -i ${deviceIndex}`;
  return {
    describe: () => `nvidia-smi device ${deviceIndex}`,
    read(): PowerReading {
      let stdout: string;
      try {
        stdout = execSync(cmd, { encoding: 'utf8', stdio: ['ignore', 'pipe', 'pipe'] });
      } catch (err) {
        throw new Error(
          `nvidia-smi unavailable for device ${deviceIndex}: ${(err as Error).message}. ` +
            'Pass a mock power source (--mock) to run without a GPU.',
        );
      }
      const [powerRaw, utilRaw] = stdout.trim().split(',').map((s) => s.trim());
      const powerW = Number.parseFloat(powerRaw);
      if (!Number.isFinite(powerW)) {
        throw new Error(`unparseable nvidia-smi power reading: ${JSON.stringify(stdout)}`);
      }
      const util = Number.parseFloat(utilRaw);
      return {
        powerW,
        gpuUtil: Number.isFinite(util) ? util / 100 : undefined,
      };
    },
  };
}

/** Constant wattage; for tests and dry runs. */
export function constantSource(watts: number, gpuUtil?: number): PowerSource {
  return {
    describe: () => `mock constant ${watts} W`,
    read: () => ({ powerW: watts, gpuUtil }),
  };
}

/**
 * Power ramping linearly from startW to endW over rampS seconds (then held).
 * The analytic energy over the ramp is rampS * (startW + endW) / 2.
 */
export function rampSource(startW: number, endW: number, rampS: number): PowerSource {
  const t0 = Date.now() / 1000;
  return {
    describe: () => `mock ramp ${startW}->${endW} W over ${rampS} s`,
    read: () => {
      const elapsed = Date.now() / 1000 - t0;
      const frac = Math.min(Math.max(elapsed / rampS, 0), 1);
      return { powerW: startW + (endW - startW) * frac };
    },
  };
}

/** Parses --mock specs: constant:<watts> or ramp:<startW>:<endW>:<seconds>. */
export function parseMockSpec(spec: string): PowerSource {
  const parts = spec.split(':');
  if (parts[0] === 'constant' && parts.length === 2) {
    return constantSource(Number.parseFloat(parts[1]));
  }
  if (parts[0] === 'ramp' && parts.length === 4) {
    return rampSource(
      Number.parseFloat(parts[1]),
      Number.parseFloat(parts[2]),
      Number.parseFloat(parts[3]),
    );
  }
  throw new Error(`bad --mock spec ${JSON.stringify(spec)}; use constant:<W> or ramp:<W>:<W>:<s>`);
}
