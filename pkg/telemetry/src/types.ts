/** Labels attached to one measured inference run. */
export interface RunLabel {
  modelId: string;
  hardwareId: string;
  phase: 'input' | 'generation';
  inputTokens: number;
  generatedTokens: number;
}

/** One sampling session: which device, how often, and what the run is. */
export interface SamplingSession {
  deviceIndex: number;
  /** seconds between power samples */
  samplePeriodS: number;
  runLabel: RunLabel;
}

/** Instantaneous reading from a power source. */
export interface PowerReading {
  powerW: number;
  /** fraction in [0,1] when the source reports it */
  gpuUtil?: number;
}

/** Synchronous power source; real hardware or an injected mock. */
export interface PowerSource {
  read(): PowerReading;
  describe(): string;
}

export interface PowerSample extends PowerReading {
  /** seconds (epoch-based); only differences matter */
  tS: number;
}

/** One row of the measurements CSV schema consumed by the routing pipeline. */
export interface MeasurementRow {
  modelId: string;
  hardwareId: string;
  phase: 'input' | 'generation';
  inputTokens: number;
  generatedTokens: number;
  avgPowerW: number;
  durationS: number;
  energyJ: number;
  gpuUtil: number | null;
  batchSize: 1;
}
