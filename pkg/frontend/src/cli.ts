import { CHART_KINDS, ChartKind, ChartSpec, render } from "./charts";
import { ChartInputError } from "./csv";

const USAGE = `usage: chart <kind> <input.csv> [input2.csv ...] <output.svg> [options]

kinds: ${CHART_KINDS.join(" | ")}
options:
  --band A:B     invariant interval to shade (sigma-band)
  --eps-c X      threshold for the gap axis (gauss-trend)
  --title TEXT   title override
`;

export function parseArgs(argv: string[]): ChartSpec {
  const positional: string[] = [];
  let band: [number, number] | undefined;
  let epsC: number | undefined;
  let title: string | undefined;
  for (let i = 0; i < argv.length; i++) {
    const tok = argv[i];
    if (tok === "--band") {
      const raw = argv[++i];
      const parts = (raw ?? "").split(":").map(Number);
      if (parts.length !== 2 || parts.some(Number.isNaN)) {
        throw new ChartInputError(`--band expects A:B, got "${raw}"`);
      }
      band = [parts[0], parts[1]];
    } else if (tok === "--eps-c") {
      epsC = Number(argv[++i]);
      if (Number.isNaN(epsC)) {
        throw new ChartInputError("--eps-c expects a number");
      }
    } else if (tok === "--title") {
      title = argv[++i];
    } else if (tok.startsWith("--")) {
      throw new ChartInputError(`unknown option ${tok}`);
    } else {
      positional.push(tok);
    }
  }
  if (positional.length < 3) {
    throw new ChartInputError("need a kind, at least one input, and an output");
  }
  const kind = positional[0] as ChartKind;
  if (!CHART_KINDS.includes(kind)) {
    throw new ChartInputError(`unknown chart kind "${positional[0]}"`);
  }
  return {
    kind,
    inputs: positional.slice(1, -1),
    output: positional[positional.length - 1],
    band,
    epsC,
    title,
  };
}

export function run(argv: string[]): number {
  if (argv.length === 0 || argv[0] === "--help" || argv[0] === "-h") {
    process.stdout.write(USAGE);
    return 0;
  }
  try {
    const spec = parseArgs(argv);
    render(spec);
    return 0;
  } catch (err) {
    if (err instanceof ChartInputError) {
      process.stderr.write(`chart: ${err.message}\n`);
      return 2;
    }
    process.stderr.write(`chart: ${(err as Error).message}\n`);
    return 1;
  }
}

if (require.main === module) {
  process.exit(run(process.argv.slice(2)));
}
