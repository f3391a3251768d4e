/** Client-side check of the pilot console grammar.
 *
 * Mirrors the host's parser so the console can flag mistakes before
 * transmitting; the host remains authoritative and repeats every check.
 * Input form: `<CALLSIGN> <VERB> <ARG>`, case-insensitive, fields
 * separated by single spaces.
 */

export const VERBS = ["FH", "C", "D", "SPD", "DCT"] as const;
export type Verb = (typeof VERBS)[number];

const CALLSIGN_RE = /^[A-Z0-9]{2,}$/;
const INT_RE = /^\d+$/;

export interface ParsedCommand {
  readonly callsign: string;
  readonly verb: Verb;
  readonly arg: string;
}

export interface GrammarCheck {
  readonly ok: boolean;
  readonly message: string;
  readonly command: ParsedCommand | null;
}

function bad(message: string): GrammarCheck {
  return { ok: false, message, command: null };
}

/**
 * Syntax plus the statically-checkable domain rules (heading range,
 * waypoint membership when the exercise fix list is known).  Unknown
 * callsigns and radio failures are only checkable by the host.
 */
export function checkCommand(
  text: string,
  knownWaypoints: readonly string[] | null = null,
): GrammarCheck {
  const tokens = text.trim().split(" ");
  if (tokens.length !== 3 || tokens.some((t) => t === "")) {
    return bad("expected <CALLSIGN> <VERB> <ARG>, fields separated by single spaces");
  }
  const callsign = tokens[0]!.toUpperCase();
  const verbText = tokens[1]!.toUpperCase();
  const arg = tokens[2]!;
  if (!CALLSIGN_RE.test(callsign)) {
    return bad(`bad callsign '${tokens[0]}': need 2+ letters or digits`);
  }
  if (!VERBS.includes(verbText as Verb)) {
    return bad(`unknown verb '${tokens[1]}': use FH, C, D, SPD or DCT`);
  }
  const verb = verbText as Verb;
  if (verb === "DCT") {
    const fix = arg.toUpperCase();
    if (knownWaypoints !== null && !knownWaypoints.includes(fix)) {
      return bad(`waypoint '${fix}' is not in this exercise`);
    }
    return { ok: true, message: "", command: { callsign, verb, arg: fix } };
  }
  if (!INT_RE.test(arg)) {
    return bad(`argument '${arg}' is not an unsigned integer`);
  }
  if (verb === "FH") {
    const value = Number(arg);
    if (value > 359) {
      return bad(`heading ${value} outside [0, 360)`);
    }
  }
  return { ok: true, message: "", command: { callsign, verb, arg } };
}
