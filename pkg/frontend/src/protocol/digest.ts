/** Canonical picture digests, byte-identical to the host's.
 *
 * The host renders every number at fixed 6-decimal precision with the
 * platform's correctly-rounded (half-even) formatter.  `Number.toFixed`
 * rounds exact decimal ties away from zero instead, and ties do occur:
 * any odd multiple of 1/128 lands exactly halfway between two 6-decimal
 * strings.  So the canonical rendering is recomputed here from the exact
 * binary value using integer arithmetic.
 */

import { sha256 } from "js-sha256";

import { stableStringify } from "./codec";
import { PictureAircraft } from "./messages";

const DECIMALS = 6;
const SCALE = 10n ** BigInt(DECIMALS);

/** Exact (mantissa, exponent) decomposition: |x| = mantissa * 2^exponent. */
function decompose(x: number): { mantissa: bigint; exponent: number } {
  const view = new DataView(new ArrayBuffer(8));
  view.setFloat64(0, Math.abs(x));
  const hi = BigInt(view.getUint32(0));
  const lo = BigInt(view.getUint32(4));
  const bits = (hi << 32n) | lo;
  const biased = Number(bits >> 52n);
  const fraction = bits & ((1n << 52n) - 1n);
  if (biased === 0) {
    return { mantissa: fraction, exponent: -1074 };
  }
  return { mantissa: fraction | (1n << 52n), exponent: biased - 1075 };
}

/** Fixed 6-decimal rendering of a finite number; half-even at the last
 * digit, negative zero collapses to zero. */
export function canonNum(x: number): string {
  if (!Number.isFinite(x)) {
    throw new TypeError(`canonNum: non-finite value ${x}`);
  }
  const { mantissa, exponent } = decompose(x);
  let units: bigint;
  if (exponent >= 0) {
    units = mantissa * (1n << BigInt(exponent)) * SCALE;
  } else {
    const denom = 1n << BigInt(-exponent);
    const numer = mantissa * SCALE;
    const q = numer / denom;
    const twiceRest = (numer % denom) * 2n;
    if (twiceRest > denom || (twiceRest === denom && q % 2n === 1n)) {
      units = q + 1n;
    } else {
      units = q;
    }
  }
  const digits = units.toString().padStart(DECIMALS + 1, "0");
  const cut = digits.length - DECIMALS;
  const text = `${digits.slice(0, cut)}.${digits.slice(cut)}`;
  return x < 0 && units !== 0n ? `-${text}` : text;
}

export function digestRows(rows: unknown): string {
  return sha256(stableStringify(rows));
}

/** Order-independent digest of a traffic picture. */
export function pictureDigest(picture: readonly PictureAircraft[]): string {
  const byCallsign = new Map(picture.map((a) => [a.callsign, a]));
  const rows = [...byCallsign.keys()].sort().map((callsign) => {
    const a = byCallsign.get(callsign)!;
    return [
      a.callsign,
      canonNum(a.x_nm),
      canonNum(a.y_nm),
      canonNum(a.alt_ft),
      canonNum(a.heading_deg),
      canonNum(a.ground_speed_kt),
    ];
  });
  return digestRows(rows);
}
