/** Receiver-side picture reconstruction from snapshot and delta frames. */

import { pictureDigest } from "./digest";
import { MirrorFrame, MirrorOp, PictureAircraft } from "./messages";

export class DigestMismatch extends Error {}

/** Canonical picture value: unique callsigns, sorted. */
export function normalizePicture(aircraft: readonly PictureAircraft[]): PictureAircraft[] {
  const byCallsign = new Map(aircraft.map((a) => [a.callsign, a]));
  return [...byCallsign.keys()].sort().map((c) => byCallsign.get(c)!);
}

export function applyOps(
  picture: readonly PictureAircraft[],
  ops: readonly MirrorOp[],
): PictureAircraft[] {
  const state = new Map(normalizePicture(picture).map((a) => [a.callsign, a]));
  for (const op of ops) {
    if (op.op === "REMOVE") {
      state.delete(op.callsign);
    } else if (op.op === "ADD") {
      state.set(op.aircraft.callsign, op.aircraft);
    } else {
      state.set(op.callsign, {
        callsign: op.callsign,
        x_nm: op.x_nm,
        y_nm: op.y_nm,
        alt_ft: op.alt_ft,
        heading_deg: op.heading_deg,
        ground_speed_kt: op.ground_speed_kt,
      });
    }
  }
  return normalizePicture([...state.values()]);
}

/** Apply a delta to the current picture, verifying the digest chain ends to
 * end; raises DigestMismatch when the delta does not apply, which obliges
 * the receiver to request a snapshot. */
export function applyDelta(
  picture: readonly PictureAircraft[],
  baseDigest: string,
  ops: readonly MirrorOp[],
  resultDigest: string,
): PictureAircraft[] {
  const base = normalizePicture(picture);
  if (pictureDigest(base) !== baseDigest) {
    throw new DigestMismatch(`delta base ${baseDigest.slice(0, 12)} does not match picture`);
  }
  const result = applyOps(base, ops);
  if (resultDigest && pictureDigest(result) !== resultDigest) {
    throw new DigestMismatch("reconstruction does not match sender digest");
  }
  return result;
}

export function applyMirrorFrame(
  picture: readonly PictureAircraft[],
  frame: MirrorFrame,
): PictureAircraft[] {
  if (frame.full_snapshot !== null) {
    const result = normalizePicture(frame.full_snapshot);
    if (frame.result_digest && pictureDigest(result) !== frame.result_digest) {
      throw new DigestMismatch("reconstruction does not match sender digest");
    }
    return result;
  }
  return applyDelta(picture, frame.base_digest, frame.ops ?? [], frame.result_digest);
}
