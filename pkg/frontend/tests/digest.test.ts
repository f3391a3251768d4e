import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { canonNum, pictureDigest } from "../src/protocol/digest";
import { applyDelta, applyMirrorFrame, DigestMismatch } from "../src/protocol/mirror";
import { PictureAircraft, StateDelta } from "../src/protocol/messages";
import { decodeMessage } from "../src/protocol/codec";

const FIXTURES = new URL("./fixtures/", import.meta.url);
const CANON: [number, string][] = JSON.parse(
  readFileSync(new URL("canon_num.json", FIXTURES), "utf-8"),
);
const DIGESTS: { picture: PictureAircraft[]; digest: string }[] = JSON.parse(
  readFileSync(new URL("digests.json", FIXTURES), "utf-8"),
);
const GOLDEN: { name: string; frame: string }[] = JSON.parse(
  readFileSync(new URL("frames.json", FIXTURES), "utf-8"),
);

describe("canonical number rendering", () => {
  it.each(CANON.map(([x, s]) => ({ x, s })))("renders $x as $s", ({ x, s }) => {
    expect(canonNum(x)).toBe(s);
  });

  it("rejects non-finite values", () => {
    expect(() => canonNum(Number.NaN)).toThrow(TypeError);
    expect(() => canonNum(Infinity)).toThrow(TypeError);
  });

  it("stays within half an ulp of the canonical grid", () => {
    let seed = 99;
    const rng = () => {
      seed = (seed * 1664525 + 1013904223) >>> 0;
      return seed / 2 ** 32;
    };
    for (let i = 0; i < 2000; i++) {
      const x = (rng() - 0.5) * 10 ** Math.floor(rng() * 8);
      const text = canonNum(x);
      expect(text).toMatch(/^-?\d+\.\d{6}$/);
      expect(Math.abs(Number(text) - x)).toBeLessThanOrEqual(5e-7);
      if (Number(text) === 0) {
        expect(text).toBe("0.000000");
      }
    }
  });
});

describe("picture digests", () => {
  it.each(DIGESTS.map((d, i) => ({ ...d, i })))("matches host digest $i", ({ picture, digest }) => {
    expect(pictureDigest(picture)).toBe(digest);
  });

  it("ignores aircraft order and collapses duplicate callsigns", () => {
    const base = DIGESTS[0]!.picture;
    const shuffled = [...base].reverse();
    expect(pictureDigest(shuffled)).toBe(DIGESTS[0]!.digest);
    const withDupes = [{ ...base[0]!, alt_ft: 1.0 }, ...base];
    expect(pictureDigest(withDupes)).toBe(DIGESTS[0]!.digest);
  });
});

describe("delta application", () => {
  const deltaMsg = decodeMessage(GOLDEN.find((f) => f.name === "delta")!.frame);
  const delta = deltaMsg.payload as StateDelta;
  const base = DIGESTS[0]!.picture;

  it("replays host ops onto the base picture", () => {
    const result = applyDelta(base, delta.base_digest, delta.ops, delta.result_digest);
    expect(pictureDigest(result)).toBe(delta.result_digest);
    expect(result.some((a) => a.callsign === "KLM88")).toBe(true);
    expect(result.some((a) => a.callsign === "AF1")).toBe(false);
  });

  it("raises DigestMismatch on a stale base", () => {
    expect(() => applyDelta([], delta.base_digest, delta.ops, delta.result_digest)).toThrow(
      DigestMismatch,
    );
  });

  it("raises DigestMismatch on a corrupted result", () => {
    expect(() => applyDelta(base, delta.base_digest, delta.ops, "beef")).toThrow(DigestMismatch);
  });

  it("accepts host mirror frames in both forms", () => {
    for (const name of ["mirror_ops", "mirror_snapshot"]) {
      const frame = decodeMessage(GOLDEN.find((f) => f.name === name)!.frame);
      const payload = frame.payload;
      if (payload.tag !== "MIRROR_FRAME") throw new Error("fixture mismatch");
      const result = applyMirrorFrame(base, payload);
      expect(pictureDigest(result)).toBe(payload.result_digest);
    }
  });
});
