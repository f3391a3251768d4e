/** Under a seeded random interaction script, the UI emits only
 * codec-valid messages. Every captured outbound frame must decode under
 * the strict client codec and, decisively, under the host's own decoder
 * (zero DecodeErrors from the actual server-side parser). */

import { execFileSync } from "node:child_process";
import { describe, expect, it } from "vitest";

import { Station, JoinSpec } from "../src/net/station";
import { CapturingTransport } from "../src/net/transport";
import { decodeMessage } from "../src/protocol/codec";
import { pictureDigest } from "../src/protocol/digest";
import { PictureAircraft } from "../src/protocol/messages";
import { ControllerView } from "../src/views/controller";
import { PilotConsoleView } from "../src/views/pilot";
import { SupervisorView, PanelButton } from "../src/views/supervisor";
import { TutorView } from "../src/views/tutor";
import {
  CTL_STATION,
  FakeClock,
  hostFrame,
  mirrorSnapshotFrame,
  moveOp,
  plane,
  snapshotFrame,
  welcomeFrame,
} from "./helpers";

function makeRng(seed: number): () => number {
  let s = seed >>> 0;
  return () => {
    s = (s * 1664525 + 1013904223) >>> 0;
    return s / 2 ** 32;
  };
}

function pick<T>(rng: () => number, items: readonly T[]): T {
  return items[Math.floor(rng() * items.length)]!;
}

// Text soup for command lines and chat: valid commands, near-misses,
// garbage, exotic unicode, embedded JSON metacharacters.
const TEXTS = [
  "QFA12 FH 270",
  "QFA12 FH 999",
  "QFA12 C 12000",
  "BAW123 DCT ALPHA",
  "BAW123 DCT NOWHERE",
  "lower case words",
  "",
  " ",
  "   ",
  "QFA12  FH  270",
  'quotes " and \\ backslashes',
  "newline\nand\ttab",
  "emoji ✈✈✈ and ••• bullets",
  "très long «guillemets» ĉapelita ûû",
  "{}[]:,\"'",
  "\u0000\u0001\u001f control bytes",
  "𝔘𝔫𝔦𝔠𝔬𝔡𝔢 surrogates 🛫🛬",
  "x".repeat(3000),
  "-1",
  "QFA12 FH -5",
  "QFA12 SPD 25.5",
];

const CALLSIGNS = ["QFA12", "BAW123", "", "weird target ✈", "X"];
const KINDS = ["EMERGENCY_DECLARED", "RADIO_FAILURE", "GO_AROUND", "NOT_A_KIND", ""];
const BUTTONS: PanelButton[] = ["LOAD_SCENARIO", "START", "PAUSE", "RESUME", "STOP", "INJECT_EVENT"];

interface Rig {
  name: string;
  transport: CapturingTransport;
  clock: FakeClock;
  act: (rng: () => number) => void;
  feed: (rng: () => number) => void;
}

function makeStation(role: JoinSpec["role"], clock: FakeClock): {
  station: Station;
  transport: CapturingTransport;
} {
  const transport = new CapturingTransport();
  const station = new Station(
    {
      clientName: `${role.toLowerCase()}-fuzz`,
      role,
      blockId: "B1",
      stationKind: role === "CONTROLLER" ? "CONTROLLER_STN" : null,
      stationIndex: 4,
      scenarioName: role === "SUPERVISOR" ? "solo" : "",
      token: "tok",
    },
    () => transport,
    clock,
  );
  station.connect();
  transport.open();
  return { station, transport };
}

function randomPicture(rng: () => number): PictureAircraft[] {
  const count = Math.floor(rng() * 4);
  const out: PictureAircraft[] = [];
  for (let i = 0; i < count; i++) {
    out.push(
      plane(
        pick(rng, ["QFA12", "BAW123", "DLH456", "KLM88"]),
        rng() * 100 - 50,
        rng() * 100 - 50,
        rng() * 30000,
        rng() * 360,
        rng() * 400,
      ),
    );
  }
  return out;
}

function buildRigs(): Rig[] {
  const rigs: Rig[] = [];

  {
    const clock = new FakeClock();
    const { station, transport } = makeStation("PSEUDO_PILOT", clock);
    const view = new PilotConsoleView(station);
    transport.deliver(welcomeFrame("cl-p", "PSEUDO_PILOT", { ...CTL_STATION, kind: "PILOT_STN" }));
    rigs.push({
      name: "pilot",
      transport,
      clock,
      act: (rng) => {
        const roll = rng();
        if (roll < 0.6) view.submit(pick(rng, TEXTS));
        else if (roll < 0.9) view.sendChat(pick(rng, ["124.250", "party", ""]), pick(rng, TEXTS));
        else station.sendHeartbeat(rng() < 0.5);
      },
      feed: (rng) => transport.deliver(snapshotFrame(randomPicture(rng))),
    });
  }

  {
    const clock = new FakeClock();
    const { station, transport } = makeStation("SUPERVISOR", clock);
    const view = new SupervisorView(station);
    transport.deliver(welcomeFrame("cl-s", "SUPERVISOR", null));
    rigs.push({
      name: "supervisor",
      transport,
      clock,
      act: (rng) => {
        const roll = rng();
        if (roll < 0.3) view.press(pick(rng, BUTTONS));
        else if (roll < 0.6) view.injectEvent(pick(rng, KINDS), pick(rng, CALLSIGNS));
        else if (roll < 0.8) view.loadScenario(pick(rng, ["solo", "", "no such scenario ✈"]));
        else station.sendTransmission("party", pick(rng, TEXTS));
      },
      feed: (rng) =>
        transport.deliver(
          snapshotFrame(randomPicture(rng), pick(rng, ["LOBBY", "RUNNING", "PAUSED", "ENDED"])),
        ),
    });
  }

  {
    const clock = new FakeClock();
    const { station, transport } = makeStation("CONTROLLER", clock);
    const view = new ControllerView(station);
    transport.deliver(welcomeFrame("cl-c", "CONTROLLER", CTL_STATION));
    rigs.push({
      name: "controller",
      transport,
      clock,
      act: (rng) => {
        const roll = rng();
        if (roll < 0.5) view.sendChat("124.250", pick(rng, TEXTS));
        else if (roll < 0.7) view.scope.zoom(rng() * 3 + 0.2, rng() * 900, rng() * 900);
        else if (roll < 0.9) view.scope.pan(rng() * 200 - 100, rng() * 200 - 100);
        else station.sendHeartbeat(rng() < 0.5);
      },
      feed: (rng) => {
        const roll = rng();
        if (roll < 0.5) {
          transport.deliver(snapshotFrame(randomPicture(rng)));
          return;
        }
        if (roll < 0.7) {
          // A delta continuing the current picture, sometimes stale.
          const current = [...view.model.aircraft.values()];
          const stale = rng() < 0.3;
          const moved = current.map((a) => ({ ...a, x_nm: a.x_nm + 1 }));
          transport.deliver(
            hostFrame({
              tag: "STATE_DELTA",
              base_digest: stale ? "0".repeat(64) : pictureDigest(current),
              ops: moved.map(moveOp),
              result_digest: pictureDigest(moved),
              phase: "RUNNING",
              alerts:
                rng() < 0.3
                  ? [{ kind: "SEPARATION", callsigns: ["QFA12", "BAW123"], detail: "close" }]
                  : [],
            }),
          );
          return;
        }
        if (roll < 0.85) {
          transport.deliver(
            hostFrame({
              tag: "POINTER",
              tutor_id: "cl-t",
              target_station: rng() < 0.7 ? CTL_STATION : { ...CTL_STATION, index: 2 },
              x_nm: rng() * 100 - 50,
              y_nm: rng() * 100 - 50,
              visible: rng() < 0.8,
              shape: "CIRCLE",
              color: "RED",
            }),
          );
          return;
        }
        transport.deliver("total garbage that is not a frame");
      },
    });
  }

  {
    const clock = new FakeClock();
    const { station, transport } = makeStation("REMOTE_TUTOR", clock);
    const view = new TutorView(station, 900, 900, clock, clock.now);
    transport.deliver(welcomeFrame("cl-t", "REMOTE_TUTOR", CTL_STATION));
    rigs.push({
      name: "tutor",
      transport,
      clock,
      act: (rng) => {
        const roll = rng();
        if (roll < 0.4) view.pointerMove(rng() * 900, rng() * 900);
        else if (roll < 0.5) view.pointerLeave();
        else if (roll < 0.65) view.toggleControl();
        else if (roll < 0.85) view.scopeClick(rng() * 900, rng() * 900);
        else view.sendChat("party", pick(rng, TEXTS));
        clock.advance(Math.floor(rng() * 120));
      },
      feed: (rng) => {
        const roll = rng();
        if (roll < 0.5) {
          transport.deliver(mirrorSnapshotFrame(CTL_STATION, randomPicture(rng)));
          return;
        }
        if (roll < 0.75) {
          transport.deliver(
            hostFrame({
              tag: "CONTROL_GRANT",
              tutor_id: rng() < 0.7 ? "cl-t" : "cl-other",
              target_station: CTL_STATION,
              granted_at_tick: Math.floor(rng() * 1000),
              active: true,
            }),
          );
          return;
        }
        transport.deliver(
          hostFrame({ tag: "CONTROL_REVOKE", tutor_id: "cl-t", target_station: CTL_STATION }),
        );
      },
    });
  }

  return rigs;
}

describe("fuzzed interaction script", () => {
  it("emits only frames the host codec accepts", () => {
    const rng = makeRng(0x5eed);
    const rigs = buildRigs();

    for (let step = 0; step < 1500; step++) {
      const rig = pick(rng, rigs);
      if (rng() < 0.35) rig.feed(rng);
      else rig.act(rng);
      if (rng() < 0.1) rig.clock.advance(1000 + Math.floor(rng() * 1500));
    }
    for (const rig of rigs) {
      rig.clock.advance(2000); // Flush trailing rate-limited sends.
    }

    const frames = rigs.flatMap((rig) => rig.transport.sent);
    expect(frames.length).toBeGreaterThan(400); // The script really acted.

    // Client-side strictness: every emitted frame re-decodes.
    for (const frame of frames) {
      decodeMessage(frame);
      expect(frame.includes("\n")).toBe(false);
    }

    // Host-side: the real server parser accepts every single frame.
    const script = [
      "import sys",
      "from atcsim.protocol import decode_message",
      "n = 0",
      "for line in sys.stdin:",
      "    line = line.strip()",
      "    if not line:",
      "        continue",
      "    decode_message(line)",
      "    n += 1",
      "print(n)",
    ].join("\n");
    const out = execFileSync("python3", ["-c", script], {
      input: frames.join("\n") + "\n",
      maxBuffer: 64 * 1024 * 1024,
    });
    expect(Number(out.toString().trim())).toBe(frames.length);
  }, 60000);
});
