/** Supervisor exercise panel: phase-gated controls, event injection, and a
 * live block-occupancy table. */

import { Station } from "../net/station";
import { SeatInfo, stationLabel } from "../protocol/messages";

export type PanelButton =
  | "LOAD_SCENARIO"
  | "START"
  | "PAUSE"
  | "RESUME"
  | "STOP"
  | "INJECT_EVENT";

export const EVENT_KINDS = ["EMERGENCY_DECLARED", "RADIO_FAILURE", "GO_AROUND"] as const;

const ENABLED: Record<string, readonly PanelButton[]> = {
  "": ["LOAD_SCENARIO"],
  LOBBY: ["LOAD_SCENARIO", "START"],
  RUNNING: ["PAUSE", "STOP", "INJECT_EVENT"],
  PAUSED: ["RESUME", "STOP"],
  ENDED: [],
};

export interface OccupancyRow {
  readonly station: string;
  readonly clientId: string;
  readonly role: string;
}

const LOG_LIMIT = 200;

export class SupervisorView {
  phase = "";
  /** Every callsign seen in the exercise so far, for the injection form. */
  readonly scenarioCallsigns = new Set<string>();
  seats: readonly SeatInfo[] = [];
  readonly log: string[] = [];
  connectionBanner = "";

  private station: Station;

  constructor(station: Station) {
    this.station = station;
    station.onPhase = (phase) => (this.phase = phase);
    station.onPicture = (picture) => {
      for (const a of picture) {
        this.scenarioCallsigns.add(a.callsign);
      }
    };
    station.onSeats = (seats) => (this.seats = seats);
    station.onAlerts = (alerts) => {
      for (const alert of alerts) {
        this.push(`${alert.kind} ${alert.callsigns.join(" ")} ${alert.detail}`.trim());
      }
    };
    station.onGrant = (g) => this.push(`grant: ${g.tutor_id} -> ${stationLabel(g.target_station)}`);
    station.onRevoke = (r) =>
      this.push(`revoke: ${r.tutor_id} -> ${stationLabel(r.target_station)}`);
    station.onReject = (r) => this.push(`${r.reason}${r.detail ? `: ${r.detail}` : ""}`);
    station.onConnection = (state, detail) => {
      this.connectionBanner =
        state === "online" ? "" : `${state}${detail ? `: ${detail}` : ""}`;
    };
  }

  enabled(button: PanelButton): boolean {
    return (ENABLED[this.phase] ?? []).includes(button);
  }

  /** Returns false without sending when the button is phase-disabled. */
  press(button: PanelButton, args: Record<string, string> = {}): boolean {
    if (!this.enabled(button)) {
      return false;
    }
    this.station.sendSupervisorCmd(button, args);
    return true;
  }

  loadScenario(name: string): boolean {
    return this.press("LOAD_SCENARIO", { name });
  }

  injectEvent(kind: string, target: string): boolean {
    return this.press("INJECT_EVENT", { kind, target });
  }

  occupancy(): OccupancyRow[] {
    return this.seats.map((seat) => ({
      station: stationLabel({ block_id: "", kind: seat.kind, index: seat.index }),
      clientId: seat.client_id,
      role: seat.role,
    }));
  }

  private push(text: string): void {
    this.log.push(text);
    if (this.log.length > LOG_LIMIT) {
      this.log.splice(0, this.log.length - LOG_LIMIT);
    }
  }
}
