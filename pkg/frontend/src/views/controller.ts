/** Controller station: radar scope plus the tutor-communication panel.
 *
 * The panel region mirrors everything the remote tutor does to this
 * station: pointer presence, control grant state, and the commands the
 * tutor issues while holding the grant.
 */

import { Station } from "../net/station";
import { sameStation } from "../protocol/messages";
import { RadarPicture } from "../state/picture";
import { Draw } from "./draw";
import { Scope } from "./scope";

export interface LogLine {
  readonly text: string;
  readonly kind: "chat" | "tutor" | "alert" | "reject" | "system";
}

const LOG_LIMIT = 200;

export class ControllerView {
  readonly model = new RadarPicture();
  readonly scope: Scope;
  readonly log: LogLine[] = [];
  /** Tutor id while a remote-control grant is active on this station. */
  remoteController: string | null = null;
  connectionBanner = "";
  private station: Station;

  constructor(station: Station, width = 900, height = 900) {
    this.station = station;
    this.scope = new Scope(width, height);
    station.onPicture = (picture) => this.model.applyPicture(picture);
    station.onPhase = (phase) => (this.model.phase = phase);
    station.onAlerts = (alerts) => (this.model.alerts = alerts);
    station.onPointer = (p) => {
      if (this.station.station && sameStation(p.target_station, this.station.station)) {
        this.model.setPointer(p);
      }
    };
    station.onGrant = (g) => {
      this.remoteController = g.tutor_id;
      this.push(`tutor ${g.tutor_id} has taken control`, "tutor");
    };
    station.onRevoke = (r) => {
      this.remoteController = null;
      this.push(`tutor ${r.tutor_id} released control`, "tutor");
    };
    station.onControlInput = (c) => this.push(`tutor command: ${c.text}`, "tutor");
    station.onTransmission = (t) => this.push(`[${t.frequency_label}] ${t.text}`, "chat");
    station.onReject = (r) => this.push(`${r.reason}${r.detail ? `: ${r.detail}` : ""}`, "reject");
    station.onConnection = (state, detail) => {
      this.connectionBanner =
        state === "online" ? "" : `${state}${detail ? `: ${detail}` : ""}`;
      if (state !== "online") {
        this.push(`connection ${state}`, "system");
      }
    };
  }

  /** Party-line message from this seat; echoed locally since the host only
   * relays to the others. */
  sendChat(frequencyLabel: string, text: string): void {
    this.station.sendTransmission(frequencyLabel, text);
    this.push(`[${frequencyLabel}] me: ${text}`, "chat");
  }

  render(draw: Draw, blinkOn: boolean): void {
    this.scope.render(this.model, draw, blinkOn);
  }

  private push(text: string, kind: LogLine["kind"]): void {
    this.log.push({ text, kind });
    if (this.log.length > LOG_LIMIT) {
      this.log.splice(0, this.log.length - LOG_LIMIT);
    }
  }
}
