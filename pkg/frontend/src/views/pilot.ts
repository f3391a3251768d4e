/** Pseudo-pilot console: aircraft list plus a command line.
 *
 * Input is checked against the command grammar locally for instant
 * feedback; only well-formed commands are transmitted, and the host
 * remains the authoritative validator (its REJECTs are surfaced too).
 */

import { Station } from "../net/station";
import { checkCommand } from "../protocol/grammar";
import { PictureAircraft } from "../protocol/messages";

export interface ConsoleLine {
  readonly text: string;
  readonly kind: "sent" | "error" | "reject" | "chat" | "system";
}

const LOG_LIMIT = 200;

export class PilotConsoleView {
  aircraft: readonly PictureAircraft[] = [];
  phase = "";
  readonly log: ConsoleLine[] = [];
  connectionBanner = "";
  /** Exercise fix list for DCT checking; null until known. */
  knownWaypoints: readonly string[] | null = null;

  private station: Station;

  constructor(station: Station) {
    this.station = station;
    station.onPicture = (picture) => (this.aircraft = picture);
    station.onPhase = (phase) => (this.phase = phase);
    station.onTransmission = (t) => this.push(`[${t.frequency_label}] ${t.text}`, "chat");
    station.onReject = (r) => this.push(`${r.reason}${r.detail ? `: ${r.detail}` : ""}`, "reject");
    station.onConnection = (state, detail) => {
      this.connectionBanner =
        state === "online" ? "" : `${state}${detail ? `: ${detail}` : ""}`;
    };
  }

  /** Returns true when the command passed the local check and was sent. */
  submit(text: string): boolean {
    const check = checkCommand(text, this.knownWaypoints);
    if (!check.ok) {
      this.push(check.message, "error");
      return false;
    }
    this.station.sendPilotCommand(text);
    this.push(text, "sent");
    return true;
  }

  sendChat(frequencyLabel: string, text: string): void {
    this.station.sendTransmission(frequencyLabel, text);
    this.push(`[${frequencyLabel}] me: ${text}`, "chat");
  }

  private push(text: string, kind: ConsoleLine["kind"]): void {
    this.log.push({ text, kind });
    if (this.log.length > LOG_LIMIT) {
      this.log.splice(0, this.log.length - LOG_LIMIT);
    }
  }
}
