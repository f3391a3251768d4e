/** Browser entry point: one page, one route per role.
 *
 * The server address, token, and seat choice arrive as URL parameters; a
 * launcher form fills them in when absent. Everything below builds DOM
 * directly; views hold the state and the canvas scope does the drawing.
 */

import { Station, JoinSpec } from "./net/station";
import { WsTransport } from "./net/transport";
import { Role, ROLES, StationKind, stationLabel } from "./protocol/messages";
import { CanvasDraw } from "./views/draw";
import { ControllerView } from "./views/controller";
import { PilotConsoleView } from "./views/pilot";
import { EVENT_KINDS, PanelButton, SupervisorView } from "./views/supervisor";
import { TutorView } from "./views/tutor";

interface Params {
  server: string;
  token: string;
  role: Role | null;
  block: string;
  index: number;
  name: string;
  scenario: string;
}

function readParams(): Params {
  const q = new URLSearchParams(window.location.search);
  const roleText = (q.get("role") ?? "").toUpperCase();
  return {
    server: q.get("server") ?? "",
    token: q.get("token") ?? "",
    role: ROLES.includes(roleText as Role) ? (roleText as Role) : null,
    block: q.get("block") ?? "B1",
    index: Number(q.get("index") ?? "0") || 0,
    name: q.get("name") ?? "",
    scenario: q.get("scenario") ?? "",
  };
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className = "",
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

function seatKind(role: Role): StationKind | null {
  switch (role) {
    case "CONTROLLER":
    case "COORDINATOR":
      return "CONTROLLER_STN";
    case "PSEUDO_PILOT":
      return "PILOT_STN";
    case "SUPERVISOR":
      return "SUPERVISOR_STN";
    case "REMOTE_TUTOR":
      return null; // Tutors attach to a controller station, no seat.
  }
}

// --- launcher -----------------------------------------------------------------

function renderLauncher(root: HTMLElement, params: Params): void {
  const box = el("div", "launcher");
  box.appendChild(el("h1", "", "Join a training block"));
  const form = el("form");
  const fields: [string, string, string][] = [
    ["server", "Server", params.server || "ws://localhost:8700"],
    ["token", "Token", params.token],
    ["name", "Your name", params.name],
    ["block", "Block", params.block],
    ["index", "Station number (0 = any)", String(params.index)],
    ["scenario", "Scenario (supervisor only)", params.scenario],
  ];
  for (const [key, label, value] of fields) {
    const row = el("label", "field", label + " ");
    const input = el("input");
    input.name = key;
    input.value = value;
    row.appendChild(input);
    form.appendChild(row);
  }
  const roleRow = el("label", "field", "Role ");
  const select = el("select");
  select.name = "role";
  for (const role of ROLES) {
    const option = el("option", "", role);
    option.value = role;
    select.appendChild(option);
  }
  roleRow.appendChild(select);
  form.appendChild(roleRow);
  const go = el("button", "", "Join");
  go.type = "submit";
  form.appendChild(go);
  form.onsubmit = (ev) => {
    ev.preventDefault();
    const q = new URLSearchParams();
    for (const [key] of fields) {
      const input = form.querySelector<HTMLInputElement>(`input[name=${key}]`)!;
      if (input.value) q.set(key, input.value);
    }
    q.set("role", select.value);
    window.location.search = q.toString();
  };
  box.appendChild(form);
  root.appendChild(box);
}

// --- shared chrome ------------------------------------------------------------

interface Chrome {
  banner: HTMLElement;
  phase: HTMLElement;
  seat: HTMLElement;
  main: HTMLElement;
  side: HTMLElement;
}

function renderChrome(root: HTMLElement, title: string): Chrome {
  const header = el("header");
  header.appendChild(el("span", "title", title));
  const seat = el("span", "seat");
  const phase = el("span", "phase");
  header.appendChild(seat);
  header.appendChild(phase);
  const banner = el("div", "banner hidden");
  const wrap = el("div", "wrap");
  const main = el("main");
  const side = el("aside");
  wrap.appendChild(main);
  wrap.appendChild(side);
  root.appendChild(header);
  root.appendChild(banner);
  root.appendChild(wrap);
  return { banner, phase, seat, main, side };
}

function updateBanner(chrome: Chrome, text: string): void {
  chrome.banner.textContent = text;
  chrome.banner.className = text ? "banner" : "banner hidden";
}

function logPanel(side: HTMLElement, title: string): HTMLElement {
  const box = el("section", "panel");
  box.appendChild(el("h2", "", title));
  const list = el("div", "log");
  box.appendChild(list);
  side.appendChild(box);
  return list;
}

function renderLog(list: HTMLElement, lines: readonly ({ text: string; kind: string } | string)[]): void {
  list.textContent = "";
  for (const line of lines.slice(-40)) {
    const text = typeof line === "string" ? line : line.text;
    const kind = typeof line === "string" ? "" : line.kind;
    list.appendChild(el("div", `line ${kind}`, text));
  }
  list.scrollTop = list.scrollHeight;
}

function chatInput(side: HTMLElement, onSend: (text: string) => void): void {
  const form = el("form", "chatform");
  const input = el("input");
  input.placeholder = "party line message";
  form.appendChild(input);
  form.onsubmit = (ev) => {
    ev.preventDefault();
    if (input.value.trim()) {
      onSend(input.value.trim());
      input.value = "";
    }
  };
  side.appendChild(form);
}

function makeCanvas(main: HTMLElement): HTMLCanvasElement {
  const canvas = el("canvas");
  canvas.width = 900;
  canvas.height = 900;
  main.appendChild(canvas);
  return canvas;
}

function wireScopeNav(
  canvas: HTMLCanvasElement,
  scope: { zoom(f: number, x: number, y: number): void; pan(dx: number, dy: number): void },
): void {
  canvas.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    scope.zoom(ev.deltaY < 0 ? 1.2 : 1 / 1.2, ev.offsetX, ev.offsetY);
  });
  let panFrom: [number, number] | null = null;
  canvas.addEventListener("mousedown", (ev) => {
    if (ev.button === 1 || ev.button === 2) {
      panFrom = [ev.offsetX, ev.offsetY];
      ev.preventDefault();
    }
  });
  canvas.addEventListener("mousemove", (ev) => {
    if (panFrom) {
      scope.pan(ev.offsetX - panFrom[0], ev.offsetY - panFrom[1]);
      panFrom = [ev.offsetX, ev.offsetY];
    }
  });
  const stopPan = () => (panFrom = null);
  canvas.addEventListener("mouseup", stopPan);
  canvas.addEventListener("mouseleave", stopPan);
  canvas.addEventListener("contextmenu", (ev) => ev.preventDefault());
}

function startRenderLoop(render: (blinkOn: boolean) => void): void {
  let blinkOn = true;
  setInterval(() => (blinkOn = !blinkOn), 500);
  const frame = () => {
    render(blinkOn);
    window.requestAnimationFrame(frame);
  };
  window.requestAnimationFrame(frame);
}

// --- role pages ---------------------------------------------------------------

function mountController(root: HTMLElement, station: Station, title: string): void {
  const chrome = renderChrome(root, title);
  const canvas = makeCanvas(chrome.main);
  const view = new ControllerView(station, canvas.width, canvas.height);
  const tutorPanel = el("section", "panel tutorpanel");
  tutorPanel.appendChild(el("h2", "", "Tutor"));
  const grantLine = el("div", "grant", "no remote control");
  tutorPanel.appendChild(grantLine);
  chrome.side.appendChild(tutorPanel);
  const log = logPanel(chrome.side, "Radio and events");
  chatInput(chrome.side, (text) => view.sendChat("party", text));
  wireScopeNav(canvas, view.scope);
  const draw = new CanvasDraw(canvas.getContext("2d")!);
  startRenderLoop((blinkOn) => {
    view.render(draw, blinkOn);
    chrome.phase.textContent = view.model.phase;
    chrome.seat.textContent = station.station ? stationLabel(station.station) : "";
    updateBanner(chrome, view.connectionBanner);
    grantLine.textContent = view.remoteController
      ? `remote control by ${view.remoteController}`
      : "no remote control";
    renderLog(log, view.log);
  });
}

function mountPilot(root: HTMLElement, station: Station, title: string): void {
  const chrome = renderChrome(root, title);
  const view = new PilotConsoleView(station);
  const listBox = el("section", "panel");
  listBox.appendChild(el("h2", "", "Aircraft"));
  const list = el("table", "aircraft");
  listBox.appendChild(list);
  chrome.main.appendChild(listBox);
  const log = logPanel(chrome.side, "Console");
  const form = el("form", "cmdform");
  const input = el("input");
  input.placeholder = "CALLSIGN FH 270";
  form.appendChild(input);
  form.onsubmit = (ev) => {
    ev.preventDefault();
    if (view.submit(input.value)) {
      input.value = "";
    }
  };
  chrome.side.appendChild(form);
  chatInput(chrome.side, (text) => view.sendChat("party", text));
  startRenderLoop(() => {
    chrome.phase.textContent = view.phase;
    chrome.seat.textContent = station.station ? stationLabel(station.station) : "";
    updateBanner(chrome, view.connectionBanner);
    list.textContent = "";
    for (const a of view.aircraft) {
      const row = el("tr");
      row.appendChild(el("td", "", a.callsign));
      row.appendChild(el("td", "", `${Math.round(a.alt_ft)} ft`));
      row.appendChild(el("td", "", `${Math.round(a.heading_deg)}°`));
      row.appendChild(el("td", "", `${Math.round(a.ground_speed_kt)} kt`));
      list.appendChild(row);
    }
    renderLog(log, view.log);
  });
}

function mountSupervisor(root: HTMLElement, station: Station, title: string): void {
  const chrome = renderChrome(root, title);
  const view = new SupervisorView(station);
  const controls = el("section", "panel");
  controls.appendChild(el("h2", "", "Exercise"));
  const buttonRow = el("div", "buttons");
  const buttons = new Map<PanelButton, HTMLButtonElement>();
  for (const verb of ["START", "PAUSE", "RESUME", "STOP"] as PanelButton[]) {
    const button = el("button", "", verb);
    button.onclick = () => view.press(verb);
    buttonRow.appendChild(button);
    buttons.set(verb, button);
  }
  controls.appendChild(buttonRow);

  const injectForm = el("form", "inject");
  const kindSelect = el("select");
  for (const kind of EVENT_KINDS) {
    const option = el("option", "", kind);
    option.value = kind;
    kindSelect.appendChild(option);
  }
  const targetSelect = el("select");
  const injectButton = el("button", "", "Inject");
  injectButton.type = "submit";
  injectForm.appendChild(kindSelect);
  injectForm.appendChild(targetSelect);
  injectForm.appendChild(injectButton);
  injectForm.onsubmit = (ev) => {
    ev.preventDefault();
    if (targetSelect.value) {
      view.injectEvent(kindSelect.value, targetSelect.value);
    }
  };
  controls.appendChild(injectForm);
  chrome.main.appendChild(controls);

  const occBox = el("section", "panel");
  occBox.appendChild(el("h2", "", "Occupancy"));
  const occTable = el("table", "occupancy");
  occBox.appendChild(occTable);
  chrome.main.appendChild(occBox);

  const log = logPanel(chrome.side, "Events");
  chatInput(chrome.side, (text) => station.sendTransmission("party", text));

  startRenderLoop(() => {
    chrome.phase.textContent = view.phase;
    updateBanner(chrome, view.connectionBanner);
    for (const [verb, button] of buttons) {
      button.disabled = !view.enabled(verb);
    }
    injectButton.disabled = !view.enabled("INJECT_EVENT");
    const callsigns = [...view.scenarioCallsigns].sort();
    if (targetSelect.children.length !== callsigns.length) {
      targetSelect.textContent = "";
      for (const callsign of callsigns) {
        const option = el("option", "", callsign);
        option.value = callsign;
        targetSelect.appendChild(option);
      }
    }
    occTable.textContent = "";
    for (const row of view.occupancy()) {
      const tr = el("tr");
      tr.appendChild(el("td", "", row.station));
      tr.appendChild(el("td", "", row.role));
      tr.appendChild(el("td", "", row.clientId));
      occTable.appendChild(tr);
    }
    renderLog(log, view.log);
  });
}

function mountTutor(root: HTMLElement, station: Station, title: string): void {
  const chrome = renderChrome(root, title);
  const canvas = makeCanvas(chrome.main);
  const view = new TutorView(station, canvas.width, canvas.height);
  const controlPanel = el("section", "panel");
  controlPanel.appendChild(el("h2", "", "Remote control"));
  const toggle = el("button", "", "Take control");
  toggle.onclick = () => view.toggleControl();
  const status = el("div", "grant", "observing");
  controlPanel.appendChild(toggle);
  controlPanel.appendChild(status);
  chrome.side.appendChild(controlPanel);
  const log = logPanel(chrome.side, "Activity");
  chatInput(chrome.side, (text) => view.sendChat("party", text));

  canvas.addEventListener("mousemove", (ev) => view.pointerMove(ev.offsetX, ev.offsetY));
  canvas.addEventListener("mouseleave", () => view.pointerLeave());
  canvas.addEventListener("click", (ev) => view.scopeClick(ev.offsetX, ev.offsetY));
  wireScopeNav(canvas, view.scope);

  const draw = new CanvasDraw(canvas.getContext("2d")!);
  startRenderLoop((blinkOn) => {
    view.render(draw, blinkOn);
    chrome.phase.textContent = view.model.phase;
    chrome.seat.textContent = view.attachment ? `mirror of ${stationLabel(view.attachment)}` : "";
    updateBanner(chrome, view.connectionBanner);
    toggle.textContent = view.granted ? "Release control" : "Take control";
    status.textContent = view.granted
      ? `controlling${view.selected ? `, selected ${view.selected}` : ""}`
      : "observing";
    renderLog(log, view.log);
  });
}

// --- boot ---------------------------------------------------------------------

export function boot(root: HTMLElement): void {
  const params = readParams();
  if (!params.server || !params.role || !params.name) {
    renderLauncher(root, params);
    return;
  }
  const role = params.role;
  const spec: JoinSpec = {
    clientName: params.name,
    role,
    blockId: params.block,
    stationKind: seatKind(role),
    stationIndex: params.index,
    scenarioName: params.scenario,
    token: params.token,
  };
  const station = new Station(spec, () => new WsTransport(params.server));
  const title = `${role} · ${params.block}`;
  switch (role) {
    case "CONTROLLER":
    case "COORDINATOR":
      mountController(root, station, title);
      break;
    case "PSEUDO_PILOT":
      mountPilot(root, station, title);
      break;
    case "SUPERVISOR":
      mountSupervisor(root, station, title);
      break;
    case "REMOTE_TUTOR":
      mountTutor(root, station, title);
      break;
  }
  station.connect();
  window.addEventListener("beforeunload", () => station.close("window closed"));
}

const rootNode = document.getElementById("app");
if (rootNode) {
  boot(rootNode);
}
