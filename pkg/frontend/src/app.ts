// Session view: instruction entry, candidate gallery with validity badges,
// selection, and the history timeline. The server owns all state; after
// every action the session is re-fetched and the DOM re-rendered from it.

import { ApiError, Candidate, Client, SessionState } from "./api.js";
import { parseOBJ } from "./obj.js";
import { Viewer } from "./viewer.js";

export interface AppOptions {
  annotator?: string;
  k?: number;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  if (text) node.textContent = text;
  return node;
}

export class App {
  session: SessionState | null = null;
  pending = false;
  notice = "";
  annotator: string;
  k?: number;
  private viewer: Viewer | null = null;

  constructor(public root: HTMLElement, public client: Client, options: AppOptions = {}) {
    this.annotator = options.annotator ?? "anonymous";
    this.k = options.k;
    this.render();
  }

  // ----- actions (all server-driven) -----

  async createSession(origText: string) {
    await this.guard(async () => {
      this.session = await this.client.createSession(origText.trim());
    });
    await this.refreshViewport();
  }

  async loadSession(id: string) {
    await this.guard(async () => {
      this.session = await this.client.getSession(id.trim());
    });
    await this.refreshViewport();
  }

  async submitInstruction(text: string) {
    if (!this.session || !text.trim()) return;
    const id = this.session.id;
    await this.guard(async () => {
      await this.client.submitInstruction(id, text.trim(), this.k);
      this.session = await this.client.getSession(id);
    });
  }

  async selectCandidate(index: number) {
    if (!this.session) return;
    const id = this.session.id;
    await this.guard(async () => {
      this.session = await this.client.applySelection(id, index, this.annotator);
    });
    await this.refreshViewport();
  }

  private async guard(action: () => Promise<void>) {
    this.pending = true;
    this.notice = "";
    this.render();
    try {
      await action();
    } catch (err) {
      if (err instanceof ApiError) {
        this.notice = err.code === "LocatingFailed"
          ? `LocatingFailed: ${err.message} — adjust the instruction and retry.`
          : `${err.code}: ${err.message}`;
      } else {
        this.notice = String(err);
      }
    } finally {
      this.pending = false;
      this.render();
    }
  }

  private async refreshViewport() {
    if (!this.session || !this.viewer) return;
    try {
      const obj = await this.client.fetchCurrentMesh(this.session.id);
      this.viewer.setModel(parseOBJ(obj));
    } catch {
      this.viewer.setModel(null);
    }
  }

  // ----- rendering -----

  render() {
    this.root.textContent = "";
    if (this.notice) {
      this.root.appendChild(el("div", { id: "notice", class: "notice" }, this.notice));
    }
    if (this.pending) {
      this.root.appendChild(el("div", { id: "spinner", class: "spinner" }, "working…"));
    }
    if (!this.session) {
      this.renderStart();
      return;
    }
    this.renderSession(this.session);
  }

  private renderStart() {
    const form = el("div", { id: "create-form", class: "panel" });
    form.appendChild(el("h2", {}, "Start a session"));
    const input = el("textarea", { id: "model-input", rows: "4", placeholder: "paste a CAD sequence…" });
    const createBtn = el("button", { id: "create-btn" }, "Create session");
    createBtn.addEventListener("click", () => this.createSession(input.value));
    const loadInput = el("input", { id: "load-input", placeholder: "session id" });
    const loadBtn = el("button", { id: "load-btn" }, "Load session");
    loadBtn.addEventListener("click", () => this.loadSession(loadInput.value));
    form.append(input, createBtn, el("hr"), loadInput, loadBtn);
    this.root.appendChild(form);
  }

  private renderSession(session: SessionState) {
    const header = el("div", { class: "panel" });
    header.appendChild(el("h2", {}, "Session"));
    header.appendChild(el("code", { id: "session-id" }, session.id));
    this.root.appendChild(header);

    // current model viewport (orbit with pointer drag)
    const viewport = el("div", { id: "viewport-current", class: "panel" });
    viewport.appendChild(el("h3", {}, "Current model"));
    const canvas = el("canvas", { width: "320", height: "320" });
    viewport.appendChild(canvas);
    viewport.appendChild(el("pre", { id: "current-text", class: "seq" }, session.current_text));
    this.root.appendChild(viewport);
    this.viewer = new Viewer(canvas);
    void this.refreshViewport();

    // instruction entry
    const form = el("div", { id: "instruction-form", class: "panel" });
    const input = el("input", { id: "instruction-input", placeholder: "describe the edit…" });
    const submit = el("button", { id: "submit-btn", disabled: "" }, "Submit instruction");
    input.addEventListener("input", () => {
      if (input.value.trim() && !this.pending) submit.removeAttribute("disabled");
      else submit.setAttribute("disabled", "");
    });
    submit.addEventListener("click", () => this.submitInstruction(input.value));
    form.append(input, submit);
    this.root.appendChild(form);

    // candidate gallery for the latest instruction
    const last = session.history[session.history.length - 1];
    if (last) {
      this.root.appendChild(this.renderGallery(session, last.candidates, last.selection?.index));
    }

    // timeline
    const timeline = el("div", { id: "timeline", class: "panel" });
    timeline.appendChild(el("h3", {}, "History"));
    session.history.forEach((entry, i) => {
      const line = entry.selection
        ? `${i + 1}. ${entry.instruction} → candidate ${entry.selection.index}`
        : `${i + 1}. ${entry.instruction} (no selection)`;
      timeline.appendChild(el("div", { class: "timeline-entry" }, line));
    });
    this.root.appendChild(timeline);
  }

  private renderGallery(session: SessionState, candidates: Candidate[], selected?: number) {
    const gallery = el("div", { id: "gallery", class: "panel" });
    gallery.appendChild(el("h3", {}, "Candidates"));
    candidates.forEach((candidate, index) => {
      const valid = candidate.parse_ok;
      const card = el("div", {
        class: `candidate-card ${valid ? "valid" : "invalid"}${selected === index ? " selected" : ""}`,
        "data-index": String(index),
      });
      card.appendChild(el("div", { class: "card-title" }, `#${index}`));
      const badges = el("div", { class: "badges" });
      badges.appendChild(
        el("span", { class: `badge badge-parse ${candidate.parse_ok ? "ok" : "bad"}` },
          candidate.parse_ok ? "parse ✓" : "parse ✗"),
      );
      badges.appendChild(
        el("span", { class: `badge badge-spans ${candidate.consistency_ok ? "ok" : "bad"}` },
          candidate.consistency_ok ? "spans ✓" : "spans ✗"),
      );
      if (candidate.error) badges.appendChild(el("span", { class: "badge error" }, candidate.error));
      card.appendChild(badges);

      if (valid) {
        const mini = el("canvas", { width: "160", height: "160", class: "mini-view" });
        card.appendChild(mini);
        const viewer = new Viewer(mini);
        void this.client
          .fetchCandidateMesh(session.id, index)
          .then((obj) => viewer.setModel(parseOBJ(obj)))
          .catch(() => viewer.setModel(null));
      } else {
        card.appendChild(el("div", { class: "mini-view placeholder" }, "unrenderable"));
      }

      const pick = el("button", { class: "select-btn" }, "Select");
      if (!valid) pick.setAttribute("disabled", "");
      pick.addEventListener("click", () => this.selectCandidate(index));
      card.appendChild(pick);
      gallery.appendChild(card);
    });
    return gallery;
  }
}

export function mountApp(root: HTMLElement, client: Client, options: AppOptions = {}): App {
  return new App(root, client, options);
}
