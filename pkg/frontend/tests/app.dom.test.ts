// Gallery/timeline rendering against a stubbed client: badges must mirror
// the candidate flags and invalid candidates must be visibly disabled.

import { beforeEach, describe, expect, it } from "vitest";

import type { Client, SessionState } from "../src/api";
import { App } from "../src/app";

const MODEL = "sketch face loop line 160 96 extrude <eom>"; // display only
const OBJ = "v 0 0 0\nv 1 0 0\nv 0 1 0\no prim0_new\nf 1 2 3\n";

function fakeSession(): SessionState {
  return {
    id: "abc123",
    orig_text: MODEL,
    current_text: MODEL,
    created: "2026-01-01T00:00:00Z",
    updated: "2026-01-01T00:00:00Z",
    history: [
      {
        instruction: "Make it taller.",
        orig_text: MODEL,
        masked_text: "<mask>",
        candidates: [],
        selection: { index: 0, annotator: "a" },
      },
      {
        instruction: "Remove the cylinder.",
        orig_text: MODEL,
        masked_text: "<mask>",
        candidates: [
          { edit_text: MODEL, parse_ok: true, consistency_ok: true, error: null },
          { edit_text: "", parse_ok: false, consistency_ok: false, error: "TruncatedSequence" },
          { edit_text: MODEL, parse_ok: true, consistency_ok: false, error: null },
        ],
        selection: null,
      },
    ],
  };
}

const stubClient = {
  fetchCurrentMesh: async () => OBJ,
  fetchCandidateMesh: async () => OBJ,
} as unknown as Client;

describe("session rendering", () => {
  let root: HTMLElement;

  beforeEach(() => {
    document.body.innerHTML = "<div id='root'></div>";
    root = document.getElementById("root")!;
  });

  it("renders candidate cards in order with matching badges", () => {
    const app = new App(root, stubClient);
    app.session = fakeSession();
    app.render();

    const cards = [...root.querySelectorAll(".candidate-card")];
    expect(cards.length).toBe(3);
    expect(cards.map((c) => c.getAttribute("data-index"))).toEqual(["0", "1", "2"]);

    const parseBadges = cards.map((c) => c.querySelector(".badge-parse")!.textContent);
    expect(parseBadges).toEqual(["parse ✓", "parse ✗", "parse ✓"]);
    const spanBadges = cards.map((c) => c.querySelector(".badge-spans")!.textContent);
    expect(spanBadges).toEqual(["spans ✓", "spans ✗", "spans ✗"]);
  });

  it("disables selection for candidates that failed to parse", () => {
    const app = new App(root, stubClient);
    app.session = fakeSession();
    app.render();

    const cards = [...root.querySelectorAll(".candidate-card")];
    expect(cards[1].classList.contains("invalid")).toBe(true);
    const buttons = cards.map((c) => c.querySelector(".select-btn") as HTMLButtonElement);
    expect(buttons[0].hasAttribute("disabled")).toBe(false);
    expect(buttons[1].hasAttribute("disabled")).toBe(true);
    expect(buttons[2].hasAttribute("disabled")).toBe(false);
  });

  it("shows one timeline entry per history item", () => {
    const app = new App(root, stubClient);
    app.session = fakeSession();
    app.render();

    const entries = [...root.querySelectorAll("#timeline .timeline-entry")];
    expect(entries.length).toBe(2);
    expect(entries[0].textContent).toContain("Make it taller.");
    expect(entries[0].textContent).toContain("candidate 0");
    expect(entries[1].textContent).toContain("no selection");
  });

  it("disables submit while the instruction box is empty", () => {
    const app = new App(root, stubClient);
    app.session = fakeSession();
    app.render();

    const input = root.querySelector("#instruction-input") as HTMLInputElement;
    const submit = root.querySelector("#submit-btn") as HTMLButtonElement;
    expect(submit.hasAttribute("disabled")).toBe(true);
    input.value = "shrink the base";
    input.dispatchEvent(new Event("input"));
    expect(submit.hasAttribute("disabled")).toBe(false);
    input.value = "   ";
    input.dispatchEvent(new Event("input"));
    expect(submit.hasAttribute("disabled")).toBe(true);
  });

  it("starts with the create/load form", () => {
    new App(root, stubClient);
    expect(root.querySelector("#create-form")).toBeTruthy();
    expect(root.querySelector("#model-input")).toBeTruthy();
    expect(root.querySelector("#load-btn")).toBeTruthy();
  });
});
