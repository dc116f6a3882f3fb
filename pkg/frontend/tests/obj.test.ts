import { describe, expect, it } from "vitest";

import { parseOBJ, triangleCount } from "../src/obj";

const SAMPLE = `v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
o prim0_new
f 1 2 3
f 1 3 4
o prim1_cut
f 1 2 4
`;

describe("parseOBJ", () => {
  it("reads vertices and triangles", () => {
    const model = parseOBJ(SAMPLE);
    expect(model.positions.length).toBe(12);
    expect(triangleCount(model)).toBe(3);
    expect(model.groups.map((g) => g.name)).toEqual(["prim0_new", "prim1_cut"]);
  });

  it("tags cut groups from the object name", () => {
    const model = parseOBJ(SAMPLE);
    expect(model.groups[0].cut).toBe(false);
    expect(model.groups[1].cut).toBe(true);
  });

  it("converts to 0-based indices and fan-triangulates quads", () => {
    const quad = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
    const model = parseOBJ(quad);
    expect(model.groups[0].faces).toEqual([
      [0, 1, 2],
      [0, 2, 3],
    ]);
  });

  it("handles empty input", () => {
    const model = parseOBJ("");
    expect(model.positions.length).toBe(0);
    expect(model.groups).toEqual([]);
  });
});
