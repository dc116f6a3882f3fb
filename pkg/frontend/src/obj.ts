// Minimal OBJ reader for the meshes the service exports: "v" lines,
// triangle "f" lines, and "o primN_<op>" groups carrying the boolean op.

export interface ObjGroup {
  name: string;
  cut: boolean;
  faces: number[][]; // triangles of 0-based vertex indices
}

export interface ObjModel {
  positions: Float64Array; // xyz triples
  groups: ObjGroup[];
}

export function parseOBJ(text: string): ObjModel {
  const positions: number[] = [];
  const groups: ObjGroup[] = [];
  let current: ObjGroup = { name: "default", cut: false, faces: [] };

  for (const raw of text.split("\n")) {
    const parts = raw.trim().split(/\s+/);
    if (parts[0] === "v") {
      positions.push(parseFloat(parts[1]), parseFloat(parts[2]), parseFloat(parts[3]));
    } else if (parts[0] === "o" || parts[0] === "g") {
      if (current.faces.length) groups.push(current);
      const name = parts[1] ?? "group";
      current = { name, cut: name.endsWith("_cut"), faces: [] };
    } else if (parts[0] === "f") {
      // fan-triangulate just in case; indices are 1-based in OBJ
      const idx = parts.slice(1).map((p) => parseInt(p.split("/")[0], 10) - 1);
      for (let i = 1; i + 1 < idx.length; i++) {
        current.faces.push([idx[0], idx[i], idx[i + 1]]);
      }
    }
  }
  if (current.faces.length) groups.push(current);
  return { positions: new Float64Array(positions), groups };
}

export function triangleCount(model: ObjModel): number {
  return model.groups.reduce((n, g) => n + g.faces.length, 0);
}
