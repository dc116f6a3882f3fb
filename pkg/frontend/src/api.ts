// Typed client for the secad session service. The UI never edits models
// locally; every state change goes through these endpoints.

export interface Candidate {
  edit_text: string;
  parse_ok: boolean;
  consistency_ok: boolean;
  error: string | null;
}

export interface EditResult {
  masked: string;
  k: number;
  candidates: Candidate[];
}

export interface Selection {
  index: number;
  annotator: string;
}

export interface HistoryEntry {
  instruction: string;
  orig_text: string;
  masked_text: string;
  candidates: Candidate[];
  selection: Selection | null;
}

export interface SessionState {
  id: string;
  orig_text: string;
  current_text: string;
  created: string;
  updated: string;
  history: HistoryEntry[];
}

export class ApiError extends Error {
  constructor(public code: string, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  let res: Response;
  try {
    res = await fetch(url, init);
  } catch (err) {
    throw new ApiError("NetworkError", String(err));
  }
  if (!res.ok) {
    const body = await res.json().catch(() => ({}));
    throw new ApiError(body.error ?? `HTTP ${res.status}`, body.message ?? res.statusText);
  }
  return res.json() as Promise<T>;
}

const JSON_HEADERS = { "Content-Type": "application/json" };

export class Client {
  constructor(public base: string = "") {}

  createSession(origText: string): Promise<SessionState> {
    return request(`${this.base}/sessions`, {
      method: "POST",
      headers: JSON_HEADERS,
      body: JSON.stringify({ orig_text: origText }),
    });
  }

  getSession(id: string): Promise<SessionState> {
    return request(`${this.base}/sessions/${id}`);
  }

  submitInstruction(id: string, instruction: string, k?: number): Promise<EditResult> {
    return request(`${this.base}/sessions/${id}/instructions`, {
      method: "POST",
      headers: JSON_HEADERS,
      body: JSON.stringify(k == null ? { instruction } : { instruction, k }),
    });
  }

  applySelection(id: string, index: number, annotator: string): Promise<SessionState> {
    return request(`${this.base}/sessions/${id}/selection`, {
      method: "POST",
      headers: JSON_HEADERS,
      body: JSON.stringify({ index, annotator }),
    });
  }

  async fetchCurrentMesh(id: string): Promise<string> {
    const res = await fetch(`${this.base}/sessions/${id}/mesh`);
    if (!res.ok) throw new ApiError(`HTTP ${res.status}`, res.statusText);
    return res.text();
  }

  async fetchCandidateMesh(id: string, index: number): Promise<string> {
    const res = await fetch(`${this.base}/sessions/${id}/candidates/${index}/mesh`);
    if (!res.ok) throw new ApiError(`HTTP ${res.status}`, res.statusText);
    return res.text();
  }
}
