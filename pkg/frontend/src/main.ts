import { Client } from "./api.js";
import { mountApp } from "./app.js";

const params = new URLSearchParams(window.location.search);
const base = params.get("api") ?? "";
const annotator = params.get("annotator") ?? "anonymous";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");
const app = mountApp(root, new Client(base), { annotator });

const sessionId = params.get("session");
if (sessionId) void app.loadSession(sessionId);
