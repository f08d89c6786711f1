import { ApiClient } from "./api.js";
import { createApp } from "./app.js";

const params = new URLSearchParams(location.search);
const base = params.get("service") ?? `${location.protocol}//${location.hostname}:8000`;

const root = document.getElementById("app");
if (root) createApp(root, new ApiClient(base));
