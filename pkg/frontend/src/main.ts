import { ApiClient } from "./api.js";
import { mountApp } from "./app.js";

// the API lives at the origin root; the UI is mounted under /ui
const api = new ApiClient(window.location.origin);
const annotator = localStorage.getItem("linkaudit-annotator") ?? "annotator";

window.addEventListener("DOMContentLoaded", () => {
  const root = document.getElementById("app");
  if (root) mountApp(root, api, annotator);
});
