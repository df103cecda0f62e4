/**
 * Entry point for the served bundle. The study id comes from the
 * `?study=` query parameter; the service origin is the page origin, so
 * the bundle can be mounted directly by the study service.
 */

import { StudyClient } from "./api.js";
import { AnnotationApp } from "./app.js";

function boot(): void {
  const root = document.getElementById("app");
  if (!root) {
    throw new Error("missing #app container");
  }
  const studyId = new URLSearchParams(window.location.search).get("study");
  if (!studyId) {
    root.textContent = "Missing ?study=<id> in the URL.";
    return;
  }
  const client = new StudyClient("", studyId, (input, init) => fetch(input, init));
  new AnnotationApp(root, client, window.sessionStorage).start();
}

boot();
