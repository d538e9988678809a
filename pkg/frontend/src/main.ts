/**
 * Entry point: wires the store to the DOM and keeps the job id in the URL
 * hash so a reload (or a shared link) reconstructs the same view from
 * GET /jobs/{id} alone.
 */

import { ApiClient } from "./api.js";
import { jobIdFromHash } from "./route.js";
import { WizardStore } from "./store.js";
import { render } from "./views.js";

function start(): void {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app container");

  const store = new WizardStore(new ApiClient(""));
  store.subscribe((state) => render(root, state, store));
  render(root, store.getState(), store);

  const syncFromHash = () => {
    const jobId = jobIdFromHash(window.location.hash);
    if (jobId && jobId !== store.getState().job?.id) {
      void store.load(jobId);
    } else if (!jobId && store.getState().job) {
      store.reset();
    }
  };
  window.addEventListener("hashchange", syncFromHash);
  syncFromHash();
}

start();
