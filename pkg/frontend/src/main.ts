import { ApiClient } from "./api.js";
import { render } from "./render.js";
import { ReviewStore } from "./store.js";

const POLL_INTERVAL_MS = 5000;

const root = document.getElementById("app");
if (!root) throw new Error("missing #app container");

const params = new URLSearchParams(window.location.search);
const store = new ReviewStore(
  new ApiClient("", undefined, params.get("token") ?? undefined),
  params.get("reviewer") ?? undefined,
);

store.subscribe(() => render(store, root));
void store.refresh();
store.startPolling(POLL_INTERVAL_MS);
