import { ReviewStore, highlightTerms } from "./store.js";
import type { Predicate, QueueEntry } from "./types.js";

const PREDICATES: Predicate[] = ["hypernym", "hyponym", "instance", "concept"];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function provenanceLine(entry: QueueEntry): HTMLElement {
  const line = el("p", "provenance");
  const sentence = entry.sentences[0] ?? "(no co-mention sentence: null-path candidate)";
  for (const segment of highlightTerms(sentence, [entry.subject, entry.object])) {
    if (segment.highlight) {
      line.appendChild(el("mark", undefined, segment.text));
    } else {
      line.appendChild(document.createTextNode(segment.text));
    }
  }
  const source = el("a", "source");
  source.textContent = entry.source;
  source.href = entry.source;
  line.appendChild(document.createTextNode(" — "));
  line.appendChild(source);
  return line;
}

function entryCard(store: ReviewStore, entry: QueueEntry): HTMLElement {
  const card = el("article", "entry");
  card.tabIndex = 0;
  card.dataset.entryId = entry.id;

  const headline = el("h3");
  headline.appendChild(el("span", "subject", entry.subject));
  headline.appendChild(el("span", "predicate", ` ${entry.predicate} `));
  headline.appendChild(el("span", "object", entry.object));
  headline.appendChild(
    el("span", "confidence", ` (${(entry.confidence * 100).toFixed(1)}%)`),
  );
  card.appendChild(headline);
  card.appendChild(provenanceLine(entry));

  const controls = el("div", "controls");
  const accept = el("button", "accept", "accept (a)");
  accept.onclick = () => void store.decide(entry.id, "accept");
  const reject = el("button", "reject", "reject (r)");
  reject.onclick = () => void store.decide(entry.id, "reject");
  controls.appendChild(accept);
  controls.appendChild(reject);

  const edit = el("select", "predicate-edit");
  edit.appendChild(new Option("accept as…", ""));
  for (const predicate of PREDICATES) {
    edit.appendChild(new Option(predicate, predicate));
  }
  edit.onchange = () => {
    if (edit.value) {
      void store.decide(entry.id, "accept-with-predicate", edit.value as Predicate);
    }
  };
  controls.appendChild(edit);
  card.appendChild(controls);

  card.onkeydown = (event) => {
    if (event.key === "a") void store.decide(entry.id, "accept");
    if (event.key === "r") void store.decide(entry.id, "reject");
  };
  return card;
}

export function render(store: ReviewStore, root: HTMLElement): void {
  root.textContent = "";
  const { state } = store;

  if (state.connectionError) {
    const banner = el("div", "banner error");
    banner.appendChild(
      el("span", undefined, `service unreachable: ${state.connectionError} `),
    );
    const retry = el("button", undefined, "retry");
    retry.onclick = () => void store.refresh();
    banner.appendChild(retry);
    root.appendChild(banner);
  }
  for (const notice of store.takeNotices()) {
    root.appendChild(el("div", "banner notice", notice));
  }

  const stats = el("section", "stats");
  if (state.stats) {
    stats.textContent =
      `ontology: ${state.stats.concepts} concepts, ` +
      `${state.stats.relations} relations, version ${state.stats.version}`;
  } else {
    stats.textContent = "ontology: loading…";
  }
  root.appendChild(stats);

  const filters = el("section", "filters");
  const predicateFilter = el("select", "predicate-filter");
  predicateFilter.appendChild(new Option("all predicates", ""));
  for (const predicate of PREDICATES) {
    const option = new Option(predicate, predicate);
    option.selected = state.filters.predicate === predicate;
    predicateFilter.appendChild(option);
  }
  predicateFilter.onchange = () =>
    void store.setFilters({
      ...state.filters,
      predicate: (predicateFilter.value || undefined) as Predicate | undefined,
    });
  filters.appendChild(predicateFilter);
  root.appendChild(filters);

  const list = el("section", "queue");
  if (state.entries.length === 0) {
    list.appendChild(
      el("p", "empty", "review queue is empty — nothing pending"),
    );
  }
  for (const entry of state.entries) {
    list.appendChild(entryCard(store, entry));
  }
  root.appendChild(list);

  const enrich = el("section", "enrich");
  const input = el("input");
  input.placeholder = "page URL or path to enrich";
  const submit = el("button", undefined, "enrich");
  submit.onclick = () => {
    if (input.value.trim()) {
      void store.submitEnrich(input.value.trim());
      input.value = "";
    }
  };
  enrich.appendChild(input);
  enrich.appendChild(submit);
  root.appendChild(enrich);
}
