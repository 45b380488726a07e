// DOM wiring: render the commit graph, inspect commits and variables,
// search, and drive checkouts. State lives in this module; all data comes
// from the HTTP API via the typed client.

import { ApiRefusal, Client } from "./api.js";
import {
  describeRefusal,
  edgeStyle,
  layout,
  shortId,
} from "./graph.js";
import type { GraphPayload, HeadPayload } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

const client = new Client("");

interface UiState {
  graph: GraphPayload | null;
  head: HeadPayload | null;
  expanded: Set<string>;
  selected: string | null;
  fold: boolean;
  varPage: number;
  varFilter: string;
  matches: Set<string>; // search hits
}

const state: UiState = {
  graph: null,
  head: null,
  expanded: new Set(),
  selected: null,
  fold: true,
  varPage: 0,
  varFilter: "",
  matches: new Set(),
};

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text) node.textContent = text;
  return node;
}

function byId(id: string): HTMLElement {
  return document.getElementById(id)!;
}

async function refresh(): Promise<void> {
  const [graph, head] = await Promise.all([
    client.graph(state.fold),
    client.head(),
  ]);
  state.graph = graph;
  state.head = head;
  renderHead();
  renderGraph();
  if (state.selected) void renderInspector(state.selected);
}

function renderHead(): void {
  const head = state.head;
  if (!head) return;
  const target = byId("head-status");
  target.textContent = "";
  const branch = head.detached ? "detached" : `branch ${head.branch}`;
  if (head.split) {
    target.append(
      el("span", { class: "split-badge" }, "split head"),
      el(
        "span",
        {},
        ` ${branch} — code at ${shortId(head.head_code)}, ` +
          `data rolled back to ${shortId(head.head_data)}`,
      ),
    );
  } else {
    target.append(
      el("span", {}, `${branch} @ ${shortId(head.head_code)}`),
    );
  }
}

function renderGraph(): void {
  const graph = state.graph;
  if (!graph) return;
  const plan = layout(graph, state.expanded);
  const svg = byId("graph") as unknown as SVGSVGElement;
  svg.textContent = "";
  svg.setAttribute("width", String(plan.width));
  svg.setAttribute("height", String(plan.height));

  for (const edge of plan.edges) {
    const style = edgeStyle(edge.kind);
    const line = document.createElementNS(SVG_NS, "line");
    line.setAttribute("x1", String(edge.x1));
    line.setAttribute("y1", String(edge.y1));
    line.setAttribute("x2", String(edge.x2));
    line.setAttribute("y2", String(edge.y2));
    line.setAttribute("stroke", "#555");
    line.setAttribute("stroke-width", String(style.width));
    if (style.dasharray) line.setAttribute("stroke-dasharray", style.dasharray);
    svg.appendChild(line);
  }

  for (const node of plan.nodes) {
    const group = document.createElementNS(SVG_NS, "g");
    group.setAttribute("cursor", "pointer");

    if (node.kind === "group") {
      const rect = document.createElementNS(SVG_NS, "rect");
      rect.setAttribute("x", String(node.x - 7));
      rect.setAttribute("y", String(node.y - 7));
      rect.setAttribute("width", "14");
      rect.setAttribute("height", "14");
      rect.setAttribute("fill", "#ddd");
      rect.setAttribute("stroke", "#555");
      group.appendChild(rect);
      const label = document.createElementNS(SVG_NS, "text");
      label.setAttribute("x", String(node.x + 14));
      label.setAttribute("y", String(node.y + 4));
      label.setAttribute("class", "node-label");
      label.textContent = `… ${node.memberCount} commits`;
      group.appendChild(label);
      group.addEventListener("click", () => {
        state.expanded.add(node.id);
        renderGraph();
      });
    } else {
      const circle = document.createElementNS(SVG_NS, "circle");
      circle.setAttribute("cx", String(node.x));
      circle.setAttribute("cy", String(node.y));
      circle.setAttribute("r", "6");
      const isHit = state.matches.has(node.id);
      const isSelected = state.selected === node.id;
      circle.setAttribute(
        "fill",
        isSelected ? "#1a66cc" : isHit ? "#e8a020" : "#fff",
      );
      circle.setAttribute("stroke", "#333");
      circle.setAttribute("stroke-width", "1.5");
      group.appendChild(circle);

      const parts = [shortId(node.id), ...node.labels];
      const label = document.createElementNS(SVG_NS, "text");
      label.setAttribute("x", String(node.x + 12));
      label.setAttribute("y", String(node.y + 4));
      label.setAttribute("class", "node-label");
      label.textContent = parts.join("  ");
      group.appendChild(label);

      group.addEventListener("click", () => {
        state.selected = node.id;
        state.varPage = 0;
        renderGraph();
        void renderInspector(node.id);
      });
    }
    svg.appendChild(group);
  }
}

async function renderInspector(cid: string): Promise<void> {
  const panel = byId("inspector");
  panel.textContent = "";
  const commit = await client.commit(cid);

  const header = el("div", { class: "inspector-head" });
  header.append(el("strong", {}, shortId(commit.id)));
  header.append(
    el(
      "span",
      { class: "meta" },
      ` ${commit.kind} · ${commit.branch} · history ${commit.history_len}`,
    ),
  );
  if (commit.tag) header.append(el("span", { class: "tag" }, commit.tag));
  panel.append(header);
  if (commit.message) panel.append(el("p", { class: "message" }, commit.message));

  const actions = el("div", { class: "actions" });
  const checkoutBoth = el("button", {}, "Checkout (code + data)");
  checkoutBoth.addEventListener("click", () => void doCheckout(cid, "both"));
  const rollback = el("button", {}, "Rollback data only");
  rollback.addEventListener("click", () => void doCheckout(cid, "data"));
  actions.append(checkoutBoth, rollback);
  panel.append(actions);
  panel.append(el("div", { id: "checkout-note", class: "note" }));

  const cells = el("div", { class: "cells" });
  for (const cell of commit.cells) {
    const box = el("div", { class: cell.error ? "cell cell-error" : "cell" });
    const counter = cell.counter === null ? " " : String(cell.counter);
    box.append(el("div", { class: "cell-counter" }, `[${counter}]`));
    const body = el("div", { class: "cell-body" });
    body.append(el("pre", { class: "cell-source" }, cell.source));
    if (cell.output) body.append(el("pre", { class: "cell-output" }, cell.output));
    box.append(body);
    cells.append(box);
  }
  panel.append(cells);

  await renderVariables(cid);
}

async function renderVariables(cid: string): Promise<void> {
  const target = byId("variables");
  const payload = await client.variables(cid, state.varPage, state.varFilter);
  target.textContent = "";
  target.append(
    el("div", { class: "panel-title" }, `Variables (${payload.total})`),
  );

  const filter = el("input", {
    type: "search",
    placeholder: "filter names",
    value: state.varFilter,
  });
  filter.addEventListener("change", () => {
    state.varFilter = filter.value;
    state.varPage = 0;
    void renderVariables(cid);
  });
  target.append(filter);

  const table = el("table", { class: "vars" });
  for (const entry of payload.variables) {
    const row = el("tr");
    row.append(el("td", { class: "var-name" }, entry.name));
    row.append(el("td", { class: "var-type" }, entry.type));
    row.append(
      el(
        "td",
        { class: "var-repr" },
        entry.truncated ? entry.repr + " …" : entry.repr,
      ),
    );
    table.append(row);
  }
  target.append(table);

  const pageSize = payload.variables.length || 1;
  if (payload.total > pageSize || state.varPage > 0) {
    const nav = el("div", { class: "pager" });
    const prev = el("button", {}, "prev");
    prev.disabled = state.varPage === 0;
    prev.addEventListener("click", () => {
      state.varPage -= 1;
      void renderVariables(cid);
    });
    const next = el("button", {}, "next");
    next.disabled = (state.varPage + 1) * pageSize >= payload.total;
    next.addEventListener("click", () => {
      state.varPage += 1;
      void renderVariables(cid);
    });
    nav.append(prev, el("span", {}, ` page ${state.varPage + 1} `), next);
    target.append(nav);
  }
}

async function doCheckout(cid: string, mode: "both" | "data"): Promise<void> {
  const note = byId("checkout-note");
  note.classList.remove("refusal");
  note.textContent = "";
  try {
    await client.checkout(cid, mode);
    await refresh();
  } catch (err) {
    if (err instanceof ApiRefusal && err.status === 409) {
      note.classList.add("refusal");
      note.textContent = describeRefusal(err.body.checkout_class);
    } else {
      throw err;
    }
  }
}

function wireControls(): void {
  const foldToggle = byId("fold-toggle") as HTMLInputElement;
  foldToggle.checked = state.fold;
  foldToggle.addEventListener("change", () => {
    state.fold = foldToggle.checked;
    state.expanded.clear();
    void refresh();
  });

  const searchBox = byId("search-box") as HTMLInputElement;
  searchBox.addEventListener("change", async () => {
    if (!searchBox.value.trim()) {
      state.matches = new Set();
      renderGraph();
      return;
    }
    try {
      const result = await client.search(searchBox.value);
      state.matches = new Set(result.commits);
    } catch (err) {
      state.matches = new Set();
      if (!(err instanceof ApiRefusal)) throw err;
    }
    renderGraph();
  });
}

async function pollLoop(): Promise<void> {
  let seq = 0;
  for (;;) {
    try {
      const event = await client.events(seq);
      if (event.seq > seq) {
        seq = event.seq;
        await refresh();
      }
    } catch {
      // server momentarily unreachable; back off and retry
      await new Promise((resolve) => setTimeout(resolve, 2000));
    }
  }
}

export function start(): void {
  wireControls();
  void refresh();
  void pollLoop();
}

if (typeof document !== "undefined" && document.getElementById("graph")) {
  start();
}
