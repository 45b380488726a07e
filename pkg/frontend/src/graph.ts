// Pure graph layout: turns the API's rows/lanes into SVG-ready geometry.
// No DOM access here, so everything is unit-testable.

import type {
  CommitRow,
  EdgeKind,
  GraphItem,
  GraphPayload,
} from "./types.js";

export const LANE_WIDTH = 36;
export const ROW_HEIGHT = 34;
export const MARGIN = 24;

export interface NodePoint {
  id: string; // commit id, or group id for a collapsed group
  kind: "commit" | "group";
  x: number;
  y: number;
  labels: string[];
  memberCount: number; // 0 for plain commits
}

export interface EdgeLine {
  from: string;
  to: string;
  kind: EdgeKind;
  x1: number;
  y1: number;
  x2: number;
  y2: number;
}

export interface Layout {
  nodes: NodePoint[];
  edges: EdgeLine[];
  width: number;
  height: number;
}

// Replace expanded groups with their member rows, in place in the item
// order. Collapsed groups stay as single entries.
export function visibleItems(
  payload: GraphPayload,
  expanded: ReadonlySet<string>,
): GraphItem[] {
  const byGroup = new Map(payload.groups.map((g) => [g.group_id, g.rows]));
  const out: GraphItem[] = [];
  for (const item of payload.rows) {
    if (item.type === "group" && expanded.has(item.group_id)) {
      out.push(...(byGroup.get(item.group_id) ?? []));
    } else {
      out.push(item);
    }
  }
  return out;
}

function laneOf(item: GraphItem, byGroup: Map<string, CommitRow[]>): number {
  if (item.type === "commit") return item.lane;
  const rows = byGroup.get(item.group_id) ?? [];
  return rows.length ? rows[0].lane : 0;
}

// Compute node positions and edge segments. Edges whose target commit is
// folded inside a collapsed group are drawn to the group node instead, so
// the chain stays visually connected.
export function layout(
  payload: GraphPayload,
  expanded: ReadonlySet<string>,
): Layout {
  const byGroup = new Map(payload.groups.map((g) => [g.group_id, g.rows]));
  const items = visibleItems(payload, expanded);

  const nodes: NodePoint[] = [];
  const position = new Map<string, NodePoint>(); // commit id -> its node
  let maxLane = 0;
  items.forEach((item, index) => {
    const lane = laneOf(item, byGroup);
    maxLane = Math.max(maxLane, lane);
    const point: NodePoint = {
      id: item.type === "commit" ? item.commit : item.group_id,
      kind: item.type === "commit" ? "commit" : "group",
      x: MARGIN + lane * LANE_WIDTH,
      y: MARGIN + index * ROW_HEIGHT,
      labels: item.type === "commit" ? item.labels : [],
      memberCount: item.type === "group" ? item.members.length : 0,
    };
    nodes.push(point);
    if (item.type === "commit") {
      position.set(item.commit, point);
    } else {
      for (const member of item.members) position.set(member, point);
    }
  });

  const edges: EdgeLine[] = [];
  for (const item of items) {
    if (item.type !== "commit") continue;
    const from = position.get(item.commit)!;
    for (const edge of item.edges) {
      const to = position.get(edge.to);
      if (!to || to === from) continue; // parent folded into the same group
      edges.push({
        from: item.commit,
        to: edge.to,
        kind: edge.kind,
        x1: from.x,
        y1: from.y,
        x2: to.x,
        y2: to.y,
      });
    }
  }

  return {
    nodes,
    edges,
    width: MARGIN * 2 + (maxLane + 1) * LANE_WIDTH + 260,
    height: MARGIN * 2 + Math.max(items.length - 1, 0) * ROW_HEIGHT,
  };
}

// Visual encoding of the two-parent structure: solid for the code parent,
// dashed for the data parent, thick solid when both coincide.
export function edgeStyle(kind: EdgeKind): {
  dasharray: string;
  width: number;
} {
  switch (kind) {
    case "CodeParent":
      return { dasharray: "", width: 1.5 };
    case "DataParent":
      return { dasharray: "5,4", width: 1.5 };
    case "BothParents":
      return { dasharray: "", width: 3 };
  }
}

export function shortId(cid: string): string {
  return cid.slice(0, 8);
}

// Human explanation for a refused checkout (HTTP 409 from POST /checkout).
export function describeRefusal(checkoutClass: string | undefined): string {
  switch (checkoutClass) {
    case "UnsafeFutureData":
      return (
        "Refused: that commit's data lies in this session's future. " +
        "Its execution history extends past the current one, so restoring " +
        "only its variables would show outputs the current history never " +
        "produced. Check out code and data together instead."
      );
    case "UnsafeUnrelatedData":
      return (
        "Refused: that commit's data comes from a diverged execution " +
        "history — it is neither a prefix nor an extension of the current " +
        "one, so its variables cannot be reconciled with the cells on " +
        "screen. Check out code and data together instead."
      );
    case "UnsafeOnlyCode":
      return (
        "Refused: restoring code without its data is never safe — the " +
        "cells would claim outputs the current variables did not produce."
      );
    default:
      return "Refused: the engine classified this checkout as unsafe.";
  }
}
