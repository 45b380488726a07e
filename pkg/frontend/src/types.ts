// Payload shapes of the statevc HTTP API (see docs/api.md in the engine
// repository). Kept in one module so the client and the renderers agree.

export type EdgeKind = "CodeParent" | "DataParent" | "BothParents";

export interface GraphEdge {
  to: string;
  kind: EdgeKind;
}

export interface CommitRow {
  type: "commit";
  commit: string;
  row: number;
  lane: number;
  edges: GraphEdge[];
  labels: string[];
}

export interface GroupItem {
  type: "group";
  group_id: string;
  members: string[];
  collapsed: boolean;
}

export type GraphItem = CommitRow | GroupItem;

export interface GraphPayload {
  rows: GraphItem[];
  groups: { group_id: string; rows: CommitRow[] }[];
}

export interface HeadPayload {
  head_code: string;
  head_data: string;
  split: boolean;
  branch: string;
  detached: boolean;
}

export interface CellPayload {
  id: string;
  kind: "code" | "markdown";
  source: string;
  output: string;
  error: boolean;
  counter: number | null;
}

export interface CommitPayload {
  id: string;
  code_parent: string | null;
  data_parent: string | null;
  kind: "auto" | "manual";
  branch: string;
  message: string | null;
  tag: string | null;
  history_len: number;
  cells: CellPayload[];
  changed_variables: string[];
  deleted_variables: string[];
}

export interface VariableEntry {
  name: string;
  type: string;
  repr: string;
  truncated: boolean;
}

export interface VariablesPayload {
  total: number;
  page: number;
  variables: VariableEntry[];
}

export interface ApiError {
  code: string;
  message: string;
  checkout_class?: string;
}
