/**
 * View state and the elimination flow, free of DOM concerns.
 *
 * The store drives the whole review-and-eliminate loop: report listing with
 * client-side reordering, clone inspection, the draft (name, parameter
 * names and order, instance ticks), mandatory preview, apply, and undo.
 * Project state changes only ever leave through preview + apply; every
 * number shown comes straight from the service payloads.
 */

import {
  ApiError,
  Client,
  CloneDetail,
  PreviewResponse,
  Report,
  ReportClass,
} from "./api.js";

export type Order = "size" | "freq";

export interface Draft {
  classId: number;
  functionName: string;
  paramNames: Record<string, string>;
  paramOrder: number[];
  selected: boolean[];
  preview: PreviewResponse | null;
}

export interface Banner {
  kind: "error" | "stale" | "info";
  message: string;
}

type Listener = () => void;

const VARIABLE_NAME = /^[A-Z][A-Za-z0-9_]*$/;
const FUNCTION_NAME = /^[a-z][A-Za-z0-9_]*$/;

export class AppState {
  report: Report | null = null;
  order: Order = "size";
  detail: CloneDetail | null = null;
  draft: Draft | null = null;
  banner: Banner | null = null;
  sources = new Map<string, string>();
  canUndo = false;
  connected = true;

  private listeners: Listener[] = [];

  constructor(private readonly client: Client) {}

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  get revision(): number {
    return this.report?.revision ?? 0;
  }

  /** Classes in the chosen order; reordering never refetches detection. */
  get orderedClasses(): ReportClass[] {
    const classes = [...(this.report?.classes ?? [])];
    if (this.order === "freq") {
      classes.sort((a, b) => b.occurrences - a.occurrences || a.id - b.id);
    } else {
      classes.sort((a, b) => b.sizeLoc - a.sizeLoc || a.id - b.id);
    }
    return classes;
  }

  async loadReport(): Promise<void> {
    try {
      this.report = await this.client.report(this.order);
      this.connected = true;
      this.banner = null;
    } catch (err) {
      if (err instanceof ApiError) {
        this.banner = { kind: "error", message: err.message };
      } else {
        this.connected = false;
        this.banner = {
          kind: "error",
          message: "connection lost; showing the last known report",
        };
      }
    }
    this.notify();
  }

  setOrder(order: Order): void {
    this.order = order;
    this.notify();
  }

  async openClone(id: number): Promise<void> {
    this.detail = await this.client.clone(id);
    this.draft = null;
    for (const instance of this.detail.instances) {
      if (!this.sources.has(instance.file)) {
        const payload = await this.client.source(instance.file);
        this.sources.set(instance.file, payload.text);
      }
    }
    this.notify();
  }

  closeClone(): void {
    this.detail = null;
    this.draft = null;
    this.notify();
  }

  // -- the elimination draft -------------------------------------------

  startElimination(): void {
    if (!this.detail) return;
    this.draft = {
      classId: this.detail.id,
      functionName: "",
      paramNames: {},
      paramOrder: this.detail.params.map((_, i) => i),
      selected: this.detail.instances.map(() => true),
      preview: null,
    };
    this.notify();
  }

  setFunctionName(name: string): void {
    if (!this.draft) return;
    this.draft.functionName = name;
    this.draft.preview = null;
    this.notify();
  }

  renameParam(original: string, name: string): void {
    if (!this.draft) return;
    if (name === "" || name === original) {
      delete this.draft.paramNames[original];
    } else {
      this.draft.paramNames[original] = name;
    }
    this.draft.preview = null;
    this.notify();
  }

  moveParam(index: number, delta: -1 | 1): void {
    if (!this.draft) return;
    const order = this.draft.paramOrder;
    const target = index + delta;
    if (target < 0 || target >= order.length) return;
    [order[index], order[target]] = [order[target], order[index]];
    this.draft.preview = null;
    this.notify();
  }

  toggleInstance(index: number): void {
    if (!this.draft) return;
    this.draft.selected[index] = !this.draft.selected[index];
    this.draft.preview = null;
    this.notify();
  }

  selectAll(value: boolean): void {
    if (!this.draft) return;
    this.draft.selected = this.draft.selected.map(() => value);
    this.draft.preview = null;
    this.notify();
  }

  selectedCount(): number {
    return (this.draft?.selected ?? []).filter(Boolean).length;
  }

  draftProblems(): string[] {
    if (!this.draft) return ["no elimination in progress"];
    const problems: string[] = [];
    if (!FUNCTION_NAME.test(this.draft.functionName)) {
      problems.push("choose a function name (lowercase initial)");
    }
    const names = new Set<string>();
    for (const original of Object.keys(this.draft.paramNames)) {
      const name = this.draft.paramNames[original];
      if (!VARIABLE_NAME.test(name)) {
        problems.push(`parameter name ${name} must start uppercase`);
      }
      if (names.has(name)) {
        problems.push(`parameter name ${name} used twice`);
      }
      names.add(name);
    }
    if (this.selectedCount() === 0) {
      problems.push("select at least one instance");
    }
    return problems;
  }

  canPreview(): boolean {
    return this.draft !== null && this.draftProblems().length === 0;
  }

  /** Preview is mandatory: apply stays disabled until a diff is shown. */
  canApply(): boolean {
    return (
      this.draft?.preview != null &&
      this.draft.preview.outcomes.some((o) => o.applied)
    );
  }

  async preview(): Promise<void> {
    if (!this.draft || !this.detail || !this.canPreview()) return;
    const draft = this.draft;
    const args: Record<string, unknown> = {
      class_id: draft.classId,
      new_name: draft.functionName,
      instances: draft.selected
        .map((selected, i) => (selected ? i : -1))
        .filter((i) => i >= 0),
    };
    if (Object.keys(draft.paramNames).length > 0) {
      args["param_names"] = draft.paramNames;
    }
    if (draft.paramOrder.some((value, i) => value !== i)) {
      args["param_order"] = draft.paramOrder;
    }
    try {
      draft.preview = await this.client.preview(
        this.revision,
        "eliminate",
        args,
      );
      this.banner = null;
    } catch (err) {
      this.handleMutationError(err);
    }
    this.notify();
  }

  async apply(): Promise<void> {
    if (!this.canApply()) return;
    try {
      const result = await this.client.apply(this.revision);
      this.report = result.report;
      this.detail = null;
      this.draft = null;
      this.sources.clear();
      this.canUndo = true;
      this.banner = { kind: "info", message: "refactoring applied" };
    } catch (err) {
      this.handleMutationError(err);
    }
    this.notify();
  }

  async undo(): Promise<void> {
    try {
      const result = await this.client.undo(this.revision);
      this.report = result.report;
      this.detail = null;
      this.draft = null;
      this.sources.clear();
      this.banner = { kind: "info", message: "undone; files restored" };
    } catch (err) {
      this.handleMutationError(err);
    }
    this.notify();
  }

  private handleMutationError(err: unknown): void {
    if (err instanceof ApiError && err.stale) {
      this.banner = {
        kind: "stale",
        message: "the project changed under you; refresh the report",
      };
    } else if (err instanceof ApiError) {
      this.banner = { kind: "error", message: err.message };
    } else {
      this.connected = false;
      this.banner = { kind: "error", message: "connection lost" };
    }
  }

  async refresh(): Promise<void> {
    await this.loadReport();
    this.detail = null;
    this.draft = null;
    this.notify();
  }
}

/** Resolve a "l1.c1-l2.c2" span to [start, end) offsets in the text. */
export function spanToOffsets(text: string, span: string): [number, number] {
  const match = /^(\d+)\.(\d+)-(\d+)\.(\d+)$/.exec(span);
  if (!match) return [0, 0];
  const [l1, c1, l2, c2] = match.slice(1).map(Number);
  const lineStarts = [0];
  for (let i = 0; i < text.length; i++) {
    if (text[i] === "\n") lineStarts.push(i + 1);
  }
  const offset = (line: number, col: number) =>
    (lineStarts[line - 1] ?? text.length) + col - 1;
  return [offset(l1, c1), offset(l2, c2)];
}
