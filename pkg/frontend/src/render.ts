/** DOM rendering: a thin projection of AppState; all logic lives in the store. */

import { ReportClass } from "./api.js";
import { AppState, spanToOffsets } from "./state.js";

export function mount(state: AppState, root: HTMLElement): void {
  state.subscribe(() => render(state, root));
  render(state, root);
}

function el(
  tag: string,
  attrs: Record<string, string> = {},
  children: (Node | string)[] = [],
): HTMLElement {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  for (const child of children) {
    node.append(child);
  }
  return node;
}

function render(state: AppState, root: HTMLElement): void {
  root.replaceChildren();
  root.append(renderHeader(state));
  if (state.banner) {
    root.append(
      el("div", { class: `banner ${state.banner.kind}` }, [
        state.banner.message,
        ...(state.banner.kind === "stale"
          ? [button("Refresh", () => void state.refresh())]
          : []),
      ]),
    );
  }
  const main = el("div", { class: "columns" });
  main.append(renderList(state));
  if (state.detail) {
    main.append(renderDetail(state));
  }
  root.append(main);
}

function button(label: string, onClick: () => void, attrs: Record<string, string> = {}) {
  const node = el("button", attrs, [label]) as HTMLButtonElement;
  node.addEventListener("click", onClick);
  return node;
}

function renderHeader(state: AppState): HTMLElement {
  const orderToggle = el("div", { class: "order" }, [
    "Order by: ",
    button("instance size", () => state.setOrder("size"), {
      class: state.order === "size" ? "active" : "",
    }),
    button("frequency", () => state.setOrder("freq"), {
      class: state.order === "freq" ? "active" : "",
    }),
  ]);
  const undo = button("Undo last apply", () => void state.undo(), {
    class: "undo",
    ...(state.canUndo ? {} : { disabled: "disabled" }),
  });
  return el("header", {}, [
    el("h1", {}, ["clonewright"]),
    el("span", { class: "revision" }, [`revision ${state.revision}`]),
    orderToggle,
    undo,
  ]);
}

function renderList(state: AppState): HTMLElement {
  const list = el("section", { class: "clone-list" });
  const classes = state.orderedClasses;
  if (classes.length === 0) {
    list.append(el("p", { class: "empty" }, ["No clones found."]));
    return list;
  }
  for (const cls of classes) {
    list.append(renderCard(state, cls));
  }
  return list;
}

function renderCard(state: AppState, cls: ReportClass): HTMLElement {
  const badge =
    cls.kind === "inter-module"
      ? [el("span", { class: "badge" }, ["cross-module"])]
      : [];
  const card = el("article", { class: "card", "data-id": String(cls.id) }, [
    el("h2", {}, [`${cls.firstInstance.file}:${cls.firstInstance.span}`, ...badge]),
    el("p", {}, [
      `${cls.occurrences} instances, ${cls.sizeLoc} lines each, ` +
        `similarity ${cls.similarity.toFixed(4)}, ` +
        `${cls.newParams} new of ${cls.totalParams} parameters`,
    ]),
    button("Inspect", () => void state.openClone(cls.id)),
  ]);
  return card;
}

function renderDetail(state: AppState): HTMLElement {
  const detail = state.detail!;
  const pane = el("section", { class: "detail" });
  pane.append(
    el("h2", {}, [`Clone ${detail.id} (${detail.kind})`]),
    button("Close", () => state.closeClone()),
    el("pre", { class: "template" }, [detail.template]),
  );
  for (const [index, instance] of detail.instances.entries()) {
    const text = state.sources.get(instance.file) ?? "";
    const [start, end] = spanToOffsets(text, instance.span);
    const snippet = el("pre", { class: "source" }, [
      text.slice(0, start),
      el("mark", {}, [text.slice(start, end)]),
      text.slice(end),
    ]);
    const actuals = Object.entries(instance.substitution)
      .map(([param, value]) => `${param} = ${value}`)
      .join(", ");
    const header = el("h3", {}, [`${instance.file}:${instance.span}`]);
    header.addEventListener("click", () => {
      snippet.querySelector("mark")?.scrollIntoView({ block: "center" });
    });
    pane.append(
      el("div", { class: "instance", "data-index": String(index) }, [
        header,
        el("p", { class: "actuals" }, [actuals]),
        snippet,
      ]),
    );
  }
  pane.append(renderFlow(state));
  return pane;
}

function renderFlow(state: AppState): HTMLElement {
  const section = el("section", { class: "flow" });
  if (!state.draft) {
    section.append(button("Eliminate this clone", () => state.startElimination()));
    return section;
  }
  const detail = state.detail!;
  const draft = state.draft;

  const nameInput = el("input", {
    placeholder: "function name",
    value: draft.functionName,
  }) as HTMLInputElement;
  nameInput.addEventListener("input", () => state.setFunctionName(nameInput.value));
  section.append(el("label", {}, ["Name the abstraction: ", nameInput]));

  const paramList = el("ol", { class: "params" });
  for (const [position, original] of draft.paramOrder.entries()) {
    const param = detail.params[original];
    const input = el("input", {
      value: draft.paramNames[param] ?? param,
    }) as HTMLInputElement;
    input.addEventListener("input", () => state.renameParam(param, input.value));
    paramList.append(
      el("li", {}, [
        input,
        button("up", () => state.moveParam(position, -1)),
        button("down", () => state.moveParam(position, 1)),
      ]),
    );
  }
  section.append(paramList);

  const instanceBoxes = el("ul", { class: "ticks" });
  for (const [index, instance] of detail.instances.entries()) {
    const box = el("input", { type: "checkbox" }) as HTMLInputElement;
    box.checked = draft.selected[index];
    box.addEventListener("change", () => state.toggleInstance(index));
    instanceBoxes.append(
      el("li", {}, [box, `${instance.file}:${instance.span}`]),
    );
  }
  section.append(
    instanceBoxes,
    button("all", () => state.selectAll(true)),
    button("none", () => state.selectAll(false)),
  );

  const problems = state.draftProblems();
  if (problems.length > 0) {
    section.append(el("p", { class: "problems" }, [problems.join("; ")]));
  }
  section.append(
    button("Preview", () => void state.preview(), {
      ...(state.canPreview() ? {} : { disabled: "disabled" }),
    }),
  );
  if (draft.preview) {
    for (const outcome of draft.preview.outcomes) {
      if (!outcome.applied) {
        section.append(
          el("p", { class: "skip" }, [
            `skipped ${outcome.file} [${outcome.range.join(",")}]: ${outcome.reason}`,
          ]),
        );
      }
    }
    for (const [file, diff] of Object.entries(draft.preview.diffs)) {
      section.append(el("h4", {}, [file]), el("pre", { class: "diff" }, [diff]));
    }
  }
  section.append(
    button("Apply", () => void state.apply(), {
      ...(state.canApply() ? {} : { disabled: "disabled" }),
    }),
  );
  return section;
}
