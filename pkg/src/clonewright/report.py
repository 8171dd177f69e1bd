"""Clone reports: the canonical text layout plus a JSON rendering."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from clonewright.detector import CloneClass, MetricsTable
from clonewright.mel.printer import print_fundef
from clonewright.project import Project
from clonewright.refactor import EffectTable, generalise


@dataclass
class ReportEntry:
    cls: CloneClass
    generalisation: str  # pretty-printed new_fun definition


@dataclass
class ReportDocument:
    order: str  # size | freq
    entries: list[ReportEntry]
    summary: MetricsTable | None = None


def build_report(
    project: Project,
    classes: list[CloneClass],
    order: str = "size",
    table: EffectTable | None = None,
    summary: MetricsTable | None = None,
) -> ReportDocument:
    entries = [
        ReportEntry(cls, print_fundef(generalise(project, cls, table)))
        for cls in classes
    ]
    if order == "size":
        entries.sort(key=lambda e: (-e.cls.size_loc, e.cls.span_set()))
    elif order == "freq":
        entries.sort(key=lambda e: (-e.cls.occurrences, e.cls.span_set()))
    else:
        raise ValueError(f"unknown report order {order!r}")
    return ReportDocument(order, entries, summary)


def _times(count: int) -> str:
    extra = count - 1
    if extra == 1:
        return "once"
    if extra == 2:
        return "twice"
    return f"{extra} times"


def _location(instance) -> str:
    return f"{instance.ref.file}:{instance.span.render()}:"


def render_class_text(entry: ReportEntry) -> str:
    """One report block in the canonical layout."""
    cls = entry.cls
    first, *rest = cls.instances
    suffix = " (cross-module)" if cls.kind == "inter-module" else ""
    lines = [f"{_location(first)}{suffix}"]
    lines.append(f"This code has been cloned {_times(cls.occurrences)}:")
    lines.extend(_location(inst) for inst in rest)
    lines.append("")
    lines.append("The cloned expression/function after generalisation:")
    lines.append("")
    lines.append(entry.generalisation)
    return "\n".join(lines) + "\n"


def render_text(doc: ReportDocument) -> str:
    if not doc.entries:
        return "No clones found.\n"
    return "\n".join(render_class_text(e) for e in doc.entries)


def render_json(doc: ReportDocument) -> str:
    """Stable-key JSON; similarity carries exactly four decimal places."""
    payload = {"classes": [_class_payload(e) for e in doc.entries]}
    text = json.dumps(payload, indent=2, sort_keys=True)
    return re.sub(r'"@sim:([0-9.]+)"', r"\1", text)


def _class_payload(entry: ReportEntry) -> dict:
    cls = entry.cls
    return {
        "instances": [
            {
                "file": inst.ref.file,
                "span": inst.span.render(),
                "actuals": [
                    _print_actual(inst.substitution, p) for p in cls.template.params
                ],
            }
            for inst in cls.instances
        ],
        "template": entry.generalisation,
        "similarity": f"@sim:{cls.similarity:.4f}",
        "newParams": cls.new_params,
        "totalParams": cls.total_params,
        "sizeLoc": cls.size_loc,
        "kind": cls.kind,
    }


def _print_actual(substitution, param) -> str:
    from clonewright.mel.printer import print_expr

    return print_expr(substitution[param])


def render_metrics(table: MetricsTable) -> str:
    """Fixed-width clone statistics table."""
    headers = ("",) + table.columns
    rows = [headers]
    for label, values in table.rows:
        rows.append((label,) + tuple(_num(v) for v in values))
    rows.append(("Number of clones", _num(table.clone_count), "", "", ""))
    widths = [max(len(r[i]) for r in rows) for i in range(len(headers))]
    out = []
    for row in rows:
        cells = [cell.ljust(widths[i]) for i, cell in enumerate(row)]
        out.append(("  ".join(cells)).rstrip())
    return "\n".join(out) + "\n"


def _num(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, float):
        return f"{value:g}"
    return str(value)
