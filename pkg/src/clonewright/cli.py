"""Command-line interface.

Detection streams each verified clone class to standard output as soon as
it is confirmed; the ordered report (by instance size and by frequency) is
written to a file on request. Exit status: 0 success, 1 domain error,
2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from clonewright import __version__
from clonewright.cache import CACHE_RELPATH, CloneCache
from clonewright.config import Thresholds, port_override, thresholds_from
from clonewright.detector import detect, metrics, search
from clonewright.errors import ClonewrightError
from clonewright.mel.tokens import Span
from clonewright.project import Project
from clonewright.propex import extract_property, property_file_name
from clonewright.refactor import (
    apply_result,
    extract_function,
    fold,
    fold_instances,
    _analyze_target,
    inline,
    rename_function,
    rename_variable,
    swap_arguments,
    variable_instances,
)
from clonewright.report import (
    build_report,
    render_class_text,
    render_json,
    render_metrics,
    render_text,
)


def _threshold_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--min-len", type=int, default=None, metavar="N",
                        help="minimum expressions per clone (default 5)")
    parser.add_argument("--min-toks", type=int, default=None, metavar="N",
                        help="minimum tokens per clone, OR-gated with --min-len (default 40)")
    parser.add_argument("--min-freq", type=int, default=None, metavar="N",
                        help="minimum number of instances (default 2)")
    parser.add_argument("--max-new-params", type=int, default=None, metavar="N",
                        help="maximum placeholders in the generalisation (default 4)")
    parser.add_argument("--sim", type=float, default=None, metavar="S",
                        help="minimum similarity score (default 0.8)")


def _files_arg(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("files", nargs="+", metavar="FILES",
                        help="Mel source files or directories")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clonewright",
        description="Similar-code detection and clone elimination for Mel projects.",
    )
    parser.add_argument("--version", action="version", version=f"clonewright {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="find all clone classes")
    _threshold_flags(p)
    p.add_argument("--json", metavar="PATH", help="write the JSON report here")
    p.add_argument("--report", metavar="PATH", help="write the ordered text report here")
    p.add_argument("--incremental", action="store_true",
                   help="reuse the cache under .clonewright/")
    _files_arg(p)

    p = sub.add_parser("search", help="find code similar to a selection")
    p.add_argument("--at", required=True, metavar="FILE:L1.C1-L2.C2",
                   help="the selected expression sequence")
    _threshold_flags(p)
    _files_arg(p)

    p = sub.add_parser("fold", help="fold instances against a function")
    p.add_argument("target", metavar="MODULE:NAME/ARITY")
    p.add_argument("--instances", metavar="I,J,...",
                   help="instance indexes to fold (default: all)")
    _files_arg(p)

    p = sub.add_parser("rename-fn", help="rename a function and its call sites")
    p.add_argument("module")
    p.add_argument("target", metavar="NAME/ARITY")
    p.add_argument("new_name")
    _files_arg(p)

    p = sub.add_parser("rename-var", help="rename a variable binding")
    p.add_argument("at", metavar="FILE:L.C", help="the defining occurrence")
    p.add_argument("new_name")
    _files_arg(p)

    p = sub.add_parser("swap", help="swap two parameters of a function")
    p.add_argument("target", metavar="NAME/ARITY")
    p.add_argument("i", type=int)
    p.add_argument("j", type=int)
    p.add_argument("--module", help="module owning the function (default: unique match)")
    _files_arg(p)

    p = sub.add_parser("inline", help="inline a call site")
    p.add_argument("at", metavar="FILE:L.C")
    _files_arg(p)

    p = sub.add_parser("extract", help="extract a selection into a function")
    p.add_argument("at", metavar="FILE:L1.C1-L2.C2")
    p.add_argument("new_name")
    _files_arg(p)

    p = sub.add_parser("instances", help="list occurrences of a variable binding")
    p.add_argument("at", metavar="FILE:L.C")
    _files_arg(p)

    p = sub.add_parser("props", help="extract a property from a test function")
    p.add_argument("--fun", required=True, metavar="NAME/ARITY")
    p.add_argument("--module", help="module owning the function (default: unique match)")
    p.add_argument("--generalize-literals", action="store_true",
                   help="replace integer literals by nat()")
    _files_arg(p)

    p = sub.add_parser("metrics", help="clone summary statistics")
    _threshold_flags(p)
    _files_arg(p)

    p = sub.add_parser("serve", help="run the HTTP service for the UI")
    p.add_argument("--port", type=int, default=8157)
    p.add_argument("--root", default=".", help="project root (default: cwd)")
    _threshold_flags(p)

    return parser


def _thresholds(args) -> Thresholds:
    return thresholds_from(
        Path.cwd(),
        min_len=getattr(args, "min_len", None),
        min_toks=getattr(args, "min_toks", None),
        min_freq=getattr(args, "min_freq", None),
        max_new_params=getattr(args, "max_new_params", None),
        min_similarity=getattr(args, "sim", None),
    )


def _load_project(files, cache=None) -> Project:
    project = Project.load(files, cache)
    for file, message in project.failures:
        print(f"warning: skipping {file}: {message}", file=sys.stderr)
    return project


def _parse_point(text: str) -> tuple[str, int, int]:
    file, _, rest = text.rpartition(":")
    if not file:
        raise ClonewrightError(f"expected FILE:L.C, got {text!r}")
    line, _, col = rest.partition(".")
    return file, int(line), int(col)


def _parse_span(text: str) -> tuple[str, Span]:
    file, _, rest = text.rpartition(":")
    if not file or "-" not in rest:
        raise ClonewrightError(f"expected FILE:L1.C1-L2.C2, got {text!r}")
    start, _, end = rest.partition("-")
    l1, _, c1 = start.partition(".")
    l2, _, c2 = end.partition(".")
    return file, Span(file, int(l1), int(c1), int(l2), int(c2))


def _parse_name_arity(text: str) -> tuple[str, int]:
    name, _, arity = text.partition("/")
    if not arity:
        raise ClonewrightError(f"expected NAME/ARITY, got {text!r}")
    return name, int(arity)


def _parse_target(text: str) -> tuple[str, str, int]:
    module, _, rest = text.partition(":")
    if not rest:
        raise ClonewrightError(f"expected MODULE:NAME/ARITY, got {text!r}")
    name, arity = _parse_name_arity(rest)
    return module, name, arity


def _resolve_module(project: Project, name: str, arity: int, module: str | None) -> str:
    if module:
        return module
    owners = [
        project.module(f).name
        for f in project.files
        if project.module(f).fundef(name, arity) is not None
    ]
    if not owners:
        raise ClonewrightError(f"no module defines {name}/{arity}")
    if len(set(owners)) > 1:
        raise ClonewrightError(
            f"{name}/{arity} is defined in several modules ({', '.join(sorted(set(owners)))}); "
            "pass --module"
        )
    return owners[0]


def _write_refactoring(result, what: str) -> None:
    written = apply_result(result)
    for outcome in result.outcomes:
        status = "applied" if outcome.applied else f"skipped ({outcome.reason})"
        ref = outcome.ref
        print(f"{ref.file}:{ref.clause_key[0] + 1}: instance {status}")
    if written:
        print(f"{what}: updated {', '.join(written)}")
    else:
        print(f"{what}: no changes")


def cmd_detect(args) -> int:
    thresholds = _thresholds(args)
    cache = None
    cache_path = Path.cwd() / CACHE_RELPATH
    if args.incremental:
        cache = CloneCache.load(cache_path)
    project = _load_project(args.files, cache)

    from clonewright.report import ReportEntry
    from clonewright.mel.printer import print_fundef
    from clonewright.refactor import generalise

    def stream(cls) -> None:
        entry = ReportEntry(cls, print_fundef(generalise(project, cls)))
        print(render_class_text(entry))

    classes = detect(project, thresholds, cache, on_class=stream)
    if args.incremental:
        cache.save(cache_path)
    if not classes:
        print("No clones found.")
    else:
        print(f"{len(classes)} clone classes found.")
    if args.report:
        by_size = render_text(build_report(project, classes, "size"))
        by_freq = render_text(build_report(project, classes, "freq"))
        Path(args.report).write_text(
            "=== Clones by instance size ===\n\n"
            + by_size
            + "\n=== Clones by frequency ===\n\n"
            + by_freq,
            encoding="utf-8",
        )
    if args.json:
        doc = build_report(project, classes, "size")
        Path(args.json).write_text(render_json(doc) + "\n", encoding="utf-8")
    return 0


def cmd_search(args) -> int:
    thresholds = _thresholds(args)
    project = _load_project(args.files)
    file, span = _parse_span(args.at)
    cls = search(project, file, span, thresholds)
    if cls.occurrences <= 1:
        print("No clones found.")
        return 0
    doc = build_report(project, [cls], "size")
    print(render_text(doc), end="")
    return 0


def cmd_fold(args) -> int:
    project = _load_project(args.files)
    module, name, arity = _parse_target(args.target)
    selection = None
    if args.instances is not None:
        target = _analyze_target(project, module, name, arity)
        all_instances = fold_instances(project, target)
        indexes = [int(i) for i in args.instances.split(",") if i != ""]
        bad = [i for i in indexes if not 0 <= i < len(all_instances)]
        if bad:
            raise ClonewrightError(
                f"instance index {bad[0]} out of range (0..{len(all_instances) - 1})"
            )
        selection = [all_instances[i] for i in indexes]
    result = fold(project, module, name, arity, selection)
    _write_refactoring(result, f"fold against {module}:{name}/{arity}")
    return 0


def cmd_rename_fn(args) -> int:
    project = _load_project(args.files)
    name, arity = _parse_name_arity(args.target)
    result = rename_function(project, args.module, name, arity, args.new_name)
    _write_refactoring(result, f"rename {name}/{arity} to {args.new_name}")
    return 0


def cmd_rename_var(args) -> int:
    project = _load_project(args.files)
    file, line, col = _parse_point(args.at)
    result = rename_variable(project, file, line, col, args.new_name)
    _write_refactoring(result, f"rename variable at {args.at}")
    return 0


def cmd_swap(args) -> int:
    project = _load_project(args.files)
    name, arity = _parse_name_arity(args.target)
    module = _resolve_module(project, name, arity, args.module)
    result = swap_arguments(project, module, name, arity, args.i, args.j)
    _write_refactoring(result, f"swap arguments {args.i} and {args.j} of {name}/{arity}")
    return 0


def cmd_inline(args) -> int:
    project = _load_project(args.files)
    file, line, col = _parse_point(args.at)
    result = inline(project, file, line, col)
    _write_refactoring(result, f"inline at {args.at}")
    return 0


def cmd_extract(args) -> int:
    project = _load_project(args.files)
    file, span = _parse_span(args.at)
    result = extract_function(project, file, span, args.new_name)
    _write_refactoring(result, f"extract {args.new_name}")
    return 0


def cmd_instances(args) -> int:
    project = _load_project(args.files)
    file, line, col = _parse_point(args.at)
    for occ, is_def in variable_instances(project, file, line, col):
        marker = "defining occurrence" if is_def else "use"
        print(f"{file}:{occ.span.render()}: {occ.name} ({marker})")
    return 0


def cmd_props(args) -> int:
    project = _load_project(args.files)
    name, arity = _parse_name_arity(args.fun)
    module = _resolve_module(project, name, arity, args.module)
    sketch, text = extract_property(
        project, module, name, arity, args.generalize_literals
    )
    for warning in sketch.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    module_file = next(
        f for f in project.files if project.module(f).name == module
    )
    out_path = Path(module_file).parent / property_file_name(module)
    out_path.write_text(text, encoding="utf-8")
    print(text, end="")
    print(f"property written to {out_path}")
    return 0


def cmd_metrics(args) -> int:
    thresholds = _thresholds(args)
    project = _load_project(args.files)
    classes = detect(project, thresholds)
    print(render_metrics(metrics(classes)), end="")
    return 0


def cmd_serve(args) -> int:
    from clonewright.server import serve

    port = port_override() or args.port
    serve(Path(args.root), port, _thresholds(args))
    return 0


COMMANDS = {
    "detect": cmd_detect,
    "search": cmd_search,
    "fold": cmd_fold,
    "rename-fn": cmd_rename_fn,
    "rename-var": cmd_rename_var,
    "swap": cmd_swap,
    "inline": cmd_inline,
    "extract": cmd_extract,
    "instances": cmd_instances,
    "props": cmd_props,
    "metrics": cmd_metrics,
    "serve": cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ClonewrightError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
