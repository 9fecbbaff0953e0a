"""Command-line interface: ``fairchain {audit,fix,headroom,synth,curve}``.

Exit codes: 0 success, 2 bad input or configuration, 1 internal error.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from pathlib import Path

import numpy as np

from . import datagen
from .core import (
    Fix,
    FixConfig,
    FairchainError,
    InputError,
    InvariantError,
    ScoredDataset,
    UnsupportedFixError,
    UtilityFn,
    compose,
    rank,
)
from .counterfactual import CounterfactualSpec, headroom_sweep, improved_system
from .fixes import apply_fix
from .ingest import dumps_csv, equalize_groups, format_score, load_csv, load_german_credit
from .metrics import exposure_gap, gap_curve, pairwise_gap, random_order_reference


def _default_seed() -> int:
    raw = os.environ.get("FAIRCHAIN_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"FAIRCHAIN_SEED must be an integer, got {raw!r}") from None


def _top_n(value: str):
    if value == "all":
        return None
    try:
        n = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or 'all', got {value!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError("--top-n must be >= 1")
    return n


def parse_positions(text: str) -> list[int]:
    """``start:stop:step`` (stop inclusive) or a comma list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) not in (2, 3):
            raise InputError(f"bad position range {text!r}")
        start, stop = int(parts[0]), int(parts[1])
        step = int(parts[2]) if len(parts) == 3 else 1
        if step < 1:
            raise InputError("position step must be >= 1")
        return list(range(start, stop + 1, step))
    return [int(t) for t in text.split(",") if t.strip()]


def parse_fix(text: str | None, dataset: ScoredDataset, p: float | None) -> dict[int, Fix]:
    """``k=method[,k=method...]``; ``k`` is an index, a component name or ``all``."""
    fixes: dict[int, Fix] = {}
    if not text:
        return fixes
    names = dataset.component_names
    for item in text.split(","):
        if "=" not in item:
            raise InputError(f"bad --fix entry {item!r}; expected k=method")
        key, method = (s.strip() for s in item.split("=", 1))
        if key == "all":
            targets = range(dataset.n_components)
        elif key in names:
            targets = [names.index(key)]
        else:
            try:
                targets = [int(key)]
            except ValueError:
                raise InputError(f"unknown component {key!r}") from None
        for k in targets:
            dataset.component(k)
            fixes[k] = Fix(method, p if method == "constant-p" else None)
    return fixes


def parse_subsets(text: str, dataset: ScoredDataset):
    if text in ("singletons", "all"):
        return text
    names = dataset.component_names
    out = []
    for chunk in text.split(";"):
        subset = []
        for key in chunk.split(","):
            key = key.strip()
            subset.append(names.index(key) if key in names else int(key))
        out.append(subset)
    return out


def _load(args) -> ScoredDataset:
    if args.format == "german":
        ds = load_german_credit(args.input)
    else:
        if args.input is None:
            raise InputError("an input file is required")
        ds = load_csv(args.input)
    ref = args.reference_group or sorted(set(ds.groups.tolist()))[0]
    ds = ds.with_reference(ref)
    if args.equalize_groups:
        ds = equalize_groups(ds, compose(ds), mode=args.equalize_mode, seed=args.seed)
    return ds


def _utility(args) -> UtilityFn:
    return UtilityFn(args.utility, args.w)


def _fix_config(args, ds) -> FixConfig:
    return FixConfig(
        parse_fix(args.fix, ds, args.p),
        reference_group=ds.group_a,
        positivity_shift=args.positivity_shift,
        tie_order="random" if args.ties == "random" else "input",
        seed=args.seed,
    )


def _header(title: str, args, ds: ScoredDataset, extra: dict | None = None) -> list[str]:
    lines = [f"# fairchain {title}", ""]
    cfg = {
        "input": args.input if args.input is not None else "(bundled german.data)",
        "format": args.format,
        "items": len(ds),
        "groups": f"A={ds.group_a} (n={int(ds.mask(ds.group_a).sum())}), "
                  f"B={ds.group_b} (n={int(ds.mask(ds.group_b).sum())})",
        "components": ", ".join(ds.component_names),
        "utility": _utility(args).describe(),
        "top_n": "all" if args.top_n is None else args.top_n,
        "ties": args.ties,
        "seed": args.seed,
        "equalize_groups": args.equalize_mode if args.equalize_groups else "off",
        "positivity_shift": "on" if args.positivity_shift else "off",
    }
    cfg.update(extra or {})
    lines += [f"- {k}: {v}" for k, v in cfg.items()]
    return lines + [""]


def _emit(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _f6(x: float) -> str:
    return f"{x:.6f}"


def audit_rows(ds: ScoredDataset, args) -> list[dict]:
    """One row per (scope, metric); scope is a component name or 'composite'."""
    util = _utility(args)
    metric = args.metric
    if metric == "pairwise" and not ds.has_labels:
        raise InputError("--metric pairwise needs a label column")
    scopes = [(name, ds.scores[:, k]) for k, name in enumerate(ds.component_names)]
    scopes.append(("composite", compose(ds)))
    rows = []
    for scope, scores in scopes:
        if metric in (None, "exposure"):
            rep = exposure_gap(rank(scores, args.ties, args.seed), ds, util, args.top_n)
            rows.append(dict(scope=scope, metric="exposure", a=rep.exposure_share_a,
                             b=rep.exposure_share_b, signed_gap=rep.signed_gap, gap=rep.abs_gap))
        if metric == "pairwise" or (metric is None and ds.has_labels):
            rep = pairwise_gap(scores, ds)
            rows.append(dict(scope=scope, metric="pairwise", a=rep.acc_a_over_b,
                             b=rep.acc_b_over_a, signed_gap=rep.acc_a_over_b - rep.acc_b_over_a,
                             gap=rep.gap))
    return rows


def cmd_audit(args) -> int:
    ds = _load(args)
    rows = audit_rows(ds, args)
    md = _header("audit", args, ds, {"metric": args.metric or "all"})
    md += [
        "A/B columns: exposure shares for `exposure`; accuracy A>B and B>A for `pairwise`.",
        "",
        "| scope | metric | A | B | signed gap | gap |",
        "|---|---|---|---|---|---|",
    ]
    for r in rows:
        md.append(f"| {r['scope']} | {r['metric']} | {_f6(r['a'])} | {_f6(r['b'])} | "
                  f"{_f6(r['signed_gap'])} | {_f6(r['gap'])} |")
    text = "\n".join(md) + "\n"
    sys.stdout.write(text)
    if args.output_dir:
        out = Path(args.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "audit.md").write_text(text, encoding="utf-8")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scope", "metric", "a", "b", "signed_gap", "gap"])
        for r in rows:
            w.writerow([r["scope"], r["metric"]] +
                       [format_score(r[c]) for c in ("a", "b", "signed_gap", "gap")])
        (out / "audit.csv").write_text(buf.getvalue(), encoding="utf-8")
    return 0


def cmd_fix(args) -> int:
    ds = _load(args)
    cfg = _fix_config(args, ds)
    cfg.validate(ds)
    scores = np.array(ds.scores)
    for k, fix in cfg.fixes.items():
        if fix.method == "delta-match":
            raise UnsupportedFixError("delta-match is pair-level and cannot be written as per-item scores")
        scores[:, k] = apply_fix(ds, k, fix, cfg).scores
    sys.stderr.write(f"fix: {cfg.describe(ds.component_names)}; reference_group={ds.group_a}; "
                     f"positivity_shift={'on' if cfg.positivity_shift else 'off'}\n")
    _emit(dumps_csv(ds, scores), args.output)
    return 0


def cmd_headroom(args) -> int:
    ds = _load(args)
    cfg = _fix_config(args, ds)
    spec = CounterfactualSpec(cfg, metric=args.metric or "exposure", utility=_utility(args),
                              top_n=args.top_n, tie_policy=args.ties, seed=args.seed)
    table = headroom_sweep(ds, spec, parse_subsets(args.subsets, ds))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["subset", "baseline_gap", "improved_gap", "fi"])
    for r in table.rows:
        w.writerow([table.label(r.subset), format_score(r.baseline_gap),
                    format_score(r.improved_gap), format_score(r.fi)])
    _emit(buf.getvalue(), args.output)
    if args.output and args.output != "-":
        md = _header("headroom", args, ds, {"metric": spec.metric,
                                            "fix": cfg.describe(ds.component_names),
                                            "subsets": args.subsets})
        md += ["| subset | baseline gap | improved gap | FI |", "|---|---|---|---|"]
        md += [f"| {table.label(r.subset)} | {_f6(r.baseline_gap)} | {_f6(r.improved_gap)} | {_f6(r.fi)} |"
               for r in table.rows]
        sys.stdout.write("\n".join(md) + "\n")
    return 0


def cmd_synth(args) -> int:
    name = args.dataset
    if name == "s1":
        ds = datagen.gen_synthetic_1(args.n, args.seed)
    elif name == "s2":
        ds = datagen.gen_synthetic_2(args.n, args.seed)
    elif name == "labeled":
        ds = datagen.gen_labeled(args.n, args.k, args.seed)
    elif name == "epsilon":
        ds = datagen.epsilon_example(args.a, args.eps)
    else:
        ds = datagen.FIXTURES[name]()
    _emit(dumps_csv(ds), args.output)
    return 0


def cmd_curve(args) -> int:
    ds = _load(args)
    cfg = _fix_config(args, ds)
    scores = improved_system(ds, list(cfg.fixes), cfg) if cfg.fixes else compose(ds)
    positions = parse_positions(args.t) if args.t else list(range(1, len(ds) + 1))
    util = _utility(args)
    curve = gap_curve(scores, ds, util, positions, args.ties, args.seed)
    ref = None
    if args.random_runs:
        ref = random_order_reference(ds, util, positions, args.random_runs, args.seed)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "gap"] + (["random_gap"] if ref else []))
    for i, t in enumerate(curve.positions):
        row = [t, format_score(curve.gaps[i])]
        if ref:
            row.append(format_score(ref.gaps[i]))
        w.writerow(row)
    _emit(buf.getvalue(), args.output)
    return 0


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("input", nargs="?", default=None,
                   help="score CSV (or german.data with --format german)")
    p.add_argument("--format", choices=["csv", "german"], default="csv")
    p.add_argument("--utility", choices=["power", "log"], default="power")
    p.add_argument("--w", type=float, default=0.65)
    p.add_argument("--top-n", type=_top_n, default=None)
    p.add_argument("--ties", choices=["rank-share", "random"], default="rank-share")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--reference-group", default=None)
    p.add_argument("--equalize-groups", action="store_true")
    p.add_argument("--equalize-mode", choices=["first", "top", "random"], default="first")
    p.add_argument("--positivity-shift", action="store_true")
    p.add_argument("--fix", default=None, help="k=method[,k=method]; k may be 'all'")
    p.add_argument("--p", type=float, default=None, help="p for constant-p")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairchain", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("audit", help="exposure and pairwise gaps per component and composed")
    _common(p)
    p.add_argument("--metric", choices=["exposure", "pairwise"], default=None)
    p.add_argument("--output-dir", default=None)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("fix", help="write the dataset with fixed components substituted")
    _common(p)
    p.add_argument("--output", default="-")
    p.set_defaults(func=cmd_fix)

    p = sub.add_parser("headroom", help="fairness improvement per component subset")
    _common(p)
    p.add_argument("--metric", choices=["exposure", "pairwise"], default="exposure")
    p.add_argument("--subsets", default="singletons",
                   help="singletons, all, or explicit list like '0;1;0,1'")
    p.add_argument("--output", default="-")
    p.set_defaults(func=cmd_headroom)

    p = sub.add_parser("synth", help="generate a synthetic dataset or fixture")
    p.add_argument("--dataset", required=True,
                   choices=["s1", "s2", "labeled", *datagen.FIXTURES])
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--output", default="-")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("curve", help="exposure gap per top-t prefix")
    _common(p)
    p.add_argument("--t", default=None, help="start:stop:step (inclusive) or comma list")
    p.add_argument("--random-runs", type=int, default=0)
    p.add_argument("--output", default="-")
    p.set_defaults(func=cmd_curve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.seed is None:
            args.seed = _default_seed()
        if args.command == "headroom" and args.fix is None:
            args.fix = "all=marginal-match"
        return args.func(args)
    except (FairchainError, OSError) as exc:
        print(f"fairchain: error: {exc}", file=sys.stderr)
        return 2
    except InvariantError as exc:
        print(f"fairchain: internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
