"""Command-line entry point: ``cpccd {corrupt,dataset-build,eval,nmm-demo}``.

Exit codes: 0 success, 2 usage or configuration error, 3 unpaired evaluation
files, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from cpccd import __version__
from cpccd.corrupt import ALL_KINDS, CorruptionKind, Recipe, build_dataset, corrupt, load_recipe
from cpccd.errors import CpccdError, Diverged
from cpccd.metrics import CATEGORIES, DEFAULT_DELTA, aggregate, evaluate
from cpccd.pcgeom import RngStream, read_cloud, write_cloud
from cpccd.pcgeom.io import SUFFIXES

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PAIRING = 3
EXIT_NUMERIC = 4

ABLATIONS = {
    "none": {},
    "clean-only": {"clean_only": True},
    "noisy-only": {"noisy_only": True},
    "no-attention": {"no_attention": True},
    "single-scale": {"single_scale": True},
}


class UsageError(CpccdError):
    pass


class PairingError(CpccdError):
    def __init__(self, orphans):
        super().__init__(f"{len(orphans)} unpaired file(s)")
        self.orphans = orphans


def _err(msg):
    print(f"cpccd: error: {msg}", file=sys.stderr)


def _cloud_files(root: Path) -> dict[str, Path]:
    """Relative id (posix path without suffix) -> file, for every cloud under root."""
    out = {}
    for p in sorted(root.rglob("*")):
        if p.is_file() and p.suffix.lower() in SUFFIXES:
            out[p.relative_to(root).with_suffix("").as_posix()] = p
    return out


def _recipe(args) -> Recipe:
    if getattr(args, "recipe", None) is None:
        return Recipe()
    path = Path(args.recipe)
    if not path.is_file():
        raise UsageError(f"recipe file not found: {path}")
    return load_recipe(path)


# -- corrupt -------------------------------------------------------------------

def _kinds(name: str):
    if name.lower() == "all":
        return ALL_KINDS
    return (CorruptionKind.parse(name),)


def cmd_corrupt(args) -> int:
    src = Path(args.input)
    if src.is_dir():
        inputs = _cloud_files(src)
    elif src.is_file():
        inputs = {src.stem: src}
    else:
        raise UsageError(f"no such file or directory: {src}")
    if not inputs:
        raise UsageError(f"no .ply or .xyz clouds under {src}")
    kinds = _kinds(args.kind)
    recipe = _recipe(args)
    out = Path(args.out)
    for oid, path in inputs.items():
        cloud = read_cloud(path)
        for kind in kinds:
            rng = RngStream(args.seed, oid, kind.value)
            result = corrupt(cloud, kind, rng, recipe)
            dst = out / f"{oid}__{kind.value}{path.suffix.lower()}"
            dst.parent.mkdir(parents=True, exist_ok=True)
            write_cloud(dst, result.cloud)
            lines = [f"source\t{path.name}", f"kind\t{kind.value}", f"master_seed\t{args.seed}",
                     f"stream_seed\t{rng.seed}"]
            lines += [f"{k}\t{v}" for k, v in result.spec.params().items()]
            s = result.stats
            lines += [f"added\t{s.added}", f"removed\t{s.removed}", f"displaced\t{s.displaced}",
                      f"fallback_placements\t{s.fallback_placements}"]
            Path(str(dst) + ".params").write_text("\n".join(lines) + "\n")
            print(f"{dst}\t{result.spec.params_text()}")
    return EXIT_OK


# -- dataset-build ---------------------------------------------------------------

def cmd_dataset_build(args) -> int:
    if not Path(args.input).is_dir():
        raise UsageError(f"input root not found: {args.input}")
    manifest = build_dataset(args.input, args.out, args.seed, _recipe(args), args.workers)
    by_split = manifest.totals_by_split()
    print(f"objects={manifest.n_objects} clouds={manifest.total} "
          + " ".join(f"{k}={v}" for k, v in by_split.items()))
    return EXIT_OK


# -- eval ------------------------------------------------------------------------

def _category(rel_id: str) -> str:
    head = rel_id.split("/", 1)[0]
    return head if "/" in rel_id and head in CATEGORIES else "clean"


def cmd_eval(args) -> int:
    pred_root, gt_root = Path(args.pred), Path(args.gt)
    for p in (pred_root, gt_root):
        if not p.is_dir():
            raise UsageError(f"not a directory: {p}")
    if args.fidelity and args.input is None:
        raise UsageError("--fidelity needs --input")
    inp_root = Path(args.input) if args.input is not None else None
    if inp_root is not None and not inp_root.is_dir():
        raise UsageError(f"not a directory: {inp_root}")

    preds, gts = _cloud_files(pred_root), _cloud_files(gt_root)
    inputs = _cloud_files(inp_root) if inp_root is not None else {}
    orphans = [f"pred without gt: {preds[k]}" for k in preds if k not in gts]
    orphans += [f"gt without pred: {gts[k]}" for k in gts if k not in preds]
    if inp_root is not None:
        orphans += [f"pred without input: {preds[k]}" for k in preds if k in gts and k not in inputs]
    if orphans:
        raise PairingError(orphans)
    if not preds:
        raise UsageError(f"no clouds found under {pred_root}")

    rows = []
    for rel in sorted(preds):
        inp = read_cloud(inputs[rel]) if inp_root is not None else None
        value = evaluate(read_cloud(preds[rel]), read_cloud(gts[rel]), args.delta, inp,
                         l1_mode=args.l1_mode)
        rows.append((args.run, _category(rel), value))
    report = aggregate(rows)
    dst = Path(args.report)
    dst.parent.mkdir(parents=True, exist_ok=True)
    dst.write_text(report.to_csv())
    table = report.to_table()
    dst.with_suffix(".txt").write_text(table)
    print(table, end="")
    return EXIT_OK


# -- nmm-demo --------------------------------------------------------------------

def _grad_check_dim(heads: int) -> int:
    # the smallest multiple of heads that is at least 16
    return heads * max(1, -(-16 // heads))


def cmd_nmm_demo(args) -> int:
    from cpccd.nmm import NmmConfig, grad_check, train_toy

    flags = ABLATIONS[args.ablation]
    config = NmmConfig(b=args.b, l=args.l, d=args.d, heads=args.heads, t=args.t, **flags)
    small = NmmConfig(b=2, l=4, d=_grad_check_dim(args.heads), heads=args.heads, t=args.t,
                      **flags)
    report = grad_check(small, args.seed)
    print(f"grad_check B=2 L=4 D={small.d}: max_rel_err={report.max_rel_err:.3e} "
          f"({'pass' if report.passed else 'FAIL'})")
    if args.verbose:
        print("\n".join(report.lines()))
    history = train_toy(config, args.seed, args.steps, args.lr)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(history.to_csv())
    final = history.final
    print(f"steps={len(history)} ablation={config.ablation} l_total={final.losses.l_total:.6f} "
          f"sim_clean_gt={final.sim_clean_gt:.4f} sim_clean_noisy={final.sim_clean_noisy:.4f} "
          f"separation={history.separation:.4f}")
    if config.noisy_only:
        print(f"max |f_i - (f_clean + f_noisy)| = {max(r.residual for r in history.records):.3e}")
    return EXIT_OK if report.passed else EXIT_NUMERIC


# -- parser ----------------------------------------------------------------------

def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cpccd", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"cpccd {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("corrupt", help="corrupt one cloud or a directory of clouds")
    p.add_argument("--input", required=True, help="a .ply/.xyz file or a directory of them")
    p.add_argument("--kind", required=True,
                   help="eoi, biw, bif, oboo, djt, tr, is, rcc or all")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--recipe", help="recipe file with knob overrides and pinned parameters")
    p.set_defaults(func=cmd_corrupt)

    p = sub.add_parser("dataset-build", help="build the corrupted train/val/test dataset")
    p.add_argument("--input", required=True,
                   help="root with <split>/partial and <split>/complete folders")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=_positive_int, default=None,
                   help="worker threads (default: $CPCCD_THREADS or 1)")
    p.add_argument("--recipe")
    p.set_defaults(func=cmd_dataset_build)

    p = sub.add_parser("eval", help="score predictions against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--input", help="partial inputs, needed for fidelity")
    p.add_argument("--fidelity", action="store_true", help="require fidelity in the report")
    p.add_argument("--delta", type=_positive_float, default=DEFAULT_DELTA)
    p.add_argument("--report", required=True, help="CSV path; the table goes next to it as .txt")
    p.add_argument("--run", default="run", help="row label in the report")
    p.add_argument("--l1-mode", choices=("manhattan", "euclidean"), default="manhattan")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("nmm-demo", help="gradient check plus toy separation training")
    p.add_argument("--b", type=_positive_int, default=4)
    p.add_argument("--l", type=_positive_int, default=16)
    p.add_argument("--d", type=_positive_int, default=64)
    p.add_argument("--heads", type=_positive_int, default=8)
    p.add_argument("--t", type=_positive_float, default=1.0)
    p.add_argument("--steps", type=_positive_int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lr", type=_positive_float, default=1e-2)
    p.add_argument("--ablation", choices=tuple(ABLATIONS), default="none")
    p.add_argument("--out", default="nmm_history.csv")
    p.add_argument("-v", "--verbose", action="store_true", help="print per-tensor gradient errors")
    p.set_defaults(func=cmd_nmm_demo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except PairingError as exc:
        _err(str(exc))
        for line in exc.orphans:
            print(f"  {line}", file=sys.stderr)
        return EXIT_PAIRING
    except Diverged as exc:
        _err(f"training diverged: {exc}")
        return EXIT_NUMERIC
    except (CpccdError, OSError, ValueError) as exc:
        _err(str(exc))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
