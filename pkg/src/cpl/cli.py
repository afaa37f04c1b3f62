"""Command-line surface.

Subcommands: ``run`` (full curriculum training), ``synth`` (synthetic
feature/logit containers), ``select`` (one candidate-generation pass over a
logits container, printing set statistics), ``eval`` (score a checkpoint on a
test container).  Exit codes: 0 success, 2 configuration or I/O error,
3 runtime abort (empty training set or divergence).
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from .core import (
    ConfidenceMatrix,
    DivergedError,
    NoTrainableInstancesError,
    OptimConfig,
    ParadigmSpec,
    SelectionParams,
)
from .dataio import ContainerFormatError, load_container, make_synthetic, save_container
from .losses import LossKind
from .metrics import (
    avg_candidate_size,
    class_frequency,
    label_estimation_accuracy,
    top1_accuracy,
)
from .model import load_model, predict_proba, save_model
from .paradigms import split_ssl, split_trzsl
from .selection import generate_candidates
from .trainer import RunConfig, run_cpl


def _beta_value(text: str):
    if text.lower() in ("off", "none"):
        return None
    return float(text)


def _loss_kind(name: str, leverage: float) -> LossKind:
    return LossKind(kind="soft_ce" if name == "softce" else name, lw_leverage=leverage)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cpl",
        description="Candidate-pseudolabel training on frozen feature containers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the full self-training curriculum")
    run.add_argument("--data", required=True, help="training container (.cple or .csv)")
    run.add_argument("--logits", help="row-aligned zero-shot logits container")
    run.add_argument("--test", help="labeled test container")
    run.add_argument("--paradigm", choices=("ssl", "ul", "trzsl"), required=True)
    run.add_argument("--loss", choices=("cc", "rc", "cav", "lw", "softce"), default="cc")
    run.add_argument("--alpha", type=float, default=0.6)
    run.add_argument("--beta", type=_beta_value, default=None, metavar="F|off")
    run.add_argument("--lambda", dest="lam", type=float, default=1.0)
    run.add_argument("--iters", type=int, default=10, help="curriculum iterations T")
    run.add_argument("--epochs", type=int, default=50)
    run.add_argument("--b2", type=int, default=64)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--labeled-per-class", type=int, default=2)
    run.add_argument("--seen-fraction", type=float, default=0.62)
    run.add_argument("--q-fewshot", type=int, default=None)
    run.add_argument("--lw-leverage", type=float, default=1.0)
    run.add_argument("--lr", type=float, default=0.02)
    run.add_argument("--warmup-lr", type=float, default=1e-4)
    run.add_argument("--warmup-epochs", type=int, default=2)
    run.add_argument("--momentum", type=float, default=0.9)
    run.add_argument("--weight-decay", type=float, default=5e-2)
    run.add_argument("--out", required=True, help="report JSON path")
    run.add_argument("--save-model", help="write the final checkpoint here")
    run.set_defaults(func=cmd_run)

    synth = sub.add_parser("synth", help="generate synthetic containers")
    synth.add_argument("--classes", type=int, default=10)
    synth.add_argument("--per-class", type=int, default=200)
    synth.add_argument("--dims", type=int, default=32)
    synth.add_argument("--separation", type=float, default=3.0)
    synth.add_argument("--bias-index", type=int, default=None, help="class receiving the logit bias")
    synth.add_argument("--bias-scale", type=float, default=0.0)
    synth.add_argument(
        "--bias-vector", default=None, help="comma-separated per-class logit biases"
    )
    synth.add_argument("--test-per-class", type=int, default=0)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--out", required=True, help="output prefix")
    synth.set_defaults(func=cmd_synth)

    select = sub.add_parser("select", help="one candidate-generation pass")
    select.add_argument("--data", required=True, help="logits container")
    select.add_argument("--alpha", type=float, required=True)
    select.add_argument("--beta", type=_beta_value, default=None, metavar="F|off")
    select.set_defaults(func=cmd_select)

    ev = sub.add_parser("eval", help="score a checkpoint on a test container")
    ev.add_argument("--model", required=True, help="checkpoint container")
    ev.add_argument("--test", required=True, help="labeled test container")
    ev.set_defaults(func=cmd_eval)
    return parser


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def cmd_run(args) -> int:
    data = load_container(args.data)
    logits = load_container(args.logits) if args.logits else None
    test = load_container(args.test) if args.test else None
    paradigm = ParadigmSpec(
        paradigm=args.paradigm,
        labeled_per_class=args.labeled_per_class,
        seen_fraction=args.seen_fraction,
        q_fewshot=args.q_fewshot,
        lam=args.lam,
    )
    config = RunConfig(
        paradigm=paradigm,
        selection=SelectionParams(alpha=args.alpha, beta=args.beta),
        loss=_loss_kind(args.loss, args.lw_leverage),
        optim=OptimConfig(
            epochs=args.epochs,
            warmup_epochs=args.warmup_epochs,
            lr=args.lr,
            warmup_lr=args.warmup_lr,
            momentum=args.momentum,
            weight_decay=args.weight_decay,
            b2=args.b2,
        ),
        big_t=args.iters,
        seed=args.seed,
    )
    # a fully labeled container plus ssl/trzsl means the split is ours to draw
    split = None
    if data.labels is not None and not np.any(data.labels < 0):
        if args.paradigm == "ssl":
            split = split_ssl(data, args.labeled_per_class, args.seed)
        elif args.paradigm == "trzsl":
            split = split_trzsl(data, args.seen_fraction, args.seed)

    start = time.perf_counter()
    report = run_cpl(config, data, test, logits=logits, split=split)
    wallclock = time.perf_counter() - start

    doc = report.to_doc()
    doc["final"]["wallclock_s"] = wallclock
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")

    freq_rows = [[r.t] + r.class_frequency for r in report.records]
    _write_csv(
        out.with_suffix(".class_frequency.csv"),
        ["t"] + [f"class_{k}" for k in range(data.c)],
        freq_rows,
    )
    if report.final_confusion is not None:
        _write_csv(
            out.with_suffix(".confusion.csv"),
            [f"pred_{k}" for k in range(data.c)],
            report.final_confusion,
        )
    if args.save_model and report.final_model is not None:
        save_model(report.final_model, args.save_model)
    print(f"wrote {out}")
    print(f"final test_top1: {doc['final']['test_top1']}")
    return 0


def cmd_synth(args) -> int:
    if args.classes < 2:
        raise ValueError("--classes must be at least 2")
    bias = np.zeros(args.classes)
    if args.bias_vector is not None:
        bias = np.array([float(v) for v in args.bias_vector.split(",")])
        if bias.shape != (args.classes,):
            raise ValueError("--bias-vector length must equal --classes")
    elif args.bias_index is not None:
        if not 0 <= args.bias_index < args.classes:
            raise ValueError("--bias-index out of range")
        bias[args.bias_index] = args.bias_scale
    features, logits = make_synthetic(
        args.per_class, args.classes, args.dims, args.separation, bias, args.seed
    )
    prefix = Path(args.out)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    written = []
    for name, box in (("features", features), ("logits", logits)):
        path = prefix.with_name(prefix.name + f".{name}.cple")
        save_container(box, path)
        written.append(path)
    if args.test_per_class > 0:
        test, _ = make_synthetic(
            args.test_per_class,
            args.classes,
            args.dims,
            args.separation,
            bias,
            args.seed,
            variant=1,
        )
        path = prefix.with_name(prefix.name + ".test.cple")
        save_container(test, path)
        written.append(path)
    for path in written:
        print(f"wrote {path}")
    return 0


def cmd_select(args) -> int:
    data = load_container(args.data)
    if data.kind != "logits":
        raise ValueError("--data must point at a logits-kind container")
    conf = ConfidenceMatrix.from_logits(data.rows)
    assign = generate_candidates(conf, SelectionParams(alpha=args.alpha, beta=args.beta))
    print(f"tau: {assign.tau:.6f}")
    print(f"avg_candidate_size: {avg_candidate_size(assign):.4f}")
    freq = class_frequency(assign)
    print("class_frequency: " + " ".join(str(int(v)) for v in freq))
    if data.labels is not None and np.all(data.labels >= 0):
        lea = label_estimation_accuracy(assign, data.labels)
        lea_all = label_estimation_accuracy(assign, data.labels, include_empty=True)
        print(f"label_estimation_accuracy: {lea:.4f} (nonempty) {lea_all:.4f} (all)")
    return 0


def cmd_eval(args) -> int:
    model = load_model(args.model)
    test = load_container(args.test)
    if test.labels is None or np.any(test.labels < 0):
        raise ValueError("--test container needs full labels")
    probs = predict_proba(model, test.rows)
    print(f"top1: {top1_accuracy(probs, test.labels):.4f}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (NoTrainableInstancesError, DivergedError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except (ContainerFormatError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
