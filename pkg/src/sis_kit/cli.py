"""``sis-kit`` command line.

All results go to files. Standard output only carries progress lines
(silenced by ``--quiet``); errors are one line on standard error with exit
status 1. ``SIS_KIT_LOG`` (error, info, debug) sets the log level.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import baselines as bl
from .clustering import METRICS, PopulationItem, SisPopulation, cross_model_predict, dbscan, render
from .datagen import gen_glm_instances, gen_planted_motif, pwm_spec
from .evaluation import motif_divergence, plot_rows_csv, qhs, rationale_report, rationale_string
from .masking import compare_imputation, compute_mean_baseline
from .models.base import Evaluator
from .models.spec import build_evaluator, load_spec
from .motif import Motif
from .sis import sis_collection
from .types import (
    DecisionCriterionError,
    DecisionThreshold,
    FeatureInput,
    ImputationBaseline,
    Rationale,
    SisCollectionResult,
    sis_rationales,
)

log = logging.getLogger("sis_kit")


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message.replace("\n", " "))


# ---------------------------------------------------------------- file helpers


def _open(path, flag, mode="r"):
    try:
        return open(path, mode, encoding="utf-8", newline="" if "w" in mode else None)
    except FileNotFoundError:
        raise CliError(f"{flag}: file not found: {path}") from None
    except OSError as e:
        raise CliError(f"{flag}: cannot open {path}: {e.strerror}") from None


def _read_json(path, flag):
    with _open(path, flag) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as e:
            raise CliError(f"{flag}: invalid JSON in {path}: {e}") from None


def _read_jsonl(path, flag):
    out = []
    with _open(path, flag) as fh:
        for n, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as e:
                raise CliError(f"{flag}: invalid JSON on line {n} of {path}: {e}") from None
    return out


def _write_json(path, obj, flag="--out"):
    with _open(path, flag, "w") as fh:
        json.dump(obj, fh, indent=1)
        fh.write("\n")


def _write_jsonl(path, rows, flag="--out"):
    with _open(path, flag, "w") as fh:
        for r in rows:
            fh.write(json.dumps(r) + "\n")


def _load_data(path, flag="--data"):
    try:
        return [FeatureInput.from_dict(d) for d in _read_jsonl(path, flag)]
    except (KeyError, ValueError) as e:
        raise CliError(f"{flag}: bad input record in {path}: {e}") from None


def _load_model(path, threads, flag="--model") -> Evaluator:
    try:
        spec = load_spec(path)
    except FileNotFoundError:
        raise CliError(f"{flag}: file not found: {path}") from None
    except (KeyError, ValueError, json.JSONDecodeError) as e:
        raise CliError(f"{flag}: bad model spec in {path}: {e}") from None
    try:
        model = build_evaluator(spec, Path(path).parent)
    except (KeyError, ValueError) as e:
        raise CliError(f"{flag}: bad model spec in {path}: {e}") from None
    model.threads = threads
    return model


def _load_baseline(path, flag="--baseline"):
    try:
        return ImputationBaseline.from_dict(_read_json(path, flag))
    except (KeyError, ValueError) as e:
        raise CliError(f"{flag}: bad baseline in {path}: {e}") from None


def _check_schema(model, baseline, data, model_flag="--model", baseline_flag="--baseline"):
    for x in data:
        try:
            model.check_schema(x)
        except ValueError as e:
            raise CliError(f"{model_flag}: input {x.source_id!r}: {e}") from None
        if baseline is not None:
            try:
                baseline.check_compatible(x)
            except ValueError as e:
                raise CliError(f"{baseline_flag}: input {x.source_id!r}: {e}") from None


def _threshold(args, model, data) -> DecisionThreshold:
    if args.tau is not None:
        return DecisionThreshold(args.tau, args.direction)
    scores = model.evaluate(data) if _uniform(data) else np.array([model.score_one(x) for x in data])
    q = float(np.quantile(scores, args.tau_quantile))
    return DecisionThreshold(q, args.direction)


def _uniform(data):
    return len({x.dims for x in data}) <= 1


def _load_results(path, flag):
    obj = _read_json(path, flag)
    if "results" not in obj:
        raise CliError(f"{flag}: {path} is not an extract output")
    return obj, [SisCollectionResult.from_dict(r) for r in obj["results"]]


def _load_rationales(path, flag) -> list:
    obj = _read_json(path, flag)
    if "results" in obj:
        out = []
        for r in obj["results"]:
            out.extend(sis_rationales(SisCollectionResult.from_dict(r)))
        return out
    if "rationales" in obj:
        return [Rationale.from_dict(r) for r in obj["rationales"]]
    raise CliError(f"{flag}: {path} holds neither SIS results nor rationales")


def _by_id(data):
    return {x.source_id: x for x in data}


def _progress(args, msg):
    if not args.quiet:
        print(msg, flush=True)


# ---------------------------------------------------------------- subcommands


def cmd_gen(args):
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.kind == "planted":
        if args.motif:
            motif = Motif.from_dict(_read_json(args.motif, "--motif"))
        else:
            motif = Motif.near_deterministic(args.consensus, args.p_major, "consensus")
        data, labels = gen_planted_motif(args.n, args.seq_len, motif, args.plant_rate, args.seed)
        spec = pwm_spec(motif, args.scale, args.bias)
        _write_json(out / "motif.json", motif.to_dict(), "--out-dir")
        _write_jsonl(out / "labels.jsonl", [l.to_dict() for l in labels], "--out-dir")
    else:
        data, spec = gen_glm_instances(args.p, args.n, args.weight_law, args.seed, args.link, args.intercept)
        _write_jsonl(out / "labels.jsonl", [{"source_id": x.source_id} for x in data], "--out-dir")
    _write_jsonl(out / "dataset.jsonl", [x.to_dict() for x in data], "--out-dir")
    _write_json(out / "model.json", spec.to_dict(), "--out-dir")
    _progress(args, f"gen: wrote {len(data)} inputs to {out}")


def cmd_mask(args):
    data = _load_data(args.data)
    if not data:
        raise CliError(f"--data: {args.data} is empty")
    if args.zero:
        base = ImputationBaseline.zeros_like(data[0], "zero")
    else:
        try:
            base = compute_mean_baseline(data, variable_length=args.variable_length)
        except ValueError as e:
            raise CliError(f"--data: {e}") from None
    _write_json(args.out, base.to_dict())
    _progress(args, f"mask: baseline over {len(data)} inputs written to {args.out}")


def cmd_extract(args):
    data = _load_data(args.data)
    base = _load_baseline(args.baseline)
    with _load_model(args.model, args.threads) as model:
        _check_schema(model, base, data)
        thr = _threshold(args, model, data)
        results, skipped = [], []
        for k, x in enumerate(data):
            try:
                results.append(sis_collection(model, x, thr, base))
            except DecisionCriterionError:
                skipped.append(x.source_id)
            if (k + 1) % 100 == 0:
                _progress(args, f"extract: {k + 1}/{len(data)}")
    _write_json(
        args.out,
        {
            "index_base": 0,
            "threshold": thr.to_dict(),
            "results": [r.to_dict() for r in results],
            "skipped": skipped,
        },
    )
    n_sis = sum(len(r.sis_list) for r in results)
    _progress(args, f"extract: {len(results)} inputs meet the decision, {n_sis} SIS; {len(skipped)} skipped")


def cmd_baseline(args):
    data = _load_data(args.data)
    byid = _by_id(data)
    base = _load_baseline(args.baseline)
    needs_attrib = args.method in ("suff_attrib", "attrib_len", "top_attrib")
    needs_k = args.method in ("perturb_len", "attrib_len")
    attrib = bl.load_attributions(args.attrib) if needs_attrib and args.attrib else None
    if needs_attrib and attrib is None:
        raise CliError(f"--attrib is required for --method {args.method}")
    if needs_k and not args.k_from:
        raise CliError(f"--k-from is required for --method {args.method}")
    k_by_id = {}
    thr = None
    if args.k_from:
        obj, results = _load_results(args.k_from, "--k-from")
        thr = DecisionThreshold.from_dict(obj["threshold"])
        for r in results:
            k_by_id[r.input_ref] = bl.sis_length_for(r, args.k_mode)
    with _load_model(args.model, args.threads) as model:
        _check_schema(model, base, data)
        if args.tau is not None or args.tau_quantile is not None:
            thr = _threshold(args, model, data)
        if thr is None:
            raise CliError("one of --tau, --tau-quantile or --k-from is required")
        targets = [byid[r] for r in k_by_id] if k_by_id else [x for x in data if thr.met(model.score_one(x))]
        rationales = []
        for x in targets:
            k = k_by_id.get(x.source_id)
            if needs_k and k is None:
                continue
            if needs_attrib:
                if x.source_id not in attrib:
                    raise CliError(f"--attrib: no scores for input {x.source_id!r}")
                a = attrib[x.source_id]
                try:
                    a.check_length(x)
                except ValueError as e:
                    raise CliError(f"--attrib: {e}") from None
                R = bl.ordering_from_scores(a.scores)
            else:
                R = bl.perturbation_ordering(model, x, base, thr.direction)
            if args.method in ("suff_perturb", "suff_attrib"):
                r = bl.assemble_sufficiency(model, x, thr, R, base, args.method)
            elif needs_k:
                r = bl.assemble_length_constrained(x, R, k, model=model, tau=thr, baseline=base, method_tag=args.method)
            else:
                zero_ref = model.score_one(FeatureInput(tuple(np.zeros(d) for d in x.dims)))
                r = bl.assemble_attribution_budget(model, x, thr, a, zero_ref, base)
            rationales.append(r)
    _write_json(
        args.out,
        {
            "index_base": 0,
            "method": args.method,
            "threshold": thr.to_dict(),
            "rationales": [r.to_dict() for r in rationales],
        },
    )
    _progress(args, f"baseline: {len(rationales)} {args.method} rationales written to {args.out}")


def _parse_tagged(spec, flag):
    if "=" in spec:
        tag, path = spec.split("=", 1)
    else:
        path = spec
        tag = Path(spec).stem
    if not tag:
        raise CliError(f"{flag}: empty source tag in {spec!r}")
    return tag, path


def cmd_cluster(args):
    byid = _by_id(_load_data(args.data)) if args.data else {}
    items = []
    for spec in args.inputs:
        tag, path = _parse_tagged(spec, "--in")
        _, results = _load_results(path, "--in")
        for r in results:
            x = byid.get(r.input_ref)
            if x is None and args.metric != "energy":
                raise CliError(f"--data: no input {r.input_ref!r} (needed by {path})")
            for s in r.sis_list:
                try:
                    rendering = render(s, x, args.metric, args.grid_width)
                except ValueError as e:
                    raise CliError(f"--in: {e}") from None
                items.append(PopulationItem(s, tag, rendering, r.input_ref))
    if not items:
        raise CliError("--in: no SIS to cluster")
    try:
        report = dbscan(SisPopulation(items, args.metric), args.eps, args.min_pts)
    except ValueError as e:
        raise CliError(str(e)) from None
    out = report.to_dict()
    out["items"] = [{"input_ref": it.input_ref, "source": it.source_model_tag, "indices": list(it.sis.indices)} for it in items]
    out["index_base"] = 0
    _write_json(args.out, out)
    _progress(args, f"cluster: {len(items)} SIS, {len(report.clusters)} clusters")


def cmd_evaluate(args):
    byid = _by_id(_load_data(args.data))
    if args.motif:
        motif = Motif.from_dict(_read_json(args.motif, "--motif"))
        rats = _load_rationales(args.rationales, "--rationales")
        rows = []
        for r in rats:
            x = byid.get(r.input_ref)
            if x is None:
                raise CliError(f"--data: no input {r.input_ref!r}")
            seq = rationale_string(r.indices, x)
            rows.append({"input_ref": r.input_ref, "method_tag": r.method_tag, "rationale": seq,
                         "divergence": motif_divergence(seq, motif, x.p)})
        divs = [row["divergence"] for row in rows]
        out = {"kind": "motif_divergence", "median_divergence": float(np.median(divs)) if divs else None, "rows": rows}
    elif args.human:
        if not (args.model and args.baseline):
            raise CliError("--human needs --model and --baseline")
        base = _load_baseline(args.baseline)
        rows = []
        with _load_model(args.model, args.threads) as model:
            for rec in _read_jsonl(args.human, "--human"):
                x = byid.get(rec["input_ref"])
                if x is None:
                    raise CliError(f"--data: no input {rec['input_ref']!r}")
                _check_schema(model, base, [x])
                rows.append({"input_ref": x.source_id, "qhs": qhs(model, x, rec["indices"], base, args.direction)})
        vals = [row["qhs"] for row in rows]
        out = {"kind": "qhs", "median_qhs": float(np.median(vals)) if vals else None, "rows": rows}
    else:
        raise CliError("one of --motif or --human is required")
    _write_json(args.out, out)
    _progress(args, f"evaluate: {len(out['rows'])} rows written to {args.out}")


def cmd_report(args):
    byid = _by_id(_load_data(args.data))
    entries = []
    for path in args.rationales:
        for r in _load_rationales(path, "--rationales"):
            x = byid.get(r.input_ref)
            if x is None:
                raise CliError(f"--data: no input {r.input_ref!r} (needed by {path})")
            entries.append((r, x))
    model = base = None
    if args.model:
        if not args.baseline:
            raise CliError("--model needs --baseline")
        base = _load_baseline(args.baseline)
        model = _load_model(args.model, args.threads)
    try:
        summary = rationale_report(entries, model, base, args.direction)
    finally:
        if model is not None:
            model.close()
    _write_json(args.out, {"methods": summary})
    if args.plot_csv:
        with _open(args.plot_csv, "--plot-csv", "w") as fh:
            fh.write(plot_rows_csv(entries))
    _progress(args, f"report: {len(summary)} methods summarized in {args.out}")


def cmd_compare_imputation(args):
    data = _load_data(args.data)
    base = _load_baseline(args.baseline) if args.baseline else None
    with _load_model(args.model, args.threads) as model:
        _check_schema(model, base, data)
        try:
            rep = compare_imputation(model, data, args.n_samples, args.seed, base)
        except ValueError as e:
            raise CliError(f"--n-samples: {e}" if "n_samples" in str(e) else str(e)) from None
    _write_json(args.out, rep.to_dict(include_samples=args.samples))
    _progress(args, f"compare-imputation: mean {rep.mean_imputation_mean:.3g} vs hot-deck {rep.hot_deck_mean:.3g}")


def cmd_cross_predict(args):
    byid = _by_id(_load_data(args.data))
    base = _load_baseline(args.baseline)
    _, results = _load_results(args.sis, "--sis")
    pairs = []
    for r in results:
        x = byid.get(r.input_ref)
        if x is None:
            raise CliError(f"--data: no input {r.input_ref!r}")
        pairs.extend((x, s) for s in r.sis_list)
    with _load_model(args.model, args.threads) as model:
        _check_schema(model, base, [x for x, _ in pairs])
        pred = cross_model_predict(pairs, model, base, DecisionThreshold(args.tau, args.direction))
    _write_json(args.out, pred.to_dict())
    _progress(args, f"cross-predict: {pred.fraction_sufficient:.3f} of {len(pairs)} SIS sufficient")


# ---------------------------------------------------------------- parser


def _add_threshold(p, required=True):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--tau", type=float, help="decision threshold")
    g.add_argument("--tau-quantile", type=float, help="threshold at this quantile of the model's scores on --data")
    p.add_argument("--direction", choices=("above", "below"), default="above")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--quiet", action="store_true", help="suppress progress output")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="max concurrent evaluator batches")

    parser = _Parser(prog="sis-kit", description="Sufficient input subset extraction and evaluation.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", parents=[common], help="generate a synthetic dataset and model")
    p.add_argument("--kind", choices=("planted", "glm"), required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--seq-len", type=int, default=30)
    p.add_argument("--motif", help="motif JSON ({\"matrix\": n x 4})")
    p.add_argument("--consensus", default="TGACTCAG", help="consensus for a near-deterministic motif")
    p.add_argument("--p-major", type=float, default=0.97)
    p.add_argument("--plant-rate", type=float, default=0.5)
    p.add_argument("--scale", type=float, default=8.0)
    p.add_argument("--bias", type=float, default=-10.0)
    p.add_argument("--p", type=int, default=10)
    p.add_argument("--weight-law", choices=("normal", "uniform", "laplace"), default="normal")
    p.add_argument("--link", choices=("identity", "logistic"), default="logistic")
    p.add_argument("--intercept", type=float, default=0.0)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("mask", parents=[common], help="compute an imputation baseline")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--variable-length", action="store_true", help="pool all positions into one shared mask vector")
    p.add_argument("--zero", action="store_true", help="write an all-zeros baseline instead of the mean")
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser("extract", parents=[common], help="extract SIS collections")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--baseline", required=True)
    p.add_argument("--out", required=True)
    _add_threshold(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("baseline", parents=[common], help="build comparison rationales")
    p.add_argument("--method", required=True, choices=("suff_perturb", "perturb_len", "suff_attrib", "attrib_len", "top_attrib"))
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--baseline", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--attrib", help="attribution scores JSONL")
    p.add_argument("--k-from", help="extract output; sets the inputs, threshold and length budgets")
    p.add_argument("--k-mode", choices=("median", "first"), default="median")
    _add_threshold(p, required=False)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("cluster", parents=[common], help="DBSCAN over SIS")
    p.add_argument("--metric", required=True, choices=sorted(METRICS))
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--min-pts", type=int, required=True)
    p.add_argument("--in", dest="inputs", action="append", required=True, metavar="[TAG=]PATH")
    p.add_argument("--data", help="dataset the SIS were extracted from")
    p.add_argument("--grid-width", type=int, help="image width for the energy metric")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("evaluate", parents=[common], help="score rationales against a motif or human selections")
    p.add_argument("--rationales")
    p.add_argument("--data", required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--motif")
    g.add_argument("--human")
    p.add_argument("--model")
    p.add_argument("--baseline")
    p.add_argument("--direction", choices=("above", "below"), default="above")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", parents=[common], help="compare rationale methods")
    p.add_argument("--rationales", action="append", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--model")
    p.add_argument("--baseline")
    p.add_argument("--direction", choices=("above", "below"), default="above")
    p.add_argument("--plot-csv")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("compare-imputation", parents=[common], help="mean vs hot-deck masking")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--baseline")
    p.add_argument("--n-samples", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", action="store_true", help="include every draw in the output")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare_imputation)

    p = sub.add_parser("cross-predict", parents=[common], help="score one model's SIS with another model")
    p.add_argument("--sis", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--baseline", required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--direction", choices=("above", "below"), default="above")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_cross_predict)
    return parser


def _setup_logging():
    level = os.environ.get("SIS_KIT_LOG", "error").lower()
    logging.basicConfig(
        level={"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}.get(level, logging.ERROR),
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )


def run(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "evaluate" and args.motif and not args.rationales:
            raise CliError("--motif needs --rationales")
        args.func(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # anything else is still reported on one line
        log.debug("unhandled error", exc_info=True)
        msg = str(e).replace("\n", " ")
        print(f"error: {type(e).__name__}: {msg}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
