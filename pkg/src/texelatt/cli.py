"""Command-line interface.

Subcommands mirror the pipeline stages: synth, detect, describe,
normalize, distort, retrieve, eval, plus run/validate for declarative
experiment configs.  Exit codes: 0 success, 1 validation failure,
2 stage failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import experiment, retrieval
from .annotations import GroundTruth
from .descriptor import (
    FEATURE_NAMES,
    describe,
    read_descriptor_table,
    write_descriptor_table,
    znormalize_fit,
)
from .detection import DetectorConfig, detect, detect_oracle, load_detections, save_detections
from .distortion import DistortionSpec, make_query_set
from .imgio import load_image
from .synthesis import DatasetManifest, generate_dataset
from .tamura import TAMURA_EXTENDED_NAMES, TAMURA_FEATURE_NAMES, tamura

EFFECT_ALIASES = {"noise": "impulsive_noise", "light": "radial_lighting"}


def _cmd_synth(args) -> int:
    manifest = generate_dataset(
        args.n,
        args.seed,
        args.out,
        split_ratio=args.split,
        canvas_px=args.canvas,
        shading=args.shading,
        jitter=args.jitter,
    )
    print(f"wrote {len(manifest.entries)} images to {args.out} "
          f"(train {len(manifest.split['train'])}, test {len(manifest.split['test'])})")
    return 0


def _cmd_detect(args) -> int:
    if args.oracle:
        if not args.gt:
            print("detect: --oracle requires --gt", file=sys.stderr)
            return 1
        image = load_image(args.image) if args.image else None
        texels = detect_oracle(GroundTruth.load(args.gt), image)
    else:
        config = DetectorConfig(
            circularity_threshold=args.circularity,
            elongation_threshold=args.elongation,
            min_area=args.min_area,
        )
        texels = detect(load_image(args.image), config)
    save_detections(args.out, texels)
    print(f"wrote {len(texels)} detections to {args.out}")
    return 0


def _cmd_describe(args) -> int:
    image = load_image(args.image)
    texels = load_detections(args.detections)
    vec = describe(image, texels).raw
    image_id = args.id or Path(args.image).stem
    write_descriptor_table(args.out, [image_id], [vec], FEATURE_NAMES)
    print(f"wrote descriptor for {image_id} to {args.out}")
    return 0


def _cmd_tamura(args) -> int:
    vec = tamura(load_image(args.image), extended=args.extended).as_vector()
    names = TAMURA_EXTENDED_NAMES if args.extended else TAMURA_FEATURE_NAMES
    image_id = args.id or Path(args.image).stem
    write_descriptor_table(args.out, [image_id], [vec], names)
    print(f"wrote tamura descriptor for {image_id} to {args.out}")
    return 0


def _cmd_normalize(args) -> int:
    _, vectors, _ = read_descriptor_table(args.db)
    stats = znormalize_fit(vectors)
    stats.save(args.out)
    print(f"wrote normalization stats ({vectors.shape[1]} dims over {len(vectors)} items) to {args.out}")
    return 0


def _cmd_distort(args) -> int:
    manifest_path = Path(args.manifest)
    manifest = DatasetManifest.load(manifest_path)
    spec = DistortionSpec(
        resolution=args.resolution,
        effect=EFFECT_ALIASES.get(args.effect, args.effect),
        seed=args.seed,
        p=args.p,
    )
    qman = make_query_set(manifest, manifest_path.parent, spec, args.out, split=args.split)
    print(f"wrote {len(qman.queries)} query images ({spec.name}) to {args.out}")
    return 0


def _cmd_retrieve(args) -> int:
    db_ids, db_vecs, _ = read_descriptor_table(args.db)
    q_ids, q_vecs, _ = read_descriptor_table(args.queries)
    index = retrieval.build_index(db_ids, db_vecs, args.metric)
    rankings = retrieval.rank_queries(index, q_ids, q_vecs, args.metric)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "rankings.csv", "w") as f:
        f.write("query_id,rank,database_id,distance\n")
        for r in rankings:
            for pos, (did, dist) in enumerate(r.ordered, start=1):
                f.write(f"{r.query_id},{pos},{did},{dist:.6g}\n")

    if args.truth:
        truth = json.loads(Path(args.truth).read_text())
        if "queries" in truth:
            truth = {q["id"]: q["source_id"] for q in truth["queries"]}
        curve = retrieval.evaluate_cmc(rankings, truth)
        retrieval.write_cmc_csv(out_dir / "cmc.csv", {(args.variant, args.method): curve})
        retrieval.write_report_csv(
            out_dir / "report.csv",
            [{"variant": args.variant, "method": args.method, "metric": args.metric,
              "auc": curve.auc, "auc_at_200": curve.auc_at_200}],
        )
        print(f"{args.method} [{args.metric}] {args.variant}: AUC {curve.auc:.4f} "
              f"(first {min(200, len(curve.recognition_rate))} ranks: {curve.auc_at_200:.4f})")
    else:
        print(f"wrote rankings for {len(rankings)} queries to {out_dir}")
    return 0


def _cmd_eval(args) -> int:
    rows = retrieval.read_report_csv(args.report)
    width = max(len(r["variant"]) for r in rows)
    print(f"{'variant':<{width}}  {'method':<8}  {'metric':<9}  {'auc':>7}  {'auc@200':>7}")
    for r in rows:
        print(f"{r['variant']:<{width}}  {r['method']:<8}  {r['metric']:<9}  {r['auc']:>7.4f}  {r['auc_at_200']:>7.4f}")
    if args.svg_dir:
        if not args.cmc:
            print("eval: --svg-dir requires --cmc", file=sys.stderr)
            return 1
        import csv as _csv

        curves: dict[tuple[str, str], list[float]] = {}
        with open(args.cmc, newline="") as f:
            for row in _csv.DictReader(f):
                curves.setdefault((row["variant"], row["method"]), []).append(float(row["recognition_rate"]))
        out = Path(args.svg_dir)
        out.mkdir(parents=True, exist_ok=True)
        by_variant: dict[str, dict[str, retrieval.CmcCurve]] = {}
        for (variant, method), rates in curves.items():
            arr = np.asarray(rates)
            curve = retrieval.CmcCurve(arr, float(arr.mean()), float(arr[:200].mean()))
            by_variant.setdefault(variant, {})[method] = curve
        for variant, by_method in sorted(by_variant.items()):
            retrieval.plot_cmc_svg(out / f"cmc_{variant}.svg", by_method, title=variant)
        print(f"wrote {len(by_variant)} CMC plots to {out}")
    return 0


def _cmd_run(args) -> int:
    config = experiment.load_config(args.config)
    problems = experiment.validate(config)
    if problems:
        for p in problems:
            print(f"config problem: {p}", file=sys.stderr)
        return 1
    try:
        result = experiment.run(config)
    except experiment.StageError as exc:
        print(f"stage failure: {exc}", file=sys.stderr)
        return 2
    print(f"executed stages: {len(result.stages_executed)}, cached: {len(result.stages_skipped)}")
    for r in result.report_rows:
        print(f"  {r['variant']:<12} {r['method']:<8} [{r['metric']}] AUC {r['auc']:.4f}")
    print(f"report: {result.report_csv}")
    return 0


def _cmd_validate(args) -> int:
    config = experiment.load_config(args.config)
    problems = experiment.validate(config)
    if problems:
        for p in problems:
            print(f"config problem: {p}")
        return 1
    print("config ok")
    return 0


def _cmd_init_config(args) -> int:
    config = experiment.default_config(args.output_dir, n=args.n, seed=args.seed, canvas=args.canvas)
    lines = [
        f'output_dir = "{config.output_dir}"',
        f"include_identity = {str(config.include_identity).lower()}",
        f"plots = {str(config.plots).lower()}",
        "",
        "[dataset]",
        f"n = {config.dataset['n']}",
        f"seed = {config.dataset['seed']}",
        f"canvas = {config.dataset['canvas']}",
        f"split_ratio = {config.dataset['split_ratio']}",
        "",
        "[detector]",
        f'kind = "{config.detector["kind"]}"',
        "",
        "[methods]",
    ]
    for m, metric in config.methods.items():
        lines.append(f'{m} = "{metric}"')
    for v in config.distortions:
        lines += ["", "[[distortions]]", f"resolution = {v['resolution']}", f'effect = "{v["effect"]}"', f"seed = {v['seed']}"]
    Path(args.out).write_text("\n".join(lines) + "\n")
    print(f"wrote default config to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="texelatt", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a texture dataset with ground truth")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--canvas", type=int, default=1024)
    p.add_argument("--split", type=float, default=0.9)
    p.add_argument("--shading", choices=["flat", "perturbed"], default="flat")
    p.add_argument("--jitter", type=float, default=None)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("detect", help="detect texels in an image")
    p.add_argument("--image")
    p.add_argument("--out", required=True)
    p.add_argument("--oracle", action="store_true")
    p.add_argument("--gt")
    p.add_argument("--circularity", type=float, default=0.85)
    p.add_argument("--elongation", type=float, default=8.0)
    p.add_argument("--min-area", type=int, default=9)
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("describe", help="compute the 36-dim descriptor for one image")
    p.add_argument("--image", required=True)
    p.add_argument("--detections", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--id")
    p.set_defaults(func=_cmd_describe)

    p = sub.add_parser("tamura", help="compute the Tamura descriptor for one image")
    p.add_argument("--image", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--extended", action="store_true")
    p.add_argument("--id")
    p.set_defaults(func=_cmd_tamura)

    p = sub.add_parser("normalize", help="fit Z-normalization stats over a descriptor table")
    p.add_argument("--db", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_normalize)

    p = sub.add_parser("distort", help="build a distorted query set from a dataset")
    p.add_argument("--manifest", required=True)
    p.add_argument("--resolution", type=int, choices=[100, 200, 300], required=True)
    p.add_argument("--effect", choices=["noise", "light", "impulsive_noise", "radial_lighting"], required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--p", type=float, default=0.2)
    p.add_argument("--split", default="test")
    p.set_defaults(func=_cmd_distort)

    p = sub.add_parser("retrieve", help="rank a query descriptor table against a database table")
    p.add_argument("--db", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--method", choices=["texelatt", "tamura"], default="texelatt")
    p.add_argument("--metric", choices=list(retrieval.METRICS), default="cosine")
    p.add_argument("--truth", help="query manifest JSON (enables CMC evaluation)")
    p.add_argument("--variant", default="custom")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_retrieve)

    p = sub.add_parser("eval", help="print a report CSV and optionally plot CMC curves")
    p.add_argument("--report", required=True)
    p.add_argument("--cmc")
    p.add_argument("--svg-dir")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("run", help="run a full experiment from a TOML config")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("validate", help="check an experiment config without running it")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("init-config", help="write the default desk-scale experiment config")
    p.add_argument("--out", required=True)
    p.add_argument("--output-dir", default="out/desk")
    p.add_argument("--n", type=int, default=300)
    p.add_argument("--seed", type=int, default=20240601)
    p.add_argument("--canvas", type=int, default=512)
    p.set_defaults(func=_cmd_init_config)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except experiment.StageError as exc:
        print(f"stage failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
