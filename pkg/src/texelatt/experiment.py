"""Declarative experiment harness: synth -> describe -> distort -> retrieve.

An experiment is a TOML config (dataset, detector, distortion variants,
methods with their metrics).  Stages cache their outputs keyed by a
content hash of their inputs, so re-running an unchanged config does no
recomputation and evaluation-only tweaks do not re-render the dataset.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import retrieval
from .colors import DEFAULT_PALETTE
from .descriptor import FEATURE_NAMES, describe, read_descriptor_table, write_descriptor_table
from .detection import DetectorConfig, detect, detect_oracle
from .distortion import EFFECTS, RESOLUTIONS, DistortionSpec, QueryManifest, make_query_set
from .imgio import load_image, sha256_bytes
from .synthesis import DatasetManifest, generate_dataset
from .annotations import GroundTruth
from .tamura import TAMURA_EXTENDED_NAMES, TAMURA_FEATURE_NAMES, tamura

METHOD_NAMES = ("texelatt", "tamura")
DETECTOR_KINDS = ("oracle", "classical")
IDENTITY_VARIANT = "identity"


@dataclass
class ExperimentConfig:
    output_dir: str
    dataset: dict = field(default_factory=dict)      # n, seed, canvas, split_ratio, shading, jitter
    detector: dict = field(default_factory=dict)     # kind, thresholds
    distortions: list = field(default_factory=list)  # dicts: resolution, effect, seed, [p]
    methods: dict = field(default_factory=dict)      # method name -> metric
    include_identity: bool = True
    tamura_extended: bool = False
    plots: bool = False

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        return cls(
            output_dir=d.get("output_dir", ""),
            dataset=dict(d.get("dataset", {})),
            detector=dict(d.get("detector", {})),
            distortions=[dict(v) for v in d.get("distortions", [])],
            methods=dict(d.get("methods", {})),
            include_identity=bool(d.get("include_identity", True)),
            tamura_extended=bool(d.get("tamura_extended", False)),
            plots=bool(d.get("plots", False)),
        )

    def to_dict(self) -> dict:
        return {
            "output_dir": self.output_dir,
            "dataset": self.dataset,
            "detector": self.detector,
            "distortions": self.distortions,
            "methods": self.methods,
            "include_identity": self.include_identity,
            "tamura_extended": self.tamura_extended,
            "plots": self.plots,
        }


def load_config(path) -> ExperimentConfig:
    with open(path, "rb") as f:
        return ExperimentConfig.from_dict(tomllib.load(f))


def default_config(output_dir, n: int = 300, seed: int = 20240601, canvas: int = 512) -> ExperimentConfig:
    """The desk-scale experiment: 6 distortion variants, both methods."""
    distortions = []
    variant_seed = seed + 1
    for effect in EFFECTS:
        for resolution in RESOLUTIONS:
            distortions.append({"resolution": resolution, "effect": effect, "seed": variant_seed})
            variant_seed += 1
    return ExperimentConfig(
        output_dir=str(output_dir),
        dataset={"n": n, "seed": seed, "canvas": canvas, "split_ratio": 0.0},
        detector={"kind": "oracle"},
        distortions=distortions,
        methods={"texelatt": "cosine", "tamura": "cityblock"},
    )


def validate(config: ExperimentConfig) -> list[str]:
    """Human-readable config problems; empty when runnable."""
    problems = []
    if not config.output_dir:
        problems.append("output_dir: missing")

    ds = config.dataset
    for key in ("n", "seed"):
        if key not in ds:
            problems.append(f"dataset.{key}: missing")
    if "n" in ds and int(ds["n"]) < 10:
        problems.append("dataset.n: must be >= 10")
    ratio = ds.get("split_ratio", 0.9)
    if not 0.0 <= float(ratio) <= 1.0:
        problems.append("dataset.split_ratio: must be within [0, 1]")
    elif "n" in ds and int(ds["n"]) - int(round(float(ratio) * int(ds["n"]))) < 2:
        problems.append("dataset.split_ratio: leaves fewer than 2 test images for the database")
    if int(ds.get("canvas", 1024)) < 64:
        problems.append("dataset.canvas: must be >= 64")

    kind = config.detector.get("kind", "oracle")
    if kind not in DETECTOR_KINDS:
        problems.append(f"detector.kind: unknown kind {kind!r}")

    if not config.methods:
        problems.append("methods: at least one method required")
    for name, metric in config.methods.items():
        if name not in METHOD_NAMES:
            problems.append(f"methods.{name}: unknown method")
        if metric not in retrieval.METRICS:
            problems.append(f"methods.{name}: unknown metric {metric!r}")

    for i, v in enumerate(config.distortions):
        where = f"distortions[{i}]"
        if "seed" not in v:
            problems.append(f"{where}.seed: missing")
        if v.get("resolution") not in RESOLUTIONS:
            problems.append(f"{where}.resolution: must be one of {RESOLUTIONS}")
        elif int(v["resolution"]) > int(ds.get("canvas", 1024)):
            problems.append(f"{where}.resolution: exceeds dataset canvas")
        if v.get("effect") not in EFFECTS:
            problems.append(f"{where}.effect: must be one of {EFFECTS}")

    if not config.distortions and not config.include_identity:
        problems.append("distortions: no query variant configured")
    return problems


# ---------------------------------------------------------------------------
# Stage caching
# ---------------------------------------------------------------------------

def _stage_key(payload) -> str:
    return sha256_bytes(json.dumps(payload, sort_keys=True).encode())


class _Stages:
    """Tracks which stages ran vs. were served from cache."""

    def __init__(self, root: Path):
        self.state_dir = root / "state"
        self.state_dir.mkdir(parents=True, exist_ok=True)
        self.executed: list[str] = []
        self.skipped: list[str] = []

    def fresh(self, name: str, key: str, outputs: list[Path]) -> bool:
        state_file = self.state_dir / f"{name}.json"
        if state_file.exists() and all(p.exists() for p in outputs):
            if json.loads(state_file.read_text()).get("key") == key:
                self.skipped.append(name)
                return False
        return True

    def done(self, name: str, key: str) -> None:
        (self.state_dir / f"{name}.json").write_text(json.dumps({"key": key}))
        self.executed.append(name)


@dataclass
class RunResult:
    report_rows: list[dict]
    report_csv: Path
    cmc_csv: Path
    report_manifest: Path
    stages_executed: list[str]
    stages_skipped: list[str]


class StageError(RuntimeError):
    def __init__(self, stage: str, item: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed on {item!r}: {cause}")
        self.stage = stage
        self.item = item


# ---------------------------------------------------------------------------
# Descriptor computation
# ---------------------------------------------------------------------------

def _detector_config(config: ExperimentConfig) -> DetectorConfig:
    det = config.detector
    return DetectorConfig(
        circularity_threshold=float(det.get("circularity_threshold", 0.85)),
        elongation_threshold=float(det.get("elongation_threshold", 8.0)),
        min_area=int(det.get("min_area", 9)),
    )


def _texelatt_vector(image_path, gt_path, kind: str, det_config: DetectorConfig) -> np.ndarray:
    image = load_image(image_path)
    if kind == "oracle":
        texels = detect_oracle(GroundTruth.load(gt_path))
    else:
        texels = detect(image, det_config)
    return describe(image, texels).raw


def _tamura_vector(image_path, extended: bool) -> np.ndarray:
    return tamura(load_image(image_path), extended=extended).as_vector()


def _method_feature_names(method: str, config: ExperimentConfig):
    if method == "texelatt":
        return FEATURE_NAMES
    return TAMURA_EXTENDED_NAMES if config.tamura_extended else TAMURA_FEATURE_NAMES


def _compute_table(
    method: str,
    items: list[tuple[str, Path, Path | None]],
    config: ExperimentConfig,
    det_config: DetectorConfig,
    stage: str,
) -> tuple[list[str], np.ndarray]:
    ids, vectors = [], []
    for item_id, image_path, gt_path in items:
        try:
            if method == "texelatt":
                vec = _texelatt_vector(image_path, gt_path, config.detector.get("kind", "oracle"), det_config)
            else:
                vec = _tamura_vector(image_path, config.tamura_extended)
        except Exception as exc:
            raise StageError(stage, item_id, exc) from exc
        ids.append(item_id)
        vectors.append(vec)
    return ids, np.asarray(vectors)


# ---------------------------------------------------------------------------
# The full pipeline
# ---------------------------------------------------------------------------

def run(config: ExperimentConfig) -> RunResult:
    """Execute synth -> describe -> distort -> retrieve -> eval with caching."""
    problems = validate(config)
    if problems:
        raise ValueError("invalid config: " + "; ".join(problems))

    root = Path(config.output_dir)
    root.mkdir(parents=True, exist_ok=True)
    stages = _Stages(root)
    det_config = _detector_config(config)

    # --- synth -------------------------------------------------------------
    ds = config.dataset
    dataset_dir = root / "dataset"
    manifest_path = dataset_dir / "manifest.json"
    synth_key = _stage_key(ds)
    if stages.fresh("synth", synth_key, [manifest_path]):
        try:
            generate_dataset(
                int(ds["n"]),
                int(ds["seed"]),
                dataset_dir,
                split_ratio=float(ds.get("split_ratio", 0.9)),
                canvas_px=int(ds.get("canvas", 1024)),
                palette=ds.get("palette", DEFAULT_PALETTE),
                shading=ds.get("shading", "flat"),
                jitter=ds.get("jitter"),
            )
        except Exception as exc:
            raise StageError("synth", "dataset", exc) from exc
        stages.done("synth", synth_key)
    manifest = DatasetManifest.load(manifest_path)
    db_ids = sorted(manifest.split["test"])
    db_items = [
        (did, dataset_dir / manifest.entry(did).image, dataset_dir / manifest.entry(did).ground_truth)
        for did in db_ids
    ]

    # --- database descriptors ----------------------------------------------
    desc_dir = root / "descriptors"
    desc_dir.mkdir(exist_ok=True)
    db_tables: dict[str, Path] = {}
    for method in sorted(config.methods):
        out_csv = desc_dir / f"db_{method}.csv"
        key = _stage_key(
            {"synth": synth_key, "method": method, "detector": config.detector, "extended": config.tamura_extended}
        )
        stage_name = f"describe_db_{method}"
        if stages.fresh(stage_name, key, [out_csv]):
            ids, vectors = _compute_table(method, db_items, config, det_config, stage_name)
            write_descriptor_table(out_csv, ids, vectors, _method_feature_names(method, config))
            stages.done(stage_name, key)
        db_tables[method] = out_csv

    # --- distortion variants -------------------------------------------------
    variants: list[tuple[str, QueryManifest | None, Path | None]] = []
    if config.include_identity:
        variants.append((IDENTITY_VARIANT, None, None))
    for v in config.distortions:
        spec = DistortionSpec.from_dict(v)
        vdir = root / "queries" / spec.name
        qman_path = vdir / "query_manifest.json"
        key = _stage_key({"synth": synth_key, "variant": spec.to_dict()})
        if stages.fresh(f"distort_{spec.name}", key, [qman_path]):
            try:
                make_query_set(manifest, dataset_dir, spec, vdir)
            except Exception as exc:
                raise StageError(f"distort_{spec.name}", spec.name, exc) from exc
            stages.done(f"distort_{spec.name}", key)
        variants.append((spec.name, QueryManifest.load(qman_path), vdir))

    # --- query descriptors ---------------------------------------------------
    query_tables: dict[tuple[str, str], Path] = {}
    for vname, qman, vdir in variants:
        if vname == IDENTITY_VARIANT:
            continue
        for method in sorted(config.methods):
            out_csv = vdir / f"desc_{method}.csv"
            key = _stage_key(
                {
                    "synth": synth_key,
                    "variant": qman.variant.to_dict(),
                    "method": method,
                    "detector": config.detector,
                    "extended": config.tamura_extended,
                }
            )
            stage_name = f"describe_{vname}_{method}"
            if stages.fresh(stage_name, key, [out_csv]):
                items = [
                    (
                        q["id"],
                        vdir / q["image"],
                        dataset_dir / manifest.entry(q["source_id"]).ground_truth,
                    )
                    for q in sorted(qman.queries, key=lambda q: q["id"])
                ]
                ids, vectors = _compute_table(method, items, config, det_config, stage_name)
                write_descriptor_table(out_csv, ids, vectors, _method_feature_names(method, config))
                stages.done(stage_name, key)
            query_tables[(vname, method)] = out_csv

    # --- retrieval + evaluation ----------------------------------------------
    report_rows = []
    curves: dict[tuple[str, str], retrieval.CmcCurve] = {}
    for method in sorted(config.methods):
        metric = config.methods[method]
        ids, vectors, _ = read_descriptor_table(db_tables[method])
        index = retrieval.build_index(ids, vectors, metric)
        for vname, qman, _vdir in variants:
            if vname == IDENTITY_VARIANT:
                qids = [f"{i}__identity" for i in ids]
                qvecs = vectors
                truth = {qid: did for qid, did in zip(qids, ids)}
            else:
                qids, qvecs, _ = read_descriptor_table(query_tables[(vname, method)])
                truth = qman.truth()
            rankings = retrieval.rank_queries(index, qids, qvecs, metric)
            curve = retrieval.evaluate_cmc(rankings, truth)
            curves[(vname, method)] = curve
            report_rows.append(
                {
                    "variant": vname,
                    "method": method,
                    "metric": metric,
                    "auc": curve.auc,
                    "auc_at_200": curve.auc_at_200,
                }
            )

    report_rows.sort(key=lambda r: (r["variant"], r["method"]))
    report_csv = root / "report.csv"
    cmc_csv = root / "cmc.csv"
    retrieval.write_report_csv(report_csv, report_rows)
    retrieval.write_cmc_csv(cmc_csv, curves)

    plot_paths = []
    if config.plots:
        plot_dir = root / "plots"
        plot_dir.mkdir(exist_ok=True)
        for vname in sorted({v for v, _ in curves}):
            by_method = {m: c for (v, m), c in curves.items() if v == vname}
            p = plot_dir / f"cmc_{vname}.svg"
            retrieval.plot_cmc_svg(p, by_method, title=vname)
            plot_paths.append(p)

    report_manifest = root / "report_manifest.json"
    report_manifest.write_text(
        json.dumps(
            {
                "config": config.to_dict(),
                "dataset_manifest": str(manifest_path.relative_to(root)),
                "query_manifests": [
                    str((vdir / "query_manifest.json").relative_to(root))
                    for vname, _q, vdir in variants
                    if vdir is not None
                ],
                "descriptor_tables": sorted(
                    str(p.relative_to(root)) for p in list(db_tables.values()) + list(query_tables.values())
                ),
                "report_csv": str(report_csv.relative_to(root)),
                "cmc_csv": str(cmc_csv.relative_to(root)),
                "plots": [str(p.relative_to(root)) for p in plot_paths],
                "state_files": sorted(str(p.relative_to(root)) for p in stages.state_dir.glob("*.json")),
            },
            indent=2,
            sort_keys=True,
        )
    )

    return RunResult(
        report_rows=report_rows,
        report_csv=report_csv,
        cmc_csv=cmc_csv,
        report_manifest=report_manifest,
        stages_executed=stages.executed,
        stages_skipped=stages.skipped,
    )
