"""Descriptor indexing, ranking, and CMC/AUC retrieval evaluation.

A database of raw descriptors is Z-normalized and scanned exhaustively
per query; rankings sort by ascending distance with ties broken by id,
so results are reproducible across platforms and insertion orders.
The CMC curve records the fraction of queries whose correct match
appears within each rank; AUC is its mean over all ranks (and over the
first 200 ranks as `auc_at_200`).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .descriptor import NormalizationStats, znormalize_apply, znormalize_fit

METRICS = ("cosine", "cityblock", "euclidean")
CMC_TRUNCATION = 200


def distance(a, b, metric: str = "cosine") -> float:
    """Distance between two vectors; zero vectors have cosine distance 1."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(pairwise_distances(a[None, :], b, metric)[0])


def pairwise_distances(matrix: np.ndarray, q: np.ndarray, metric: str) -> np.ndarray:
    """Distances from every row of `matrix` to the vector `q`."""
    if metric == "cosine":
        norms = np.linalg.norm(matrix, axis=1)
        qn = np.linalg.norm(q)
        out = np.ones(len(matrix))
        ok = (norms > 0) & (qn > 0)
        if qn > 0:
            out[ok] = 1.0 - matrix[ok] @ q / (norms[ok] * qn)
        return out
    if metric == "cityblock":
        return np.abs(matrix - q).sum(axis=1)
    if metric == "euclidean":
        return np.linalg.norm(matrix - q, axis=1)
    raise ValueError(f"unknown metric {metric!r}; choose from {METRICS}")


@dataclass
class DescriptorIndex:
    ids: list[str]
    vectors: np.ndarray  # (n, d), Z-normalized
    stats: NormalizationStats
    metric_default: str = "cosine"


def build_index(ids, raw_vectors, metric: str = "cosine") -> DescriptorIndex:
    """Fit normalization stats on the database and store normalized rows."""
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; choose from {METRICS}")
    ids = [str(i) for i in ids]
    if len(set(ids)) != len(ids):
        raise ValueError("database ids must be unique")
    stats = znormalize_fit(raw_vectors)
    vectors = np.stack([znormalize_apply(v, stats) for v in np.asarray(raw_vectors, dtype=float)])
    return DescriptorIndex(ids=ids, vectors=vectors, stats=stats, metric_default=metric)


@dataclass
class Ranking:
    query_id: str
    ordered: list[tuple[str, float]]  # (database id, distance), ascending

    def rank_of(self, database_id: str) -> int:
        """1-based position of a database id in this ranking."""
        for pos, (did, _) in enumerate(self.ordered, start=1):
            if did == database_id:
                return pos
        raise ValueError(f"database id {database_id!r} not present in ranking of {self.query_id!r}")


def query(index: DescriptorIndex, raw_descriptor, query_id: str = "query", metric: str | None = None) -> Ranking:
    """Rank the whole database against one raw (unnormalized) descriptor."""
    metric = metric or index.metric_default
    vec = znormalize_apply(np.asarray(raw_descriptor, dtype=float), index.stats)
    dists = pairwise_distances(index.vectors, vec, metric)
    order = sorted(range(len(dists)), key=lambda i: (dists[i], index.ids[i]))
    return Ranking(query_id=query_id, ordered=[(index.ids[i], float(dists[i])) for i in order])


# ---------------------------------------------------------------------------
# CMC / AUC
# ---------------------------------------------------------------------------

@dataclass
class CmcCurve:
    recognition_rate: np.ndarray  # over ranks 1..N
    auc: float
    auc_at_200: float


def evaluate_cmc(rankings: list[Ranking], truth: dict[str, str]) -> CmcCurve:
    """CMC over a query set; `truth` maps query id -> correct database id."""
    if not rankings:
        raise ValueError("need at least one ranking")
    n = len(rankings[0].ordered)
    ranks = []
    for r in rankings:
        if r.query_id not in truth:
            raise KeyError(f"no ground-truth database id for query {r.query_id!r}")
        ranks.append(r.rank_of(truth[r.query_id]))
    ranks = np.asarray(ranks)
    recognition = np.array([(ranks <= k).mean() for k in range(1, n + 1)])
    return CmcCurve(
        recognition_rate=recognition,
        auc=float(recognition.mean()),
        auc_at_200=float(recognition[: min(CMC_TRUNCATION, n)].mean()),
    )


def rank_queries(
    index: DescriptorIndex,
    query_ids,
    query_vectors,
    metric: str | None = None,
) -> list[Ranking]:
    return [
        query(index, vec, query_id=qid, metric=metric)
        for qid, vec in zip(query_ids, np.asarray(query_vectors, dtype=float))
    ]


def run_experiment(
    database_manifest,
    query_manifest,
    descriptor_fn,
    metric: str = "cosine",
    *,
    dataset_dir,
    query_dir,
    split: str = "test",
) -> tuple[CmcCurve, list[Ranking]]:
    """End-to-end retrieval for one query variant and one descriptor.

    `descriptor_fn(image_path, source_entry)` maps an image (with its
    originating dataset entry, for ground-truth-based descriptors) to a
    raw feature vector.  The database is the manifest split; queries
    come from the query manifest and score against their source ids.
    """
    dataset_dir = Path(dataset_dir)
    query_dir = Path(query_dir)

    db_ids = sorted(database_manifest.split[split])
    db_vectors = []
    for did in db_ids:
        entry = database_manifest.entry(did)
        db_vectors.append(descriptor_fn(dataset_dir / entry.image, entry))
    index = build_index(db_ids, np.asarray(db_vectors), metric)

    rankings = []
    truth = query_manifest.truth()
    for q in sorted(query_manifest.queries, key=lambda q: q["id"]):
        entry = database_manifest.entry(q["source_id"])
        vec = descriptor_fn(query_dir / q["image"], entry)
        rankings.append(query(index, vec, query_id=q["id"], metric=metric))
    return evaluate_cmc(rankings, truth), rankings


# ---------------------------------------------------------------------------
# Report files
# ---------------------------------------------------------------------------

def write_report_csv(path, rows) -> None:
    """Rows: dicts with variant, method, metric, auc, auc_at_200."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["variant", "method", "metric", "auc", "auc_at_200"])
        for r in rows:
            writer.writerow(
                [r["variant"], r["method"], r["metric"], f"{r['auc']:.6f}", f"{r['auc_at_200']:.6f}"]
            )


def read_report_csv(path) -> list[dict]:
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        rows = []
        for row in reader:
            row["auc"] = float(row["auc"])
            row["auc_at_200"] = float(row["auc_at_200"])
            rows.append(row)
        return rows


def write_cmc_csv(path, curves: dict[tuple[str, str], CmcCurve]) -> None:
    """Curves keyed by (variant, method); one row per rank."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["variant", "method", "rank", "recognition_rate"])
        for (variant, method), curve in sorted(curves.items()):
            for rank, rate in enumerate(curve.recognition_rate, start=1):
                writer.writerow([variant, method, rank, f"{rate:.6f}"])


def plot_cmc_svg(path, curves_by_method: dict[str, CmcCurve], title: str = "") -> None:
    """One SVG: recognition rate over the first 200 ranks, per method."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 4))
    for method, curve in sorted(curves_by_method.items()):
        n = min(CMC_TRUNCATION, len(curve.recognition_rate))
        ax.plot(np.arange(1, n + 1), curve.recognition_rate[:n], label=f"{method} (AUC {curve.auc:.3f})")
    ax.set_xlabel("rank")
    ax.set_ylabel("recognition rate")
    ax.set_ylim(0.0, 1.02)
    if title:
        ax.set_title(title)
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
