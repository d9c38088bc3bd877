"""Evaluation metrics and their aggregation into per-scheme tables and object-count curves."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .scene import Image, Scene, scene_object_multiset

PSNR_CAP_DB = 100.0
DEFAULT_BINS = ((1, 2), (3, 4), (5, 6), (7, None))
STATS = ("psnr_db", "similarity", "recovery_ratio", "quantity_discrepancy", "downlink_bits", "uplink_bits")
CURVE_STATS = ("similarity", "recovery_ratio", "quantity_discrepancy", "psnr_db")


@dataclass(frozen=True, eq=False)
class EmbeddingTable:
    """Seeded unit vectors, one per class token.

    While the vocabulary fits in ``dim`` the vectors are orthonormal (QR of a
    Gaussian matrix), so scenes with disjoint classes score exactly 0.
    """

    vectors: np.ndarray  # (n_tokens, dim)

    @classmethod
    def build(cls, n_tokens: int, dim: int = 16, seed: int = 0) -> "EmbeddingTable":
        rng = np.random.default_rng(seed)
        g = rng.standard_normal((dim, max(n_tokens, 1)))
        if n_tokens <= dim:
            q, r = np.linalg.qr(g)
            vecs = (q * np.sign(np.diag(r))).T[:n_tokens]
        else:
            vecs = g.T / np.linalg.norm(g.T, axis=1, keepdims=True)
        return cls(np.ascontiguousarray(vecs[:n_tokens]))

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return self.vectors.shape[0]


def psnr(a: Image, b: Image, cap: float = PSNR_CAP_DB) -> float:
    if a.resolution != b.resolution:
        raise ValueError(f"resolution mismatch {a.resolution} vs {b.resolution}")
    mse = float(np.mean((a.pixels.astype(np.float64) - b.pixels.astype(np.float64)) ** 2))
    if mse == 0.0:
        return cap
    return min(cap, 10.0 * math.log10(255.0**2 / mse))


def _mean_vector(scene: Scene, table: EmbeddingTable) -> np.ndarray:
    ids = [o.class_id for o in scene.objects if 0 <= o.class_id < len(table)]
    return table.vectors[ids].mean(axis=0)


def semantic_similarity(a: Scene, b: Scene, table: EmbeddingTable) -> float:
    """Cosine between the mean class vectors of the two scenes."""
    if not a.objects and not b.objects:
        return 1.0
    if not a.objects or not b.objects:
        return 0.0
    va, vb = _mean_vector(a, table), _mean_vector(b, table)
    na, nb = np.linalg.norm(va), np.linalg.norm(vb)
    if na == 0.0 or nb == 0.0:
        return 0.0
    # rounding keeps orthogonal scenes at exactly 0 instead of -1e-16
    return round(float(np.clip(va @ vb / (na * nb), -1.0, 1.0)), 12)


def recovery_ratio(original: Scene, recovered: Scene) -> float:
    orig = scene_object_multiset(original)
    if not orig:
        return 1.0
    hit = orig & scene_object_multiset(recovered)
    return sum(hit.values()) / sum(orig.values())


def quantity_discrepancy(original: Scene, recovered: Scene) -> int:
    return abs(len(original.objects) - len(recovered.objects))


# -- aggregation ----------------------------------------------------------------


def session_metrics(result, table: EmbeddingTable) -> dict:
    """Flat metric row for one session.

    Object metrics compare the user's original scene with what the receiver
    ended up with; PSNR compares the downlink's sent and received images.
    Schemes without a semantic layer (A) carry ``None`` object metrics.
    """
    row = {
        "session": result.session_index,
        "scheme": result.scheme_tag,
        "snr_db": result.snr_db,
        "user": result.user_id,
        "objects": len(result.original_scene.objects),
        "downlink_bits": result.downlink_bits,
        "uplink_bits": result.uplink_bits,
        "control_bits": result.control_bits,
        "psnr_db": psnr(result.sent_image, result.received_image),
        "semantic_failure": result.semantic_failure,
        "similarity": None,
        "recovery_ratio": None,
        "quantity_discrepancy": None,
    }
    if result.received_scene is not None:
        row["similarity"] = semantic_similarity(result.original_scene, result.received_scene, table)
        row["recovery_ratio"] = recovery_ratio(result.original_scene, result.received_scene)
        row["quantity_discrepancy"] = quantity_discrepancy(result.original_scene, result.received_scene)
    return row


def _summary(values: Sequence) -> dict:
    vals = [v for v in values if v is not None]
    if not vals:
        return {"mean": None, "min": None, "max": None}
    return {"mean": math.fsum(vals) / len(vals), "min": min(vals), "max": max(vals)}


def bin_label(b) -> str:
    lo, hi = b
    if hi is None:
        return f"{lo}+"
    return f"{lo}-{hi}" if hi != lo else str(lo)


def bin_of(n: int, bins) -> int | None:
    for i, (lo, hi) in enumerate(bins):
        if n >= lo and (hi is None or n <= hi):
            return i
    return None


@dataclass
class MetricsReport:
    """Per (scheme, snr) summaries plus object-count binned curves."""

    groups: dict = field(default_factory=dict)  # (scheme, snr) -> {stat: {mean,min,max}, "sessions": n, ...}
    curves: dict = field(default_factory=dict)  # (scheme, snr) -> list of per-bin dicts
    bins: tuple = DEFAULT_BINS

    def mean(self, scheme: str, stat: str, snr_db: float | None = None) -> float | None:
        key = self._key(scheme, snr_db)
        return self.groups[key][stat]["mean"]

    def curve(self, scheme: str, stat: str, snr_db: float | None = None) -> list:
        return [b[stat] for b in self.curves[self._key(scheme, snr_db)]]

    def _key(self, scheme, snr_db):
        if snr_db is not None:
            return (scheme, float(snr_db))
        keys = [k for k in self.groups if k[0] == scheme]
        if len(keys) != 1:
            raise KeyError(f"scheme {scheme} has {len(keys)} snr points; pass snr_db")
        return keys[0]

    # -- serialization --

    def table_csv(self) -> str:
        cols = ["scheme", "snr_db", "sessions", "semantic_failures", "control_bits"]
        for stat in STATS:
            cols += [f"{stat}_mean", f"{stat}_min", f"{stat}_max"]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for (scheme, snr), g in sorted(self.groups.items()):
            row = [scheme, _fmt(snr), g["sessions"], g["semantic_failures"], g["control_bits"]]
            for stat in STATS:
                row += [_fmt(g[stat][m]) for m in ("mean", "min", "max")]
            w.writerow(row)
        return buf.getvalue()

    def curve_records(self) -> list[dict]:
        out = []
        for (scheme, snr), bins in sorted(self.curves.items()):
            for b in bins:
                out.append({"scheme": scheme, "snr_db": snr, **b})
        return out

    def curves_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.curve_records())


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def aggregate_rows(rows: Iterable[Mapping], bins=DEFAULT_BINS) -> MetricsReport:
    rows = list(rows)
    if not rows:
        raise ValueError("cannot aggregate an empty result list")
    bins = tuple((lo, hi) for lo, hi in bins)
    grouped: dict = {}
    for r in rows:
        grouped.setdefault((r["scheme"], float(r["snr_db"])), []).append(r)
    report = MetricsReport(bins=bins)
    for key, rs in grouped.items():
        g = {stat: _summary([r[stat] for r in rs]) for stat in STATS}
        g["sessions"] = len(rs)
        g["semantic_failures"] = sum(bool(r["semantic_failure"]) for r in rs)
        g["control_bits"] = sum(r.get("control_bits", 0) for r in rs)
        report.groups[key] = g
        curve = []
        for i, b in enumerate(bins):
            members = [r for r in rs if bin_of(r["objects"], bins) == i]
            entry = {"bin": bin_label(b), "sessions": len(members)}
            for stat in CURVE_STATS:
                entry[stat] = _summary([m[stat] for m in members])["mean"]
            curve.append(entry)
        report.curves[key] = curve
    return report


def aggregate(results: Sequence, table: EmbeddingTable, bins=DEFAULT_BINS) -> MetricsReport:
    if not results:
        raise ValueError("cannot aggregate an empty result list")
    return aggregate_rows((session_metrics(r, table) for r in results), bins)


__all__ = [
    "EmbeddingTable",
    "MetricsReport",
    "psnr",
    "semantic_similarity",
    "recovery_ratio",
    "quantity_discrepancy",
    "session_metrics",
    "aggregate",
    "aggregate_rows",
]
