"""Experiment driver: config, corpus, paired multi-scheme runs, report emission."""

from __future__ import annotations

import dataclasses
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

import yaml

from .channel import ChannelConfig
from .errors import ConfigurationError
from .metrics import DEFAULT_BINS, MetricsReport, aggregate_rows, session_metrics
from .scene import (
    DEFAULT_CLASSES,
    DEFAULT_PALETTE,
    DEFAULT_SIZE_LEVELS,
    Scene,
    Vocabulary,
    generate_corpus,
    read_corpus,
    write_corpus,
)
from .semantic import ProtectionProfile
from .workflow import NetworkSettings, NetworkState, prepare_network, run_session, session_seed, share_knowledge, sync_update

log = logging.getLogger(__name__)

SCHEMES = ("A", "B", "C")


@dataclass(frozen=True)
class ExperimentConfig:
    corpus_size: int = 300
    object_count_range: tuple[int, int] = (1, 8)
    corpus_path: str | None = None  # read scenes from this file instead of generating
    class_labels: tuple[str, ...] = DEFAULT_CLASSES
    palette: tuple[int, ...] = DEFAULT_PALETTE
    size_levels: tuple[int, ...] = DEFAULT_SIZE_LEVELS
    snr_db: tuple[float, ...] = (0.0,)
    master_seed: int = 2024
    schemes: tuple[str, ...] = SCHEMES
    n_users: int = 3
    workers: int = 1
    bins: tuple = DEFAULT_BINS
    output_dir: str = "results"
    network: NetworkSettings = field(default_factory=NetworkSettings)

    def __post_init__(self):
        if self.corpus_size < 1:
            raise ConfigurationError("corpus_size must be >= 1")
        if not self.snr_db:
            raise ConfigurationError("snr_db list must be non-empty")
        if not self.schemes or any(s not in SCHEMES for s in self.schemes):
            raise ConfigurationError(f"schemes must be a non-empty subset of {SCHEMES}")
        if self.n_users < 1 or self.workers < 1:
            raise ConfigurationError("n_users and workers must be >= 1")

    @property
    def vocabulary(self) -> Vocabulary:
        return Vocabulary(self.class_labels, self.palette, self.size_levels)


# -- config file --------------------------------------------------------------

# top-level sections of the YAML file -> ExperimentConfig fields they may set
SECTIONS = {
    "corpus": {"size": "corpus_size", "object_count_range": "object_count_range", "path": "corpus_path"},
    "vocabulary": {"classes": "class_labels", "palette": "palette", "size_levels": "size_levels"},
    "channel": {"snr_db": "snr_db"},
    "experiment": {
        "master_seed": "master_seed",
        "schemes": "schemes",
        "n_users": "n_users",
        "workers": "workers",
        "bins": "bins",
    },
    "output": {"dir": "output_dir"},
}
_PROFILE_FIELDS = ("standard_profile", "robust_profile")
_TUPLE_FIELDS = {"object_count_range", "class_labels", "palette", "size_levels", "snr_db", "schemes"}


def _network_from(mapping: Mapping[str, Any]) -> NetworkSettings:
    known = {f.name for f in fields(NetworkSettings)}
    unknown = set(mapping) - known
    if unknown:
        raise ConfigurationError(f"unknown network settings: {sorted(unknown)}")
    kw = {}
    for key, val in mapping.items():
        if key in _PROFILE_FIELDS:
            val = ProtectionProfile(**val) if isinstance(val, Mapping) else ProtectionProfile(*val)
        elif key in ("canvas", "resolution"):
            val = tuple(val)
        kw[key] = val
    return NetworkSettings(**kw)


def config_from_dict(tree: Mapping[str, Any]) -> ExperimentConfig:
    kw: dict[str, Any] = {}
    for section, body in (tree or {}).items():
        if section == "network":
            kw["network"] = _network_from(body or {})
            continue
        if section not in SECTIONS:
            raise ConfigurationError(f"unknown config section {section!r}")
        for key, val in (body or {}).items():
            if key not in SECTIONS[section]:
                raise ConfigurationError(f"unknown key {section}.{key}")
            name = SECTIONS[section][key]
            if name in _TUPLE_FIELDS:
                val = tuple(val) if isinstance(val, (list, tuple)) else (val,)
            if name == "bins":
                val = tuple((int(lo), None if hi is None else int(hi)) for lo, hi in val)
            kw[name] = val
    if "snr_db" in kw:
        kw["snr_db"] = tuple(float(x) for x in kw["snr_db"])
    return ExperimentConfig(**kw)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    tree: dict[str, dict] = {}
    for section, keys in SECTIONS.items():
        tree[section] = {}
        for key, name in keys.items():
            val = getattr(cfg, name)
            if name == "bins":
                val = [list(b) for b in val]
            elif isinstance(val, tuple):
                val = list(val)
            tree[section][key] = val
    net = {}
    for f in fields(NetworkSettings):
        val = getattr(cfg.network, f.name)
        if isinstance(val, ProtectionProfile):
            val = dataclasses.asdict(val)
        elif isinstance(val, tuple):
            val = list(val)
        net[f.name] = val
    tree["network"] = net
    return tree


def load_config(path: str | Path | None, **overrides) -> ExperimentConfig:
    tree = {}
    if path is not None:
        with open(path) as f:
            tree = yaml.safe_load(f) or {}
    cfg = config_from_dict(tree)
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return dataclasses.replace(cfg, **overrides) if overrides else cfg


# -- running ------------------------------------------------------------------


def build_corpus(cfg: ExperimentConfig) -> list[Scene]:
    if cfg.corpus_path:
        return read_corpus(cfg.corpus_path, cfg.vocabulary)
    return generate_corpus(cfg.corpus_size, cfg.vocabulary, cfg.master_seed, cfg.object_count_range, cfg.network.canvas)


def _check_writable(out: Path) -> None:
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-probe"
        probe.write_text("")
        probe.unlink()
    except OSError as e:
        raise OSError(f"output directory {out} is not writable: {e}") from e


def run_scheme(cfg: ExperimentConfig, scheme: str, snr_index: int, corpus: list[Scene], net: NetworkState, pool=None) -> list:
    """All corpus sessions of one scheme at one SNR, in sync_period batches.

    Sessions inside a batch see the same frozen network state and may run in
    parallel; feedback sync is applied serially between batches.
    """
    snr = cfg.snr_db[snr_index]
    period = net.settings.sync_period
    results = []
    for start in range(0, len(corpus), period):
        idx = range(start, min(start + period, len(corpus)))

        def one(i, net=net):
            ch = ChannelConfig(snr, session_seed(cfg.master_seed, i, snr_index))
            return run_session(scheme, corpus[i], net, ch, user=i % cfg.n_users, index=i)

        batch = list(pool.map(one, idx)) if pool is not None else [one(i) for i in idx]
        if any(r.knowledge_shared for r in batch):
            net = share_knowledge(net)
        net = sync_update(net, batch, period)
        results.extend(batch)
    return results


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> tuple[MetricsReport, list[dict]]:
    out = Path(cfg.output_dir)
    if write:
        _check_writable(out)
    corpus = build_corpus(cfg)
    net0 = prepare_network(cfg.n_users, cfg.vocabulary, cfg.master_seed, corpus, cfg.network)
    events: list[dict] = []
    rows = []
    pool = ThreadPoolExecutor(cfg.workers) if cfg.workers > 1 else None
    try:
        for scheme in cfg.schemes:
            for si, snr in enumerate(cfg.snr_db):
                log.info("scheme %s at %.1f dB: %d sessions", scheme, snr, len(corpus))
                for r in run_scheme(cfg, scheme, si, corpus, net0, pool):
                    row = session_metrics(r, net0.table)
                    events.extend(r.events)
                    events.append({"step": "metrics", **row})
                    rows.append(row)
    finally:
        if pool is not None:
            pool.shutdown()
    report = aggregate_rows(rows, cfg.bins)
    if write:
        write_corpus(out / "corpus.txt", corpus, cfg.vocabulary)
        write_events(out / "events.jsonl", events)
        with open(out / "config.yaml", "w", newline="\n") as f:
            yaml.safe_dump(config_to_dict(cfg), f, sort_keys=True)
        emit_report(report, out)
    return report, events


def write_events(path: str | Path, events: list[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for e in events:
            f.write(json.dumps(e, sort_keys=True) + "\n")


def read_events(path: str | Path) -> list[dict]:
    with open(path, encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


def report_from_events(events: list[dict], bins=DEFAULT_BINS) -> MetricsReport:
    return aggregate_rows((e for e in events if e.get("step") == "metrics"), bins)


def emit_report(report: MetricsReport, out_dir: str | Path, formats=("table", "records")) -> list[Path]:
    """Write ``report.csv`` (one row per scheme and SNR) and/or ``curves.jsonl``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for fmt in formats:
        if fmt == "table":
            path, text = out / "report.csv", report.table_csv()
        elif fmt == "records":
            path, text = out / "curves.jsonl", report.curves_jsonl()
        else:
            raise ConfigurationError(f"unknown report format {fmt!r}")
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        written.append(path)
    return written


__all__ = [
    "ExperimentConfig",
    "config_from_dict",
    "config_to_dict",
    "load_config",
    "build_corpus",
    "run_experiment",
    "emit_report",
    "read_events",
    "report_from_events",
]
