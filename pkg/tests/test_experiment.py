import dataclasses
from dataclasses import fields

import pytest
import yaml

from gaiscn.cli import main
from gaiscn.errors import ConfigurationError
from gaiscn.experiment import (
    SECTIONS,
    ExperimentConfig,
    config_from_dict,
    config_to_dict,
    load_config,
    read_events,
    report_from_events,
    run_experiment,
)
from gaiscn.semantic import ProtectionProfile
from gaiscn.workflow import NetworkSettings

# every knob the modules document as a tunable, as (section, key)
TUNABLES = [
    ("corpus", "size"),
    ("corpus", "object_count_range"),
    ("corpus", "path"),
    ("vocabulary", "classes"),
    ("vocabulary", "palette"),
    ("vocabulary", "size_levels"),
    ("channel", "snr_db"),
    ("experiment", "master_seed"),
    ("experiment", "schemes"),
    ("experiment", "n_users"),
    ("experiment", "workers"),
    ("experiment", "bins"),
    ("output", "dir"),
    ("network", "canvas"),
    ("network", "resolution"),
    ("network", "k"),
    ("network", "service_kind"),
    ("network", "jitter"),
    ("network", "calibration_tolerance"),
    ("network", "sync_period"),
    ("network", "history_capacity"),
    ("network", "preference_fraction"),
    ("network", "robust_below_db"),
    ("network", "standard_profile"),
    ("network", "robust_profile"),
    ("network", "uplink_max_attempts"),
    ("network", "payload_max_attempts"),
    ("network", "ldpc_n"),
    ("network", "ldpc_k"),
    ("network", "ldpc_seed"),
    ("network", "ldpc_max_iterations"),
    ("network", "embedding_dim"),
    ("network", "embedding_seed"),
]


def test_config_coverage():
    tree = config_to_dict(ExperimentConfig())
    for section, key in TUNABLES:
        assert key in tree[section], (section, key)
    mapped = {name for keys in SECTIONS.values() for name in keys.values()} | {"network"}
    assert mapped == {f.name for f in fields(ExperimentConfig)}


def test_config_round_trip(tmp_path):
    cfg = ExperimentConfig(
        corpus_size=12,
        snr_db=(0.0, 5.0),
        schemes=("C",),
        network=NetworkSettings(k=4, robust_profile=ProtectionProfile(7, 5, 3)),
    )
    path = tmp_path / "cfg.yaml"
    path.write_text(yaml.safe_dump(config_to_dict(cfg)))
    assert load_config(path) == cfg
    assert load_config(path, master_seed=7).master_seed == 7


def test_config_rejects_unknown_keys():
    with pytest.raises(ConfigurationError):
        config_from_dict({"channel": {"snr": 3}})
    with pytest.raises(ConfigurationError):
        config_from_dict({"weather": {}})
    with pytest.raises(ConfigurationError):
        config_from_dict({"network": {"ldpc_rate": 0.5}})
    with pytest.raises(ConfigurationError):
        ExperimentConfig(schemes=("Z",))


def test_tiny_noiseless_run():
    cfg = ExperimentConfig(corpus_size=1, schemes=("A",), snr_db=(100.0,))
    report, events = run_experiment(cfg, write=False)
    assert report.mean("A", "psnr_db") == 100.0
    assert events[-1]["step"] == "metrics"


def small(tmp_path, name, **kw):
    return ExperimentConfig(corpus_size=24, snr_db=(0.0, 5.0), output_dir=str(tmp_path / name), **kw)


def test_outputs_identical_across_runs_and_workers(tmp_path):
    outs = []
    for name, workers in (("a", 1), ("b", 1), ("c", 4)):
        cfg = small(tmp_path, name, workers=workers)
        run_experiment(cfg)
        outs.append(cfg.output_dir)
    for f in ("events.jsonl", "report.csv", "curves.jsonl", "corpus.txt"):
        data = [open(f"{o}/{f}", "rb").read() for o in outs]
        assert data[0] == data[1] == data[2], f


def test_report_rebuilt_from_events(tmp_path):
    cfg = small(tmp_path, "r")
    report, events = run_experiment(cfg)
    again = report_from_events(read_events(f"{cfg.output_dir}/events.jsonl"), cfg.bins)
    assert again.table_csv() == report.table_csv()


def test_corpus_path_is_used(tmp_path):
    cfg = small(tmp_path, "p", schemes=("B",))
    run_experiment(cfg)
    from_file = dataclasses.replace(cfg, corpus_path=f"{cfg.output_dir}/corpus.txt", corpus_size=1, output_dir=str(tmp_path / "q"))
    r1, _ = run_experiment(cfg, write=False)
    r2, _ = run_experiment(from_file, write=False)
    assert r1.table_csv() == r2.table_csv()


def test_unwritable_output_fails_before_running(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    cfg = ExperimentConfig(corpus_size=2, output_dir=str(blocker / "out"))
    with pytest.raises(OSError):
        run_experiment(cfg)


def test_cli_round_trip(tmp_path, capsys):
    cfg_path = tmp_path / "c.yaml"
    cfg_path.write_text(yaml.safe_dump({"corpus": {"size": 12}, "channel": {"snr_db": [0.0]}}))
    out = tmp_path / "run"
    assert main(["run", "-c", str(cfg_path), "-o", str(out), "--schemes", "A,C", "--seed", "3"]) == 0
    table = capsys.readouterr().out
    assert table.splitlines()[0].startswith("scheme,snr_db")
    assert len(table.splitlines()) == 3
    saved = yaml.safe_load((out / "config.yaml").read_text())
    assert saved["experiment"]["master_seed"] == 3

    assert main(["report", str(out / "events.jsonl"), "-c", str(cfg_path)]) == 0
    assert capsys.readouterr().out == table

    corpus = tmp_path / "corpus.txt"
    assert main(["corpus", "generate", str(corpus), "--size", "5", "--seed", "1"]) == 0
    assert main(["corpus", "inspect", str(corpus)]) == 0
    text = capsys.readouterr().out
    assert "scenes: 5" in text and "round-trip ok" in text
