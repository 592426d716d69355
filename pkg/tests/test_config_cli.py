import math

import pytest
import yaml

from kgsemcom import cli
from kgsemcom.config import ConfigError, ExperimentConfig, load_config
from kgsemcom.synthetic import generate_corpus, generate_split
from kgsemcom.kg import check_disjoint, load_webnlg
from kgsemcom.training import TrainingDiverged


def test_defaults():
    cfg = ExperimentConfig()
    assert (cfg.encoder.d_z, cfg.channel.k, cfg.train.alpha, cfg.train.batch_size) == (128, 5, 0.01, 8)
    assert cfg.encoder.compression_factor == 3.0


def test_yaml_and_overrides(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("encoder:\n  d_z: 32\ntrain:\n  reference_snr_db: 10\n")
    cfg = load_config(p, ["channel.k=3", "eval.snr_grid=[0, inf]"])
    assert cfg.encoder.d_z == 32 and cfg.channel.k == 3
    assert isinstance(cfg.train.reference_snr_db, float)
    assert cfg.eval.snr_grid == [0.0, math.inf]


@pytest.mark.parametrize("override", ["train.nope=1", "encoder.variant=cnn", "train.lr=abc", "train.lr=0",
                                      "channel.k=0", "noseparator", "encoder.d_z=1.5"])
def test_bad_config(override):
    with pytest.raises(ConfigError):
        load_config(None, [override])


def test_dump_roundtrip(tmp_path):
    cfg = load_config(None, ["eval.snr_grid=[inf]", "encoder.variant=llm_ffn"])
    cfg.dump(tmp_path / "c.yaml")
    assert load_config(tmp_path / "c.yaml") == cfg
    assert yaml.safe_load((tmp_path / "c.yaml").read_text())["encoder"]["variant"] == "llm_ffn"


def test_synthetic_corpus_in_release_layout(tmp_path):
    generate_corpus(tmp_path, n_graphs=60, seed=1)
    ds = load_webnlg(tmp_path)
    assert (len(ds.train), len(ds.dev), len(ds.test)) == (48, 6, 6)
    check_disjoint(ds)
    mem = generate_split(60, seed=1)
    assert [g.nodes for g in mem.test] == [g.nodes for g in ds.test]


def test_cli_exit_codes(tmp_path, monkeypatch, capsys):
    assert cli.main(["train", "--set", "train.epochs=zero", "--out", str(tmp_path / "a")]) == cli.EXIT_CONFIG

    def boom(*args, **kwargs):
        raise TrainingDiverged("loss is nan")

    monkeypatch.setattr("kgsemcom.experiments.train_model", boom)
    rc = cli.main(["train", "--set", "data.synthetic_graphs=30", "--out", str(tmp_path / "b")])
    assert rc == cli.EXIT_DIVERGED
    assert (tmp_path / "b" / "config.yaml").exists()


def test_cli_train_eval_fig4(tmp_path):
    run = tmp_path / "run"
    common = ["--set", "data.synthetic_graphs=60", "--set", "train.epochs=1", "--set", "encoder.d_z=16"]
    assert cli.main(["train", *common, "--out", str(run)]) == 0
    for name in ("config.yaml", "metrics.csv", "checkpoint.pt", "entities.tsv", "relations.tsv"):
        assert (run / name).exists()
    assert cli.main(["eval", "--checkpoint", str(run / "checkpoint.pt"), "--snr", "0", "inf",
                     "--out", str(tmp_path / "ev")]) == 0
    assert (tmp_path / "ev" / "eval.csv").read_text().count("\n") == 3
    assert cli.main(["fig4", *common, "--out", str(tmp_path / "f4")]) == 0
    assert (tmp_path / "f4" / "fig4.csv").exists()
    assert cli.main(["baseline", *common, "--snr", "30", "--out", str(tmp_path / "bl")]) == 0


def test_cli_ingest(tmp_path):
    generate_corpus(tmp_path / "corpus", n_graphs=40, seed=2)
    assert cli.main(["ingest", "--webnlg", str(tmp_path / "corpus"), "--out", str(tmp_path / "ing")]) == 0
    assert (tmp_path / "ing" / "relations.tsv").read_text().startswith("0\tnone")
