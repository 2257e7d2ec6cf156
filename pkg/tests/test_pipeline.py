import math

import pytest

from bayestomo.data import DataFormatError
from bayestomo.pipeline import ReplicationConfig, StageError, format_table, replicate_table1
from bayestomo.sampler import SamplerConfig

SMALL = SamplerConfig(iterations=6000, burn_in=2000, n_chains=2)


def test_vacuum_purity_concentrates_at_one():
    cfg = ReplicationConfig(seed=4, truth=(1.0, 1.0, 0.0), samples_per_setting=20_000, sampler=SMALL)
    report, art = replicate_table1(cfg)
    post = art["purity"]
    assert abs(post.mean - 1) <= 3 * post.std
    assert report["purity"]["at_truth"] == pytest.approx(1.0, abs=1e-12)
    # the phase noise of a vacuum is unidentifiable, so the Fisher cross-check is skipped
    assert all(math.isnan(s) for s in art["fisher_sigma"])


def test_report_lists_every_band():
    cfg = ReplicationConfig(seed=6, samples_per_setting=20_000, sampler=SMALL)
    report, _ = replicate_table1(cfg)
    names = [c["criterion"] for c in report["checks"]]
    assert len(names) == len(set(names)) == 11
    assert report["all_pass"] == all(c["pass"] for c in report["checks"])
    text = format_table(report)
    assert text.count("[PASS]") + text.count("[FAIL]") == 11


def test_corrupted_dataset_names_stage(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(StageError) as info:
        replicate_table1(ReplicationConfig(dataset_path=str(bad), sampler=SMALL))
    assert info.value.stage == "load-dataset"
    assert isinstance(info.value.cause, DataFormatError)
