import random

import pytest

from conftest import random_flow
from towertopk.baselines import CountMinCU, CountSketch
from towertopk.config import CONFIG_ENV, PRESETS, RunConfig, resolve_config
from towertopk.errors import ConfigError
from towertopk.hashing import DEFAULT_SEEDS, flows_to_keys, hash32
from towertopk.pipeline import TopKPipeline, run_windows, split_windows
from towertopk.pqa import PerfectPriorityQueue, PriorityQueueArray
from towertopk.tower import TowerSketch


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_build(name):
    pipe = TopKPipeline(resolve_config(name, flags={"k": 1024}))
    kinds = {"tower6": TowerSketch, "tower3": TowerSketch, "cmcu": CountMinCU, "cs": CountSketch}
    assert isinstance(pipe.sketch, kinds[pipe.cfg.sketch])
    assert isinstance(pipe.queue, PriorityQueueArray if pipe.cfg.queue == "pqa" else PerfectPriorityQueue)


def test_default_preset_is_tower6_pqa6():
    cfg = resolve_config()
    assert (cfg.sketch, cfg.queue, cfg.slots, cfg.n_queues) == ("tower6", "pqa", 6, 256)


def test_precedence(tmp_path, monkeypatch):
    conf = tmp_path / "c.toml"
    conf.write_text('preset = "paper-cmcu"\nk = 64\nrows = 4\n[seeds]\nqueue = 7\n')
    cfg = resolve_config(config_path=conf)
    assert (cfg.sketch, cfg.k, cfg.rows, cfg.seeds["queue"]) == ("cmcu", 64, 4, 7)
    cfg = resolve_config(config_path=conf, flags={"k": 128, "rows": None})
    assert (cfg.k, cfg.rows) == (128, 4)
    cfg = resolve_config("paper-cs", conf)
    assert cfg.sketch == "cs"
    monkeypatch.setenv(CONFIG_ENV, str(conf))
    assert resolve_config().k == 64


@pytest.mark.parametrize("flags", [{"k": 2000}, {"sketch": "bloom"}, {"queues": 3}, {"k": 4096, "queues": 16},
                                   {"window": 0}, {"bogus": 1}])
def test_config_errors(flags):
    with pytest.raises(ConfigError):
        resolve_config(flags=flags)


def test_bad_tower_geometry_is_config_error():
    with pytest.raises(ConfigError):
        TopKPipeline(RunConfig(sketch="tower6", m=100))


def test_reuse_row0_hash():
    cfg = RunConfig(reuse_row0_hash=True, k=16)
    pipe = TopKPipeline(cfg)
    assert pipe.hash_seed == DEFAULT_SEEDS["row0"] == pipe.queue.seed
    assert TopKPipeline(RunConfig(k=16)).hash_seed == DEFAULT_SEEDS["queue"]


def test_pipeline_small_stream():
    rng = random.Random(0)
    a, b = random_flow(rng), random_flow(rng)
    pipe = TopKPipeline(RunConfig(queue="ppq", k=2))
    pipe.process(flows_to_keys([a, a, b]))
    seed = pipe.hash_seed
    assert pipe.report().entries == [(hash32(a, seed), 2), (hash32(b, seed), 1)]


def test_windows_reset_state():
    rng = random.Random(1)
    flows = [random_flow(rng) for _ in range(10)]
    stream = [rng.choice(flows) for _ in range(250)]
    cfg = RunConfig(queue="ppq", k=4, window=100)
    windows = run_windows(cfg, stream)
    assert [w.packets for w in windows] == [100, 100, 50]
    for w, part in zip(windows, split_windows(flows_to_keys(stream), 100)):
        alone = TopKPipeline(RunConfig(queue="ppq", k=4))
        alone.process(part)
        assert w.report == alone.report()
    # iterator and array inputs agree
    assert [w.report for w in run_windows(cfg, flows_to_keys(stream))] == [w.report for w in windows]


def test_empty_stream_gives_one_empty_window():
    windows = run_windows(RunConfig(k=8), [])
    assert len(windows) == 1 and len(windows[0].report) == 0
