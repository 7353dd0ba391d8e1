import os

import numpy as np
import pytest

from samnet.checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from samnet.minicog import generate_corpus
from samnet.training import (
    Adam,
    NonFiniteLossError,
    TrainConfig,
    clip_global_norm,
    config_from_kv,
    evaluate_checkpoint,
    evaluate_episodes,
    load_eval_data,
    load_model,
    majority_class_rate,
    parse_config_file,
    train,
)


def tiny_cfg(out_dir, **kw):
    base = dict(
        d=16, reasoning_steps=2, mem_slots=3,
        grid_height=3, grid_width=3, frames=2, history=1, distractors=1,
        max_objects=4, task_family="Basic",
        learning_rate=3e-4, batch_size=4, max_steps=4, eval_every=2,
        val_episodes=12, out_dir=str(out_dir),
    )
    base.update(kw)
    return TrainConfig(**base)


class TestConfig:
    def test_round_trip_through_kv(self):
        cfg = tiny_cfg("x", memory_enabled=False)
        cfg2, _ = config_from_kv(cfg.to_kv())
        assert cfg2 == cfg

    def test_config_file_with_preset_and_overrides(self, tmp_path):
        p = tmp_path / "c.conf"
        p.write_text(
            "# comment\npreset = toy-canonical\nmax_steps = 7\n"
            "task_family = Basic\n"
        )
        cfg = parse_config_file(p)
        assert cfg.d == 64
        assert cfg.max_steps == 7
        assert cfg.frames == 4 and cfg.history == 3 and cfg.distractors == 1

    def test_unknown_key_rejected(self, tmp_path):
        p = tmp_path / "c.conf"
        p.write_text("bogus = 1\n")
        with pytest.raises(ValueError, match="bogus"):
            parse_config_file(p)

    def test_unknown_preset_rejected(self, tmp_path):
        p = tmp_path / "c.conf"
        p.write_text("preset = nope\n")
        with pytest.raises(ValueError, match="nope"):
            parse_config_file(p)


class TestOptimizer:
    def test_adam_minimizes_quadratic(self):
        from samnet.params import ParameterStore
        store = ParameterStore(np.random.default_rng(0))
        x = store.new("x", (3,))
        x.data = np.array([5.0, -3.0, 2.0], dtype=np.float32)
        opt = Adam(store.parameters(), lr=0.1)
        for _ in range(200):
            grads = [2.0 * x.data]
            opt.step(grads)
        assert np.abs(x.data).max() < 1e-2

    def test_clip_global_norm(self):
        grads = [np.array([3.0, 4.0])]
        clipped, norm = clip_global_norm(grads, 1.0)
        assert norm == pytest.approx(5.0)
        assert np.linalg.norm(clipped[0]) == pytest.approx(1.0)
        same, norm2 = clip_global_norm(grads, 10.0)
        assert norm2 == pytest.approx(5.0)
        assert np.array_equal(same[0], grads[0])


class TestTraining:
    def test_zero_steps_emits_initial_checkpoint_and_no_rows(self, tmp_path):
        cfg = tiny_cfg(tmp_path / "run", max_steps=0)
        result = train(cfg)
        assert os.path.exists(result.final_checkpoint)
        lines = open(result.metrics_path).read().splitlines()
        assert len(lines) == 1  # header only
        assert lines[0].startswith("step,split,loss,accuracy,seconds")

    def test_metrics_columns_cover_family_classes(self, tmp_path):
        cfg = tiny_cfg(tmp_path / "run")
        result = train(cfg)
        header = open(result.metrics_path).read().splitlines()[0].split(",")
        for cls in ("Exist", "ExistColor", "ExistShape", "GetColor", "GetShape"):
            assert f"acc_{cls}" in header

    def test_deterministic_reruns_byte_identical(self, tmp_path):
        cfg = tiny_cfg(tmp_path / "run", max_steps=4)
        ra = train(cfg, deterministic=True)
        first_ckpt = open(ra.final_checkpoint, "rb").read()
        first_metrics = open(ra.metrics_path).read()
        rb = train(cfg, deterministic=True)  # same config, same out_dir
        assert open(rb.final_checkpoint, "rb").read() == first_ckpt
        assert open(rb.metrics_path).read() == first_metrics

    def test_non_finite_loss_aborts_with_diagnostic(self, tmp_path):
        cfg = tiny_cfg(tmp_path / "run", learning_rate=1e8, max_steps=50,
                       eval_every=1)
        with pytest.raises(NonFiniteLossError, match="episode seeds"):
            with np.errstate(all="ignore"):
                train(cfg)
        # last-good checkpoint still loads
        model, _ = load_model(str(tmp_path / "run" / "final.ckpt"))
        assert model is not None

    def test_checkpoint_round_trip_evaluation_bit_identical(self, tmp_path):
        cfg = tiny_cfg(tmp_path / "run")
        result = train(cfg)
        episodes = generate_corpus(cfg.episode_config(),
                                   cfg.task_family_weights(), 20, seed=9)
        model, _ = load_model(result.final_checkpoint)
        direct = evaluate_episodes(model, episodes)
        reloaded, _ = evaluate_checkpoint(result.final_checkpoint, episodes)
        assert direct.accuracy == reloaded.accuracy
        assert direct.loss == reloaded.loss

    def test_mem_slot_override_executes(self, tmp_path):
        cfg = tiny_cfg(tmp_path / "run")
        result = train(cfg)
        episodes = generate_corpus(cfg.episode_config(),
                                   cfg.task_family_weights(), 10, seed=4)
        bigger, _ = evaluate_checkpoint(result.final_checkpoint, episodes,
                                        n_slots=8)
        assert 0.0 <= bigger.accuracy <= 1.0

    def test_per_class_map_covers_present_classes(self, tmp_path):
        cfg = tiny_cfg(tmp_path / "run")
        result = train(cfg)
        episodes = generate_corpus(cfg.episode_config(),
                                   {"Exist": 1.0, "GetColor": 1.0}, 30, seed=5)
        res, _ = evaluate_checkpoint(result.final_checkpoint, episodes)
        assert set(res.per_class) == {"Exist", "GetColor"}

    def test_warm_start_from_checkpoint(self, tmp_path):
        cfg = tiny_cfg(tmp_path / "run")
        result = train(cfg)
        cfg2 = tiny_cfg(tmp_path / "run2", max_steps=1)
        result2 = train(cfg2, init_from=result.final_checkpoint)
        assert os.path.exists(result2.final_checkpoint)


class TestEvalData:
    def test_load_from_corpus_file(self, tmp_path):
        from samnet.minicog import EpisodeConfig, write_corpus
        cfg = EpisodeConfig(height=3, width=3, frames=2, history=1,
                            max_objects=4)
        fam = {"Exist": 1.0}
        episodes = generate_corpus(cfg, fam, 8, seed=1)
        path = tmp_path / "c.jsonl"
        write_corpus(path, episodes, cfg, fam, seed=1)
        loaded = load_eval_data(path)
        assert len(loaded) == 8

    def test_load_from_config_file(self, tmp_path):
        p = tmp_path / "data.conf"
        p.write_text(
            "grid_height = 3\ngrid_width = 3\nframes = 2\nhistory = 1\n"
            "max_objects = 4\ntask_family = Basic\nval_episodes = 6\n"
            "val_seed = 11\n"
        )
        episodes = load_eval_data(p)
        assert len(episodes) == 6

    def test_majority_class_rate(self):
        from samnet.minicog import EpisodeConfig
        cfg = EpisodeConfig(height=3, width=3, frames=2, history=1,
                            max_objects=4)
        episodes = generate_corpus(cfg, {"Exist": 1.0}, 50, seed=2)
        rate = majority_class_rate(episodes)
        assert 0.3 <= rate <= 0.8


class TestCheckpointFormat:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        arrays = {
            "a.w": rng.normal(size=(3, 4)).astype(np.float32),
            "b.v": rng.normal(size=(7,)).astype(np.float32),
        }
        path = tmp_path / "m.ckpt"
        save_checkpoint(path, arrays, {"d": "16", "gate_mode": "softmax"})
        loaded, hypers, manifest = load_checkpoint(path)
        assert hypers["d"] == "16"
        assert manifest.startswith("SAMCKPT v1\n")
        for name in arrays:
            assert np.array_equal(loaded[name], arrays[name])

    def test_magic_line_checked(self, tmp_path):
        path = tmp_path / "bad.ckpt"
        path.write_bytes(b"NOTACKPT\n")
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_truncated_data_detected(self, tmp_path):
        path = tmp_path / "m.ckpt"
        save_checkpoint(path, {"w": np.zeros(4, dtype=np.float32)}, {})
        raw = path.read_bytes()
        path.write_bytes(raw[:-3])
        with pytest.raises(CheckpointError, match="data section"):
            load_checkpoint(path)

    def test_manifest_mismatch_lists_names(self, tmp_path):
        cfg = tiny_cfg(tmp_path / "run", max_steps=0)
        result = train(cfg)
        arrays, hypers, _ = load_checkpoint(result.final_checkpoint)
        del arrays["answer.w1"]
        arrays["rogue.extra"] = np.zeros(2, dtype=np.float32)
        path = tmp_path / "patched.ckpt"
        save_checkpoint(path, arrays, hypers)
        with pytest.raises(KeyError, match="answer.w1"):
            load_model(path)
