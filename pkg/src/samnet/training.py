"""Training loop, evaluation, and metrics emission.

Training is single-threaded and fully seeded: episodes stream from the
generator, gradients accumulate over a batch of independent per-episode
tapes, and an Adam step with global-norm clipping updates the parameters.
Identical configs and seeds therefore produce byte-identical checkpoints
and metrics files.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import tensor as T
from .cell import ModelConfig, SAMNet
from .checkpoint import load_checkpoint, save_checkpoint
from .minicog import (
    ANSWERS,
    EpisodeConfig,
    VOCABULARY,
    episode_stream,
    generate_corpus,
    parse_task_family,
    read_corpus,
)

METRIC_BASE_COLUMNS = ("step", "split", "loss", "accuracy", "seconds")


class NonFiniteLossError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    # model
    d: int = 128
    reasoning_steps: int = 8
    mem_slots: int = 8
    gate_mode: str = "softmax"
    gate_hidden: int = 0
    memory_enabled: bool = True
    # optimizer
    learning_rate: float = 1e-4
    batch_size: int = 32
    max_steps: int = 1000
    grad_clip: float = 10.0
    # data
    grid_height: int = 5
    grid_width: int = 5
    frames: int = 4
    history: int = 3
    distractors: int = 1
    max_objects: int = 6
    family: str = "any"
    task_family: str = "all"
    # evaluation
    eval_every: int = 200
    val_episodes: int = 500
    # seeds
    init_seed: int = 0
    data_seed: int = 1
    val_seed: int = 2
    # output
    out_dir: str = "runs/default"

    def episode_config(self) -> EpisodeConfig:
        return EpisodeConfig(
            height=self.grid_height, width=self.grid_width, frames=self.frames,
            history=self.history, distractors=self.distractors,
            max_objects=self.max_objects, family_name=self.family,
        )

    def model_config(self) -> ModelConfig:
        return ModelConfig(
            vocab_size=len(VOCABULARY), num_answers=len(ANSWERS),
            in_channels=1 + 8 + 6, d=self.d, steps=self.reasoning_steps,
            mem_slots=self.mem_slots, gate_mode=self.gate_mode,
            gate_hidden=self.gate_hidden, memory_enabled=self.memory_enabled,
        )

    def task_family_weights(self) -> dict[str, float]:
        return parse_task_family(self.task_family)

    def to_kv(self) -> dict[str, str]:
        return {f.name: str(getattr(self, f.name)) for f in fields(self)}

    @staticmethod
    def from_kv(kv: dict[str, str]) -> "TrainConfig":
        cfg = TrainConfig()
        out = {}
        for f in fields(TrainConfig):
            if f.name not in kv:
                continue
            raw = kv[f.name]
            if f.type == "bool":
                out[f.name] = raw.strip().lower() in ("1", "true", "yes")
            elif f.type == "int":
                out[f.name] = int(raw)
            elif f.type == "float":
                out[f.name] = float(raw)
            else:
                out[f.name] = raw
        return replace(cfg, **out)


PRESETS: dict[str, dict[str, str]] = {
    # canonical-variant analog at desk scale: 4 frames / history 3 / 1 distractor
    "toy-canonical": {
        "d": "64", "reasoning_steps": "4", "mem_slots": "4",
        "grid_height": "5", "grid_width": "5", "frames": "4", "history": "3",
        "distractors": "1", "max_objects": "6",
        "learning_rate": "0.0006", "batch_size": "32", "max_steps": "1200",
        "eval_every": "150", "val_episodes": "500",
    },
    # hard-variant analog: 8 frames / history 7 / more distractors, bigger grid
    "toy-hard": {
        "d": "64", "reasoning_steps": "4", "mem_slots": "8",
        "grid_height": "6", "grid_width": "6", "frames": "8", "history": "7",
        "distractors": "4", "max_objects": "10",
        "learning_rate": "0.0006", "batch_size": "32", "max_steps": "2400",
        "eval_every": "300", "val_episodes": "500",
    },
}


def read_kv_file(path) -> dict[str, str]:
    """Key-value text file: `key = value` lines, '#' comments."""
    kv: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            kv[key.strip()] = value.strip()
    return kv


def config_from_kv(kv: dict[str, str], extra_keys=()) -> tuple[TrainConfig, dict]:
    """Build a TrainConfig from raw key-values; preset keys expand first.

    Keys listed in `extra_keys` are split off and returned separately;
    anything else unknown is an error.
    """
    kv = dict(kv)
    extras = {k: kv.pop(k) for k in list(kv) if k in set(extra_keys)}
    merged: dict[str, str] = {}
    preset = kv.pop("preset", None)
    if preset is not None:
        if preset not in PRESETS:
            raise ValueError(f"unknown preset {preset!r} (have {sorted(PRESETS)})")
        merged.update(PRESETS[preset])
    known = {f.name for f in fields(TrainConfig)}
    unknown = sorted(set(kv) - known)
    if unknown:
        raise ValueError(f"unknown config keys {unknown}")
    merged.update(kv)
    return TrainConfig.from_kv(merged), extras


def parse_config_file(path) -> TrainConfig:
    """Strict TrainConfig from a key-value file, with optional preset line."""
    cfg, _ = config_from_kv(read_kv_file(path))
    return cfg


def config_from_preset(name: str, **overrides) -> TrainConfig:
    cfg = TrainConfig.from_kv(PRESETS[name])
    return replace(cfg, **overrides) if overrides else cfg


class Adam:
    """Adaptive moment estimation with bias correction."""

    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self, grads) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bias1 = 1.0 - b1 ** self.t
        bias2 = 1.0 - b2 ** self.t
        for i, (p, g) in enumerate(zip(self.params, grads)):
            self.m[i] = b1 * self.m[i] + (1 - b1) * g
            self.v[i] = b2 * self.v[i] + (1 - b2) * (g * g)
            m_hat = self.m[i] / bias1
            v_hat = self.v[i] / bias2
            p.value.data = p.data - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def clip_global_norm(grads, max_norm: float):
    total = float(sum(float((g * g).sum()) for g in grads))
    norm = total ** 0.5
    if norm > max_norm > 0:
        scale = max_norm / norm
        grads = [g * scale for g in grads]
    return grads, norm


@dataclass
class EvalResult:
    loss: float
    accuracy: float
    per_class: dict[str, float]
    seconds: float

    def per_class_sorted(self):
        return dict(sorted(self.per_class.items()))


def evaluate_episodes(model: SAMNet, episodes, n_slots=None,
                      gate_overrides=None) -> EvalResult:
    """Frame-level accuracy and mean loss over a fixed episode list."""
    t0 = time.perf_counter()
    total_loss = 0.0
    correct = 0
    frames = 0
    per_class_hit: dict[str, int] = {}
    per_class_n: dict[str, int] = {}
    for ep in episodes:
        grids = ep.frames_symbolic()
        answers = np.asarray(ep.answer_ids)
        with T.no_grad():
            logits = model.episode_forward(
                ep.token_ids, grids, n_slots=n_slots,
                gate_overrides=gate_overrides,
            ).data
        shifted = logits - logits.max(axis=1, keepdims=True)
        logp = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        total_loss += float(-logp[np.arange(len(answers)), answers].mean())
        pred = logits.argmax(axis=1)
        hits = int((pred == answers).sum())
        correct += hits
        frames += len(answers)
        cls = ep.program.task_class
        per_class_hit[cls] = per_class_hit.get(cls, 0) + hits
        per_class_n[cls] = per_class_n.get(cls, 0) + len(answers)
    per_class = {
        cls: per_class_hit[cls] / per_class_n[cls] for cls in per_class_n
    }
    return EvalResult(
        loss=total_loss / max(1, len(episodes)),
        accuracy=correct / max(1, frames),
        per_class=per_class,
        seconds=time.perf_counter() - t0,
    )


def majority_class_rate(episodes) -> float:
    """Frequency of the most common frame answer; the trivial baseline."""
    counts: dict[int, int] = {}
    total = 0
    for ep in episodes:
        for a in ep.answer_ids:
            counts[a] = counts.get(a, 0) + 1
            total += 1
    return max(counts.values()) / total if total else 0.0


class MetricsWriter:
    """Append-only CSV, one row per evaluation, step-monotone."""

    def __init__(self, path, task_classes):
        self.path = path
        self.classes = sorted(task_classes)
        self.last_step = -1
        with open(path, "w", encoding="utf-8") as fh:
            cols = list(METRIC_BASE_COLUMNS) + [f"acc_{c}" for c in self.classes]
            fh.write(",".join(cols) + "\n")

    def append(self, step: int, split: str, result: EvalResult) -> None:
        if step < self.last_step:
            raise ValueError(f"metrics step going backwards: {step}")
        self.last_step = step
        row = [str(step), split, f"{result.loss:.6f}", f"{result.accuracy:.6f}",
               f"{result.seconds:.3f}"]
        row += [
            f"{result.per_class[c]:.6f}" if c in result.per_class else ""
            for c in self.classes
        ]
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(",".join(row) + "\n")


def _checkpoint_hypers(model: SAMNet, cfg: TrainConfig, step: int) -> dict[str, str]:
    hypers = model.hyper_manifest()
    for key, value in cfg.to_kv().items():
        hypers[f"cfg.{key}"] = value
    hypers["trained_steps"] = str(step)
    return hypers


def save_model(path, model: SAMNet, cfg: TrainConfig, step: int) -> None:
    save_checkpoint(path, model.store.state_arrays(),
                    _checkpoint_hypers(model, cfg, step))


def load_model(path):
    """Rebuild a model from a checkpoint; returns (model, hypers)."""
    arrays, hypers, _ = load_checkpoint(path)
    model = SAMNet(SAMNet.config_from_hypers(hypers), init_seed=0)
    model.store.load_arrays(arrays)
    return model, hypers


@dataclass
class TrainResult:
    final_checkpoint: str
    best_checkpoint: str
    metrics_path: str
    steps: int
    best_accuracy: float
    history: list = field(default_factory=list)


def train(cfg: TrainConfig, log=None, deterministic: bool = False,
          init_from: str | None = None) -> TrainResult:
    """Train per config; writes final/best checkpoints and a metrics CSV.

    Training is always sequential and seeded; `deterministic` additionally
    zeroes the wall-clock column of the metrics file so two identical runs
    produce byte-identical outputs. `init_from` warm-starts from an existing
    checkpoint with the same architecture (used for fine-tuning).
    """
    os.makedirs(cfg.out_dir, exist_ok=True)
    episode_cfg = cfg.episode_config()
    family = cfg.task_family_weights()
    model = SAMNet(cfg.model_config(), init_seed=cfg.init_seed)
    if init_from is not None:
        arrays, _, _ = load_checkpoint(init_from)
        model.store.load_arrays(arrays)
    optimizer = Adam(model.store.parameters(), lr=cfg.learning_rate)
    params = optimizer.params

    val_episodes = generate_corpus(episode_cfg, family, cfg.val_episodes,
                                   seed=cfg.val_seed)
    metrics = MetricsWriter(os.path.join(cfg.out_dir, "metrics.csv"), family)
    final_path = os.path.join(cfg.out_dir, "final.ckpt")
    best_path = os.path.join(cfg.out_dir, "best.ckpt")

    save_model(final_path, model, cfg, 0)
    save_model(best_path, model, cfg, 0)
    best_accuracy = -1.0
    history = []
    stream = episode_stream(episode_cfg, family, cfg.data_seed)
    episode_index = 0

    def run_eval(step):
        nonlocal best_accuracy
        result = evaluate_episodes(model, val_episodes)
        if deterministic:
            result.seconds = 0.0
        metrics.append(step, "val", result)
        save_model(final_path, model, cfg, step)
        if result.accuracy > best_accuracy:
            best_accuracy = result.accuracy
            save_model(best_path, model, cfg, step)
        history.append((step, result.accuracy, result.loss))
        if log:
            log(f"step {step}: val loss {result.loss:.4f} "
                f"acc {result.accuracy:.4f}")
        return result

    for step in range(1, cfg.max_steps + 1):
        model.store.zero_grad()
        batch_first = episode_index
        batch_loss = 0.0
        try:
            for _ in range(cfg.batch_size):
                ep = next(stream)
                episode_index += 1
                loss = model.episode_loss(ep.token_ids, ep.frames_symbolic(),
                                          ep.answer_ids)
                batch_loss += loss.item()
                loss.backward()
        except ValueError as exc:
            if "non-finite" not in str(exc):
                raise
            batch_loss = float("nan")
        if not np.isfinite(batch_loss):
            raise NonFiniteLossError(
                f"non-finite loss at step {step}; batch episode seeds "
                f"[{cfg.data_seed}, {batch_first}..{episode_index - 1}]; "
                f"last good checkpoint kept at {final_path}"
            )
        grads = [
            (p.grad if p.grad is not None else np.zeros_like(p.data))
            / cfg.batch_size
            for p in params
        ]
        grads, _ = clip_global_norm(grads, cfg.grad_clip)
        optimizer.step(grads)
        if cfg.eval_every and step % cfg.eval_every == 0:
            try:
                run_eval(step)
            except ValueError as exc:
                if "non-finite" not in str(exc):
                    raise
                raise NonFiniteLossError(
                    f"non-finite values after step {step}; batch episode "
                    f"seeds [{cfg.data_seed}, {batch_first}..{episode_index - 1}]; "
                    f"last good checkpoint kept at {final_path}"
                ) from exc

    last_evaluated = cfg.eval_every and cfg.max_steps % cfg.eval_every == 0
    if cfg.max_steps > 0 and not last_evaluated:
        run_eval(cfg.max_steps)
    return TrainResult(
        final_checkpoint=final_path, best_checkpoint=best_path,
        metrics_path=metrics.path, steps=cfg.max_steps,
        best_accuracy=best_accuracy, history=history,
    )


def load_eval_data(spec_path):
    """Evaluation data: a corpus file, or a config file describing one."""
    with open(spec_path, encoding="utf-8") as fh:
        first = fh.readline().strip()
    if first.startswith("{"):
        episodes, _ = read_corpus(spec_path)
        return episodes
    cfg = parse_config_file(spec_path)
    return generate_corpus(cfg.episode_config(), cfg.task_family_weights(),
                           cfg.val_episodes, seed=cfg.val_seed)


def evaluate_checkpoint(ckpt_path, episodes, n_slots=None,
                        gate_overrides=None):
    model, hypers = load_model(ckpt_path)
    result = evaluate_episodes(model, episodes, n_slots=n_slots,
                               gate_overrides=gate_overrides)
    return result, hypers
