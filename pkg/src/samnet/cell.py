"""The selective-attention memory cell and the full recurrent model.

Each frame is processed by T unrolled reasoning steps. A step attends over
the question to pick a control state, classifies its temporal context,
retrieves candidate objects from the frame and from the external slot
memory, turns the attention localization scores into gating decisions, and
then applies gated memory writes and a summary-object update. Information
crosses frame boundaries only through the slot memory and its write head.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .encoders import FrameEncoder, QuestionEncoder
from .params import ParameterStore
from .tensor import Tensor

TEMPORAL_CLASSES = ("last", "latest", "now", "none")


@dataclass
class ModelConfig:
    vocab_size: int
    num_answers: int
    in_channels: int
    d: int = 128
    steps: int = 8
    mem_slots: int = 8
    gate_mode: str = "softmax"  # "softmax" | "sigmoid"
    gate_hidden: int = 0  # 0 means use d
    memory_enabled: bool = True

    def __post_init__(self):
        if self.gate_mode not in ("softmax", "sigmoid"):
            raise ValueError(f"unknown gate_mode {self.gate_mode!r}")
        if self.gate_hidden == 0:
            self.gate_hidden = self.d


@dataclass
class MemoryState:
    """Slot matrix plus the write head pointing at the next free slot."""

    m: Tensor  # (N, d)
    wh: Tensor  # (N,) distribution

    @classmethod
    def initial(cls, n_slots: int, d: int) -> "MemoryState":
        return cls(m=T.zeros((n_slots, d)), wh=T.one_hot(0, n_slots))


@dataclass
class CellState:
    c: Tensor  # (d,) control state
    so: Tensor  # (d,) summary object


@dataclass
class Gates:
    g_v: Tensor  # scalar in [0, 1]
    g_m: Tensor
    h_r: Tensor
    h_a: Tensor
    h_none: Tensor


@dataclass
class StepTrace:
    """Attention vectors and gates recorded for inspection."""

    qa: np.ndarray
    tau: np.ndarray
    va: np.ndarray
    rh: np.ndarray
    gates: dict
    w: np.ndarray
    wh: np.ndarray


def _check_distribution(vec: Tensor, name: str) -> None:
    if not T.DEBUG_CHECKS:
        return
    data = vec.data
    if data.min() < -1e-6 or abs(float(data.sum()) - 1.0) > 1e-6:
        raise AssertionError(f"{name} is not a distribution: {data}")


def memory_update(m_prev: Tensor, wh_prev: Tensor, rh: Tensor, vo: Tensor,
                  h_r: Tensor, h_a: Tensor):
    """Gated overwrite of memory rows.

    w = h_r * rh + h_a * wh_prev picks the write location softly; every row
    of the result is a convex blend (1 - w_i) * old_row + w_i * vo. A zero w
    leaves memory untouched.
    """
    n = m_prev.shape[0]
    if wh_prev.shape != (n,) or rh.shape != (n,):
        raise T.ShapeError(
            f"write vectors must have length {n}, got rh {rh.shape}, wh {wh_prev.shape}"
        )
    w = T.add(T.mul(h_r, rh), T.mul(h_a, wh_prev))
    w_col = T.reshape(w, (n, 1))
    keep = T.mul(m_prev, T.sub(1.0, w_col))
    write = T.matmul(w_col, T.reshape(vo, (1, vo.shape[0])))
    return T.add(keep, write), w


def write_head_update(wh_prev: Tensor, h_a: Tensor) -> Tensor:
    """Advance the write head by a soft circular right-shift when appending."""
    shifted = T.roll1(wh_prev)
    return T.add(T.mul(h_a, shifted), T.mul(T.sub(1.0, h_a), wh_prev))


class QuestionDrivenController:
    """Per-step attention over contextual words producing the control state."""

    def __init__(self, store: ParameterStore, d: int, steps: int, prefix="cell.control"):
        self.d = d
        self.steps = steps
        self.q_step = [
            (
                store.new(f"{prefix}.qstep{t}.w", (d, d), fan_in=d),
                store.new(f"{prefix}.qstep{t}.b", (d,), fan_in=0),
            )
            for t in range(1, steps + 1)
        ]
        self.merge_w = store.new(f"{prefix}.merge.w", (2 * d, d), fan_in=2 * d)
        self.merge_b = store.new(f"{prefix}.merge.b", (d,), fan_in=0)
        self.attn_u = store.new(f"{prefix}.attn.u", (d,), fan_in=d)

    def step(self, q: Tensor, cw: Tensor, c_prev: Tensor, t: int):
        if not 1 <= t <= self.steps:
            raise ValueError(f"step index {t} outside [1, {self.steps}]")
        w, b = self.q_step[t - 1]
        q_t = T.add(T.matmul(q, w), b)
        cq = T.add(T.matmul(T.concat([q_t, c_prev]), self.merge_w), self.merge_b)
        # u . (cq * cw_i) == cw_i . (u * cq), so one matvec gives all logits
        logits = T.matmul(cw, T.mul(self.attn_u, cq))
        qa = T.softmax(logits)
        _check_distribution(qa, "question attention")
        c_t = T.matmul(qa, cw)
        return c_t, qa


class TemporalClassifier:
    """Two-layer ELU network mapping the control state to 4 temporal classes."""

    def __init__(self, store: ParameterStore, d: int, prefix="cell.temporal"):
        self.w1 = store.new(f"{prefix}.w1", (d, d), fan_in=d)
        self.b1 = store.new(f"{prefix}.b1", (d,), fan_in=0)
        self.w2 = store.new(f"{prefix}.w2", (d, len(TEMPORAL_CLASSES)), fan_in=d)
        self.b2 = store.new(f"{prefix}.b2", (len(TEMPORAL_CLASSES),), fan_in=0)

    def classify(self, c_t: Tensor) -> Tensor:
        hidden = T.elu(T.add(T.matmul(c_t, self.w1), self.b1))
        tau = T.softmax(T.add(T.matmul(hidden, self.w2), self.b2))
        _check_distribution(tau, "temporal class weights")
        return tau


class VisualRetrieval:
    """Attention of the projected control state over projected frame features."""

    def __init__(self, store: ParameterStore, d: int, prefix="cell.visual"):
        self.d = d
        self.key_w = store.new(f"{prefix}.key.w", (d, d), fan_in=d)
        self.key_b = store.new(f"{prefix}.key.b", (d,), fan_in=0)
        self.value_w = store.new(f"{prefix}.value.w", (d, d), fan_in=d)
        self.value_b = store.new(f"{prefix}.value.b", (d,), fan_in=0)
        self.query_w = store.new(f"{prefix}.query.w", (d, d), fan_in=d)
        self.query_b = store.new(f"{prefix}.query.b", (d,), fan_in=0)

    def project(self, feature_rows: Tensor):
        keys = T.add(T.matmul(feature_rows, self.key_w), self.key_b)
        values = T.add(T.matmul(feature_rows, self.value_w), self.value_b)
        return keys, values

    def retrieve(self, keys: Tensor, values: Tensor, c_t: Tensor):
        query = T.add(T.matmul(c_t, self.query_w), self.query_b)
        va, vo = T.dot_attention(query, keys, values, scale=1.0 / math.sqrt(self.d))
        _check_distribution(va, "visual attention")
        return vo, va

    def retrieve_from_features(self, feature_rows: Tensor, c_t: Tensor):
        keys, values = self.project(feature_rows)
        return self.retrieve(keys, values, c_t)


class MemoryRetrieval:
    """Content-based addressing: the read head over raw memory rows."""

    def __init__(self, store: ParameterStore, d: int, prefix="cell.memread"):
        self.d = d
        self.query_w = store.new(f"{prefix}.query.w", (d, d), fan_in=d)
        self.query_b = store.new(f"{prefix}.query.b", (d,), fan_in=0)

    def retrieve(self, m: Tensor, c_t: Tensor):
        query = T.add(T.matmul(c_t, self.query_w), self.query_b)
        rh, mo = T.dot_attention(query, m, m, scale=1.0 / math.sqrt(self.d))
        _check_distribution(rh, "read head")
        return mo, rh


class GateNetwork:
    """3-layer ELU classifier from (vs, rs, tau) to the gating values.

    g_v and g_m are independent sigmoids. The write gates default to a
    3-way softmax (h_r, h_a, h_none) so that h_r + h_a <= 1 holds by
    construction; "sigmoid" mode drops that guarantee for ablations.
    """

    def __init__(self, store: ParameterStore, hidden: int, mode: str = "softmax",
                 prefix="cell.gates"):
        self.mode = mode
        self.w1 = store.new(f"{prefix}.w1", (6, hidden), fan_in=6)
        self.b1 = store.new(f"{prefix}.b1", (hidden,), fan_in=0)
        self.w2 = store.new(f"{prefix}.w2", (hidden, hidden), fan_in=hidden)
        self.b2 = store.new(f"{prefix}.b2", (hidden,), fan_in=0)
        self.obj_w = store.new(f"{prefix}.obj.w", (hidden, 2), fan_in=hidden)
        self.obj_b = store.new(f"{prefix}.obj.b", (2,), fan_in=0)
        n_write = 3 if mode == "softmax" else 2
        self.write_w = store.new(f"{prefix}.write.w", (hidden, n_write), fan_in=hidden)
        self.write_b = store.new(f"{prefix}.write.b", (n_write,), fan_in=0)

    def gates(self, vs: Tensor, rs: Tensor, tau: Tensor) -> Gates:
        x = T.concat([T.reshape(vs, (1,)), T.reshape(rs, (1,)), tau])
        h = T.elu(T.add(T.matmul(x, self.w1), self.b1))
        h = T.elu(T.add(T.matmul(h, self.w2), self.b2))
        obj = T.sigmoid(T.add(T.matmul(h, self.obj_w), self.obj_b))
        write_logits = T.add(T.matmul(h, self.write_w), self.write_b)
        if self.mode == "softmax":
            write = T.softmax(write_logits)
            h_r, h_a, h_none = write[0], write[1], write[2]
        else:
            write = T.sigmoid(write_logits)
            h_r, h_a = write[0], write[1]
            h_none = T.sub(1.0, T.add(h_r, h_a))
        return Gates(g_v=obj[0], g_m=obj[1], h_r=h_r, h_a=h_a, h_none=h_none)


class SummaryUpdate:
    """ro = g_v * vo + g_m * mo; new summary = linear([ro, so_prev])."""

    def __init__(self, store: ParameterStore, d: int, prefix="cell.summary"):
        self.w = store.new(f"{prefix}.w", (2 * d, d), fan_in=2 * d)
        self.b = store.new(f"{prefix}.b", (d,), fan_in=0)

    def update(self, vo: Tensor, mo: Tensor, g_v: Tensor, g_m: Tensor,
               so_prev: Tensor):
        ro = T.add(T.mul(g_v, vo), T.mul(g_m, mo))
        so = T.add(T.matmul(T.concat([ro, so_prev]), self.w), self.b)
        return so, ro


class AnswerHead:
    """Per-frame classifier over the answer set from (summary object, question)."""

    def __init__(self, store: ParameterStore, d: int, num_answers: int,
                 prefix="answer"):
        self.w1 = store.new(f"{prefix}.w1", (2 * d, d), fan_in=2 * d)
        self.b1 = store.new(f"{prefix}.b1", (d,), fan_in=0)
        self.w2 = store.new(f"{prefix}.w2", (d, num_answers), fan_in=d)
        self.b2 = store.new(f"{prefix}.b2", (num_answers,), fan_in=0)

    def logits(self, so: Tensor, q: Tensor) -> Tensor:
        h = T.elu(T.add(T.matmul(T.concat([so, q]), self.w1), self.b1))
        return T.add(T.matmul(h, self.w2), self.b2)


def _override_gate(value: Tensor, forced) -> Tensor:
    if forced is None:
        return value
    return T.Tensor(float(forced))


class SAMCell:
    def __init__(self, store: ParameterStore, config: ModelConfig):
        self.config = config
        d = config.d
        self.controller = QuestionDrivenController(store, d, config.steps)
        self.temporal = TemporalClassifier(store, d)
        self.visual = VisualRetrieval(store, d)
        self.memread = MemoryRetrieval(store, d)
        self.gate_net = GateNetwork(store, config.gate_hidden, config.gate_mode)
        self.summary = SummaryUpdate(store, d)
        self.c0 = store.new("cell.c0", (d,), fan_in=d)
        self.so0 = store.new("cell.so0", (d,), fan_in=d)

    def initial_state(self) -> CellState:
        return CellState(c=self.c0, so=self.so0)

    def step(self, q, cw, keys, values, state: CellState, mem: MemoryState,
             t: int, gate_overrides=None, trace=None):
        """One reasoning step given precomputed frame key/value projections."""
        ov = gate_overrides or {}
        c_t, qa = self.controller.step(q, cw, state.c, t)
        tau = self.temporal.classify(c_t)
        vo, va = self.visual.retrieve(keys, values, c_t)
        mo, rh = self.memread.retrieve(mem.m, c_t)
        vs = T.attention_aggregate(va)
        rs = T.attention_aggregate(rh)
        gates = self.gate_net.gates(vs, rs, tau)
        g_v = _override_gate(gates.g_v, ov.get("g_v"))
        g_m = _override_gate(gates.g_m, ov.get("g_m"))
        h_r = _override_gate(gates.h_r, ov.get("h_r"))
        h_a = _override_gate(gates.h_a, ov.get("h_a"))
        m_t, w = memory_update(mem.m, mem.wh, rh, vo, h_r, h_a)
        wh_t = write_head_update(mem.wh, h_a)
        _check_distribution(wh_t, "write head")
        so_t, _ = self.summary.update(vo, mo, g_v, g_m, state.so)
        if trace is not None:
            trace.append(StepTrace(
                qa=qa.data.copy(), tau=tau.data.copy(), va=va.data.copy(),
                rh=rh.data.copy(),
                gates={
                    "g_v": g_v.item(), "g_m": g_m.item(),
                    "h_r": h_r.item(), "h_a": h_a.item(),
                    "h_none": gates.h_none.item(),
                },
                w=w.data.copy(), wh=wh_t.data.copy(),
            ))
        return CellState(c=c_t, so=so_t), MemoryState(m=m_t, wh=wh_t)

    def step_from_features(self, q, cw, feature_rows, state, mem, t,
                           gate_overrides=None, trace=None):
        """Contract form of step(): takes the raw frame feature map."""
        keys, values = self.visual.project(feature_rows)
        return self.step(q, cw, keys, values, state, mem, t,
                         gate_overrides=gate_overrides, trace=trace)


class SAMNet:
    """Full model: encoders, the recurrent cell, and the per-frame answer head."""

    def __init__(self, config: ModelConfig, init_seed: int = 0):
        self.config = config
        self.store = ParameterStore(np.random.default_rng(init_seed))
        self.question_encoder = QuestionEncoder(self.store, config.vocab_size, config.d)
        self.frame_encoder = FrameEncoder(self.store, config.in_channels, config.d)
        self.cell = SAMCell(self.store, config)
        self.answer_head = AnswerHead(self.store, config.d, config.num_answers)

    def episode_forward(self, token_ids, frames, n_slots: int | None = None,
                        gate_overrides=None, trace=None):
        """Per-frame answer logits for one episode; returns (K, num_answers).

        Memory starts empty with the write head on slot 0 and persists across
        frames; the per-frame reasoning state resets to the learned initial
        vectors. n_slots may differ from the training-time setting: no
        parameter shape depends on it.
        """
        frames = np.asarray(frames, dtype=T.default_dtype())
        if frames.ndim == 3:
            frames = frames[None]
        if frames.shape[0] < 1:
            raise ValueError("episode must contain at least one frame")
        n = n_slots or self.config.mem_slots
        overrides = dict(gate_overrides or {})
        if not self.config.memory_enabled:
            overrides.setdefault("g_m", 0.0)
            overrides.setdefault("h_r", 0.0)
            overrides.setdefault("h_a", 0.0)
        enc = self.question_encoder.encode(token_ids)
        features = self.frame_encoder.encode(frames)  # (K, H*W, d)
        mem = MemoryState.initial(n, self.config.d)
        frame_logits = []
        for k in range(frames.shape[0]):
            rows = features[k]
            keys, values = self.visual_projections(rows)
            state = self.cell.initial_state()
            step_trace = [] if trace is not None else None
            for t in range(1, self.config.steps + 1):
                state, mem = self.cell.step(
                    enc.q, enc.cw, keys, values, state, mem, t,
                    gate_overrides=overrides, trace=step_trace,
                )
            if trace is not None:
                trace.append(step_trace)
            frame_logits.append(self.answer_head.logits(state.so, enc.q))
        return T.stack(frame_logits)

    def visual_projections(self, feature_rows):
        return self.cell.visual.project(feature_rows)

    def episode_loss(self, token_ids, frames, answer_ids, **kw) -> Tensor:
        """Mean softmax cross-entropy over the per-frame answers."""
        logits = self.episode_forward(token_ids, frames, **kw)
        answer_ids = np.asarray(answer_ids, dtype=np.int64)
        if answer_ids.size != logits.shape[0]:
            raise ValueError(
                f"{answer_ids.size} answers for {logits.shape[0]} frames"
            )
        terms = [
            T.cross_entropy_logits(logits[k], int(answer_ids[k]))
            for k in range(answer_ids.size)
        ]
        total = terms[0]
        for term in terms[1:]:
            total = T.add(total, term)
        return T.div(total, float(len(terms)))

    def predict(self, token_ids, frames, n_slots=None, gate_overrides=None):
        with T.no_grad():
            logits = self.episode_forward(
                token_ids, frames, n_slots=n_slots, gate_overrides=gate_overrides
            )
        return logits.data.argmax(axis=1)

    def hyper_manifest(self) -> dict[str, str]:
        c = self.config
        return {
            "d": str(c.d),
            "steps": str(c.steps),
            "mem_slots": str(c.mem_slots),
            "vocab_size": str(c.vocab_size),
            "num_answers": str(c.num_answers),
            "in_channels": str(c.in_channels),
            "gate_mode": c.gate_mode,
            "gate_hidden": str(c.gate_hidden),
            "memory_enabled": str(int(c.memory_enabled)),
        }

    @classmethod
    def config_from_hypers(cls, hypers: dict[str, str]) -> ModelConfig:
        return ModelConfig(
            vocab_size=int(hypers["vocab_size"]),
            num_answers=int(hypers["num_answers"]),
            in_channels=int(hypers["in_channels"]),
            d=int(hypers["d"]),
            steps=int(hypers["steps"]),
            mem_slots=int(hypers["mem_slots"]),
            gate_mode=hypers["gate_mode"],
            gate_hidden=int(hypers["gate_hidden"]),
            memory_enabled=bool(int(hypers["memory_enabled"])),
        )
