"""The full gradient-verification suite: every sub-unit plus a whole episode.

Each check builds a small seeded instance of one component, reduces its
output to a scalar through a fixed random readout, and compares tape
gradients against central differences. Thresholds depend on scalar
precision: float64 runs must stay below 1e-5, float32 runs below 1e-3
(finite differences themselves carry ~1e-4 noise at that precision).
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .cell import (
    GateNetwork,
    MemoryRetrieval,
    MemoryState,
    ModelConfig,
    QuestionDrivenController,
    SAMNet,
    SummaryUpdate,
    TemporalClassifier,
    VisualRetrieval,
    memory_update,
    write_head_update,
)
from .encoders import FrameEncoder, QuestionEncoder
from .gradcheck import grad_check
from .params import ParameterStore


@dataclass
class CheckResult:
    name: str
    max_rel_err: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.max_rel_err < self.threshold


def _store(seed):
    return ParameterStore(np.random.default_rng(seed))


def _readout(rng, vec):
    return T.matmul(T.Tensor(rng.normal(size=vec.shape[0])), vec)


def _check_softmax_and_ce(rng, eps):
    store = _store(1)
    logits = store.new("logits", (6,))
    logits.data = rng.normal(size=6)

    def f():
        probs = T.softmax(logits)
        return T.add(T.cross_entropy_logits(logits, 2),
                     T.attention_aggregate(probs))

    return grad_check(f, store.parameters(), eps=eps)


def _check_dot_attention(rng, eps):
    store = _store(2)
    keys = store.new("keys", (3, 4))
    values = store.new("values", (3, 4))
    query = store.new("query", (4,))
    for p in store.parameters():
        p.value.data = rng.normal(size=p.data.shape)
    readout = rng.normal(size=4)

    def f():
        weights, summary = T.dot_attention(query, keys, values)
        return T.add(T.matmul(T.Tensor(readout), summary),
                     T.attention_aggregate(weights))

    return grad_check(f, store.parameters(), eps=eps)


def _check_activations(rng, eps):
    store = _store(3)
    x = store.new("x", (5,))
    x.data = rng.normal(size=5)

    def f():
        return T.tsum(T.mul(T.elu(x), T.mul(T.sigmoid(x), T.tanh(x))))

    return grad_check(f, store.parameters(), eps=eps)


def _check_conv(rng, eps):
    store = _store(4)
    img = store.new("img", (1, 3, 3, 2))
    img.data = rng.normal(size=(1, 3, 3, 2))
    kern = store.new("kern", (3, 3, 2, 3))
    kern.data = rng.normal(size=(3, 3, 2, 3)) * 0.5
    bias = store.new("bias", (3,))

    def f():
        return T.mean(T.square(T.conv2d_same3(img, kern, bias)))

    return grad_check(f, store.parameters(), eps=eps)


def _check_question_encoder(rng, eps):
    store = _store(5)
    enc = QuestionEncoder(store, vocab_size=5, d=8)
    readout = rng.normal(size=8)

    def f():
        out = enc.encode([0, 3, 1, 4])
        return T.add(T.matmul(T.Tensor(readout), out.q),
                     T.mean(T.square(out.cw)))

    return grad_check(f, store.parameters(), eps=eps)


def _check_frame_encoder(rng, eps):
    store = _store(6)
    enc = FrameEncoder(store, in_channels=3, d=8)
    frame = rng.normal(size=(2, 3, 3, 3))

    def f():
        return T.mean(T.square(enc.encode(frame)))

    return grad_check(f, store.parameters(), eps=eps)


def _check_controller(rng, eps):
    store = _store(7)
    ctrl = QuestionDrivenController(store, d=8, steps=2)
    q = T.Tensor(rng.normal(size=8))
    cw = T.Tensor(rng.normal(size=(4, 8)))
    c_prev = T.Tensor(rng.normal(size=8))
    readout = rng.normal(size=8)

    def f():
        c_t, qa = ctrl.step(q, cw, c_prev, 2)
        return T.add(_readout_from(readout, c_t), T.attention_aggregate(qa))

    return grad_check(f, store.parameters(), eps=eps)


def _readout_from(weights, vec):
    return T.matmul(T.Tensor(weights), vec)


def _check_temporal(rng, eps):
    store = _store(8)
    clf = TemporalClassifier(store, d=8)
    c_t = T.Tensor(rng.normal(size=8))
    readout = rng.normal(size=4)

    def f():
        return _readout_from(readout, clf.classify(c_t))

    return grad_check(f, store.parameters(), eps=eps)


def _check_visual(rng, eps):
    store = _store(9)
    vis = VisualRetrieval(store, d=8)
    rows = T.Tensor(rng.normal(size=(9, 8)))
    c_t = T.Tensor(rng.normal(size=8))
    readout = rng.normal(size=8)

    def f():
        vo, va = vis.retrieve_from_features(rows, c_t)
        return T.add(_readout_from(readout, vo), T.attention_aggregate(va))

    return grad_check(f, store.parameters(), eps=eps)


def _check_memory_read(rng, eps):
    store = _store(10)
    mem = MemoryRetrieval(store, d=8)
    m = store.new("m", (3, 8))
    m.data = rng.normal(size=(3, 8))
    c_t = T.Tensor(rng.normal(size=8))
    readout = rng.normal(size=8)

    def f():
        mo, rh = mem.retrieve(m, c_t)
        return T.add(_readout_from(readout, mo), T.attention_aggregate(rh))

    return grad_check(f, store.parameters(), eps=eps)


def _check_gates(rng, eps):
    store = _store(11)
    net = GateNetwork(store, hidden=16)
    tau = T.Tensor(np.random.default_rng(0).dirichlet(np.ones(4)))
    readout = rng.normal(size=5)

    def f():
        g = net.gates(T.Tensor(0.4), T.Tensor(0.6), tau)
        stackd = T.concat([
            T.reshape(g.g_v, (1,)), T.reshape(g.g_m, (1,)),
            T.reshape(g.h_r, (1,)), T.reshape(g.h_a, (1,)),
            T.reshape(g.h_none, (1,)),
        ])
        return _readout_from(readout, stackd)

    return grad_check(f, store.parameters(), eps=eps)


def _check_memory_write(rng, eps):
    store = _store(12)
    m = store.new("m", (3, 4))
    m.data = rng.normal(size=(3, 4))
    vo = store.new("vo", (4,))
    vo.data = rng.normal(size=4)
    raw = store.new("raw", (2,))
    raw.data = rng.normal(size=2)
    wh_prev = T.Tensor(np.random.default_rng(1).dirichlet(np.ones(3)))
    rh = T.Tensor(np.random.default_rng(2).dirichlet(np.ones(3)))
    readout = rng.normal(size=(3, 4))

    def f():
        h_r = T.sigmoid(raw[0])
        h_a = T.mul(T.sigmoid(raw[1]), T.sub(1.0, h_r))
        m_t, w = memory_update(m, wh_prev, rh, vo, h_r, h_a)
        wh_t = write_head_update(wh_prev, h_a)
        flat = T.reshape(m_t, (12,))
        return T.add(
            T.matmul(T.Tensor(readout.reshape(-1)), flat),
            T.add(T.tsum(T.square(w)), T.tsum(T.square(wh_t))),
        )

    return grad_check(f, store.parameters(), eps=eps)


def _check_summary(rng, eps):
    store = _store(13)
    su = SummaryUpdate(store, d=8)
    vo = T.Tensor(rng.normal(size=8))
    mo = T.Tensor(rng.normal(size=8))
    so_prev = T.Tensor(rng.normal(size=8))
    readout = rng.normal(size=8)

    def f():
        so, _ = su.update(vo, mo, T.Tensor(0.7), T.Tensor(0.3), so_prev)
        return _readout_from(readout, so)

    return grad_check(f, store.parameters(), eps=eps)


def _check_cell_step(rng, eps):
    cfg = ModelConfig(vocab_size=8, num_answers=5, in_channels=6, d=8,
                      steps=2, mem_slots=3)
    net = SAMNet(cfg, init_seed=14)
    rows = rng.normal(size=(9, 8))
    tokens = [0, 3, 5, 1]
    readout = rng.normal(size=8)

    def f():
        enc = net.question_encoder.encode(tokens)
        state = net.cell.initial_state()
        mem = MemoryState.initial(3, 8)
        for t in (1, 2):
            state, mem = net.cell.step_from_features(
                enc.q, enc.cw, T.Tensor(rows), state, mem, t
            )
        return _readout_from(readout, state.so)

    return grad_check(f, net.store.subset("question.", "cell."), eps=eps)


def _check_full_episode(rng, eps):
    # 2 frames, 2 reasoning steps, d=8, N=3, L=4 tokens, 3x3 grid (9 cells)
    cfg = ModelConfig(vocab_size=8, num_answers=5, in_channels=6, d=8,
                      steps=2, mem_slots=3)
    net = SAMNet(cfg, init_seed=15)
    frames = (rng.random((2, 3, 3, 6)) < 0.25).astype(np.float64)
    tokens = [1, 4, 2, 7]
    answers = [0, 3]

    def f():
        return net.episode_loss(tokens, frames, answers)

    return grad_check(f, net.store.parameters(), eps=eps)


_CHECKS = [
    ("softmax_cross_entropy", _check_softmax_and_ce),
    ("dot_attention", _check_dot_attention),
    ("activations", _check_activations),
    ("conv2d_same3", _check_conv),
    ("question_encoder", _check_question_encoder),
    ("frame_encoder", _check_frame_encoder),
    ("controller_step", _check_controller),
    ("temporal_classifier", _check_temporal),
    ("visual_retrieval", _check_visual),
    ("memory_retrieval", _check_memory_read),
    ("gate_network", _check_gates),
    ("memory_update", _check_memory_write),
    ("summary_update", _check_summary),
    ("cell_two_steps", _check_cell_step),
    ("full_episode_2frames", _check_full_episode),
]

def run_gradient_suite(use_float64: bool = True, log=None) -> list[CheckResult]:
    """Run every check; returns per-check results with mode thresholds."""
    threshold = 1e-5 if use_float64 else 1e-3
    eps = 1e-6 if use_float64 else 5e-3
    results = []
    with T.precision("float64" if use_float64 else "float32"):
        for name, fn in _CHECKS:
            rng = np.random.default_rng(zlib.crc32(name.encode()))
            err = fn(rng, eps)
            result = CheckResult(name, err, threshold)
            results.append(result)
            if log:
                status = "PASS" if result.passed else "FAIL"
                log(f"{status} {name}: max rel err {err:.3e} "
                    f"(threshold {threshold:.0e})")
    return results
