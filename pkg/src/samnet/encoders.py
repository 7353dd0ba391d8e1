"""Input encoders: token sequences and symbolic frame grids to feature tensors.

The question path embeds tokens, runs a bidirectional LSTM (hidden width d/2
per direction), and produces per-token contextual vectors plus a single
question embedding. The visual path runs two 3x3 same-padded ELU convolution
layers over the one-hot attribute grid and flattens the result to one feature
row per grid cell.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .params import ParameterStore
from .tensor import Tensor


class VocabularyError(ValueError):
    pass


def save_vocabulary(tokens: list[str], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for tok in tokens:
            fh.write(tok + "\n")


def load_vocabulary(path) -> list[str]:
    """Read a vocabulary file: one token per line, line number = id."""
    with open(path, encoding="utf-8") as fh:
        return [line.rstrip("\n") for line in fh if line.rstrip("\n")]


@dataclass
class QuestionEncoding:
    cw: Tensor  # (L, d) contextual words
    q: Tensor  # (d,) question embedding


class FrameGrid:
    """One-hot attribute grid: occupancy + color channels + shape channels.

    Validated on construction so malformed grids cannot reach the encoders:
    an empty cell has all attribute channels zero, an occupied cell has
    exactly one color and one shape set.
    """

    def __init__(self, data: np.ndarray, n_colors: int, n_shapes: int):
        data = np.asarray(data)
        if data.ndim != 3 or data.shape[2] != 1 + n_colors + n_shapes:
            raise ValueError(
                f"expected (H, W, {1 + n_colors + n_shapes}) grid, got {data.shape}"
            )
        if not np.isin(data, (0, 1)).all():
            raise ValueError("grid entries must be 0 or 1")
        occ = data[:, :, 0]
        colors = data[:, :, 1:1 + n_colors]
        shapes = data[:, :, 1 + n_colors:]
        attr_any = colors.sum(axis=2) + shapes.sum(axis=2)
        if np.any((occ == 0) & (attr_any != 0)):
            raise ValueError("empty cell has attribute channels set")
        if np.any((occ == 1) & ((colors.sum(axis=2) != 1) | (shapes.sum(axis=2) != 1))):
            raise ValueError("occupied cell must have exactly one color and one shape")
        self.data = data.astype(np.float64)
        self.n_colors = n_colors
        self.n_shapes = n_shapes

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


class QuestionEncoder:
    def __init__(self, store: ParameterStore, vocab_size: int, d: int, prefix="question"):
        if d % 2 != 0:
            raise ValueError(f"question encoder width must be even, got {d}")
        self.vocab_size = vocab_size
        self.d = d
        hh = d // 2
        self.hh = hh
        self.embed = store.new(f"{prefix}.embed", (vocab_size, d), fan_in=d)
        self.dir_params = {}
        for direction in ("fwd", "bwd"):
            self.dir_params[direction] = (
                store.new(f"{prefix}.{direction}.wx", (d, 4 * hh), fan_in=d),
                store.new(f"{prefix}.{direction}.wh", (hh, 4 * hh), fan_in=hh),
                store.new(f"{prefix}.{direction}.b", (4 * hh,), fan_in=0),
            )
        self.cw_w = store.new(f"{prefix}.cw.w", (d, d), fan_in=d)
        self.cw_b = store.new(f"{prefix}.cw.b", (d,), fan_in=0)
        self.q_w = store.new(f"{prefix}.q.w", (d, d), fan_in=d)
        self.q_b = store.new(f"{prefix}.q.b", (d,), fan_in=0)

    def _run_direction(self, xproj: Tensor, length: int, direction: str):
        wx, wh, b = self.dir_params[direction]
        hh = self.hh
        h = T.zeros(hh)
        c = T.zeros(hh)
        states = [None] * length
        order = range(length) if direction == "fwd" else range(length - 1, -1, -1)
        for i in order:
            z = T.add(T.add(xproj[i], T.matmul(h, wh)), b)
            i_g = T.sigmoid(z[0:hh])
            f_g = T.sigmoid(z[hh:2 * hh])
            g = T.tanh(z[2 * hh:3 * hh])
            o_g = T.sigmoid(z[3 * hh:4 * hh])
            c = T.add(T.mul(f_g, c), T.mul(i_g, g))
            h = T.mul(o_g, T.tanh(c))
            states[i] = h
        return states, h

    def encode(self, token_ids) -> QuestionEncoding:
        ids = np.asarray(token_ids, dtype=np.int64)
        if ids.ndim != 1 or ids.size < 1:
            raise VocabularyError("expected a non-empty token id sequence")
        if ids.min() < 0 or ids.max() >= self.vocab_size:
            bad = ids[(ids < 0) | (ids >= self.vocab_size)][0]
            raise VocabularyError(
                f"token id {int(bad)} outside vocabulary of size {self.vocab_size}"
            )
        length = ids.size
        embeds = T.take_rows(self.embed, ids)
        states = {}
        finals = {}
        for direction in ("fwd", "bwd"):
            wx = self.dir_params[direction][0]
            xproj = T.matmul(embeds, wx)
            states[direction], finals[direction] = self._run_direction(
                xproj, length, direction
            )
        both = [
            T.concat([states["fwd"][i], states["bwd"][i]]) for i in range(length)
        ]
        cw = T.add(T.matmul(T.stack(both), self.cw_w), self.cw_b)
        q = T.add(
            T.matmul(T.concat([finals["fwd"], finals["bwd"]]), self.q_w), self.q_b
        )
        return QuestionEncoding(cw=cw, q=q)


class FrameEncoder:
    def __init__(self, store: ParameterStore, in_channels: int, d: int, prefix="frame"):
        self.in_channels = in_channels
        self.d = d
        self.conv1_w = store.new(
            f"{prefix}.conv1.w", (3, 3, in_channels, d), fan_in=9 * in_channels
        )
        self.conv1_b = store.new(f"{prefix}.conv1.b", (d,), fan_in=0)
        self.conv2_w = store.new(f"{prefix}.conv2.w", (3, 3, d, d), fan_in=9 * d)
        self.conv2_b = store.new(f"{prefix}.conv2.b", (d,), fan_in=0)

    def encode(self, frames: np.ndarray) -> Tensor:
        """Map (K, H, W, C) grids to a (K, H*W, d) feature map batch."""
        frames = np.asarray(frames, dtype=T.default_dtype())
        if frames.ndim == 3:
            frames = frames[None]
        k, h, w, c = frames.shape
        if h * w == 0:
            raise T.ShapeError("frame grid has no cells")
        if c != self.in_channels:
            raise T.ShapeError(
                f"frame has {c} channels, encoder expects {self.in_channels}"
            )
        x = T.elu(T.conv2d_same3(Tensor(frames), self.conv1_w, self.conv1_b))
        x = T.elu(T.conv2d_same3(x, self.conv2_w, self.conv2_b))
        return T.reshape(x, (k, h * w, self.d))
